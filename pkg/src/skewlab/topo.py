"""Sequential topological engine: bounded continuous cocycles over a
transitive shift action, built as guarded sums of bump coboundaries.

The shift space carries the ultrametric d(x, y) = theta^t(x, y), where t is
the smallest L1 norm of a disagreement site.  On shift cylinders a continuous
bump degenerates to the indicator of an agreement ball, so every transfer
function here is a finite weighted sum of cylinder indicators and all orbit
evaluations reduce to locating pattern occurrences inside one explicit
transitive point.  Witnesses are pinned at the *first* recurrence of a
central pattern: with no earlier occurrence to carry weight, each term's
value at its own witness is the prescribed vector exactly, and terms added
later (whose patterns first recur even further out) contribute exactly zero
at all earlier witnesses.
"""
from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np


class SearchBudgetExceeded(Exception):
    """No suitable witness found within the configured orbit budget."""


def word_metric(k, ell) -> int:
    """L1 word metric on the lattice (left invariant by translation)."""
    if isinstance(k, int):
        return abs(k - ell)
    return sum(abs(a - b) for a, b in zip(k, ell))


def word_norm_l1(n) -> int:
    if isinstance(n, int):
        return abs(n)
    return sum(abs(a) for a in n)


@dataclass(frozen=True)
class ShiftSpace:
    """Full shift over a finite alphabet with the theta-ultrametric."""

    alphabet: Tuple[int, ...] = (0, 1)
    dim: int = 1
    theta: float = 0.5

    def __post_init__(self):
        if not 0 < self.theta < 1:
            raise ValueError("theta must lie in (0, 1)")
        if len(self.alphabet) < 2:
            raise ValueError("alphabet needs at least two symbols")

    def distance_from_windows(self, wx: Dict, wy: Dict) -> float:
        """Upper bound theta^t from two finite windows (site -> symbol);
        exact when the first disagreement lies inside both windows."""
        common = sorted(set(wx) & set(wy), key=word_norm_l1)
        for site in common:
            if wx[site] != wy[site]:
                return self.theta ** word_norm_l1(site)
        horizon = 1 + max((word_norm_l1(s) for s in common), default=-1)
        return self.theta ** horizon


class TransitivePoint:
    """The canonical transitive point: all finite centered patterns written
    one after another along the axis, smaller patterns first, filler symbol
    elsewhere.  Every pattern of every radius occurs, and the symbol at any
    site is computable; for dim 1 the point materializes lazily into a byte
    buffer so occurrence searches run at C speed.
    """

    def __init__(self, space: ShiftSpace, max_sites: int = 64_000_000):
        if space.dim != 1:
            raise NotImplementedError("materialized search is one-dimensional")
        self.space = space
        self.max_sites = max_sites
        self._buf = bytearray()
        self._group = 0        # next pattern-size group to write
        self._next_index = 0   # next pattern index within the group
        self._replanted = True  # group 0 needs no replant

    # -- layout -----------------------------------------------------------

    def _extend_once(self, chunk_patterns: int = 1 << 14):
        s = len(self.space.alphabet)
        m = self._group
        width = 2 * m + 1
        if not self._replanted:
            # replant the current central window at the head of each group;
            # keeps first recurrences of central patterns on a geometric
            # ladder instead of arbitrarily long gaps (sites [0, m] are
            # already materialized, so this is causal)
            self._buf.extend(self.window(0, m))
            self._replanted = True
        total = s ** width
        count = min(chunk_patterns, total - self._next_index)
        qs = np.arange(self._next_index, self._next_index + count,
                       dtype=np.int64)
        shifts = np.arange(width - 1, -1, -1, dtype=np.int64)
        if s == 2:
            block = ((qs[:, None] >> shifts[None, :]) & 1).astype(np.uint8)
        else:
            block = (qs[:, None] // (s ** shifts[None, :]) % s).astype(np.uint8)
        self._buf.extend(block.ravel().tobytes())
        self._next_index += count
        if self._next_index == total:
            self._group += 1
            self._next_index = 0
            self._replanted = False

    def ensure(self, hi: int):
        """Materialize sites [0, hi)."""
        if hi > self.max_sites:
            raise SearchBudgetExceeded(
                f"orbit materialization beyond {self.max_sites} sites")
        while len(self._buf) < hi:
            self._extend_once()

    def symbol(self, i: int) -> int:
        if i < 0:
            return self.space.alphabet[0]
        self.ensure(i + 1)
        return self.space.alphabet[self._buf[i]]

    def window(self, center: int, radius: int) -> bytes:
        """Alphabet-index symbols on [center-radius, center+radius]."""
        lo, hi = center - radius, center + radius
        if hi < 0:
            return bytes(2 * radius + 1)  # entirely in the filler zone
        self.ensure(hi + 1)
        left = max(0, -lo)
        body = bytes(self._buf[max(lo, 0):hi + 1])
        return bytes(left) + body  # filler is alphabet index 0

    def central_pattern(self, radius: int) -> bytes:
        return self.window(0, radius)

    # -- occurrence search --------------------------------------------------

    def occurrences(self, pattern: bytes, center_lo: int, center_hi: int) -> List[int]:
        """Centers q in [center_lo, center_hi) where the pattern occurs."""
        radius = (len(pattern) - 1) // 2
        out = []
        # centers whose window sticks into the filler zone, checked directly
        neg_hi = min(center_hi, radius)
        for q in range(max(center_lo, -radius), neg_hi):
            if self.window(q, radius) == pattern:
                out.append(q)
        start = max(center_lo, radius)
        if start >= center_hi:
            return out
        self.ensure(center_hi + radius)
        end = center_hi + radius
        pos = self._buf.find(pattern, start - radius, end)
        while pos != -1:
            out.append(pos + radius)
            pos = self._buf.find(pattern, pos + 1, end)
        return out

    def first_recurrence(self, pattern: bytes, limit: int) -> Optional[int]:
        """Smallest center q >= 1 with an occurrence, searching up to limit."""
        radius = (len(pattern) - 1) // 2
        for q in range(1, radius):
            if self.window(q, radius) == pattern:
                return q
        hi = min(4096, limit)
        lo = 1
        while True:
            occ = [q for q in self.occurrences(pattern, max(lo, 1), hi) if q >= 1]
            if occ:
                return occ[0]
            if hi >= limit:
                return None
            lo, hi = hi, min(hi * 4, limit)

    def occurrences_from(self, pattern: bytes, center_lo: int, limit: int):
        """Yield occurrence centers >= center_lo in increasing order."""
        radius = (len(pattern) - 1) // 2
        lo = max(center_lo, -radius)
        hi = min(max(4 * (abs(lo) + 4096), 8192), limit)
        while True:
            for q in self.occurrences(pattern, lo, hi):
                yield q
            if hi >= limit:
                return
            lo, hi = hi, min(hi * 4, limit)


@dataclass
class BumpCoboundary:
    """One term: g(x) = sum_k a(k) * s * [T_{-k} x in B(x0, theta^radius)],
    with tent weights a(k) = (1 - |k - N| / W)_+ of half-width W <= N.

    The tent peaks at the witness N with a(N) = 1 and slope 1 / W, so the
    recorded cocycle norm is ||s|| / W.  On the materialized orbit,
    membership of T_r x0 in the ball is an occurrence of the defining
    central pattern at r, so g(T_r x0) sums tent weights over occurrences
    in (r - N - W, r - N + W).
    """

    s: Tuple[float, ...]
    N: int
    W: int
    radius: int
    pattern: bytes
    delta: float            # guard bound this term was built under
    point: TransitivePoint = field(repr=False)
    _occ: List[int] = field(default_factory=list, repr=False)
    _occ_hi: int = field(default=0, repr=False)

    @property
    def valdim(self) -> int:
        return len(self.s)

    @property
    def cocycle_norm(self) -> float:
        return max(abs(c) for c in self.s) / self.W

    def weight(self, k: int) -> float:
        return max(0.0, 1.0 - abs(k - self.N) / self.W)

    def _ensure_occ(self, hi: int):
        if hi > self._occ_hi:
            hi = max(hi, 2 * self._occ_hi, 4096)
            self._occ = self.point.occurrences(self.pattern, -self.radius, hi)
            self._occ_hi = hi

    def g_at(self, r: int) -> np.ndarray:
        """Transfer value g(T_r x0)."""
        window_hi = r - self.N + self.W
        if window_hi <= -self.radius:
            return np.zeros(len(self.s))
        self._ensure_occ(window_hi + 1)
        lo = bisect.bisect_right(self._occ, r - self.N - self.W)
        hi = bisect.bisect_left(self._occ, window_hi)
        total = 0.0
        for p in self._occ[lo:hi]:
            total += self.weight(r - p)
        return total * np.asarray(self.s, dtype=float)

    def h(self, n: int, r0: int = 0) -> np.ndarray:
        """Term value h(n, T_{r0} x0) = g(T_{n+r0} x0) - g(T_{r0} x0)."""
        return self.g_at(r0 + n) - self.g_at(r0)


class SequentialCocycle:
    """Guarded sum of bump coboundaries along one transitive point."""

    def __init__(self, point: TransitivePoint, valdim: int):
        self.point = point
        self.valdim = valdim
        self.terms: List[BumpCoboundary] = []
        self.records: List[dict] = []

    def evaluate(self, n: int, r0: int = 0) -> np.ndarray:
        out = np.zeros(self.valdim)
        for t in self.terms:
            out += t.h(n, r0)
        return out

    def prefix_evaluate(self, k: int, n: int, r0: int = 0) -> np.ndarray:
        out = np.zeros(self.valdim)
        for t in self.terms[:k]:
            out += t.h(n, r0)
        return out


def lemma2_extend(F: SequentialCocycle, V_radius: int, s: Sequence[float],
                  Delta: float, budget: int,
                  after: int = 0) -> Tuple[BumpCoboundary, int]:
    """Extend F by one bump term with value s and guard Delta.

    Chooses the tent half-width W just above 3||s|| / Delta (so the recorded
    cocycle norm ||s|| / W is below Delta / 3), then the smallest pattern
    radius whose central pattern first recurs beyond W (origin isolation:
    the only occurrence carrying tent weight at the witness is the center,
    hence h(N, x0) = s exactly), and finally the first witness N past
    ``after`` + W where the accumulated transfer of F falls below Delta / 3
    -- the point-level form of picking a sub-ball on which the accumulated
    transfer barely oscillates.  Witnesses beyond ``after`` + W also make
    the new term vanish identically at all earlier witnesses.

    Raises SearchBudgetExceeded when the orbit budget runs out."""
    point = F.point
    s = tuple(float(c) for c in s)
    snorm = max(abs(c) for c in s) if any(c for c in s) else 0.0
    W = int(3 * snorm / Delta) + 1 if snorm else 1
    tried = []
    m = max(V_radius, 1)
    while 2 * m + 1 <= budget:
        pattern = point.central_pattern(m)
        first = point.first_recurrence(pattern, budget)
        if first is None:
            raise SearchBudgetExceeded(
                f"no recurrence of the radius-{m} central pattern within "
                f"{budget} sites; tried {tried}")
        if first <= W or any(
                q != 0 for q in point.occurrences(pattern, -m, 0)):
            tried.append((m, first, "origin_isolation"))
            m += 1
            continue
        q_min = max(W + m + 1, after + W + m + 1)
        for N in point.occurrences_from(pattern, max(q_min, first), budget):
            accumulated = float(np.max(np.abs(F.evaluate(N))))
            if accumulated < Delta / 3:
                return BumpCoboundary(s=s, N=N, W=W, radius=m,
                                      pattern=pattern, delta=Delta,
                                      point=point), N
            tried.append((m, N, f"accumulated={accumulated:.3g}"))
            if len(tried) > 64 + 8 * len(F.terms):
                break  # try a rarer pattern instead of scanning forever
        m += 1
    raise SearchBudgetExceeded(
        f"pattern radius exhausted the budget; tried {tried}")


def guard_bound(etas: Sequence[float], norms: Sequence[int], k: int) -> float:
    """Guard for term k (0-based): min(eta_k / 3,
    min_{j<k} eta_j / (2^(k+2) * (||n_j|| + 1)))."""
    out = etas[k] / 3
    for j in range(k):
        out = min(out, etas[j] / (2 ** (k + 2) * (norms[j] + 1)))
    return out


def build_sequential(point: TransitivePoint, targets: Sequence[dict],
                     budget: int) -> SequentialCocycle:
    """Targets: dicts with keys V_radius (int), t (value tuple), eta (float);
    radii nondecreasing (shrinking neighborhoods), etas strictly decreasing.

    Each prefix satisfies its essential value condition at the recorded
    witness: the residual at issue time is the accumulated transfer there
    (below Delta_k / 3), and terms added later vanish exactly at all earlier
    witnesses because their patterns first recur beyond them."""
    if not targets:
        raise ValueError("need at least one target")
    etas = [t["eta"] for t in targets]
    if any(b >= a for a, b in zip(etas, etas[1:])):
        raise ValueError("etas must be strictly decreasing")
    radii = [t["V_radius"] for t in targets]
    if any(b < a for a, b in zip(radii, radii[1:])):
        raise ValueError("neighborhood radii must be nondecreasing")
    valdim = len(targets[0]["t"])
    F = SequentialCocycle(point, valdim)
    norms: List[int] = []
    for k, tgt in enumerate(targets):
        Delta = guard_bound(etas, norms, k)
        term, N = lemma2_extend(F, tgt["V_radius"], tgt["t"], Delta, budget,
                                after=max(norms, default=0))
        residual_before = float(np.max(np.abs(F.evaluate(N))))
        F.terms.append(term)
        norms.append(word_norm_l1(N))
        achieved = F.evaluate(N)
        F.records.append({
            "k": k + 1,
            "target": tuple(float(c) for c in tgt["t"]),
            "eta": etas[k],
            "V_radius": tgt["V_radius"],
            "n": N,
            "delta": Delta,
            "term_norm": term.cocycle_norm,
            "tent_width": term.W,
            "pattern_radius": term.radius,
            "residual_at_issue": float(np.max(np.abs(achieved - np.asarray(tgt["t"])))),
            "accumulated_before": residual_before,
        })
    # enforced guard arithmetic: later terms cannot spend more than half of
    # any earlier tolerance along the recorded witnesses
    for k in range(len(F.terms)):
        spend = sum(F.terms[j].delta * (norms[k] + 1)
                    for j in range(k + 1, len(F.terms)))
        if not spend < etas[k] / 2:
            raise AssertionError("guard arithmetic violated")
    return F


def evc_residuals(F: SequentialCocycle) -> List[dict]:
    """Final residuals of every recorded essential value condition under the
    full sum (later terms included)."""
    out = []
    for rec in F.records:
        val = F.evaluate(rec["n"])
        out.append({
            "k": rec["k"],
            "n": rec["n"],
            "residual": float(np.max(np.abs(val - np.asarray(rec["target"])))),
            "eta": rec["eta"],
            "in_neighborhood": F.point.window(rec["n"], rec["V_radius"])
            == F.point.central_pattern(rec["V_radius"]),
        })
    return out


def compose_witnesses(F: SequentialCocycle, j: int, k: int) -> dict:
    """Semigroup composition report: F(n_j + n_k, x0) against t_j + t_k,
    decomposed through the cocycle identity
    F(n_j + n_k, x0) = F(n_k, x0) + F(n_j, T_{n_k} x0)."""
    rj, rk = F.records[j], F.records[k]
    nj, nk = rj["n"], rk["n"]
    total = F.evaluate(nj + nk)
    left = F.evaluate(nk)
    transported = F.evaluate(nj, r0=nk)
    return {
        "n": nj + nk,
        "value": total,
        "identity_gap": float(np.max(np.abs(total - (left + transported)))),
        "target_sum": np.asarray(rj["target"]) + np.asarray(rk["target"]),
        "deviation": float(np.max(np.abs(
            total - np.asarray(rj["target"]) - np.asarray(rk["target"])))),
        "transport_error": float(np.max(np.abs(
            transported - np.asarray(rj["target"])))),
    }


def verify_transitive_orbit(F: SequentialCocycle, window_pattern: bytes,
                            R: float, delta: float, budget: int,
                            grid_radius: int = 4) -> dict:
    """Coverage of a grid over W x [-R, R]^D by the skew orbit of (x0, 0).

    W is the cylinder of ``window_pattern`` (centered, odd length); the grid
    refines it to all centered patterns of the given radius extending it,
    crossed with a delta-grid of the value cube.  A grid point is covered
    when some orbit point (T_n x0, h(n, x0)), ||n|| <= budget, lies within
    delta in the product metric max(shift distance, value sup distance).
    """
    theta = F.point.space.theta
    wrad = (len(window_pattern) - 1) // 2
    if grid_radius < wrad:
        raise ValueError("grid radius must refine the window pattern")
    # orbit sweep: bucket value vectors by the orbit point's centered pattern
    count = 2 * budget + 1
    zvals = np.zeros((count, F.valdim))
    index: Dict[bytes, List[int]] = {}
    for i, n in enumerate(range(-budget, budget + 1)):
        pat = F.point.window(n, grid_radius)
        if pat[grid_radius - wrad:grid_radius + wrad + 1] != window_pattern:
            continue
        zvals[i] = F.evaluate(n)
        index.setdefault(pat, []).append(i)
    buckets = {key: zvals[rows] for key, rows in index.items()}

    s = len(F.point.space.alphabet)
    free = 2 * (grid_radius - wrad)
    z_axis = np.arange(-R, R + delta / 2, delta)
    rows = []
    hit = 0
    total = 0
    import itertools
    for ext in itertools.product(range(s), repeat=free):
        pat = (bytes(ext[:grid_radius - wrad]) + window_pattern
               + bytes(ext[grid_radius - wrad:]))
        zs = buckets.get(pat)
        for zpt in itertools.product(z_axis, repeat=F.valdim):
            total += 1
            z = np.asarray(zpt)
            if zs is None:
                # best shift distance to any orbit point in the window:
                # patterns differ somewhere within the grid radius
                dist = 1.0
            else:
                dist = float(np.min(np.max(np.abs(zs - z), axis=1)))
                dist = max(dist, 0.0)  # shift coordinate matches exactly
            covered = dist <= delta and zs is not None
            if zs is None and delta >= 1.0:
                covered = True  # delta at least the space diameter
            if covered:
                hit += 1
            rows.append((pat.hex(), tuple(float(c) for c in z),
                         dist if zs is not None else 1.0))
    return {
        "budget": budget,
        "grid_points": total,
        "covered": hit,
        "coverage": hit / total if total else 0.0,
        "rows": rows,
    }
