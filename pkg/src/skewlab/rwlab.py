"""Example laboratory: random-walk skew products over Bernoulli shifts,
block-cocycle decomposition into coboundary plus homomorphism, and the
torus-times-lattice action diagnostics.

Block functions live on box windows [0, k)^d; under the symmetric product
measure their means are exact uniform averages over window patterns, so the
homomorphism part of a decomposition is computed without sampling.  The
coboundary part is solved as a finite least-squares system over cylinder
patterns at increasing depth.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np


def box_sites(dim: int, side: int) -> List[Tuple[int, ...]]:
    """Lattice sites of the box [0, side)^dim in lexicographic order."""
    return list(itertools.product(range(side), repeat=dim))


def _digit_matrix(n_symbols: int, n_sites: int) -> np.ndarray:
    """Row p = base-s digits of p over n_sites positions (lex site order,
    first site most significant)."""
    count = n_symbols ** n_sites
    ps = np.arange(count, dtype=np.int64)
    weights = n_symbols ** np.arange(n_sites - 1, -1, -1, dtype=np.int64)
    return (ps[:, None] // weights[None, :]) % n_symbols


class BlockFunction:
    """Function of finitely many shift coordinates: a table over all symbol
    patterns on the box window [0, depth)^dim."""

    def __init__(self, dim: int, depth: int, valdim: int,
                 table: np.ndarray, n_symbols: int = 2):
        self.dim = dim
        self.depth = depth
        self.valdim = valdim
        self.n_symbols = n_symbols
        expected = n_symbols ** (depth ** dim)
        table = np.asarray(table, dtype=float).reshape(expected, valdim)
        self.table = table

    @classmethod
    def zero(cls, dim: int, depth: int, valdim: int, n_symbols: int = 2):
        size = n_symbols ** (depth ** dim)
        return cls(dim, depth, valdim, np.zeros((size, valdim)), n_symbols)

    @classmethod
    def random(cls, rng: np.random.Generator, dim: int, depth: int,
               valdim: int, n_symbols: int = 2, scale: float = 1.0):
        size = n_symbols ** (depth ** dim)
        return cls(dim, depth, valdim,
                   rng.uniform(-scale, scale, size=(size, valdim)), n_symbols)

    @property
    def sites(self) -> List[Tuple[int, ...]]:
        return box_sites(self.dim, self.depth)

    def pattern_index(self, pattern: Sequence[int]) -> int:
        idx = 0
        for sym in pattern:
            idx = idx * self.n_symbols + int(sym)
        return idx

    def value(self, pattern: Sequence[int]) -> np.ndarray:
        return self.table[self.pattern_index(pattern)]

    def mean(self) -> np.ndarray:
        """Exact mean under the symmetric product measure: every window
        pattern has equal weight."""
        return self.table.mean(axis=0)

    def holder_constant(self, theta: float = 0.5) -> float:
        """M with ||f(x)-f(y)|| <= M theta^t(x,y): block functions are
        Lipschitz in the shift metric with M = osc(f) / theta^diameter."""
        osc = float(np.max(self.table, axis=0).max()
                    - np.min(self.table, axis=0).min()) if len(self.table) else 0.0
        reach = (self.depth - 1) * self.dim  # largest L1 norm in the window
        return osc / theta ** reach if osc else 0.0


@dataclass(frozen=True)
class HomomorphismH:
    """Z-linear map Z^d -> R^D given by generator images."""

    images: Tuple[Tuple[float, ...], ...]  # images[i] = H(e_{i+1})

    @property
    def dim(self) -> int:
        return len(self.images)

    @property
    def valdim(self) -> int:
        return len(self.images[0])

    def matrix(self) -> np.ndarray:
        return np.asarray(self.images, dtype=float)

    def apply(self, n: Sequence[int]) -> np.ndarray:
        return np.asarray(n, dtype=float) @ self.matrix()

    @classmethod
    def section(cls, alpha: Sequence[float]) -> "HomomorphismH":
        """H(n_1,...,n_d) = (n_1,...,n_{d-1}) + n_d * alpha with d-1 = len(alpha):
        the first d-1 generators map to the integer lattice, the last to the
        rotation vector."""
        dprime = len(alpha)
        rows = [tuple(1.0 if j == i else 0.0 for j in range(dprime))
                for i in range(dprime)]
        rows.append(tuple(float(a) for a in alpha))
        return cls(tuple(rows))


# -- random walks ----------------------------------------------------------


class RandomShiftPoint:
    """A sample path of the Bernoulli shift: i.i.d. symbols from a seeded
    stream, materialized on demand."""

    def __init__(self, seed: int, n_symbols: int = 2,
                 mu: Optional[Sequence[float]] = None):
        self.seed = seed
        self.n_symbols = n_symbols
        self.mu = None if mu is None else np.asarray(mu, dtype=float)
        self._rng = np.random.default_rng(seed)
        self._symbols = np.empty(0, dtype=np.int64)

    def prefix(self, n: int) -> np.ndarray:
        while len(self._symbols) < n:
            grow = max(n - len(self._symbols), 4096)
            if self.mu is None:
                chunk = self._rng.integers(0, self.n_symbols, size=grow)
            else:
                chunk = self._rng.choice(self.n_symbols, size=grow, p=self.mu)
            self._symbols = np.concatenate([self._symbols, chunk])
        return self._symbols[:n]


def random_walk_step(phi: Dict[int, Sequence[float]], x: RandomShiftPoint,
                     n: int) -> np.ndarray:
    """Cocycle partial sums F(j, x) = sum_{i<j} phi(x_i) for j = 0..n;
    returns an (n+1, D) array starting at 0."""
    values = np.asarray([phi[s] for s in sorted(phi)], dtype=float)
    symbols = x.prefix(n)
    path = np.zeros((n + 1, values.shape[1]))
    np.cumsum(values[symbols], axis=0, out=path[1:])
    return path


def recurrence_diagnostic(phi: Dict[int, Sequence[float]],
                          mu: Sequence[float], steps: int, trials: int,
                          radius: float, seed: int = 0,
                          horizons: Optional[Sequence[int]] = None) -> dict:
    """Return-time statistics of the walk with increments phi under mu.

    Reports total returns to the sup-ball of the given radius, the return
    frequency, maximum excursion, occupation fractions at nested horizons,
    and a drift warning when the empirical mean exceeds three standard
    errors (the declared mean sum mu(s) phi(s) is checked first)."""
    values = np.asarray([phi[s] for s in sorted(phi)], dtype=float)
    mu = np.asarray(mu, dtype=float)
    if not np.isclose(mu.sum(), 1.0):
        raise ValueError("mu must be a probability vector")
    declared_mean = mu @ values
    horizons = sorted(horizons) if horizons else [steps]
    if horizons[-1] != steps:
        horizons.append(steps)
    total_returns = 0
    max_excursion = 0.0
    occupation = np.zeros(len(horizons))
    inc_sum = np.zeros(values.shape[1])
    inc_count = 0
    for t in range(trials):
        x = RandomShiftPoint(seed + t, len(values), mu)
        path = random_walk_step(phi, x, steps)
        dist = np.max(np.abs(path[1:]), axis=1)
        total_returns += int(np.count_nonzero(dist <= radius))
        max_excursion = max(max_excursion, float(dist.max()))
        for hi, horizon in enumerate(horizons):
            occupation[hi] += np.count_nonzero(dist[:horizon] <= radius) / horizon
        inc_sum += path[-1]
        inc_count += steps
    occupation /= trials
    empirical_mean = inc_sum / inc_count
    sigma = np.sqrt(np.max(mu @ (values ** 2)) / inc_count)
    drift = bool(np.max(np.abs(empirical_mean)) > 3 * sigma)
    return {
        "steps": steps,
        "trials": trials,
        "radius": radius,
        "returns": total_returns,
        "return_frequency": total_returns / (steps * trials),
        "max_excursion": max_excursion,
        "horizons": list(horizons),
        "occupation": occupation.tolist(),
        "declared_mean": declared_mean.tolist(),
        "empirical_mean": empirical_mean.tolist(),
        "drift_warning": drift,
    }


# -- Schmidt decomposition --------------------------------------------------


def _joint_eval(f: BlockFunction, digits: np.ndarray, joint_side: int,
                offset: Tuple[int, ...]) -> np.ndarray:
    """Values of f at the shift of every joint pattern by -offset: read f's
    window [0, depth)^dim at position offset inside the joint box."""
    joint_sites = box_sites(f.dim, joint_side)
    col = {site: j for j, site in enumerate(joint_sites)}
    cols = [col[tuple(o + c for o, c in zip(offset, site))]
            for site in f.sites]
    idx = np.zeros(len(digits), dtype=np.int64)
    for c in cols:
        idx = idx * f.n_symbols + digits[:, c]
    return f.table[idx]


def cocycle_consistent(fs: Sequence[BlockFunction], tol: float = 1e-9) -> Tuple[bool, float]:
    """Mixed relation F_i(x) + F_j(T_{e_i} x) = F_j(x) + F_i(T_{e_j} x) on
    all cylinders of the joint window; returns (ok, worst gap)."""
    dim = fs[0].dim
    side = max(f.depth for f in fs) + 1
    digits = _digit_matrix(fs[0].n_symbols, side ** dim)
    zero = (0,) * dim
    worst = 0.0
    for i in range(dim):
        ei = tuple(1 if a == i else 0 for a in range(dim))
        for j in range(i + 1, dim):
            ej = tuple(1 if a == j else 0 for a in range(dim))
            lhs = (_joint_eval(fs[i], digits, side, zero)
                   + _joint_eval(fs[j], digits, side, ei))
            rhs = (_joint_eval(fs[j], digits, side, zero)
                   + _joint_eval(fs[i], digits, side, ej))
            worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return worst <= tol, worst


def schmidt_decompose(fs: Sequence[BlockFunction], depth_limit: int = 3,
                      tol: float = 1e-9) -> dict:
    """Split a block cocycle (generator tables fs[i] = F(e_{i+1}, .)) into
    F(n, x) = g(T_n x) - g(x) + H(n).

    H(e_i) is the exact product-measure mean of F(e_i, .); g is solved by
    least squares over depth-t cylinders for t up to depth_limit.  Statuses:
    "ok", "inconsistent-cocycle" (mixed relation fails), "no-solution"
    (residual above tol at depth_limit; for genuine block coboundary plus
    homomorphism inputs this means depth_limit is too small)."""
    dim = fs[0].dim
    n_symbols = fs[0].n_symbols
    flags = ["outside_scope"] if dim == 1 else []
    ok, gap = cocycle_consistent(fs, tol)
    if not ok:
        return {"status": "inconsistent-cocycle", "gap": gap, "flags": flags}
    H = HomomorphismH(tuple(tuple(f.mean()) for f in fs))
    valdim = fs[0].valdim
    best = None
    for t in range(1, depth_limit + 1):
        side = max(max(f.depth for f in fs), t + 1)
        n_sites = side ** dim
        if n_symbols ** n_sites > 1 << 20:
            break  # cylinder basis too large for the dense solver
        digits = _digit_matrix(n_symbols, n_sites)
        g_probe = BlockFunction.zero(dim, t, 1, n_symbols)
        n_unknowns = len(g_probe.table)
        joint_sites = box_sites(dim, side)
        col = {site: j for j, site in enumerate(joint_sites)}
        blocks_A, blocks_b = [], []
        for i in range(dim):
            ei = tuple(1 if a == i else 0 for a in range(dim))
            A = np.zeros((len(digits), n_unknowns))
            for offset, sign in ((ei, 1.0), ((0,) * dim, -1.0)):
                cols = [col[tuple(o + c for o, c in zip(offset, site))]
                        for site in g_probe.sites]
                idx = np.zeros(len(digits), dtype=np.int64)
                for c in cols:
                    idx = idx * n_symbols + digits[:, c]
                A[np.arange(len(digits)), idx] += sign
            b = (np.asarray(H.images[i])[None, :]
                 - _joint_eval(fs[i], digits, side, (0,) * dim))
            blocks_A.append(A)
            blocks_b.append(b)
        A = np.vstack(blocks_A)
        b = np.vstack(blocks_b)
        sol, *_ = np.linalg.lstsq(A, b, rcond=None)
        residual = float(np.max(np.abs(A @ sol - b))) if len(b) else 0.0
        best = {"status": "ok", "depth": t, "residual": residual,
                "g": BlockFunction(dim, t, valdim, sol, n_symbols),
                "H": H, "flags": flags}
        if residual < tol:
            return best
    if best is None:
        return {"status": "no-solution", "residual": float("inf"),
                "H": H, "flags": flags}
    best["status"] = "no-solution"
    return best


def synthesize_cocycle(g: BlockFunction, H: HomomorphismH) -> List[BlockFunction]:
    """Generator tables of the cocycle F(n, x) = g(T_n x) - g(x) + H(n);
    the i-th table is a block function on the box of side depth+1."""
    dim = g.dim
    side = g.depth + 1
    digits = _digit_matrix(g.n_symbols, side ** dim)
    out = []
    for i in range(dim):
        ei = tuple(1 if a == i else 0 for a in range(dim))
        vals = (_joint_eval(g, digits, side, ei)
                - _joint_eval(g, digits, side, (0,) * dim)
                + np.asarray(H.images[i])[None, :])
        out.append(BlockFunction(dim, side, g.valdim, vals, g.n_symbols))
    return out


# -- torus x lattice action --------------------------------------------------


@dataclass(frozen=True)
class TorusLatticePoint:
    """Point of T^{d-1} x Z^{d-1}."""

    x: Tuple[float, ...]
    z: Tuple[int, ...]

    def __post_init__(self):
        if any(not 0.0 <= c < 1.0 for c in self.x):
            raise ValueError("torus coordinates must lie in [0, 1)")


def j_action_apply(k: int, p: TorusLatticePoint,
                   alpha: Sequence[float]) -> TorusLatticePoint:
    """Generator k of the action on T^{d-1} x Z^{d-1} (1-based, k <= d):
    for k < d shift the lattice coordinate by e_k; for k = d rotate the
    torus by alpha and add the carry tau(x), tau_i = floor(x_i + alpha_i)."""
    d = len(p.x) + 1
    if not 1 <= k <= d:
        raise ValueError("generator index out of range")
    if any(not 0.0 < a < 1.0 for a in alpha):
        raise ValueError("alpha components must lie in (0, 1)")
    if k < d:
        z = tuple(c + (1 if i == k - 1 else 0) for i, c in enumerate(p.z))
        return TorusLatticePoint(p.x, z)
    tau = tuple(int(np.floor(c + a)) for c, a in zip(p.x, alpha))
    x = tuple(c + a - t for c, a, t in zip(p.x, alpha, tau))
    z = tuple(c + t for c, t in zip(p.z, tau))
    return TorusLatticePoint(x, z)


def equidistribution_check(alpha: Sequence[float], n: int, cells: int,
                           x0: Optional[Sequence[float]] = None) -> dict:
    """Discrepancy of the rotation orbit {x0 + k alpha mod 1 : k < n} against
    the uniform measure on a product grid with `cells` intervals per axis.

    Reports the max cell discrepancy at n/4, n/2 and n; a plateau across
    those horizons raises the rational-alpha warning."""
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
    x0 = np.zeros_like(alpha) if x0 is None else np.asarray(x0, dtype=float)
    ks = np.arange(n)[:, None]
    pts = np.mod(x0[None, :] + ks * alpha[None, :], 1.0)
    bins = np.minimum((pts * cells).astype(np.int64), cells - 1)
    flat = bins @ (cells ** np.arange(len(alpha) - 1, -1, -1, dtype=np.int64))
    n_cells = cells ** len(alpha)
    target = 1.0 / n_cells
    horizons = sorted({max(1, n // 4), max(1, n // 2), n})
    series = []
    for h in horizons:
        freq = np.bincount(flat[:h], minlength=n_cells) / h
        series.append(float(np.max(np.abs(freq - target))))
    plateau = len(series) >= 2 and series[-1] > 0.8 * series[0]
    return {
        "horizons": horizons,
        "discrepancy_series": series,
        "discrepancy": series[-1],
        "rational_alpha_warning": bool(plateau),
    }
