"""Essential-value certificates: holonomies with exact measure accounting.

A holonomy is a piecewise translation along the action's orbits: finitely
many cylinder-union domains, each moved by one lattice shift, with disjoint
domains and disjoint images.  The cocycle transfer along a piece with shift
n is F(n, .) on the domain; a certificate records that the transfer stays
inside a stated ball around a target value on a domain whose measure exceeds
a stated fraction of a window set A.  Measure comparisons are exact rational
arithmetic; only ball membership touches floats (and the construction engine
produces residuals that are exactly zero, so floats never decide a marginal
case there).
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from .lattice import Vec, neg, sigma_ball, word_norm, LINF
from .measure import MeasurableSet, OdometerSpace
from .values import GroupValue, ValueGroup


@dataclass(frozen=True)
class HolonomyPiece:
    domain: MeasurableSet
    shift: Vec

    def image(self) -> MeasurableSet:
        return self.domain.translate(self.shift)


@dataclass(frozen=True)
class Holonomy:
    """A finite piecewise translation; disjoint domains, disjoint images,
    hence invertible and measure preserving piece by piece."""

    pieces: Tuple[HolonomyPiece, ...]

    def __post_init__(self):
        if not self.pieces:
            raise ValueError("holonomy needs at least one piece")
        space = self.pieces[0].domain.space
        dom = space.empty_set()
        img = space.empty_set()
        for p in self.pieces:
            if not dom.is_disjoint_from(p.domain):
                raise ValueError("holonomy domains overlap")
            pi = p.image()
            if not img.is_disjoint_from(pi):
                raise ValueError("holonomy images overlap")
            dom = dom.union(p.domain)
            img = img.union(pi)

    @property
    def space(self) -> OdometerSpace:
        return self.pieces[0].domain.space

    def domain(self) -> MeasurableSet:
        out = self.space.empty_set()
        for p in self.pieces:
            out = out.union(p.domain)
        return out

    def image(self) -> MeasurableSet:
        out = self.space.empty_set()
        for p in self.pieces:
            out = out.union(p.image())
        return out

    def max_shift_norm(self) -> int:
        return max(word_norm(p.shift, LINF) for p in self.pieces)


def identity_holonomy(A: MeasurableSet) -> Holonomy:
    return Holonomy((HolonomyPiece(A, (0,) * A.space.dim),))


def holonomy_invert(hol: Holonomy) -> Holonomy:
    return Holonomy(tuple(HolonomyPiece(p.image(), neg(p.shift)) for p in hol.pieces))


def holonomy_compose(outer: Holonomy, inner: Holonomy) -> Optional[Holonomy]:
    """outer after inner, on the exact domain where the composite is defined.

    Returns None (the empty holonomy is not representable) when the domains
    never chain up."""
    pieces = []
    for q in inner.pieces:
        qi = q.image()
        for p in outer.pieces:
            mid = qi.intersect(p.domain)
            if mid.is_empty:
                continue
            dom = mid.translate(neg(q.shift))
            shift = tuple(a + b for a, b in zip(q.shift, p.shift))
            pieces.append(HolonomyPiece(dom, shift))
    if not pieces:
        return None
    return Holonomy(tuple(pieces))


@dataclass
class EvcReport:
    """Outcome of an essential-value condition check."""

    ok: bool
    measured: Fraction
    threshold: Fraction
    residual: float
    piece_residuals: Tuple[float, ...] = ()
    failing_clause: Optional[str] = None
    witness: Optional[dict] = None


@dataclass
class EvcCertificate:
    """Frozen record that a holonomy witnessed an essential value:
    transfer within ``radius`` of ``target`` on all of D(R) <= A, with
    m(D(R)) > threshold * m(A)."""

    stage: int
    holonomy: Holonomy
    window: MeasurableSet
    target: GroupValue
    radius: float
    threshold: Fraction
    measured: Fraction
    residuals: Tuple[float, ...]

    @property
    def residual(self) -> float:
        return max(self.residuals) if self.residuals else 0.0


def _piece_worst_residual(cocycle, piece: HolonomyPiece, target: GroupValue,
                          radius: float):
    """Max |F(shift, .) - target| over the piece's domain cells; returns
    (worst, offending cell or None)."""
    depth = max(piece.domain.depth, getattr(cocycle, "depth", 0))
    worst = 0.0
    for cell in piece.domain.refine(depth).cells:
        dev = (cocycle.evaluate_cell(piece.shift, cell, depth) - target).sup_norm()
        if dev >= radius:
            return dev, cell
        worst = max(worst, dev)
    return worst, None


def check_evc(cocycle, hol: Holonomy, A: MeasurableSet, target: GroupValue,
              radius: float, threshold: Fraction, stage: int = 0):
    """Verify the essential value condition; return (certificate, report).

    The certificate is None when any clause fails, and the report names the
    first failing clause: window containment of domain and image, transfer
    membership in the open ball around the target, and the strict measure
    inequality m(D(R)) > threshold * m(A).
    """
    mA = A.measure()
    if mA == 0:
        return None, EvcReport(False, Fraction(0), threshold, float("inf"),
                               failing_clause="window_null")
    if not A.contains_set(hol.domain()):
        return None, EvcReport(False, Fraction(0), threshold, float("inf"),
                               failing_clause="domain_not_in_window")
    if not A.contains_set(hol.image()):
        return None, EvcReport(False, Fraction(0), threshold, float("inf"),
                               failing_clause="image_not_in_window")
    residuals = []
    for piece in hol.pieces:
        worst, bad = _piece_worst_residual(cocycle, piece, target, radius)
        if bad is not None:
            return None, EvcReport(False, Fraction(0), threshold, worst,
                                   failing_clause="transfer_outside_ball",
                                   witness={"cell": bad, "shift": piece.shift})
        residuals.append(worst)
    measured = hol.domain().measure()
    if not measured > threshold * mA:
        return None, EvcReport(False, measured, threshold, max(residuals),
                               failing_clause="measured_too_small")
    report = EvcReport(True, measured, threshold, max(residuals),
                       tuple(residuals))
    cert = EvcCertificate(stage, hol, A, target, radius, threshold,
                          measured, tuple(residuals))
    return cert, report


def generator_difference_measure(new_cocycle, old_cocycle, depth: int) -> Fraction:
    """Exact measure of the set where some generator value differs between
    the two cocycles.  Candidate cells come from both cocycles' sparse
    structure, so the cost scales with their supports, not with b^(pd)."""
    from .cocycle import generator_support_cells
    from .lattice import basis_vector
    space = new_cocycle.space
    cells = generator_support_cells(new_cocycle, depth) | \
        generator_support_cells(old_cocycle, depth)
    diff = set()
    for cell in cells:
        for i in range(space.dim):
            e = basis_vector(space.dim, i)
            if new_cocycle.evaluate_cell(e, cell, depth) != \
                    old_cocycle.evaluate_cell(e, cell, depth):
                diff.add(cell)
                break
    return len(diff) * space.cell_measure(depth)


def stability_recheck(new_cocycle, old_cocycle, cert: EvcCertificate):
    """Re-validate a certificate issued for old_cocycle against new_cocycle.

    Corrupted fibers -- domain cells whose transfer under the new cocycle
    left the target ball -- are excised exactly, and the certificate survives
    when the remaining domain still clears the threshold.  Returns
    (ok, report_dict) with the exact generator-difference measure, the
    excised measure, and the surviving fraction."""
    space = cert.window.space
    depth = max(cert.window.depth, getattr(new_cocycle, "depth", 0),
                getattr(old_cocycle, "depth", 0))
    delta = generator_difference_measure(new_cocycle, old_cocycle, depth)
    surviving_pieces = []
    excised = Fraction(0)
    residuals = []
    for piece in cert.holonomy.pieces:
        keep = []
        worst = 0.0
        for cell in piece.domain.refine(depth).cells:
            dev = (new_cocycle.evaluate_cell(piece.shift, cell, depth)
                   - cert.target).sup_norm()
            if dev < cert.radius:
                keep.append(cell)
                worst = max(worst, dev)
            else:
                excised += space.cell_measure(depth)
        if keep:
            surviving_pieces.append(
                HolonomyPiece(space.from_cells(depth, keep), piece.shift))
            residuals.append(worst)
    report = {
        "generator_difference_measure": delta,
        "excised_measure": excised,
        "threshold": cert.threshold,
    }
    if not surviving_pieces:
        report["surviving_measure"] = Fraction(0)
        return False, report
    surviving = Holonomy(tuple(surviving_pieces))
    measured = surviving.domain().measure()
    report["surviving_measure"] = measured
    report["residual"] = max(residuals)
    ok = (measured > cert.threshold * cert.window.measure()
          and cert.window.contains_set(surviving.domain())
          and cert.window.contains_set(surviving.image()))
    return ok, report


def essential_value_scan(cocycle, A: MeasurableSet, target: GroupValue,
                         radius: float, max_norm: int,
                         first_only: bool = False) -> List[dict]:
    """Find shifts n with ||n|| <= max_norm such that
    A intersect T_n^{-1}A intersect [F(n,.) within radius of target]
    has positive (exact) measure.

    Shifts are tried in order of increasing sup norm, then lexicographically;
    n = 0 is included (and is always a witness for target 0 when m(A) > 0).
    Each witness records the shift and the exact measure of the triple
    intersection.
    """
    space = A.space
    hits: List[dict] = []
    if A.measure() == 0:
        return hits
    depth = max(A.depth, getattr(cocycle, "depth", 0))
    Aref = A.refine(depth)
    side = space.side(depth)
    candidates = sorted(sigma_ball((0,) * space.dim, max_norm, LINF),
                        key=lambda n: (word_norm(n, LINF), n))
    for n in candidates:
        good = []
        for cell in Aref.cells:
            moved = tuple((c + nj) % side for c, nj in zip(cell, n))
            if moved not in Aref.cells:
                continue
            v = cocycle.evaluate_cell(n, cell, depth)
            if (v - target).sup_norm() < radius:
                good.append(cell)
                if first_only:
                    break
        if good:
            hits.append({
                "shift": tuple(n),
                "measure": len(good) * space.cell_measure(depth),
                "domain": space.from_cells(depth, good),
            })
            if first_only:
                break
    return hits


# ---------------------------------------------------------------- JSON I/O

def frac_str(q: Fraction) -> str:
    return f"{q.numerator}/{q.denominator}"


def frac_parse(s) -> Fraction:
    return Fraction(s)


def group_to_json(group: ValueGroup) -> dict:
    return {
        "dim": group.dim,
        "kind": group.kind,
        "generators": [[frac_str(Fraction(c)) for c in g] for g in group.generators],
    }


def group_from_json(data: dict) -> ValueGroup:
    return ValueGroup(
        data["dim"],
        tuple(tuple(Fraction(c) for c in g) for g in data["generators"]),
        data["kind"],
    )


def potential_to_json(f) -> dict:
    from .cocycle import PotentialFunction
    if not isinstance(f, PotentialFunction):
        raise TypeError("only box-bump potentials serialize")
    return {
        "kind": "potential",
        "space": {"dim": f.space.dim, "base": f.space.base},
        "group": group_to_json(f.group),
        "bumps": [
            {"depth": b.depth, "lo": list(b.lo), "hi": list(b.hi),
             "coeffs": list(b.value.coeffs)}
            for b in f.bumps
        ],
    }


def potential_from_json(data: dict):
    from .cocycle import BoxBump, PotentialFunction
    space = OdometerSpace(data["space"]["dim"], data["space"]["base"])
    group = group_from_json(data["group"])
    bumps = [
        BoxBump(b["depth"], tuple(b["lo"]), tuple(b["hi"]),
                GroupValue(group, tuple(b["coeffs"])))
        for b in data["bumps"]
    ]
    return PotentialFunction(space, group, bumps)


def certificate_to_json(cert: EvcCertificate, potential=None) -> str:
    """Serialize; when the engine's potential is supplied the certificate is
    self-contained and verify-evc can recheck it from the file alone."""
    data = {
        "stage": cert.stage,
        "space": {"dim": cert.window.space.dim, "base": cert.window.space.base},
        "group": group_to_json(cert.target.group),
        "window": cert.window.to_text(),
        "target_coeffs": list(cert.target.coeffs),
        "radius": cert.radius,
        "threshold": frac_str(cert.threshold),
        "measured": frac_str(cert.measured),
        "residuals": list(cert.residuals),
        "pieces": [
            {"domain": p.domain.to_text(), "shift": list(p.shift)}
            for p in cert.holonomy.pieces
        ],
    }
    if potential is not None:
        data["cocycle"] = potential_to_json(potential)
    return json.dumps(data, sort_keys=True, indent=2)


def certificate_from_json(text: str):
    """Returns (certificate, cocycle or None)."""
    from .cocycle import CoboundaryCocycle
    data = json.loads(text)
    space = OdometerSpace(data["space"]["dim"], data["space"]["base"])
    group = group_from_json(data["group"])
    window = MeasurableSet.from_text(space, data["window"])
    pieces = tuple(
        HolonomyPiece(MeasurableSet.from_text(space, p["domain"]),
                      tuple(p["shift"]))
        for p in data["pieces"]
    )
    cert = EvcCertificate(
        stage=data["stage"],
        holonomy=Holonomy(pieces),
        window=window,
        target=GroupValue(group, tuple(data["target_coeffs"])),
        radius=data["radius"],
        threshold=frac_parse(data["threshold"]),
        measured=frac_parse(data["measured"]),
        residuals=tuple(data["residuals"]),
    )
    cocycle = None
    if "cocycle" in data:
        cocycle = CoboundaryCocycle(potential_from_json(data["cocycle"]))
    return cert, cocycle
