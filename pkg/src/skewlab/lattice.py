"""Integer lattice geometry: word norms, balls, region interiors and boundaries.

All lattice vectors are plain tuples of ints, so everything here is pure
value arithmetic and safe to share between workers.
"""
from __future__ import annotations

import itertools
from typing import Iterable, FrozenSet, Tuple

Vec = Tuple[int, ...]

L1 = "l1"
LINF = "linf"


def zero(d: int) -> Vec:
    return (0,) * d


def basis_vector(d: int, i: int, sign: int = 1) -> Vec:
    """The signed standard basis vector along axis i (0-based)."""
    if not 0 <= i < d:
        raise ValueError(f"axis {i} out of range for dimension {d}")
    return tuple(sign if j == i else 0 for j in range(d))


def add(n: Vec, m: Vec) -> Vec:
    return tuple(a + b for a, b in zip(n, m))


def sub(n: Vec, m: Vec) -> Vec:
    return tuple(a - b for a, b in zip(n, m))


def neg(n: Vec) -> Vec:
    return tuple(-a for a in n)


def word_norm(n: Vec, kind: str = LINF) -> int:
    """Word-length norm of a lattice vector w.r.t. the signed basis generators.

    ``l1`` is the word norm for the generator set {+-e_i}; ``linf`` is the word
    norm when diagonal steps are allowed.  Both vanish exactly at 0 and satisfy
    the triangle inequality.
    """
    if kind == L1:
        return sum(abs(c) for c in n)
    if kind == LINF:
        return max((abs(c) for c in n), default=0)
    raise ValueError(f"unknown norm kind {kind!r}")


def word_metric(k: Vec, ell: Vec, kind: str = L1) -> int:
    """Left-invariant word distance between two lattice points."""
    return word_norm(sub(ell, k), kind)


def sigma_ball(center: Vec, radius: int, kind: str = LINF) -> FrozenSet[Vec]:
    """All lattice points within ``radius`` of ``center`` in the chosen norm."""
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    d = len(center)
    box = itertools.product(range(-radius, radius + 1), repeat=d)
    if kind == LINF:
        return frozenset(add(center, off) for off in box)
    if kind == L1:
        return frozenset(
            add(center, off) for off in box if sum(abs(c) for c in off) <= radius
        )
    raise ValueError(f"unknown norm kind {kind!r}")


def region_dilate(points: Iterable[Vec], radius: int, kind: str = LINF) -> FrozenSet[Vec]:
    """Union of balls of the given radius around every point of the region."""
    out: set = set()
    for p in points:
        out.update(sigma_ball(p, radius, kind))
    return frozenset(out)


def region_interior(points: Iterable[Vec], kind: str = LINF) -> FrozenSet[Vec]:
    """Points whose radius-1 ball stays inside the region."""
    pts = frozenset(points)
    return frozenset(
        p for p in pts if sigma_ball(p, 1, kind) <= pts
    )


def region_boundary(points: Iterable[Vec], kind: str = LINF) -> FrozenSet[Vec]:
    """Region minus its interior."""
    pts = frozenset(points)
    return pts - region_interior(pts, kind)


def box_region(lo: Vec, hi: Vec) -> FrozenSet[Vec]:
    """All points of the box prod_j [lo_j, hi_j)."""
    return frozenset(itertools.product(*[range(a, b) for a, b in zip(lo, hi)]))
