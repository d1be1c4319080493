"""Rokhlin towers, castles, and purification for the lattice odometer.

A tower is a base set together with a finite region of lattice translates
whose images of the base are pairwise disjoint.  The odometer's cylinder
structure lets us build towers with *exactly* zero error by taking the base
to be a single deep cylinder and the region a full coordinate box; a shaped
(ball-region) variant with a small controlled leftover is also provided.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, FrozenSet, List, Sequence, Tuple

from .lattice import Vec, sigma_ball, word_norm, LINF
from .measure import MeasurableSet, OdometerSpace


@dataclass(frozen=True)
class RokhlinTower:
    """Base set plus a region of levels; level k carries T_k(base)."""

    base: MeasurableSet
    levels: FrozenSet[Vec]

    def __post_init__(self):
        if self.base.is_empty:
            raise ValueError("tower base is empty")
        if not self.levels:
            raise ValueError("tower needs at least one level")
        d = self.base.space.dim
        if any(len(k) != d for k in self.levels):
            raise ValueError("level vector dimension mismatch")

    @property
    def space(self) -> OdometerSpace:
        return self.base.space

    @property
    def height(self) -> int:
        return len(self.levels)

    @property
    def breadth(self) -> int:
        return max(word_norm(k, LINF) for k in self.levels)

    def level(self, k: Vec) -> MeasurableSet:
        if tuple(k) not in self.levels:
            raise KeyError(f"{k} is not a level of this tower")
        return self.base.translate(k)

    def _gather(self, level_set) -> MeasurableSet:
        side = self.space.side(self.base.depth)
        cells = set()
        for k in level_set:
            for v in self.base.cells:
                cells.add(tuple((vj + kj) % side for vj, kj in zip(v, k)))
        return self.space.from_cells(self.base.depth, cells)

    def support(self) -> MeasurableSet:
        return self._gather(self.levels)

    def error(self) -> Fraction:
        """Measure of the complement of the tower's support."""
        return 1 - self.support().measure()

    def is_disjoint(self) -> bool:
        """Exact pairwise disjointness of all level sets."""
        side = self.space.side(self.base.depth)
        seen = set()
        for k in self.levels:
            for v in self.base.cells:
                c = tuple((vj + kj) % side for vj, kj in zip(v, k))
                if c in seen:
                    return False
                seen.add(c)
        return True

    def interior_levels(self) -> FrozenSet[Vec]:
        """Levels whose unit ball of neighbours stays inside the region."""
        d = self.space.dim
        out = set()
        for k in self.levels:
            ok = True
            for j in range(d):
                for s in (1, -1):
                    nb = tuple(k[i] + (s if i == j else 0) for i in range(d))
                    if nb not in self.levels:
                        ok = False
                        break
                if not ok:
                    break
            if ok:
                out.add(k)
        return frozenset(out)

    def boundary_levels(self) -> FrozenSet[Vec]:
        return self.levels - self.interior_levels()

    def interior(self) -> MeasurableSet:
        return self._gather(self.interior_levels())

    def boundary(self) -> MeasurableSet:
        return self._gather(self.boundary_levels())


def tower_interior(tower: RokhlinTower) -> FrozenSet[Vec]:
    return tower.interior_levels()


def tower_boundary(tower: RokhlinTower) -> FrozenSet[Vec]:
    return tower.boundary_levels()


def build_box_tower(space: OdometerSpace, depth: int) -> RokhlinTower:
    """Exact tower tiling the whole space: base = the all-zero depth-p cell,
    levels = the coordinate box [0, b^p)^d.  Error is exactly 0 and the
    position of a point in the tower is its depth-p residue tuple."""
    side = space.side(depth)
    base = space.from_cells(depth, [(0,) * space.dim])
    levels = frozenset(itertools.product(range(side), repeat=space.dim))
    return RokhlinTower(base, levels)


def build_tower(space: OdometerSpace, breadth: int, epsilon: Fraction) -> RokhlinTower:
    """Tower whose region is the sup-norm ball of the given breadth, with
    leftover measure < epsilon.

    The base is carved from a box tiling: pick depth p with b^p >= 2*breadth+1,
    group the box positions into translates of the ball region, and keep the
    groups that fit.  Leftover = positions in no group, which shrinks as p
    grows; p is increased until the bound beats epsilon.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive; use build_box_tower for "
                         "exact zero-error box towers")
    d = space.dim
    region = sigma_ball((0,) * d, breadth, LINF)
    span = 2 * breadth + 1
    p = 1
    while True:
        side = space.side(p)
        groups_per_axis = side // span
        if groups_per_axis >= 1:
            covered = Fraction((groups_per_axis * span) ** d, side ** d)
            if 1 - covered < epsilon:
                break
        p += 1
    side = space.side(p)
    groups_per_axis = side // span
    # base cells: the ball center of each full span-block, so each base cell's
    # translates over the ball stay inside its own block
    anchors = [breadth + g * span for g in range(groups_per_axis)]
    base = space.from_cells(p, itertools.product(anchors, repeat=d))
    return RokhlinTower(base, frozenset(region))


@dataclass(frozen=True)
class Castle:
    """A finite list of towers with pairwise disjoint level sets."""

    towers: Tuple[RokhlinTower, ...]

    def __post_init__(self):
        if not self.towers:
            raise ValueError("castle needs at least one tower")
        seen = self.towers[0].space.empty_set()
        for t in self.towers:
            s = t.support()
            if not seen.is_disjoint_from(s):
                raise ValueError("tower supports overlap")
            seen = seen.union(s)

    @property
    def space(self) -> OdometerSpace:
        return self.towers[0].space

    def support(self) -> MeasurableSet:
        out = self.space.empty_set()
        for t in self.towers:
            out = out.union(t.support())
        return out

    def error(self) -> Fraction:
        return 1 - self.support().measure()


@dataclass(frozen=True)
class Purification:
    """Split of a tower's base into blocks on which the itinerary through a
    given partition is constant level by level."""

    parent: RokhlinTower
    blocks: Tuple[MeasurableSet, ...]

    def __post_init__(self):
        space = self.parent.space
        seen = space.empty_set()
        whole = space.empty_set()
        for b in self.blocks:
            if not seen.is_disjoint_from(b):
                raise ValueError("purification blocks overlap")
            seen = seen.union(b)
            whole = whole.union(b)
        if whole != self.parent.base:
            raise ValueError("blocks do not partition the base")

    def towers(self) -> Tuple[RokhlinTower, ...]:
        return tuple(RokhlinTower(b, self.parent.levels) for b in self.blocks)

    def castle(self) -> Castle:
        return Castle(self.towers())


def purify(tower: RokhlinTower, alpha: Sequence[MeasurableSet]) -> Purification:
    """Refine the tower base so the itinerary through ``alpha`` is constant.

    Two base cells land in the same block iff, for every level k and every
    set P in alpha, T_k of the cell meets P the same way.  Cells are
    cylinders and the sets are cylinder unions, so once everything is refined
    to a common depth "meets" becomes "is contained in": the split is exact,
    and purifying twice is the identity on blocks.
    """
    space = tower.space
    depth = tower.base.depth
    for P in alpha:
        depth = max(depth, P.depth)
    base = tower.base.refine(depth)
    keys: Dict[tuple, List[tuple]] = {}
    levels = sorted(tower.levels)
    side = space.side(depth)
    for cell in sorted(base.cells):
        sig = []
        for k in levels:
            moved = tuple((c + kj) % side for c, kj in zip(cell, k))
            for P in alpha:
                sig.append(P.contains_cell(moved, depth))
        keys.setdefault(tuple(sig), []).append(cell)
    blocks = tuple(
        space.from_cells(depth, cells) for _, cells in sorted(keys.items())
    )
    return Purification(tower, blocks)


def is_pure(tower: RokhlinTower, alpha: Sequence[MeasurableSet]) -> bool:
    """True iff every level of the tower is contained in or disjoint from
    every one of the given sets."""
    for k in sorted(tower.levels):
        lv = tower.base.translate(k)
        for P in alpha:
            if not (P.contains_set(lv) or P.is_disjoint_from(lv)):
                return False
    return True
