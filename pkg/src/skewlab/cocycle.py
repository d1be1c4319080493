"""Cocycles over the lattice odometer and the skew products they drive.

A cocycle assigns to each group element n and point x a value F(n, x) with
F(n + k, x) = F(k, x) + F(n, T_k x).  Coboundaries come from a potential
(transfer) function f as f(x) - f(T_n x); generic cocycles are given by their
generator transfer tables F(e_i, .), evaluated along staircase paths.  All
value arithmetic is exact integer-coefficient arithmetic over the value
group's generators.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

from .lattice import Vec, basis_vector
from .measure import Cell, CylinderSet, MeasurableSet, OdometerPoint, OdometerSpace
from .towers import RokhlinTower, Purification
from .values import GroupValue, ValueGroup


@dataclass(frozen=True)
class StepFunction:
    """Function constant on depth-p cells; absent cells map to zero."""

    space: OdometerSpace
    group: ValueGroup
    depth: int
    table: Tuple[Tuple[Cell, GroupValue], ...]

    @staticmethod
    def build(space, group, depth, mapping: Dict[Cell, GroupValue]) -> "StepFunction":
        items = tuple(sorted((tuple(c), v) for c, v in mapping.items() if not v.is_zero))
        return StepFunction(space, group, depth, items)

    @staticmethod
    def zero(space, group) -> "StepFunction":
        return StepFunction(space, group, 0, ())

    def as_dict(self) -> Dict[Cell, GroupValue]:
        return dict(self.table)

    def value_on_cell(self, cell: Cell, depth: int) -> GroupValue:
        """Value on a cell of depth >= self.depth (on which it is constant)."""
        if depth < self.depth:
            raise ValueError("cell coarser than function resolution")
        side = self.space.side(self.depth)
        key = tuple(c % side for c in cell)
        return self.as_dict().get(key, self.group.zero())

    def __call__(self, x: OdometerPoint) -> GroupValue:
        return self.value_on_cell(x.residue(self.depth), self.depth)

    def refine(self, depth: int) -> "StepFunction":
        if depth < self.depth:
            raise ValueError("refine target shallower than current depth")
        if depth == self.depth:
            return self
        mapping: Dict[Cell, GroupValue] = {}
        for cell, v in self.table:
            for c in self.space.from_cells(self.depth, [cell]).refine(depth).cells:
                mapping[c] = v
        return StepFunction.build(self.space, self.group, depth, mapping)

    def add(self, other: "StepFunction") -> "StepFunction":
        p = max(self.depth, other.depth)
        a, b = self.refine(p).as_dict(), other.refine(p).as_dict()
        out = dict(a)
        for c, v in b.items():
            out[c] = out.get(c, self.group.zero()) + v
        return StepFunction.build(self.space, self.group, p, out)

    def negate(self) -> "StepFunction":
        return StepFunction(self.space, self.group, self.depth,
                            tuple((c, -v) for c, v in self.table))

    def compose_translate(self, n: Vec) -> "StepFunction":
        """The function x -> f(T_n x)."""
        side = self.space.side(self.depth)
        mapping = {
            tuple((c - nj) % side for c, nj in zip(cell, n)): v
            for cell, v in self.table
        }
        return StepFunction.build(self.space, self.group, self.depth, mapping)

    def support(self) -> MeasurableSet:
        return self.space.from_cells(self.depth, [c for c, _ in self.table])

    def sup_norm(self) -> float:
        return max((v.sup_norm() for _, v in self.table), default=0.0)


def step_from_levels(tower: RokhlinTower, group: ValueGroup,
                     level_values: Dict[Vec, GroupValue]) -> StepFunction:
    """Step function constant on each tower level, zero off the tower."""
    space = tower.space
    depth = tower.base.depth
    side = space.side(depth)
    mapping: Dict[Cell, GroupValue] = {}
    for k, v in level_values.items():
        if tuple(k) not in tower.levels:
            raise KeyError(f"{k} is not a level of the tower")
        for cell in tower.base.cells:
            mapping[tuple((c + kj) % side for c, kj in zip(cell, k))] = v
    return StepFunction.build(space, group, depth, mapping)


def step_from_purification(pur: Purification, group: ValueGroup,
                           values: Dict[Tuple[Vec, int], GroupValue]) -> StepFunction:
    """Step function given per (level, block index), zero elsewhere."""
    space = pur.parent.space
    depth = max([pur.parent.base.depth] + [b.depth for b in pur.blocks])
    side = space.side(depth)
    mapping: Dict[Cell, GroupValue] = {}
    for (k, bi), v in values.items():
        block = pur.blocks[bi].refine(depth)
        for cell in block.cells:
            mapping[tuple((c + kj) % side for c, kj in zip(cell, tuple(k)))] = v
    return StepFunction.build(space, group, depth, mapping)


@dataclass(frozen=True)
class BoxBump:
    """One rectangular plateau: value on cells whose depth-p residues lie in
    the half-open box prod_j [lo_j, hi_j), zero elsewhere."""

    depth: int
    lo: Vec
    hi: Vec
    value: GroupValue

    def hits(self, cell: Cell, side: int) -> bool:
        for c, a, b in zip(cell, self.lo, self.hi):
            if not a <= c % side < b:
                return False
        return True


class PotentialFunction:
    """Sum of box bumps at mixed depths: a step function stored compactly.

    Evaluation at a cell is O(#bumps); no cell table is ever materialized,
    which keeps deep construction stages cheap.  Equivalent to the refined
    StepFunction sum (see to_step_function) for every query depth at least
    max bump depth.
    """

    def __init__(self, space: OdometerSpace, group: ValueGroup,
                 bumps: Sequence[BoxBump] = ()):
        self.space = space
        self.group = group
        self.bumps = tuple(bumps)

    @property
    def depth(self) -> int:
        return max((b.depth for b in self.bumps), default=0)

    def with_bump(self, bump: BoxBump) -> "PotentialFunction":
        return PotentialFunction(self.space, self.group, self.bumps + (bump,))

    def value_on_cell(self, cell: Cell, depth: int) -> GroupValue:
        if depth < self.depth:
            raise ValueError("cell coarser than potential resolution")
        out = self.group.zero()
        for b in self.bumps:
            if b.hits(cell, self.space.side(b.depth)):
                out = out + b.value
        return out

    def __call__(self, x: OdometerPoint) -> GroupValue:
        return self.value_on_cell(x.residue(self.depth), self.depth)

    def sup_norm(self) -> float:
        # bumps may overlap in general; bound by the triangle inequality
        return sum(b.value.sup_norm() for b in self.bumps)

    def to_step_function(self) -> StepFunction:
        depth = self.depth
        mapping: Dict[Cell, GroupValue] = {}
        for cell in self.space.all_cells(depth):
            v = self.value_on_cell(cell, depth)
            if not v.is_zero:
                mapping[cell] = v
        return StepFunction.build(self.space, self.group, depth, mapping)


class CoboundaryCocycle:
    """F(n, x) = f(x) - f(T_n x) for a potential f (StepFunction or
    PotentialFunction -- anything exposing value_on_cell/depth)."""

    def __init__(self, f):
        self.f = f
        self.space = f.space
        self.group = f.group

    @property
    def depth(self) -> int:
        return self.f.depth

    def evaluate_cell(self, n: Vec, cell: Cell, depth: Optional[int] = None) -> GroupValue:
        p = self.depth if depth is None else depth
        side = self.space.side(p)
        moved = tuple((c + nj) % side for c, nj in zip(cell, n))
        return self.f.value_on_cell(cell, p) - self.f.value_on_cell(moved, p)

    def evaluate(self, n: Vec, x: OdometerPoint) -> GroupValue:
        return self.evaluate_cell(n, x.residue(self.depth))

    def generator_table(self, i: int, depth: Optional[int] = None) -> Dict[Cell, GroupValue]:
        """Nonzero values of F(e_i, .) as a cell table at the given depth."""
        p = self.depth if depth is None else depth
        e = basis_vector(self.space.dim, i)
        out = {}
        for cell in self.space.all_cells(p):
            v = self.evaluate_cell(e, cell, p)
            if not v.is_zero:
                out[cell] = v
        return out


def coboundary_eval(f, n: Vec, A: CylinderSet):
    """Exact value of the coboundary increment f(.) - f(T_n .) on a cylinder.

    Returns the GroupValue when the increment is constant on A; otherwise
    subdivides to the potential's resolution and returns the per-cell table.
    """
    cob = CoboundaryCocycle(f)
    if A.depth >= f.depth:
        return cob.evaluate_cell(n, A.prefix, A.depth)
    cells = sorted(A.to_set().refine(f.depth).cells)
    vals = {c: cob.evaluate_cell(n, c, f.depth) for c in cells}
    first = vals[cells[0]]
    if all(v == first for v in vals.values()):
        return first
    return vals


class HomomorphismCocycle:
    """F(n, x) = H(n), independent of x, for a homomorphism H: Z^d -> G."""

    def __init__(self, space: OdometerSpace, group: ValueGroup,
                 images: Sequence[GroupValue]):
        if len(images) != space.dim:
            raise ValueError("need one image per generator")
        self.space = space
        self.group = group
        self.images = tuple(images)

    @property
    def depth(self) -> int:
        return 0

    def evaluate_cell(self, n: Vec, cell: Cell = None, depth: int = 0) -> GroupValue:
        out = self.group.zero()
        for nj, img in zip(n, self.images):
            out = out + img.scale(nj)
        return out

    def evaluate(self, n: Vec, x: Optional[OdometerPoint] = None) -> GroupValue:
        return self.evaluate_cell(n)


class TransferCocycle:
    """Cocycle given by its generator transfer tables F(e_i, .).

    Evaluation uses the staircase path (all of coordinate 0 first, then
    coordinate 1, ...) computed by exact modular counting: a straight run of
    m unit steps along axis i sums the transfer over a residue window, so the
    cost is O(table size), independent of m.  The tables must satisfy the
    commutation identities for the result to be a genuine cocycle (automatic
    for d = 1); ``commutation_defect`` measures the failure.
    """

    def __init__(self, space: OdometerSpace, group: ValueGroup,
                 transfers: Sequence[StepFunction]):
        if len(transfers) != space.dim:
            raise ValueError("need one transfer per generator")
        self.space = space
        self.group = group
        self.transfers = tuple(transfers)

    @property
    def depth(self) -> int:
        return max((t.depth for t in self.transfers), default=0)

    def _run_value(self, i: int, m: int, cell: Cell) -> GroupValue:
        """Sum of transfer_i over the straight run of m steps from cell."""
        t = self.transfers[i]
        side_t = self.space.side(t.depth)
        total = self.group.zero()
        if m == 0:
            return total
        # window of axis-i offsets k whose visited cell feeds the sum:
        # m > 0 visits k = 0..m-1; m < 0 visits k = -1..m (negated values)
        lo, hi, sign = (0, m - 1, 1) if m > 0 else (m, -1, -1)
        for entry, value in t.table:
            if any(cell[j] % side_t != entry[j] for j in range(len(cell)) if j != i):
                continue
            # count k in [lo, hi] with (cell_i + k) % side_t == entry_i
            r = (entry[i] - cell[i]) % side_t
            first = lo + (r - lo) % side_t
            if first > hi:
                continue
            count = (hi - first) // side_t + 1
            total = total + value.scale(sign * count)
        return total

    def evaluate_cell(self, n: Vec, cell: Cell, depth: Optional[int] = None) -> GroupValue:
        p = self.depth if depth is None else depth
        if p < self.depth:
            raise ValueError("cell coarser than transfer resolution")
        side = self.space.side(p)
        cur = tuple(c % side for c in cell)
        total = self.group.zero()
        for i, ni in enumerate(n):
            total = total + self._run_value(i, ni, cur)
            cur = tuple((c + (ni if j == i else 0)) % side for j, c in enumerate(cur))
        return total

    def evaluate(self, n: Vec, x: OdometerPoint) -> GroupValue:
        return self.evaluate_cell(n, x.residue(self.depth))

    def evaluate_path(self, path: Sequence[Tuple[int, int]], cell: Cell,
                      depth: Optional[int] = None) -> GroupValue:
        """Evaluate along an explicit list of (axis, sign) unit steps."""
        p = self.depth if depth is None else depth
        side = self.space.side(p)
        cur = tuple(c % side for c in cell)
        total = self.group.zero()
        for i, sign in path:
            total = total + self._run_value(i, sign, cur)
            cur = tuple((c + (sign if j == i else 0)) % side for j, c in enumerate(cur))
        return total

    def commutation_defect(self) -> float:
        """Max over cells and axis pairs of |F(e_i then e_j) - F(e_j then e_i)|."""
        d = self.space.dim
        if d == 1:
            return 0.0
        p = self.depth
        worst = 0.0
        for cell in self.space.all_cells(p):
            for i in range(d):
                for j in range(i + 1, d):
                    a = self.evaluate_path([(i, 1), (j, 1)], cell, p)
                    b = self.evaluate_path([(j, 1), (i, 1)], cell, p)
                    worst = max(worst, (a - b).sup_norm())
        return worst


class SumCocycle:
    """Pointwise sum of cocycles over a shared space and value group."""

    def __init__(self, parts: Sequence):
        if not parts:
            raise ValueError("empty sum")
        self.parts = list(parts)
        self.space = parts[0].space
        self.group = parts[0].group

    @property
    def depth(self) -> int:
        return max(p.depth for p in self.parts)

    def evaluate_cell(self, n: Vec, cell: Cell, depth: Optional[int] = None) -> GroupValue:
        p = self.depth if depth is None else depth
        out = self.group.zero()
        for part in self.parts:
            out = out + part.evaluate_cell(n, cell, p)
        return out

    def evaluate(self, n: Vec, x: OdometerPoint) -> GroupValue:
        return self.evaluate_cell(n, x.residue(self.depth))


def generator_support_cells(cocycle, depth: int):
    """Cells (at the given depth) where some generator value is nonzero,
    without scanning the whole space: only candidate cells derived from the
    parts' tables/bumps are inspected.  Falls back to a full scan when the
    structure is opaque."""
    space = cocycle.space
    side = space.side(depth)
    candidates = set()

    def add_class(entry_cell, entry_depth):
        cells = space.from_cells(entry_depth, [entry_cell]).refine(depth).cells
        for c in cells:
            candidates.add(c)
            for i in range(space.dim):
                candidates.add(tuple((cj - (1 if j == i else 0)) % side
                                     for j, cj in enumerate(c)))

    def collect(part):
        if isinstance(part, SumCocycle):
            for q in part.parts:
                collect(q)
        elif isinstance(part, TransferCocycle):
            for t in part.transfers:
                for cell, _ in t.table:
                    add_class(cell, t.depth)
        elif isinstance(part, CoboundaryCocycle):
            f = part.f
            if isinstance(f, PotentialFunction):
                for b in f.bumps:
                    bside = space.side(b.depth)
                    for i in range(space.dim):
                        for edge in (b.lo[i] % bside, (b.hi[i] - 1) % bside):
                            lo = tuple(edge if j == i else b.lo[j]
                                       for j in range(space.dim))
                            hi = tuple(edge + 1 if j == i else b.hi[j]
                                       for j in range(space.dim))
                            for cell in _box_cells(lo, hi):
                                add_class(cell, b.depth)
            else:
                for cell, _ in f.table:
                    add_class(cell, f.depth)
        else:
            candidates.update(space.all_cells(depth))

    collect(cocycle)
    return candidates


def _box_cells(lo: Vec, hi: Vec):
    import itertools
    return itertools.product(*[range(a, b) for a, b in zip(lo, hi)])


def is_incremental(cocycle, depth: Optional[int] = None):
    """Check that every generator value F(e_i, .) lies in S union {0}.

    Returns (ok, witness); the witness names the axis, cell, and offending
    value coordinates on failure."""
    space, group = cocycle.space, cocycle.group
    p = cocycle.depth if depth is None else depth
    cells = generator_support_cells(cocycle, p)
    for i in range(space.dim):
        e = basis_vector(space.dim, i)
        for cell in cells:
            v = cocycle.evaluate_cell(e, cell, p)
            if v.is_zero:
                continue
            if group.generator_index(v.coords) < 0:
                return False, {"axis": i, "cell": cell,
                               "value": tuple(v.coords)}
    return True, None


def is_internal(f, tower: RokhlinTower):
    """Check that the potential f vanishes on the tower's boundary levels and
    off the tower support.  Returns (ok, witness)."""
    space = tower.space
    depth = max(f.depth, tower.base.depth)
    side = space.side(depth)
    bdry = tower.boundary()
    outside = tower.support().complement()
    for region in (bdry, outside):
        for cell in region.refine(depth).cells:
            v = f.value_on_cell(cell, depth)
            if not v.is_zero:
                return False, {"cell": cell, "depth": depth,
                               "value": tuple(v.coords)}
    return True, None


def skew_apply(cocycle, n: Vec, x: OdometerPoint, z: GroupValue) -> Tuple[OdometerPoint, GroupValue]:
    """One application of the skew product: (x, z) -> (T_n x, z + F(n, x))."""
    return x.apply(n), z + cocycle.evaluate(n, x)
