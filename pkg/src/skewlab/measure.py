"""Exact measure algebra on the d-dimensional base-b odometer.

Cells at depth p are residue tuples mod b^p, one residue per coordinate;
the depth-p prefix of an adding-machine stream is exactly its value mod b^p,
so translating by a lattice vector maps depth-p cells to depth-p cells.
Everything in this module is integer/Fraction arithmetic; no floats.
"""
from __future__ import annotations

import hashlib
import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import FrozenSet, Iterable, Tuple

from .lattice import Vec

Cell = Tuple[int, ...]


@dataclass(frozen=True)
class OdometerSpace:
    """The Z^d product adding machine on d base-b digit streams."""

    dim: int
    base: int = 2

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dimension must be >= 1")
        if self.base < 2:
            raise ValueError("base must be >= 2")

    def side(self, depth: int) -> int:
        return self.base ** depth

    def n_cells(self, depth: int) -> int:
        return self.base ** (depth * self.dim)

    def cell_measure(self, depth: int) -> Fraction:
        return Fraction(1, self.n_cells(depth))

    def all_cells(self, depth: int) -> Iterable[Cell]:
        return itertools.product(range(self.side(depth)), repeat=self.dim)

    def whole_space(self, depth: int = 0) -> "MeasurableSet":
        return MeasurableSet(self, depth, frozenset(self.all_cells(depth)))

    def empty_set(self) -> "MeasurableSet":
        return MeasurableSet(self, 0, frozenset())

    def cylinder(self, depth: int, prefix: Cell) -> "CylinderSet":
        return CylinderSet(self, depth, tuple(prefix))

    def from_cells(self, depth: int, cells: Iterable[Cell]) -> "MeasurableSet":
        return MeasurableSet(self, depth, frozenset(tuple(c) for c in cells))

    def point(self, seed: int = 0, offset: Vec | None = None) -> "OdometerPoint":
        return OdometerPoint(self, seed, offset or (0,) * self.dim)


@dataclass(frozen=True)
class CylinderSet:
    """A single cylinder: the first ``depth`` digits of every stream fixed.

    ``prefix`` holds, per coordinate, the value of the fixed digits read as an
    integer mod b^depth (digit i contributes digit * b^i).
    """

    space: OdometerSpace
    depth: int
    prefix: Cell

    def __post_init__(self):
        side = self.space.side(self.depth)
        if len(self.prefix) != self.space.dim:
            raise ValueError("prefix dimension mismatch")
        if any(not 0 <= v < side for v in self.prefix):
            raise ValueError("prefix digits out of range")

    def digits(self, axis: int) -> Tuple[int, ...]:
        """Little-endian digit array of the fixed prefix along one axis."""
        v, out = self.prefix[axis], []
        for _ in range(self.depth):
            out.append(v % self.space.base)
            v //= self.space.base
        return tuple(out)

    def measure(self) -> Fraction:
        return self.space.cell_measure(self.depth)

    def to_set(self) -> "MeasurableSet":
        return MeasurableSet(self.space, self.depth, frozenset([self.prefix]))


@dataclass(frozen=True)
class MeasurableSet:
    """Finite disjoint union of equal-depth cylinders, with exact set algebra."""

    space: OdometerSpace
    depth: int
    cells: FrozenSet[Cell]

    def measure(self) -> Fraction:
        return len(self.cells) * self.space.cell_measure(self.depth)

    @property
    def is_empty(self) -> bool:
        return not self.cells

    def refine(self, depth: int) -> "MeasurableSet":
        """Re-express at a finer common depth (children of every cell)."""
        if depth < self.depth:
            raise ValueError("refine target shallower than current depth")
        if depth == self.depth:
            return self
        b, d = self.space.base, self.space.dim
        parent_side = self.space.side(self.depth)
        mult = b ** (depth - self.depth)
        out = set()
        for v in self.cells:
            axes = [[vj + m * parent_side for m in range(mult)] for vj in v]
            out.update(itertools.product(*axes))
        return MeasurableSet(self.space, depth, frozenset(out))

    def reduce(self) -> "MeasurableSet":
        """Coarsen while every parent cell has all its children present."""
        cur = self
        b, d = self.space.base, self.space.dim
        full = b ** d
        while cur.depth > 0:
            side = cur.space.side(cur.depth - 1)
            groups: dict = {}
            for v in cur.cells:
                groups.setdefault(tuple(vj % side for vj in v), []).append(v)
            if groups and all(len(g) == full for g in groups.values()):
                cur = MeasurableSet(cur.space, cur.depth - 1, frozenset(groups))
            else:
                break
        return cur

    def _common(self, other: "MeasurableSet"):
        if self.space != other.space:
            raise ValueError("sets from different spaces")
        p = max(self.depth, other.depth)
        return self.refine(p), other.refine(p)

    def union(self, other: "MeasurableSet") -> "MeasurableSet":
        a, b = self._common(other)
        return MeasurableSet(self.space, a.depth, a.cells | b.cells)

    def intersect(self, other: "MeasurableSet") -> "MeasurableSet":
        a, b = self._common(other)
        return MeasurableSet(self.space, a.depth, a.cells & b.cells)

    def difference(self, other: "MeasurableSet") -> "MeasurableSet":
        a, b = self._common(other)
        return MeasurableSet(self.space, a.depth, a.cells - b.cells)

    def complement(self) -> "MeasurableSet":
        allc = frozenset(self.space.all_cells(self.depth))
        return MeasurableSet(self.space, self.depth, allc - self.cells)

    def translate(self, n: Vec) -> "MeasurableSet":
        """Exact image under the odometer action T_n."""
        side = self.space.side(self.depth)
        return MeasurableSet(
            self.space,
            self.depth,
            frozenset(tuple((vj + nj) % side for vj, nj in zip(v, n)) for v in self.cells),
        )

    def contains_set(self, other: "MeasurableSet") -> bool:
        a, b = self._common(other)
        return b.cells <= a.cells

    def is_disjoint_from(self, other: "MeasurableSet") -> bool:
        a, b = self._common(other)
        return not (a.cells & b.cells)

    def contains_cell(self, cell: Cell, depth: int) -> bool:
        """True iff the given depth >= self.depth cell lies inside this set."""
        if depth < self.depth:
            raise ValueError("cell coarser than set resolution")
        side = self.space.side(self.depth)
        return tuple(c % side for c in cell) in self.cells

    def __eq__(self, other) -> bool:
        if not isinstance(other, MeasurableSet):
            return NotImplemented
        if self.space != other.space:
            return False
        a, b = self._common(other)
        return a.cells == b.cells

    def __hash__(self):
        r = self.reduce()
        return hash((r.space, r.depth, r.cells))

    # -- canonical text form: "depth=p; cells=[(v1,..,vd),...]" sorted --
    def to_text(self) -> str:
        r = self.reduce()
        body = ",".join("(" + ",".join(map(str, c)) + ")" for c in sorted(r.cells))
        return f"depth={r.depth}; cells=[{body}]"

    @staticmethod
    def from_text(space: OdometerSpace, text: str) -> "MeasurableSet":
        head, body = text.split(";", 1)
        depth = int(head.split("=", 1)[1])
        body = body.split("=", 1)[1].strip()
        if not body.startswith("[") or not body.endswith("]"):
            raise ValueError("malformed cell list")
        inner = body[1:-1]
        cells = set()
        if inner:
            for chunk in inner.replace(" ", "").split("),("):
                chunk = chunk.strip("()")
                cells.add(tuple(int(t) for t in chunk.split(",")))
        return MeasurableSet(space, depth, frozenset(cells))


def _seed_digit(seed: int, axis: int, index: int, base: int) -> int:
    h = hashlib.blake2b(
        f"{seed}:{axis}:{index}".encode(), digest_size=8
    ).digest()
    return int.from_bytes(h, "big") % base


class OdometerPoint:
    """A point of the odometer: a seeded digit stream plus an orbit offset.

    The underlying streams are reproducible from (seed, coordinate, index);
    applying T_n just shifts the offset, so the group action law holds
    trivially and carries never need explicit handling.
    """

    __slots__ = ("space", "seed", "offset", "_cache")

    def __init__(self, space: OdometerSpace, seed: int, offset: Vec):
        self.space = space
        self.seed = seed
        self.offset = tuple(offset)
        self._cache: dict = {}

    def _stream_value(self, axis: int, depth: int) -> int:
        key = (axis, depth)
        if key not in self._cache:
            v = 0
            for i in range(depth):
                v += _seed_digit(self.seed, axis, i, self.space.base) * self.space.base ** i
            self._cache[key] = v
        return self._cache[key]

    def residue(self, depth: int) -> Cell:
        side = self.space.side(depth)
        return tuple(
            (self._stream_value(j, depth) + self.offset[j]) % side
            for j in range(self.space.dim)
        )

    def cell_at(self, depth: int) -> CylinderSet:
        return CylinderSet(self.space, depth, self.residue(depth))

    def apply(self, n: Vec) -> "OdometerPoint":
        """The image T_n(point); shares the digit stream, shifts the offset."""
        pt = OdometerPoint(self.space, self.seed, tuple(o + nj for o, nj in zip(self.offset, n)))
        pt._cache = self._cache  # streams identical; cache is shared read-mostly
        return pt

    def in_set(self, A: MeasurableSet) -> bool:
        return self.residue(A.depth) in A.cells


def odometer_apply(n: Vec, x: OdometerPoint) -> OdometerPoint:
    return x.apply(n)


def translate_set(n: Vec, A: MeasurableSet) -> MeasurableSet:
    return A.translate(n)


def box_frequency(A, side: int):
    """Visit frequency of A over the box [0, side)^d along the zero-phase orbit.

    Returns ``(frequency, deviation_bound)``: the exact frequency
    #{k in box : T_k x in A}/side^d for the phase-zero point, together with an
    exact worst-case bound on |frequency - measure(A)| over all phases.  When
    ``side`` is a multiple of b^depth(A) both the deviation and the bound are 0.
    """
    if isinstance(A, CylinderSet):
        A = A.to_set()
    if side < 1:
        raise ValueError("box side must be positive")
    sp = A.space
    s = sp.side(A.depth)
    d = sp.dim

    def axis_count(r: int, phase: int) -> int:
        # #{k in [0, side): (k + phase) % s == r}
        first = (r - phase) % s
        if first >= side:
            return 0
        return (side - 1 - first) // s + 1

    freq = Fraction(
        sum(
            _prod(axis_count(rj, 0) for rj in cell) for cell in A.cells
        ),
        side ** d,
    )
    if side % s == 0:
        return freq, Fraction(0)
    # exact worst case over phases: residue counts only depend on phase mod s
    m = A.measure()
    worst = Fraction(0)
    n_phases = s ** d
    if n_phases <= 65536:
        for phase in itertools.product(range(s), repeat=d):
            f = Fraction(
                sum(
                    _prod(axis_count(rj, pj) for rj, pj in zip(cell, phase))
                    for cell in A.cells
                ),
                side ** d,
            )
            worst = max(worst, abs(f - m))
        return freq, worst
    # fall back to a per-axis interval bound (valid, possibly not tight)
    lo = _prod((side // s) for _ in range(d)) * len(A.cells)
    hi = _prod((side // s + 1) for _ in range(d)) * len(A.cells)
    return freq, max(abs(Fraction(lo, side ** d) - m), abs(Fraction(hi, side ** d) - m))


def _prod(it) -> int:
    out = 1
    for v in it:
        out *= v
    return out
