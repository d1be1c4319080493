"""Value groups G <= R^D given by a finite symmetric generator set.

Group elements are stored as formal integer combinations of the generators,
so all equality tests on construction-produced values are exact.  The float
embedding is only used for norm queries against neighborhood radii.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Tuple

KIND_LATTICE = "lattice"
KIND_DENSE = "dense"
KIND_MIXED = "mixed"

Coords = Tuple[Fraction, ...]


def _rank(vectors) -> int:
    """Rank over Q of a list of rational vectors (Gaussian elimination)."""
    rows = [list(v) for v in vectors]
    rank = 0
    ncols = len(rows[0]) if rows else 0
    for col in range(ncols):
        pivot = next((r for r in range(rank, len(rows)) if rows[r][col] != 0), None)
        if pivot is None:
            continue
        rows[rank], rows[pivot] = rows[pivot], rows[rank]
        prow = rows[rank]
        for r in range(len(rows)):
            if r != rank and rows[r][col] != 0:
                f = rows[r][col] / prow[col]
                rows[r] = [a - f * b for a, b in zip(rows[r], prow)]
        rank += 1
    return rank


@dataclass(frozen=True)
class ValueGroup:
    """A subgroup of R^D generated by a finite symmetric set of vectors.

    ``kind`` declares the closure of the generated subgroup; it is verified
    for lattice kinds (integer generators of full rank) and taken on trust
    for dense kinds, where denseness of irrational generator combinations is
    not decidable from the data.
    """

    dim: int
    generators: Tuple[Coords, ...]
    kind: str = KIND_LATTICE

    def __post_init__(self):
        gens = tuple(tuple(Fraction(c) for c in g) for g in self.generators)
        object.__setattr__(self, "generators", gens)
        if self.kind not in (KIND_LATTICE, KIND_DENSE, KIND_MIXED):
            raise ValueError(f"unknown group kind {self.kind!r}")
        for g in gens:
            if len(g) != self.dim:
                raise ValueError("generator dimension mismatch")
            if all(c == 0 for c in g):
                raise ValueError("0 is not allowed in the generator set")
        gen_set = set(gens)
        for g in gens:
            if tuple(-c for c in g) not in gen_set:
                raise ValueError("generator set must be symmetric")
        if self.kind == KIND_LATTICE:
            if any(c.denominator != 1 for g in gens for c in g):
                raise ValueError("lattice kind requires integer generators")
            if _rank(gens) != self.dim:
                raise ValueError("lattice kind requires full-dimension generators")

    @property
    def n_generators(self) -> int:
        return len(self.generators)

    def zero(self) -> "GroupValue":
        return GroupValue(self, (0,) * self.n_generators)

    def generator(self, i: int) -> "GroupValue":
        coeffs = [0] * self.n_generators
        coeffs[i] = 1
        return GroupValue(self, tuple(coeffs))

    def value(self, coeffs) -> "GroupValue":
        return GroupValue(self, tuple(int(c) for c in coeffs))

    def generator_index(self, coords: Coords) -> int:
        """Index of the generator with the given exact coordinates, or -1."""
        for i, g in enumerate(self.generators):
            if g == tuple(coords):
                return i
        return -1

    def contains_in_generators(self, v: "GroupValue") -> bool:
        """True iff v equals 0 or some generator, as an exact group element."""
        coords = v.coords
        if all(c == 0 for c in coords):
            return True
        return self.generator_index(coords) >= 0


def integer_lattice(dim: int) -> ValueGroup:
    """Z^dim with the signed standard basis as generators."""
    gens = []
    for i in range(dim):
        for s in (1, -1):
            gens.append(tuple(Fraction(s if j == i else 0) for j in range(dim)))
    return ValueGroup(dim, tuple(gens), KIND_LATTICE)


@dataclass(frozen=True)
class GroupValue:
    """Formal integer combination of a value group's generators."""

    group: ValueGroup
    coeffs: Tuple[int, ...]

    def __post_init__(self):
        if len(self.coeffs) != self.group.n_generators:
            raise ValueError("coefficient vector length mismatch")

    @property
    def coords(self) -> Coords:
        """Exact rational coordinates in R^D."""
        acc = [Fraction(0)] * self.group.dim
        for c, g in zip(self.coeffs, self.group.generators):
            if c:
                for j, gj in enumerate(g):
                    acc[j] += c * gj
        return tuple(acc)

    def embed(self) -> Tuple[float, ...]:
        return tuple(float(c) for c in self.coords)

    def sup_norm(self) -> float:
        return max((abs(float(c)) for c in self.coords), default=0.0)

    @property
    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coords)

    def __add__(self, other: "GroupValue") -> "GroupValue":
        self._check(other)
        return GroupValue(self.group, tuple(a + b for a, b in zip(self.coeffs, other.coeffs)))

    def __sub__(self, other: "GroupValue") -> "GroupValue":
        self._check(other)
        return GroupValue(self.group, tuple(a - b for a, b in zip(self.coeffs, other.coeffs)))

    def __neg__(self) -> "GroupValue":
        return GroupValue(self.group, tuple(-a for a in self.coeffs))

    def scale(self, k: int) -> "GroupValue":
        return GroupValue(self.group, tuple(k * a for a in self.coeffs))

    def _check(self, other: "GroupValue"):
        if other.group is not self.group and other.group != self.group:
            raise ValueError("values from different groups")

    # Equality is on the actual group element, not the formal combination:
    # sigma and -(-sigma) are distinct coefficient vectors but equal values.
    def __eq__(self, other) -> bool:
        if not isinstance(other, GroupValue):
            return NotImplemented
        return self.group == other.group and self.coords == other.coords

    def __hash__(self):
        return hash(self.coords)

    def __repr__(self):
        return f"GroupValue({self.coords})"
