from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from skewlab.values import GroupValue, ValueGroup, integer_lattice


def test_integer_lattice_generators():
    G = integer_lattice(2)
    assert G.dim == 2
    assert G.n_generators == 4  # signed standard basis
    coords = [g.coords for i, g in enumerate(G.generator(i) for i in range(4))]
    assert coords == [(1, 0), (-1, 0), (0, 1), (0, -1)]


def test_value_arithmetic_exact():
    G = integer_lattice(1)
    plus, minus = G.generator(0), G.generator(1)
    assert (plus + minus).coords == (Fraction(0),)
    assert (plus - minus).coords == (Fraction(2),)
    assert (-plus).coords == (Fraction(-1),)
    assert plus.scale(3).coords == (Fraction(3),)
    assert G.zero().is_zero


def test_sup_norm_and_embed():
    G = integer_lattice(2)
    v = G.generator(0) + G.generator(2).scale(-3)
    assert v.embed() == (1.0, -3.0)
    assert v.sup_norm() == 3.0


def test_generator_membership():
    G = integer_lattice(2)
    assert G.contains_in_generators(G.zero())
    assert G.contains_in_generators(G.generator(1))
    assert not G.contains_in_generators(G.generator(0).scale(2))


def test_coefficient_length_checked():
    G = integer_lattice(1)
    with pytest.raises(ValueError):
        GroupValue(G, (1, 0, 0))


coeffs = st.tuples(*[st.integers(-5, 5)] * 4)


@given(coeffs, coeffs)
def test_group_laws(a, b):
    G = integer_lattice(2)
    x, y = GroupValue(G, a), GroupValue(G, b)
    assert (x + y).coords == (y + x).coords
    assert (x - y).coords == (x + (-y)).coords
    assert (x + G.zero()).coords == x.coords
