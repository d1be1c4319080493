from hypothesis import given, strategies as st

from skewlab.lattice import (add, basis_vector, box_region, neg,
                             region_boundary, region_interior, sigma_ball,
                             sub, word_metric, word_norm, zero)

vecs2 = st.tuples(st.integers(-20, 20), st.integers(-20, 20))


def test_word_norm_pins():
    assert word_norm((0, 0)) == 0
    assert word_norm((2, -1), "l1") == 3
    assert word_norm((2, -1), "linf") == 2


def test_basis_and_zero():
    assert zero(3) == (0, 0, 0)
    assert basis_vector(3, 1) == (0, 1, 0)
    assert basis_vector(2, 0, sign=-1) == (-1, 0)


@given(vecs2, vecs2)
def test_norm_triangle_inequality(n, m):
    for kind in ("l1", "linf"):
        assert word_norm(add(n, m), kind) <= word_norm(n, kind) + word_norm(m, kind)
        assert word_norm(n, kind) == word_norm(neg(n), kind)
    assert (word_norm(n) == 0) == (n == (0, 0))


@given(vecs2, vecs2)
def test_metric_symmetry(n, m):
    assert word_metric(n, m) == word_metric(m, n)
    assert word_metric(n, n) == 0
    assert sub(add(n, m), m) == n


def test_sigma_ball_sizes():
    assert sigma_ball((0,), 2) == frozenset({(-2,), (-1,), (0,), (1,), (2,)})
    assert len(sigma_ball((0, 0), 1, "linf")) == 9
    assert len(sigma_ball((0, 0), 1, "l1")) == 5


def test_sigma_ball_center_translation():
    shifted = sigma_ball((3, -1), 1, "l1")
    assert shifted == frozenset(add(p, (3, -1)) for p in sigma_ball((0, 0), 1, "l1"))


def test_interior_boundary_partition():
    box = box_region((0, 0), (3, 3))
    inner = region_interior(box)
    edge = region_boundary(box)
    assert inner | edge == box
    assert not inner & edge
    assert inner == box_region((1, 1), (2, 2))


def test_box_region_counts():
    # hi is exclusive
    assert len(box_region((0,), (4,))) == 4
    assert len(box_region((-1, -1), (1, 1))) == 4
    assert box_region((0,), (0,)) == frozenset()
