from fractions import Fraction

from skewlab.measure import OdometerSpace
from skewlab.towers import (build_box_tower, build_tower, is_pure, purify)


def test_box_tower_is_exact():
    space = OdometerSpace(1, 2)
    tower = build_box_tower(space, 3)
    assert tower.error() == 0
    assert tower.is_disjoint()
    assert len(tower.levels) == 8
    assert tower.support().measure() == 1


def test_box_tower_d2():
    space = OdometerSpace(2, 2)
    tower = build_box_tower(space, 2)
    assert tower.error() == 0
    assert len(tower.levels) == 16
    assert tower.base.measure() == Fraction(1, 16)


def test_interior_boundary_split():
    space = OdometerSpace(1, 2)
    tower = build_box_tower(space, 3)
    inner, edge = tower.interior_levels(), tower.boundary_levels()
    assert inner | edge == tower.levels
    assert not inner & edge
    assert tower.interior().union(tower.boundary()) == tower.support()


def test_build_tower_meets_error_budget():
    space = OdometerSpace(1, 2)
    tower = build_tower(space, breadth=2, epsilon=Fraction(1, 4))
    assert tower.is_disjoint()
    assert tower.error() <= Fraction(1, 4)


def test_purification_is_pure():
    space = OdometerSpace(1, 2)
    tower = build_box_tower(space, 3)
    A = space.from_cells(1, [(0,)])
    B = space.from_cells(2, [(1,), (2,)])
    pur = purify(tower, [A, B])
    castle = pur.castle()
    # blocks tile the base and every refined tower is pure
    total = Fraction(0)
    for sub in pur.towers():
        assert is_pure(sub, [A, B])
        total += sub.base.measure()
    assert total == tower.base.measure()
    assert castle.support() == tower.support()
