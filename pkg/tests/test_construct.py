from fractions import Fraction

import pytest

from skewlab.cocycle import is_incremental, is_internal
from skewlab.construct import (InfeasibleBreadth, Schedule, default_schedule,
                               inductive_step, initial_state, run_construction)
from skewlab.measure import OdometerSpace
from skewlab.values import integer_lattice


def test_default_schedule_shape():
    space, group = OdometerSpace(1, 2), integer_lattice(1)
    gens = [group.generator(0), group.generator(1)]
    windows = [space.whole_space(1), space.from_cells(1, [(0,)])]
    sched = default_schedule(gens, windows, rounds=2)
    assert len(sched.pairs) == 8
    assert sum(sched.epsilons) < 1
    assert all(a > b for a, b in zip(sched.epsilons, sched.epsilons[1:]))


def test_inductive_step_postconditions_d1():
    space, group = OdometerSpace(1, 2), integer_lattice(1)
    state = initial_state(space, group)
    sigma = group.generator(0)
    A = space.whole_space(1)
    eps = Fraction(1, 4)
    new_state, cert, report = inductive_step(state, sigma, A, eps,
                                             depth_limit=10)
    assert report["change_measure"] < eps
    assert cert.residual == 0.0
    assert cert.measured > Fraction(1, 2 ** 5) * A.measure()
    ok, _ = is_internal(new_state.potential, new_state.tower)
    assert ok
    ok, _ = is_incremental(new_state.cocycle)
    assert ok


def test_inductive_step_rejects_bad_inputs():
    space, group = OdometerSpace(1, 2), integer_lattice(1)
    state = initial_state(space, group)
    with pytest.raises(ValueError):
        inductive_step(state, group.generator(0).scale(2),
                       space.whole_space(1), Fraction(1, 4))
    with pytest.raises(ValueError):
        inductive_step(state, group.generator(0), space.empty_set(),
                       Fraction(1, 4))


def test_depth_limit_enforced():
    space, group = OdometerSpace(1, 2), integer_lattice(1)
    state = initial_state(space, group)
    with pytest.raises(InfeasibleBreadth):
        inductive_step(state, group.generator(0), space.whole_space(1),
                       Fraction(1, 1024), depth_limit=2)


def test_two_stage_run_revalidates():
    space, group = OdometerSpace(1, 2), integer_lattice(1)
    sched = Schedule(
        ((group.generator(0), space.whole_space(1)),
         (group.generator(1), space.from_cells(1, [(0,)]))),
        (Fraction(1, 4), Fraction(1, 8)))
    state, log = run_construction(space, group, sched, depth_limit=14)
    assert len(log.revalidations) == 2
    assert all(r["ok"] for r in log.revalidations)
    assert log.total_change < log.epsilon_total
    assert len(log.issued) == 2
    jsonable = log.to_jsonable()
    assert set(jsonable) >= {"stages", "revalidations", "total_change_measure"}
