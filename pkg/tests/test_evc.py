from fractions import Fraction

import pytest

from skewlab.cocycle import BoxBump, CoboundaryCocycle, PotentialFunction
from skewlab.evc import (EvcCertificate, Holonomy, HolonomyPiece,
                         certificate_from_json, certificate_to_json,
                         check_evc, essential_value_scan, frac_parse,
                         frac_str, generator_difference_measure,
                         holonomy_compose, holonomy_invert,
                         identity_holonomy, stability_recheck)
from skewlab.measure import OdometerSpace, translate_set
from skewlab.values import integer_lattice


@pytest.fixture
def setting():
    space, group = OdometerSpace(1, 2), integer_lattice(1)
    A = space.whole_space(1)
    zero_cocycle = CoboundaryCocycle(PotentialFunction(space, group))
    return space, group, A, zero_cocycle


def test_frac_round_trip():
    for q in (Fraction(3, 7), Fraction(-1, 2), Fraction(0), Fraction(5)):
        assert frac_parse(frac_str(q)) == q


def test_holonomy_algebra(setting):
    space, group, A, _ = setting
    D = space.from_cells(2, [(0,)])
    hol = Holonomy((HolonomyPiece(D, (1,)),))
    inv = holonomy_invert(hol)
    assert inv.pieces[0].domain == translate_set((1,), D)
    assert inv.pieces[0].shift == (-1,)
    comp = holonomy_compose(inv, hol)
    assert comp is not None
    assert comp.domain() == D and comp.pieces[0].shift == (0,)


def test_check_evc_zero_cocycle(setting):
    space, group, A, F = setting
    hol = identity_holonomy(space.from_cells(1, [(0,)]))
    cert, report = check_evc(F, hol, A, group.zero(), radius=1e-9,
                             threshold=Fraction(1, 4))
    assert cert is not None and report.ok
    assert report.residual == 0.0
    assert cert.measured == Fraction(1, 2)


def test_check_evc_failing_clauses(setting):
    space, group, A, F = setting
    half = space.from_cells(1, [(0,)])
    hol = identity_holonomy(half)
    # threshold not strictly beaten
    cert, report = check_evc(F, hol, A, group.zero(), 1e-9, Fraction(1, 2))
    assert cert is None and report.failing_clause == "measured_too_small"
    # transfer is 0, ball around generator misses it
    cert, report = check_evc(F, hol, A, group.generator(0), 1e-9, Fraction(1, 4))
    assert cert is None and report.failing_clause == "transfer_outside_ball"
    # domain outside the window
    cert, report = check_evc(F, hol, half.complement().intersect(half), group.zero(),
                             1e-9, Fraction(1, 4))
    assert cert is None


def test_certificate_json_round_trip(setting):
    space, group, A, F = setting
    hol = identity_holonomy(space.from_cells(1, [(1,)]))
    cert, _ = check_evc(F, hol, A, group.zero(), 1e-9, Fraction(1, 4), stage=3)
    text = certificate_to_json(cert, F.f)
    back, cocycle = certificate_from_json(text)
    assert back.stage == 3 and back.measured == cert.measured
    assert cocycle is not None
    recheck, report = check_evc(cocycle, back.holonomy, back.window,
                                back.target, back.radius, back.threshold)
    assert recheck is not None and recheck.measured == cert.measured


def test_stability_recheck_excises_exactly(setting):
    space, group, A, F = setting
    hol = identity_holonomy(space.whole_space(2))
    cert, _ = check_evc(F, hol, A, group.zero(), 1e-9, Fraction(1, 4), stage=1)
    # perturb the cocycle on one depth-2 cell: that fiber must be excised
    bumped = PotentialFunction(space, group).with_bump(
        BoxBump(2, (1,), (2,), group.generator(0)))
    G = CoboundaryCocycle(bumped)
    assert generator_difference_measure(G, F, 2) > 0
    ok, report = stability_recheck(G, F, cert)
    assert report["excised_measure"] == 0  # identity holonomy: transfer still 0
    assert ok


def test_essential_value_scan_zero_always_found(setting):
    space, group, A, F = setting
    hits = essential_value_scan(F, A, group.zero(), radius=1e-9, max_norm=2)
    assert hits and any(h["shift"] == (0,) for h in hits)
    assert all(h["measure"] > 0 for h in hits)
    # no witness for an unreachable value of the zero cocycle
    assert not essential_value_scan(F, A, group.generator(0), 1e-9, 2)
