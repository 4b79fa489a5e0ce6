from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from gurarii.amalgam import (amalgamate, amalgamate_bijective, cutoff, extend_isometry,
                             pushout_l1, quotient_norm_lp, trivial_amalgam)
from gurarii.engine import (ChainSpace, ChainSubspace, approximate_inverse, back_and_forth,
                            embed_universal, gurarii_extend, schedule_make, step_bound)
from gurarii.errors import (CertificateError, ChainExhausted, DefectTooLarge, ScheduleError)
from gurarii.instances import random_chain, random_injective_map, random_space
from gurarii.operators import LinearMap, compose, defect, identity_map
from gurarii.spaces import l1, linf, norm, zero_space

seeds = st.integers(0, 10 ** 6)


def scalar(X, Y, c):
    return LinearMap(X, Y, ((F(c),),))


# -- amalgam ------------------------------------------------------------------

def test_cutoff():
    assert cutoff(F(3, 5)) == F(3, 8)
    assert cutoff(1) == F(1, 2)


def test_worked_one_dimensional_amalgam(line):
    cert = amalgamate(line, line, scalar(line, line, F(3, 2)), F(3, 5)).verify()
    assert cert.eps1 == F(3, 8)
    assert cert.bound_achieved == F(9, 16)
    assert cert.Z.dimension == 2


def test_eps_not_above_defect_is_rejected(line):
    with pytest.raises(DefectTooLarge):
        amalgamate(line, line, scalar(line, line, F(3, 2)), F(1, 2))


def test_identity_shortcut(square):
    f = identity_map(square)
    cut = amalgamate(square, square, f, F(1, 4))
    assert cut.bound_achieved == F(1, 4) / F(5, 4)
    triv = amalgamate(square, square, f, F(1, 4), shortcut=True)
    assert triv.kind == "trivial" and triv.bound_achieved == 0
    with pytest.raises(DefectTooLarge):
        trivial_amalgam(scalar(l1(1), l1(1), 2), 2)


def test_quotient_amalgam_matches_lp(line, hexagon):
    f = LinearMap(line, hexagon, ((F(11, 10),), (F(0),)))
    cert = amalgamate(line, hexagon, f, F(1, 5)).verify()
    assert cert.kind == "quotient" and cert.Z.dimension == 3
    for x, y in [((1,), (0, 0)), ((0,), (1, 1)), ((F(1, 2),), (F(-1, 3), 2))]:
        assert norm(cert.Z, tuple(x) + tuple(y)) == quotient_norm_lp(cert, x, y)


@settings(max_examples=15)
@given(seeds, st.integers(1, 2))
def test_bijective_amalgam_certificates(seed, d):
    X, Y = random_space(seed, d), random_space(seed + 1, d)
    f = random_injective_map(seed, X, Y)
    eps = defect(f).epsilon_star + F(1, 3)
    cert = amalgamate_bijective(X, Y, f, eps)
    assert all(cert.checks().values())
    assert cert.bound_achieved <= cutoff(eps) * max(1, defect(f).sup_value)


def test_pushout_examples(line, square):
    inc = LinearMap(line, square, ((1,), (0,)))
    po = pushout_l1(line, square, inc, line, scalar(line, line, 1))
    assert po.W.dimension == 2 and po.weight == 1
    assert compose(po.f_prime, inc).matrix == compose(po.y_embed, po.f).matrix
    expanding = pushout_l1(line, square, inc, line, scalar(line, line, F(3, 2)))
    assert expanding.weight == F(3, 2)
    assert defect(expanding.y_embed).epsilon_star == 0


def test_extend_isometry_worked(line, square):
    inc = LinearMap(line, square, ((1,), (0,)))
    cert = extend_isometry(line, square, inc, line, scalar(line, line, F(3, 2)), F(3, 5)).verify()
    assert cert.distance == F(9, 16)
    assert defect(cert.g).epsilon_star == 0


# -- chains and the oracle --------------------------------------------------------

def test_chain_rejects_non_isometric_inclusion(line):
    with pytest.raises(CertificateError):
        ChainSpace([line, line], [scalar(line, line, 2)])


def test_gurarii_extend_logs_and_fixes_subspace(line, square):
    E = ChainSpace.from_space(line, "E")
    X = ChainSubspace.build(E, 0, [(1,)])
    k = LinearMap(line, square, ((1,), (0,)))
    res = gurarii_extend(E, X, square, k, F(1, 10))
    assert res.stage == 1 and len(E.oracle_log) == 1
    assert E.oracle_log[0]["delta"] == "1/10"
    assert compose(res.h, k).matrix == E.transport(0)
    assert defect(res.h).epsilon_star == 0


def test_approximate_inverse_worked(line):
    E = ChainSpace.from_space(line, "E")
    X = ChainSubspace.build(E, 0, [(1,)])
    cert = approximate_inverse(E, X, scalar(X.space, line, F(3, 2)), F(3, 5), F(1, 10), shortcut=False)
    assert (cert.eps_prime, cert.delta_prime) == (F(11, 20), F(1, 22))
    assert cert.distance == F(33, 62)
    assert all(cert.checks().values())


def test_chain_exhaustion(line):
    E = ChainSpace([zero_space(), line], [LinearMap(zero_space(), line, ((),))], finite=False)
    assert E.presentation_stage(1) == 1
    with pytest.raises(ChainExhausted):
        E.presentation_stage(2)
    E.finite = True
    assert E.presentation_stage(5) == 1


def test_random_chain_inclusions_exact():
    C = random_chain(4, [1, 2, 3])
    assert [s.dimension for s in C.stages] == [1, 2, 3]
    for inc in C.inclusions:
        assert defect(inc).epsilon_star == 0


# -- schedules ----------------------------------------------------------------

def brute_total(s, n_terms=60):
    eps = [s.eps0 * s.ratio ** n for n in range(n_terms + 1)]
    return sum(step_bound(eps[n], eps[n + 1]) for n in range(n_terms))


def test_schedule_example():
    s = schedule_make(F(1, 10), F(1, 100), F(1, 4), 6)
    assert s.terms[:3] == (F(1, 100), F(1, 400), F(1, 1600))
    assert s.holds() and s.slack > 0
    # closed form against a long partial sum: partial sums increase to the total
    assert brute_total(s) < s.total
    assert s.total - brute_total(s) < F(1, 10 ** 30)


def test_schedule_rejects_eps0_equal_target():
    with pytest.raises(ScheduleError) as info:
        schedule_make(F(1, 10), F(1, 10))
    assert info.value.deficit > 0


@given(st.integers(1, 50), st.integers(2, 9), st.integers(0, 8))
def test_schedule_tail_closed_form(t, inv_ratio, depth):
    try:
        s = schedule_make(F(t, 10), F(t, 200), F(1, inv_ratio), depth)
    except ScheduleError:
        return
    assert sum(s.step_bounds) + s.tail_bound == s.total
    assert brute_total(s, depth + 80) <= s.total


# -- back and forth and universality ----------------------------------------

def test_identity_seed_back_and_forth(line, square):
    E = ChainSpace([line, square], [LinearMap(line, square, ((1,), (0,)))], "E")
    X = ChainSubspace.build(E, 0, [(1,)])
    tr = back_and_forth(E, E, X, LinearMap(X.space, line, ((1,),)), schedule_make(F(1, 2)))
    assert all(tr.checks().values())
    assert tr.final_distance[0] == 0


def test_worked_back_and_forth(line, square, hexagon):
    E = ChainSpace([line, square], [LinearMap(line, square, ((1,), (0,)))], "E")
    Fc = ChainSpace([line, hexagon], [LinearMap(line, hexagon, ((1,), (0,)))], "F")
    X = ChainSubspace.build(E, 0, [(1,)])
    f = LinearMap(X.space, line, ((F(21, 20),),))
    tr = back_and_forth(E, Fc, X, f, schedule_make(F(3, 5), F(11, 20), F(1, 50), 4))
    checks = tr.checks()
    assert all(checks.values()), [k for k, v in checks.items() if not v]
    assert tr.final_distance[0] < F(3, 5)


def test_embed_universal_small(line):
    X = ChainSpace([zero_space(), line, l1(2)],
                   [LinearMap(zero_space(), line, ((),)), LinearMap(line, l1(2), ((1,), (0,)))])
    G = ChainSpace.from_space(linf(1), "G")
    tr = embed_universal(X, G, 3)
    assert all(tr.checks().values())
    for step in tr.steps:
        assert all(step.checks().values())
