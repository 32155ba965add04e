import mpmath as mp
import pytest

from escape_lab import (Annulus, ParameterError, Refusal, certify_covering, construct_oscillating,
                        construct_slow_point, construct_two_sided, feasibility_check, make_map)
from escape_lab.chain import AnnulusChain, ChainStep
from escape_lab.construct import oscillation_summary
from conftest import monomial


def mp_moduli(zeta, n, f=mp.exp, dps=200):
    with mp.workdps(dps):
        z = mp.mpc(mp.mpf(str(zeta.real)), mp.mpf(str(zeta.imag)))
        out = [float(abs(z))]
        for _ in range(n):
            z = f(z)
            out.append(float(abs(z)))
    return out


@pytest.fixture(scope="module")
def slow():
    return construct_slow_point(make_map("exp_scaled"), "sqrt_plus:b=10", 30)


@pytest.fixture(scope="module")
def two_sided():
    return construct_two_sided(make_map("exp_scaled"), "linear:alpha=5", 2, 1, 20)


@pytest.fixture(scope="module")
def oscillating():
    return construct_oscillating(make_map("exp_scaled"), 10, 24)


@pytest.mark.slow
def test_slow_point_bounded_by_sequence(slow):
    assert slow.all_ok and slow.N0 == 0
    assert slow.schedule is not None and slow.schedule.valid
    mods = mp_moduli(slow.zeta, 30)
    for n, r in enumerate(mods):
        assert r <= 10 + n ** 0.5 + 1e-9


@pytest.mark.slow
def test_two_sided_band(two_sided):
    assert two_sided.all_ok
    C = two_sided.extra["C"]
    assert C == 64
    for n, r in enumerate(mp_moduli(two_sided.zeta, 20)):
        a = 5 * (n + 1)
        assert a <= r <= C * a
    assert all(step.certificate.certified for step in two_sided.chain.steps[1:])


@pytest.mark.slow
def test_oscillation(oscillating):
    mods = mp_moduli(oscillating.zeta, 24)
    summary = oscillation_summary(mods, 10)
    assert summary["oscillations"] >= 3
    assert summary["max_modulus"] > 1e3
    assert summary["reentries"] == oscillating.extra["reentries"]


@pytest.mark.slow
def test_reports_serialize(slow, two_sided):
    d = slow.to_dict()
    assert d["kind"] == "slow_point" and d["all_ok"]
    assert two_sided.csv().startswith("n,a_n,modulus")
    assert len(two_sided.csv().splitlines()) == 22


def test_injected_chain_for_square():
    m = monomial(2)
    regions = [Annulus(0, 2, 3), Annulus(0, 4.5, 8.5), Annulus(0, 21, 70),
               Annulus(0, 450, 4800)]
    steps = [ChainStep(regions[0], "start", 1.58, 0.0)]
    for a, b in zip(regions, regions[1:]):
        cert = certify_covering(m, a, b)
        assert cert.certified
        steps.append(ChainStep(b, "direct", 1.0, 0.0, cert))
    chain = AnnulusChain(m.label, steps)
    report = construct_slow_point(m, "linear:alpha=5000", 3, chain=chain)
    assert report.all_ok
    mods = mp_moduli(report.zeta, 3, f=lambda z: z ** 2)
    for r, a in zip(mods, regions):
        assert a.r_in <= r <= a.r_out


def test_square_has_no_self_loop():
    with pytest.raises(Refusal) as err:
        construct_slow_point(monomial(2), "linear:alpha=5000", 3)
    assert err.value.reason == "no_loop_available"


def test_bounded_sequence_rejected(exp1):
    with pytest.raises(ParameterError):
        construct_slow_point(exp1, [5.0] * 11, 10)
    with pytest.raises(ParameterError):
        construct_slow_point(exp1, "linear", 0)


def test_two_sided_growth_violated(exp1):
    with pytest.raises(Refusal) as err:
        construct_two_sided(exp1, [2.0, 1e10, 2e10, 3e10], 2, 1, 2)
    assert err.value.reason == "growth_violated"


def test_two_sided_needs_small_minimum(square):
    with pytest.raises(Refusal) as err:
        construct_two_sided(square, "linear:alpha=5", 2, 1, 2)
    assert err.value.reason == "hypothesis_failed"


def test_two_sided_argument_checks(exp1):
    with pytest.raises(ParameterError):
        construct_two_sided(exp1, "linear", 1, 1, 3)


def test_oscillation_summary_counts():
    s = oscillation_summary([1, 20, 5, 30, 40, 2, 3], 10)
    assert s["reentries"] == [2, 5] and s["oscillations"] == 2
    assert s["running_max"] == [1, 20, 20, 30, 40, 40, 40]
    assert oscillation_summary([1, 20], 10)["oscillations"] == 0


def test_feasibility():
    ok = feasibility_check(make_map("exp_scaled"), 1e2, 1e6, 0.25, 32)
    assert not ok.flagged
    q = feasibility_check(make_map("quarter_cos"), 1e2, 1e6, 0.25, 32)
    assert q.flagged and q.intervals == [(100.0, 1e6)]
    assert q.to_dict()["flagged"]
    with pytest.raises(ParameterError):
        feasibility_check(make_map("exp_scaled"), 10, 1, 0.25)
