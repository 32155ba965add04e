import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from escape_lab import Refusal, make_map
from escape_lab.covering import (bl_constant_probe, bohr_cover, certify_covering,
                                 harnack_bound_check, harnack_cover, preimage_annulus)
from escape_lab.regions import Annulus, Disc
from conftest import monomial
from oracles import monomial_covers


def test_square_covers(square):
    cert = certify_covering(square, Annulus(0, 1, 2), Annulus(0, 1.5, 3.5))
    assert cert.certified and cert.margin > 0
    assert cert.samples >= 8192


def test_cube_refused():
    cert = certify_covering(monomial(3), Annulus(0, 1, 2), Annulus(0, 9, 100))
    assert not cert.certified
    assert cert.reason == "no_separation"


def test_exp_covers_large_annulus(exp1):
    cert = certify_covering(exp1, Annulus(0, 1, 8), Annulus(0, 3, 243))
    assert cert.certified


def test_certificate_serializes(square):
    cert = certify_covering(square, Annulus(0, 1, 2), Annulus(0, 1.5, 3.5))
    d = cert.to_dict()
    assert d["verdict"] == "certified"
    assert d["source"]["kind"] == "annulus"
    assert "windings" in d and "samples" in d


def test_pole_disc_covers_far_disc():
    m = make_map("half_tan")
    cert = certify_covering(m, Disc(math.pi / 2, 0.5), Disc(3 * math.pi / 2, 0.5))
    assert cert.certified
    assert cert.winding_evidence["poles_inside"] == 1


def test_pole_on_annulus_source_refused():
    m = make_map("sin_pole")
    cert = certify_covering(m, Annulus(0, 2, 4), Annulus(0, 5, 6))
    assert not cert.certified
    assert cert.reason == "analyticity_precondition_failed"


def test_bohr_near(exp1):
    which, cert = bohr_cover(exp1, 4, 0.5, 3, 1e6, prefer="near")
    assert which == "near" and cert.certified
    assert cert.target == Annulus(0, 3, 243)
    assert any("cL" in a or "L" in a for a in cert.assumptions)


def test_bohr_far_falls_back(exp1):
    which, cert = bohr_cover(exp1, 4, 0.5, 3, 1e6, prefer="far")
    # the far target A(1e6, 1e30) is not reached from A(4, 32)
    assert which == "near" and cert.certified
    assert cert.details.get("preference_miss")


def test_bohr_hypothesis_unverified():
    with pytest.raises(Refusal) as exc:
        bohr_cover(make_map("poly_exp", {"p": [1e10, 0, 1]}), 1, 0.5, 3, 1e6)
    assert exc.value.reason == "hypothesis_unverified"


@pytest.mark.parametrize("r", [8, 16])
def test_bohr_some_target_certifies(exp1, r):
    which, cert = bohr_cover(exp1, r, 0.5, 3, 1e6)
    assert cert.certified


def test_harnack_monomial_equal_sides():
    rep = harnack_bound_check(monomial(40), math.exp(50), 2, n_hyp=8)
    assert rep.violations == []
    for rho, lm, rhs, ok in rep.rows:
        assert lm == pytest.approx(40 * math.log(rho), rel=1e-9)


def test_harnack_exp_unverified(exp1):
    with pytest.raises(Refusal) as exc:
        harnack_bound_check(exp1, math.exp(50), 2)
    assert exc.value.reason == "hypothesis_unverified"


def test_harnack_sextic():
    m = make_map("poly_exp", {"p": [0, 1, 0, 0, 0, 0, 1]})
    rep = harnack_bound_check(m, math.exp(45), 2, n_hyp=16)
    assert rep.violations == [] and len(rep.rows) == 64


def test_harnack_cover_small_s_refused():
    # s = sqrt(ln 10) is far below 2π, so the hypothesis cannot be verified
    with pytest.raises(Refusal) as exc:
        harnack_cover(monomial(5), 10, 5)
    assert exc.value.reason == "hypothesis_unverified"


def test_harnack_cover_out_of_float_range():
    # a positive target exponent needs s > 12, i.e. radii beyond e^144
    m = make_map("poly_exp", {"p": [0, 1, 0, 0, 0, 0, 1]})
    with pytest.raises(Refusal) as exc:
        harnack_cover(m, math.exp(256), 5)
    assert exc.value.reason in ("out_of_range", "hypothesis_unverified")


def test_preimage_square(square):
    tr = preimage_annulus(square, Annulus(0, 4, 16), Annulus(0, 1, 8))
    inner, outer = tr.radii()
    assert np.max(np.abs(inner - 2)) < 1e-9
    assert np.max(np.abs(outer - 4)) < 1e-9
    assert tr.loops == (2, 2)


def test_preimage_cube():
    tr = preimage_annulus(monomial(3), Annulus(0, 8, 27), Annulus(0, 1, 4))
    inner, outer = tr.radii()
    assert np.allclose(inner, 2, atol=1e-9) and np.allclose(outer, 3, atol=1e-9)


def test_preimage_exp_nonunique(exp1):
    target = Annulus(0, math.e ** 2 * 1.1, math.e ** 3 * 0.9)
    with pytest.raises(Refusal) as exc:
        preimage_annulus(exp1, target, Annulus(0, 2, 3))
    assert exc.value.reason == "nonunique_branch_detected"


def test_bl_constant():
    probe = bl_constant_probe(make_map("poly_exp", {"p": [5]}), 0, 1, Annulus(0, 1, 4))
    assert probe.L_emp == pytest.approx(math.log(5) / math.log(7), rel=1e-9)
    assert probe.L_emp < 1


def test_bl_identity():
    # g = (z + 10)/20 on |z| = 2: max |g| = 0.6 and g(z0) = 0.6
    probe = bl_constant_probe(make_map("poly_exp", {"p": [0, 1]}), -10, 10, Annulus(0, 1, 4))
    assert probe.L_emp == pytest.approx(math.log(0.6) / math.log(2.6), rel=1e-9)


def test_bl_attained_value():
    with pytest.raises(Refusal) as exc:
        bl_constant_probe(make_map("poly_exp", {"p": [0, 1]}), 2, 10, Annulus(0, 1, 4))
    assert exc.value.reason == "omission_check_failed"


def _monomial_instance(data):
    d = data.draw(st.integers(2, 6))
    r = data.draw(st.floats(1.0, 2.0))
    R = r * data.draw(st.floats(1.3, 3.0))
    lo, hi = math.log(r ** d), math.log(R ** d)
    a = data.draw(st.floats(lo - 1, hi + 1))
    b = data.draw(st.floats(a + 0.05, hi + 1.5))
    for t in (a, b):
        for edge in (lo, hi):
            if abs(t - edge) < 0.01:
                return None
    return d, r, R, math.exp(a), math.exp(b)


@settings(max_examples=25)
@given(st.data())
def test_monomial_oracle(data):
    inst = _monomial_instance(data)
    if inst is None:
        return
    d, r, R, a, b = inst
    cert = certify_covering(monomial(d), Annulus(0, r, R), Annulus(0, a, b))
    assert cert.certified == monomial_covers(d, r, R, a, b)


@settings(max_examples=10)
@given(st.data())
def test_certified_stays_certified_at_double_resolution(data):
    inst = _monomial_instance(data)
    if inst is None:
        return
    d, r, R, a, b = inst
    m = monomial(d)
    c1 = certify_covering(m, Annulus(0, r, R), Annulus(0, a, b), n_samples=1024)
    if c1.certified:
        c2 = certify_covering(m, Annulus(0, r, R), Annulus(0, a, b), n_samples=2048)
        assert c2.certified


@settings(max_examples=10)
@given(st.integers(2, 5), st.floats(1.5, 3), st.floats(1.5, 3))
def test_preimage_round_trip(d, t_in, ratio):
    m = monomial(d)
    target = Annulus(0, t_in, t_in * ratio)
    search = Annulus(0, t_in ** (1 / d) / 1.5, (t_in * ratio) ** (1 / d) * 1.5)
    tr = preimage_annulus(m, target, search)
    assert tr.max_residual < 1e-8
    for curve in (tr.inner, tr.outer):
        assert all(search.contains(z) for z in curve)
        t = np.unwrap(np.angle(curve))
        assert round((t[-1] - t[0] + (t[1] - t[0])) / (2 * np.pi)) == 1
