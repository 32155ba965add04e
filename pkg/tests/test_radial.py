import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from escape_lab import ParameterError, make_map
from escape_lab.radial import (find_min_modulus_radius, growth_ratio_check, hadamard_check,
                               max_modulus, min_modulus, profile, profile_from_list,
                               profiles_to_csv, scan_profile)
from oracles import dense_circle_extrema

ENTIRE = ["exp_scaled", "fatou_baker", "sine_shift", "exp_shift", "bergweiler_baker",
          "quarter_cos"]


def test_exp_extrema(exp1):
    assert max_modulus(exp1, 2).value == pytest.approx(math.e ** 2, rel=1e-12)
    assert min_modulus(exp1, 2).value == pytest.approx(math.e ** -2, rel=1e-12)
    assert abs(max_modulus(exp1, 2).theta % (2 * math.pi)) < 1e-6 or \
        abs(max_modulus(exp1, 2).theta - 2 * math.pi) < 1e-6


def test_square_extrema(square):
    assert max_modulus(square, 3).value == pytest.approx(9)
    assert min_modulus(square, 3).value == pytest.approx(9)


def test_fatou_baker_max_against_dense_scan():
    # dense 2^20 scan with local refinement
    assert max_modulus(make_map("fatou_baker"), 10).value == pytest.approx(
        22017.465794806718, rel=1e-9)


def test_sine_shift_min_against_dense_scan():
    assert min_modulus(make_map("sine_shift"), 20).value == pytest.approx(
        14.629759943548041, rel=1e-9)


def test_scan_profile_exp(exp1):
    rows = scan_profile(exp1, 1, 4, 4, "linear")
    assert [r.max_mod for r in rows] == pytest.approx([math.e ** k for k in range(1, 5)])
    assert [r.min_mod for r in rows] == pytest.approx([math.e ** -k for k in range(1, 5)])


def test_quarter_cos_profile_monotone():
    rows = scan_profile(make_map("quarter_cos"), 10, 1e4, 40, "log")
    col = [r.max_mod for r in rows]
    assert all(b > a for a, b in zip(col, col[1:]))
    for r in rows[::13]:
        assert r.max_mod == pytest.approx(max_modulus(make_map("quarter_cos"), r.r).value)


def test_csv_has_header_and_comment(exp1):
    text = profiles_to_csv(profile_from_list(exp1, [1, 2]), "hello")
    lines = text.splitlines()
    assert lines[0] == "# hello"
    assert lines[1].startswith("r,max_mod")
    assert len(lines) == 4


def test_circle_through_pole_is_unbounded():
    ext = max_modulus(make_map("half_tan"), math.pi / 2)
    assert ext.unbounded and math.isinf(ext.value)


def test_min_modulus_radius_exp(exp1):
    res = find_min_modulus_radius(exp1, 5, 2, 1)
    assert res.found and 5 < res.rho < 10


def test_min_modulus_radius_not_found():
    m = make_map("poly_exp", {"p": [100, 0, 1]})
    res = find_min_modulus_radius(m, 1, 2, 1)
    assert not res.found
    assert res.sampled_min >= 96


def test_min_modulus_radius_sine_shift():
    # the dense scan puts the first sampled radius with m <= 10 at 50 * 2^(9/65)
    res = find_min_modulus_radius(make_map("sine_shift"), 50, 2, 10)
    assert res.rho == pytest.approx(50 * 2 ** (9 / 65))
    assert res.value == pytest.approx(1.8567334776128535, rel=1e-8)


def test_hadamard_exp_and_cubic(exp1):
    # ln M(r^c) = r^c against c ln M(r) = c r: fails exactly below r = c^(1/(c-1))
    rep = hadamard_check(exp1, 1.5, 30, 12, [1.5, 2])
    for r, c, lhs, rhs in rep.violations:
        assert r < c ** (1 / (c - 1))
    for r, c, lhs, rhs, ok in rep.table:
        assert ok == (r ** c >= c * r - 1e-9 * c * r)
    assert 2.25 <= rep.estimated_R1 < 3.0
    assert hadamard_check(exp1, 2.3, 30, 12, [1.5, 2]).violations == []
    cubic = make_map("poly_exp", {"p": [0, 0, 0, 1]})
    rep = hadamard_check(cubic, 2, 100, 10, [1.5, 2])
    assert rep.violations == []
    for r, c, lhs, rhs, ok in rep.table:
        assert lhs == pytest.approx(rhs, rel=1e-9)


def test_hadamard_bergweiler():
    rep = hadamard_check(make_map("bergweiler_baker"), 2, 100, 30, [1.5, 2, 3])
    assert rep.estimated_R1 == pytest.approx(2.0)
    assert rep.checked == 90


def test_hadamard_rejects_bad_c(exp1):
    with pytest.raises(ParameterError):
        hadamard_check(exp1, 2, 10, 3, [1.0])


def test_growth_ratio(exp1, square):
    rows, mono = growth_ratio_check(exp1, 2, [1, 2, 4])
    assert [r.ratio for r in rows] == pytest.approx([math.e, math.e ** 2, math.e ** 4])
    assert mono
    rows, _ = growth_ratio_check(square, 2, [1, 5, 50])
    assert [r.ratio for r in rows] == pytest.approx([4, 4, 4])
    rows, mono = growth_ratio_check(make_map("quarter_cos"), 2, [1e2, 1e3, 1e4])
    assert mono and rows[0].ratio < rows[1].ratio < rows[2].ratio


@given(st.sampled_from(ENTIRE + ["sin_pole", "half_tan"]), st.floats(0.3, 40))
def test_min_le_max(family, r):
    p = profile(make_map(family), r)
    if not p.error:
        assert p.min_mod <= p.max_mod


@given(st.sampled_from(ENTIRE), st.floats(0.5, 30))
def test_max_reproduced_at_theta(family, r):
    m = make_map(family)
    ext = max_modulus(m, r)
    val = abs(m.values(np.array([r * np.exp(1j * ext.theta)]))[0])
    assert val == pytest.approx(ext.value, rel=1e-8)


@given(st.sampled_from(ENTIRE), st.floats(0.0, 3.0), st.floats(0.05, 1.0), st.floats(0.05, 1.0))
def test_log_convexity(family, lr1, g1, g2):
    m = make_map(family)
    l1, l2, l3 = lr1, lr1 + g1, lr1 + g1 + g2
    M = [max_modulus(m, math.exp(x)).log_value for x in (l1, l2, l3)]
    interp = M[0] + (M[2] - M[0]) * (l2 - l1) / (l3 - l1)
    assert M[1] <= interp + 1e-6 * max(1.0, abs(interp))


@given(st.sampled_from(ENTIRE), st.floats(1, 15))
def test_dense_scan_agreement(family, r):
    m = make_map(family)
    hi, lo = dense_circle_extrema(m.values, r, 2 ** 16)
    assert max_modulus(m, r).value == pytest.approx(hi, rel=1e-6)
    assert min_modulus(m, r).value == pytest.approx(lo, rel=1e-6, abs=1e-12)


@given(st.floats(1.5, 30), st.floats(1.2, 3))
def test_min_radius_strictly_inside(r, d):
    m = make_map("sine_shift")
    res = find_min_modulus_radius(m, r, d, 5, n_samples=16)
    if res.found:
        assert r < res.rho < d * r
        assert res.value <= 5
