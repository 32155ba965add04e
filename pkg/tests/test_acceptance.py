"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v`` or ``python3 tests/test_acceptance.py``.
"""

import math
import random
import time

import mpmath as mp
import numpy as np
import pytest

from escape_lab import (Annulus, ClassifierParams, Disc, GridSpec, Refusal, build_pole_chain,
                        certify_covering, classify_orbit, construct_oscillating,
                        construct_slow_point, construct_two_sided, distortion_probe,
                        feasibility_check, make_map, preimage_annulus, render_escape_classes)
from escape_lab.catalog import orbit
from escape_lab.chain import LOOP_MULTIPLE, schedule_pauses
from escape_lab.construct import oscillation_summary
from escape_lab.covering import harnack_bound_check
from conftest import monomial
from oracles import monomial_covers, schedule_ok

pytestmark = pytest.mark.slow


@pytest.fixture
def report(capsys):
    def emit(number, title, ok, detail=""):
        with capsys.disabled():
            print(f"\n[criterion {number:2d}] {'PASS' if ok else 'FAIL'}  {title}  {detail}")
        assert ok, detail
    return emit


def test_01_two_sided_band(report):
    t = time.time()
    rep = construct_two_sided(make_map("exp_scaled", {"lambda": 1}), "linear:alpha=5", 2, 1, 20)
    elapsed = time.time() - t
    rows_ok = all(r.lower <= r.modulus <= r.upper and r.ok and r.ok_doubled for r in rep.rows)
    ok = (rows_ok and len(rep.rows) == 21 and rep.extra["C"] == 64
          and rep.precision_bits <= 4096 and elapsed <= 300)
    report(1, "two-sided band a_n <= |f^n| <= 64 a_n, n <= 20", ok,
           f"bits={rep.precision_bits} time={elapsed:.1f}s")


def test_02_slow_point(report):
    rep = construct_slow_point(make_map("exp_scaled", {"lambda": 1}), "sqrt_plus:b=10", 30)
    tail = [r for r in rep.rows if r.n >= rep.N0]
    ok = (rep.N0 <= 5 and len(rep.rows) == 31
          and all(r.modulus <= math.sqrt(r.n) + 10 and r.ok and r.ok_doubled for r in tail))
    report(2, "slow point |f^n| <= sqrt(n) + 10 for N0 <= n <= 30", ok,
           f"N0={rep.N0} max ratio={max(r.modulus / r.a_n for r in tail):.3f}")


def test_03_oscillating(report):
    rep = construct_oscillating(make_map("exp_scaled", {"lambda": 1}), 10, 24)
    summary = oscillation_summary([r.modulus for r in rep.rows], 10)
    ok = summary["oscillations"] >= 3 and summary["max_modulus"] > 1e3 and rep.all_ok
    report(3, "oscillation: >= 3 re-entries into |z| <= 10, running max > 1e3", ok,
           f"re-entries={summary['reentries']} max={summary['max_modulus']:.3g}")


def _monomial_instances(n, seed):
    rng = random.Random(seed)
    out = []
    while len(out) < n:
        d = rng.randint(2, 6)
        r = rng.uniform(1.0, 2.0)
        R = r * rng.uniform(1.3, 3.0)
        lo, hi = d * math.log(r), d * math.log(R)
        a = rng.uniform(lo - 1, hi + 1)
        b = rng.uniform(a + 0.05, hi + 1.5)
        # margins of at least 1% from the exact image radii
        if min(abs(t - e) for t in (a, b) for e in (lo, hi)) < 0.01:
            continue
        out.append((d, r, R, math.exp(a), math.exp(b)))
    return out


def test_04_covering_oracle(report):
    wrong = []
    for d, r, R, a, b in _monomial_instances(200, 4):
        cert = certify_covering(monomial(d), Annulus(0, r, R), Annulus(0, a, b), n_samples=2048)
        if cert.certified != monomial_covers(d, r, R, a, b):
            wrong.append((d, r, R, a, b))
    tr = preimage_annulus(make_map("poly_exp", {"p": [0, 0, 1]}), Annulus(0, 4, 16),
                          Annulus(0, 1, 8))
    inner, outer = tr.radii()
    err = max(np.max(np.abs(inner - 2)), np.max(np.abs(outer - 4)))
    ok = not wrong and err < 1e-9
    report(4, "covering oracle on 200 monomial instances, preimage of A(4,16)", ok,
           f"disagreements={len(wrong)} preimage err={err:.1e}")


def test_05_fatou_baker_rate(report):
    # with the default escape radius 1e3 an O(n) orbit started at Re z <= 20 is still
    # inside |z| <= 220 at n = 200, so the escape test uses radius 100 here
    m = make_map("fatou_baker")
    params = ClassifierParams(n_max=200, escape_radius=100)
    rng = np.random.default_rng(5)
    zs = 2 + 18 * rng.random(100) + 1j * (2 * rng.random(100) - 1)
    rows = [classify_orbit(m, z, params) for z in zs]
    worst = max(r.sup_log_rate for r in rows)
    ok = all(r.cls == "slow_L" and r.n_reached == 200 for r in rows) and worst <= 0.2
    report(5, "fatou_baker: 100 points with Re z > 2 are slow_L, rate <= 0.2", ok,
           f"max tail rate={worst:.3f} (escape radius 100)")


def test_06_bergweiler_band(report):
    m = make_map("bergweiler_baker")
    rec = orbit(m, -10, 40, precision_bits=256)
    mods = [abs(complex(v)) for v in rec.values()]
    with mp.workdps(80):
        z, ref = mp.mpf(-10), []
        for _ in range(40):
            z = 2 * z + 2 - mp.log(2) - mp.exp(z)
            ref.append(float(abs(z)))
    band = all(1.5 ** n * 10 <= x <= 3 ** n * 10 for n, x in enumerate(mods, start=1))
    agree = np.allclose(mods, ref, rtol=1e-12)
    probe = distortion_probe(m, Disc(-10, 0.5), 40)
    ok = band and agree and len(mods) == 40 and math.isfinite(probe.sup_ratio) and probe.stable()
    report(6, "bergweiler_baker: (3/2)^n 10 <= |f^n(-10)| <= 3^n 10, stable distortion", ok,
           f"sup ratio={probe.sup_ratio:.4f}")


def test_07_sine_shift_render(report):
    m = make_map("sine_shift")
    grid = GridSpec(-math.pi, 5 * math.pi, -4, 4, 400, 200)
    imgs = [render_escape_classes(m, grid, jobs=j) for j in (1, 4, 16)]
    same = len({img.to_ppm() for img in imgs}) == 1
    classes = [imgs[0].class_at(*grid.pixel_of(complex((2 * k + 1) * math.pi, 0)))
               for k in range(3)]
    ok = same and classes == ["slow_L"] * 3
    report(7, "sine_shift render: (2k+1)pi pixels slow_L, identical for 1/4/16 workers", ok,
           f"classes={classes} identical={same}")


def test_08_harnack_property(report):
    rng = np.random.default_rng(8)
    checked = violations = 0
    refused = {}
    for _ in range(12):
        D = int(rng.integers(6, 25))
        co = list((rng.normal(size=D) + 1j * rng.normal(size=D)) * rng.uniform(0, 3)) + [1.0]
        k = float(rng.uniform(1.5, min(D - 1, 15)))
        lr = float(rng.uniform(41, max(41.0, 700 / k)))
        try:
            rep = harnack_bound_check(make_map("poly_exp", {"p": co}), math.exp(lr), k,
                                      n_rho=64, n_hyp=16)
        except Refusal as exc:
            refused[exc.reason] = refused.get(exc.reason, 0) + 1
            continue
        checked += 1
        violations += len(rep.violations)
    ok = checked > 0 and violations == 0
    report(8, "Harnack inequality on random polynomials passing the hypothesis check", ok,
           f"checked={checked} violations={violations} refused={refused}")


def test_09_feasibility(report):
    q = feasibility_check(make_map("quarter_cos"), 1e2, 1e6, 0.25, 64)
    e = feasibility_check(make_map("exp_scaled", {"lambda": 1}), 1e2, 1e6, 0.25, 64)
    ok = q.flagged and not e.flagged
    report(9, "feasibility: quarter_cos flagged, exp_scaled not", ok,
           f"quarter_cos={q.intervals} exp={e.intervals}")


def test_10_pole_chain(report):
    pc = build_pole_chain(make_map("half_tan"), 10)
    ok = (len(pc.discs) >= 10 and all(l.certified for l in pc.links)
          and any(c.length == 60 and c.composed for c in pc.cycles))
    report(10, "half_tan pole chain: 10 certified links, composed 60-link cycle", ok,
           f"cycles={[c.loop for c in pc.cycles]}")


def test_11_schedule_arithmetic(report):
    rng = random.Random(11)
    bad = 0
    for _ in range(1000):
        kind = rng.choice(sorted(LOOP_MULTIPLE))
        n_steps = rng.randint(2, 12)
        radii, r = [], rng.uniform(2, 10)
        for _ in range(n_steps):
            radii.append(r)
            r *= rng.uniform(1.5, 50)
        loops = sorted(rng.sample(range(n_steps), rng.randint(1, n_steps)))
        a, v = [], 1.0
        for _ in range(rng.randint(5, 3000)):
            a.append(v)
            v += rng.choice([0.0, rng.uniform(0, 3), rng.uniform(0, 0.01)])
        s = schedule_pauses(radii, a, kind, loop_steps=loops)
        if not (s.valid and schedule_ok(s.loop_indices, s.pause_lengths, s.cumulative,
                                        s.trigger_indices, LOOP_MULTIPLE[kind])):
            bad += 1
    report(11, "1000 random pause schedules satisfy the integer invariants", bad == 0,
           f"violations={bad}")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
