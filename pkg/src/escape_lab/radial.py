"""Maximum and minimum modulus on circles, radial scans and growth checks.

All optimization happens on ``log|f|`` so huge values never overflow.  Each
circle is scanned on a uniform grid, the best local extrema are polished by a
golden-section search, and the grid is doubled until the extremum is stable.
"""

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError
from .catalog import pole_exclusion_radius

GOLDEN = (math.sqrt(5) - 1) / 2
BASE_SAMPLES = 4096
MAX_SAMPLES = 1 << 20


@dataclass
class CircleExtremum:
    """Located extremum of ``|f|`` on ``|z| = r``; unpacks as ``(value, theta)``."""

    value: float
    theta: float
    log_value: float
    samples: int
    tolerance: float
    unbounded: bool = False

    def __iter__(self):
        return iter((self.value, self.theta))


@dataclass
class RadialProfile:
    r: float
    max_mod: float
    theta_max: float
    min_mod: float
    theta_min: float
    samples_used: int
    tolerance_achieved: float
    log_max: float = 0.0
    log_min: float = 0.0
    error: str = ""

    def row(self):
        return [self.r, self.max_mod, self.theta_max, self.min_mod, self.theta_min,
                self.samples_used, self.tolerance_achieved]


CSV_HEADER = ["r", "max_mod", "theta_max", "min_mod", "theta_min", "samples", "tol"]


def _exp(x):
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


def coarse_samples(m, r):
    """Grid size for a circle: trig families oscillate ~r times around it."""
    n = BASE_SAMPLES
    if m.impl.trig:
        n = max(n, int(math.ceil(64 * r)))
    return min(n, MAX_SAMPLES)


def _circle_log(m, r, theta, center=0j):
    return np.real(m.log_values(center + r * np.exp(1j * np.asarray(theta))))


def _pole_on_circle(m, r):
    if not m.has_poles:
        return False
    # poles within the exclusion ring of the circle |z| = r
    ring = 2 * pole_exclusion_radius(r) + 1e-9 * r
    for p, _ in m.poles_in(0j, r + ring):
        if abs(abs(p) - r) <= max(ring, pole_exclusion_radius(p)):
            return True
    return False


def _golden(fn, lo, hi, iters=64):
    """Vectorized golden-section maximization of ``fn`` on brackets ``[lo, hi]``."""
    a, b = lo.copy(), hi.copy()
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = fn(c), fn(d)
    for _ in range(iters):
        left = fc >= fd
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        new_c = b - GOLDEN * (b - a)
        new_d = a + GOLDEN * (b - a)
        c_next = np.where(left, new_c, d)
        d_next = np.where(left, c, new_d)
        fc_next = np.where(left, np.nan, fd)
        fd_next = np.where(left, fc, np.nan)
        need_c, need_d = np.isnan(fc_next), np.isnan(fd_next)
        if need_c.any():
            fc_next = np.where(need_c, fn(c_next), fc_next)
        if need_d.any():
            fd_next = np.where(need_d, fn(d_next), fd_next)
        c, d, fc, fd = c_next, d_next, fc_next, fd_next
    x = (a + b) / 2
    return x, fn(x)


def _extremum_on_grid(m, r, n, sign, n_refine=8):
    theta = 2 * np.pi * np.arange(n) / n
    vals = sign * _circle_log(m, r, theta)
    vals = np.where(np.isnan(vals), -np.inf, vals)
    # local maxima on the cyclic grid, best few polished
    is_peak = (vals >= np.roll(vals, 1)) & (vals >= np.roll(vals, -1))
    idx = np.flatnonzero(is_peak)
    if idx.size == 0:
        idx = np.array([int(np.argmax(vals))])
    idx = idx[np.argsort(-vals[idx], kind="stable")][:n_refine]
    step = 2 * np.pi / n
    fn = lambda t: np.where(np.isnan(v := sign * _circle_log(m, r, t)), -np.inf, v)
    x, fx = _golden(fn, theta[idx] - step, theta[idx] + step)
    best = int(np.argmax(fx))
    t_best, v_best = float(x[best]), float(fx[best])
    grid_best = float(vals[idx[0]])
    if grid_best > v_best:
        t_best, v_best = float(theta[idx[0]]), grid_best
    return t_best % (2 * np.pi), sign * v_best


def _circle_extremum(m, r, rel_tol, sign):
    if r <= 0:
        raise ParameterError("radius must be positive")
    if _pole_on_circle(m, r):
        if sign > 0:
            return CircleExtremum(math.inf, float("nan"), math.inf, 0, 0.0, unbounded=True)
    n = coarse_samples(m, r)
    theta, lv = _extremum_on_grid(m, r, n, sign)
    tol = math.inf
    while n < MAX_SAMPLES:
        n2 = 2 * n
        theta2, lv2 = _extremum_on_grid(m, r, n2, sign)
        tol = abs(lv2 - lv) if math.isfinite(lv2) and math.isfinite(lv) else 0.0
        # keep the better of the two estimates
        if sign * lv2 >= sign * lv:
            theta, lv = theta2, lv2
        n = n2
        if tol <= rel_tol:
            break
    # |d log| is the relative error of the modulus to first order
    return CircleExtremum(_exp(lv), theta, lv, n, tol)


def max_modulus(m, r, rel_tol=1e-9):
    """``M(r, f)`` and the angle where it is attained."""
    return _circle_extremum(m, float(r), rel_tol, +1)


def min_modulus(m, r, rel_tol=1e-9):
    """``m(r, f)`` and the angle where it is attained."""
    return _circle_extremum(m, float(r), rel_tol, -1)


def log_max_modulus(m, r, rel_tol=1e-9):
    return max_modulus(m, r, rel_tol).log_value


def radii(r_min, r_max, n_radii, spacing="log"):
    if not (0 < r_min < r_max):
        raise ParameterError("need 0 < r_min < r_max")
    if n_radii < 2:
        raise ParameterError("n_radii must be at least 2")
    if spacing == "linear":
        out = np.linspace(r_min, r_max, n_radii)
    elif spacing == "log":
        out = np.geomspace(r_min, r_max, n_radii)
    else:
        raise ParameterError(f"spacing must be 'linear' or 'log', got {spacing!r}")
    out[0], out[-1] = r_min, r_max
    return [float(r) for r in out]


def profile(m, r, rel_tol=1e-9):
    try:
        hi = max_modulus(m, r, rel_tol)
        lo = min_modulus(m, r, rel_tol)
    except (ParameterError, FloatingPointError) as exc:
        nan = float("nan")
        return RadialProfile(r, nan, nan, nan, nan, 0, nan, error=str(exc))
    return RadialProfile(r, hi.value, hi.theta, lo.value, lo.theta,
                         max(hi.samples, lo.samples), max(hi.tolerance, lo.tolerance),
                         hi.log_value, lo.log_value,
                         "unbounded (pole on circle)" if hi.unbounded else "")


def scan_profile(m, r_min, r_max, n_radii, spacing="log", rel_tol=1e-9):
    return [profile(m, r, rel_tol) for r in radii(r_min, r_max, n_radii, spacing)]


def profile_from_list(m, rs, rel_tol=1e-9):
    return [profile(m, float(r), rel_tol) for r in rs]


def profiles_to_csv(rows, header_comment=None):
    buf = io.StringIO()
    if header_comment:
        for line in header_comment.splitlines():
            buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for p in rows:
        w.writerow([repr(float(x)) if isinstance(x, float) else x for x in p.row()])
    return buf.getvalue()


@dataclass
class MinModulusSearch:
    rho: float
    value: float
    sampled_min: float
    sampled_min_rho: float
    samples: int

    @property
    def found(self):
        return self.rho is not None


def find_min_modulus_radius(m, r, d, c, n_samples=64, rel_tol=1e-9):
    """Smallest sampled ``rho`` in ``(r, d r)`` with ``m(rho, f) <= c``.

    ``rho is None`` is an empirical refusal at this sampling resolution; the
    smallest minimum seen is reported so callers can tighten ``c``.
    """
    if r <= 0 or d <= 1 or c <= 0:
        raise ParameterError("need r > 0, d > 1, c > 0")
    best, best_rho = math.inf, None
    for k in range(1, n_samples + 1):
        rho = r * d ** (k / (n_samples + 1))
        if _pole_on_circle(m, rho):
            continue
        ext = min_modulus(m, rho, rel_tol)
        # the located value must stay below c even after its tolerance
        certified = ext.value * math.exp(ext.tolerance) <= c
        if ext.value < best:
            best, best_rho = ext.value, rho
        if certified:
            return MinModulusSearch(rho, ext.value, best, best_rho, k)
    return MinModulusSearch(None, None, best, best_rho, n_samples)


@dataclass
class HadamardReport:
    violations: list
    estimated_R1: float
    checked: int
    table: list = field(default_factory=list)


def hadamard_check(m, r_lo, r_hi, n_radii, c_values, slack=1e-9):
    """Empirical threshold above which ``M(r^c) >= M(r)^c`` for the tested pairs."""
    if m.infinitely_many_poles:
        raise ParameterError("hadamard_check needs finitely many poles")
    if not (1 < r_lo < r_hi):
        raise ParameterError("need 1 < r_lo < r_hi")
    if any(c <= 1 for c in c_values):
        raise ParameterError("every c must exceed 1")
    rs = radii(r_lo, r_hi, n_radii, "log")
    violations, table = [], []
    last_bad = None
    for r in rs:
        lm = log_max_modulus(m, r)
        for c in c_values:
            lhs = log_max_modulus(m, r ** c)
            rhs = c * lm
            ok = lhs >= rhs - slack * max(1.0, abs(rhs))
            table.append((r, c, lhs, rhs, ok))
            if not ok:
                violations.append((r, c, lhs, rhs))
                last_bad = r
    if last_bad is None:
        est = rs[0]
    else:
        later = [r for r in rs if r > last_bad]
        est = later[0] if later else None
    return HadamardReport(violations, est, len(table), table)


@dataclass
class GrowthRow:
    r: float
    ratio: float
    log_ratio: float


def growth_ratio_check(m, k, r_list):
    """Table of ``M(k r)/M(r)``; the flag says whether it is nondecreasing."""
    if k <= 1:
        raise ParameterError("k must exceed 1")
    rs = [float(r) for r in r_list]
    if any(r <= 0 for r in rs) or any(b <= a for a, b in zip(rs, rs[1:])):
        raise ParameterError("radii must be positive and increasing")
    rows = []
    for r in rs:
        lr = log_max_modulus(m, k * r) - log_max_modulus(m, r)
        rows.append(GrowthRow(r, _exp(lr), lr))
    monotone = all(b.log_ratio >= a.log_ratio - 1e-9 * max(1.0, abs(a.log_ratio))
                   for a, b in zip(rows, rows[1:]))
    return rows, monotone
