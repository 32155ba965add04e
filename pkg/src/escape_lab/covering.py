"""Covering certificates ``f(S) ⊇ T`` for annuli and discs.

The main test is topological.  Sample the image of the source boundary; if it
stays away from the closed target, the number of preimages in ``S`` of a
target point is the same for every point of ``T`` (``T`` is connected), and
by the argument principle it equals the winding of ``f(∂S)`` about the point
plus the number of poles in ``S``.  A count of at least one at the target
probes then covers the whole target.

When the boundary image runs through the target (typical for ``exp``), the
target is split into small cells and each cell is covered separately: a
preimage ``z_k`` of the cell center is found by Newton's method and the
covering ``f(B(z_k, δ)) ⊇ cell`` is certified by the same winding test on a
tiny disc.

Everything here is sampled evidence at a stated resolution, not a proof.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .catalog import pole_exclusion_radius
from .errors import ParameterError, Refusal
from .radial import log_max_modulus, max_modulus, min_modulus
from .regions import Annulus, Disc, log_abs_diff, log_distance, winding_number

DEFAULT_SAMPLES = 8192
MAX_SAMPLES = 1 << 20
N_PROBES = 16
CELL_ANGLES = 64
# margins below this (relative) size are rounding noise, not separation
MIN_MARGIN = 1e-9
CELL_CIRCLE = 128
CELL_MARGIN = 0.05
CELL_BATCH = 512
MAX_CELLS = 200_000


@dataclass
class CoveringCertificate:
    map_label: str
    source: object
    target: object
    verdict: str
    margin: float
    winding_evidence: dict
    samples: int
    reason: str = None
    method: str = "boundary"
    margin_units: str = "log"
    assumptions: list = field(default_factory=list)
    details: dict = field(default_factory=dict)

    @property
    def certified(self):
        return self.verdict == "certified"

    def to_dict(self):
        return {"map": self.map_label, "source": self.source.to_dict(),
                "target": self.target.to_dict(), "verdict": self.verdict,
                "reason": self.reason, "method": self.method, "margin": _num(self.margin),
                "margin_units": self.margin_units, "windings": self.winding_evidence,
                "samples": self.samples, "assumptions": list(self.assumptions),
                "details": {k: _num(v) for k, v in self.details.items()}}

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)


def _num(x):
    if isinstance(x, float) and not math.isfinite(x):
        return repr(x)
    return x


# ---------------------------------------------------------------------------
# boundary sampling


def _circle(center, radius, n):
    t = 2 * np.pi * np.arange(n) / n
    return center + radius * np.exp(1j * t)


def _pole_near_circle(m, center, radius):
    if not m.has_poles:
        return None
    ring = max(1e-9 * radius, pole_exclusion_radius(abs(center) + radius))
    for p, _ in m.poles_in(center, radius + ring):
        if abs(abs(p - center) - radius) <= ring:
            return p
    return None


def _poles_inside(m, region):
    if not m.has_poles:
        return []
    if isinstance(region, Disc):
        return [(p, k) for p, k in m.poles_in(region.center, region.radius)
                if abs(p - region.center) < region.radius]
    return [(p, k) for p, k in m.poles_in(region.center, region.r_out)
            if region.r_in < abs(p - region.center) < region.r_out]


def _point_margin(target, logw):
    """Per-point margin: log units for centered annuli, distance otherwise."""
    if isinstance(target, Annulus) and target.centered:
        lw = logw.real
        return np.maximum(math.log(target.r_in) - lw, lw - math.log(target.r_out))
    ld = log_distance(target, logw)
    with np.errstate(over="ignore"):
        out = np.exp(ld)
    inside = ~np.isfinite(ld) & (ld < 0)
    if inside.any():
        w = np.exp(logw[inside])
        out[inside] = [target.signed_distance(x) for x in w]
    return out


def _sample(m, source, target, n):
    comps = []
    for center, radius, orient in source.boundary():
        z = _circle(center, radius, n)
        logw = m.log_values(z)
        logdf = m.log_derivs(z)
        margin = _point_margin(target, logw)
        # a segment is safe when the image moves by less than a quarter of its
        # distance to the target, which also keeps winding steps below pi
        ld = log_distance(target, logw)
        step = math.log(2 * math.pi * radius / n)
        with np.errstate(invalid="ignore"):
            safe = np.isfinite(ld) & (logdf.real + step <= math.log(0.25) + ld)
        comps.append({"center": center, "radius": radius, "orient": orient,
                      "logw": logw, "margin": float(np.min(margin)),
                      "unsafe": int(np.count_nonzero(~safe))})
    return comps


def _boundary_stage(m, source, target, n_samples):
    n = max(64, int(n_samples))
    comps = _sample(m, source, target, n)
    while True:
        margin = min(c["margin"] for c in comps)
        unsafe = sum(c["unsafe"] for c in comps)
        if margin <= 0 or 2 * n > MAX_SAMPLES:
            break
        nxt = _sample(m, source, target, 2 * n)
        new_margin = min(c["margin"] for c in nxt)
        stable = abs(new_margin - margin) <= 0.01 * abs(margin)
        n, comps = 2 * n, nxt
        if stable and unsafe == 0 and sum(c["unsafe"] for c in comps) == 0:
            break
    return n, comps


def certify_covering(m, source, target, n_samples=DEFAULT_SAMPLES, margin_req=0.0,
                     cells=True):
    """Test ``f(source) ⊇ target`` and return a :class:`CoveringCertificate`.

    ``margin_req`` is in log-magnitude units for centered annulus targets and
    in plain distance otherwise.  ``cells=False`` disables the cellwise
    fallback used when the boundary image meets the target.
    """
    if not isinstance(source, (Annulus, Disc)) or not isinstance(target, (Annulus, Disc)):
        raise ParameterError("source and target must be annuli or discs")
    units = "log" if isinstance(target, Annulus) and target.centered else "distance"

    def refuse(reason, margin=float("nan"), samples=0, windings=None, **details):
        return CoveringCertificate(m.label, source, target, "refused", margin,
                                   windings or {}, samples, reason, "boundary", units,
                                   details=details)

    for center, radius, _ in source.boundary():
        p = _pole_near_circle(m, center, radius)
        if p is not None:
            return refuse("analyticity_precondition_failed", pole=str(p))
    poles = _poles_inside(m, source)
    if poles and isinstance(source, Annulus):
        return refuse("analyticity_precondition_failed",
                      pole=str(poles[0][0]), note="pole inside annulus source")
    n_poles = sum(k for _, k in poles)

    n, comps = _boundary_stage(m, source, target, n_samples)
    margin = min(c["margin"] for c in comps)
    samples = n * len(comps)
    probes = target.probes(N_PROBES)
    windings = {}
    counts = []
    for i, c in enumerate(comps):
        windings[f"component_{i}"] = {
            "radius": c["radius"], "orientation": c["orient"],
            "winding": [winding_number(c["logw"], p) for p in probes]}
    for j in range(len(probes)):
        counts.append(sum(c["orient"] * windings[f"component_{i}"]["winding"][j]
                          for i, c in enumerate(comps)) + n_poles)
    windings["poles_inside"] = n_poles
    windings["preimage_count"] = counts
    unsafe = sum(c["unsafe"] for c in comps)

    floor = MIN_MARGIN if units == "log" else MIN_MARGIN * target.extent
    if margin > floor and margin >= margin_req and unsafe == 0:
        if min(counts) >= 1:
            return CoveringCertificate(m.label, source, target, "certified", margin, windings,
                                       samples, None, "boundary", units)
        return refuse("no_separation", margin, samples, windings)
    hit = refuse("boundary_hits_target", margin, samples, windings, unsafe_segments=unsafe)
    if not cells:
        return hit
    cert = _cellwise(m, source, target)
    if cert is None:
        return hit
    cert.details["boundary_margin"] = margin
    cert.details["boundary_samples"] = samples
    cert.samples += samples
    return cert


# ---------------------------------------------------------------------------
# cellwise fallback


def _target_cells(target, n_theta=CELL_ANGLES):
    """Cell centers and covering radii whose discs cover the closed target."""
    if isinstance(target, Annulus):
        dt = 2 * math.pi / n_theta
        span = math.log(target.r_out / target.r_in)
        n_r = max(1, math.ceil(span / dt))
        du = span / n_r
        u = math.log(target.r_in) + du * (np.arange(n_r) + 0.5)
        t = dt * (np.arange(n_theta) + 0.5)
        uu, tt = np.meshgrid(u, t, indexing="ij")
        centers = target.center + np.exp(uu + 1j * tt)
        half = math.hypot(du, dt) / 2
        rho = np.exp(uu) * math.expm1(half)
        return centers.ravel(), rho.ravel()
    side = 32
    s = 2 * target.radius / side
    g = -target.radius + s * (np.arange(side) + 0.5)
    xx, yy = np.meshgrid(g, g, indexing="ij")
    pts = (xx + 1j * yy).ravel()
    keep = np.abs(pts) <= target.radius + s
    centers = target.center + pts[keep]
    return centers, np.full(centers.shape, s / math.sqrt(2))


def _seed_grid(m, source):
    if isinstance(source, Annulus):
        # extra radii hug the inner circle, where preimages are best conditioned
        hug = source.r_in * np.array([1.02, 1.1, 1.3])
        rs = np.concatenate([hug[hug < source.r_out], np.geomspace(source.r_in, source.r_out, 18)[1:-1]])
    else:
        rs = source.radius * np.linspace(0, 1, 17)[:-1]
    outer = source.r_out if isinstance(source, Annulus) else source.radius
    n_ang = 64
    if m.impl.trig:
        n_ang = int(min(4096, max(64, math.ceil(8 * (abs(source.center) + outer)))))
    t = 2 * np.pi * np.arange(n_ang) / n_ang
    return (source.center + rs[:, None] * np.exp(1j * t)[None, :]).ravel()


def float_sensitivity(m, z):
    """Rounding noise of ``log f`` at ``z`` in double precision."""
    z = np.asarray(z, dtype=complex)
    with np.errstate(all="ignore"):
        return np.abs(z) * 2.2e-16 * np.exp(np.real(m.log_derivs(z) - m.log_values(z)))


def usable_seeds(m, seeds, limit=1e-9):
    """Seeds where Newton on ``log f`` still resolves about ``1e-7`` in double precision."""
    sens = float_sensitivity(m, seeds)
    keep = np.isfinite(sens) & (sens < limit)
    return seeds[keep] if keep.any() else seeds


def _wrap(g):
    return g.real + 1j * ((g.imag + np.pi) % (2 * np.pi) - np.pi)


def newton_log(m, z, logw, iters=40, tol=1e-13):
    """Vectorized Newton on ``log f(z) = log w`` (mod 2πi)."""
    z = np.array(z, dtype=complex)
    logw = np.asarray(logw, dtype=complex)
    done = np.zeros(z.shape, bool)
    with np.errstate(all="ignore"):
        for _ in range(iters):
            g = _wrap(m.log_values(z) - logw)
            done = np.abs(g) < tol
            if done.all():
                break
            step = g * np.exp(m.log_values(z) - m.log_derivs(z))
            bad = ~np.isfinite(step)
            step[bad] = 0
            z = np.where(done, z, z - step)
        g = _wrap(m.log_values(z) - logw)
    # far from 0 the attainable accuracy is limited by rounding of z itself
    ok = np.isfinite(g) & (np.abs(g) < np.maximum(1e-10, 100 * float_sensitivity(m, z)))
    return z, ok


def _check_cells(m, source, zs, ok, w, rho, margin):
    """Per-cell check of ``f(B(z, δ)) ⊇ B(w, ρ)``; returns a bool array."""
    good = ok.copy()
    with np.errstate(all="ignore"):
        delta = 2 * rho * np.exp(-m.log_derivs(zs).real)
    sd = np.array([source.signed_distance(z) for z in zs])
    good &= np.isfinite(delta) & (sd <= -delta)
    t = 2 * np.pi * np.arange(CELL_CIRCLE) / CELL_CIRCLE
    idx = np.flatnonzero(good)
    if idx.size == 0:
        return good
    circ = zs[idx, None] + delta[idx, None] * np.exp(1j * t)[None, :]
    logf = m.log_values(circ)
    need = np.log(rho[idx] * (1 + margin))
    for row, k in enumerate(idx):
        ld = log_abs_diff(logf[row], w[k]).real
        if not (np.all(np.isfinite(ld)) and ld.min() >= need[row]):
            good[k] = False
            continue
        if winding_number(logf[row], w[k]) < 1:
            good[k] = False
            continue
        if m.has_poles and m.poles_in(zs[k], delta[k] * 1.001):
            good[k] = False
    return good


def _cellwise(m, source, target, margin=CELL_MARGIN, tries=8):
    w, rho = _target_cells(target)
    if w.size > MAX_CELLS:
        return None
    seeds = usable_seeds(m, _seed_grid(m, source))
    with np.errstate(all="ignore"):
        seed_log = m.log_values(seeds)
    seed_log = np.where(np.isfinite(seed_log), seed_log, np.inf)
    logw = np.log(w)
    certified = 0
    for start in range(0, w.size, CELL_BATCH):
        sl = slice(start, start + CELL_BATCH)
        wb, rb, lb = w[sl], rho[sl], logw[sl]
        with np.errstate(invalid="ignore"):
            resid = np.abs(_wrap(seed_log[None, :] - lb[:, None]))
        resid = np.where(np.isfinite(resid), resid, np.inf)
        order = np.argsort(resid, axis=1, kind="stable")[:, :tries]
        good = np.zeros(wb.shape, bool)
        for attempt in range(order.shape[1]):
            todo = np.flatnonzero(~good)
            if todo.size == 0:
                break
            z0 = seeds[order[todo, attempt]]
            zs, ok = newton_log(m, z0, lb[todo])
            good[todo] = _check_cells(m, source, zs, ok, wb[todo], rb[todo], margin)
        if not good.all():
            return None
        certified += wb.size
    return CoveringCertificate(
        m.label, source, target, "certified", margin, {"cell_winding": ">= 1"},
        certified * CELL_CIRCLE, None, "cellwise_preimage", "relative",
        details={"cells": int(certified), "cell_margin": margin})


# ---------------------------------------------------------------------------
# Bohr-type and Harnack-type coverings


def bohr_cover(m, r, c, R, R_tilde, prefer="near", n_rho=32, n_samples=DEFAULT_SAMPLES):
    """``f(A(r, 8r))`` covers ``A(R, R^5)`` or ``A(R~, R~^5)``.

    Returns ``(which, certificate)`` with ``which`` in ``{"near", "far"}``.
    """
    if prefer not in ("near", "far"):
        raise ParameterError("prefer must be 'near' or 'far'")
    if not (r > 0 and c > 0 and R > 0 and R_tilde > 0):
        raise ParameterError("r, c, R, R_tilde must be positive")
    witness = None
    for k in range(1, n_rho + 1):
        rho = 2 * r * 2 ** (k / (n_rho + 1))
        lm = min_modulus(m, rho).log_value
        lM = max_modulus(m, rho).log_value
        if lm <= c * lM:
            witness = rho
            break
    if witness is None:
        raise Refusal("hypothesis_unverified",
                      "no sampled rho in (2r, 4r) with log m <= c log M", r=r, c=c)
    log_M_r = log_max_modulus(m, r)
    window = 2 < R and 10 * math.log(R) < math.log(R_tilde) < log_M_r / 10
    assumptions = ["c*L < 1/4 (L is an unknown absolute constant)"]
    if not window:
        assumptions.append("parameter window 2 < R, R^10 < R~ < M(r)^(1/10) not satisfied")
    source = Annulus(0, r, 8 * r)
    certs = {}
    for name, base in (("near", R), ("far", R_tilde)):
        certs[name] = certify_covering(m, source, Annulus(0, base, base ** 5), n_samples)
        certs[name].assumptions.extend(assumptions)
        certs[name].details["rho_witness"] = witness
    other = "far" if prefer == "near" else "near"
    if certs[prefer].certified:
        return prefer, certs[prefer]
    if certs[other].certified:
        certs[other].details["preference_miss"] = True
        return other, certs[other]
    raise Refusal("neither_certified", "no target certified at this resolution",
                  near=certs["near"].reason, far=certs["far"].reason)


@dataclass
class HarnackReport:
    r: float
    k: float
    s: float
    rows: list
    violations: list
    hypotheses: dict


def _harnack_s(r, k):
    if r <= 1 or k <= 1:
        raise ParameterError("need r > 1 and k > 1")
    return math.sqrt(math.log(r))


def harnack_bound_check(m, r, k, n_rho=64, n_hyp=64):
    """Check ``log m(ρ) >= (1 - 2π/s) log M(ρ) > 0`` on ``[r^{1+2/s}, r^{k-2/s}]``."""
    s = _harnack_s(r, k)
    lr = math.log(r)
    hyp = {"s": s, "s_bound": max(2 * math.pi, 4 / (k - 1))}
    if s <= hyp["s_bound"]:
        raise Refusal("hypothesis_unverified", "s = sqrt(log r) too small", **hyp)
    if k * lr > 700:
        raise Refusal("out_of_range", "sample radii exceed double-precision range", **hyp)
    lM = log_max_modulus(m, r)
    hyp["log_M_r"], hyp["k_log_r"] = lM, k * lr
    if not lM > k * lr:
        raise Refusal("hypothesis_unverified", "M(r) <= r^k", **hyp)
    lo, hi = (1 + 1 / s) * lr, (k - 1 / s) * lr
    for j in range(1, n_hyp + 1):
        rho = math.exp(lo + (hi - lo) * j / (n_hyp + 1))
        lm = min_modulus(m, rho).log_value
        if not lm > 0:
            raise Refusal("hypothesis_unverified", "m(rho) <= 1", rho=rho, log_m=lm)
    lo, hi = (1 + 2 / s) * lr, (k - 2 / s) * lr
    rows, violations = [], []
    factor = 1 - 2 * math.pi / s
    for j in range(n_rho):
        rho = math.exp(lo + (hi - lo) * j / max(1, n_rho - 1))
        lm = min_modulus(m, rho).log_value
        rhs = factor * max_modulus(m, rho).log_value
        ok = lm >= rhs - 1e-9 * abs(rhs) and rhs > 0
        rows.append((rho, lm, rhs, ok))
        if not ok:
            violations.append((rho, lm, rhs))
    return HarnackReport(r, k, s, rows, violations, hyp)


def harnack_cover(m, r, k, n_samples=DEFAULT_SAMPLES):
    """Certificate for ``f(A(r^{1+2/s}, r^{k-2/s})) ⊇ A(R, R^{k(1-12/s)})``."""
    rep = harnack_bound_check(m, r, k)
    s, lr = rep.s, math.log(r)
    expo = k * (1 - 12 / s)
    if expo <= 1:
        raise Refusal("hypothesis_unverified", "target exponent k(1-12/s) <= 1", s=s,
                      exponent=expo)
    lR = log_max_modulus(m, math.exp((1 + 2 / s) * lr))
    if max((k - 2 / s) * lr, expo * lR) > 700:
        raise Refusal("out_of_range", "regions exceed double-precision radii", s=s,
                      exponent=expo)
    source = Annulus(0, math.exp((1 + 2 / s) * lr), math.exp((k - 2 / s) * lr))
    target = Annulus(0, math.exp(lR), math.exp(expo * lR))
    cert = certify_covering(m, source, target, n_samples)
    cert.details.update({"s": s, "log_R": lR})
    return cert


# ---------------------------------------------------------------------------
# preimage tracing


@dataclass
class PreimageTrace:
    inner: np.ndarray
    outer: np.ndarray
    loops: tuple
    max_residual: float
    covering_certified: bool = True

    def radii(self):
        return (np.abs(self.inner), np.abs(self.outer))

    def to_dict(self):
        return {"loops": list(self.loops), "max_residual": self.max_residual,
                "covering_certified": self.covering_certified,
                "inner": [[z.real, z.imag] for z in self.inner],
                "outer": [[z.real, z.imag] for z in self.outer]}


def _newton_point(m, z, logw, iters=30):
    zs, ok = newton_log(m, np.array([z]), np.array([logw]), iters=iters)
    return complex(zs[0]), bool(ok[0])


def _trace_circle(m, center, radius, search, n_pts, max_loops):
    w0 = center + radius
    seeds = _seed_grid(m, search)
    lw0 = complex(np.log(w0))
    with np.errstate(all="ignore"):
        res = np.abs(_wrap(m.log_values(seeds) - lw0))
    res = np.where(np.isfinite(res), res, np.inf)
    start = None
    for i in np.argsort(res, kind="stable")[:16]:
        z, ok = _newton_point(m, seeds[i], lw0)
        if ok and search.signed_distance(z) < 0:
            start = z
            break
    if start is None:
        raise Refusal("continuation_failure", "no preimage of the starting point in search")
    pts = [start]
    z = start
    dt = 2 * math.pi / n_pts
    for loop in range(1, max_loops + 1):
        for j in range(n_pts):
            t0 = (j + (loop - 1) * n_pts) * dt
            z = _continue(m, z, center, radius, t0, t0 + dt)
            if search.signed_distance(z) >= 0:
                raise Refusal("nonunique_branch_detected",
                              "traced preimage left the search annulus", radius=radius)
            pts.append(z)
        if abs(z - start) <= 1e-8 * max(1.0, abs(start)):
            curve = np.array(pts[:-1])
            wind = winding_number(np.log(curve - search.center), 0)
            if wind != 1:
                raise Refusal("nonunique_branch_detected", "traced curve winds "
                              f"{wind} times about the center", radius=radius)
            return curve, loop
    raise Refusal("nonunique_branch_detected", "monodromy did not close", radius=radius,
                  loops=max_loops)


def _continue(m, z, center, radius, t0, t1, depth=0):
    w1 = center + radius * complex(math.cos(t1), math.sin(t1))
    w0 = center + radius * complex(math.cos(t0), math.sin(t0))
    with np.errstate(all="ignore"):
        ldf = complex(m.log_derivs(np.array([z]))[0])
    guess = z + (w1 - w0) * complex(np.exp(-ldf))
    z1, ok = _newton_point(m, guess, complex(np.log(w1)))
    # the step should stay close to the linear prediction
    if ok and abs(z1 - guess) <= 0.5 * abs(guess - z) + 1e-14 * abs(z):
        return z1
    if depth >= 24:
        raise Refusal("continuation_failure", "Newton diverged at minimum step",
                      radius=radius, t=t0)
    mid = (t0 + t1) / 2
    zm = _continue(m, z, center, radius, t0, mid, depth + 1)
    return _continue(m, zm, center, radius, mid, t1, depth + 1)


def preimage_annulus(m, target, search, n_boundary_pts=512, max_loops=8):
    """Trace the component of ``f^{-1}(target)`` surrounding the search center."""
    if not isinstance(target, Annulus) or not isinstance(search, Annulus):
        raise ParameterError("target and search must be annuli")
    # the covering precondition is recorded; tracing itself decides the outcome
    cert = certify_covering(m, search, target)
    curves, loops = [], []
    for radius in (target.r_in, target.r_out):
        curve, n_loops = _trace_circle(m, target.center, radius, search, n_boundary_pts,
                                       max_loops)
        curves.append(curve)
        loops.append(n_loops)
    resid = 0.0
    for curve, radius in zip(curves, (target.r_in, target.r_out)):
        w = m.values(curve)
        resid = max(resid, float(np.max(np.abs(np.abs(w - target.center) - radius) / radius)))
    return PreimageTrace(curves[0], curves[1], tuple(loops), resid, cert.certified)


# ---------------------------------------------------------------------------
# probe of the Bloch-Landau type exponent


@dataclass
class BLProbe:
    L_emp: float
    samples: int
    g_z0: complex


def bl_constant_probe(m, w1, w2, annulus, z0_angle=0.0, n_samples=4096, eps=1e-12):
    """Empirical exponent ``max ln(|g|+eps)/ln(|g(z0)|+2)`` on the mean circle."""
    w1, w2 = complex(w1), complex(w2)
    if w1 == w2:
        raise ParameterError("w1 and w2 must differ")
    if annulus.r_out / annulus.r_in < 2:
        raise ParameterError("annulus ratio must be at least 2")
    for center, radius, _ in annulus.boundary():
        if _pole_near_circle(m, center, radius) is not None:
            raise Refusal("omission_check_failed", "pole on the annulus boundary")
    if _poles_inside(m, annulus):
        raise Refusal("omission_check_failed", "pole inside the annulus")
    # omitted values: zero preimage count by the argument principle, plus samples
    for w in (w1, w2):
        count = 0
        for center, radius, orient in annulus.boundary():
            lg = m.log_values(_circle(center, radius, n_samples))
            if np.min(log_abs_diff(lg, w).real) < math.log(1e-12 * (1 + abs(w))):
                raise Refusal("omission_check_failed", "value attained on the boundary",
                              value=w)
            count += orient * winding_number(lg, w)
        rs = np.geomspace(annulus.r_in, annulus.r_out, 34)[1:-1]
        grid = (annulus.center + rs[:, None] * np.exp(
            2j * np.pi * np.arange(256) / 256)[None, :]).ravel()
        close = np.min(np.abs(m.values(grid) - w))
        if count != 0 or close == 0:
            raise Refusal("omission_check_failed", "value attained in the annulus", value=w,
                          count=count)
    rm = annulus.mean_radius
    g = lambda z: (m.values(z) - w1) / (w2 - w1)
    z0 = annulus.center + rm * np.exp(1j * z0_angle)
    g0 = complex(g(np.array([z0]))[0])
    zs = _circle(annulus.center, rm, n_samples)
    num = np.log(np.abs(g(zs)) + eps)
    L = float(np.max(num) / math.log(abs(g0) + 2))
    return BLProbe(L, n_samples, g0)
