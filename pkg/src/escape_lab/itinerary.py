"""Points whose orbits visit a prescribed sequence of regions.

Given closed regions ``E_0, ..., E_N`` with ``f(E_n) ⊇ E_{n+1}``, the sets
``F_n = {z in E_0 : f^k(z) in E_k, k <= n}`` are nested and nonempty.  They are
approximated forward by square boxes: a box survives level ``n`` when a disc
enclosing its image under ``f^n`` lies inside ``E_n``.  Boxes that straddle a
boundary are split into four, and the search backtracks out of dead ends.
The search is seeded by the backward pull-back of the target chain so that
strongly expanding maps do not need to scan all of ``E_0``.
"""

import json
import math
from dataclasses import dataclass, field

import gmpy2
import numpy as np

from .catalog import MPC, default_precision, near_pole
from .errors import ParameterError, Refusal
from .families import mp_context, mpc
from .regions import Annulus, CellCover, Disc

PRECISION_CAP = 16384
SHRINK = 1e-9


@dataclass
class TargetSequence:
    targets: list
    covering_certs: list = None

    def __post_init__(self):
        if not self.targets:
            raise ParameterError("target sequence needs at least one region")
        if self.covering_certs is not None:
            if len(self.covering_certs) != self.horizon:
                raise ParameterError("need one covering certificate per consecutive pair")
            bad = [i for i, c in enumerate(self.covering_certs) if not c.certified]
            if bad:
                raise ParameterError(f"covering certificate {bad[0]} is not certified")

    @property
    def horizon(self):
        return len(self.targets) - 1

    @property
    def certified(self):
        return self.covering_certs is not None

    def shrunk(self, eps=SHRINK):
        return [_shrink(t, eps) for t in self.targets]


def _shrink(region, eps):
    if isinstance(region, Annulus):
        return Annulus(region.center, region.r_in * (1 + eps), region.r_out * (1 - eps))
    if isinstance(region, Disc):
        return Disc(region.center, region.radius * (1 - eps))
    return region


@dataclass
class PrecisionSchedule:
    base_bits: int = None
    cap: int = PRECISION_CAP

    def __post_init__(self):
        if self.base_bits is None:
            self.base_bits = default_precision()
        if self.base_bits < 53:
            raise ParameterError("base_bits must be at least 53")
        self.cap = min(int(self.cap), PRECISION_CAP)

    def bits(self, log2_derivative):
        return self.base_bits + max(0, math.ceil(log2_derivative))


@dataclass
class RefinementTrace:
    mode: str
    survivors: list = field(default_factory=list)
    precision_bits: list = field(default_factory=list)
    zeta: object = None
    verification: list = field(default_factory=list)
    verification_doubled: list = field(default_factory=list)
    evaluations: int = 0

    def to_dict(self):
        z = complex(self.zeta) if self.zeta is not None else None
        return {"mode": self.mode, "survivors": self.survivors,
                "precision_bits": self.precision_bits,
                "zeta": None if z is None else {"re": str(self.zeta.real),
                                                "im": str(self.zeta.imag)},
                "evaluations": self.evaluations,
                "verification": [r.to_dict() for r in self.verification],
                "verification_doubled": [r.to_dict() for r in self.verification_doubled]}

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)


@dataclass
class StepReport:
    n: int
    modulus: float
    signed_distance: float
    inside: bool

    def to_dict(self):
        return {"n": self.n, "modulus": self.modulus,
                "signed_distance": self.signed_distance, "inside": self.inside}


# ---------------------------------------------------------------------------
# region tests on multiprecision points


def mp_signed_distance(region, w):
    """Signed distance from ``w`` to ``region`` (negative inside) as an mpfr."""
    if isinstance(region, Annulus):
        d = abs(w - mpc(region.center))
        return max(gmpy2.mpfr(region.r_in) - d, d - gmpy2.mpfr(region.r_out))
    if isinstance(region, Disc):
        return abs(w - mpc(region.center)) - gmpy2.mpfr(region.radius)
    return gmpy2.mpfr(region.signed_distance(complex(w)))


def _iterate(m, z, n):
    """``f^n(z)`` and ``log2`` of the derivative chain, or None at a pole."""
    log2d = 0.0
    f, df = m.impl.mp_f, m.impl.mp_df
    for _ in range(n):
        if near_pole(m, z) is not None:
            return None, None
        try:
            d = abs(df(z))
            z = f(z)
        except ZeroDivisionError:
            return None, None
        if not (gmpy2.is_finite(z.real) and gmpy2.is_finite(z.imag)) or d == 0:
            return None, None
        log2d += float(gmpy2.log2(d))
    return z, log2d


class _Box:
    __slots__ = ("c", "h", "slack", "key")

    def __init__(self, c, h, key):
        self.c, self.h, self.key = c, h, key
        self.slack = None


def _classify(m, box, n, region, mode):
    """``(status, slack, log2 D)`` with status in accept/reject/split.

    Decisions are only taken in the linear regime, where the corner images
    agree with the first-order spread ``|D| h sqrt(2)``; otherwise the box is split.
    """
    w, log2d = _iterate(m, box.c, n)
    if w is None:
        return "reject", None, None
    sd = mp_signed_distance(region, w)
    spread = gmpy2.mpfr(2) ** log2d * box.h * gmpy2.sqrt(2)
    if mode == "bounded":
        rad, keep, drop = 2 * spread, 0, 0
    else:
        rad, keep, drop = 0.5 * spread, 0, 3.5 * spread
    if -rad < sd <= rad + drop:
        return "split", None, log2d
    dev = 0
    for sx in (-1, 1):
        for sy in (-1, 1):
            wc, _ = _iterate(m, box.c + mpc(complex(sx, sy)) * box.h, n)
            if wc is None:
                return "split", None, log2d
            dev = max(dev, abs(wc - w))
    if dev > 1.25 * spread:
        return "split", None, log2d
    if sd <= -rad:
        return "accept", float(-sd - rad), log2d
    return "reject", None, log2d


def _children(box):
    h = box.h / 2
    out = []
    for i, (sx, sy) in enumerate(((-1, -1), (1, -1), (-1, 1), (1, 1))):
        c = box.c + mpc(complex(sx, sy)) * h
        out.append(_Box(c, h, box.key + (i,)))
    return out


def _initial_box(region, bits):
    x0, x1, y0, y1 = region.bounding_box()
    with mp_context(bits):
        c = mpc(complex((x0 + x1) / 2, (y0 + y1) / 2))
        h = gmpy2.mpfr(max(x1 - x0, y1 - y0) / 2)
    return _Box(c, h, ())


class _Search:
    """Depth-first search over (box, level) with backtracking.

    A box accepted at level ``n`` is immediately tested at ``n + 1``; a box that
    straddles a boundary is split and its children, which inherit every earlier
    acceptance, are tried most-inside first.
    """

    def __init__(self, m, targets, mode, sched, budget, trace):
        self.m, self.targets, self.mode = m, targets, mode
        self.sched, self.budget, self.trace = sched, budget, trace
        self.accepted = [0] * len(targets)
        self.bits = [sched.base_bits] * len(targets)

    def classify(self, box, n):
        bits = self.bits[n]
        while True:
            if bits > self.sched.cap:
                raise Refusal("precision_overflow", f"level {n} needs {bits} bits", level=n,
                              bits=bits, cap=self.sched.cap)
            with mp_context(bits):
                status, slack, log2d = _classify(self.m, box, n, self.targets[n], self.mode)
            need = self.sched.bits((log2d or 0.0) + _log2_scale(box)) + 16
            if need <= bits:
                self.bits[n] = max(self.bits[n], bits)
                return status, slack
            # a derivative estimate taken at too low a precision can be wildly
            # off, so grow gradually and re-measure
            bits = min(need, 2 * bits)

    def run(self, root, want):
        finals = []
        stack = [(root, 0)]
        evals = 0
        while stack and len(finals) < want:
            box, n = stack.pop()
            evals += 1
            if evals > self.budget:
                break
            status, slack = self.classify(box, n)
            if status == "accept":
                self.accepted[n] += 1
                if n == len(self.targets) - 1:
                    box.slack = slack
                    finals.append(box)
                else:
                    stack.append((box, n + 1))
            elif status == "split":
                if _too_small(box, self.bits[n]):
                    continue
                with mp_context(self.bits[n]):
                    kids = _children(box)
                    order = [(_center_distance(self.m, k, n, self.targets[n]), k.key, k)
                             for k in kids]
                order.sort(key=lambda t: (t[0], t[1]), reverse=True)
                stack.extend((k, n) for _, _, k in order)
        self.trace.evaluations += evals
        return finals


def _log2_scale(box):
    return max(0.0, float(gmpy2.log2(abs(box.c) + 1)) - float(gmpy2.log2(box.h)))


def _too_small(box, bits):
    return box.h < (abs(box.c) + 1) * gmpy2.mpfr(2) ** (24 - bits)


def _center_distance(m, box, n, region):
    w, _ = _iterate(m, box.c, n)
    if w is None:
        return math.inf
    return float(mp_signed_distance(region, w))


def _region_seeds(region, m, n_rad=16, n_ang=64):
    if isinstance(region, CellCover):
        return np.array([complex(x, y) for x0, x1, y0, y1 in region.boxes
                         for x in np.linspace(x0, x1, 4) for y in np.linspace(y0, y1, 4)])
    if isinstance(region, Annulus):
        rs = np.geomspace(region.r_in, region.r_out, n_rad + 2)[1:-1]
        outer = region.r_out
    else:
        rs = region.radius * np.linspace(0, 1, n_rad + 1)[:-1]
        outer = region.radius
    if m.impl.trig:
        n_ang = int(min(4096, max(n_ang, math.ceil(8 * (abs(region.center) + outer)))))
    t = 2 * np.pi * np.arange(n_ang) / n_ang
    return (region.center + rs[:, None] * np.exp(1j * t)[None, :]).ravel()


def _depth(region, z):
    return -region.signed_distance(complex(z))


def _preimage(m, w, region, bits):
    """Deepest preimage of ``w`` inside ``region``, polished at ``bits``; or None."""
    from .covering import newton_log, usable_seeds

    seeds = usable_seeds(m, _region_seeds(region, m))
    wf = complex(w)
    zs, ok = newton_log(m, seeds, np.full(seeds.shape, np.log(wf)))
    cands = sorted({(round(z.real, 9), round(z.imag, 9)) for z in zs[ok]
                    if _depth(region, z) > 0},
                   key=lambda t: -_depth(region, complex(*t)))
    with mp_context(bits):
        for re, im in cands[:8]:
            z = mpc(complex(re, im))
            for _ in range(80):
                try:
                    step = (m.impl.mp_f(z) - w) / m.impl.mp_df(z)
                except ZeroDivisionError:
                    break
                z = z - step
                if abs(step) <= abs(z) * gmpy2.mpfr(2) ** (8 - bits):
                    if mp_signed_distance(region, z) < 0:
                        return z
                    break
    return None


def _pullback(m, targets, bits):
    """Backward chain ``w_n in E_n`` with ``f(w_n) = w_{n+1}``; returns ``w_0``."""
    last = targets[-1]
    if isinstance(last, Annulus):
        w = last.center + (last.r_in + last.r_out) / 2
    elif isinstance(last, Disc):
        w = last.center
    else:
        w = last.probes(1)[0]
    with mp_context(bits):
        w = mpc(w)
    for n in range(len(targets) - 2, -1, -1):
        w = _preimage(m, w, targets[n], bits)
        if w is None:
            return None, n
    return w, None


def _root_box(m, targets, zeta, bits):
    """Box about ``zeta`` small enough to fit every level in the linear regime."""
    h = None
    with mp_context(bits):
        z = zeta
        log2d = 0.0
        for n, region in enumerate(targets):
            slack = -mp_signed_distance(region, z)
            if slack <= 0:
                return None
            cand = slack / (16 * gmpy2.mpfr(2) ** log2d)
            h = cand if h is None else min(h, cand)
            if n + 1 < len(targets):
                log2d += float(gmpy2.log2(abs(m.impl.mp_df(z))))
                z = m.impl.mp_f(z)
        return _Box(mpc(zeta), gmpy2.mpfr(h), ())


def refine_point(m, seq, mode="bounded", precision=None, want=8, budget=200_000,
                 verify_slack=1e-6, strategy="pullback"):
    """Find ``zeta`` with ``f^n(zeta) in E_n`` for ``n = 0..N``.

    ``strategy="pullback"`` seeds the box search with a backward preimage
    chain (``f(E_n) ⊇ E_{n+1}`` guarantees each preimage exists) and then
    certifies a box about it level by level.  ``strategy="forward"`` searches
    the whole of ``E_0``, which is only practical for mild maps.

    Returns ``(zeta, RefinementTrace)``; ``zeta`` is a gmpy2 ``mpc``.
    """
    if mode not in ("heuristic", "bounded"):
        raise ParameterError("mode must be 'heuristic' or 'bounded'")
    if strategy not in ("pullback", "forward"):
        raise ParameterError("strategy must be 'pullback' or 'forward'")
    if not isinstance(seq, TargetSequence):
        seq = TargetSequence(list(seq))
    sched = precision if isinstance(precision, PrecisionSchedule) else PrecisionSchedule(precision)
    targets = seq.shrunk()
    trace = RefinementTrace(mode)
    search = _Search(m, targets, mode, sched, budget, trace)
    root = None
    if strategy == "pullback" and len(targets) > 1:
        zeta0, failed, bits = _pullback_adaptive(m, targets, sched)
        if zeta0 is None:
            trace.survivors = [0] * len(targets)
            raise Refusal("exhausted", f"no preimage inside target {failed}", level=failed)
        root = _root_box(m, targets, zeta0, bits)
    if root is None:
        root = _initial_box(targets[0], sched.base_bits)
    finals = search.run(root, want)
    trace.survivors = list(search.accepted)
    trace.precision_bits = list(search.bits)
    if not finals:
        level = next((i for i, c in enumerate(search.accepted) if c == 0), len(targets))
        raise Refusal("exhausted", f"no surviving boxes at level {level}", level=level,
                      survivors=trace.survivors)
    bits = max(search.bits)
    finals.sort(key=lambda b: (-b.slack, b.key))
    # a posteriori check, falling back to the next best box if needed
    for box in finals:
        zeta = box.c
        rows = verify_itinerary(m, zeta, seq, verify_slack, bits)
        rows2 = verify_itinerary(m, zeta, seq, verify_slack, min(2 * bits, 2 * PRECISION_CAP))
        if all(r.inside for r in rows) and all(r.inside for r in rows2):
            trace.zeta = zeta
            trace.verification, trace.verification_doubled = rows, rows2
            return zeta, trace
    raise Refusal("exhausted", "no surviving box passed a posteriori verification",
                  survivors=trace.survivors)


def _chain_log2d(m, zeta, n, bits):
    with mp_context(bits):
        _, log2d = _iterate(m, zeta, n)
    return log2d


def _pullback_adaptive(m, targets, sched):
    """Pull back, raising precision until it covers the chain's derivative growth."""
    bits = sched.base_bits + 64
    scale = math.log2(_region_scale(targets[0]))
    for _ in range(4):
        zeta, failed = _pullback(m, targets, bits)
        if zeta is None:
            return None, failed, bits
        log2d = _chain_log2d(m, zeta, len(targets) - 1, bits) or 0.0
        need = sched.bits(log2d + scale + 32)
        if need > sched.cap:
            raise Refusal("precision_overflow", f"pull-back needs {need} bits", bits=need,
                          cap=sched.cap)
        if need <= bits:
            return zeta, None, bits
        bits = need
    return zeta, None, bits


def _region_scale(region):
    x0, x1, y0, y1 = region.bounding_box()
    return max(abs(x0), abs(x1), abs(y0), abs(y1), 1.0)


def verify_itinerary(m, zeta, seq, slack=0.0, precision_bits=None):
    """Per-step membership of ``f^n(zeta)`` in ``targets[n]`` dilated by ``1+slack``."""
    if slack < 0:
        raise ParameterError("slack must be nonnegative")
    targets = seq.targets if isinstance(seq, TargetSequence) else list(seq)
    bits = precision_bits or default_precision()
    rows = []
    with mp_context(bits):
        z = gmpy2.mpc(zeta) if isinstance(zeta, MPC) else mpc(zeta)
        for n, region in enumerate(targets):
            if n > 0:
                try:
                    z = m.impl.mp_f(z) if near_pole(m, z) is None else None
                except ZeroDivisionError:
                    z = None
            if z is None or not (gmpy2.is_finite(z.real) and gmpy2.is_finite(z.imag)):
                rows.append(StepReport(n, math.inf, math.inf, False))
                rows.extend(StepReport(k, math.inf, math.inf, False)
                            for k in range(n + 1, len(targets)))
                break
            region_s = region.dilate(1 + slack) if slack else region
            sd = mp_signed_distance(region_s, z)
            rows.append(StepReport(n, float(abs(z)), float(sd), bool(sd <= 0)))
    return rows
