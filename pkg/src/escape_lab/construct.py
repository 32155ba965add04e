"""Finite-horizon orbit constructions.

* slow points: ``|f^n(zeta)| <= a_n`` for ``N_0 <= n <= N``
* two-sided bands: ``a_n <= |f^n(zeta)| <= d^6 a_n``
* oscillating orbits that keep returning near 0 while going ever further out

Each construction lays out a sequence of target annuli with certified
coverings between consecutive ones and hands it to :func:`refine_point`.
"""

import json
import math
from dataclasses import dataclass, field

import gmpy2

from .chain import (AnnulusChain, ChainStep, ScaledParameters, add_loop, add_return,
                    build_chain, find_self_loop, schedule_itinerary, schedule_pauses)
from .covering import certify_covering
from .errors import ParameterError, Refusal
from .families import mp_context
from .itinerary import PrecisionSchedule, TargetSequence, refine_point
from .radial import find_min_modulus_radius, log_max_modulus, max_modulus, min_modulus
from .regions import Annulus
from .sequences import SequenceSpec, monotone_minorant, require_unbounded


@dataclass
class BandRow:
    n: int
    a_n: float
    modulus: float
    lower: float
    upper: float
    ok: bool
    ok_doubled: bool

    def to_dict(self):
        return dict(self.__dict__)


@dataclass
class ConstructionReport:
    kind: str
    map_label: str
    zeta: object
    horizon: int
    rows: list
    precision_bits: int
    N0: int = 0
    chain: object = None
    schedule: object = None
    trace: object = None
    extra: dict = field(default_factory=dict)

    @property
    def all_ok(self):
        return all(r.ok and r.ok_doubled for r in self.rows if r.n >= self.N0)

    def to_dict(self):
        z = self.zeta
        return {"kind": self.kind, "map": self.map_label,
                "zeta": {"re": str(z.real), "im": str(z.imag)},
                "horizon": self.horizon, "N0": self.N0, "precision_bits": self.precision_bits,
                "all_ok": self.all_ok, "rows": [r.to_dict() for r in self.rows],
                "chain": None if self.chain is None else self.chain.to_dict(),
                "schedule": None if self.schedule is None else self.schedule.to_dict(),
                "trace": None if self.trace is None else self.trace.to_dict(),
                "extra": self.extra}

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, default=str)

    def csv(self):
        lines = ["n,a_n,modulus,lower,upper,ok,ok_doubled"]
        for r in self.rows:
            lines.append(f"{r.n},{r.a_n!r},{r.modulus!r},{r.lower!r},{r.upper!r},"
                         f"{int(r.ok)},{int(r.ok_doubled)}")
        return "\n".join(lines) + "\n"


def _orbit_moduli(m, zeta, N, bits):
    out = []
    with mp_context(bits):
        z = gmpy2.mpc(zeta)
        out.append(abs(z))
        for _ in range(N):
            z = m.impl.mp_f(z)
            out.append(abs(z))
    return out


def _band_rows(m, zeta, N, bits, a, lower, upper):
    """Rows comparing ``|f^n(zeta)|`` with ``lower(n) <= . <= upper(n)`` at two precisions."""
    mods = _orbit_moduli(m, zeta, N, bits)
    mods2 = _orbit_moduli(m, zeta, N, 2 * bits)
    rows = []
    for n in range(N + 1):
        lo, hi = lower(n), upper(n)
        ok = lo <= mods[n] <= hi
        ok2 = lo <= mods2[n] <= hi
        rows.append(BandRow(n, a[n], float(mods[n]), lo, hi, bool(ok), bool(ok2)))
    return rows


def _first_stable(rows):
    """Smallest ``N0`` with every row from ``N0`` on satisfied."""
    n0 = len(rows)
    for r in reversed(rows):
        if not (r.ok and r.ok_doubled):
            break
        n0 = r.n
    return n0


def _sequence_targets(chain, indices):
    targets = [chain.annulus(i) for i in indices]
    certs = []
    for i, j in zip(indices, indices[1:]):
        cert = chain.link(i, j)
        if cert is None:
            raise Refusal("neither_certified", f"no certified link A_{i} -> A_{j}")
        certs.append(cert)
    return TargetSequence(targets, certs)


def _schedule(params):
    return PrecisionSchedule(params.base_bits, params.precision_cap)


# ---------------------------------------------------------------------------
# slow escape


def construct_slow_point(m, a, N, params=None, chain=None, loop_kind="self", chain_steps=2):
    """A point with ``|f^n(zeta)| <= a_n`` for ``N_0 <= n <= N``.

    Without an explicit ``chain`` the first annulus is a self-covering annulus
    under ``a'_0`` (the loop), followed by ``chain_steps`` outward steps.  The
    loop is paused in until ``a'`` has grown past the next annulus.
    """
    params = params or ScaledParameters()
    if N < 1:
        raise ParameterError("horizon N must be at least 1")
    spec = SequenceSpec.parse(a)
    vals = spec.values(N)
    a_prime = require_unbounded(vals)
    schedule = None
    if chain is None:
        loop, loop_cert = find_self_loop(m, a_prime[0])
        chain = build_chain(m, params, chain_steps, start=loop)
        add_loop(m, chain, 0, "self")
    if len(chain) > N:
        indices = list(range(N + 1))
    else:
        if not chain.loops:
            raise Refusal("no_loop_available", "chain shorter than the horizon and no loops")
        schedule = schedule_pauses(chain, a_prime, loop_kind, horizon=N)
        indices = schedule_itinerary(chain, schedule, N)
    seq = _sequence_targets(chain, indices)
    zeta, trace = refine_point(m, seq, precision=_schedule(params))
    bits = max(trace.precision_bits)
    rows = _band_rows(m, zeta, N, bits, vals, lambda n: 0.0, lambda n: vals[n])
    report = ConstructionReport("slow_point", m.label, zeta, N, rows, bits, _first_stable(rows),
                                chain, schedule, trace)
    report.extra["itinerary"] = indices
    report.extra["sequence"] = spec.to_dict()
    return report


# ---------------------------------------------------------------------------
# two-sided band


def construct_two_sided(m, a, d, c, N, K=1.0, params=None, n_window=32):
    """A point with ``a_n <= |f^n(zeta)| <= d^6 a_n`` for ``n <= N``."""
    params = params or ScaledParameters(d=d, c=c)
    if d <= 1 or c <= 0 or N < 0:
        raise ParameterError("need d > 1, c > 0 and N >= 0")
    spec = SequenceSpec.parse(a)
    vals = spec.values(N + 1)
    for n in range(N):
        if math.log(vals[n + 1]) > math.log(K) + log_max_modulus(m, vals[n]):
            raise Refusal("growth_violated", f"a_{n + 1} > K M(a_{n})", n=n)
    options = []
    for n in range(N + 1):
        pair = []
        for lo in (d * vals[n], d ** 4 * vals[n]):
            found = find_min_modulus_radius(m, lo, d, c, n_samples=n_window)
            if not found.found:
                raise Refusal("hypothesis_failed", f"no rho in ({lo:g}, {d * lo:g}) with "
                              f"m(rho) <= {c}", n=n, sampled_min=found.sampled_min)
            rho = found.rho
            pair.append(Annulus(0, rho / math.sqrt(d), rho * math.sqrt(d)))
        options.append(pair)
    # backward search for a certified choice E_n in {A'_n, A''_n}
    certs = {}

    def link(n, i, j):
        key = (n, i, j)
        if key not in certs:
            certs[key] = certify_covering(m, options[n][i], options[n + 1][j])
        return certs[key].certified

    good = [None] * (N + 1)
    good[N] = [0, 1]
    nxt = [dict() for _ in range(N + 1)]
    for n in range(N - 1, -1, -1):
        good[n] = []
        for i in (0, 1):
            for j in good[n + 1]:
                if link(n, i, j):
                    good[n].append(i)
                    nxt[n][i] = j
                    break
        if not good[n]:
            raise Refusal("neither_certified", f"no certified covering from step {n}", n=n)
    choice = [good[0][0]]
    for n in range(N):
        choice.append(nxt[n][choice[-1]])
    targets = [options[n][choice[n]] for n in range(N + 1)]
    cert_list = [certs[(n, choice[n], choice[n + 1])] for n in range(N)]
    seq = TargetSequence(targets, cert_list)
    zeta, trace = refine_point(m, seq, precision=_schedule(params))
    bits = max(trace.precision_bits)
    C = d ** 6
    rows = _band_rows(m, zeta, N, bits, vals, lambda n: vals[n], lambda n: C * vals[n])
    chain = AnnulusChain(m.label, [ChainStep(t, "two_sided_" + ("A'" if ch == 0 else "A''"),
                                             math.log(t.r_out) / math.log(t.r_in), 0.0,
                                             cert_list[n - 1] if n else None, True)
                                   for n, (t, ch) in enumerate(zip(targets, choice))])
    report = ConstructionReport("two_sided", m.label, zeta, N, rows, bits, 0, chain, None, trace)
    report.N0 = 0 if report.all_ok else _first_stable(rows)
    report.extra.update({"C": C, "choices": ["A'" if ch == 0 else "A''" for ch in choice],
                         "sequence": spec.to_dict()})
    return report


# ---------------------------------------------------------------------------
# oscillation


def construct_oscillating(m, low_bound, N, a=None, params=None, depth=3):
    """An orbit that returns to ``|z| <= low_bound`` between deeper excursions.

    Excursion ``j`` runs through chain annuli ``A_1..A_j`` (capped at ``depth``)
    and then returns to the near annulus ``L = A_0``.
    """
    params = params or ScaledParameters()
    if low_bound <= 1 or N < 1:
        raise ParameterError("need low_bound > 1 and N >= 1")
    near, _ = find_self_loop(m, low_bound)
    chain = build_chain(m, params, depth, start=near)
    add_loop(m, chain, 0, "self")
    for i in range(1, len(chain)):
        add_return(m, chain, i, 0)
    indices = [0]
    j = 1
    while len(indices) <= N:
        indices.extend(range(1, min(j, len(chain) - 1) + 1))
        indices.append(0)
        j += 1
    indices = indices[:N + 1]
    seq = _sequence_targets(chain, indices)
    zeta, trace = refine_point(m, seq, precision=_schedule(params))
    bits = max(trace.precision_bits)
    vals = [chain.annulus(i).r_out for i in indices]
    lows = [chain.annulus(i).r_in for i in indices]
    rows = _band_rows(m, zeta, N, bits, vals, lambda n: lows[n], lambda n: vals[n])
    mods = [r.modulus for r in rows]
    report = ConstructionReport("oscillating", m.label, zeta, N, rows, bits, 0, chain, None, trace)
    report.N0 = _first_stable(rows)
    report.extra.update(oscillation_summary(mods, low_bound))
    report.extra["itinerary"] = indices
    if a is not None:
        report.extra["sequence"] = SequenceSpec.parse(a).to_dict()
    return report


def oscillation_summary(moduli, low_bound):
    """Re-entries into ``|z| <= low_bound`` after leaving it, and running maxima."""
    reentries, completed = [], 0
    outside = False
    running = []
    best = 0.0
    for n, r in enumerate(moduli):
        best = max(best, r)
        running.append(best)
        if r > low_bound:
            outside = True
        elif outside:
            reentries.append(n)
            completed += 1
            outside = False
    return {"low_bound": low_bound, "reentries": reentries, "oscillations": completed,
            "running_max": running, "max_modulus": best}


# ---------------------------------------------------------------------------
# feasibility of the small-minimum-modulus mechanism


@dataclass
class FeasibilityReport:
    c: float
    rows: list
    intervals: list

    @property
    def flagged(self):
        return bool(self.intervals)

    def to_dict(self):
        return {"c": self.c, "flagged": self.flagged, "intervals": self.intervals,
                "rows": [{"r": r, "log_m": lm, "log_M": lM, "flag": f}
                         for r, lm, lM, f in self.rows]}


def feasibility_check(m, r_lo, r_hi, c, n_annuli=64):
    """Flag radius intervals where sampled ``m(r) > M(r)^c``."""
    if not 0 < r_lo < r_hi:
        raise ParameterError("need 0 < r_lo < r_hi")
    if n_annuli < 1:
        raise ParameterError("n_annuli must be positive")
    rows = []
    for i in range(n_annuli + 1):
        r = r_lo * (r_hi / r_lo) ** (i / n_annuli)
        lm = min_modulus(m, r).log_value
        lM = max_modulus(m, r).log_value
        rows.append((r, lm, lM, bool(lm > c * lM)))
    intervals = []
    start = None
    for i, row in enumerate(rows):
        if row[3] and start is None:
            start = row[0]
        if not row[3] and start is not None:
            intervals.append((start, rows[i - 1][0]))
            start = None
    if start is not None:
        intervals.append((start, rows[-1][0]))
    return FeasibilityReport(c, rows, intervals)
