"""Annulus chains ``f(A_{m-1}) ⊇ A_m``, self-return loops and pause schedules.

The radii at which the asymptotic covering estimates apply are far beyond
double precision, so chains are built at desk scale: every step is certified
directly with :func:`certify_covering`, and each step records which case of
the construction it imitates and whether that case's hypotheses actually held.
"""

import math
from dataclasses import dataclass, field

from .covering import certify_covering, harnack_cover
from .errors import ParameterError, Refusal
from .radial import find_min_modulus_radius
from .regions import Annulus

LOOP_MULTIPLE = {"self": 1, "two_step": 2, "cycle60": 60}


@dataclass
class ScaledParameters:
    """Desk-scale stand-ins for the asymptotic constants of the construction."""

    r0: float = 2.0
    growth_threshold: float = 3.0
    k0: float = 5.0
    d: float = 2.0
    c: float = 1.0
    radius_cap: float = 1e15
    base_bits: int = None
    precision_cap: int = 4096
    #: restrict successor exponents to the band [4, 5]
    faithful: bool = False

    def __post_init__(self):
        if self.r0 < 1:
            raise ParameterError("r0 must be at least 1")
        if self.growth_threshold < 3:
            raise ParameterError("growth_threshold must be at least 3")
        if not 4 <= self.k0 <= 5:
            raise ParameterError("k0 must lie in [4, 5]")
        if self.d <= 1 or self.c <= 0:
            raise ParameterError("need d > 1 and c > 0")

    def to_dict(self):
        return dict(self.__dict__)


@dataclass
class ChainStep:
    annulus: Annulus
    case_tag: str
    k: float
    s: float
    certificate: object = None
    lemma_faithful: bool = False
    note: str = ""

    def to_dict(self):
        return {"annulus": self.annulus.to_dict(), "case": self.case_tag, "k": self.k,
                "s": self.s, "lemma_faithful": self.lemma_faithful, "note": self.note,
                "certificate": None if self.certificate is None else self.certificate.to_dict()}


@dataclass
class Loop:
    kind: str
    certificates: list

    @property
    def period(self):
        return 2 if self.kind == "two_step" else 1


@dataclass
class AnnulusChain:
    map_label: str
    steps: list = field(default_factory=list)
    loops: dict = field(default_factory=dict)
    returns: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.steps)

    def annulus(self, i):
        return self.steps[i].annulus

    @property
    def outer_radii(self):
        return [s.annulus.r_out for s in self.steps]

    def link(self, i, j):
        """Certificate for ``f(A_i) ⊇ A_j`` if the chain holds one."""
        if j == i + 1:
            return self.steps[j].certificate
        if i == j and i in self.loops and self.loops[i].kind == "self":
            return self.loops[i].certificates[0]
        if j == i - 1 and j in self.loops and self.loops[j].kind == "two_step":
            return self.loops[j].certificates[0]
        return self.returns.get((i, j))

    def to_dict(self):
        return {"map": self.map_label, "steps": [s.to_dict() for s in self.steps],
                "loops": {str(k): v.kind for k, v in self.loops.items()},
                "returns": [list(k) for k in self.returns]}


def _k_of(a):
    return math.log(a.r_out) / math.log(a.r_in)


def _s_of(r):
    return math.sqrt(math.log(r)) if r > 1 else 0.0


INSET = 1.01


def _candidates(r, k_now, params, tag):
    radii = [r ** 10, r ** 5, r ** 3, r ** 2, r ** 1.5, 1.5 * r]
    if tag == "bohr":
        ks = [params.k0]
    elif params.faithful:
        ks = sorted({params.k0, 4.0} | ({k_now} if 4.0 <= k_now <= 5.0 else set()),
                    reverse=True)
    else:
        ks = [params.k0, 4.0, 3.0, 2.0, 1.5]
    exact = []
    for R in radii:
        if R <= r:
            continue
        for k in ks:
            if k * math.log(R) <= math.log(params.radius_cap):
                exact.append((R, R ** k))
    # 1% insets: for exact images such as those of monomials the plain
    # candidates touch the image boundary and can never certify
    inset = [(R * INSET, Rk / INSET) for R, Rk in exact if Rk / INSET > R * INSET]
    return exact + inset


def build_chain(m, params, M_steps, start=None, n_samples=4096):
    """Chain ``A_0, ..., A_M`` with certified consecutive coverings.

    Each step first looks for the small-minimum-modulus trigger of the
    Bohr-type case, then for the Harnack-type case (only reachable when
    ``sqrt(log r)`` exceeds ``2 pi``), and otherwise searches directly.
    """
    if m.infinitely_many_poles:
        raise Refusal("chain_stalled", "map has infinitely many poles; use the pole chain")
    if start is None:
        start = Annulus(0, params.r0, params.r0 ** params.k0)
    far = [p for p, _ in m.poles if abs(p) >= start.r_in]
    if far:
        raise ParameterError("r0 must lie beyond every pole")
    chain = AnnulusChain(m.label)
    k0 = _k_of(start)
    chain.steps.append(ChainStep(start, "start", k0, _s_of(start.r_in), None,
                                 4 <= k0 <= 5))
    for _ in range(M_steps):
        prev = chain.steps[-1].annulus
        r, k = prev.r_in, _k_of(prev)
        step = _next_step(m, prev, r, k, params, n_samples)
        if step is None:
            raise Refusal("chain_stalled", f"no certifiable successor of A({r:g}, {prev.r_out:g})",
                          step=len(chain.steps), r=r)
        chain.steps.append(step)
    return chain


def _next_step(m, prev, r, k, params, n_samples):
    hi = 0.375 * prev.r_out
    trigger = None
    if hi > 3 * r:
        found = find_min_modulus_radius(m, 3 * r, hi / (3 * r), 1.0, n_samples=16)
        trigger = found.rho
    s = _s_of(r)
    if trigger is None and s > max(2 * math.pi, 4 / (k - 1)):
        try:
            cert = harnack_cover(m, r, k, n_samples)
        except Refusal:
            cert = None
        if cert is not None and cert.certified:
            return ChainStep(cert.target, "harnack", _k_of(cert.target), _s_of(cert.target.r_in),
                             cert, True)
    tags = (["bohr"] if trigger is not None else []) + ["direct"]
    for tag in tags:
        for R, R_out in _candidates(r, k, params, tag):
            target = Annulus(0, R, R_out)
            k_next = _k_of(target)
            cert = certify_covering(m, prev, target, n_samples)
            if cert.certified:
                faithful = tag == "bohr" and R >= r ** 10 and 4 <= k_next <= 5
                note = f"trigger rho={trigger:.6g}" if trigger is not None else ""
                return ChainStep(target, tag, k_next, _s_of(R), cert, faithful, note)
    return None


def find_self_loop(m, outer_bound, ks=(5.0, 4.85, 4.5, 4.0, 3.0, 2.0), n_samples=4096):
    """Annulus ``A(r, r^k)`` inside ``|z| <= outer_bound`` with ``f(A) ⊇ A``."""
    for k in ks:
        r = (0.98 * outer_bound) ** (1 / k)
        if r <= 1:
            continue
        a = Annulus(0, r, r ** k)
        cert = certify_covering(m, a, a, n_samples)
        if cert.certified:
            return a, cert
    raise Refusal("no_loop_available", f"no self-covering annulus inside |z| <= {outer_bound}")


def add_loop(m, chain, index, kind, n_samples=4096):
    """Certify a return loop at chain step ``index``; returns the :class:`Loop`."""
    a = chain.annulus(index)
    if kind == "self":
        cert = certify_covering(m, a, a, n_samples)
    elif kind == "two_step":
        if index + 1 >= len(chain):
            raise Refusal("no_loop_available", "two-step loop needs a successor annulus")
        cert = certify_covering(m, chain.annulus(index + 1), a, n_samples)
    else:
        raise ParameterError("annulus chains support 'self' and 'two_step' loops")
    if not cert.certified:
        raise Refusal("no_loop_available", f"{kind} loop at step {index} not certified",
                      reason_detail=cert.reason)
    chain.loops[index] = Loop(kind, [cert])
    return chain.loops[index]


def add_return(m, chain, i, j, n_samples=4096):
    cert = certify_covering(m, chain.annulus(i), chain.annulus(j), n_samples)
    if not cert.certified:
        raise Refusal("neither_certified", f"return A_{i} -> A_{j} not certified")
    chain.returns[(i, j)] = cert
    return cert


# ---------------------------------------------------------------------------
# pause schedules


@dataclass
class PauseSchedule:
    """Pauses of ``d(j)`` steps at loop steps ``m(j)``; ``p(j) = d(1)+...+d(j)``."""

    loop_indices: list
    pause_lengths: list
    cumulative: list
    trigger_indices: list
    loop_kind: str
    horizon: int = None

    @property
    def multiple(self):
        return LOOP_MULTIPLE[self.loop_kind]

    def violations(self):
        """Every broken invariant, in integer arithmetic."""
        out = []
        mult = self.multiple
        n = len(self.loop_indices)
        if not (len(self.pause_lengths) == len(self.cumulative) == n
                and len(self.trigger_indices) == n):
            return ["length mismatch"]
        total = 0
        for j in range(n):
            d = self.pause_lengths[j]
            if d <= 0 or d % mult:
                out.append(f"d({j + 1})={d} is not a positive multiple of {mult}")
            total += d
            if self.cumulative[j] != total:
                out.append(f"p({j + 1})={self.cumulative[j]} != {total}")
            if j and self.loop_indices[j] <= self.loop_indices[j - 1]:
                out.append("loop indices must increase")
            trig = self.trigger_indices[j]
            if j and trig is not None:
                if self.loop_indices[j - 1] + self.cumulative[j - 1] < trig:
                    out.append(f"trigger constraint fails at j={j + 1}")
        return out

    @property
    def valid(self):
        return not self.violations()

    def to_dict(self):
        return {"loop_kind": self.loop_kind, "m": self.loop_indices, "d": self.pause_lengths,
                "p": self.cumulative, "n": self.trigger_indices, "horizon": self.horizon}


def _first_reaching(a_prime, radius):
    for n, v in enumerate(a_prime):
        if v >= radius:
            return n
    return None


def _round_up(x, mult):
    return max(mult, -(-x // mult) * mult)


def schedule_pauses(chain, a_prime, loop_kind, loop_steps=None, horizon=None):
    """Minimal pause lengths meeting ``m(j-1) + p(j-1) >= n(j)``.

    ``chain`` is an :class:`AnnulusChain` or a list of outer radii.  A loop
    whose trigger is never reached inside the prefix ``a_prime`` is padded so
    the pause lasts to ``horizon`` (or to the end of the prefix).
    """
    if loop_kind not in LOOP_MULTIPLE:
        raise ParameterError(f"loop_kind must be one of {sorted(LOOP_MULTIPLE)}")
    if isinstance(chain, AnnulusChain):
        radii = chain.outer_radii
        if loop_steps is None:
            loop_steps = sorted(i for i, lp in chain.loops.items() if lp.kind == loop_kind)
    else:
        radii = [float(r) for r in chain]
    loop_steps = sorted(loop_steps or [])
    a_prime = list(a_prime)
    if any(b < a for a, b in zip(a_prime, a_prime[1:])):
        raise ParameterError("a_prime must be nondecreasing (use monotone_minorant)")
    horizon = len(a_prime) - 1 if horizon is None else int(horizon)
    if not loop_steps:
        raise Refusal("no_loop_available", f"no certified {loop_kind} loop in the chain")
    mult = LOOP_MULTIPLE[loop_kind]
    ms, ds, ps, ns = [], [], [], []
    p = 0
    for j, mj in enumerate(loop_steps):
        if mj >= len(radii):
            raise ParameterError(f"loop index {mj} outside the chain")
        if ms and ms[-1] + p > horizon:
            break
        ms.append(mj)
        ns.append(_first_reaching(a_prime, radii[mj]))
        nxt = loop_steps[j + 1] if j + 1 < len(loop_steps) else None
        trig = None if nxt is None else _first_reaching(a_prime, radii[nxt])
        if trig is None:
            need = horizon - mj - p
            d = _round_up(need, mult)
            ds.append(d)
            p += d
            ps.append(p)
            break
        d = _round_up(trig - mj - p, mult)
        ds.append(d)
        p += d
        ps.append(p)
    return PauseSchedule(ms, ds, ps, ns, loop_kind, horizon)


def schedule_itinerary(chain, schedule, N):
    """Chain index visited at each time ``0..N`` under ``schedule``."""
    pauses = {} if schedule is None else dict(zip(schedule.loop_indices, schedule.pause_lengths))
    kind = None if schedule is None else schedule.loop_kind
    out = []
    idx = 0
    while len(out) <= N:
        out.append(idx)
        if idx in pauses:
            d = pauses.pop(idx)
            for t in range(d):
                if kind == "two_step":
                    out.append(idx + 1 if t % 2 == 0 else idx)
                else:
                    out.append(idx)
        idx += 1
        if idx >= len(chain) and len(out) <= N:
            raise Refusal("chain_stalled", f"chain of {len(chain)} steps too short for N={N}")
    return out[:N + 1]
