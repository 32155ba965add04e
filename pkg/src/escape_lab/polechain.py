"""Chains of discs around poles, islands, and the 60-step return cycle.

For a meromorphic map with infinitely many poles we pick discs ``D_m``
centred at successive poles so that ``f(D_m) ⊇ D_{m+1}``.  Every fifth disc
``D_{5j+4}`` also covers an island ``V_j`` that is mapped back over one of
``D_{5j}, ..., D_{5j+4}``, which closes a loop of length 2..6.  As 60 is a
multiple of every such length, ``f^60(D_{5j+4}) ⊇ D_{5j+4}``.

Islands are found by Newton's method: Ahlfors' theorem guarantees they exist
but gives no construction.
"""

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .covering import certify_covering, newton_log
from .errors import Refusal
from .regions import Disc

CYCLE = 60
SPIRAL_SEEDS = 32


@dataclass
class Link:
    source: str
    target: str
    certificate: object

    @property
    def certified(self):
        return self.certificate.certified

    def to_dict(self):
        return {"source": self.source, "target": self.target,
                "certified": self.certified, "margin": self.certificate.margin,
                "method": self.certificate.method}


@dataclass
class Island:
    j: int
    disc: Disc
    m_target: int
    into: Link      # f(D_{5j+4}) ⊇ V_j
    out: Link       # f(V_j) ⊇ D_{m(j)}
    seed: complex
    newton_residual: float

    def to_dict(self):
        return {"j": self.j, "center": [self.disc.center.real, self.disc.center.imag],
                "radius": self.disc.radius, "m_target": self.m_target,
                "into": self.into.to_dict(), "out": self.out.to_dict(),
                "newton_residual": self.newton_residual}


@dataclass
class CycleCertificate:
    """A closed walk of certified links of total length 60."""
    anchor: str
    loop: list
    links: list

    @property
    def length(self):
        return len(self.links)

    @property
    def composed(self):
        """Links chain head to tail, start and end at the anchor, all certified."""
        if not self.links or self.links[0].source != self.anchor:
            return False
        if self.links[-1].target != self.anchor:
            return False
        joined = all(a.target == b.source for a, b in zip(self.links, self.links[1:]))
        return joined and all(l.certified for l in self.links)

    def to_dict(self):
        return {"anchor": self.anchor, "loop": self.loop, "length": self.length,
                "composed": self.composed}


@dataclass
class PoleChain:
    map_label: str
    discs: list
    links: list
    islands: list = field(default_factory=list)
    cycles: list = field(default_factory=list)

    @property
    def all_certified(self):
        return (all(l.certified for l in self.links)
                and all(i.into.certified and i.out.certified for i in self.islands)
                and all(c.composed for c in self.cycles))

    def to_dict(self):
        return {"map": self.map_label,
                "discs": [{"center": [d.center.real, d.center.imag], "radius": d.radius}
                          for d in self.discs],
                "links": [l.to_dict() for l in self.links],
                "islands": [i.to_dict() for i in self.islands],
                "cycles": [c.to_dict() for c in self.cycles],
                "all_certified": self.all_certified}


def _disc_name(m):
    return f"D{m}"


def _island_name(j):
    return f"V{j}"


def island_target(j):
    """``m(j)`` in ``{5j, ..., 5j+4}``, cycling the loop length through 2..6."""
    return 5 * j + 4 - (j % 5)


def _pole_ladder(m, count, radius, window=1e4):
    """The first ``count`` poles on the positive real side whose discs are usable."""
    if not m.has_poles:
        raise Refusal("pole_enumeration_exhausted", f"{m.label} has no poles")
    found = sorted((p for p, _ in m.poles_in(window / 2, window / 2 + radius)),
                   key=lambda p: (abs(p), p.real))
    ladder = []
    for p in found:
        if all(abs(p - q) > 2 * radius for q in ladder):
            ladder.append(p)
        if len(ladder) == count:
            return ladder
    raise Refusal("pole_enumeration_exhausted",
                  f"only {len(ladder)} separated poles in the window, {count} needed",
                  found=len(ladder), needed=count)


def _boundary_max(m, disc, n=1024):
    t = 2 * np.pi * np.arange(n) / n
    with np.errstate(all="ignore"):
        lv = m.log_values(disc.center + disc.radius * np.exp(1j * t)).real
    return float(np.exp(np.max(lv)))


def _spiral(center, n=SPIRAL_SEEDS, r_min=1e-3, r_max=1.0):
    k = np.arange(n)
    rho = r_min * (r_max / r_min) ** (k / (n - 1))
    return center + rho * np.exp(1j * k * (math.pi * (3 - math.sqrt(5))))


def find_island(m, source, target, reference_pole, scale=3.0, n_samples=4096):
    """Disc ``V`` near ``reference_pole`` with ``f(source) ⊇ V`` and ``f(V) ⊇ target``.

    Seeds lie on a spiral around the pole; the first verified candidate wins.
    Returns ``(disc, into_cert, out_cert, seed, residual)``.
    """
    seeds = _spiral(reference_pole)
    logw = complex(cmath.log(target.center))
    zs, ok = newton_log(m, seeds, np.full(seeds.shape, logw))
    tried = 0
    for seed, z, good in zip(seeds, zs, ok):
        if not good:
            continue
        tried += 1
        with np.errstate(all="ignore"):
            dlog = float(m.log_derivs(np.array([z])).real[0])
        rad = scale * target.radius * math.exp(-dlog)
        if not (math.isfinite(rad) and rad > 0):
            continue
        if m.poles_in(z, rad):
            continue
        cand = Disc(complex(z), rad)
        out = certify_covering(m, cand, target, n_samples=n_samples)
        if not out.certified:
            continue
        into = certify_covering(m, source, cand, n_samples=n_samples)
        if not into.certified:
            continue
        res = abs(complex(m.values(np.array([z]))[0]) - target.center)
        return cand, into, out, complex(seed), res
    raise Refusal("island_not_found",
                  f"no verified island near {reference_pole:.6g} "
                  f"({tried} Newton solutions out of {len(seeds)} seeds)",
                  reference_pole=str(reference_pole), converged=tried)


def build_pole_chain(m, n_discs, radius=0.5, n_samples=4096, islands=True):
    """Pole-centred discs with certified consecutive links, islands and 60-cycles.

    Raises ``Refusal("pole_enumeration_exhausted")`` for maps without poles or
    with too few poles in the search window.
    """
    if not m.infinitely_many_poles:
        raise Refusal("pole_enumeration_exhausted",
                      f"{m.label} has {len(m.poles)} poles; the chain needs infinitely many")
    if n_discs < 2:
        raise Refusal("pole_enumeration_exhausted", "need at least two discs")
    # extra poles serve as anchors for islands, beyond the chain itself
    n_islands = (n_discs - 5) // 5 + 1 if (islands and n_discs >= 5) else 0
    poles = _pole_ladder(m, n_discs + n_islands + 1, radius)
    discs = []
    for p in poles[:n_discs + n_islands + 1]:
        discs.append(Disc(p, radius))
    chain_discs = discs[:n_discs]
    links = []
    for i in range(n_discs - 1):
        cert = certify_covering(m, chain_discs[i], chain_discs[i + 1], n_samples=n_samples)
        links.append(Link(_disc_name(i), _disc_name(i + 1), cert))
    out = PoleChain(m.label, chain_discs, links)

    for j in range(n_islands):
        anchor = 5 * j + 4
        mj = island_target(j)
        ref = discs[n_discs + j].center
        disc, into, back, seed, res = find_island(
            m, chain_discs[anchor], chain_discs[mj], ref, n_samples=n_samples)
        isl = Island(j, disc, mj, Link(_disc_name(anchor), _island_name(j), into),
                     Link(_island_name(j), _disc_name(mj), back), seed, res)
        out.islands.append(isl)
        loop = [isl.into, isl.out] + links[mj:anchor]
        if CYCLE % len(loop):
            raise AssertionError("loop length must divide 60")
        out.cycles.append(CycleCertificate(
            _disc_name(anchor), [l.source for l in loop] + [loop[-1].target],
            loop * (CYCLE // len(loop))))
    return out
