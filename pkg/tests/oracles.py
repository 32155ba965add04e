"""Independent reference computations used to build and check test values.

Nothing here imports the package's numerics: maps are re-implemented with
mpmath directly from their formulas.
"""

import math

import mpmath as mp
import numpy as np


def mp_map(family, **p):
    """Plain mpmath implementation of a catalogue family."""
    if family == "exp_scaled":
        lam = p.get("lambda", 1.0)
        return lambda z: lam * mp.exp(z)
    if family == "fatou_baker":
        return lambda z: z + 1 + mp.exp(-z)
    if family == "sine_shift":
        return lambda z: z + mp.sin(z) + 2 * mp.pi
    if family == "exp_shift":
        return lambda z: z + mp.exp(-z) + 2j * mp.pi
    if family == "bergweiler_baker":
        return lambda z: 2 * z + 2 - mp.log(2) - mp.exp(z)
    if family == "half_tan":
        return lambda z: mp.tan(z) / 2
    if family == "sin_pole":
        lam, eps = p.get("lambda", 0.5), p.get("epsilon", 0.01)
        return lambda z: lam * mp.sin(z) - eps / (z - mp.pi)
    if family == "quarter_cos":
        return quarter_cos_series
    if family == "poly_exp":
        # default parameters: p(z) = z^2, no exponential part
        return lambda z: z ** 2
    if family == "monomial":
        d = p["d"]
        return lambda z: z ** d
    raise KeyError(family)


def quarter_cos_series(z, terms=60):
    """``sum z^k / (4k)!``, the Taylor series of the quarter-cosine map."""
    z = mp.mpmathify(z)
    return mp.fsum(z ** k / mp.factorial(4 * k) for k in range(terms))


def mp_orbit(f, z, n, dps=60):
    with mp.workdps(dps):
        out = []
        z = mp.mpc(z)
        for _ in range(n):
            z = f(z)
            out.append(z)
        return out


def dense_circle_extrema(f_np, r, n=2 ** 20, refine=True):
    """Max and min of ``|f|`` on ``|z| = r`` by a dense scan plus local refinement."""
    t = 2 * np.pi * np.arange(n) / n
    v = np.abs(f_np(r * np.exp(1j * t)))
    out = []
    for pick in (np.argmax, np.argmin):
        i = int(pick(v))
        best = v[i]
        if refine:
            h = 2 * np.pi / n
            tt = np.linspace(t[i] - h, t[i] + h, 4097)
            vv = np.abs(f_np(r * np.exp(1j * tt)))
            best = vv.max() if pick is np.argmax else vv.min()
        out.append(float(best))
    return tuple(out)


def monomial_covers(d, r, R, t_in, t_out):
    """Truth for ``z^d``: ``A(t_in, t_out) ⊆ A(r^d, R^d)``."""
    return r ** d <= t_in and t_out <= R ** d


def suffix_min(a):
    return [min(a[k:]) for k in range(len(a))]


def schedule_ok(loop_indices, d, p, n, multiple):
    """Brute-force check of the pause bookkeeping, exact integer arithmetic."""
    if any(x % multiple or x <= 0 for x in d):
        return False
    acc = 0
    for j, x in enumerate(d):
        acc += x
        if p[j] != acc:
            return False
    for j in range(1, len(loop_indices)):
        if loop_indices[j - 1] + p[j - 1] < n[j]:
            return False
    return True


def compose_links(links, start):
    """Walk ``(source, target)`` pairs; the final name, or None if they do not chain."""
    cur = start
    for s, t in links:
        if s != cur:
            return None
        cur = t
    return cur


def iterated_max_modulus_exp(R, n):
    """``ln M^k(R)`` for ``exp``: each step is ``t -> e^t``."""
    out, t = [], math.log(R)
    for _ in range(n):
        t = math.exp(t)
        out.append(t)
    return out
