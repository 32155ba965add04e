"""Closed-form map families.

Every family is evaluated through two back ends:

* a vectorized float64 path that works with ``log f`` rather than ``f`` so
  that values such as ``exp(exp(z))`` never overflow (used for circle scans,
  boundary sampling and rendering), and
* a scalar gmpy2 path at arbitrary precision (used for orbits and itinerary
  refinement).  Callers activate the precision with :func:`mp_context`.

The float path returns complex logarithms; only ``exp(real part)`` is
meaningful for magnitudes, the imaginary part is an argument modulo 2*pi.
"""

import math

import gmpy2
import numpy as np
from numpy.polynomial import polynomial as P

from .errors import ParameterError

TWO_PI = 2.0 * math.pi


def mp_context(bits):
    """gmpy2 context with ``bits`` of mantissa and the widest exponent range."""
    return gmpy2.context(
        precision=int(bits),
        emax=gmpy2.get_emax_max(),
        emin=gmpy2.get_emin_min(),
    )


_MPC = type(gmpy2.mpc(0))


def mpc(z):
    if isinstance(z, _MPC):
        return z
    z = complex(z)
    return gmpy2.mpc(z.real, z.imag)


def _log_coef(c):
    with np.errstate(divide="ignore"):
        return np.log(complex(c))


def lse(terms):
    """``log(sum(exp(t)))`` for complex log-terms, without overflow."""
    terms = np.broadcast_arrays(*terms)
    re = np.stack([t.real for t in terms])
    with np.errstate(invalid="ignore"):
        m = np.max(re, axis=0)
    finite = np.isfinite(m)
    shift = np.where(finite, m, 0.0)
    with np.errstate(invalid="ignore", over="ignore", under="ignore"):
        s = sum(np.exp(t - shift) for t in terms)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = shift + np.log(s)
    # every term was exp(-inf) = 0
    return np.where(finite, out, complex(-np.inf, 0.0))


def log_poly(coeffs, z):
    """Complex log of a polynomial (ascending coefficients), stable for large |z|."""
    coeffs = np.trim_zeros(np.asarray(coeffs, dtype=complex), "b")
    z = np.asarray(z, dtype=complex)
    if coeffs.size == 0:
        return np.full(z.shape, complex(-np.inf, 0.0))
    deg = coeffs.size - 1
    big = np.abs(z) > 1.0
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        small_val = np.log(P.polyval(np.where(big, 0.0, z), coeffs))
        u = np.where(big, 1.0 / np.where(big, z, 1.0), 0.0)
        big_val = deg * np.log(np.where(big, z, 1.0)) + np.log(P.polyval(u, coeffs[::-1]))
    return np.where(big, big_val, small_val)


def mp_poly(coeffs, z):
    acc = gmpy2.mpc(0)
    for a in reversed(coeffs):
        acc = acc * z + mpc(a)
    return acc


def _parse_complex(value, name):
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    try:
        return complex(value)
    except (TypeError, ValueError):
        raise ParameterError(f"parameter {name!r} must be a number, got {value!r}")


def _parse_coeffs(value, name):
    if value is None:
        return ()
    if not isinstance(value, (list, tuple)):
        raise ParameterError(f"parameter {name!r} must be a coefficient list")
    return tuple(_parse_complex(v, name) for v in value)


class Family:
    name = ""
    formula = ""
    note = ""
    #: contains sin/cos/tan of z, so |f| oscillates ~r times around |z|=r
    trig = False
    #: a radius beyond which the catalogue dynamics is "large"
    scale = 1.0
    defaults = {}

    def __init__(self, **params):
        unknown = set(params) - set(self.defaults)
        if unknown:
            raise ParameterError(f"{self.name}: unknown parameters {sorted(unknown)}")
        merged = dict(self.defaults)
        merged.update(params)
        self.params = merged
        self._setup()

    def _setup(self):
        pass

    # poles -----------------------------------------------------------------
    infinitely_many_poles = False

    def finite_poles(self):
        return ()

    def poles_in(self, center, radius):
        center = complex(center)
        return [(p, k) for p, k in self.finite_poles() if abs(p - center) <= radius]

    # float path ------------------------------------------------------------
    def log_f(self, z):
        raise NotImplementedError

    def log_df(self, z):
        raise NotImplementedError

    # arbitrary precision ---------------------------------------------------
    def mp_f(self, z):
        raise NotImplementedError

    def mp_df(self, z):
        raise NotImplementedError


class ExpScaled(Family):
    name = "exp_scaled"
    formula = "lambda*exp(z)"
    note = "attracting fixed point for 0 < lambda < 1/e; any lambda != 0 accepted"
    defaults = {"lambda": 1.0}
    scale = 1.0

    def _setup(self):
        lam = _parse_complex(self.params["lambda"], "lambda")
        if lam == 0:
            raise ParameterError("exp_scaled: lambda must be nonzero")
        self.params["lambda"] = lam
        self.lam = lam
        self._loglam = _log_coef(lam)

    def log_f(self, z):
        return self._loglam + np.asarray(z, dtype=complex)

    log_df = log_f

    def mp_f(self, z):
        return mpc(self.lam) * gmpy2.exp(z)

    mp_df = mp_f


class FatouBaker(Family):
    name = "fatou_baker"
    formula = "z + 1 + exp(-z)"
    note = "Baker domain; orbits grow like z + n"
    scale = 2.0

    def log_f(self, z):
        z = np.asarray(z, dtype=complex)
        with np.errstate(divide="ignore"):
            return lse([np.log(z + 1), -z])

    def log_df(self, z):
        z = np.asarray(z, dtype=complex)
        return lse([np.zeros_like(z), -z + 1j * math.pi])

    def mp_f(self, z):
        return z + 1 + gmpy2.exp(-z)

    def mp_df(self, z):
        return 1 - gmpy2.exp(-z)


class SineShift(Family):
    name = "sine_shift"
    formula = "z + sin(z) + 2*pi"
    note = "necklace of bounded Fatou components at (2k+1)pi"
    trig = True
    scale = 2 * math.pi

    _half_over_i = _log_coef(1 / 2j)
    _neg_half_over_i = _log_coef(-1 / 2j)

    def log_f(self, z):
        z = np.asarray(z, dtype=complex)
        with np.errstate(divide="ignore", invalid="ignore"):
            return lse([np.log(z + TWO_PI), self._half_over_i + 1j * z,
                        self._neg_half_over_i - 1j * z])

    def log_df(self, z):
        z = np.asarray(z, dtype=complex)
        h = math.log(0.5)
        return lse([np.zeros_like(z), h + 1j * z, h - 1j * z])

    def mp_f(self, z):
        return z + gmpy2.sin(z) + 2 * gmpy2.const_pi()

    def mp_df(self, z):
        return 1 + gmpy2.cos(z)


class ExpShift(Family):
    name = "exp_shift"
    formula = "z + exp(-z) + 2*pi*i"
    note = "Baker domain with escape in the imaginary direction"
    scale = 2 * math.pi

    def log_f(self, z):
        z = np.asarray(z, dtype=complex)
        with np.errstate(divide="ignore"):
            return lse([np.log(z + 1j * TWO_PI), -z])

    def log_df(self, z):
        z = np.asarray(z, dtype=complex)
        return lse([np.zeros_like(z), -z + 1j * math.pi])

    def mp_f(self, z):
        return z + gmpy2.exp(-z) + gmpy2.mpc(0, 2 * gmpy2.const_pi())

    def mp_df(self, z):
        return 1 - gmpy2.exp(-z)


def _quarter_series_coeffs(n, derivative=False):
    if derivative:
        return np.array([(k + 1) / math.factorial(4 * (k + 1)) for k in range(n)])
    return np.array([1.0 / math.factorial(4 * k) for k in range(n)])


class QuarterCos(Family):
    name = "quarter_cos"
    formula = "(cos(z^(1/4)) + cosh(z^(1/4)))/2"
    note = "series 1 + z/4! + z^2/8! + ...; order 1/4"
    scale = 1.0

    _series = _quarter_series_coeffs(14)
    _dseries = _quarter_series_coeffs(14, derivative=True)
    _q = math.log(0.25)
    _iq = _log_coef(0.25j)
    _niq = _log_coef(-0.25j)

    def log_f(self, z):
        z = np.asarray(z, dtype=complex)
        small = np.abs(z) <= 1.0
        with np.errstate(divide="ignore", invalid="ignore"):
            w = np.where(small, 1.0, z) ** 0.25
            closed = lse([self._q + w, self._q - w, self._q + 1j * w, self._q - 1j * w])
            series = np.log(P.polyval(np.where(small, z, 0.0), self._series))
        return np.where(small, series, closed)

    def log_df(self, z):
        z = np.asarray(z, dtype=complex)
        small = np.abs(z) <= 1.0
        with np.errstate(divide="ignore", invalid="ignore"):
            zz = np.where(small, 1.0, z)
            w = zz ** 0.25
            # f' = (w/4z) * (sinh w - sin w)/2
            inner = lse([self._q + w, math.log(0.25) + 1j * math.pi - w,
                         self._iq + 1j * w, self._niq - 1j * w])
            closed = np.log(w) - np.log(4 * zz) + inner
            series = np.log(P.polyval(np.where(small, z, 0.0), self._dseries))
        return np.where(small, series, closed)

    @staticmethod
    def _mp_series(z, derivative=False):
        prec = gmpy2.get_context().precision
        eps = gmpy2.mpfr(2) ** (-prec - 8)
        total = gmpy2.mpc(0)
        k = 1 if derivative else 0
        power = gmpy2.mpc(1)
        while True:
            coef = gmpy2.mpfr(k if derivative else 1) / gmpy2.fac(4 * k)
            term = coef * power
            total += term
            if k > 2 and abs(term) <= eps * abs(total):
                return total
            power *= z
            k += 1

    def mp_f(self, z):
        if abs(z) <= 1:
            return self._mp_series(z)
        w = gmpy2.exp(gmpy2.log(z) / 4)
        return (gmpy2.cos(w) + gmpy2.cosh(w)) / 2

    def mp_df(self, z):
        if abs(z) <= 1:
            return self._mp_series(z, derivative=True)
        w = gmpy2.exp(gmpy2.log(z) / 4)
        return w / (4 * z) * (gmpy2.sinh(w) - gmpy2.sin(w)) / 2


class BergweilerBaker(Family):
    name = "bergweiler_baker"
    formula = "2z + 2 - log 2 - exp(z)"
    note = "Baker domain with (3/2)^n |z| <= |f^n(z)| <= 3^n |z|"
    scale = 2 * (3 + math.log(2))

    _c = 2 - math.log(2)

    def log_f(self, z):
        z = np.asarray(z, dtype=complex)
        with np.errstate(divide="ignore", invalid="ignore"):
            return lse([np.log(2 * z + self._c), z + 1j * math.pi])

    def log_df(self, z):
        z = np.asarray(z, dtype=complex)
        return lse([np.full_like(z, math.log(2)), z + 1j * math.pi])

    def mp_f(self, z):
        return 2 * z + 2 - gmpy2.log(gmpy2.mpfr(2)) - gmpy2.exp(z)

    def mp_df(self, z):
        return 2 - gmpy2.exp(z)


class SinPole(Family):
    name = "sin_pole"
    formula = "lambda*sin(z) - epsilon/(z - pi)"
    note = "one pole; 0 < lambda < 1, epsilon > 0 small"
    trig = True
    defaults = {"lambda": 0.5, "epsilon": 0.01}
    scale = math.pi

    def _setup(self):
        lam = _parse_complex(self.params["lambda"], "lambda")
        eps = _parse_complex(self.params["epsilon"], "epsilon")
        if lam == 0:
            raise ParameterError("sin_pole: lambda must be nonzero")
        if eps == 0:
            raise ParameterError("sin_pole: epsilon must be nonzero (otherwise no pole)")
        self.params.update({"lambda": lam, "epsilon": eps})
        self.lam, self.eps = lam, eps
        self._a = _log_coef(lam / 2j)
        self._b = _log_coef(-lam / 2j)
        self._ca = _log_coef(lam / 2)

    def finite_poles(self):
        return ((complex(math.pi, 0.0), 1),)

    def log_f(self, z):
        z = np.asarray(z, dtype=complex)
        with np.errstate(divide="ignore", invalid="ignore"):
            return lse([self._a + 1j * z, self._b - 1j * z,
                        _log_coef(-self.eps) - np.log(z - math.pi)])

    def log_df(self, z):
        z = np.asarray(z, dtype=complex)
        with np.errstate(divide="ignore", invalid="ignore"):
            return lse([self._ca + 1j * z, self._ca - 1j * z,
                        _log_coef(self.eps) - 2 * np.log(z - math.pi)])

    def mp_f(self, z):
        pi = gmpy2.const_pi()
        return mpc(self.lam) * gmpy2.sin(z) - mpc(self.eps) / (z - pi)

    def mp_df(self, z):
        pi = gmpy2.const_pi()
        return mpc(self.lam) * gmpy2.cos(z) + mpc(self.eps) / (z - pi) ** 2


class HalfTan(Family):
    name = "half_tan"
    formula = "tan(z)/2"
    note = "infinitely many poles, totally disconnected Julia set"
    trig = True
    infinitely_many_poles = True
    scale = math.pi / 2

    def poles_in(self, center, radius):
        center = complex(center)
        if abs(center.imag) > radius:
            return []
        lo = math.floor((center.real - radius - math.pi / 2) / math.pi)
        hi = math.ceil((center.real + radius - math.pi / 2) / math.pi)
        out = []
        for k in range(lo, hi + 1):
            p = complex(math.pi / 2 + k * math.pi, 0.0)
            if abs(p - center) <= radius:
                out.append((p, 1))
        return out

    @staticmethod
    def _tan(z):
        # exp(2iz) is small in the upper half plane, exp(-2iz) in the lower
        upper = z.imag >= 0
        with np.errstate(over="ignore", invalid="ignore"):
            u = np.exp(np.where(upper, 2j * z, -2j * z))
            t = -1j * (u - 1) / (u + 1)
        return np.where(upper, t, -t)

    def log_f(self, z):
        z = np.asarray(z, dtype=complex)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.log(self._tan(z) / 2)

    def log_df(self, z):
        # sec^2(z)/2 = 2 / (e^{iz} + e^{-iz})^2, no cancellation against 1 + tan^2
        z = np.asarray(z, dtype=complex)
        return math.log(2.0) - 2 * lse([1j * z, -1j * z])

    def mp_f(self, z):
        return gmpy2.tan(z) / 2

    def mp_df(self, z):
        c = gmpy2.cos(z)
        return 1 / (2 * c * c)


def _roots_with_order(coeffs, tol=1e-7):
    coeffs = np.trim_zeros(np.asarray(coeffs, dtype=complex), "b")
    if coeffs.size <= 1:
        return []
    roots = sorted(np.roots(coeffs[::-1]), key=lambda r: (round(r.real, 9), round(r.imag, 9)))
    grouped = []
    for r in roots:
        for g in grouped:
            if abs(g[0] - r) <= tol * (1 + abs(r)):
                g[1] += 1
                break
        else:
            grouped.append([complex(r), 1])
    return [(r, k) for r, k in grouped]


class PolyExp(Family):
    """``p(z) + q(z) exp(c z)`` with rational ``p``, ``q``.

    Coefficients are ascending: ``[a0, a1, a2]`` is ``a0 + a1 z + a2 z^2``.
    """

    name = "poly_exp"
    formula = "p(z) + q(z)*exp(c*z), p and q rational"
    note = "configurable family for tests"
    defaults = {"p": [0.0, 0.0, 1.0], "q": [], "c": 1.0, "p_den": [1.0], "q_den": [1.0]}

    def _setup(self):
        self.p = _parse_coeffs(self.params["p"], "p")
        self.q = _parse_coeffs(self.params["q"], "q")
        self.p_den = _parse_coeffs(self.params["p_den"], "p_den") or (1.0,)
        self.q_den = _parse_coeffs(self.params["q_den"], "q_den") or (1.0,)
        self.c = _parse_complex(self.params["c"], "c")
        for name, den in (("p_den", self.p_den), ("q_den", self.q_den)):
            if not any(den):
                raise ParameterError(f"poly_exp: {name} must be a nonzero polynomial")
        self.params.update({"p": list(self.p), "q": list(self.q), "c": self.c,
                            "p_den": list(self.p_den), "q_den": list(self.q_den)})
        self.has_q = any(self.q)
        self.trig = self.has_q and self.c.imag != 0
        pn, pd = np.array(self.p or (0.0,), complex), np.array(self.p_den, complex)
        qn, qd = np.array(self.q or (0.0,), complex), np.array(self.q_den, complex)
        # p' = (pn' pd - pn pd') / pd^2 ; (q e^{cz})' = ((qn' qd - qn qd') / qd^2 + c q) e^{cz}
        self._dp_num = P.polysub(P.polymul(P.polyder(pn), pd), P.polymul(pn, P.polyder(pd)))
        self._dp_den = P.polymul(pd, pd)
        self._dq_num = P.polyadd(
            P.polysub(P.polymul(P.polyder(qn), qd), P.polymul(qn, P.polyder(qd))),
            self.c * P.polymul(qn, qd))
        self._dq_den = P.polymul(qd, qd)
        poles = _roots_with_order(self.p_den)
        if self.has_q:
            poles += _roots_with_order(self.q_den)
        self._poles = tuple(poles)

    def finite_poles(self):
        return self._poles

    def log_f(self, z):
        z = np.asarray(z, dtype=complex)
        terms = [log_poly(self.p, z) - log_poly(self.p_den, z)]
        if self.has_q:
            terms.append(log_poly(self.q, z) - log_poly(self.q_den, z) + self.c * z)
        return lse(terms)

    def log_df(self, z):
        z = np.asarray(z, dtype=complex)
        terms = [log_poly(self._dp_num, z) - log_poly(self._dp_den, z)]
        if self.has_q:
            terms.append(log_poly(self._dq_num, z) - log_poly(self._dq_den, z) + self.c * z)
        return lse(terms)

    def mp_f(self, z):
        out = mp_poly(self.p, z) / mp_poly(self.p_den, z)
        if self.has_q:
            out += mp_poly(self.q, z) / mp_poly(self.q_den, z) * gmpy2.exp(mpc(self.c) * z)
        return out

    def mp_df(self, z):
        out = mp_poly(self._dp_num, z) / mp_poly(self._dp_den, z)
        if self.has_q:
            out += mp_poly(self._dq_num, z) / mp_poly(self._dq_den, z) * gmpy2.exp(mpc(self.c) * z)
        return out


FAMILIES = {cls.name: cls for cls in (
    ExpScaled, FatouBaker, SineShift, ExpShift, QuarterCos,
    BergweilerBaker, SinPole, HalfTan, PolyExp)}
