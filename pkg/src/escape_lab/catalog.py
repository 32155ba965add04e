"""Map descriptors, pointwise evaluation and orbits."""

import json
import math
import os
from dataclasses import dataclass, field

import gmpy2
import numpy as np

from .errors import ParameterError
from .families import FAMILIES, mp_context, mpc

MPC = type(gmpy2.mpc(0))

DEFAULT_OVERFLOW_CAP = 1e6
RENDER_PRECISION = 53


def default_precision():
    """Construction precision; ``ESCAPE_LAB_PRECISION`` overrides the default 256."""
    raw = os.environ.get("ESCAPE_LAB_PRECISION")
    if raw is None:
        return 256
    try:
        bits = int(raw)
    except ValueError:
        raise ParameterError(f"ESCAPE_LAB_PRECISION must be an integer, got {raw!r}")
    if bits < 53:
        raise ParameterError("ESCAPE_LAB_PRECISION must be at least 53")
    return bits


def _jsonable(value):
    if isinstance(value, complex):
        return value.real if value.imag == 0 else [value.real, value.imag]
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


@dataclass(frozen=True)
class MapDescriptor:
    family: str
    params: tuple
    poles: tuple
    label: str
    impl: object = field(compare=False, repr=False)

    @property
    def infinitely_many_poles(self):
        return self.impl.infinitely_many_poles

    @property
    def has_poles(self):
        return bool(self.poles) or self.infinitely_many_poles

    @property
    def scale(self):
        return self.impl.scale

    def poles_in(self, center, radius):
        return self.impl.poles_in(center, radius)

    def to_dict(self):
        return {"family": self.family,
                "params": {k: _jsonable(v) for k, v in self.params},
                "label": self.label}

    @classmethod
    def from_dict(cls, data):
        return make_map(data["family"], data.get("params") or {}, label=data.get("label"))

    # vectorized float path
    def log_values(self, z):
        return self.impl.log_f(z)

    def log_derivs(self, z):
        return self.impl.log_df(z)

    def values(self, z):
        with np.errstate(over="ignore", invalid="ignore"):
            return np.exp(self.impl.log_f(z))

    def __call__(self, z):
        return self.values(z)


def make_map(family, params=None, label=None, **kwargs):
    """Build a descriptor for a catalogue family.

    >>> make_map("exp_scaled", {"lambda": 0.25}).poles
    ()
    """
    params = dict(params or {})
    params.update(kwargs)
    if family not in FAMILIES:
        raise ParameterError(f"unknown family {family!r}; known: {', '.join(sorted(FAMILIES))}")
    impl = FAMILIES[family](**params)
    frozen = tuple(sorted((k, _freeze(v)) for k, v in impl.params.items()))
    if label is None:
        shown = ", ".join(f"{k}={_jsonable(v)}" for k, v in frozen)
        label = f"{family}({shown})" if shown else family
    return MapDescriptor(family, frozen, tuple(impl.finite_poles()), label, impl)


def _freeze(value):
    if isinstance(value, list):
        return tuple(value)
    return value


def catalog():
    """List the built-in families with formula and provenance."""
    rows = []
    for name, cls in FAMILIES.items():
        rows.append({"family": name, "formula": cls.formula, "note": cls.note,
                     "defaults": {k: _jsonable(v) for k, v in cls.defaults.items()},
                     "poles": "infinitely many" if cls.infinitely_many_poles else "finite"})
    return rows


def catalog_json():
    return json.dumps(catalog(), indent=2)


# --------------------------------------------------------------------------
# scalar evaluation


@dataclass(frozen=True)
class EvalResult:
    kind: str
    log_magnitude: object
    value: object = None
    pole: complex = None

    @property
    def finite(self):
        return self.kind == "finite"

    @property
    def complex(self):
        return complex(self.value) if self.value is not None else None

    def to_dict(self):
        out = {"kind": self.kind, "log_magnitude": float(self.log_magnitude)}
        if self.value is not None:
            z = complex(self.value)
            out["value"] = [z.real, z.imag]
        if self.pole is not None:
            out["pole"] = [self.pole.real, self.pole.imag]
        return out


def pole_exclusion_radius(pole):
    return 1e-12 * (1.0 + abs(pole))


def near_pole(m, z):
    """Pole of ``m`` within its exclusion radius of ``z``, or None."""
    if not m.has_poles:
        return None
    zc = complex(z)
    for p, _ in m.poles_in(zc, 2e-12 * (1.0 + abs(zc)) + 1e-12):
        if abs(zc - p) <= pole_exclusion_radius(p):
            return p
    return None


def _as_mpc(z):
    if isinstance(z, MPC):
        return gmpy2.mpc(z)
    if isinstance(z, str):
        return gmpy2.mpc(z)
    return mpc(z)


def _check_precision(precision_bits):
    if precision_bits is None:
        return default_precision()
    precision_bits = int(precision_bits)
    if precision_bits < 53:
        raise ParameterError("precision_bits must be at least 53")
    return precision_bits


def _float_log_magnitude(m, z):
    try:
        value = float(np.real(m.log_values(np.array([complex(z)]))[0]))
    except (OverflowError, ValueError):
        return math.inf
    return value if not math.isnan(value) else math.inf


def _evaluate_raw(m, z, overflow_cap, fn):
    pole = near_pole(m, z)
    if pole is not None:
        return EvalResult("pole_hit", math.inf, pole=pole)
    try:
        value = fn(z)
    except (ZeroDivisionError, OverflowError):
        return EvalResult("pole_hit", math.inf, pole=complex(z))
    re, im = value.real, value.imag
    if not (gmpy2.is_finite(re) and gmpy2.is_finite(im)):
        lm = max(_float_log_magnitude(m, z), overflow_cap)
        return EvalResult("overflow", lm)
    mag = abs(value)
    if mag == 0:
        return EvalResult("finite", -math.inf, value=value)
    lm = gmpy2.log(mag)
    if lm > overflow_cap:
        return EvalResult("overflow", lm)
    return EvalResult("finite", lm, value=value)


def evaluate(m, z, precision_bits=None, overflow_cap=DEFAULT_OVERFLOW_CAP):
    """Evaluate ``m`` at ``z`` with ``precision_bits`` of mantissa."""
    bits = _check_precision(precision_bits)
    with mp_context(bits):
        return _evaluate_raw(m, _as_mpc(z), overflow_cap, m.impl.mp_f)


def derivative(m, z, precision_bits=None, overflow_cap=DEFAULT_OVERFLOW_CAP):
    """Analytic derivative; same result kinds as :func:`evaluate`."""
    bits = _check_precision(precision_bits)
    with mp_context(bits):
        return _evaluate_raw(m, _as_mpc(z), overflow_cap, m.impl.mp_df)


@dataclass(frozen=True)
class OrbitRecord:
    start: object
    entries: tuple
    stop_reason: str
    precision_bits: int

    def __len__(self):
        return len(self.entries)

    def log_magnitudes(self):
        return [float(e.log_magnitude) for e in self.entries]

    def values(self):
        return [e.value for e in self.entries if e.value is not None]

    def to_dict(self):
        z = complex(self.start)
        return {"start": [z.real, z.imag], "stop_reason": self.stop_reason,
                "precision_bits": self.precision_bits,
                "entries": [e.to_dict() for e in self.entries]}


def orbit(m, z, n_max, precision_bits=None, overflow_cap=DEFAULT_OVERFLOW_CAP):
    """``f(z), f^2(z), ...`` up to ``n_max`` entries or the first pole/overflow."""
    if n_max < 1:
        raise ParameterError("n_max must be at least 1")
    bits = _check_precision(precision_bits)
    entries = []
    reason = "horizon"
    with mp_context(bits):
        start = _as_mpc(z)
        w = start
        for _ in range(int(n_max)):
            res = _evaluate_raw(m, w, overflow_cap, m.impl.mp_f)
            entries.append(res)
            if not res.finite:
                reason = res.kind
                break
            w = res.value
    return OrbitRecord(start, tuple(entries), reason, bits)
