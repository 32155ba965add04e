"""Rate sequences ``a_n`` and their monotone minorants."""

import json
import math
from dataclasses import dataclass

from .errors import ParameterError

PRESETS = {
    "sqrt_plus": ("sqrt(n) + b", {"b": 10.0}),
    "linear": ("alpha * (n + 1)", {"alpha": 5.0}),
    "log": ("log(n + e)", {}),
    "custom": ("explicit values", {"values": None}),
}


@dataclass(frozen=True)
class SequenceSpec:
    kind: str
    params: tuple = ()

    def __post_init__(self):
        if self.kind not in PRESETS:
            raise ParameterError(f"unknown sequence kind {self.kind!r}; "
                                 f"known: {', '.join(PRESETS)}")

    @property
    def param_dict(self):
        out = dict(PRESETS[self.kind][1])
        out.update(dict(self.params))
        return out

    def value(self, n):
        p = self.param_dict
        if self.kind == "sqrt_plus":
            return math.sqrt(n) + p["b"]
        if self.kind == "linear":
            return p["alpha"] * (n + 1)
        if self.kind == "log":
            return math.log(n + math.e)
        vals = p["values"]
        if n >= len(vals):
            raise ParameterError(f"custom sequence has {len(vals)} values, index {n} requested")
        return float(vals[n])

    def values(self, N):
        """``[a_0, ..., a_N]``; every entry must be positive."""
        out = [self.value(n) for n in range(N + 1)]
        if any(not (v > 0) for v in out):
            raise ParameterError("sequence entries must be positive")
        return out

    def to_dict(self):
        return {"kind": self.kind, **{k: v for k, v in self.params}}

    @classmethod
    def parse(cls, spec):
        """Accept ``"linear"``, ``"linear:alpha=5"``, ``"sqrt_plus:10"``, a dict, a list, or a spec."""
        if isinstance(spec, SequenceSpec):
            return spec
        if isinstance(spec, (list, tuple)):
            return cls("custom", (("values", tuple(float(v) for v in spec)),))
        if isinstance(spec, dict):
            spec = dict(spec)
            kind = spec.pop("kind", "custom")
            if "values" in spec:
                spec["values"] = tuple(float(v) for v in spec["values"])
            return cls(kind, tuple(sorted(spec.items())))
        if isinstance(spec, str):
            text = spec.strip()
            if text.startswith("["):
                return cls.parse(json.loads(text))
            kind, _, rest = text.partition(":")
            kind = kind.strip()
            if kind not in PRESETS:
                raise ParameterError(f"unknown sequence kind {kind!r}")
            names = [k for k in PRESETS[kind][1] if k != "values"]
            params = {}
            for pos, item in enumerate(filter(None, rest.split(","))):
                key, eq, val = item.partition("=")
                if not eq:
                    # positional form, e.g. "sqrt_plus:10"
                    if pos >= len(names):
                        raise ParameterError(f"too many values for {kind!r}")
                    key, val = names[pos], key
                try:
                    params[key.strip()] = float(val)
                except ValueError:
                    raise ParameterError(f"bad sequence parameter {item!r}") from None
            return cls(kind.strip(), tuple(sorted(params.items())))
        raise ParameterError(f"cannot parse sequence spec {spec!r}")


def monotone_minorant(a):
    """Suffix minimum: ``a'_n = min_{k >= n} a_k``, nondecreasing and ``<= a``.

    >>> monotone_minorant([5, 3, 4, 6])
    [3, 3, 4, 6]
    """
    a = list(a)
    if not a:
        raise ParameterError("monotone_minorant needs a nonempty prefix")
    if any(not (x > 0) for x in a):
        raise ParameterError("entries must be positive")
    out = a[:]
    for i in range(len(out) - 2, -1, -1):
        out[i] = min(out[i], out[i + 1])
    return out


def require_unbounded(a):
    """Reject prefixes that show no growth (a stand-in for ``a_n -> infinity``)."""
    low = monotone_minorant(a)
    if not low[-1] > low[0]:
        raise ParameterError("sequence must tend to infinity; this prefix does not grow")
    return low
