"""Closed planar regions: annuli, discs and box covers.

Distances accept either plain complex points or, through the ``log_*``
helpers, points given by their complex logarithm so that images of size
``exp(1e6)`` can still be compared against a target.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError

_FAR = 3.0  # in log units: beyond this the far-field approximations are used


def _c(z):
    return complex(z)


@dataclass(frozen=True)
class Annulus:
    center: complex
    r_in: float
    r_out: float
    closed: bool = True

    def __post_init__(self):
        object.__setattr__(self, "center", _c(self.center))
        if not (0 < self.r_in < self.r_out):
            raise ParameterError(f"annulus needs 0 < r_in < r_out, got {self.r_in}, {self.r_out}")

    kind = "annulus"

    @property
    def centered(self):
        return self.center == 0

    @property
    def extent(self):
        """Largest modulus of a point of the region."""
        return abs(self.center) + self.r_out

    @property
    def mean_radius(self):
        return math.exp(0.5 * (math.log(self.r_in) + math.log(self.r_out)))

    def signed_distance(self, z):
        d = abs(_c(z) - self.center)
        return max(self.r_in - d, d - self.r_out)

    def contains(self, z, slack=0.0):
        return self.dilate(1.0 + slack).signed_distance(z) <= 0.0

    def dilate(self, factor):
        if factor == 1.0:
            return self
        return Annulus(self.center, self.r_in / factor, self.r_out * factor, self.closed)

    def inside(self, other):
        """Is this annulus a subset of ``other`` (a region)?"""
        if isinstance(other, Annulus):
            if other.center == self.center:
                return other.r_in <= self.r_in and self.r_out <= other.r_out
            return False
        if isinstance(other, Disc):
            return abs(self.center - other.center) + self.r_out <= other.radius
        return False

    def probes(self, n=16):
        t = 2 * np.pi * np.arange(n) / n
        return self.center + self.mean_radius * np.exp(1j * t)

    def boundary(self):
        """Boundary circles as (center, radius, orientation) triples."""
        return [(self.center, self.r_out, 1), (self.center, self.r_in, -1)]

    def bounding_box(self):
        c = self.center
        return (c.real - self.r_out, c.real + self.r_out, c.imag - self.r_out, c.imag + self.r_out)

    def to_dict(self):
        return {"kind": "annulus", "center": [self.center.real, self.center.imag],
                "r_in": self.r_in, "r_out": self.r_out, "closed": self.closed}


@dataclass(frozen=True)
class Disc:
    center: complex
    radius: float
    closed: bool = True

    def __post_init__(self):
        object.__setattr__(self, "center", _c(self.center))
        if not self.radius > 0:
            raise ParameterError(f"disc radius must be positive, got {self.radius}")

    kind = "disc"

    @property
    def centered(self):
        return self.center == 0

    @property
    def extent(self):
        return abs(self.center) + self.radius

    def signed_distance(self, z):
        return abs(_c(z) - self.center) - self.radius

    def contains(self, z, slack=0.0):
        return self.dilate(1.0 + slack).signed_distance(z) <= 0.0

    def dilate(self, factor):
        if factor == 1.0:
            return self
        return Disc(self.center, self.radius * factor, self.closed)

    def inside(self, other):
        if isinstance(other, Disc):
            return abs(self.center - other.center) + self.radius <= other.radius
        if isinstance(other, Annulus):
            d = abs(self.center - other.center)
            return d - self.radius >= other.r_in and d + self.radius <= other.r_out
        return False

    def probes(self, n=16):
        t = 2 * np.pi * np.arange(n) / n
        return np.concatenate([[self.center], self.center + 0.5 * self.radius * np.exp(1j * t)])

    def boundary(self):
        return [(self.center, self.radius, 1)]

    def bounding_box(self):
        c, r = self.center, self.radius
        return (c.real - r, c.real + r, c.imag - r, c.imag + r)

    def to_dict(self):
        return {"kind": "disc", "center": [self.center.real, self.center.imag],
                "radius": self.radius, "closed": self.closed}


@dataclass(frozen=True)
class CellCover:
    """Union of closed axis-aligned boxes ``(x0, x1, y0, y1)`` at one depth."""

    boxes: tuple
    depth: int = 0

    kind = "cells"

    def __post_init__(self):
        if not self.boxes:
            raise ParameterError("cell cover must contain at least one box")
        object.__setattr__(self, "boxes", tuple(tuple(map(float, b)) for b in self.boxes))

    @property
    def centered(self):
        return False

    @property
    def extent(self):
        return max(max(abs(complex(x, y)) for x in b[:2] for y in b[2:]) for b in self.boxes)

    @staticmethod
    def _box_distance(b, z):
        x0, x1, y0, y1 = b
        dx = max(x0 - z.real, z.real - x1)
        dy = max(y0 - z.imag, z.imag - y1)
        if dx <= 0 and dy <= 0:
            return max(dx, dy)
        return math.hypot(max(dx, 0.0), max(dy, 0.0))

    def signed_distance(self, z):
        z = _c(z)
        return min(self._box_distance(b, z) for b in self.boxes)

    def contains(self, z, slack=0.0):
        scale = max(b[1] - b[0] for b in self.boxes)
        return self.signed_distance(z) <= slack * scale

    def dilate(self, factor):
        grown = []
        for x0, x1, y0, y1 in self.boxes:
            hx, hy = (x1 - x0) * (factor - 1) / 2, (y1 - y0) * (factor - 1) / 2
            grown.append((x0 - hx, x1 + hx, y0 - hy, y1 + hy))
        return CellCover(tuple(grown), self.depth)

    def inside(self, other):
        return False

    def probes(self, n=16):
        return np.array([complex((b[0] + b[1]) / 2, (b[2] + b[3]) / 2) for b in self.boxes[:n]])

    def bounding_box(self):
        xs0, xs1, ys0, ys1 = zip(*self.boxes)
        return (min(xs0), max(xs1), min(ys0), max(ys1))

    def to_dict(self):
        return {"kind": "cells", "depth": self.depth, "boxes": [list(b) for b in self.boxes]}


def region_from_dict(data):
    kind = data.get("kind")
    if kind == "annulus":
        return Annulus(complex(*data.get("center", [0, 0])), float(data["r_in"]),
                       float(data["r_out"]), bool(data.get("closed", True)))
    if kind == "disc":
        return Disc(complex(*data.get("center", [0, 0])), float(data["radius"]),
                    bool(data.get("closed", True)))
    if kind == "cells":
        return CellCover(tuple(tuple(b) for b in data["boxes"]), int(data.get("depth", 0)))
    raise ParameterError(f"unknown region kind {kind!r}")


# ---------------------------------------------------------------------------
# log-domain helpers for image curves


def log_distance(region, logw):
    """``log`` of the distance from ``exp(logw)`` to ``region``; ``-inf`` inside.

    Far-away points are handled without forming ``exp(logw)``.
    """
    logw = np.asarray(logw, dtype=complex)
    lm = logw.real
    ext = math.log(region.extent)
    far = lm > ext + _FAR
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        far_val = lm + np.log1p(-np.exp(ext - np.where(far, lm, ext + _FAR)))
        w = np.exp(np.where(far, 0.0, logw))
        w = np.where(far, 0.0, w)
        if isinstance(region, Annulus):
            d = np.abs(w - region.center)
            sd = np.maximum(region.r_in - d, d - region.r_out)
        elif isinstance(region, Disc):
            sd = np.abs(w - region.center) - region.radius
        else:
            sd = np.array([region.signed_distance(x) for x in w.ravel()]).reshape(w.shape)
        near_val = np.where(sd > 0, np.log(np.where(sd > 0, sd, 1.0)), -np.inf)
    return np.where(far, far_val, near_val)


def log_abs_diff(logw, p):
    """Complex log of ``exp(logw) - p``, accurate when ``|exp(logw)| >> |p|``."""
    logw = np.asarray(logw, dtype=complex)
    p = complex(p)
    if p == 0:
        return logw
    lp = math.log(abs(p))
    far = logw.real > lp + _FAR
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        safe = np.where(far, logw, 0.0)
        far_val = logw + np.log(1 - p * np.exp(-safe))
        near_val = np.log(np.exp(np.where(far, 0.0, logw)) - p)
    return np.where(far, far_val, near_val)


def winding_number(logw, p):
    """Winding of the closed polyline ``exp(logw)`` (last point joins first) about ``p``."""
    args = log_abs_diff(logw, p).imag
    d = np.diff(np.concatenate([args, args[:1]]))
    d = (d + np.pi) % (2 * np.pi) - np.pi
    return int(round(d.sum() / (2 * np.pi)))
