"""Finite-horizon escape-rate bands, distortion probes and class-map rendering.

The asymptotic sets A(f), Z(f), M(f) and L(f) are replaced by bands decided on
a computed orbit prefix.  All orbits are run in double precision, vectorized
over starting points; a point whose next image would exceed the float range is
*saturated*: its last log-magnitude is kept and iteration stops.
"""

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .catalog import DEFAULT_OVERFLOW_CAP, near_pole, pole_exclusion_radius
from .errors import ParameterError
from .radial import log_max_modulus

CLASSES = ("pole_hit", "non_escaping", "slow_L", "moderate_M", "zip_Z", "fast_A",
           "undetermined")
CODE = {name: i for i, name in enumerate(CLASSES)}

# fixed legend, one RGB triple per class code
LEGEND = {
    "pole_hit": (255, 0, 255),
    "non_escaping": (20, 20, 60),
    "slow_L": (70, 170, 90),
    "moderate_M": (240, 200, 60),
    "zip_Z": (230, 110, 30),
    "fast_A": (200, 30, 30),
    "undetermined": (160, 160, 160),
}

FLOAT_LOG_LIMIT = 700.0     # ln of the largest magnitude we still iterate
ROWS_PER_BLOCK = 4


def band_name(cls):
    return cls if cls in ("pole_hit", "non_escaping") else f"{cls}_band"


@dataclass(frozen=True)
class ClassifierParams:
    n_max: int = 200
    R: float = None             # None: 1 + the map's scale
    L_lag: int = 1
    L_rate_cap: float = 2.0
    M_rate_cap: float = 2.0
    Z_rate_floor: float = 1.0
    overflow_cap: float = DEFAULT_OVERFLOW_CAP
    escape_radius: float = 1e3

    def __post_init__(self):
        if self.n_max < 10:
            raise ParameterError("n_max must be at least 10")
        if self.R is not None and not self.R > 0:
            raise ParameterError("R must be positive")
        if not (0 < self.L_rate_cap < math.inf):
            raise ParameterError("L_rate_cap must be positive and finite")
        if self.L_lag < 0:
            raise ParameterError("L_lag must be nonnegative")
        if not self.escape_radius > 0:
            raise ParameterError("escape_radius must be positive")

    def base_radius(self, m):
        return self.R if self.R is not None else 1.0 + m.scale

    def to_dict(self):
        return asdict(self)


@dataclass
class RateClass:
    cls: str
    n_reached: int
    escaped_at: int            # first n with |f^n| > escape radius, -1 if never
    sup_log_rate: float        # sup over the final half of (1/n) ln|f^n|
    sup_loglog_rate: float     # sup over the final half of (1/n) ln ln|f^n|
    sup_log_rate_all: float    # the same over every computed n
    sup_loglog_rate_all: float
    stop_reason: str

    @property
    def band(self):
        return band_name(self.cls)

    def to_dict(self):
        out = asdict(self)
        out["band"] = self.band
        return {k: (None if isinstance(v, float) and not math.isfinite(v) else v)
                for k, v in out.items()}


# --------------------------------------------------------------------------
# iterated maximum modulus


def iterate_max_modulus(m, R, n, overflow_cap=DEFAULT_OVERFLOW_CAP):
    """``[ln M^1(R), ..., ln M^n(R)]`` with ``M^k`` the k-fold iterate of ``r -> M(r, f)``.

    Entries saturate at ``inf`` once the next radius leaves the float range or
    the log exceeds ``overflow_cap``.
    """
    if not R > 0:
        raise ParameterError("R must be positive")
    out = []
    t = math.log(R)
    for _ in range(int(n)):
        if not math.isfinite(t) or t > min(overflow_cap, FLOAT_LOG_LIMIT):
            out.append(math.inf)
            t = math.inf
            continue
        ext = log_max_modulus(m, math.exp(t))
        t = float(ext) if math.isfinite(ext) else math.inf
        out.append(t)
    return out


# --------------------------------------------------------------------------
# vectorized orbits


def _pole_mask(m, z, lv):
    """Points of ``z`` within the exclusion radius of a pole."""
    hit = np.zeros(z.shape, bool)
    if not m.has_poles:
        return hit
    for p, _ in m.poles:
        hit |= np.abs(z - p) <= pole_exclusion_radius(p)
    if m.infinitely_many_poles:
        # only points mapped far out can be that close to a pole
        cand = np.flatnonzero(~np.isfinite(lv) | (lv > 20.0))
        for i in cand:
            if near_pole(m, z[i]) is not None:
                hit[i] = True
    return hit


@dataclass
class OrbitTable:
    """Log-magnitudes ``ln|f^n(z)|`` for ``n = 0..n_max``; NaN after a stop."""
    logmag: np.ndarray         # shape (n_points, n_max + 1)
    stop: np.ndarray           # 0 horizon, 1 pole_hit, 2 saturated
    n_reached: np.ndarray

    STOP_NAMES = ("horizon", "pole_hit", "overflow")


def log_orbits(m, z0, n_max, overflow_cap=DEFAULT_OVERFLOW_CAP):
    z = np.array(z0, dtype=complex).ravel()
    k = z.size
    logmag = np.full((k, n_max + 1), np.nan)
    with np.errstate(all="ignore"):
        logmag[:, 0] = np.log(np.abs(z))
    stop = np.zeros(k, np.int8)
    n_reached = np.zeros(k, np.int64)
    alive = np.ones(k, bool)
    limit = min(overflow_cap, FLOAT_LOG_LIMIT)
    for n in range(1, n_max + 1):
        idx = np.flatnonzero(alive)
        if idx.size == 0:
            break
        zi = z[idx]
        with np.errstate(all="ignore"):
            lv = m.log_values(zi)
        lr = lv.real
        poles = _pole_mask(m, zi, lr)
        if poles.any():
            stop[idx[poles]] = 1
            alive[idx[poles]] = False
        ok = ~poles
        bad = ok & ~np.isfinite(lr) & (lr > 0)
        lr = np.where(np.isnan(lr), np.inf, lr)
        logmag[idx[ok], n] = lr[ok]
        n_reached[idx[ok]] = n
        sat = ok & ((lr > limit) | bad)
        if sat.any():
            stop[idx[sat]] = 2
            alive[idx[sat]] = False
        go = ok & ~sat
        with np.errstate(all="ignore"):
            z[idx[go]] = np.exp(lv[go])
    return OrbitTable(logmag, stop, n_reached)


# --------------------------------------------------------------------------
# classification


def _rates(lm, n_reached, tail):
    """Sup of ``(1/n) ln|f^n|`` and ``(1/n) ln ln|f^n|`` over ``n >= tail``."""
    n = np.arange(len(lm))
    sel = (n >= max(1, tail)) & (n <= n_reached) & np.isfinite(lm)
    if not sel.any():
        return -math.inf, -math.inf
    r1 = lm[sel] / n[sel]
    pos = sel & (lm > 0)
    with np.errstate(all="ignore"):
        r2 = np.log(lm[pos]) / n[pos]
    return float(np.max(r1)), (float(np.max(r2)) if r2.size else -math.inf)


def _fast_A(lm, n_reached, tower, lag, log_r):
    """``ln|f^{n+l}| > ln M^n(R)`` for every testable ``n`` and some ``l <= lag``."""
    t = np.concatenate([[log_r], tower])
    for l in range(lag + 1):
        tested = 0
        holds = True
        for n in range(0, n_reached - l + 1):
            if not math.isfinite(t[n]):
                break
            v = lm[n + l]
            if not np.isfinite(v) and v != np.inf:
                break
            tested += 1
            if not v > t[n]:
                holds = False
                break
        if holds and tested >= 2:
            return True
    return False


def _zip(lm, n_reached, floor):
    n = np.arange(len(lm))
    start = max(1, (2 * n_reached) // 3)
    sel = (n >= start) & (n <= n_reached) & np.isfinite(lm) & (lm > 0)
    if sel.sum() < 2:
        return False
    with np.errstate(all="ignore"):
        rate = np.log(lm[sel]) / n[sel]
    return bool(rate[-1] > floor and np.all(np.diff(rate) > 0))


def classify_table(m, table, params, tower=None):
    """Decide a :class:`RateClass` for each row of an :class:`OrbitTable`."""
    R = params.base_radius(m)
    if tower is None:
        tower = iterate_max_modulus(m, R, params.n_max, params.overflow_cap)
    log_esc = math.log(params.escape_radius)
    out = []
    for lm, stop, nr in zip(table.logmag, table.stop, table.n_reached):
        nr = int(nr)
        over = np.flatnonzero(np.nan_to_num(lm[:nr + 1], nan=-np.inf) > log_esc)
        esc = int(over[0]) if over.size else -1
        tail = _rates(lm, nr, (nr + 1) // 2)
        full = _rates(lm, nr, 1)
        reason = OrbitTable.STOP_NAMES[int(stop)]
        if stop == 1:
            cls = "pole_hit"
        elif esc < 0:
            cls = "non_escaping"
        elif _fast_A(lm, nr, tower, params.L_lag, math.log(R)):
            cls = "fast_A"
        elif _zip(lm, nr, params.Z_rate_floor):
            cls = "zip_Z"
        elif tail[0] <= params.L_rate_cap:
            cls = "slow_L"
        elif tail[1] <= params.M_rate_cap:
            cls = "moderate_M"
        else:
            cls = "undetermined"
        out.append(RateClass(cls, nr, esc, tail[0], tail[1], full[0], full[1], reason))
    return out


def classify_points(m, zs, params=None):
    params = params or ClassifierParams()
    table = log_orbits(m, zs, params.n_max, params.overflow_cap)
    return classify_table(m, table, params)


def classify_orbit(m, z, params=None):
    """:class:`RateClass` of the orbit of a single point."""
    return classify_points(m, [complex(z)], params)[0]


class EscapeRateClassifier(BaseEstimator, ClassifierMixin):
    """Estimator front end: ``predict`` maps starting points to band names.

    ``X`` is a complex array or an ``(n, 2)`` array of (re, im).  Nothing is
    learned; ``fit`` only validates parameters and records ``classes_``.
    """

    def __init__(self, map=None, n_max=200, R=None, L_lag=1, L_rate_cap=2.0,
                 M_rate_cap=2.0, Z_rate_floor=1.0, overflow_cap=DEFAULT_OVERFLOW_CAP,
                 escape_radius=1e3):
        self.map = map
        self.n_max = n_max
        self.R = R
        self.L_lag = L_lag
        self.L_rate_cap = L_rate_cap
        self.M_rate_cap = M_rate_cap
        self.Z_rate_floor = Z_rate_floor
        self.overflow_cap = overflow_cap
        self.escape_radius = escape_radius

    def _params(self):
        return ClassifierParams(self.n_max, self.R, self.L_lag, self.L_rate_cap,
                                self.M_rate_cap, self.Z_rate_floor, self.overflow_cap,
                                self.escape_radius)

    def fit(self, X=None, y=None):
        if self.map is None:
            raise ParameterError("EscapeRateClassifier needs a map")
        self.params_ = self._params()
        self.classes_ = np.array(CLASSES)
        return self

    @staticmethod
    def _points(X):
        X = np.asarray(X)
        if np.iscomplexobj(X):
            return X.ravel()
        if X.ndim == 2 and X.shape[1] == 2:
            return X[:, 0] + 1j * X[:, 1]
        return X.astype(complex).ravel()

    def transform(self, X):
        """Per-point ``[sup log rate, sup loglog rate, n_reached, escaped_at]``."""
        rows = classify_points(self.map, self._points(X), self.params_)
        return np.array([[r.sup_log_rate, r.sup_loglog_rate, r.n_reached, r.escaped_at]
                         for r in rows], float)

    def predict(self, X):
        if not hasattr(self, "params_"):
            self.fit()
        rows = classify_points(self.map, self._points(X), self.params_)
        return np.array([r.cls for r in rows])


# --------------------------------------------------------------------------
# rendering


@dataclass(frozen=True)
class GridSpec:
    x0: float
    x1: float
    y0: float
    y1: float
    width: int
    height: int

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ParameterError("grid must have at least one pixel")
        if not (self.x1 > self.x0 and self.y1 > self.y0):
            raise ParameterError("grid rectangle must have positive extent")

    def row_points(self, j):
        """Pixel centres of row ``j``; row 0 is the top (largest imaginary part)."""
        dx = (self.x1 - self.x0) / self.width
        dy = (self.y1 - self.y0) / self.height
        x = self.x0 + (np.arange(self.width) + 0.5) * dx
        y = self.y1 - (j + 0.5) * dy
        return x + 1j * y

    def pixel_of(self, z):
        """(row, col) of the pixel containing ``z``, clamped to the grid."""
        col = int((z.real - self.x0) / (self.x1 - self.x0) * self.width)
        row = int((self.y1 - z.imag) / (self.y1 - self.y0) * self.height)
        return (min(max(row, 0), self.height - 1), min(max(col, 0), self.width - 1))

    def to_dict(self):
        return asdict(self)


@dataclass
class ImageBuffer:
    grid: GridSpec
    codes: np.ndarray          # (height, width) uint8 class codes
    header: dict = field(default_factory=dict)

    @property
    def legend(self):
        return {name: LEGEND[name] for name in CLASSES}

    def class_at(self, row, col):
        return CLASSES[int(self.codes[row, col])]

    def counts(self):
        vals, cnt = np.unique(self.codes, return_counts=True)
        return {CLASSES[int(v)]: int(c) for v, c in zip(vals, cnt)}

    def rgb(self):
        table = np.array([LEGEND[name] for name in CLASSES], np.uint8)
        return table[self.codes]

    def to_ppm(self):
        meta = dict(self.header)
        meta["grid"] = self.grid.to_dict()
        meta["legend"] = {k: list(v) for k, v in self.legend.items()}
        comment = json.dumps(meta, sort_keys=True, default=str)
        head = f"P6\n# {comment}\n{self.grid.width} {self.grid.height}\n255\n"
        return head.encode() + self.rgb().tobytes()


def read_ppm_codes(data):
    """Recover class codes from a PPM written by :meth:`ImageBuffer.to_ppm`."""
    lines = data.split(b"\n", 4)
    w, h = map(int, lines[2].split())
    pix = np.frombuffer(lines[4], np.uint8).reshape(h, w, 3)
    lookup = {LEGEND[name]: i for i, name in enumerate(CLASSES)}
    return np.array([[lookup[tuple(p)] for p in row] for row in pix], np.uint8)


def render_escape_classes(m, grid, params=None, jobs=1):
    """Classify every pixel centre of ``grid``.

    Work is cut into fixed row blocks independent of ``jobs``, so the output
    does not depend on the worker count.
    """
    params = params or ClassifierParams()
    tower = iterate_max_modulus(m, params.base_radius(m), params.n_max, params.overflow_cap)
    blocks = [range(j, min(j + ROWS_PER_BLOCK, grid.height))
              for j in range(0, grid.height, ROWS_PER_BLOCK)]

    def work(rows):
        pts = np.concatenate([grid.row_points(j) for j in rows])
        table = log_orbits(m, pts, params.n_max, params.overflow_cap)
        cls = classify_table(m, table, params, tower)
        return np.array([CODE[c.cls] for c in cls], np.uint8).reshape(len(rows), grid.width)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(work, blocks))
    else:
        parts = [work(b) for b in blocks]
    codes = np.concatenate(parts, axis=0)
    header = {"map": m.to_dict(), "params": params.to_dict()}
    return ImageBuffer(grid, codes, header)


# --------------------------------------------------------------------------
# distortion


@dataclass
class DistortionReport:
    sup_ratio: float           # sup over pairs and n of |f^n(z')| / |f^n(z)|
    sup_log_exponent: float    # sup over pairs and n of ln|f^n(z')| / ln|f^n(z)|
    table: list                # per n: (n, ratio sup, exponent sup, live pairs)
    terminated: list           # (pair index, n reached, reason)

    def stable(self, last=10, rel=0.05):
        """Whether the strong statistic varies by at most ``rel`` over the last rows."""
        vals = [r[1] for r in self.table[-last:] if math.isfinite(r[1])]
        if len(vals) < 2:
            return False
        return (max(vals) - min(vals)) <= rel * max(vals)

    def csv(self):
        lines = ["n,sup_ratio,sup_log_exponent,live_pairs"]
        lines += [f"{n},{a!r},{b!r},{c}" for n, a, b, c in self.table]
        return "\n".join(lines) + "\n"

    def to_dict(self):
        return {"sup_ratio": self.sup_ratio, "sup_log_exponent": self.sup_log_exponent,
                "table": self.table, "terminated": self.terminated}


def distortion_probe(m, disc, n_max, n_pairs=64, seed=0, pairs=None,
                     overflow_cap=DEFAULT_OVERFLOW_CAP):
    """Strong and weak distortion statistics over random point pairs in ``disc``."""
    if pairs is None:
        rng = np.random.default_rng(seed)
        rad = disc.radius * np.sqrt(rng.random((n_pairs, 2)))
        ang = 2 * np.pi * rng.random((n_pairs, 2))
        pts = disc.center + rad * np.exp(1j * ang)
    else:
        pts = np.array(pairs, complex).reshape(-1, 2)
    t1 = log_orbits(m, pts[:, 0], n_max, overflow_cap)
    t2 = log_orbits(m, pts[:, 1], n_max, overflow_cap)
    terminated = []
    for i in range(len(pts)):
        for t in (t1, t2):
            if t.stop[i] != 0:
                terminated.append((i, int(t.n_reached[i]), OrbitTable.STOP_NAMES[t.stop[i]]))
                break
    table = []
    sup_r = sup_e = -math.inf
    for n in range(1, n_max + 1):
        a, b = t1.logmag[:, n], t2.logmag[:, n]
        live = np.isfinite(a) & np.isfinite(b)
        if not live.any():
            break
        ratio = float(np.exp(np.max(b[live] - a[live])))
        with np.errstate(all="ignore"):
            ex = b[live] / a[live]
        ex = ex[np.isfinite(ex) & (a[live] > 0)]
        expo = float(np.max(ex)) if ex.size else math.nan
        table.append((n, ratio, expo, int(live.sum())))
        sup_r = max(sup_r, ratio)
        if math.isfinite(expo):
            sup_e = max(sup_e, expo)
    return DistortionReport(sup_r, sup_e, table, terminated)
