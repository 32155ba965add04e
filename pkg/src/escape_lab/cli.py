"""Command-line front end.

Exit codes: 0 success, 1 usage or parameter error, 2 the numerics refused
(a covering not certified, a chain that stalled, a failed hypothesis check).
Every output embeds the resolved run configuration.
"""

import argparse
import contextlib
import json
import logging
import math
import os
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from . import __version__
from .catalog import FAMILIES, catalog, make_map
from .errors import EscapeLabError, ParameterError, Refusal

log = logging.getLogger("escape_lab")

COMMANDS = ("catalog", "stats", "cover", "chain", "slowpoint", "twosided", "oscillate",
            "polechain", "feasible", "classify", "render", "probe")
DEFAULT_MAP = {"polechain": "half_tan", "catalog": None}


class UsageError(EscapeLabError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


@dataclass
class RunConfig:
    command: str
    map: dict = None
    params: dict = field(default_factory=dict)
    precision_bits: int = None
    seed: int = 0
    jobs: int = 1
    out: str = None

    def to_dict(self):
        return asdict(self)


def _jsonable(obj):
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if hasattr(obj, "item") and callable(obj.item):
        return _jsonable(obj.item())
    return obj


def dumps(payload):
    return json.dumps(_jsonable(payload), indent=2, sort_keys=True, default=str) + "\n"


def _load_config(text):
    if text is None:
        return {}
    text = text.strip()
    if not text.startswith("{"):
        path = Path(text)
        if not path.exists():
            raise ParameterError(f"config is neither JSON nor an existing file: {text!r}")
        text = path.read_text()
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParameterError(f"config is not valid JSON: {exc}") from None
    if not isinstance(cfg, dict):
        raise ParameterError("config must be a JSON object")
    return cfg


def _split_config(family, cfg):
    """Separate map parameters (the family's own keys) from command parameters."""
    if family is None:
        return {}, dict(cfg)
    if family not in FAMILIES:
        raise ParameterError(f"unknown family {family!r}; known: {', '.join(sorted(FAMILIES))}")
    names = set(FAMILIES[family].defaults)
    mp = {k: v for k, v in cfg.items() if k in names}
    rest = {k: v for k, v in cfg.items() if k not in names}
    return mp, rest


@contextlib.contextmanager
def _precision_env(bits):
    if bits is None:
        yield
        return
    old = os.environ.get("ESCAPE_LAB_PRECISION")
    os.environ["ESCAPE_LAB_PRECISION"] = str(int(bits))
    try:
        yield
    finally:
        if old is None:
            os.environ.pop("ESCAPE_LAB_PRECISION", None)
        else:
            os.environ["ESCAPE_LAB_PRECISION"] = old


def _take(params, key, default=None, cast=None, required=False):
    if key not in params:
        if required:
            raise ParameterError(f"config needs {key!r}")
        return default
    value = params[key]
    return cast(value) if cast is not None else value


def _scaled(params, bits):
    from .chain import ScaledParameters
    names = {f.name for f in fields(ScaledParameters)}
    kw = {k: v for k, v in params.items() if k in names}
    if bits is not None:
        kw.setdefault("base_bits", bits)
    return ScaledParameters(**kw)


def _region(spec, name):
    from .regions import region_from_dict
    if not isinstance(spec, dict):
        raise ParameterError(f"{name} must be a region object")
    return region_from_dict(spec)


def _point(v):
    if isinstance(v, (list, tuple)):
        return complex(float(v[0]), float(v[1]) if len(v) > 1 else 0.0)
    if isinstance(v, str):
        return complex(v.replace(" ", ""))
    return complex(v)


def _classifier_params(params):
    from .classify import ClassifierParams
    names = {f.name for f in fields(ClassifierParams)}
    return ClassifierParams(**{k: v for k, v in params.items() if k in names})


# --------------------------------------------------------------------------
# command bodies: each returns (payload, status, extras) where payload is a
# dict for JSON, or (text, kind) for CSV / PPM


class Result:
    def __init__(self, payload=None, text=None, binary=None, refused=None, side_csv=None):
        self.payload, self.text, self.binary = payload, text, binary
        self.refused = refused
        self.side_csv = side_csv


def cmd_catalog(m, p, rc):
    return Result(payload={"families": catalog()})


def cmd_stats(m, p, rc):
    from .radial import profile_from_list, profiles_to_csv, radii
    if "r" in p:
        rs = p["r"] if isinstance(p["r"], list) else [p["r"]]
    else:
        rs = radii(_take(p, "r_min", 1.0, float), _take(p, "r_max", 10.0, float),
                   _take(p, "n_radii", 10, int), _take(p, "spacing", "log"))
    rows = profile_from_list(m, [float(r) for r in rs], _take(p, "rel_tol", 1e-9, float))
    header = "run_config: " + json.dumps(_jsonable(rc.to_dict()), sort_keys=True)
    return Result(text=profiles_to_csv(rows, header))


def cmd_cover(m, p, rc):
    from .covering import certify_covering
    cert = certify_covering(m, _region(_take(p, "source", required=True), "source"),
                            _region(_take(p, "target", required=True), "target"),
                            n_samples=_take(p, "n_samples", 8192, int),
                            margin_req=_take(p, "margin", 0.0, float))
    refused = None if cert.certified else (cert.reason or cert.verdict)
    return Result(payload={"certificate": cert.to_dict()}, refused=refused)


def cmd_chain(m, p, rc):
    from .chain import build_chain
    chain = build_chain(m, _scaled(p, rc.precision_bits), _take(p, "steps", 3, int),
                        start=_take(p, "start", None, float))
    return Result(payload={"chain": chain.to_dict()})


def _report(report):
    refused = None if report.all_ok else "verification_failed"
    return Result(payload={"report": report.to_dict()}, refused=refused, side_csv=report.csv())


def cmd_slowpoint(m, p, rc):
    from .construct import construct_slow_point
    return _report(construct_slow_point(
        m, _take(p, "a", "sqrt_plus"), _take(p, "N", 30, int), params=_scaled(p, rc.precision_bits),
        loop_kind=_take(p, "loop_kind", "self"), chain_steps=_take(p, "chain_steps", 2, int)))


def cmd_twosided(m, p, rc):
    from .construct import construct_two_sided
    return _report(construct_two_sided(
        m, _take(p, "a", "linear"), _take(p, "d", 2.0, float), _take(p, "c", 1.0, float),
        _take(p, "N", 20, int), K=_take(p, "K", 1.0, float),
        params=_scaled({k: v for k, v in p.items() if k not in ("d", "c")}, rc.precision_bits)))


def cmd_oscillate(m, p, rc):
    from .construct import construct_oscillating
    return _report(construct_oscillating(
        m, _take(p, "low_bound", 10.0, float), _take(p, "N", 24, int),
        params=_scaled(p, rc.precision_bits), depth=_take(p, "depth", 3, int)))


def cmd_polechain(m, p, rc):
    from .polechain import build_pole_chain
    pc = build_pole_chain(m, _take(p, "N_discs", 10, int), radius=_take(p, "radius", 0.5, float))
    return Result(payload={"pole_chain": pc.to_dict()},
                  refused=None if pc.all_certified else "link_not_certified")


def cmd_feasible(m, p, rc):
    from .construct import feasibility_check
    rep = feasibility_check(m, _take(p, "r_lo", 1e2, float), _take(p, "r_hi", 1e6, float),
                            _take(p, "c", 0.25, float), _take(p, "n_annuli", 64, int))
    return Result(payload={"feasibility": rep.to_dict()})


def cmd_classify(m, p, rc):
    import numpy as np
    from .classify import classify_points
    params = _classifier_params(p)
    if "points" in p:
        pts = [_point(v) for v in p["points"]]
    elif "z" in p:
        pts = [_point(p["z"])]
    elif "sample" in p:
        # {"sample": {"box": [x0, x1, y0, y1], "n": 100}}
        s = p["sample"]
        x0, x1, y0, y1 = map(float, s["box"])
        rng = np.random.default_rng(rc.seed)
        n = int(s.get("n", 100))
        pts = list(x0 + (x1 - x0) * rng.random(n) + 1j * (y0 + (y1 - y0) * rng.random(n)))
    else:
        raise ParameterError("classify needs 'z', 'points' or 'sample'")
    rows = classify_points(m, pts, params)
    out = [{"z": [z.real, z.imag], **r.to_dict()} for z, r in zip(pts, rows)]
    return Result(payload={"params": params.to_dict(), "points": out})


def cmd_render(m, p, rc):
    from .classify import GridSpec, render_escape_classes
    g = _take(p, "grid", required=True)
    if isinstance(g, dict):
        grid = GridSpec(**{k: g[k] for k in ("x0", "x1", "y0", "y1")},
                        width=int(g["width"]), height=int(g["height"]))
    else:
        x0, x1, y0, y1, w, h = g
        grid = GridSpec(float(x0), float(x1), float(y0), float(y1), int(w), int(h))
    img = render_escape_classes(m, grid, _classifier_params(p), jobs=rc.jobs)
    # the worker count must not change the bytes, so it stays out of the header
    run = rc.to_dict()
    run.pop("jobs")
    run.pop("out")
    img.header["run_config"] = _jsonable(run)
    log.info("render counts %s", img.counts())
    return Result(binary=img.to_ppm())


def cmd_probe(m, p, rc):
    from .classify import distortion_probe
    disc = _region(_take(p, "disc", required=True), "disc")
    pairs = _take(p, "pairs")
    if pairs is not None:
        pairs = [[_point(a), _point(b)] for a, b in pairs]
    rep = distortion_probe(m, disc, _take(p, "n_max", 40, int), _take(p, "n_pairs", 64, int),
                           seed=rc.seed, pairs=pairs)
    head = "# run_config: " + json.dumps(_jsonable(rc.to_dict()), sort_keys=True) + "\n"
    head += (f"# sup_ratio={rep.sup_ratio!r} sup_log_exponent={rep.sup_log_exponent!r} "
             f"terminated={len(rep.terminated)}\n")
    return Result(text=head + rep.csv())


HANDLERS = {name: globals()[f"cmd_{name}"] for name in COMMANDS}


# --------------------------------------------------------------------------


def build_parser():
    parser = _Parser(prog="escape-lab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True
    for name in COMMANDS:
        sp = sub.add_parser(name, help=HANDLERS[name].__name__[4:])
        sp.add_argument("--map", default=DEFAULT_MAP.get(name, "exp_scaled"),
                        help="catalogue family (default exp_scaled)")
        sp.add_argument("--config", help="JSON object or path to a JSON file")
        sp.add_argument("--out", help="output path (stdout when omitted)")
        sp.add_argument("--precision", type=int, help="mantissa bits for constructions")
        sp.add_argument("--seed", type=int, default=0, help="64-bit seed for sampling")
        sp.add_argument("--jobs", type=int, default=1, help="worker threads (render)")
        sp.add_argument("--trace", action="store_true", help="log progress to stderr")
    return parser


def _emit(result, rc, stdout):
    if result.binary is not None:
        data = result.binary
        if rc.out:
            Path(rc.out).write_bytes(data)
        else:
            stdout.buffer.write(data) if hasattr(stdout, "buffer") else stdout.write(
                data.decode("latin-1"))
        return
    if result.text is not None:
        text = result.text
    else:
        payload = dict(result.payload)
        payload["run_config"] = rc.to_dict()
        if result.refused:
            payload["refusal"] = {"reason": result.refused}
        text = dumps(payload)
    if rc.out:
        Path(rc.out).write_text(text)
        if result.side_csv is not None:
            head = "# run_config: " + json.dumps(_jsonable(rc.to_dict()), sort_keys=True) + "\n"
            Path(rc.out).with_suffix(".csv").write_text(head + result.side_csv)
    else:
        stdout.write(text)


def run(argv=None, stdout=None, stderr=None):
    """Entry point; returns the exit code."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=stderr)
        return 1
    except SystemExit as exc:        # --help / --version
        return int(exc.code or 0)
    if args.trace:
        logging.basicConfig(level=logging.INFO, stream=stderr,
                            format="%(levelname)s %(name)s: %(message)s")
    rc = RunConfig(args.command, None, {}, args.precision, args.seed, max(1, args.jobs),
                   args.out)
    try:
        if args.seed < 0 or args.seed >= 2 ** 64:
            raise ParameterError("seed must be a 64-bit unsigned integer")
        cfg = _load_config(args.config)
        family = None if args.command == "catalog" else args.map
        map_params, params = _split_config(family, cfg)
        m = make_map(family, map_params) if family else None
        rc.map = m.to_dict() if m is not None else None
        rc.params = params
        log.info("running %s on %s", args.command, m.label if m else "-")
        with _precision_env(args.precision):
            result = HANDLERS[args.command](m, params, rc)
    except Refusal as exc:
        payload = {"refusal": exc.to_dict(), "run_config": rc.to_dict()}
        text = dumps(payload)
        if rc.out:
            Path(rc.out).write_text(text)
        else:
            stdout.write(text)
        print(f"refused: {exc}", file=stderr)
        return 2
    except (ParameterError, UsageError, TypeError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=stderr)
        return 1
    _emit(result, rc, stdout)
    if result.refused:
        print(f"refused: {result.refused}", file=stderr)
        return 2
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
