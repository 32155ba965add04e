import io
import json
import math

import pytest

from escape_lab.cli import COMMANDS, run


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


def test_catalog_lists_families():
    code, out, _ = call("catalog")
    assert code == 0
    names = {f["family"] for f in json.loads(out)["families"]}
    assert {"exp_scaled", "half_tan", "fatou_baker"} <= names


def test_stats_example():
    code, out, _ = call("stats", "--map", "exp_scaled", "--config", '{"lambda":1,"r":[1,2,3]}')
    assert code == 0
    lines = [l for l in out.splitlines() if not l.startswith("#")]
    head = lines[0].split(",")
    assert head[:3] == ["r", "max_mod", "theta_max"]
    col = head.index("max_mod")
    got = [float(l.split(",")[col]) for l in lines[1:]]
    assert got == pytest.approx([math.e, math.e ** 2, math.e ** 3], rel=1e-12)
    assert "run_config" in out


def test_unknown_family_is_usage_error():
    code, _, err = call("cover", "--map", "badfamily", "--config", "{}")
    assert code == 1 and "badfamily" in err


def test_unknown_command_and_bad_json():
    assert call("frobnicate")[0] == 1
    assert call("stats", "--config", "{not json")[0] == 1
    assert call("stats", "--seed", "-3")[0] == 1


def test_refused_cover_exits_2():
    cfg = {"source": {"kind": "annulus", "r_in": 1, "r_out": 2}, "target": {"kind": "annulus", "r_in": 100, "r_out": 1000}}
    code, out, _ = call("cover", "--map", "poly_exp", "--config", json.dumps(cfg))
    assert code == 2
    assert json.loads(out)["refusal"]["reason"]


def test_certified_cover():
    cfg = {"source": {"kind": "annulus", "r_in": 1, "r_out": 2}, "target": {"kind": "annulus", "r_in": 1.5, "r_out": 3.5}}
    code, out, _ = call("cover", "--map", "poly_exp", "--config", json.dumps(cfg))
    assert code == 0
    doc = json.loads(out)
    assert doc["certificate"]["verdict"] == "certified"
    assert doc["run_config"]["map"]["family"] == "poly_exp"


def test_stalled_chain_exits_2():
    code, out, _ = call("chain", "--map", "half_tan")
    assert code == 2 and json.loads(out)["refusal"]["reason"] == "chain_stalled"


@pytest.mark.slow
def test_slowpoint_example(tmp_path):
    path = tmp_path / "slow.json"
    code, _, _ = call("slowpoint", "--map", "exp_scaled", "--config",
                      '{"lambda":1,"a":"sqrt_plus:10","N":30}', "--out", str(path))
    assert code == 0
    doc = json.loads(path.read_text())
    rows = doc["report"]["rows"]
    assert doc["report"]["all_ok"] and len(rows) == 31
    assert all(r["ok_doubled"] for r in rows if r["n"] >= doc["report"]["N0"])
    side = path.with_suffix(".csv").read_text()
    assert side.startswith("# run_config:")


def test_classify_sample_reproducible():
    cfg = '{"sample":{"box":[2,20,-0.5,0.5],"n":5},"n_max":50}'
    a = call("classify", "--map", "fatou_baker", "--config", cfg, "--seed", "7")
    b = call("classify", "--map", "fatou_baker", "--config", cfg, "--seed", "7")
    c = call("classify", "--map", "fatou_baker", "--config", cfg, "--seed", "8")
    assert a[0] == 0 and a[1] == b[1] and a[1] != c[1]
    assert json.loads(a[1])["run_config"]["seed"] == 7


def test_render_bytes_independent_of_jobs(tmp_path):
    cfg = '{"grid":[-3.14159,15.708,-4,4,60,30]}'
    paths = []
    for jobs in ("1", "4"):
        p = tmp_path / f"r{jobs}.ppm"
        assert call("render", "--map", "sine_shift", "--config", cfg, "--jobs", jobs,
                    "--out", str(p))[0] == 0
        paths.append(p.read_bytes())
    assert paths[0] == paths[1]
    header = json.loads(paths[0].split(b"\n")[1][2:])
    assert header["run_config"]["map"]["family"] == "sine_shift"


def test_probe_and_feasible_embed_config():
    code, out, _ = call("probe", "--map", "bergweiler_baker", "--config",
                        '{"disc":{"kind":"disc","center":[-10,0],"radius":0.5},"n_max":10,"n_pairs":4}')
    assert code == 0 and out.startswith("# run_config:")
    code, out, _ = call("feasible", "--map", "quarter_cos", "--config", '{"n_annuli":8}')
    assert code == 0 and json.loads(out)["feasibility"]["flagged"]


def test_every_command_has_standard_flags():
    for name in COMMANDS:
        code, out, _ = call(name, "--help")
        assert code == 0
