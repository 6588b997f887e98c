import csv
import dataclasses
import json
import math

import pytest

from qlayer import cli
from qlayer.cli import (EXIT_CONFIG, EXIT_HYPOTHESIS, EXIT_INCONSISTENT, EXIT_OK, ConfigError,
                        cross_consistency, load_config, main, parse_config, run)

PARABOLOID = {"surface": {"name": "paraboloid", "params": {"c": 1.0}},
              "widths": [0.36, 0.3], "strategy": "annulus_bump",
              "search": {"R_max": 256}, "grid": {"n_s": 200, "n_t": 16, "length": 100.0}}


def _write(tmp_path, data, name="cfg.json"):
    p = tmp_path / name
    p.write_text(data if isinstance(data, str) else json.dumps(data))
    return p


def test_parse_config_sorts_and_overrides():
    cfg = parse_config(PARABOLOID, max_radius=512)
    assert cfg.widths == (0.3, 0.36) and cfg.search.R_max == 512
    assert parse_config(PARABOLOID, widths=[0.2]).widths == (0.2,)
    assert cfg.config_hash == parse_config(dict(PARABOLOID), max_radius=512).config_hash
    assert cfg.config_hash != parse_config(PARABOLOID).config_hash


@pytest.mark.parametrize("patch, needle", [
    ({"colour": 1}, "unknown top-level keys"),
    ({"search": {"R_maxx": 3}}, "field 'search'"),
    ({"grid": {"n_s": 10, "foo": 1}}, "field 'grid'"),
    ({"strategy": "magic"}, "field 'strategy'"),
    ({"widths": [0.1, -0.2]}, "field 'widths'"),
    ({"widths": ["x"]}, "field 'widths'"),
    ({"surface": 3}, "field 'surface'"),
])
def test_parse_config_errors_name_the_field(patch, needle):
    with pytest.raises(ConfigError, match=needle):
        parse_config({**PARABOLOID, **patch})


def test_bad_json_reports_position(tmp_path):
    p = _write(tmp_path, '{\n  "surface": {"name": "plane"},\n  "widths": [0.5,]\n}')
    with pytest.raises(ConfigError, match=r"line 3, column \d+"):
        load_config(p)


def test_exit_code_config_errors(tmp_path, capsys):
    assert main(["analyze", "--config", str(_write(tmp_path, "{oops"))]) == EXIT_CONFIG
    bad = _write(tmp_path, {**PARABOLOID, "extra": 1}, "bad.json")
    assert main(["analyze", "--config", str(bad)]) == EXIT_CONFIG
    assert main(["analyze", "--config", str(tmp_path / "missing.json")]) == EXIT_CONFIG
    good = _write(tmp_path, PARABOLOID, "good.json")
    assert main(["certify", "--config", str(good), "--widths", "0.1,zz"]) == EXIT_CONFIG
    unknown = _write(tmp_path, {"surface": {"name": "torus"}}, "unknown.json")
    assert main(["analyze", "--config", str(unknown), "--out", str(tmp_path / "o")]) == EXIT_CONFIG
    assert "config error" in capsys.readouterr().err


def test_plane_hypothesis_failure(tmp_path):
    cfg = _write(tmp_path, {"surface": {"name": "plane"}, "widths": [0.5]})
    out = tmp_path / "plane"
    assert main(["all", "--config", str(cfg), "--out", str(out)]) == EXIT_HYPOTHESIS
    rep = json.loads((out / "report.json").read_text())
    assert not rep["analyze"]["hypotheses"]["passed"]
    assert "certify" not in rep and "solve" not in rep


def test_analyze_only_report(tmp_path):
    code, rep = run("analyze", parse_config(PARABOLOID), tmp_path)
    assert code == EXIT_OK
    assert "certify" not in rep and "solve" not in rep
    assert rep["analyze"]["geometry"]["total_curvature"] == pytest.approx(2 * math.pi, abs=1e-6)
    assert rep["analyze"]["parabolicity"]["weak_kappa"]["verdict"] == "not established"
    assert json.loads((tmp_path / "report.json").read_text()) == rep
    assert (tmp_path / "tables" / "geometry.csv").exists()
    assert not (tmp_path / "tables" / "certify.csv").exists()


def test_catenoid_analyze_minimal():
    cfg = parse_config({"surface": {"name": "catenoid"}, "widths": [0.2]})
    frag = cli.run_analyze(cfg)
    assert frag["parabolicity"]["weak_kappa"]["verdict"] == "minimal+parabolic"


def test_full_pipeline_paraboloid(tmp_path):
    code, rep = run("all", parse_config(PARABOLOID), tmp_path)
    assert code == EXIT_OK
    assert {"analyze", "certify", "solve", "cross_check"} <= set(rep)
    assert rep["cross_check"]["consistent"]
    rows = list(csv.DictReader((tmp_path / "tables" / "certify.csv").open()))
    assert tuple(rows[0]) == cli.CSV_FIELDS
    by_a = {r["a"]: r["verdict"] for r in rows}
    assert by_a == {"0.3": "certified", "0.36": "skipped"}
    solve = rep["solve"]["rows"]
    assert len(solve) == 1 and solve[0]["gap"] > 0 and solve[0]["consistent"]
    assert solve[0]["length"] >= rep["certify"]["certificates"][0]["R_out"]
    assert "certified" in (tmp_path / "summary.txt").read_text()


def test_determinism(tmp_path):
    cfg = _write(tmp_path, PARABOLOID)
    outs = [tmp_path / "run1", tmp_path / "run2"]
    for o in outs:
        assert main(["all", "--config", str(cfg), "--out", str(o)]) == EXIT_OK
    files = sorted(p.relative_to(outs[0]) for p in outs[0].rglob("*") if p.is_file())
    assert len(files) == 5
    for f in files:
        assert (outs[0] / f).read_bytes() == (outs[1] / f).read_bytes()


def test_inconsistency_aborts(tmp_path, monkeypatch):
    real = cli.solve_layer

    def lifted(layer, *args, **kw):
        res = real(layer, *args, **kw)
        return dataclasses.replace(res, eigenvalues=[res.sigma_ess + 1.0])

    monkeypatch.setattr(cli, "solve_layer", lifted)
    code, rep = run("all", parse_config({**PARABOLOID, "widths": [0.3]}), tmp_path)
    assert code == EXIT_INCONSISTENT
    assert not rep["cross_check"]["consistent"]
    assert "certified but every computed gap <= 0" in rep["cross_check"]["diagnostics"][0]


def test_cross_consistency_without_solve():
    assert cross_consistency({"certify": {}}) == []


def test_round_formats_nonfinite():
    assert cli._round({"x": math.inf, "y": math.nan, "z": 1.23456789012}) == \
        {"x": "inf", "y": "nan", "z": 1.23456789}
