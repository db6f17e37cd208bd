import json
from pathlib import Path

import pytest

from openxxx import cli, config
from openxxx.errors import ConfigError

BASE_DOC = {
    "model": {
        "n_sites": 2,
        "theta": [[0.2, 0.1], [-0.3, 0.05]],
        "p": [1.7, 0.3],
        "q": [0.9, -0.2],
        "xi_plus": [0.6, 0.1],
        "xi_minus": [1.1, -0.4],
    },
    "solver": {"seed": 11},
}

FAST_CHECKS = [
    "foundations.trace_vs_entries",
    "foundations.vacuum_actions",
    "exchange.bb_commute",
    "offshell.general",
]


def write_config(tmp_path, doc, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


# --- config parsing ---------------------------------------------------------------

def test_config_round_trip(tmp_path):
    doc = dict(BASE_DOC)
    doc["checks"] = FAST_CHECKS
    doc["format"] = "csv"
    doc["sweep"] = {"param": "xi_plus", "grid": [[0.1, 0.0], [0.4, 0.2]]}
    cfg = config.parse_config(write_config(tmp_path, doc))
    again = config.parse_config_dict(config.config_to_dict(cfg))
    assert again == cfg


def test_config_complex_forms(tmp_path):
    doc = dict(BASE_DOC)
    doc["model"] = dict(doc["model"], p=2.5)  # bare real accepted
    cfg = config.parse_config(write_config(tmp_path, doc))
    assert cfg.model.p == 2.5


def test_config_rejects_unknown_keys(tmp_path):
    doc = dict(BASE_DOC)
    doc["extra"] = 1
    with pytest.raises(ConfigError, match="unknown keys"):
        config.parse_config(write_config(tmp_path, doc))
    doc = dict(BASE_DOC)
    doc["model"] = dict(doc["model"], typo=3)
    with pytest.raises(ConfigError, match="unknown keys"):
        config.parse_config(write_config(tmp_path, doc))


def test_config_rejects_degenerate_couplings(tmp_path):
    doc = dict(BASE_DOC)
    doc["model"] = dict(doc["model"], xi_plus=[1.0, 0.0], xi_minus=[-1.0, 0.0])
    with pytest.raises(ConfigError, match="rho degenerates"):
        config.parse_config(write_config(tmp_path, doc))


def test_config_rejects_bad_values(tmp_path):
    for patch in (
        {"format": "xml"},
        {"checks": [3]},
        {"model": dict(BASE_DOC["model"], branch="weird")},
        {"model": dict(BASE_DOC["model"], p=[0.0, 0.0])},
        {"sweep": {"param": "theta", "grid": [[0.1, 0]]}},
        {"sweep": {"param": "p", "grid": []}},
    ):
        doc = {**BASE_DOC, **patch}
        with pytest.raises(ConfigError):
            config.parse_config_dict(doc)


def test_default_config_is_valid():
    cfg = config.default_config()
    assert cfg.model.n_sites == 2
    assert cfg.checks == "all"


def test_explicit_n_sites_defaults_to_homogeneous_theta():
    cfg = config.parse_config_dict({"model": {"n_sites": 2}})
    assert cfg.model.theta == (0.0, 0.0)
    cfg3 = config.parse_config_dict({"model": {"n_sites": 3}})
    assert cfg3.model.theta == (0.0, 0.0, 0.0)


# --- verify command ------------------------------------------------------------------

def test_cmd_verify_fast_checks(tmp_path, capsys):
    out = tmp_path / "report.json"
    doc = {**BASE_DOC, "checks": FAST_CHECKS, "output_path": str(out)}
    code = cli.main(["verify", "--config", write_config(tmp_path, doc)])
    assert code == 0
    report = json.loads(out.read_text())
    assert report["all_pass"] is True
    assert {c["verdict"] for c in report["checks"]} == {"pass"}
    shown = capsys.readouterr().out
    assert "suite: pass" in shown


def test_cmd_verify_missing_config(tmp_path):
    assert cli.cmd_verify(str(tmp_path / "absent.json")) == 2


def test_cmd_verify_degenerate_config(tmp_path):
    doc = dict(BASE_DOC)
    doc["model"] = dict(doc["model"], xi_plus=[1.0, 0.0], xi_minus=[-1.0, 0.0])
    assert cli.cmd_verify(write_config(tmp_path, doc)) == 2


def test_cmd_verify_unknown_check(tmp_path):
    doc = {**BASE_DOC, "checks": ["nope"]}
    assert cli.cmd_verify(write_config(tmp_path, doc)) == 2


def test_cmd_verify_csv(tmp_path):
    out = tmp_path / "report.csv"
    doc = {**BASE_DOC, "checks": FAST_CHECKS[:2], "format": "csv", "output_path": str(out)}
    assert cli.main(["verify", "--config", write_config(tmp_path, doc)]) == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0].startswith("name,n_sites,")
    assert len(lines) > 1


# --- solve command -------------------------------------------------------------------

def test_cmd_solve_deterministic(tmp_path):
    out1, out2 = tmp_path / "a.json", tmp_path / "b.json"
    cfg_path = write_config(tmp_path, BASE_DOC)
    assert cli.main(["solve", "--config", cfg_path, "--out", str(out1)]) == 0
    assert cli.main(["solve", "--config", cfg_path, "--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    doc = json.loads(out1.read_text())
    assert doc["count"] >= 1
    for rs in doc["root_sets"]:
        assert rs["residual_norm"] <= 1e-10
        assert len(rs["roots"]) == 2


def test_cmd_solve_empty_is_exit_zero(tmp_path, capsys):
    doc = dict(BASE_DOC)
    doc["solver"] = {"seed": 1, "n_starts": 1, "max_iter": 1}
    code = cli.main(["solve", "--config", write_config(tmp_path, doc)])
    assert code == 0
    err = capsys.readouterr().err
    assert "no admissible Bethe solutions" in err


def test_cmd_solve_csv(tmp_path):
    out = tmp_path / "roots.csv"
    doc = {**BASE_DOC, "format": "csv", "output_path": str(out)}
    assert cli.main(["solve", "--config", write_config(tmp_path, doc)]) == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "set_index,root_index,root_re,root_im,residual_norm"
    assert len(lines) >= 3


# --- spectrum command ------------------------------------------------------------------

def test_cmd_spectrum_full_match(tmp_path):
    out = tmp_path / "spec.json"
    assert cli.main(
        ["spectrum", "--config", write_config(tmp_path, BASE_DOC), "--out", str(out)]
    ) == 0
    doc = json.loads(out.read_text())
    assert doc["matched_count"] == 4
    assert doc["unmatched_count"] == 0
    assert all(c["match_error"] <= 1e-8 for c in doc["curves"])
    assert all(c["eigen_residual"] <= 1e-8 for c in doc["curves"])


def test_cmd_spectrum_unmatched_reported_exit_zero(tmp_path, capsys):
    doc = dict(BASE_DOC)
    doc["solver"] = {"seed": 1, "n_starts": 1, "max_iter": 1}
    doc["spectrum"] = {"rounds": 0}
    out = tmp_path / "spec.json"
    doc["output_path"] = str(out)
    code = cli.main(["spectrum", "--config", write_config(tmp_path, doc)])
    assert code == 0
    report = json.loads(out.read_text())
    assert report["unmatched_count"] > 0


def test_cmd_spectrum_seed_override_changes_nothing_deterministic(tmp_path):
    out1, out2 = tmp_path / "s1.json", tmp_path / "s2.json"
    cfg_path = write_config(tmp_path, BASE_DOC)
    assert cli.main(["spectrum", "--config", cfg_path, "--out", str(out1), "--seed", "77"]) == 0
    assert cli.main(["spectrum", "--config", cfg_path, "--out", str(out2), "--seed", "77"]) == 0
    assert out1.read_bytes() == out2.read_bytes()


# --- sweep command ----------------------------------------------------------------------

def test_cmd_sweep_single_point_equals_spectrum(tmp_path):
    spec_out = tmp_path / "spec.json"
    cfg_path = write_config(tmp_path, BASE_DOC)
    assert cli.main(["spectrum", "--config", cfg_path, "--out", str(spec_out)]) == 0
    spec = json.loads(spec_out.read_text())

    doc = dict(BASE_DOC)
    doc["sweep"] = {"param": "xi_plus", "grid": [[0.6, 0.1]]}  # the config value itself
    sweep_out = tmp_path / "sweep.json"
    assert cli.main(
        ["sweep", "--config", write_config(tmp_path, doc, "s.json"), "--out", str(sweep_out)]
    ) == 0
    row = json.loads(sweep_out.read_text())["rows"][0]
    assert row["matched_count"] == spec["matched_count"]
    assert row["unmatched_count"] == spec["unmatched_count"]


def test_cmd_sweep_requires_section(tmp_path):
    assert cli.main(["sweep", "--config", write_config(tmp_path, BASE_DOC)]) == 2


def test_cmd_sweep_theta_parameter(tmp_path):
    doc = dict(BASE_DOC)
    doc["sweep"] = {"param": "theta_2", "grid": [[0.05, 0.0], [-0.3, 0.05]]}
    out = tmp_path / "th.json"
    assert cli.main(
        ["sweep", "--config", write_config(tmp_path, doc), "--out", str(out)]
    ) == 0
    rows = json.loads(out.read_text())["rows"]
    assert [r["matched_count"] for r in rows] == [4, 4]
    bad = dict(BASE_DOC)
    bad["sweep"] = {"param": "theta_9", "grid": [[0.05, 0.0]]}
    with pytest.raises(ConfigError):
        config.parse_config_dict(bad)


def test_cmd_sweep_parallel_equals_serial(tmp_path):
    doc = dict(BASE_DOC)
    doc["format"] = "csv"
    doc["sweep"] = {
        "param": "xi_plus",
        "grid": [[0.3, 0.0], [0.6, 0.1], [0.9, -0.2], [1.2, 0.3]],
    }
    cfg_path = write_config(tmp_path, doc)
    serial, parallel = tmp_path / "serial.csv", tmp_path / "parallel.csv"
    assert cli.main(["sweep", "--config", cfg_path, "--out", str(serial)]) == 0
    assert cli.main(["sweep", "--config", cfg_path, "--out", str(parallel), "--jobs", "2"]) == 0
    assert serial.read_bytes() == parallel.read_bytes()
    lines = serial.read_text().strip().splitlines()
    assert len(lines) == 5  # header + 4 grid points
    assert all(line.split(",")[3] == "4" for line in lines[1:])  # 4/4 matched each


def test_cmd_sweep_sixteen_point_grid(tmp_path):
    grid = [[0.25 + 0.1 * k, 0.05 * (k % 3)] for k in range(16)]
    doc = {**BASE_DOC, "format": "csv", "sweep": {"param": "xi_plus", "grid": grid}}
    out = tmp_path / "grid16.csv"
    assert cli.main(
        ["sweep", "--config", write_config(tmp_path, doc), "--out", str(out), "--jobs", "2"]
    ) == 0
    lines = out.read_text().strip().splitlines()
    assert len(lines) == 17
    assert all(line.split(",")[3] == "4" for line in lines[1:])


def test_float_cells_round_trip():
    rng_vals = [0.1 + 0.27182818284590452, 1e-13 / 3.0, -2.123456789012345e5]
    for x in rng_vals:
        assert float(cli._fmt_cell(x)) == x


def test_cmd_verify_default_config_all_pass(tmp_path, capsys):
    out = tmp_path / "default_report.json"
    code = cli.main(["verify", "--out", str(out)])
    assert code == 0
    report = json.loads(out.read_text())
    assert report["all_pass"] is True
    gating = [c for c in report["checks"] if c["gating"] and c["verdict"] != "skipped"]
    assert gating and all(c["verdict"] == "pass" for c in gating)
    names = {c["name"] for c in report["checks"]}
    assert "spectrum.completeness" in names and "offshell.n4_probe" in names
