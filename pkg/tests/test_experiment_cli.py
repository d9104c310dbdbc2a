import json
import subprocess
import sys

import numpy as np
import pytest

from qrfm import cli
from qrfm.experiment import (CSV_COLUMNS, ExperimentConfig, convergence_sweep, emit_results, parse_records_csv,
                             records_csv, run_experiment, run_trial, summarize, trial_seed)

SMALL = dict(n=5, m_values=(2, 3), activations=("sin", "tanh"), trials=2, alpha_w=10.0)


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(m_values=(9,), n=8)
    with pytest.raises(ValueError):
        ExperimentConfig(activations=("relu",))
    with pytest.raises(ValueError):
        ExperimentConfig(penalties="huge")
    with pytest.raises(ValueError):
        ExperimentConfig(trials=0)


def test_digest_tracks_every_field():
    a = ExperimentConfig(**SMALL)
    assert a.digest() == ExperimentConfig(**SMALL).digest()
    assert a.digest() != ExperimentConfig(**{**SMALL, "seed": 1}).digest()


def test_trial_seed_shared_across_activations():
    cfg = ExperimentConfig(**SMALL)
    assert trial_seed(0, 3, 1) == trial_seed(0, 3, 1)
    assert trial_seed(0, 3, 1) != trial_seed(0, 3, 2)
    r_sin, _ = run_trial(cfg, "sin", 3, 0)
    r_tanh, _ = run_trial(cfg, "tanh", 3, 0)
    assert r_sin.fidelity_vs_classical >= 1 - 1e-6 and r_tanh.fidelity_vs_classical >= 1 - 1e-6


def test_record_fields():
    cfg = ExperimentConfig(**SMALL)
    rec, pts = run_trial(cfg, "tanh", 3, 0)
    assert rec.n == 5 and rec.m == 3 and rec.mode == "semantic"
    assert rec.wall_ms == 0.0
    assert rec.linf_error >= 0 and rec.l2_error >= 0
    assert rec.queries_Uf > 0 and rec.ancilla_watermark > 0
    assert pts is not None and pts.x.size == 32
    assert np.isclose(rec.linf_error, np.max(np.abs(pts.u_numeric - pts.u_exact)))
    h = 2.0 / 32
    assert np.isclose(rec.l2_error, np.sqrt(h * np.sum((pts.u_numeric - pts.u_exact) ** 2)))


def test_capped_trial_is_flagged():
    cfg = ExperimentConfig(**{**SMALL, "kappa_cap": 1.0})
    rec, pts = run_trial(cfg, "sin", 2, 0)
    assert rec.kappa_capped and np.isnan(rec.linf_error) and pts is None


def test_experiment_sorted_and_complete():
    res = run_experiment(ExperimentConfig(**SMALL))
    assert len(res.records) == 2 * 2 * 2
    assert [r.key for r in res.records] == sorted(r.key for r in res.records)
    assert not res.capped
    assert len(res.points) == 4


def test_workers_do_not_change_results():
    a = run_experiment(ExperimentConfig(**SMALL))
    b = run_experiment(ExperimentConfig(**{**SMALL, "workers": 2}))
    assert records_csv(a.records) == records_csv(b.records)


def test_summary_table():
    res = run_experiment(ExperimentConfig(**SMALL))
    s = summarize(res.records)
    assert len(s.rows) == 4
    assert len(s.medians("sin")) == 2
    assert "median" in s.table()


def test_convergence_sweep_needs_twenty_trials():
    with pytest.raises(ValueError, match="20"):
        convergence_sweep(ExperimentConfig(**SMALL))


def test_csv_header_rows_and_round_trip(tmp_path):
    res = run_experiment(ExperimentConfig(**SMALL))
    paths = emit_results(res, tmp_path / "out", "csv")
    text = paths[0].read_text()
    lines = text.splitlines()
    assert tuple(lines[0].split(",")) == CSV_COLUMNS
    assert len(lines) == 1 + len(res.records)
    back = parse_records_csv(text)
    assert back == res.records
    assert paths[1].name == "out_points.csv"
    assert paths[1].read_text().splitlines()[0] == "activation,m,trial,x,u_exact,u_numeric"


def test_json_output(tmp_path):
    res = run_experiment(ExperimentConfig(**{**SMALL, "activations": ("sin",), "m_values": (2,)}))
    paths = emit_results(res, tmp_path / "r.json", "json")
    doc = json.loads(paths[0].read_text())
    assert doc["columns"] == list(CSV_COLUMNS)
    assert len(doc["records"]) == 2


def test_capped_records_skipped_in_files(tmp_path, capsys):
    res = run_experiment(ExperimentConfig(**{**SMALL, "m_values": (2,), "activations": ("sin",)}))
    capped = ExperimentConfig(**{**SMALL, "kappa_cap": 1.0})
    rec, _ = run_trial(capped, "sin", 3, 0)
    paths = emit_results(res.records + [rec], tmp_path / "c", "csv")
    assert len(paths[0].read_text().splitlines()) == 1 + len(res.records)
    assert "skipped" in capsys.readouterr().err


def test_emit_validation(tmp_path):
    with pytest.raises(ValueError):
        emit_results([], tmp_path / "x")
    res = run_experiment(ExperimentConfig(**{**SMALL, "m_values": (2,), "activations": ("sin",)}))
    with pytest.raises(ValueError):
        emit_results(res, tmp_path / "x", "xml")


# --------------------------------------------------------------------------
# command line


def _sweep_args(out, *extra):
    return ["sweep", "--n", "5", "--m", "2..3", "--activation", "sin", "--trials", "2", "--alpha-w", "10",
            "--out", str(out), *extra]


def test_parse_m_range():
    assert cli.parse_m_range("5") == (5,)
    assert cli.parse_m_range("3,5,7") == (3, 5, 7)
    assert cli.parse_m_range("3..7") == (3, 4, 5, 6, 7)
    with pytest.raises(cli.ConfigError):
        cli.parse_m_range("a..b")


def test_cli_sweep_deterministic(tmp_path, capsys):
    assert cli.main(_sweep_args(tmp_path / "a.csv")) == 0
    assert cli.main(_sweep_args(tmp_path / "b.csv")) == 0
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert (tmp_path / "a_points.csv").read_bytes() == (tmp_path / "b_points.csv").read_bytes()
    assert "median" in capsys.readouterr().out


def test_cli_solve_json(tmp_path, capsys):
    out = tmp_path / "solve.json"
    assert cli.main(["solve", "--n", "5", "--m", "3", "--activation", "tanh", "--alpha-w", "10",
                     "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["m"] == 3 and doc["activation"] == "tanh"
    assert doc["fidelity_vs_classical"] >= 1 - 1e-6


def test_cli_invalid_inputs(capsys):
    assert cli.main(["solve", "--n", "0"]) == 2
    assert cli.main(["solve", "--m", "3,4"]) == 2
    assert cli.main(["sweep", "--activation", "relu"]) == 2
    assert cli.main(["solve", "--mode", "analog"]) == 2
    assert cli.main(["frobnicate"]) == 2


def test_cli_kappa_cap_exit(capsys):
    assert cli.main(["solve", "--n", "5", "--m", "3", "--kappa-cap", "1"]) == 3
    assert "cap" in capsys.readouterr().err


def test_cli_circuit_mode_tanh_without_fallback(capsys):
    assert cli.main(["solve", "--n", "4", "--m", "2", "--activation", "tanh", "--mode", "circuit"]) == 2


def test_cli_config_overrides_flags(tmp_path):
    conf = tmp_path / "run.conf"
    conf.write_text("# overrides\ntrials = 1\nm = 2\nactivation = tanh\n")
    out = tmp_path / "c.csv"
    assert cli.main(_sweep_args(out, "--config", str(conf))) == 0
    rows = parse_records_csv(out.read_text())
    assert len(rows) == 1 and rows[0].activation == "tanh" and rows[0].m == 2


def test_cli_config_errors(tmp_path):
    bad = tmp_path / "bad.conf"
    bad.write_text("colour = blue\n")
    assert cli.main(["solve", "--config", str(bad)]) == 2
    assert cli.main(["solve", "--config", str(tmp_path / "missing.conf")]) == 2
    bad.write_text("trials = many\n")
    assert cli.main(["solve", "--config", str(bad)]) == 2


def test_cli_kernel_check_and_resources(capsys):
    assert cli.main(["kernel-check", "--m", "4", "--trials", "5"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["passed"] and doc["primal_dual_gap"] <= 1e-10
    assert cli.main(["resources", "--n", "4", "--m", "2", "--alpha-w", "5"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["components"]["poly_mn"] == 8


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "qrfm.cli", "solve", "--n", "0"], capture_output=True, text=True)
    assert proc.returncode == 2
