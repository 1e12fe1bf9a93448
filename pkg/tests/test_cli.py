"""Command-line front end: validation, presets, outputs, reproducibility."""

import filecmp
import os

import numpy as np
import pytest

from grassflow.cli import (RunConfig, apply_preset, config_hash, main,
                           validate)


def base_config(**kw):
    return RunConfig(**{"equation": "burgers", "profile": "linear", **kw})


# ---------------------------------------------------------------------------
# validation


def test_paper_presets_validate_clean():
    for eq in ("kdv", "nls", "spde", "smol-const"):
        config = apply_preset(RunConfig(equation=eq, preset="paper"))
        assert validate(config) == []


def test_non_power_of_two_modes_flagged():
    config = RunConfig(equation="kdv", grid_n=100)
    problems = validate(config)
    assert len(problems) == 1
    assert "power of two" in problems[0]


def test_negative_dt_flagged():
    config = base_config(dt=-1e-3)
    problems = validate(config)
    assert len(problems) == 1
    assert "dt" in problems[0]


def test_multiple_violations_all_reported():
    config = RunConfig(equation="kdv", grid_n=100, dt=-1.0, t_final=-2.0)
    assert len(validate(config)) == 3


def test_unknown_equation_flagged():
    assert any("unknown equation" in p
               for p in validate(RunConfig(equation="heat")))


# ---------------------------------------------------------------------------
# config hash and CLI plumbing


def test_hash_ignores_output_location_only():
    a = base_config(out="/tmp/a")
    b = base_config(out="/tmp/b")
    c = base_config(seed=1)
    assert config_hash(a) == config_hash(b)
    assert config_hash(a) != config_hash(c)


def test_validate_only_flag(capsys):
    rc = main(["kdv", "--grid-n", "100", "--validate-only"])
    out = capsys.readouterr().out
    assert rc == 2
    assert "power of two" in out
    rc = main(["kdv", "--validate-only"])
    assert rc == 0


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("grid-n = 64\nt-final = 0.25\nseed = 9\n")
    out = tmp_path / "run"
    rc = main(["burgers", "--config", str(cfg), "--profile", "linear",
               "--t-final", "0.5", "--out", str(out)])
    assert rc == 0
    meta = (out / "burgers_metadata.txt").read_text()
    assert "grid_n = 64" in meta          # from the file
    assert "t_final = 0.5" in meta        # flag wins over the file
    assert "seed = 9" in meta


def test_unknown_config_key_rejected(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("tolerance = 1e-3\n")
    with pytest.raises(SystemExit):
        main(["burgers", "--config", str(cfg)])


# ---------------------------------------------------------------------------
# runs and outputs


def read_table(path):
    with open(path) as fh:
        first = fh.readline()
        assert first.startswith("# config_hash=")
        header = fh.readline().strip().split(",")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    return first.strip(), header, rows


def test_burgers_linear_closed_form(tmp_path):
    rc = main(["burgers", "--profile", "linear", "--t-final", "1.0",
               "--grid-n", "11", "--domain-l", "4.0",
               "--out", str(tmp_path)])
    assert rc == 0
    _, header, rows = read_table(tmp_path / "burgers_field.csv")
    assert header[:4] == ["x", "t", "value_real", "value_imag"]
    for row in rows:
        x, _, value = float(row[0]), float(row[1]), float(row[2])
        assert value == pytest.approx(x / 2.0, abs=1e-10)


def test_burgers_shock_exit_code(tmp_path):
    rc = main(["burgers", "--profile", "neg-tanh", "--t-final", "1.0",
               "--grid-n", "21", "--domain-l", "2.0", "--out", str(tmp_path)])
    assert rc == 1  # breakdown report, field still written
    assert (tmp_path / "burgers_field.csv").exists()


def test_validation_exit_code(tmp_path):
    rc = main(["kdv", "--grid-n", "100", "--out", str(tmp_path)])
    assert rc == 2


def test_kdv_run_produces_four_tables(tmp_path):
    rc = main(["kdv", "--grid-n", "32", "--domain-l", "10.0",
               "--t-final", "0.01", "--dt", "1e-3", "--checkpoints", "3",
               "--out", str(tmp_path)])
    assert rc == 0
    for name in ("kdv_poppe.csv", "kdv_direct.csv", "kdv_difference.csv",
                 "kdv_det.csv", "kdv_metadata.txt"):
        assert (tmp_path / name).exists()
    first, _, rows = read_table(tmp_path / "kdv_poppe.csv")
    assert len(rows) == 3 * 32
    # every output embeds the same config hash
    other, _, _ = read_table(tmp_path / "kdv_direct.csv")
    assert first == other


def test_spde_rerun_is_bitwise_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    args = ["spde", "--grid-n", "8", "--t-final", "0.004", "--dt", "2e-4",
            "--panels", "16", "--seed", "42"]
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    names = [n for n in os.listdir(a) if n.endswith(".csv")]
    assert names
    for name in names:
        assert filecmp.cmp(a / name, b / name, shallow=False), name


def test_smol_const_run_reports_moments(tmp_path):
    rc = main(["smol-const", "--grid-n", "256", "--domain-l", "40",
               "--t-final", "2.0", "--dt", "1e-2", "--out", str(tmp_path)])
    assert rc == 0
    meta = (tmp_path / "smol-const_metadata.txt").read_text()
    line = next(l for l in meta.splitlines() if l.startswith("m0 "))
    m0 = float(line.split("=")[1])
    assert m0 == pytest.approx(0.5, abs=1e-2)


def test_elliptic_run_residual(tmp_path):
    rc = main(["elliptic", "--grid-n", "1024", "--domain-l", "1.0",
               "--profile", "tanh", "--out", str(tmp_path)])
    assert rc == 0
    meta = (tmp_path / "elliptic_metadata.txt").read_text()
    line = next(l for l in meta.splitlines()
                if l.startswith("ode_residual"))
    assert float(line.split("=")[1]) < 1e-6
