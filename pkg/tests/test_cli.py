import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from robustrec import io
from robustrec.cli import build_parser, full_help, main

GOLDEN = Path(__file__).parent / "golden" / "usage.txt"

PHASE_MC = """
kind = "phase-mc"
seed = 3
trials = 2

[model]
n = 12

[grid]
rank = [1]
rho = [0.6]
s = [0.0, 0.1]
"""

PHASE_CS = """
kind = "phase-cs"
seed = 3
trials = 2

[model]
ensemble = "Gaussian"
m = 20
n = 40

[grid]
sparsity = [0, 2]
corruption = [0, 1]
"""

STABILITY = """
kind = "stability"
seed = 1
lambda = 1.0
epsilons = [0.0, 0.001, 0.01]
exact_delta = true

[model]
ensemble = "balanced"
m = 32
n = 4
sparsity = 1
corruption = 1
"""

LEMMAS = """
kind = "lemmas"
seed = 5
trials = 3

[[checks]]
name = "gaussian-norm"
m = 5
n = 5
t = 1.0

[[checks]]
name = "rows-gram"
m = 32
n = 64
s = 2
"""


def test_usage_matches_golden_file():
    assert full_help() == GOLDEN.read_text()


def test_help_lists_every_flag():
    parser = build_parser()
    text = full_help(parser)
    sub = next(a for a in parser._actions if a.__class__.__name__ == "_SubParsersAction")
    for sp in sub.choices.values():
        for action in sp._actions:
            for flag in action.option_strings:
                assert flag in text


def test_unknown_subcommand_is_usage_error(capsys):
    assert main(["frobnicate"]) == 2
    assert "usage:" in capsys.readouterr().err


def test_unknown_flag_is_usage_error(capsys):
    assert main(["rip", "--A", "a.mtx", "--s1", "1", "--s2", "1", "--bogus"]) == 2
    assert "usage:" in capsys.readouterr().err


def test_missing_seed_is_usage_error(capsys):
    assert main(["gen", "--problem", "cs", "--out-dir", "x", "--m", "4", "--n", "8"]) == 2


def test_missing_file_is_runtime_error(tmp_path, capsys):
    assert main(["rip", "--A", str(tmp_path / "nope.mtx"), "--s1", "1", "--s2", "1"]) == 1
    assert "error" in capsys.readouterr().err


def test_gen_solve_cs_round_trip(tmp_path, capsys):
    d = tmp_path / "cs"
    assert main(["gen", "--problem", "cs", "--seed", "4", "--out-dir", str(d), "--m", "60", "--n", "120", "--sparsity", "3", "--corruption", "2"]) == 0
    out = tmp_path / "sol.mtx"
    assert main(["solve-cs", "--A", str(d / "A.mtx"), "--y", str(d / "y.mtx"), "--lambda-rule", "gaussian", "--eps", "0", "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "objective" in text and "primal_residual" in text
    z = io.read_matrix(out).reshape(-1)
    truth = np.concatenate([io.read_matrix(d / "x.mtx").reshape(-1), io.read_matrix(d / "f.mtx").reshape(-1)])
    assert np.linalg.norm(z - truth) <= 1e-4 * np.linalg.norm(truth)


def test_gen_solve_mc(tmp_path, capsys):
    d = tmp_path / "mc"
    assert main(["gen", "--problem", "mc", "--seed", "2", "--out-dir", str(d), "--n", "16", "--r", "1", "--rho", "0.6"]) == 0
    assert main(["solve-mc", "--M", str(d / "M.mtx"), "--mask", str(d / "mask.mtx"), "--lambda-rule", "0.5",
                 "--out-L", str(tmp_path / "L.mtx"), "--out-S", str(tmp_path / "S.mtx")]) == 0
    assert io.read_matrix(tmp_path / "L.mtx").shape == (16, 16)
    assert "objective" in capsys.readouterr().out


def test_gen_mc_requires_rank(tmp_path):
    assert main(["gen", "--problem", "mc", "--seed", "2", "--out-dir", str(tmp_path), "--n", "16", "--rho", "0.6"]) == 1


def test_rip_prints_delta_and_supports(tmp_path, capsys):
    io.write_matrix(tmp_path / "a.mtx", np.zeros((3, 4)))
    assert main(["rip", "--A", str(tmp_path / "a.mtx"), "--s1", "2", "--s2", "2"]) == 0
    out = capsys.readouterr().out
    assert "delta 1\n" in out and "argmax_T" in out and "argmax_V" in out


def test_certify_commands(tmp_path, capsys):
    d = tmp_path / "cs"
    assert main(["gen", "--problem", "cs", "--seed", "1", "--out-dir", str(d), "--ensemble", "rademacher", "--m", "64", "--n", "32",
                 "--sparsity", "1", "--corruption", "1"]) == 0
    assert main(["certify-cs", "--A", str(d / "A.mtx"), "--x", str(d / "x.mtx"), "--f", str(d / "f.mtx"), "--seed", "0",
                 "--out", str(tmp_path / "q.mtx")]) == 0
    assert io.read_matrix(tmp_path / "q.mtx").shape == (63, 1)
    assert main(["certify-mc", "--n", "20", "--r", "1", "--rho", "0.4", "--s", "0.05", "--seed", "0"]) == 0
    out = capsys.readouterr().out
    assert "telescoping_residual" in out and "certificate" in out


@pytest.mark.parametrize(
    "command, config",
    [("phase-mc", PHASE_MC), ("phase-cs", PHASE_CS), ("stability", STABILITY), ("lemmas", LEMMAS)],
)
def test_experiment_csv_byte_identical(tmp_path, command, config):
    cfg = tmp_path / "c.toml"
    cfg.write_text(config)
    outs = []
    for k in range(2):
        out = tmp_path / f"out{k}.csv"
        summary = tmp_path / f"sum{k}.csv"
        assert main([command, "--config", str(cfg), "--out", str(out), "--summary", str(summary)]) == 0
        outs.append((out.read_bytes(), summary.read_bytes() if summary.exists() else b""))
    assert outs[0] == outs[1]
    assert b"\r" not in outs[0][0]


def test_model_equiv_csv_byte_identical(tmp_path):
    outs = []
    for k in range(2):
        out = tmp_path / f"e{k}.csv"
        assert main(["model-equiv", "--n", "30", "--rho", "0.3", "--s", "0.1", "--trials", "2", "--seed", "9", "--out", str(out)]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_jobs_do_not_change_output(tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text(PHASE_CS)
    assert main(["phase-cs", "--config", str(cfg), "--out", str(tmp_path / "a.csv")]) == 0
    assert main(["phase-cs", "--config", str(cfg), "--out", str(tmp_path / "b.csv"), "--jobs", "2"]) == 0
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_csv_to_stdout_without_out(tmp_path, capsys):
    cfg = tmp_path / "c.toml"
    cfg.write_text(LEMMAS)
    assert main(["lemmas", "--config", str(cfg)]) == 0
    assert capsys.readouterr().out.startswith(",".join(io.REPORT_COLUMNS) + "\n")


def test_wrong_config_kind_is_runtime_error(tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text(LEMMAS)
    assert main(["phase-cs", "--config", str(cfg)]) == 1


def test_console_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "robustrec", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "usage: robustrec" in proc.stdout
