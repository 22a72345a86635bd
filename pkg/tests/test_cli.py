from __future__ import annotations

import json
import subprocess
import sys

import numpy as np
import pytest

from mixbasis import load_csv
from mixbasis.cli import main, parse_basis_flag
from mixbasis.sampler import read_jsonl_header


def run_cli(*argv) -> int:
    return main(list(argv))


def read_meta(path) -> dict:
    meta = {}
    with open(path) as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            key, _, val = line[1:].partition(":")
            meta[key.strip()] = val.strip()
    return meta


@pytest.fixture
def synth_dir(tmp_path):
    out = tmp_path / "synth"
    rc = run_cli("synth", "--spec", "small", "--n", "40", "--seed", "5",
                 "--output-dir", str(out))
    assert rc == 0
    return out


# ------------------------------------------------------------------- basics


def test_no_command_prints_usage_and_fails(capsys):
    assert run_cli() == 1
    assert "usage" in capsys.readouterr().err


def test_version_flag():
    with pytest.raises(SystemExit) as exc:
        run_cli("--version")
    assert exc.value.code == 0


def test_module_entry_point_runs():
    proc = subprocess.run(
        [sys.executable, "-m", "mixbasis.cli", "--version"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert "mixbasis" in proc.stdout


# -------------------------------------------------------------------- synth


def test_synth_outputs(synth_dir):
    data = load_csv(synth_dir / "data.csv")
    assert data.N == 40 and data.M == 3
    truth = np.loadtxt(synth_dir / "truth.csv", delimiter=",", skiprows=4)
    assert truth.shape == (40, 2)
    assert set(truth[:, 1]) == {1.0, 2.0, 3.0}
    meta = read_meta(synth_dir / "data.csv")
    assert meta["seed"] == "5"
    assert len(meta["config_hash"]) == 12
    assert meta["version"]


def test_synth_seed_changes_hash_and_data(tmp_path):
    a, b, c = (tmp_path / x for x in ("a", "b", "c"))
    run_cli("synth", "--spec", "small", "--n", "20", "--seed", "1", "--output-dir", str(a))
    run_cli("synth", "--spec", "small", "--n", "20", "--seed", "1", "--output-dir", str(b))
    run_cli("synth", "--spec", "small", "--n", "20", "--seed", "2", "--output-dir", str(c))
    assert (a / "data.csv").read_text().splitlines()[3:] == (
        b / "data.csv"
    ).read_text().splitlines()[3:]
    assert read_meta(a / "data.csv")["config_hash"] != read_meta(c / "data.csv")["config_hash"]


# ---------------------------------------------------------------- transform


def test_transform_round_trip(tmp_path, synth_dir):
    out = tmp_path / "tr"
    rc = run_cli(
        "transform",
        "--input", str(synth_dir / "data.csv"),
        "--transform", "cdf",
        "--output-dir", str(out),
    )
    assert rc == 0
    got = load_csv(out / "transformed.csv")
    assert got.N == 40
    assert np.all((got.x > 0) & (got.x < 1))


def test_transform_unknown_name_exit_1(tmp_path, synth_dir):
    rc = run_cli(
        "transform",
        "--input", str(synth_dir / "data.csv"),
        "--transform", "warp",
        "--output-dir", str(tmp_path),
    )
    assert rc == 1


def test_missing_input_exit_2(tmp_path):
    rc = run_cli(
        "transform",
        "--input", str(tmp_path / "nope.csv"),
        "--transform", "cdf",
        "--output-dir", str(tmp_path),
    )
    assert rc == 2


def test_bad_flag_exit_1(capsys):
    assert run_cli("synth", "--does-not-exist") == 1


# ------------------------------------------------------------------- fit-em


def test_fit_em_outputs(tmp_path, synth_dir):
    out = tmp_path / "em"
    rc = run_cli(
        "fit-em",
        "--input", str(synth_dir / "data.csv"),
        "--basis", "bernstein:d=3",
        "--k", "3",
        "--restarts", "2",
        "--tol", "1e-6",
        "--seed", "0",
        "--output-dir", str(out),
    )
    assert rc == 0
    fit = json.loads((out / "fit.json").read_text())
    assert fit["config_hash"] and fit["version"] and fit["seed"] == 0
    assert len(fit["pi"]) == 3
    assert fit["converged"] in (True, False)
    rows = np.loadtxt(out / "assignments.csv", delimiter=",", skiprows=4)
    assert rows.shape == (40, 2)
    assert set(rows[:, 1]) <= {1.0, 2.0, 3.0}
    curves = sorted(p.name for p in out.glob("density_c*_*.csv"))
    # one curve per component and item
    assert len(curves) == 9


def test_fit_em_fixed_seed_identical_json(tmp_path, synth_dir):
    outs = []
    for sub in ("r1", "r2"):
        out = tmp_path / sub
        rc = run_cli(
            "fit-em",
            "--input", str(synth_dir / "data.csv"),
            "--basis", "bernstein:d=3",
            "--k", "2",
            "--tol", "1e-6",
            "--seed", "11",
            "--output-dir", str(out),
        )
        assert rc == 0
        outs.append((out / "fit.json").read_text())
    assert outs[0] == outs[1]


def test_fit_em_invalid_k_exit_1(tmp_path, synth_dir):
    rc = run_cli(
        "fit-em",
        "--input", str(synth_dir / "data.csv"),
        "--basis", "bernstein:d=3",
        "--k", "0",
        "--output-dir", str(tmp_path),
    )
    assert rc == 1


def test_parse_basis_flag_global_vs_pairs():
    specs = parse_basis_flag("bernstein:d=3", ("a", "b"))
    assert [s.size for s in specs] == [4, 4]
    specs = parse_basis_flag("a=bernstein:d=2,b=gauss:T=5", ("a", "b"))
    assert [s.family for s in specs] == ["bernstein", "gaussian"]
    from mixbasis import ConfigError

    with pytest.raises(ConfigError):
        parse_basis_flag("a=bernstein:d=2", ("a", "b"))  # must cover every item


# ---------------------------------------------------------------- fit-gibbs


@pytest.fixture
def gibbs_dir(tmp_path, synth_dir):
    out = tmp_path / "gibbs"
    rc = run_cli(
        "fit-gibbs",
        "--input", str(synth_dir / "data.csv"),
        "--basis", "bernstein:d=3",
        "--burn-in", "50",
        "--sweeps", "200",
        "--seed", "3",
        "--output-dir", str(out),
    )
    assert rc == 0
    return out


def test_fit_gibbs_outputs(gibbs_dir):
    header = read_jsonl_header(gibbs_dir / "samples.jsonl")
    assert header["N"] == 40 and header["M"] == 3
    assert header["seed"] == 3
    assert "config_hash" in header
    summary = json.loads((gibbs_dir / "gibbs_summary.json").read_text())
    assert summary["map_k"] >= 1
    assert summary["steps_per_sec"] > 0
    assert summary["selected_sample"] >= 0
    hist = np.loadtxt(gibbs_dir / "k_histogram.csv", delimiter=",", skiprows=4, ndmin=2)
    assert hist[:, 1].sum() == pytest.approx(1.0, abs=1e-9)
    c = np.loadtxt(gibbs_dir / "consensus.csv", delimiter=",", skiprows=3)
    assert c.shape == (40, 40)
    assert np.allclose(np.diag(c), 1.0)


def test_fit_gibbs_reproducible(tmp_path, synth_dir, gibbs_dir):
    out2 = tmp_path / "gibbs2"
    rc = run_cli(
        "fit-gibbs",
        "--input", str(synth_dir / "data.csv"),
        "--basis", "bernstein:d=3",
        "--burn-in", "50",
        "--sweeps", "200",
        "--seed", "3",
        "--output-dir", str(out2),
    )
    assert rc == 0
    a = (gibbs_dir / "samples.jsonl").read_text()
    b = (out2 / "samples.jsonl").read_text()
    assert a == b


def test_fit_gibbs_zero_sweeps_exit_1(tmp_path, synth_dir):
    rc = run_cli(
        "fit-gibbs",
        "--input", str(synth_dir / "data.csv"),
        "--basis", "bernstein:d=3",
        "--sweeps", "0",
        "--output-dir", str(tmp_path),
    )
    assert rc == 1


# ------------------------------------------------------------------ analyze


def test_analyze_matches_fit_gibbs(tmp_path, gibbs_dir):
    out = tmp_path / "ana"
    rc = run_cli(
        "analyze",
        "--input", str(gibbs_dir / "samples.jsonl"),
        "--output-dir", str(out),
    )
    assert rc == 0
    # histogram and consensus recomputed from the stream must match the
    # fit-gibbs outputs
    for name, skip in (("k_histogram.csv", 4), ("consensus.csv", 3)):
        got = np.loadtxt(out / name, delimiter=",", skiprows=skip, ndmin=2)
        want = np.loadtxt(gibbs_dir / name, delimiter=",", skiprows=skip, ndmin=2)
        np.testing.assert_allclose(got, want, atol=1e-9)
    mi = (out / "mi_ranking.csv").read_text().splitlines()
    rows = [r.split(",") for r in mi[4:]]
    bits = [float(b) for _, b in rows]
    assert bits == sorted(bits, reverse=True)
    rep = np.loadtxt(out / "representative_assignments.csv", delimiter=",", skiprows=4)
    want = np.loadtxt(
        gibbs_dir / "representative_assignments.csv", delimiter=",", skiprows=4
    )
    np.testing.assert_array_equal(rep, want)


def test_analyze_missing_file_exit_2(tmp_path):
    rc = run_cli("analyze", "--input", str(tmp_path / "none.jsonl"),
                 "--output-dir", str(tmp_path))
    assert rc == 2


# ------------------------------------------------------------------- oracle


def test_oracle_json(tmp_path, capsys):
    data = tmp_path / "tiny.csv"
    rng = np.random.default_rng(2)
    np.savetxt(data, rng.random((5, 2)), delimiter=",", header="a,b", comments="")
    rc = run_cli("oracle", "--input", str(data), "--basis", "bernstein:d=1")
    assert rc == 0
    payload = json.loads(capsys.readouterr().out)
    probs = [float(v) for v in payload["k_marginal"].values()]
    assert sum(probs) == pytest.approx(1.0, abs=1e-9)
    assert len(payload["coassign"]) == 5


def test_oracle_guard_exit_3(tmp_path):
    data = tmp_path / "big.csv"
    rng = np.random.default_rng(3)
    np.savetxt(data, rng.random((9, 1)), delimiter=",")
    rc = run_cli("oracle", "--input", str(data), "--basis", "bernstein:d=1")
    assert rc == 3
