"""Command-line front end: parsing, CSV/JSON emission, manifests,
determinism of seeded outputs."""
import csv
import hashlib
import json
import subprocess
import sys

import numpy as np
import pytest

from gstwdp import (ChannelParams, RqamSpec, asep_chernoff, asep_chiani,
                    envelope_pdf, mgf, snr_cdf)
from gstwdp.cli import main


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array([[float(v) for v in r] for r in rows[1:]])


# ---- eval ----

def test_eval_pdf_matches_library(tmp_path):
    out = tmp_path / "pdf.csv"
    rc = main(["eval", "pdf", "envelope", "--K", "15",
               "--gamma-ratio", "0.9", "--m", "5", "--omega", "1",
               "--x", "0.1:0.2:2.1", "--out", str(out)])
    assert rc == 0
    header, data = read_csv(out)
    assert header == ["x", "pdf"]
    p = ChannelParams(15.0, 0.9, 5.0, 1.0)
    want = envelope_pdf(data[:, 0], p)
    assert np.allclose(data[:, 1], want, rtol=1e-10)


def test_eval_cdf_snr_at_zero(capsys):
    rc = main(["eval", "cdf", "snr", "--K", "5", "--gamma-ratio",
               "0.5", "--m", "2", "--omega", "1", "--x", "0:1:2"])
    assert rc == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "g,cdf"
    first = [float(v) for v in lines[1].split(",")]
    assert first == [0.0, 0.0]


def test_eval_mgf_is_monotone(tmp_path):
    out = tmp_path / "mgf.csv"
    rc = main(["eval", "mgf", "snr", "--K", "10", "--gamma-ratio",
               "0.6", "--m", "1.5", "--omega", "1",
               "--x", "0.5:0.5:3.5", "--out", str(out)])
    assert rc == 0
    _, data = read_csv(out)
    assert data.shape == (7, 2)
    assert np.all(np.diff(data[:, 1]) < 0.0)
    p = ChannelParams(10.0, 0.6, 1.5, 1.0)
    assert data[1, 1] == pytest.approx(float(mgf(1.0, p)), rel=1e-10)


def test_eval_mgf_rejects_envelope_domain():
    rc = main(["eval", "mgf", "envelope", "--K", "1",
               "--gamma-ratio", "0.5", "--m", "1", "--omega", "1",
               "--x", "0.1:0.1:1"])
    assert rc == 1


def test_eval_writes_manifest(tmp_path):
    out = tmp_path / "c.csv"
    main(["eval", "cdf", "envelope", "--K", "2", "--gamma-ratio",
          "0.3", "--m", "1", "--omega", "1", "--x", "0.5:0.5:1.5",
          "--out", str(out)])
    man = json.loads((tmp_path / "c.csv.manifest.json").read_text())
    assert man["subcommand"] == "eval"
    assert man["parameters"]["kind"] == "cdf"
    assert "version" in man and "timestamp" in man


# ---- sample ----

def test_sample_deterministic_per_seed(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["sample", "--K", "5", "--gamma-ratio", "0.5", "--m",
            "2", "--omega", "1", "--n", "500", "--seed", "7"]
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    ha = hashlib.md5(a.read_bytes()).hexdigest()
    hb = hashlib.md5(b.read_bytes()).hexdigest()
    assert ha == hb
    header, data = read_csv(a)
    assert header == ["amplitude"]
    assert data.shape == (500, 1)
    assert np.all(data > 0.0)


def test_sample_mean_square_tracks_power(tmp_path):
    out = tmp_path / "s.csv"
    main(["sample", "--K", "15", "--gamma-ratio", "0.9", "--m",
          "5", "--omega", "2", "--n", "100000", "--seed", "1",
          "--out", str(out)])
    _, data = read_csv(out)
    r2 = data[:, 0] ** 2
    se = float(np.std(r2, ddof=1)) / np.sqrt(r2.size)
    assert abs(float(np.mean(r2)) - 2.0) < 4.0 * se


# ---- asep ----

def test_asep_methods_and_row_ordering(tmp_path):
    shape = ["--mi", "4", "--mq", "2", "--beta", "1", "--K", "10",
             "--gamma-ratio", "0.1", "--m", "5", "--snr-db", "0:6:30"]
    ch, ci = tmp_path / "ch.csv", tmp_path / "ci.csv"
    assert main(["asep", "--method", "chernoff"] + shape
                + ["--out", str(ch)]) == 0
    assert main(["asep", "--method", "chiani"] + shape
                + ["--out", str(ci)]) == 0
    h1, d1 = read_csv(ch)
    h2, d2 = read_csv(ci)
    assert h1 == ["snr_db", "asep"] and h2 == ["snr_db", "asep"]
    assert np.array_equal(d1[:, 0], np.arange(0.0, 30.1, 6.0))
    # surrogate ordering must hold row by row
    assert np.all(d1[:, 1] >= d2[:, 1])
    rq = RqamSpec(4, 2, 1.0)
    p = ChannelParams(10.0, 0.1, 5.0, 10.0 ** 1.8)
    assert d1[3, 1] == pytest.approx(asep_chernoff(rq, p), rel=1e-10)
    assert d2[3, 1] == pytest.approx(asep_chiani(rq, p), rel=1e-10)


def test_asep_mc_carries_error_column(tmp_path):
    out = tmp_path / "mc.csv"
    rc = main(["asep", "--method", "mc", "--mi", "4", "--mq", "2",
               "--beta", "1", "--K", "10", "--gamma-ratio", "0.9",
               "--m", "5", "--snr-db", "0:15:30", "--seed", "3",
               "--n-samples", "20000", "--out", str(out)])
    assert rc == 0
    header, data = read_csv(out)
    assert header == ["snr_db", "asep", "stderr"]
    assert np.all(data[:, 2] > 0.0)
    assert np.all(data[:, 1] > 0.0)


def test_asep_quad_method(tmp_path):
    out = tmp_path / "q.csv"
    rc = main(["asep", "--method", "quad", "--mi", "2", "--mq", "2",
               "--beta", "1", "--K", "5", "--gamma-ratio", "0.5",
               "--m", "2", "--snr-db", "10:10:20", "--out", str(out)])
    assert rc == 0
    _, data = read_csv(out)
    assert data.shape == (2, 2)
    assert data[0, 1] > data[1, 1] > 0.0


# ---- fit ----

def _write_samples(path, n=4000, seed=2):
    from gstwdp import SimConfig, sample_envelope
    s = sample_envelope(ChannelParams(8.0, 0.6, 3.0, 1.0),
                        SimConfig(seed=seed, n_samples=n))
    path.write_text("amplitude\n" + "\n".join(f"{v:.9g}" for v in s) + "\n")


def test_fit_round_trip_json(tmp_path):
    data = tmp_path / "data.csv"
    _write_samples(data)
    out = tmp_path / "fit.json"
    rc = main(["fit", str(data), "--coarse-per-axis", "5", "--subsample",
               "256", "--max-refine-iter", "40", "--out", str(out)])
    assert rc == 0
    doc = json.loads(out.read_text())
    for key in ("params", "error", "coarse_error", "n_points", "refined",
                "grid_evals", "refine_evals"):
        assert key in doc
    assert doc["n_points"] == 4000
    assert doc["error"] <= doc["coarse_error"] + 1e-12
    assert 0.0 <= doc["params"]["gamma_ratio"] <= 1.0


def test_fit_accepts_two_column_input(tmp_path):
    from gstwdp import SeriesPolicy, envelope_cdf
    p = ChannelParams(10.0, 0.5, 4.0, 1.0)
    xs = np.linspace(0.15, 2.4, 300)
    f = np.asarray(envelope_cdf(xs, p, SeriesPolicy(1e-8, 200)))
    data = tmp_path / "curve.csv"
    data.write_text("amplitude,cdf\n" + "\n".join(
        f"{x:.9g},{v:.12g}" for x, v in zip(xs, f)) + "\n")
    out = tmp_path / "fit.json"
    rc = main(["fit", str(data), "--coarse-per-axis", "5", "--subsample",
               "256", "--max-refine-iter", "60", "--out", str(out)])
    assert rc == 0
    doc = json.loads(out.read_text())
    # digitized exact curve: residual is optimizer convergence error only,
    # well under the noise floor of any sampled dataset
    assert doc["error"] < 0.05


def test_fit_missing_file_fails_cleanly(tmp_path, capsys):
    rc = main(["fit", str(tmp_path / "nope.csv")])
    assert rc == 1
    assert "error:" in capsys.readouterr().err


# ---- verify ----

def test_verify_specfun_reports_deviation(capsys):
    rc = main(["verify", "specfun", "--k-grid", "0,5", "--gamma-grid",
               "0.3,0.9"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "worst" in out


def test_verify_model_small_grid(capsys):
    rc = main(["verify", "model", "--k-grid", "5", "--gamma-grid", "0.5",
               "--m-grid", "2", "--x", "0.4:0.6:1.6"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "max_rel" in out


def test_verify_empty_grid_is_usage_error(capsys):
    rc = main(["verify", "model", "--k-grid", "", "--gamma-grid", "0.5",
               "--m-grid", "2"])
    assert rc == 1


# ---- manifests and misc ----

def test_sample_manifest_records_seed(tmp_path):
    out = tmp_path / "s.csv"
    main(["sample", "--K", "1", "--gamma-ratio", "0.2", "--m",
          "1", "--omega", "1", "--n", "10", "--seed", "99",
          "--out", str(out)])
    man = json.loads((tmp_path / "s.csv.manifest.json").read_text())
    assert man["seed"] == 99
    assert man["subcommand"] == "sample"


def test_entry_point_runs_as_subprocess():
    res = subprocess.run(
        [sys.executable, "-m", "gstwdp.cli", "eval", "pdf", "envelope",
         "--K", "2", "--gamma-ratio", "0.5", "--m", "1",
         "--omega", "1", "--x", "0.5:0.5:1.5"],
        capture_output=True, text=True)
    assert res.returncode == 0
    assert res.stdout.startswith("x,pdf")


def test_max_terms_env_override(tmp_path):
    # a tiny series cap must visibly break convergence at strong rays
    env = {"GSTWDP_MAX_TERMS": "3"}
    import os
    res = subprocess.run(
        [sys.executable, "-m", "gstwdp.cli", "eval", "pdf", "envelope",
         "--K", "15", "--gamma-ratio", "0.9", "--m", "5",
         "--omega", "1", "--x", "0.8:0.1:1.0"],
        capture_output=True, text=True, env={**os.environ, **env})
    assert res.returncode == 1
    assert "error:" in res.stderr
