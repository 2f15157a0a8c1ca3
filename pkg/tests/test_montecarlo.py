"""Seeded sampling, empirical statistics, and simulation-based error rates."""
import math

import numpy as np
import pytest

from gstwdp import (ChannelParams, RqamSpec, SimConfig, asep_montecarlo,
                    empirical_cdf, envelope_cdf, envelope_pdf, oracle,
                    sample_envelope)
from gstwdp.montecarlo import EmpiricalCdf

# frozen: textbook no-specular fading average of the 2x2 error rate
QPSK_RAYLEIGH_SNR10 = 0.07857305673855844


# ---- configuration plumbing ----

def test_sim_config_validation():
    with pytest.raises(ValueError):
        SimConfig(seed=1, n_samples=0)
    with pytest.raises(ValueError):
        SimConfig(seed=1, n_samples=10, batch=0)


# ---- envelope sampling ----

def test_sampling_is_deterministic_per_seed():
    p = ChannelParams(5.0, 0.5, 2.0, 1.0)
    a = sample_envelope(p, SimConfig(seed=42, n_samples=2_000))
    b = sample_envelope(p, SimConfig(seed=42, n_samples=2_000))
    c = sample_envelope(p, SimConfig(seed=43, n_samples=2_000))
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_sampling_batch_split_does_not_change_stream():
    p = ChannelParams(5.0, 0.5, 2.0, 1.0)
    one = sample_envelope(p, SimConfig(seed=9, n_samples=5_000,
                                       batch=5_000))
    split = sample_envelope(p, SimConfig(seed=9, n_samples=5_000,
                                         batch=700))
    assert np.array_equal(one, split)


def test_single_sample_works():
    p = ChannelParams(1.0, 0.2, 1.0, 1.0)
    s = sample_envelope(p, SimConfig(seed=3, n_samples=1))
    assert s.shape == (1,) and s[0] > 0.0


def test_rayleigh_limit_second_moment():
    # no specular power, essentially frozen local mean
    p = ChannelParams(0.0, 0.0, 1e6, 2.0)
    s = sample_envelope(p, SimConfig(seed=5, n_samples=200_000))
    r2 = s * s
    se = float(np.std(r2, ddof=1)) / math.sqrt(r2.size)
    assert abs(float(np.mean(r2)) - 2.0) < 3.0 * se


def test_full_model_second_moment_tracks_mean_power():
    for seed, (k, g, m, om) in enumerate(
            [(15.0, 0.9, 5.0, 1.0), (2.0, 0.3, 0.8, 0.5),
             (0.0, 0.0, 2.0, 3.0)]):
        p = ChannelParams(k, g, m, om)
        s = sample_envelope(p, SimConfig(seed=100 + seed,
                                         n_samples=1_000_000))
        r2 = s * s
        se = float(np.std(r2, ddof=1)) / math.sqrt(r2.size)
        assert abs(float(np.mean(r2)) - om) < 4.0 * se, (k, g, m, om)


def test_histogram_tracks_analytic_density():
    p = ChannelParams(15.0, 0.9, 5.0, 1.0)
    s = sample_envelope(p, SimConfig(seed=21, n_samples=100_000))
    edges = np.linspace(0.0, 3.0, 41)
    hist, _ = np.histogram(s, bins=edges, density=True)
    mids = 0.5 * (edges[:-1] + edges[1:])
    dens = envelope_pdf(mids, p)
    assert float(np.max(np.abs(hist - dens))) < 0.04 * float(np.max(dens))


# ---- empirical distribution ----

def test_empirical_cdf_single_sample():
    e = empirical_cdf(np.array([1.7]))
    assert e.values.tolist() == [1.7]
    assert e.probs.tolist() == [1.0]
    assert e.evaluate(1.6999) == 0.0
    assert e.evaluate(1.7) == 1.0


def test_empirical_cdf_handles_ties():
    e = empirical_cdf(np.array([2.0, 2.0]))
    assert e.values.tolist() == [2.0, 2.0]
    assert e.probs.tolist() == [0.5, 1.0]
    assert e.evaluate(2.0) == 1.0


def test_empirical_cdf_ks_distance_small():
    p = ChannelParams(15.0, 0.9, 5.0, 1.0)
    s = sample_envelope(p, SimConfig(seed=8, n_samples=100_000))
    e = empirical_cdf(s)
    analytic = envelope_cdf(e.values, p)
    n = e.values.size
    right = np.max(np.abs(e.probs - analytic))
    left = np.max(np.abs(analytic - (e.probs - 1.0 / n)))
    assert max(float(right), float(left)) < 0.01


def test_empirical_cdf_type_rejects_bad_probs():
    with pytest.raises(ValueError):
        EmpiricalCdf(np.array([1.0, 2.0]), np.array([0.5, 0.4]))
    with pytest.raises(ValueError):
        EmpiricalCdf(np.array([1.0, 2.0]), np.array([0.0, 1.0]))
    with pytest.raises(ValueError):
        EmpiricalCdf(np.array([1.0, 2.0]), np.array([0.5, 1.2]))
    with pytest.raises(ValueError):
        EmpiricalCdf(np.array([2.0, 1.0]), np.array([0.5, 1.0]))


def test_empirical_cdf_digitized_curve_evaluates_steps():
    # externally supplied step heights, not rank-based
    e = EmpiricalCdf(np.array([0.5, 1.0, 2.0]),
                     np.array([0.1, 0.4, 0.9]))
    got = e.evaluate(np.array([0.2, 0.5, 1.5, 2.0, 5.0]))
    assert got.tolist() == [0.0, 0.1, 0.4, 0.9, 0.9]


# ---- simulation-based error rate ----

def test_asep_montecarlo_small_snr_limit():
    rq = RqamSpec(4, 2, 1.0)
    p = ChannelParams(5.0, 0.5, 2.0, 1e-8)
    est, se = asep_montecarlo(rq, p, SimConfig(seed=13, n_samples=20_000))
    want = rq.p_i + rq.p_q - rq.p_i * rq.p_q
    assert abs(est - want) < max(3.0 * se, 1e-3)


def test_asep_montecarlo_rayleigh_textbook_value():
    rq = RqamSpec(2, 2, 1.0)
    p = ChannelParams(0.0, 0.0, 500.0, 10.0)
    est, se = asep_montecarlo(rq, p, SimConfig(seed=17, n_samples=200_000))
    assert abs(est - QPSK_RAYLEIGH_SNR10) < max(3.0 * se,
                                                0.01 * QPSK_RAYLEIGH_SNR10)


def test_asep_montecarlo_matches_quadrature():
    rq = RqamSpec(4, 2, 1.0)
    p = ChannelParams(10.0, 0.1, 5.0, 10.0 ** 0.9)
    want = oracle.asep_by_quadrature(rq, p)
    est, se = asep_montecarlo(rq, p, SimConfig(seed=23, n_samples=200_000))
    assert abs(est - want) < 3.0 * se


def test_asep_montecarlo_reproducible():
    rq = RqamSpec(4, 2, 1.0)
    p = ChannelParams(10.0, 0.9, 5.0, 10.0)
    cfg = SimConfig(seed=29, n_samples=30_000)
    a = asep_montecarlo(rq, p, cfg)
    b = asep_montecarlo(rq, p, cfg)
    assert a == b
