"""Rectangular-QAM error rates: exact conditional, two closed-form
transform assemblies, and their cross-check paths."""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gstwdp import (ChannelParams, RqamSpec, SimConfig, asep_chernoff,
                    asep_chiani, asep_montecarlo, conditional_sep, oracle)
from gstwdp.perf import _asep_from_u_series

# frozen: 2 Q(2) - Q(2)^2 from the erfc continued fraction
SEP_2X2_AT_4 = 0.04498269539269885
# frozen: quadrature of the conditional rate with the matching surrogate
# tail against the SNR density
CHERNOFF_4X2_K10_G01_M5_15DB = 0.06392693967062998
CHIANI_4X2_K15_G09_M5_20DB = 0.046521971604266354


def rel(a, b):
    return abs(a - b) / abs(b)


# ---- constellation geometry ----

def test_rqam_derived_quantities():
    rq = RqamSpec(4, 2, 1.0)
    assert rq.p_i == pytest.approx(0.75)
    assert rq.p_q == pytest.approx(0.5)
    assert rq.a_q == pytest.approx(rq.beta * rq.a_i, rel=1e-15)
    # unit average symbol energy normalization
    assert rq.a_i == pytest.approx(math.sqrt(6.0 / (15.0 + 3.0)),
                                   rel=1e-14)


def test_rqam_validation():
    with pytest.raises(ValueError):
        RqamSpec(1, 2)
    with pytest.raises(ValueError):
        RqamSpec(4, 2, beta=0.0)
    with pytest.raises(ValueError):
        RqamSpec(4, 2, beta=-1.0)


# ---- conditional error rate ----

def test_conditional_sep_at_zero_snr():
    rq = RqamSpec(4, 2, 1.0)
    want = rq.p_i + rq.p_q - rq.p_i * rq.p_q
    assert float(conditional_sep(0.0, rq)) == pytest.approx(want, rel=1e-14)
    assert float(conditional_sep(0.0, rq, "chernoff")) == \
        pytest.approx(want, rel=1e-14)
    # the six-term surrogate starts at 1/3 instead of 1/2
    assert float(conditional_sep(0.0, rq, "chiani")) == \
        pytest.approx(2.0 / 3.0 * want, rel=1e-14)


def test_conditional_sep_square_case_frozen():
    rq = RqamSpec(2, 2, 1.0)
    assert rel(float(conditional_sep(4.0, rq)), SEP_2X2_AT_4) < 1e-12


def test_conditional_sep_vectorized_and_bounded():
    rq = RqamSpec(4, 2, 0.8)
    gs = np.linspace(0.0, 40.0, 30)
    vals = conditional_sep(gs, rq)
    assert vals.shape == gs.shape
    assert np.all((vals >= 0.0) & (vals <= 1.0))
    assert np.all(np.diff(vals) <= 0.0)


def test_conditional_sep_rejects_unknown_variant():
    with pytest.raises(ValueError):
        conditional_sep(1.0, RqamSpec(2, 2), "laplace")


@settings(max_examples=40, deadline=None)
@given(g=st.floats(0.0, 60.0))
def test_conditional_surrogates_order(g):
    rq = RqamSpec(4, 2, 1.0)
    ch = float(conditional_sep(g, rq, "chernoff"))
    ci = float(conditional_sep(g, rq, "chiani"))
    assert ch >= ci - 1e-15


# ---- transform-assembled average error rates ----

def test_asep_small_snr_limits():
    rq = RqamSpec(4, 2, 1.0)
    base = rq.p_i + rq.p_q - rq.p_i * rq.p_q
    p = ChannelParams(10.0, 0.5, 2.0, 1e-6)
    assert asep_chernoff(rq, p) == pytest.approx(base, abs=1e-3)
    assert asep_chiani(rq, p) == pytest.approx(2.0 / 3.0 * base, abs=1e-3)


def test_asep_chernoff_frozen_point():
    rq = RqamSpec(4, 2, 1.0)
    p = ChannelParams(10.0, 0.1, 5.0, 10.0 ** 1.5)
    assert rel(asep_chernoff(rq, p), CHERNOFF_4X2_K10_G01_M5_15DB) < 1e-9


def test_asep_chiani_frozen_point():
    rq = RqamSpec(4, 2, 1.0)
    p = ChannelParams(15.0, 0.9, 5.0, 100.0)
    assert rel(asep_chiani(rq, p), CHIANI_4X2_K15_G09_M5_20DB) < 1e-9


def test_asep_matches_term_by_term_assembly():
    rq = RqamSpec(4, 2, 1.0)
    for k, g, m, g0 in ((10.0, 0.1, 5.0, 10.0), (15.0, 0.9, 5.0, 100.0),
                        (2.0, 0.5, 1.0, 31.6), (0.0, 0.0, 0.8, 3.0)):
        p = ChannelParams(k, g, m, g0)
        assert rel(asep_chernoff(rq, p),
                   _asep_from_u_series(rq, p, "chernoff")) < 1e-10
        assert rel(asep_chiani(rq, p),
                   _asep_from_u_series(rq, p, "chiani")) < 1e-10


def test_asep_chernoff_dominates_chiani():
    rq = RqamSpec(4, 2, 1.0)
    for k in (2.0, 10.0, 15.0):
        for g in (0.1, 0.9):
            for db in (0.0, 9.0, 18.0, 27.0):
                p = ChannelParams(k, g, 5.0, 10.0 ** (db / 10.0))
                assert asep_chernoff(rq, p) >= asep_chiani(rq, p), (k, g, db)


def test_asep_monotone_in_mean_snr():
    rq = RqamSpec(4, 2, 1.0)
    prev_ch = prev_ci = 2.0
    for db in np.arange(0.0, 30.1, 3.0):
        p = ChannelParams(10.0, 0.5, 5.0, 10.0 ** (db / 10.0))
        ch, ci = asep_chernoff(rq, p), asep_chiani(rq, p)
        assert ch < prev_ch and ci < prev_ci
        prev_ch, prev_ci = ch, ci


def test_asep_chernoff_upper_bounds_simulation():
    rq = RqamSpec(4, 2, 1.0)
    p = ChannelParams(10.0, 0.1, 5.0, 10.0)
    est, se = asep_montecarlo(rq, p, SimConfig(seed=31, n_samples=100_000))
    assert asep_chernoff(rq, p) >= est - 3.0 * se


def test_asep_chiani_tracks_exact_under_heavy_fading():
    # strong diffuse mix at moderate SNR: the surrogate hugs the exact
    # rate to a few percent
    rq = RqamSpec(4, 2, 1.0)
    p = ChannelParams(10.0, 0.9, 5.0, 10.0 ** 1.2)
    want = oracle.asep_by_quadrature(rq, p)
    assert rel(asep_chiani(rq, p), want) < 0.05


def test_behavioral_ray_strength_reversal_at_25db():
    # more specular power helps when the rays are unequal, hurts when
    # the two rays are nearly equal and cancel
    g0 = 10.0 ** 2.5
    rq = RqamSpec(4, 2, 1.0)
    lo = asep_chiani(rq, ChannelParams(2.0, 0.1, 5.0, g0))
    hi = asep_chiani(rq, ChannelParams(10.0, 0.1, 5.0, g0))
    assert hi < lo
    lo = asep_chiani(rq, ChannelParams(2.0, 0.9, 5.0, g0))
    hi = asep_chiani(rq, ChannelParams(10.0, 0.9, 5.0, g0))
    assert hi > lo
