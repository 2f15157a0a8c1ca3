"""Monte-Carlo simulation of the composite channel.

The generator draws, in a fixed documented order per batch: the gamma
local mean power, two uniform ray phases, then the two diffuse normal
components.  Identical seed and batch size reproduce the identical
sample stream; the batch size participates in the stream layout, so it
must stay fixed when bit-exact reproducibility across runs matters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import ChannelParams
from .perf import RqamSpec, conditional_sep

__all__ = [
    "SimConfig",
    "EmpiricalCdf",
    "sample_envelope",
    "empirical_cdf",
    "asep_montecarlo",
]


@dataclass(frozen=True)
class SimConfig:
    """Simulation size, seed and streaming batch size."""

    seed: int
    n_samples: int = 100_000
    batch: int = 1_000_000

    def __post_init__(self) -> None:
        if int(self.seed) != self.seed or self.seed < 0:
            raise ValueError("seed must be a non-negative integer")
        if self.n_samples < 1:
            raise ValueError("n_samples must be positive")
        if self.batch < 1:
            raise ValueError("batch must be positive")
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "n_samples", int(self.n_samples))
        object.__setattr__(self, "batch", int(self.batch))


@dataclass(frozen=True)
class EmpiricalCdf:
    """Sorted support points with right-continuous step probabilities.

    Covers both rank-based sample functions (probs i/n) and externally
    digitized distribution curves (arbitrary increasing step heights).
    """

    values: np.ndarray   # ascending
    probs: np.ndarray    # distribution value at and beyond values[i]

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=float)
        p = np.asarray(self.probs, dtype=float)
        if v.ndim != 1 or v.shape[0] == 0 or v.shape != p.shape:
            raise ValueError(
                "values and probs must be matching non-empty 1-d arrays")
        if not (np.all(np.isfinite(v)) and np.all(np.isfinite(p))):
            raise ValueError("values and probs must be finite")
        if np.any(np.diff(v) < 0.0):
            raise ValueError("values must be non-decreasing")
        if p[0] <= 0.0 or p[-1] > 1.0 or np.any(np.diff(p) <= 0.0):
            raise ValueError("probs must be strictly increasing in (0, 1]")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "probs", p)

    def evaluate(self, x) -> np.ndarray:
        """Step-function value at x (scalar or array), 0 below support."""
        xs = np.asarray(x, dtype=float)
        idx = np.searchsorted(self.values, xs, side="right")
        steps = np.concatenate(([0.0], self.probs))
        return steps[idx]


def sample_envelope(params: ChannelParams, sim: SimConfig) -> np.ndarray:
    """Draw envelope samples of the composite channel.

    Per sample: local mean power w ~ gamma(shape, mean mean_power), two
    independent uniform phases, complex diffuse noise at per-dimension
    variance w/(2(K+1)); the envelope is the modulus of the ray sum.

    One child generator per variate role, each consumed in sample order,
    so the stream depends only on (seed, n_samples): the batch size is a
    memory knob, not part of the randomness contract.
    """
    roles = np.random.SeedSequence(sim.seed).spawn(5)
    r_w, r_p1, r_p2, r_re, r_im = (
        np.random.Generator(np.random.PCG64(s)) for s in roles)
    k = params.k_factor
    g = params.gamma_ratio
    m = params.shadow_shape
    om = params.mean_power
    out = np.empty(sim.n_samples)
    done = 0
    while done < sim.n_samples:
        nb = min(sim.batch, sim.n_samples - done)
        w = r_w.gamma(shape=m, scale=om / m, size=nb)
        phi1 = r_p1.uniform(0.0, 2.0 * math.pi, size=nb)
        phi2 = r_p2.uniform(0.0, 2.0 * math.pi, size=nb)
        n_re = r_re.standard_normal(nb)
        n_im = r_im.standard_normal(nb)
        sig = np.sqrt(w / (2.0 * (k + 1.0)))
        v1 = np.sqrt(w * k / ((k + 1.0) * (1.0 + g * g)))
        v2 = g * v1
        re = v1 * np.cos(phi1) + v2 * np.cos(phi2) + sig * n_re
        im = v1 * np.sin(phi1) + v2 * np.sin(phi2) + sig * n_im
        out[done:done + nb] = np.hypot(re, im)
        done += nb
    return out


def empirical_cdf(samples: np.ndarray) -> EmpiricalCdf:
    """Build the empirical distribution function of a sample set."""
    s = np.asarray(samples, dtype=float)
    if s.ndim != 1 or s.shape[0] == 0:
        raise ValueError("samples must be a non-empty 1-d array")
    if not np.all(np.isfinite(s)):
        raise ValueError("samples must be finite")
    v = np.sort(s)
    n = v.shape[0]
    return EmpiricalCdf(values=v, probs=np.arange(1, n + 1) / n)


def asep_montecarlo(rqam: RqamSpec, params: ChannelParams,
                    sim: SimConfig):
    """Monte-Carlo average symbol error probability and its standard
    error, by averaging the exact conditional error rate over sampled
    SNRs (the sampled envelope squared, in the normalized units where
    the scale slot is both the mean power and the average SNR)."""
    r = sample_envelope(params, sim)
    snr = r * r
    sep = conditional_sep(snr, rqam, variant="exact")
    est = float(np.mean(sep))
    stderr = float(np.std(sep, ddof=1) / math.sqrt(sep.shape[0]))
    return est, stderr
