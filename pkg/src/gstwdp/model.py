"""Closed-form statistics of the gamma-shadowed two-ray-plus-diffuse channel.

The multipath envelope conditioned on its local mean power follows the
two-wave-with-diffuse-power law (two specular rays of amplitude ratio
``gamma_ratio`` riding on a complex-Gaussian diffuse floor, specular to
diffuse power ratio ``k_factor``); the local mean power itself is gamma
distributed with shape ``shadow_shape`` around ``mean_power``.  Averaging
in closed form yields envelope/SNR densities built from Bessel-K series,
distribution functions built from 1F2 series, and a Laplace transform
built from Tricomi-U series.  All series share one family of mixture
coefficients t_j and one truncation policy.

Evaluation notes
----------------
* Every series is assembled in log space (terms are positive), so large
  shape parameters and far tails neither overflow nor underflow.
* The distribution function switches representation: the two-branch 1F2
  form for z = (1+K) * m * x^2 / mean_power <= 40, and for larger z the
  mathematically equivalent complement built from the exact finite ladder
  int_U^inf u^{m+j} K_{1+j-m}(u) du = sum_i c_i U^{m+j-i} K_{j-m-i}(U)
  with c_0 = 1, c_{i+1} = 2(j-i) c_i, which has no cancellation and no
  integer-m poles.  The 1F2 branch amplifies rounding by ~e^{2 sqrt(z)},
  which bounds the switch point.
* Near-integer shadow shapes hit removable poles of the 1F2 branch; they
  are handled by averaging evaluations at m -+ 1e-4 (documented accuracy
  ~1e-6 there).  The complement branch needs no shift but shares it for
  uniformity of the averaged result.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._compat import maybe_njit
from .specfun import (
    _bessel_i_int_kernel,
    _bessel_k_ln_orders,
    _hyp1f2_kernel,
    _tricomi_u_ln_kernel,
)

__all__ = [
    "ChannelParams",
    "SpecularDecomposition",
    "LognormalShadow",
    "SeriesPolicy",
    "tj_coefficient",
    "twdp_conditional_pdf",
    "envelope_pdf",
    "envelope_cdf",
    "snr_pdf",
    "snr_cdf",
    "mgf",
    "moment",
    "match_lognormal",
    "delta_gamma_convert",
    "decompose",
]

_LN2 = 0.6931471805599453
_TJ_CLOSED_MAX = 60      # closed double-sum below, periodic trapezoid above
_CDF_Z_SWITCH = 40.0     # 1F2 branch below, complement ladder above
_CDF_Z_SWITCH_INT = 8.0  # tighter switch when the shape sits on a pole
_CDF_TINY = 1e-6         # complement loses relative accuracy below this
_M_POLE_EPS = 1e-4       # shift for near-integer shadow shapes


# ==== parameter containers ====

@dataclass(frozen=True)
class ChannelParams:
    """Composite channel parameter set.

    ``mean_power`` is the single scale slot: envelope statistics read it
    as the shadowed mean power, SNR statistics read the same slot as the
    average SNR (the two are related by a fixed receiver constant that
    cancels out of every normalized quantity).
    """

    k_factor: float          # specular-to-diffuse power ratio, >= 0
    gamma_ratio: float       # amplitude ratio of the two specular rays, in [0, 1]
    shadow_shape: float      # gamma shadowing shape, > 0
    mean_power: float = 1.0  # shadowed mean power / average SNR, > 0

    def __post_init__(self) -> None:
        for name in ("k_factor", "gamma_ratio", "shadow_shape", "mean_power"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v)):
                raise ValueError("%s must be finite, got %r" % (name, v))
            object.__setattr__(self, name, float(v))
        if self.k_factor < 0.0:
            raise ValueError("k_factor must be >= 0")
        if not 0.0 <= self.gamma_ratio <= 1.0:
            raise ValueError("gamma_ratio must lie in [0, 1]")
        if self.shadow_shape <= 0.0:
            raise ValueError("shadow_shape must be > 0")
        if self.mean_power <= 0.0:
            raise ValueError("mean_power must be > 0")

    @property
    def mean_snr(self) -> float:
        """The scale slot read as the average SNR."""
        return self.mean_power

    @classmethod
    def with_mean_snr(cls, k_factor: float, gamma_ratio: float,
                      shadow_shape: float, mean_snr: float) -> "ChannelParams":
        return cls(k_factor, gamma_ratio, shadow_shape, mean_snr)


@dataclass(frozen=True)
class SpecularDecomposition:
    """Physical components at a given local mean power.

    v1, v2 are the specular ray amplitudes (v1 >= v2 >= 0), sigma2 the
    per-dimension diffuse variance; total power = v1^2 + v2^2 + 2 sigma2.
    """

    v1: float
    v2: float
    sigma2: float

    @property
    def omega(self) -> float:
        """Total local mean power carried by the three components."""
        return self.v1 * self.v1 + self.v2 * self.v2 + 2.0 * self.sigma2


@dataclass(frozen=True)
class LognormalShadow:
    """Lognormal shadowing description to be moment-matched.

    ``sigma`` is the standard deviation of the natural log of the local
    mean power; ``median_power`` its median (area mean).
    """

    sigma: float
    median_power: float = 1.0

    def __post_init__(self) -> None:
        if not self.sigma > 0.0:
            raise ValueError("sigma must be > 0")
        if not self.median_power > 0.0:
            raise ValueError("median_power must be > 0")


@dataclass(frozen=True)
class SeriesPolicy:
    """Truncation policy for the mixture series.

    rel_tol also selects how far the distribution function chases deep
    left tails: below 1e-6 the double-precision complement only bounds the
    value, and an arbitrary-precision rescue runs when rel_tol <= 1e-9.
    Coarser policies keep the cheap bound, trading tail resolution for
    speed (the fitting objective floors tail mismatch anyway).
    """

    rel_tol: float = 1e-10  # relative truncation target
    max_j: int = 200        # hard cap on the mixture index

    def __post_init__(self) -> None:
        if not (0.0 < self.rel_tol < 1.0):
            raise ValueError("rel_tol must lie in (0, 1)")
        if self.max_j < 1:
            raise ValueError("max_j must be positive")


DEFAULT_SERIES_POLICY = SeriesPolicy()


class SeriesConvergenceError(RuntimeError):
    """The mixture series hit max_j without meeting the truncation target."""


# ==== mixture coefficients t_j ====

@maybe_njit(cache=True)
def _scaled_i_fill(a: float, out: np.ndarray) -> None:
    """out[n] = e^{-a} I_n(a) for a >= 0 (bounded by 1, no overflow)."""
    n_max = out.shape[0]
    if a == 0.0:
        out[0] = 1.0
        for n in range(1, n_max):
            out[n] = 0.0
        return
    q = 0.25 * a * a
    for n in range(n_max):
        t = math.exp(n * math.log(0.5 * a) - math.lgamma(n + 1.0) - a)
        s = t
        k = 0
        while k < 3000:
            t *= q / ((k + 1.0) * (n + k + 1.0))
            s += t
            if t < s * 1e-17:
                break
            k += 1
        out[n] = s


@maybe_njit(cache=True)
def _ln_tj_trapz(a: float, delta: float, j: int) -> float:
    """log t_j via the periodic integral, evaluated in log space.

    t_j = (1/2 pi) int_0^{2 pi} e^{-a cos alpha} (1 + delta cos alpha)^j
    d alpha; the integrand is even, so [0, pi] is doubled.  Trapezoid on a
    periodic analytic integrand converges spectrally; panels double until
    the log value settles.
    """
    prev = math.nan
    n = 64
    while n <= 65536:
        h = math.pi / n
        m_ln = -math.inf
        # first sweep: locate the max of the log integrand
        for i in range(n + 1):
            cosa = math.cos(h * i)
            base = 1.0 + delta * cosa
            if base <= 0.0:
                continue
            v = -a * cosa + j * math.log(base)
            if v > m_ln:
                m_ln = v
        s = 0.0
        for i in range(n + 1):
            cosa = math.cos(h * i)
            base = 1.0 + delta * cosa
            if base <= 0.0:
                continue
            v = -a * cosa + j * math.log(base) - m_ln
            w = 0.5 if (i == 0 or i == n) else 1.0
            s += w * math.exp(v)
        val = m_ln + math.log(s * h / math.pi)
        if not math.isnan(prev) and abs(val - prev) < 1e-13 * max(1.0, abs(val)):
            return val
        prev = val
        n *= 2
    return prev


@maybe_njit(cache=True)
def _ln_tj_fill(k_factor: float, gamma_ratio: float, out: np.ndarray) -> None:
    """out[j] = log t_j for j = 0..len(out)-1.

    Closed double-sum over binomials and integer-order Bessel I for
    j <= 60 (Bessel values carried as e^{-a} I_n(a) so any k_factor stays
    in range), integral form above.
    """
    g = gamma_ratio
    delta = 2.0 * g / (1.0 + g * g)
    a = k_factor * delta
    rho = g / (1.0 + g * g)
    n_j = out.shape[0]
    lim = _TJ_CLOSED_MAX if n_j - 1 > _TJ_CLOSED_MAX else n_j - 1
    si = np.empty(lim + 1)
    _scaled_i_fill(a, si)
    cj = np.empty(lim + 1)   # binomial row C(j, k)
    cl = np.empty(lim + 1)   # binomial row C(k, l)
    for j in range(lim + 1):
        cj[0] = 1.0
        for k in range(1, j + 1):
            cj[k] = cj[k - 1] * (j - k + 1.0) / k
        s = 0.0
        abss = 0.0
        rk = 1.0
        for k in range(j + 1):
            cl[0] = 1.0
            for l in range(1, k + 1):
                cl[l] = cl[l - 1] * (k - l + 1.0) / l
            inner = 0.0
            for l in range(k + 1):
                idx = 2 * l - k
                if idx < 0:
                    idx = -idx
                inner += cl[l] * si[idx]
            sgn = -1.0 if k % 2 == 1 else 1.0
            t = cj[k] * sgn * rk * inner
            s += t
            abss += abs(t)
            rk *= rho
        # the k-sum alternates; once cancellation eats ~3 digits the
        # phase-average integral takes over for this and all larger j
        if s > 0.0 and abss <= 1e3 * s:
            out[j] = a + math.log(s)
        else:
            out[j] = _ln_tj_trapz(a, delta, j)
    for j in range(lim + 1, n_j):
        out[j] = _ln_tj_trapz(a, delta, j)


_TJ_CACHE: dict = {}


def _ln_tj_cached(k_factor: float, gamma_ratio: float, n: int) -> np.ndarray:
    key = (float(k_factor), float(gamma_ratio), int(n))
    hit = _TJ_CACHE.get(key)
    if hit is not None:
        return hit
    out = np.empty(n)
    _ln_tj_fill(float(k_factor), float(gamma_ratio), out)
    if len(_TJ_CACHE) > 4096:
        _TJ_CACHE.clear()
    _TJ_CACHE[key] = out
    return out


def tj_coefficient(j: int, k_factor: float, gamma_ratio: float) -> float:
    """Mixture coefficient t_j of the two-ray conditional series."""
    j = int(j)
    if j < 0:
        raise ValueError("j must be >= 0")
    if k_factor < 0.0:
        raise ValueError("k_factor must be >= 0")
    if not 0.0 <= gamma_ratio <= 1.0:
        raise ValueError("gamma_ratio must lie in [0, 1]")
    out = np.empty(j + 1)
    _ln_tj_fill(float(k_factor), float(gamma_ratio), out)
    return math.exp(out[j])


# ==== Bessel-K order table ====

@maybe_njit(cache=True)
def _kln_tm_m(m: float, x: float, n_t: int) -> np.ndarray:
    """Table of log(e^x K_{t-m}(x)) for t = 0..n_t-1.

    All orders differ by integers, so two upward ladders seeded at the
    +-fractional part cover the whole set.
    """
    mu = m % 1.0
    if mu > 0.5:
        mu -= 1.0
    maxa = m if m > (n_t - 1.0 - m) else (n_t - 1.0 - m)
    n_lad = int(maxa + 2.6)
    if n_lad < 2:
        n_lad = 2
    lad1 = np.empty(n_lad)
    lad2 = np.empty(n_lad)
    _bessel_k_ln_orders(mu, x, lad1)
    _bessel_k_ln_orders(-mu, x, lad2)
    out = np.empty(n_t)
    for t in range(n_t):
        av = abs(t - m)
        # exactly one of av -+ mu is an integer (both when 2 mu is); pick
        # the ladder whose slot lands closer to an integer index
        i1f = av - mu
        i1 = int(math.floor(i1f + 0.5))
        d1 = abs(i1f - i1)
        i2f = av + mu
        i2 = int(math.floor(i2f + 0.5))
        d2 = abs(i2f - i2)
        if (d1 <= d2 or not 0 <= i2 < n_lad) and 0 <= i1 < n_lad:
            out[t] = lad1[i1]
        else:
            out[t] = lad2[i2]
    return out


# ==== conditional (unshadowed) envelope density ====

@maybe_njit(cache=True)
def _twdp_pdf_kernel(x: float, omega: float, k_factor: float,
                     gamma_ratio: float, ln_tj: np.ndarray,
                     rel_tol: float) -> float:
    if x == 0.0:
        return 0.0
    kp1 = k_factor + 1.0
    y = x * x * kp1 / omega
    ln_pref = math.log(2.0 * kp1 * x / omega)
    delta = 2.0 * gamma_ratio / (1.0 + gamma_ratio * gamma_ratio)
    a = k_factor * delta
    # crude upper bound of the whole expression; far tails short-circuit
    ub = ln_pref - y - k_factor + a + 2.0 * math.sqrt(
        k_factor * y * (1.0 + delta))
    if ub < -745.0:
        return 0.0
    if k_factor == 0.0 or y == 0.0:
        return math.exp(ln_pref - y - k_factor + ln_tj[0])
    lky = math.log(k_factor * y)
    m_ln = -math.inf
    s = 0.0
    n_small = 0
    n_j = ln_tj.shape[0]
    ok = False
    for j in range(n_j):
        lt = j * lky + ln_tj[j] - 2.0 * math.lgamma(j + 1.0)
        if lt > m_ln:
            s = s * math.exp(m_ln - lt) + 1.0
            m_ln = lt
        else:
            s += math.exp(lt - m_ln)
        if lt - (m_ln + math.log(s)) < math.log(rel_tol):
            n_small += 1
            if n_small >= 3:
                ok = True
                break
        else:
            n_small = 0
    if not ok:
        return math.nan
    return math.exp(ln_pref - y - k_factor + m_ln + math.log(s))


def twdp_conditional_pdf(x, k_factor: float, gamma_ratio: float,
                         omega: float,
                         policy: SeriesPolicy = DEFAULT_SERIES_POLICY):
    """Two-ray-plus-diffuse envelope density at local mean power omega."""
    if omega <= 0.0:
        raise ValueError("omega must be > 0")
    if k_factor < 0.0:
        raise ValueError("k_factor must be >= 0")
    if not 0.0 <= gamma_ratio <= 1.0:
        raise ValueError("gamma_ratio must lie in [0, 1]")
    ln_tj = _ln_tj_cached(k_factor, gamma_ratio, policy.max_j + 1)
    xs = np.asarray(x, dtype=float)
    scalar = xs.ndim == 0
    xs1 = np.atleast_1d(xs)
    if np.any(xs1 < 0.0):
        raise ValueError("x must be >= 0")
    out = np.empty_like(xs1)
    for i in range(xs1.shape[0]):
        v = _twdp_pdf_kernel(float(xs1[i]), float(omega), float(k_factor),
                             float(gamma_ratio), ln_tj, policy.rel_tol)
        if math.isnan(v):
            raise SeriesConvergenceError(
                "conditional density series hit max_j=%d at x=%g"
                % (policy.max_j, xs1[i]))
        out[i] = v
    return float(out[0]) if scalar else out


# ==== composite envelope / SNR densities ====

@maybe_njit(cache=True)
def _gs_pdf_z_kernel(z: float, k_factor: float, m: float,
                     ln_tj: np.ndarray, lg_fact: np.ndarray,
                     half_off: float, rel_tol: float) -> float:
    """log of sum_j K^j t_j/(j!)^2 z^{(m+j+half_off)/2} K_{1+j-m}(2 sqrt z).

    half_off = 0 for the envelope density, -1 for the SNR density.
    Returns nan if the truncation target is never met.
    """
    u = 2.0 * math.sqrt(z)
    lnz = math.log(z)
    n_j = ln_tj.shape[0]
    kln = _kln_tm_m(m, u, n_j + 1)
    if k_factor == 0.0:
        return ((m + half_off) / 2.0) * lnz + kln[1] - u + ln_tj[0]
    # underflow short-circuit: mixture weights obey t_j <= 2^j e^K and the
    # order table is bounded by its max, so the whole sum is below
    # z^((m+half)/2) e^(kmax-u+K) I0(2 sqrt(2K sqrt z)).  Large z can push
    # the series peak past any j cap while the value itself is sub-denormal;
    # returning the bound keeps that case cheap and exact after exp().
    kmax = kln[0]
    for t in range(1, n_j + 1):
        if kln[t] > kmax:
            kmax = kln[t]
    ub = (0.5 * (m + half_off) * lnz + kmax - u + k_factor
          + 2.0 * math.sqrt(2.0 * k_factor * math.sqrt(z)))
    if ub < -800.0:
        return ub
    lnk = math.log(k_factor)
    m_ln = -math.inf
    s = 0.0
    n_small = 0
    for j in range(n_j):
        lt = (j * lnk + ln_tj[j] - 2.0 * lg_fact[j]
              + ((m + j + half_off) / 2.0) * lnz + kln[j + 1] - u)
        if lt > m_ln:
            s = s * math.exp(m_ln - lt) + 1.0
            m_ln = lt
        else:
            s += math.exp(lt - m_ln)
        if lt - (m_ln + math.log(s)) < math.log(rel_tol):
            n_small += 1
            if n_small >= 3:
                return m_ln + math.log(s)
        else:
            n_small = 0
    return math.nan


@maybe_njit(cache=True)
def _gs_pdf_many(zs: np.ndarray, k_factor: float, m: float,
                 ln_tj: np.ndarray, half_off: float, ln_pref: float,
                 rel_tol: float, out: np.ndarray) -> int:
    n_j = ln_tj.shape[0]
    lg_fact = np.empty(n_j)
    for j in range(n_j):
        lg_fact[j] = math.lgamma(j + 1.0)
    for i in range(zs.shape[0]):
        z = zs[i]
        if z <= 0.0:
            out[i] = 0.0
            continue
        v = _gs_pdf_z_kernel(z, k_factor, m, ln_tj, lg_fact, half_off,
                             rel_tol)
        if math.isnan(v):
            return i + 1
        t = ln_pref + v
        out[i] = math.exp(t) if t < 709.0 else math.inf
    return 0


def _pdf_common(xs, params: ChannelParams, policy: SeriesPolicy,
                snr_domain: bool):
    ln_tj = _ln_tj_cached(params.k_factor, params.gamma_ratio,
                          policy.max_j + 1)
    arr = np.asarray(xs, dtype=float)
    scalar = arr.ndim == 0
    a1 = np.atleast_1d(arr).astype(float)
    if np.any(a1 < 0.0):
        raise ValueError("abscissae must be >= 0")
    c = (params.k_factor + 1.0) * params.shadow_shape / params.mean_power
    m = params.shadow_shape
    if snr_domain:
        zs = c * a1
        half_off = -1.0
        ln_pref = (_LN2 + math.log(c) - params.k_factor - math.lgamma(m))
    else:
        zs = c * a1 * a1
        half_off = 0.0
        ln_pref = (2.0 * _LN2 + 0.5 * math.log(c) - params.k_factor
                   - math.lgamma(m))
    out = np.empty_like(a1)
    status = _gs_pdf_many(zs, params.k_factor, m, ln_tj, half_off,
                          ln_pref, policy.rel_tol, out)
    if status != 0:
        raise SeriesConvergenceError(
            "density series hit max_j=%d at abscissa %g"
            % (policy.max_j, a1[status - 1]))
    return float(out[0]) if scalar else out


def envelope_pdf(x, params: ChannelParams,
                 policy: SeriesPolicy = DEFAULT_SERIES_POLICY):
    """Composite envelope density; accepts a scalar or array of x >= 0."""
    return _pdf_common(x, params, policy, snr_domain=False)


def snr_pdf(g, params: ChannelParams,
            policy: SeriesPolicy = DEFAULT_SERIES_POLICY):
    """Composite instantaneous-SNR density; scalar or array of g >= 0."""
    return _pdf_common(g, params, policy, snr_domain=True)


# ==== composite distribution functions ====

@maybe_njit(cache=True)
def _signed_lgamma(x: float):
    """(log |Gamma(x)|, sign) for non-integer x (any sign)."""
    if x > 0.0:
        return math.lgamma(x), 1.0
    s = math.sin(math.pi * x)
    ln = math.log(math.pi / abs(s)) - math.lgamma(1.0 - x)
    return ln, (1.0 if s > 0.0 else -1.0)


@maybe_njit(cache=True)
def _gs_cdf_many(zs: np.ndarray, k_factor: float, m: float,
                 ln_tj: np.ndarray, rel_tol: float, out: np.ndarray,
                 need_hp: np.ndarray, z_switch: float) -> int:
    """Distribution function at z = (1+K) m x^2 / mean_power (or the SNR
    analogue).  Fills out[i]; marks need_hp[i] where the double-precision
    value has degraded relative accuracy (deep left tail beyond z_switch,
    where the complement ladder only bounds the result near zero).
    Returns 0 on success, i+1 if the series failed to settle at zs[i].
    """
    n_j = ln_tj.shape[0]
    lg_fact = np.empty(n_j)
    for j in range(n_j):
        lg_fact[j] = math.lgamma(j + 1.0)
    lgm = math.lgamma(m)
    lnrel = math.log(rel_tol)
    # per-j tables for the 1F2 branch (z-independent)
    sg1_ln = np.empty(n_j)
    sg1_s = np.empty(n_j)
    sg2_ln = np.empty(n_j)
    sg2_s = np.empty(n_j)
    for j in range(n_j):
        l1, s1 = _signed_lgamma(m - j - 1.0)
        sg1_ln[j] = l1
        sg1_s[j] = s1
        l2, s2 = _signed_lgamma(1.0 + j - m)
        sg2_ln[j] = l2
        sg2_s[j] = s2
    for i in range(zs.shape[0]):
        z = zs[i]
        if z <= 0.0:
            out[i] = 0.0
            continue
        if z <= z_switch:
            # two-branch 1F2 form, double-double accumulation over j
            lnz = math.log(z)
            s_hi = 0.0
            s_lo = 0.0
            big = 0.0
            n_small = 0
            done = False
            for j in range(n_j):
                f1, st1 = _hyp1f2_kernel(1.0 + j, 2.0 + j, 2.0 + j - m, z,
                                         1e-16, 700)
                f2, st2 = _hyp1f2_kernel(m, 1.0 + m, m - j, z, 1e-16, 700)
                if st1 != 0 or st2 != 0:
                    return i + 1
                e1 = sg1_ln[j] - lgm + (1.0 + j) * lnz - math.log(1.0 + j)
                e2 = sg2_ln[j] - lgm + m * lnz - math.log(m)
                if e1 > 680.0 or e2 > 680.0:
                    need_hp[i] = 1
                    done = True
                    break
                b1 = math.exp(e1) * f1
                b2 = math.exp(e2) * f2
                br = sg1_s[j] * b1 + sg2_s[j] * b2
                if k_factor == 0.0:
                    wj = 1.0 if j == 0 else 0.0
                else:
                    wj = math.exp(-k_factor + j * math.log(k_factor)
                                  + ln_tj[j] - 2.0 * lg_fact[j])
                term = wj * br
                mag = wj * (abs(b1) + abs(b2))
                if mag > big:
                    big = mag
                t = s_hi + term
                bb = t - s_hi
                s_lo += (s_hi - (t - bb)) + (term - bb)
                s_hi = t
                if k_factor == 0.0 and j == 0:
                    done = True
                    break
                if abs(term) < rel_tol * abs(s_hi):
                    n_small += 1
                    if n_small >= 3:
                        done = True
                        break
                else:
                    n_small = 0
            if need_hp[i] == 1:
                out[i] = math.nan
                continue
            if not done:
                return i + 1
            f = s_hi + s_lo
            if f < big * 1e-13:
                # the alternating pieces cancelled down to rounding noise;
                # report zero and let the caller decide whether to rescue
                out[i] = 0.0
                need_hp[i] = 1
                continue
            if f > 1.0:
                f = 1.0
            out[i] = f
        else:
            # complement ladder form
            u = 2.0 * math.sqrt(z)
            lnu = math.log(u)
            kln = _kln_tm_m(m, u, n_j + 1)
            tail = 0.0
            wsum = 0.0
            done = False
            for j in range(n_j):
                if k_factor == 0.0:
                    lnwj = 0.0 if j == 0 else -math.inf
                else:
                    lnwj = (-k_factor + j * math.log(k_factor) + ln_tj[j]
                            - lg_fact[j])
                wj = math.exp(lnwj)
                if wj >= rel_tol * tail / 256.0 or tail == 0.0:
                    base = -u - (m + j - 1.0) * _LN2 - lgm - lg_fact[j]
                    lnci = 0.0
                    qj = 0.0
                    for ii in range(j + 1):
                        lt = lnci + (m + j - ii) * lnu + kln[j - ii] + base
                        if lt > -745.0:
                            qj += math.exp(lt)
                        if ii < j:
                            lnci += math.log(2.0 * (j - ii))
                    if qj > 1.0:
                        qj = 1.0
                    tail += wj * qj
                wsum += wj
                # each ladder value is in (0, 1), so the unseen remainder is
                # bounded by the unseen weight; 1e-13 absorbs the rounding
                # plateau of the weight sum, which need not reach 1.0 exactly
                if 1.0 - wsum < rel_tol * tail + 1e-13:
                    done = True
                    break
                if wj < 0.5 * rel_tol * tail and j > 2.2 * k_factor + 10.0:
                    done = True
                    break
            if not done:
                return i + 1
            f = 1.0 - tail
            if f < 0.0:
                f = 0.0
            out[i] = f
            if f < _CDF_TINY:
                need_hp[i] = 1
    return 0


def _cdf_highprec(z: float, k_factor: float, gamma_ratio: float, m: float,
                  rel_tol: float, max_j: int) -> float:
    """Arbitrary-precision fallback for the two-branch form.

    Needed only where z is large and the value is a deep left tail; the
    working precision follows the e^{2 sqrt z} cancellation."""
    import mpmath as _mp

    digits = int(2.0 * math.sqrt(z) * 0.4343) + 40
    with _mp.workdps(digits):
        mm = _mp.mpf(m)
        if abs(m - round(m)) < 1e-8:
            # nudge off the removable integer poles; effect ~1e-28
            mm = _mp.mpf(round(m)) + _mp.mpf("1e-15")
        zz = _mp.mpf(z)
        kk = _mp.mpf(k_factor)
        gg = _mp.mpf(gamma_ratio)
        rho = gg / (1 + gg * gg)
        aa = 2 * kk * rho
        bi = [_mp.besseli(n, aa) for n in range(max_j + 1)]
        total = _mp.mpf(0)
        j = 0
        while j <= max_j:
            tj = _mp.mpf(0)
            for k in range(j + 1):
                inner = _mp.mpf(0)
                for l in range(k + 1):
                    inner += _mp.binomial(k, l) * bi[abs(2 * l - k)]
                tj += _mp.binomial(j, k) * (-rho) ** k * inner
            wj = _mp.e ** (-kk) * kk ** j * tj / _mp.factorial(j) ** 2
            br = (_mp.gamma(mm - j - 1) / (1 + j) * zz ** (1 + j)
                  * _mp.hyp1f2(1 + j, 2 + j, 2 + j - mm, zz)
                  + _mp.gamma(1 + j - mm) / mm * zz ** mm
                  * _mp.hyp1f2(mm, 1 + mm, mm - j, zz))
            term = wj * br / _mp.gamma(mm)
            total += term
            if j > 2 and abs(term) < abs(total) * _mp.mpf(rel_tol) * 0.01:
                break
            j += 1
        return min(max(float(total), 0.0), 1.0)


def _cdf_common(xs, params: ChannelParams, policy: SeriesPolicy,
                snr_domain: bool):
    arr = np.asarray(xs, dtype=float)
    scalar = arr.ndim == 0
    a1 = np.atleast_1d(arr).astype(float)
    if np.any(a1 < 0.0):
        raise ValueError("abscissae must be >= 0")
    m = params.shadow_shape
    c = (params.k_factor + 1.0) * m / params.mean_power
    zs = c * a1 if snr_domain else c * a1 * a1
    ln_tj = _ln_tj_cached(params.k_factor, params.gamma_ratio,
                          policy.max_j + 1)
    rnd = round(m)
    shift = (abs(m - rnd) < _M_POLE_EPS and rnd >= 1)
    out = np.empty_like(a1)
    need_hp = np.zeros(a1.shape[0], dtype=np.int64)
    if shift:
        # averaging the pole shift keeps the 1F2 branch finite, but its
        # rounding amplification grows with z, so hand off to the
        # (shift-insensitive) complement ladder much earlier
        out_lo = np.empty_like(a1)
        out_hi = np.empty_like(a1)
        nh1 = np.zeros_like(need_hp)
        nh2 = np.zeros_like(need_hp)
        st1 = _gs_cdf_many(zs, params.k_factor, rnd - _M_POLE_EPS, ln_tj,
                           policy.rel_tol, out_lo, nh1, _CDF_Z_SWITCH_INT)
        st2 = _gs_cdf_many(zs, params.k_factor, rnd + _M_POLE_EPS, ln_tj,
                           policy.rel_tol, out_hi, nh2, _CDF_Z_SWITCH_INT)
        status = st1 if st1 != 0 else st2
        out = 0.5 * (out_lo + out_hi)
        need_hp = nh1 | nh2
    else:
        status = _gs_cdf_many(zs, params.k_factor, m, ln_tj,
                              policy.rel_tol, out, need_hp, _CDF_Z_SWITCH)
    if status != 0:
        raise SeriesConvergenceError(
            "distribution series hit max_j=%d at abscissa %g"
            % (policy.max_j, a1[status - 1]))
    if np.any(need_hp != 0):
        # flagged entries hold a complement value that is only an absolute
        # bound near zero (or NaN when the 1F2 branch overflowed); rescue in
        # high precision only under tight policies, so coarse-tolerance
        # callers such as distribution fitting stay cheap
        rescue = policy.rel_tol <= 1e-9
        for i in np.nonzero(need_hp)[0]:
            if rescue or math.isnan(out[i]):
                out[i] = _cdf_highprec(float(zs[i]), params.k_factor,
                                       params.gamma_ratio, m,
                                       policy.rel_tol, policy.max_j)
    return float(out[0]) if scalar else out


def envelope_cdf(x, params: ChannelParams,
                 policy: SeriesPolicy = DEFAULT_SERIES_POLICY):
    """Composite envelope distribution function; scalar or array x >= 0."""
    return _cdf_common(x, params, policy, snr_domain=False)


def snr_cdf(g, params: ChannelParams,
            policy: SeriesPolicy = DEFAULT_SERIES_POLICY):
    """Composite SNR distribution function; scalar or array g >= 0."""
    return _cdf_common(g, params, policy, snr_domain=True)


# ==== Laplace transform (MGF of the SNR) ====

@maybe_njit(cache=True)
def _mgf_kernel(s: float, k_factor: float, m: float, gamma0: float,
                ln_tj: np.ndarray, rel_tol: float) -> float:
    w = (k_factor + 1.0) * m / (s * gamma0)
    lnw = math.log(w)
    n_j = ln_tj.shape[0]
    if k_factor == 0.0:
        uln, st = _tricomi_u_ln_kernel(m, m, w, rel_tol * 0.01)
        if st != 0:
            return math.nan
        return math.exp(m * lnw + uln)
    lnk = math.log(k_factor)
    acc = 0.0
    wsum = 0.0
    for j in range(n_j):
        lnwj = -k_factor + j * lnk + ln_tj[j] - math.lgamma(j + 1.0)
        wj = math.exp(lnwj)
        if wj >= rel_tol * acc / 256.0 or acc == 0.0:
            uln, st = _tricomi_u_ln_kernel(m, m - j, w, rel_tol * 0.01)
            if st != 0:
                return math.nan
            acc += wj * math.exp(m * lnw + uln)
        wsum += wj
        # per-branch transform values are in (0, 1], so the unseen remainder
        # is bounded by the unseen weight; 1e-13 absorbs the weight sum's
        # rounding plateau short of 1.0
        if 1.0 - wsum < rel_tol * acc + 1e-13:
            return acc
        if wj < 0.5 * rel_tol * acc and j > 2.2 * k_factor + 10.0:
            return acc
    return math.nan


def mgf(s, params: ChannelParams,
        policy: SeriesPolicy = DEFAULT_SERIES_POLICY):
    """Laplace transform E[exp(-s * snr)] of the instantaneous SNR.

    Scalar or array s > 0; values lie in (0, 1] and decrease in s.
    """
    arr = np.asarray(s, dtype=float)
    scalar = arr.ndim == 0
    a1 = np.atleast_1d(arr).astype(float)
    if np.any(a1 <= 0.0):
        raise ValueError("s must be > 0")
    ln_tj = _ln_tj_cached(params.k_factor, params.gamma_ratio,
                          policy.max_j + 1)
    out = np.empty_like(a1)
    for i in range(a1.shape[0]):
        v = _mgf_kernel(float(a1[i]), params.k_factor, params.shadow_shape,
                        params.mean_snr, ln_tj, policy.rel_tol)
        if math.isnan(v):
            raise SeriesConvergenceError(
                "transform series failed to settle at s=%g" % a1[i])
        out[i] = min(v, 1.0)
    return float(out[0]) if scalar else out


# ==== moments ====

@maybe_njit(cache=True)
def _moment_kernel(n: float, k_factor: float, m: float, omega_s: float,
                   ln_tj: np.ndarray, rel_tol: float) -> float:
    c = (k_factor + 1.0) * m / omega_s
    base = (-k_factor - math.lgamma(m) - 0.5 * n * math.log(c)
            + math.lgamma(m + 0.5 * n))
    if k_factor == 0.0:
        return math.exp(base + math.lgamma(1.0 + 0.5 * n) + ln_tj[0])
    lnk = math.log(k_factor)
    m_ln = -math.inf
    s = 0.0
    n_small = 0
    n_j = ln_tj.shape[0]
    for j in range(n_j):
        lt = (j * lnk + ln_tj[j] - 2.0 * math.lgamma(j + 1.0)
              + math.lgamma(1.0 + j + 0.5 * n))
        if lt > m_ln:
            s = s * math.exp(m_ln - lt) + 1.0
            m_ln = lt
        else:
            s += math.exp(lt - m_ln)
        if lt - (m_ln + math.log(s)) < math.log(rel_tol):
            n_small += 1
            if n_small >= 3:
                return math.exp(base + m_ln + math.log(s))
        else:
            n_small = 0
    return math.nan


def moment(n: float, params: ChannelParams,
           policy: SeriesPolicy = DEFAULT_SERIES_POLICY) -> float:
    """Raw envelope moment E[r^n]; needs n > -2 and n > -2 * shadow_shape."""
    n = float(n)
    if n <= -2.0 or n <= -2.0 * params.shadow_shape:
        raise ValueError(
            "moment order must exceed both -2 and -2 * shadow_shape")
    ln_tj = _ln_tj_cached(params.k_factor, params.gamma_ratio,
                          policy.max_j + 1)
    v = _moment_kernel(n, params.k_factor, params.shadow_shape,
                       params.mean_power, ln_tj, policy.rel_tol)
    if math.isnan(v):
        raise SeriesConvergenceError("moment series failed to settle")
    return v


# ==== conversions ====

def match_lognormal(shadow: LognormalShadow):
    """Gamma shadowing (shape, mean power) moment-matched to a lognormal."""
    s2 = shadow.sigma * shadow.sigma
    m = 1.0 / math.expm1(s2)
    omega_s = shadow.median_power * math.sqrt((m + 1.0) / m)
    return m, omega_s


def delta_gamma_convert(value: float, direction: str) -> float:
    """Convert between the two conventions for the specular amplitude mix.

    direction "to_delta": gamma_ratio -> 2 G/(1+G^2).
    direction "to_gamma": the inverse on [0, 1].
    """
    v = float(value)
    if direction == "to_delta":
        if not 0.0 <= v <= 1.0:
            raise ValueError("gamma_ratio must lie in [0, 1]")
        return 2.0 * v / (1.0 + v * v)
    if direction == "to_gamma":
        if not 0.0 <= v <= 1.0:
            raise ValueError("delta must lie in [0, 1]")
        # conjugate form of (1 - sqrt(1-v^2))/v: no cancellation near 0
        return v / (1.0 + math.sqrt(max(0.0, 1.0 - v * v)))
    raise ValueError("direction must be 'to_delta' or 'to_gamma'")


def decompose(params: ChannelParams,
              omega: float | None = None) -> SpecularDecomposition:
    """Ray amplitudes and diffuse variance at a given local mean power.

    ``omega`` defaults to the stored mean power; sampling code passes the
    per-realization shadowed value instead.
    """
    k = params.k_factor
    g = params.gamma_ratio
    om = params.mean_power if omega is None else float(omega)
    if not om > 0.0:
        raise ValueError("omega must be > 0")
    sigma2 = om / (2.0 * (k + 1.0))
    v1 = math.sqrt(om * k / ((k + 1.0) * (1.0 + g * g)))
    v2 = g * v1
    return SpecularDecomposition(v1=v1, v2=v2, sigma2=sigma2)
