"""Gamma-shadowed two-ray-plus-diffuse fading: statistics, bounds,
simulation and fitting."""

from ._compat import backend_name
from .model import (
    ChannelParams,
    SpecularDecomposition,
    LognormalShadow,
    SeriesPolicy,
    SeriesConvergenceError,
    tj_coefficient,
    twdp_conditional_pdf,
    envelope_pdf,
    envelope_cdf,
    snr_pdf,
    snr_cdf,
    mgf,
    moment,
    match_lognormal,
    delta_gamma_convert,
    decompose,
)
from .oracle import (
    QuadPolicy,
    OracleError,
    tj_integral,
    mixture_pdf,
    cdf_by_integration,
    mgf_by_laplace,
    asep_by_quadrature,
)
from .perf import RqamSpec, conditional_sep, asep_chernoff, asep_chiani
from .montecarlo import (
    SimConfig,
    EmpiricalCdf,
    sample_envelope,
    empirical_cdf,
    asep_montecarlo,
)
from .fitting import FitConfig, FitResult, FitError, ks_error, fit

__version__ = "0.1.0"

__all__ = [
    "ChannelParams",
    "SpecularDecomposition",
    "LognormalShadow",
    "SeriesPolicy",
    "SeriesConvergenceError",
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
    "QuadPolicy",
    "OracleError",
    "tj_integral",
    "mixture_pdf",
    "cdf_by_integration",
    "mgf_by_laplace",
    "asep_by_quadrature",
    "RqamSpec",
    "conditional_sep",
    "asep_chernoff",
    "asep_chiani",
    "SimConfig",
    "EmpiricalCdf",
    "sample_envelope",
    "empirical_cdf",
    "asep_montecarlo",
    "FitConfig",
    "FitResult",
    "FitError",
    "ks_error",
    "fit",
    "backend_name",
    "__version__",
]
