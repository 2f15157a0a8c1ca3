"""Backend selection: env flags, import-time validation, and numerical
agreement between the jitted and interpreted kernel paths.

Both paths run the same source, so agreement is checked tightly; the
only slack allowed is last-ulp libm differences.
"""
import json
import os
import subprocess
import sys

import pytest

from gstwdp import backend_name
from gstwdp._compat import USING_NUMBA

# evaluates every kernel family once and dumps the numbers as JSON
PROBE = """
import json
import numpy as np
from gstwdp import (ChannelParams, SimConfig, backend_name, envelope_cdf,
                    envelope_pdf, mgf, moment, sample_envelope,
                    tj_coefficient)
from gstwdp.specfun import bessel_i_int, bessel_k, hyp1f2, tricomi_u

p = ChannelParams(12.0, 0.7, 2.5, 1.3)
xs = np.array([0.3, 0.9, 1.7])
doc = {
    "backend": backend_name(),
    "pdf": [float(v) for v in envelope_pdf(xs, p)],
    "cdf": [float(v) for v in envelope_cdf(xs, p)],
    "mgf": [float(mgf(s, p)) for s in (0.25, 2.0)],
    "mom": [moment(2.0, p), moment(4.0, p)],
    "tj": [tj_coefficient(j, 12.0, 0.7) for j in range(6)],
    "sf": [bessel_i_int(0, 1.0), bessel_k(0.5, 2.0),
           hyp1f2(1.0, 2.0, 3.0, 0.5), tricomi_u(2.0, 1.5, 7.0)],
    "draws": [float(v) for v in
              sample_envelope(p, SimConfig(seed=5, n_samples=8))],
}
print(json.dumps(doc))
"""


def _clean_env(**extra):
    env = {k: v for k, v in os.environ.items()
           if not k.startswith("GSTWDP_")}
    env.update(extra)
    return env


def _run_probe(**extra):
    res = subprocess.run([sys.executable, "-c", PROBE], text=True,
                         capture_output=True, env=_clean_env(**extra),
                         timeout=300)
    assert res.returncode == 0, res.stderr
    return json.loads(res.stdout)


@pytest.fixture(scope="module")
def probe_numpy():
    return _run_probe(GSTWDP_BACKEND="numpy")


@pytest.fixture(scope="module")
def probe_numba():
    return _run_probe(GSTWDP_BACKEND="numba")


def test_in_process_backend_is_consistent():
    assert backend_name() == ("numba" if USING_NUMBA else "numpy")


def test_env_flag_forces_numpy(probe_numpy):
    assert probe_numpy["backend"] == "numpy"


def test_disable_flag_forces_numpy():
    doc = _run_probe(GSTWDP_DISABLE_NUMBA="1")
    assert doc["backend"] == "numpy"


def test_env_flag_forces_numba(probe_numba):
    assert probe_numba["backend"] == "numba"


def test_unknown_backend_rejected_at_import():
    res = subprocess.run([sys.executable, "-c", "import gstwdp"],
                         text=True, capture_output=True,
                         env=_clean_env(GSTWDP_BACKEND="gpu"), timeout=120)
    assert res.returncode != 0
    assert "GSTWDP_BACKEND" in res.stderr


def test_backends_agree_numerically(probe_numpy, probe_numba):
    # series-valued outputs: a last-ulp libm difference can move the
    # truncation point by one term, so agreement is bounded by the
    # policy's rel_tol (1e-10), not machine eps
    tol = {"pdf": 1e-9, "cdf": 1e-9, "mgf": 1e-9, "mom": 1e-9,
           "tj": 1e-12, "sf": 1e-12}
    for key, rel in tol.items():
        a, b = probe_numpy[key], probe_numba[key]
        assert len(a) == len(b)
        for va, vb in zip(a, b):
            assert va == pytest.approx(vb, rel=rel, abs=1e-300), key


def test_sampling_is_backend_independent(probe_numpy, probe_numba):
    # the draw path is plain generator arithmetic, so bit equality holds
    assert probe_numpy["draws"] == probe_numba["draws"]
