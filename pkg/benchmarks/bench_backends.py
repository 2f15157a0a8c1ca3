#!/usr/bin/env python3
"""Time the jitted kernel backend against the interpreted fallback.

Run with no arguments: the script re-executes itself once per backend
(GSTWDP_BACKEND=numba, then =numpy), collects per-workload timings, and
prints a side-by-side table with speedups.  First-call time is reported
separately so compilation cost is visible instead of polluting the
steady-state numbers.

    python3 benchmarks/bench_backends.py
    python3 benchmarks/bench_backends.py --repeat 7 --json
"""

import argparse
import json
import os
import subprocess
import sys
import time


def _workloads():
    import numpy as np
    from gstwdp import (ChannelParams, envelope_cdf, envelope_pdf, mgf,
                        RqamSpec, asep_chiani, tj_coefficient)
    from gstwdp.specfun import bessel_k, hyp1f2, tricomi_u

    params = ChannelParams(15.0, 0.9, 5.0, 1.0)
    xs = np.linspace(0.01, 3.5, 2000)
    xc = np.linspace(0.01, 3.5, 500)
    svals = np.logspace(-2.0, 2.0, 100)
    rqam = RqamSpec(4, 2, 1.0)
    dbs = np.arange(0.0, 30.1, 1.0)

    def curve():
        for db in dbs:
            asep_chiani(rqam, ChannelParams(15.0, 0.9, 5.0,
                                            10.0 ** (db / 10.0)))

    return [
        ("pdf grid (2000 pts)", lambda: envelope_pdf(xs, params)),
        ("cdf grid (500 pts)", lambda: envelope_cdf(xc, params)),
        ("mgf sweep (100 pts)",
         lambda: [mgf(float(s), params) for s in svals]),
        ("ray coefficients (j<=40)",
         lambda: [tj_coefficient(j, 15.0, 0.9) for j in range(41)]),
        ("bessel-k ladder (500 calls)",
         lambda: [bessel_k(2.7, 0.3 + 0.01 * i) for i in range(500)]),
        ("hypergeometric 1f2 (500 calls)",
         lambda: [hyp1f2(1.5, 2.5, 3.5, 0.02 * i) for i in range(500)]),
        ("tricomi u (100 calls)",
         lambda: [tricomi_u(2.5, 1.5, 1.0 + 0.5 * i) for i in range(100)]),
        ("error-rate curve (31 pts)", curve),
    ]


def run_worker(repeat):
    from gstwdp import backend_name
    out = {"backend": backend_name(), "first": {}, "best": {}}
    for name, fn in _workloads():
        t0 = time.perf_counter()
        fn()
        out["first"][name] = time.perf_counter() - t0
        best = float("inf")
        for _ in range(repeat):
            t0 = time.perf_counter()
            fn()
            best = min(best, time.perf_counter() - t0)
        out["best"][name] = best
    return out


def spawn(backend, repeat):
    env = {k: v for k, v in os.environ.items()
           if not k.startswith("GSTWDP_")}
    env["GSTWDP_BACKEND"] = backend
    res = subprocess.run(
        [sys.executable, os.path.abspath(__file__), "--worker",
         "--repeat", str(repeat)],
        capture_output=True, text=True, env=env)
    if res.returncode != 0:
        sys.stderr.write(res.stderr)
        raise SystemExit("worker for backend %r failed" % backend)
    return json.loads(res.stdout)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5,
                    help="timed repetitions per workload (best is kept)")
    ap.add_argument("--json", action="store_true",
                    help="emit raw results as JSON instead of a table")
    ap.add_argument("--worker", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args(argv)

    if args.worker:
        json.dump(run_worker(args.repeat), sys.stdout)
        return 0

    jitted = spawn("numba", args.repeat)
    plain = spawn("numpy", args.repeat)
    if args.json:
        json.dump({"numba": jitted, "numpy": plain}, sys.stdout, indent=2)
        print()
        return 0

    width = max(len(n) for n in plain["best"]) + 2
    print("%-*s %12s %12s %9s" % (width, "workload", "numpy [ms]",
                                  "numba [ms]", "speedup"))
    for name in plain["best"]:
        a = plain["best"][name] * 1e3
        b = jitted["best"][name] * 1e3
        print("%-*s %12.2f %12.2f %8.1fx" % (width, name, a, b, a / b))
    comp = sum(jitted["first"].values()) - sum(jitted["best"].values())
    print("\nnumba first-call overhead (compile/cache load): %.2f s" % comp)
    return 0


if __name__ == "__main__":
    sys.exit(main())
