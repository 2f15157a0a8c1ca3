"""Command-line front end: evaluation, sampling, error-rate curves,
fitting and oracle verification, emitting CSV/JSON for plotting.

Every file written is paired with a JSON manifest (same path plus
".manifest.json") that records the subcommand, the full parameter set,
the seed, the tool version and a timestamp, so any output can be
re-generated exactly.  SNR flags take dB; the single linear conversion
happens here and nowhere deeper.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass, asdict, field
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .model import (ChannelParams, SeriesPolicy, DEFAULT_SERIES_POLICY,
                    SeriesConvergenceError, envelope_pdf, envelope_cdf,
                    snr_pdf, snr_cdf, mgf, moment, tj_coefficient)
from .montecarlo import (SimConfig, EmpiricalCdf, sample_envelope,
                         empirical_cdf, asep_montecarlo)
from .oracle import OracleError
from .perf import RqamSpec, asep_chernoff, asep_chiani
from .fitting import FitConfig, FitError, fit

__all__ = [
    "RunManifest",
    "cmd_eval",
    "cmd_sample",
    "cmd_asep",
    "cmd_fit",
    "cmd_verify",
    "main",
]


@dataclass(frozen=True)
class RunManifest:
    """Reproducibility record written beside every output file."""

    subcommand: str
    parameters: dict
    seed: int | None
    version: str = __version__
    timestamp: str = field(
        default_factory=lambda: datetime.now(timezone.utc).isoformat())

    def write(self, out_path: str) -> str:
        path = out_path + ".manifest.json"
        with open(path, "w") as fh:
            json.dump(asdict(self), fh, indent=2, sort_keys=True)
            fh.write("\n")
        return path


def _policy() -> SeriesPolicy:
    """Series policy for CLI evaluations; env var overrides the term cap."""
    cap = os.environ.get("GSTWDP_MAX_TERMS")
    if cap is None:
        return DEFAULT_SERIES_POLICY
    return SeriesPolicy(rel_tol=DEFAULT_SERIES_POLICY.rel_tol,
                        max_j=int(cap))


def _parse_grid(spec: str) -> np.ndarray:
    """start:step:stop, endpoints included when stop lands on the grid."""
    parts = spec.split(":")
    if len(parts) != 3:
        raise ValueError("grid must be start:step:stop, got %r" % spec)
    start, step, stop = (float(t) for t in parts)
    if step <= 0.0:
        raise ValueError("grid step must be positive")
    if stop < start:
        raise ValueError("grid stop must not precede start")
    return np.arange(start, stop + 0.5 * step, step)


def _parse_values(spec: str) -> list:
    """Comma-separated float list; empty input is a usage error."""
    vals = [float(t) for t in spec.split(",") if t.strip() != ""]
    if not vals:
        raise ValueError("empty grid")
    return vals


def _write_csv(out, header, rows) -> None:
    lines = [",".join(header)]
    lines += [",".join(f"{v:.12g}" for v in row) for row in rows]
    text = "\n".join(lines) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w") as fh:
            fh.write(text)


def _channel_params(args) -> ChannelParams:
    return ChannelParams(args.K, args.gamma_ratio, args.m, args.omega)


def _add_shape_flags(sub, with_omega=True) -> None:
    sub.add_argument("--K", type=float, required=True,
                     help="specular-to-diffuse power ratio")
    sub.add_argument("--gamma-ratio", type=float, required=True,
                     help="second-to-first specular amplitude ratio in [0,1]")
    sub.add_argument("--m", type=float, required=True,
                     help="shadowing shape (severity decreases upward)")
    if with_omega:
        sub.add_argument("--omega", type=float, default=1.0,
                         help="mean power of the shadowed envelope")


def cmd_eval(args) -> int:
    params = _channel_params(args)
    grid = _parse_grid(args.x)
    pol = _policy()
    kind, domain = args.kind, args.domain
    if kind == "mgf" and domain != "snr":
        raise ValueError("mgf is defined on the snr domain")
    if kind == "pdf":
        fn = envelope_pdf if domain == "envelope" else snr_pdf
        vals = fn(grid, params, pol)
        header = ("x" if domain == "envelope" else "g", "pdf")
    elif kind == "cdf":
        fn = envelope_cdf if domain == "envelope" else snr_cdf
        vals = fn(grid, params, pol)
        header = ("x" if domain == "envelope" else "g", "cdf")
    elif kind == "mgf":
        vals = mgf(grid, params, pol)
        header = ("s", "mgf")
    else:  # moment: envelope order n directly, snr order n doubled
        orders = grid if domain == "envelope" else 2.0 * grid
        vals = np.array([moment(n, params, pol) for n in orders])
        header = ("order", "moment")
    _write_csv(args.out, header, zip(grid, vals))
    if args.out is not None:
        RunManifest("eval", {
            "kind": kind, "domain": domain, "K": args.K,
            "gamma_ratio": args.gamma_ratio, "m": args.m,
            "omega": args.omega, "x": args.x, "out": args.out,
            "max_terms": pol.max_j,
        }, seed=None).write(args.out)
    return 0


def cmd_sample(args) -> int:
    params = _channel_params(args)
    sim = SimConfig(seed=args.seed, n_samples=args.n)
    vals = sample_envelope(params, sim)
    _write_csv(args.out, ("amplitude",), ((v,) for v in vals))
    RunManifest("sample", {
        "K": args.K, "gamma_ratio": args.gamma_ratio, "m": args.m,
        "omega": args.omega, "n": args.n, "seed": args.seed,
        "out": args.out,
    }, seed=args.seed).write(args.out)
    return 0


def cmd_asep(args) -> int:
    rqam = RqamSpec(args.mi, args.mq, args.beta)
    dbs = _parse_grid(args.snr_db)
    pol = _policy()
    rows = []
    for db in dbs:
        snr = 10.0 ** (db / 10.0)   # the one dB-to-linear conversion
        params = ChannelParams(args.K, args.gamma_ratio, args.m, snr)
        if args.method == "chernoff":
            rows.append((db, asep_chernoff(rqam, params, pol)))
        elif args.method == "chiani":
            rows.append((db, asep_chiani(rqam, params, pol)))
        elif args.method == "quad":
            from .oracle import asep_by_quadrature
            rows.append((db, asep_by_quadrature(rqam, params,
                                                variant="exact")))
        else:   # mc: estimate plus standard error
            sim = SimConfig(seed=args.seed, n_samples=args.n_samples)
            est, se = asep_montecarlo(rqam, params, sim)
            rows.append((db, est, se))
    header = (("snr_db", "asep", "stderr") if args.method == "mc"
              else ("snr_db", "asep"))
    _write_csv(args.out, header, rows)
    if args.out is not None:
        RunManifest("asep", {
            "mi": args.mi, "mq": args.mq, "beta": args.beta,
            "K": args.K, "gamma_ratio": args.gamma_ratio, "m": args.m,
            "snr_db": args.snr_db, "method": args.method,
            "n_samples": args.n_samples, "out": args.out,
            "max_terms": pol.max_j,
        }, seed=args.seed if args.method == "mc" else None).write(args.out)
    return 0


def _read_empirical(path: str) -> EmpiricalCdf:
    """One column of amplitudes, or two columns (amplitude, CDF value).

    A non-numeric first row is treated as a header and skipped.
    """
    try:
        with open(path) as fh:
            first = fh.readline()
    except OSError as exc:
        raise ValueError("cannot read %s: %s" % (path, exc))
    skip = 0
    try:
        [float(t) for t in first.replace(",", " ").split()]
    except ValueError:
        skip = 1
    data = np.loadtxt(path, delimiter="," if "," in first else None,
                      skiprows=skip, ndmin=2)
    if data.shape[1] == 1:
        return empirical_cdf(data[:, 0])
    if data.shape[1] == 2:
        order = np.argsort(data[:, 0], kind="stable")
        return EmpiricalCdf(values=data[order, 0], probs=data[order, 1])
    raise ValueError("expected 1 or 2 columns, got %d" % data.shape[1])


def cmd_fit(args) -> int:
    emp = _read_empirical(args.input)
    cfg = FitConfig(floor=args.floor, coarse_per_axis=args.coarse_per_axis,
                    subsample=args.subsample,
                    max_refine_iter=args.max_refine_iter)
    res = fit(emp, cfg)
    p = res.params
    doc = {
        "params": {"k_factor": p.k_factor, "gamma_ratio": p.gamma_ratio,
                   "shadow_shape": p.shadow_shape,
                   "mean_power": p.mean_power},
        "error": res.error,
        "coarse_error": res.coarse_error,
        "n_points": res.n_points,
        "refined": res.refined,
        "grid_evals": res.grid_evals,
        "refine_evals": res.refine_evals,
        "refine_trace": list(res.refine_trace),
    }
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if args.out is None:
        sys.stdout.write(text)
    else:
        with open(args.out, "w") as fh:
            fh.write(text)
        RunManifest("fit", {
            "input": args.input, "floor": args.floor,
            "coarse_per_axis": args.coarse_per_axis,
            "subsample": args.subsample,
            "max_refine_iter": args.max_refine_iter, "out": args.out,
        }, seed=None).write(args.out)
    return 0


def _verify_specfun(args, report) -> float:
    from .oracle import tj_integral
    worst = 0.0
    for k in _parse_values(args.k_grid):
        for g in _parse_values(args.gamma_grid):
            dev = 0.0
            for j in range(0, 16):
                a = tj_coefficient(j, k, g)
                b = tj_integral(j, k, g)
                if b != 0.0:
                    dev = max(dev, abs(a - b) / abs(b))
            report.append((f"t_j K={k} gamma={g}", dev))
            worst = max(worst, dev)
    return worst


def _verify_model(args, report) -> float:
    from .oracle import mixture_pdf
    pol = _policy()
    xs = _parse_grid(args.x)
    worst = 0.0
    for k in _parse_values(args.k_grid):
        for g in _parse_values(args.gamma_grid):
            for m in _parse_values(args.m_grid):
                params = ChannelParams(k, g, m, 1.0)
                ours = envelope_pdf(xs, params, pol)
                dev = 0.0
                for x, v in zip(xs, ours):
                    ref = mixture_pdf(float(x), params)
                    if ref > 0.0:
                        dev = max(dev, abs(v - ref) / ref)
                report.append((f"pdf K={k} gamma={g} m={m}", dev))
                worst = max(worst, dev)
    return worst


def _verify_asep(args, report) -> float:
    from .oracle import asep_by_quadrature
    rqam = RqamSpec(args.mi, args.mq, args.beta)
    pol = _policy()
    worst = 0.0
    for k in _parse_values(args.k_grid):
        for g in _parse_values(args.gamma_grid):
            for m in _parse_values(args.m_grid):
                for db in _parse_grid(args.snr_db):
                    snr = 10.0 ** (db / 10.0)
                    params = ChannelParams(k, g, m, snr)
                    ex = asep_by_quadrature(rqam, params, variant="exact")
                    ci = asep_chiani(rqam, params, pol)
                    ch = asep_chernoff(rqam, params, pol)
                    gap = abs(ci - ex) / ex if ex > 0 else 0.0
                    report.append(
                        (f"K={k} gamma={g} m={m} {db:g}dB "
                         f"exact={ex:.4e} chiani={ci:.4e} "
                         f"chernoff={ch:.4e}", gap))
                    worst = max(worst, gap)
    return worst


def cmd_verify(args) -> int:
    report: list = []
    if args.suite == "specfun":
        worst = _verify_specfun(args, report)
    elif args.suite == "model":
        worst = _verify_model(args, report)
    else:
        worst = _verify_asep(args, report)
    for label, dev in report:
        print(f"{label}  max_rel={dev:.3e}")
    print(f"suite={args.suite} worst deviation: {worst:.3e}")
    if args.out is not None:
        _write_csv(args.out, ("index", "max_rel"),
                   ((i, dev) for i, (_, dev) in enumerate(report)))
        RunManifest("verify", {
            "suite": args.suite, "k_grid": args.k_grid,
            "gamma_grid": args.gamma_grid, "m_grid": args.m_grid,
            "x": args.x, "snr_db": args.snr_db, "out": args.out,
        }, seed=None).write(args.out)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="gstwdp",
        description="composite-fading statistics, simulation, error "
                    "rates and fitting")
    ap.add_argument("--version", action="version", version=__version__)
    sp = ap.add_subparsers(dest="command", required=True)

    ev = sp.add_parser("eval", help="evaluate pdf/cdf/mgf/moment on a grid")
    ev.add_argument("kind", choices=("pdf", "cdf", "mgf", "moment"))
    ev.add_argument("domain", choices=("envelope", "snr"))
    _add_shape_flags(ev)
    ev.add_argument("--x", required=True,
                    help="grid start:step:stop (abscissa / mgf argument "
                         "/ moment order)")
    ev.add_argument("--out", default=None, help="CSV path (default stdout)")
    ev.set_defaults(func=cmd_eval)

    sa = sp.add_parser("sample", help="draw envelope amplitudes")
    _add_shape_flags(sa)
    sa.add_argument("--n", type=int, required=True)
    sa.add_argument("--seed", type=int, required=True)
    sa.add_argument("--out", required=True)
    sa.set_defaults(func=cmd_sample)

    As = sp.add_parser("asep", help="average symbol error probability curve")
    As.add_argument("--mi", type=int, required=True,
                    help="in-phase constellation size")
    As.add_argument("--mq", type=int, required=True,
                    help="quadrature constellation size")
    As.add_argument("--beta", type=float, default=1.0,
                    help="quadrature/in-phase spacing ratio")
    _add_shape_flags(As, with_omega=False)
    As.add_argument("--snr-db", required=True,
                    help="mean-SNR grid in dB, start:step:stop")
    As.add_argument("--method", required=True,
                    choices=("chernoff", "chiani", "mc", "quad"))
    As.add_argument("--n-samples", type=int, default=100_000,
                    help="draws per point for method=mc")
    As.add_argument("--seed", type=int, default=0)
    As.add_argument("--out", default=None)
    As.set_defaults(func=cmd_asep)

    ft = sp.add_parser("fit", help="fit parameters to empirical data")
    ft.add_argument("input", help="CSV: amplitudes, or amplitude,cdf pairs")
    ft.add_argument("--floor", type=float, default=1e-4)
    ft.add_argument("--coarse-per-axis", type=int, default=11)
    ft.add_argument("--subsample", type=int, default=512)
    ft.add_argument("--max-refine-iter", type=int, default=250)
    ft.add_argument("--out", default=None, help="JSON path (default stdout)")
    ft.set_defaults(func=cmd_fit)

    ve = sp.add_parser("verify",
                       help="cross-check closed forms against quadrature")
    ve.add_argument("suite", choices=("specfun", "model", "asep"))
    ve.add_argument("--k-grid", default="0,5,15")
    ve.add_argument("--gamma-grid", default="0,0.5,0.9")
    ve.add_argument("--m-grid", default="0.8,2,5")
    ve.add_argument("--x", default="0.2:0.4:3",
                    help="abscissa grid for the model suite")
    ve.add_argument("--snr-db", default="0:10:30",
                    help="SNR grid for the asep suite")
    ve.add_argument("--mi", type=int, default=4)
    ve.add_argument("--mq", type=int, default=2)
    ve.add_argument("--beta", type=float, default=1.0)
    ve.add_argument("--out", default=None)
    ve.set_defaults(func=cmd_verify)
    return ap


def main(argv=None) -> int:
    ap = _build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, SeriesConvergenceError, OracleError,
            FitError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
