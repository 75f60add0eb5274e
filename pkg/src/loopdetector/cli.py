"""Command-line front end.

Subcommands chain the library modules: ``response`` and ``check`` inspect the
detector, ``simulate`` produces count histograms, ``reconstruct`` inverts
them, ``confidence``/``optimize`` quantify single-shot inference, and ``fig2``
runs the full simulate-and-reconstruct pipeline for a coherent and a
single-photon input in one shot.

Every subcommand takes ``--config <path>`` plus targeted overrides and is
deterministic given its configuration (including the seed).  Exit codes:
0 success, 1 usage or configuration error, 2 numerical failure
(rank-deficient inversion under ``--strict``).
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

import numpy as np
from scipy import stats

from . import io
from ._backend import BACKEND
from .config import ConfigError, RunConfig, load_config
from .confidence import UndefinedEventError, confidence, optimize_coupling
from .reconstruct import ReconstructionResult, condition_diagnostics, reconstruct_svd
from .response import (
    DetectorParams,
    PhotonNumberDistribution,
    ResponseMatrix,
    response_matrix,
)
from .simulate import (
    CountHistogram,
    simulate_coherent,
    simulate_distribution,
    simulate_fock,
    simulate_mixture,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); the contract says 1
        raise _UsageError(message)


def _detector_document(params: DetectorParams) -> dict:
    return {
        "t_r": params.t_r,
        "t_c": params.t_c,
        "eta": params.eta,
        "p_d": params.p_d,
        "L": params.L,
    }


def _conditioning_document(report) -> dict:
    return {
        "singular_values": report.singular_values,
        "condition_number": report.condition_number,
        "numerical_rank": report.numerical_rank,
        "invertible": report.invertible,
    }


def _result_document(
    result: ReconstructionResult, report, cfg: RunConfig, source: dict
) -> dict:
    return {
        "rho_hat": result.rho_hat,
        "std_errors": result.std_errors,
        "residual_norm": result.residual_norm,
        "n_max": result.n_max,
        "sv_threshold": result.sv_threshold,
        "numerical_rank": result.numerical_rank,
        "rank_deficient": result.rank_deficient,
        "conditioning": _conditioning_document(report),
        "detector": _detector_document(cfg.detector),
        "source": source,
        "backend": BACKEND,
    }


def _apply_overrides(cfg: RunConfig, args) -> RunConfig:
    updates = {}
    for attr in ("trials", "seed", "n_max", "sv_threshold"):
        value = getattr(args, attr, None)
        if value is not None:
            updates[attr] = value
    return dataclasses.replace(cfg, **updates) if updates else cfg


def _output_path(args, cfg: RunConfig, key: str, default: str) -> Path:
    if getattr(args, "output", None):
        return Path(args.output)
    return Path(cfg.output.get(key, default))


def _cmd_response(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    W = response_matrix(cfg.detector, cfg.n_max)
    out = _output_path(args, cfg, "matrix", "response_matrix.csv")
    io.write_matrix(W, out)
    print(f"response matrix ({W.k_max + 1} x {W.n_max + 1}) -> {out}")
    return EXIT_OK


def _simulate_from_config(cfg: RunConfig, workers: int) -> tuple[CountHistogram, str]:
    spec = cfg.require_input()
    det, trials, seed = cfg.detector, cfg.trials, cfg.seed
    if spec.kind == "coherent":
        hist = simulate_coherent(det, spec.value, trials, seed, workers)
        desc = f"coherent intensity={io.format_float(spec.value)}"
    elif spec.kind == "fock":
        hist = simulate_fock(det, spec.value, trials, seed, workers)
        desc = f"fock n={spec.value}"
    elif spec.kind == "distribution":
        rho = io.read_distribution(spec.value)
        hist = simulate_distribution(det, rho, trials, seed, workers)
        desc = f"distribution {Path(spec.value).name}"
    else:
        mixture = io.read_mixture(spec.value)
        hist = simulate_mixture(det, mixture, trials, seed, workers)
        desc = f"mixture {Path(spec.value).name}"
    return hist, desc


def _cmd_simulate(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    hist, desc = _simulate_from_config(cfg, args.workers)
    out = _output_path(args, cfg, "histogram", "histogram.csv")
    io.write_histogram(hist, out, params=cfg.detector, input_desc=desc)
    print(f"{hist.trials} trials of {desc} -> {out}")
    return EXIT_OK


def _cmd_reconstruct(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    if (args.histogram is None) == (args.exact is None):
        raise _UsageError("give exactly one of --histogram or --exact")

    W = response_matrix(cfg.detector, cfg.n_max)
    if args.histogram is not None:
        hist, metadata = io.read_histogram(args.histogram)
        digest = metadata.get("params_digest", "")
        if digest and digest != cfg.detector.digest():
            raise ConfigError(
                f"histogram {args.histogram!r} was produced with different "
                "detector parameters than the config"
            )
        if hist.k_max != cfg.detector.L:
            raise ConfigError(
                f"histogram covers k <= {hist.k_max} but the detector has "
                f"L = {cfg.detector.L}"
            )
        counts: CountHistogram | np.ndarray = hist
        source = {
            "kind": "histogram",
            "file": Path(args.histogram).name,
            "trials": hist.trials,
            "seed": hist.seed,
            "params_digest": hist.params_digest,
        }
    else:
        counts = io.read_probabilities(args.exact)
        source = {"kind": "exact", "file": Path(args.exact).name}

    result = reconstruct_svd(W, counts, cfg.sv_threshold)
    report = condition_diagnostics(W, cfg.sv_threshold)
    out = _output_path(args, cfg, "result", "result.json")
    io.write_json_document(_result_document(result, report, cfg, source), out)
    print(f"reconstruction (n_max={result.n_max}) -> {out}")
    if result.rank_deficient:
        print(
            f"warning: numerical rank {result.numerical_rank} < {result.n_max + 1};"
            " the estimate is not unique on the discarded subspace",
            file=sys.stderr,
        )
        if args.strict:
            return EXIT_NUMERICAL
    return EXIT_OK


def _cmd_confidence(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    prior = io.read_distribution(args.prior)
    k_top = min(cfg.detector.L, prior.n_max)
    if args.k_max is not None:
        if args.k_max > k_top:
            raise ConfigError(
                f"--k-max {args.k_max} exceeds min(L, prior n_max) = {k_top}"
            )
        k_top = args.k_max
    W = response_matrix(cfg.detector, prior.n_max)
    rows = []
    for k in range(k_top + 1):
        try:
            rows.append((k, confidence(W, prior, k)))
        except UndefinedEventError:
            rows.append((k, float("nan")))
    out = _output_path(args, cfg, "curve", "confidence.csv")
    comments = ["# k-click confidence table"] + [
        f"# prior: {Path(args.prior).name}",
        f"# params_digest: {cfg.detector.digest()}",
    ]
    io.write_table(out, "k,confidence", rows, comments)
    print(f"confidence table for k = 0..{k_top} -> {out}")
    return EXIT_OK


def _cmd_optimize(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    prior = io.read_distribution(args.prior)
    det = cfg.detector
    if args.fixed_tr:
        policy = {"fixed_t_r": det.t_r}
        policy_desc = f"fixed t_r = {io.format_float(det.t_r)}"
    else:
        excess = args.excess_loss
        if excess is None:
            excess = 1.0 - det.t_r - det.t_c
        policy = {"excess_loss": excess}
        policy_desc = f"fixed excess loss = {io.format_float(excess)}"
    scan = optimize_coupling(
        det.eta, det.p_d, det.L, prior, args.k, grid=args.grid, **policy
    )
    out = _output_path(args, cfg, "curve", "optimize.csv")
    comments = [
        "# coupler-ratio scan of the k-click confidence",
        f"# k: {args.k}",
        f"# policy: {policy_desc}",
        f"# t_c_star: {io.format_float(scan.t_c_star)}",
        f"# confidence_star: {io.format_float(scan.confidence_star)}",
        f"# plateau: {str(scan.plateau).lower()}",
    ]
    io.write_table(out, "t_c,confidence", [tuple(row) for row in scan.curve], comments)
    flat = " (plateau)" if scan.plateau else ""
    print(
        f"best t_c = {io.format_float(scan.t_c_star)} with confidence "
        f"{io.format_float(scan.confidence_star)}{flat} -> {out}"
    )
    return EXIT_OK


def _cmd_check(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    W = response_matrix(cfg.detector, cfg.n_max)
    report = condition_diagnostics(W, cfg.sv_threshold)
    out = _output_path(args, cfg, "report", "conditioning.json")
    document = {
        "conditioning": _conditioning_document(report),
        "n_max": cfg.n_max,
        "sv_threshold": cfg.sv_threshold,
        "detector": _detector_document(cfg.detector),
    }
    io.write_json_document(document, out)
    verdict = "invertible" if report.invertible else "NOT invertible"
    print(
        f"response matrix is {verdict} at n_max={cfg.n_max} "
        f"(rank {report.numerical_rank}, condition "
        f"{io.format_float(report.condition_number)}) -> {out}"
    )
    if args.strict and not report.invertible:
        return EXIT_NUMERICAL
    return EXIT_OK


def _cmd_fig2(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    det = cfg.detector
    outdir = Path(args.outdir or cfg.output.get("directory", "fig2_out"))
    outdir.mkdir(parents=True, exist_ok=True)

    W = response_matrix(det, cfg.n_max)
    report = condition_diagnostics(W, cfg.sv_threshold)
    io.write_matrix(W, outdir / "response_matrix.csv")

    panels = []
    for name, hist, exact in (
        (
            "coherent",
            simulate_coherent(det, 1.0, cfg.trials, cfg.seed, args.workers),
            stats.poisson.pmf(np.arange(cfg.n_max + 1), 1.0),
        ),
        (
            "fock",
            simulate_fock(det, 1, cfg.trials, cfg.seed, args.workers),
            PhotonNumberDistribution.fock(1, cfg.n_max).rho,
        ),
    ):
        desc = "coherent intensity=1" if name == "coherent" else "fock n=1"
        io.write_histogram(
            hist, outdir / f"{name}_histogram.csv", params=det, input_desc=desc
        )
        result = reconstruct_svd(W, hist, cfg.sv_threshold)
        source = {
            "kind": "histogram",
            "file": f"{name}_histogram.csv",
            "trials": hist.trials,
            "seed": hist.seed,
            "params_digest": hist.params_digest,
        }
        io.write_json_document(
            _result_document(result, report, cfg, source),
            outdir / f"{name}_result.json",
        )
        panels.append((name, exact, result))

    rows = []
    for name, exact, result in panels:
        for n in range(cfg.n_max + 1):
            rows.append(
                (name, n, float(exact[n]), result.rho_hat[n], result.std_errors[n])
            )
    comments = [
        "# photon-number reconstruction vs exact input distribution",
        *(
            f"# {key}: {io.format_float(value) if isinstance(value, float) else value}"
            for key, value in _detector_document(det).items()
        ),
        f"# trials: {cfg.trials}",
        f"# seed: {cfg.seed}",
        f"# n_max: {cfg.n_max}",
        f"# sv_threshold: {io.format_float(cfg.sv_threshold)}",
        f"# t_r^L: {io.format_float(det.t_r ** det.L)}",
    ]
    io.write_table(
        outdir / "comparison.csv", "panel,n,exact,estimate,std_error", rows, comments
    )

    print(f"pipeline outputs -> {outdir}")
    for name, exact, result in panels:
        worst = max(
            abs(result.rho_hat[n] - exact[n]) for n in range(min(5, cfg.n_max) + 1)
        )
        print(
            f"  {name}: residual {io.format_float(result.residual_norm)}, "
            f"max |estimate - exact| over n<=5: {io.format_float(worst)}"
        )
    if any(result.rank_deficient for _, _, result in panels) and args.strict:
        return EXIT_NUMERICAL
    return EXIT_OK


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="loopdetector",
        description="Loop photon-counting detector: simulation and reconstruction toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, handler, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="JSON configuration document")
        p.add_argument("-o", "--output", help="output file (overrides the config)")
        p.add_argument("--seed", type=int, help="override the RNG seed")
        p.add_argument("--trials", type=int, help="override the trial count")
        p.add_argument("--n-max", dest="n_max", type=int, help="override n_max")
        p.add_argument(
            "--sv-threshold", dest="sv_threshold", type=float,
            help="override the relative singular-value cutoff",
        )
        p.set_defaults(handler=handler)
        return p

    add("response", _cmd_response, "emit the response matrix w(k|n)")

    p = add("simulate", _cmd_simulate, "emit a count histogram for the configured input")
    p.add_argument("--workers", type=int, default=1, help="parallel tally workers")

    p = add("reconstruct", _cmd_reconstruct, "invert a histogram (or exact probabilities)")
    p.add_argument("--histogram", help="histogram file from 'simulate'")
    p.add_argument("--exact", help="exact 'k,probability' file (infinite-trials path)")
    p.add_argument(
        "--strict", action="store_true",
        help="exit with status 2 if the inversion is rank-deficient",
    )

    p = add("confidence", _cmd_confidence, "emit the k-click confidence table")
    p.add_argument("--prior", required=True, help="prior distribution file (n,probability)")
    p.add_argument("--k-max", dest="k_max", type=int, help="largest click count to report")

    p = add("optimize", _cmd_optimize, "scan the coupler ratio for best confidence")
    p.add_argument("--prior", required=True, help="prior distribution file (n,probability)")
    p.add_argument("--k", type=int, required=True, help="target click count")
    group = p.add_mutually_exclusive_group()
    group.add_argument(
        "--excess-loss", dest="excess_loss", type=float,
        help="fixed excess loss 1 - t_r - t_c (default: taken from the config detector)",
    )
    group.add_argument(
        "--fixed-tr", dest="fixed_tr", action="store_true",
        help="hold the config detector's t_r fixed instead",
    )
    p.add_argument("--grid", type=int, default=64, help="scan resolution")

    p = add("check", _cmd_check, "emit the conditioning report (singularity test)")
    p.add_argument(
        "--strict", action="store_true",
        help="exit with status 2 if the matrix is not invertible",
    )

    p = add("fig2", _cmd_fig2, "simulate + reconstruct a coherent and a one-photon input")
    p.add_argument("--outdir", help="output directory (default from config or fig2_out)")
    p.add_argument("--workers", type=int, default=1, help="parallel tally workers")
    p.add_argument(
        "--strict", action="store_true",
        help="exit with status 2 if any inversion is rank-deficient",
    )

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.handler(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
