"""Command-line orchestration of the full estimation procedure.

Subcommands
-----------
fit            adaptive sampling -> fractional moments -> mixture fit ->
               first-passage probabilities; writes report.json,
               curves_<response>.csv, convergence.csv and figure PNGs.
baseline mcs   plain Monte Carlo reference (baseline_mcs.json).
baseline sus   subset-simulation reference (baseline_sus.json).
curves         re-emit exceedance curves from an existing report.

All randomness flows from the single config seed; rerunning with the
same config byte-reproduces report.json. Exit codes: 0 success,
2 config error, 3 convergence failure, 4 numeric error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .baselines import mcs_pf, subset_sim_pf
from .distributions import QuadratureError, write_curve_csv
from .dynamics import DuffingConfig, FrameConfig, GroundMotionSpec, make_model
from .fitting import fit_mixture
from .moments import DEFAULT_ORDERS, ConvergenceConfig, adaptive_estimate
from .report import (
    ReliabilityReport,
    ResponseReport,
    curve_grid,
    default_curve_bounds,
    first_passage,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CONVERGENCE = 3
EXIT_NUMERIC = 4


@dataclass
class RunConfig:
    """One pipeline run. Defaults follow the reference testbed setup:
    initial design 1, refinement factor 1, batches of 8, tolerance 1.5%,
    orders k/4."""

    model: str = "duffing"
    model_params: dict = field(default_factory=dict)
    n_init: int = 1
    delta: int = 1
    batch: int = 8
    epsilon: float = 0.015
    max_batches: int = 500
    bootstrap: int = 100
    orders: list = field(default_factory=lambda: list(DEFAULT_ORDERS))
    thresholds: list = field(default_factory=list)
    response_thresholds: dict = field(default_factory=dict)
    seed: int = 0
    workers: int = 1
    out: str = "out"

    def to_json_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json_dict(cls, d: dict) -> "RunConfig":
        known = {f for f in cls.__dataclass_fields__}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown config fields: {sorted(extra)}")
        return cls(**d)

    def config_hash(self) -> str:
        blob = json.dumps(self.to_json_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def build_model(self):
        if self.model == "duffing":
            return make_model("duffing", DuffingConfig(**self.model_params))
        if self.model == "bouc_wen_frame":
            params = dict(self.model_params)
            gm = params.pop("ground_motion", None)
            if gm is not None:
                params["ground_motion"] = GroundMotionSpec(**gm)
            return make_model("bouc_wen_frame", FrameConfig(**params))
        raise ValueError(f"unknown model {self.model!r}")

    def thresholds_for(self, label: str) -> list:
        per = self.response_thresholds.get(label, [])
        return [float(b) for b in list(self.thresholds) + list(per)]


def _write_convergence_csv(path, trace):
    with open(path, "w") as fh:
        fh.write("batch,samples,M1,M2,cov_M2\n")
        for batch, samples, m1, m2, cov in trace:
            fh.write(f"{batch},{samples},{m1!r},{m2!r},{cov!r}\n")


def _render_curve_figure(path, label, table):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    z, pdf, cdf, poe = table.T
    fig, axes = plt.subplots(1, 3, figsize=(12, 3.4))
    axes[0].plot(z, pdf)
    axes[0].set_xlabel("z")
    axes[0].set_ylabel("pdf")
    axes[1].plot(z, cdf)
    axes[1].set_xlabel("z")
    axes[1].set_ylabel("cdf")
    axes[2].semilogy(z, np.maximum(poe, 1e-16))
    axes[2].set_xlabel("z")
    axes[2].set_ylabel("poe")
    fig.suptitle(label)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def _render_convergence_figure(path, trace, tolerance):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    samples = [row[1] for row in trace]
    cov = [row[4] for row in trace]
    fig, ax = plt.subplots(figsize=(5.2, 3.4))
    ax.semilogy(samples, cov, marker="o")
    ax.axhline(tolerance, color="tab:red", ls="--", label="tolerance")
    ax.set_xlabel("model evaluations")
    ax.set_ylabel("COV of second moment")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def run_pipeline(config: RunConfig, plots: bool = True) -> ReliabilityReport:
    """Execute the six-step procedure and write every artifact."""
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    model = config.build_model()
    conv = ConvergenceConfig(tolerance=config.epsilon, batch=config.batch,
                             max_batches=config.max_batches,
                             n_bootstrap=config.bootstrap)
    orders = np.asarray(config.orders, dtype=float)

    result = adaptive_estimate(model, convergence=conv, orders=orders,
                               n_init=config.n_init, delta=config.delta,
                               seed=config.seed, workers=config.workers)

    responses = []
    for idx, label in enumerate(model.labels):
        mset = result.response_moments(idx, orders)
        fit = fit_mixture(mset.estimates, mset.mean, mset.std, orders=orders,
                          seed=config.seed)
        thresholds = [(b, first_passage(fit.params, b))
                      for b in config.thresholds_for(label)]
        responses.append(ResponseReport(
            label=label,
            moments_orders=orders.tolist(),
            moments=mset.estimates.tolist(),
            mean=mset.mean,
            std=mset.std,
            fit=fit,
            thresholds=thresholds,
        ))

    report = ReliabilityReport(
        model=config.model,
        config=config.to_json_dict(),
        config_hash=config.config_hash(),
        seed=config.seed,
        evaluations=result.evaluations,
        converged=result.converged,
        batches=result.batches,
        convergence_trace=result.moments.cov_trace,
        responses=responses,
    )
    report.dump_json(out / "report.json")
    _write_convergence_csv(out / "convergence.csv", report.convergence_trace)
    for resp in responses:
        z_lo, z_hi = default_curve_bounds(resp.mean, resp.moments[-1])
        table = curve_grid(resp.fit.params, z_lo, z_hi)
        write_curve_csv(out / f"curves_{resp.label}.csv", table)
        if plots:
            _render_curve_figure(out / f"fig_{resp.label}.png", resp.label, table)
    if plots:
        _render_convergence_figure(out / "fig_convergence.png",
                                   report.convergence_trace, config.epsilon)
    return report


def run_baseline(config: RunConfig, method: str, n_mcs: int = 100000,
                 n_per_level: int = 1000, p0: float = 0.1,
                 response: int = 0) -> list:
    """Run a reference estimator for every configured threshold of the
    selected response; wall time and evaluation counts are logged."""
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    model = config.build_model()
    label = model.labels[response]
    thresholds = config.thresholds_for(label)
    if not thresholds:
        raise ValueError("no thresholds configured for the baseline")
    results = []
    t0 = time.perf_counter()
    for k, b in enumerate(thresholds):
        if method == "mcs":
            res = mcs_pf(model, n_mcs, b, seed=config.seed + k,
                         workers=config.workers, response=response)
        elif method == "sus":
            res = subset_sim_pf(model, b, n_per_level=n_per_level, p0=p0,
                                seed=config.seed + k, response=response)
        else:
            raise ValueError(f"unknown baseline {method!r}")
        results.append(res)
    wall = time.perf_counter() - t0
    payload = {
        "method": method,
        "config_hash": config.config_hash(),
        "model": config.model,
        "response": label,
        "wall_seconds": wall,
        "workers": config.workers,
        "results": [r.to_json_dict() for r in results],
    }
    with open(out / f"baseline_{method}.json", "w") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
        fh.write("\n")
    print(f"baseline {method}: {wall:.1f} s with {config.workers} worker(s), "
          f"{sum(r.evaluations for r in results)} evaluations", file=sys.stderr)
    return results


def run_curves(config: RunConfig, report_path, z_min, z_max, n_points,
               log_spacing, plots: bool = True):
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    report = ReliabilityReport.load_json(report_path)
    for resp in report.responses:
        lo, hi = z_min, z_max
        if lo is None or hi is None:
            d_lo, d_hi = default_curve_bounds(resp.mean, resp.moments[-1])
            lo = d_lo if lo is None else lo
            hi = d_hi if hi is None else hi
        table = curve_grid(resp.fit.params, lo, hi, n_points, log_spacing)
        write_curve_csv(out / f"curves_{resp.label}.csv", table)
        if plots:
            _render_curve_figure(out / f"fig_{resp.label}.png", resp.label, table)


def _load_config(args) -> RunConfig:
    if args.config:
        with open(args.config) as fh:
            config = RunConfig.from_json_dict(json.load(fh))
    else:
        config = RunConfig()
    if args.model is not None:
        config.model = args.model
    if args.seed is not None:
        config.seed = args.seed
    if args.workers is not None:
        config.workers = args.workers
    if getattr(args, "epsilon", None) is not None:
        config.epsilon = args.epsilon
    if getattr(args, "batch", None) is not None:
        config.batch = args.batch
    if args.threshold:
        config.thresholds = list(config.thresholds) + [float(b) for b in args.threshold]
    if args.out is not None:
        config.out = args.out
    return config


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="firstpassage",
        description="First-passage reliability via adaptive stratified "
                    "sampling and mixture extreme-value fitting",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--model", choices=["duffing", "bouc_wen_frame"])
        p.add_argument("--seed", type=int)
        p.add_argument("--workers", type=int)
        p.add_argument("--threshold", action="append", type=float,
                       help="failure threshold (repeatable)")
        p.add_argument("--out", help="output directory")
        p.add_argument("--no-plots", action="store_true",
                       help="skip figure rendering")

    p_fit = sub.add_parser("fit", help="run the adaptive pipeline")
    common(p_fit)
    p_fit.add_argument("--epsilon", type=float, help="COV stopping tolerance")
    p_fit.add_argument("--batch", type=int, help="samples per extension")

    p_base = sub.add_parser("baseline", help="run a reference estimator")
    p_base.add_argument("method", choices=["mcs", "sus"])
    common(p_base)
    p_base.add_argument("--n", type=int, default=100000,
                        help="Monte Carlo sample count")
    p_base.add_argument("--n-per-level", type=int, default=1000)
    p_base.add_argument("--p0", type=float, default=0.1)
    p_base.add_argument("--response", type=int, default=0)

    p_curves = sub.add_parser("curves", help="re-emit curves from a report")
    common(p_curves)
    p_curves.add_argument("--report", required=True, help="existing report.json")
    p_curves.add_argument("--zmin", type=float)
    p_curves.add_argument("--zmax", type=float)
    p_curves.add_argument("--points", type=int, default=400)
    p_curves.add_argument("--linear", action="store_true",
                          help="linear instead of log grid spacing")
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        config = _load_config(args)
    except (OSError, ValueError, TypeError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        if args.command == "fit":
            report = run_pipeline(config, plots=not args.no_plots)
            unconverged = [r.label for r in report.responses if not r.fit.converged]
            if not report.converged:
                print("convergence failure: adaptive loop hit the batch cap "
                      "(artifacts written, flagged in report.json)", file=sys.stderr)
                return EXIT_CONVERGENCE
            if unconverged:
                print(f"convergence failure: moment matching did not converge for "
                      f"{unconverged} (artifacts written)", file=sys.stderr)
                return EXIT_CONVERGENCE
        elif args.command == "baseline":
            run_baseline(config, args.method, n_mcs=args.n,
                         n_per_level=args.n_per_level, p0=args.p0,
                         response=args.response)
        elif args.command == "curves":
            run_curves(config, args.report, args.zmin, args.zmax,
                       args.points, not args.linear, plots=not args.no_plots)
    except (ValueError, TypeError, OSError) as exc:
        print(f"config error [{args.command}]: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (QuadratureError, FloatingPointError, OverflowError, ArithmeticError) as exc:
        print(f"numeric error [{args.command}]: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
