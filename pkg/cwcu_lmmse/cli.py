"""Command-line front end: ``cwcu {validate,compare,mc,chanest}``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, NonNegativeInt, PositiveFloat, PositiveInt, ValidationError

from . import __version__
from .estimators import (
    blue_b1,
    blue_b2,
    cwcu_error_covariance,
    cwcu_from_moments,
    cwcu_linear_gaussian,
    cwcu_linear_independent,
    generic_error_covariance,
    lmmse_linear,
)
from .exceptions import CwcuError, CwcuModelError, InconsistentPriorError, RankDeficientError
from .models import (
    AffineEstimator,
    ComponentDistribution,
    ComponentKind,
    DiagonalGain,
    GaussianPrior,
    IndependentPrior,
    JointGaussianModel,
    LinearModel,
    PriorSpec,
    SubspaceConstraint,
)
from .montecarlo import MonteCarloRunner
from .serialization import load_model, write_json_report, write_pairs_csv, write_table_csv
from .synthetic import random_linear_model, seeded_rng
from .validation import run_identity_suite
from .wlan import (
    SUBCARRIER_CURVE_COLUMNS,
    TAP_CURVE_COLUMNS,
    ChanestSetup,
    analytic_bmse_curves,
    assemble_model,
    summarize,
)

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
# spawn-key prefix for CLI-generated models; Monte Carlo chunks use one-element keys
MODEL_STREAM = 3

PRIOR_CHOICES = ("gaussian", "independent:qpsk", "independent:uniform")


class RunConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    command: Literal["validate", "compare", "mc", "chanest"]
    seed: int = Field(default=0, ge=0, lt=2**64)
    n_trials: PositiveInt = MonteCarloRunner.DEFAULT_TRIALS
    n_workers: PositiveInt = MonteCarloRunner.DEFAULT_WORKERS
    out: Path = Path(".")
    model: Path | None = None
    n: PositiveInt = 4
    m: PositiveInt = 8
    prior: Literal["gaussian", "independent:qpsk", "independent:uniform"] = "gaussian"
    sigma_n2: PositiveFloat = 0.01
    format: Literal["csv", "json"] = "csv"
    keep_pairs: NonNegativeInt = 0
    perturb: float = 0.0

    @property
    def independent(self) -> bool:
        return self.prior.startswith("independent")


class CompareRow(BaseModel):
    component: int
    d: float
    bmse_lmmse: float
    bmse_cwcu: float
    bmse_b1: float | None = None
    bmse_b2: float | None = None


class CompareReport(BaseModel):
    n: int
    m: int
    prior: str
    estimators: list[str]
    rows: list[CompareRow]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="root seed for every random draw")
    common.add_argument("--out", type=Path, default=Path("."), help="output directory")
    common.add_argument("--verbose", action="store_true", help="log at DEBUG level to stderr")

    model_args = argparse.ArgumentParser(add_help=False)
    model_args.add_argument("--model", type=Path, help="cwcu-model-v1 JSON file (default: random model)")
    model_args.add_argument("--n", type=int, default=4, help="parameter dimension of the random model")
    model_args.add_argument("--m", type=int, default=8, help="observation dimension of the random model")
    model_args.add_argument("--prior", choices=PRIOR_CHOICES, default="gaussian")

    parser = argparse.ArgumentParser(prog="cwcu", description="CWCU LMMSE estimation toolkit")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    validate = sub.add_parser("validate", parents=[common], help="run the algebraic identity suite")
    validate.add_argument("--perturb", type=float, default=0.0, help=argparse.SUPPRESS)

    compare = sub.add_parser("compare", parents=[common, model_args], help="analytic Bayesian MSE per component")
    compare.add_argument("--format", choices=("csv", "json"), default="csv")

    mc = sub.add_parser("mc", parents=[common, model_args], help="Monte Carlo conditional-bias check")
    mc.add_argument("--trials", type=int, default=MonteCarloRunner.DEFAULT_TRIALS)
    mc.add_argument("--workers", type=int, default=MonteCarloRunner.DEFAULT_WORKERS)
    mc.add_argument("--pairs", type=int, default=0, help="dump the first K (x, x̂) pairs per estimator to CSV")

    chanest = sub.add_parser("chanest", parents=[common], help="WLAN preamble channel-estimation curves")
    chanest.add_argument("--sigma-n2", type=float, default=0.01, help="time-domain noise variance")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    values = {"command": args.command, "seed": args.seed, "out": args.out}
    optional = {
        "model": "model",
        "n": "n",
        "m": "m",
        "prior": "prior",
        "format": "format",
        "trials": "n_trials",
        "workers": "n_workers",
        "pairs": "keep_pairs",
        "sigma_n2": "sigma_n2",
        "perturb": "perturb",
    }
    for attr, field in optional.items():
        if hasattr(args, attr):
            values[field] = getattr(args, attr)
    return RunConfig(**values)


def _load_linear_model(cfg: RunConfig) -> tuple[LinearModel | JointGaussianModel, SubspaceConstraint | None]:
    if cfg.model is not None:
        document = load_model(cfg.model)
        return document.to_model(), document.subspace()
    rng = seeded_rng(cfg.seed, MODEL_STREAM, 0)
    model = random_linear_model(
        rng, cfg.n, cfg.m, diagonal_prior=cfg.independent, zero_mean=cfg.prior == "independent:qpsk"
    )
    logger.info(f"Generated random model n={cfg.n}, m={cfg.m}, prior={cfg.prior}")
    return model, None


def _cwcu(model: LinearModel, cfg: RunConfig) -> tuple[AffineEstimator, DiagonalGain]:
    if cfg.independent:
        return cwcu_linear_independent(model)
    return cwcu_linear_gaussian(model)


def _prior_for(model: LinearModel, cfg: RunConfig) -> PriorSpec:
    if not cfg.independent:
        return GaussianPrior(mean_x=model.mean_x, C_xx=model.C_xx)
    kind = ComponentKind.QPSK if cfg.prior == "independent:qpsk" else ComponentKind.UNIFORM_DISK
    if kind is ComponentKind.QPSK and np.any(model.mean_x != 0):
        raise InconsistentPriorError("QPSK prior needs a zero-mean model")
    return IndependentPrior(
        components=[
            ComponentDistribution(kind=kind, var=float(var), mean=complex(mu))
            for var, mu in zip(model.var_x, model.mean_x)
        ]
    )


def cmd_validate(cfg: RunConfig) -> int:
    report = run_identity_suite(seed=cfg.seed, perturb=cfg.perturb)
    write_json_report(report, cfg.out / "validate.json")
    for check in report.checks:
        status = "ok" if check.passed else "FAIL"
        print(f"{status:4}  {check.name}: max_dev={check.max_dev:.3e} tol={check.tol:.0e}")
    return 0 if report.passed else 1


def _compare_moments(model: JointGaussianModel) -> CompareReport:
    _, d = cwcu_from_moments(model)
    lmmse = cwcu_error_covariance(model, DiagonalGain(d=np.ones(model.n))).bmse
    cwcu = cwcu_error_covariance(model, d).bmse
    rows = [
        CompareRow(component=i, d=float(d.d[i]), bmse_lmmse=float(lmmse[i]), bmse_cwcu=float(cwcu[i]))
        for i in range(model.n)
    ]
    return CompareReport(n=model.n, m=model.m, prior="joint_gaussian", estimators=["lmmse", "cwcu"], rows=rows)


def _compare_linear(model: LinearModel, sub: SubspaceConstraint | None, cfg: RunConfig) -> CompareReport:
    cwcu, d = _cwcu(model, cfg)
    columns = {
        "lmmse": generic_error_covariance(model, lmmse_linear(model)).bmse,
        "cwcu": generic_error_covariance(model, cwcu).bmse,
    }
    try:
        columns["b1"] = generic_error_covariance(model, blue_b1(model)).bmse
    except RankDeficientError as e:
        logger.warning(f"Skipping B1: {e}")
    if sub is not None:
        columns["b2"] = generic_error_covariance(model, blue_b2(model, sub)).bmse
    rows = [
        CompareRow(component=i, d=float(d.d[i]), **{f"bmse_{k}": float(v[i]) for k, v in columns.items()})
        for i in range(model.n)
    ]
    return CompareReport(n=model.n, m=model.m, prior=cfg.prior, estimators=list(columns), rows=rows)


def cmd_compare(cfg: RunConfig) -> int:
    model, sub = _load_linear_model(cfg)
    if isinstance(model, JointGaussianModel):
        if cfg.independent:
            logger.warning(f"Ignoring --prior {cfg.prior}: joint_gaussian documents use the Gaussian moment route")
        report = _compare_moments(model)
    else:
        report = _compare_linear(model, sub, cfg)
    if cfg.format == "json":
        write_json_report(report, cfg.out / "compare.json")
    else:
        header = ["component", "d", *(f"bmse_{k}" for k in report.estimators)]
        columns = [np.array([getattr(row, name) for row in report.rows], dtype=float) for name in header[1:]]
        write_table_csv(cfg.out / "compare.csv", header, [row.component for row in report.rows], columns)
    return 0


def cmd_mc(cfg: RunConfig) -> int:
    model, _ = _load_linear_model(cfg)
    if not isinstance(model, LinearModel):
        raise CwcuModelError("Monte Carlo runs need a linear model document")
    cwcu, _ = _cwcu(model, cfg)
    estimators = [
        lmmse_linear(model).model_copy(update={"label": "lmmse"}),
        cwcu.model_copy(update={"label": "cwcu"}),
    ]
    try:
        estimators.append(blue_b1(model).model_copy(update={"label": "b1"}))
    except RankDeficientError as e:
        logger.warning(f"Skipping B1: {e}")
    prior = _prior_for(model, cfg)

    runner = MonteCarloRunner(
        n_trials=cfg.n_trials, seed=cfg.seed, n_workers=cfg.n_workers, keep_pairs=cfg.keep_pairs
    )
    perfs, accs = runner.run(model, prior, estimators)
    report = runner.evaluate(model, estimators, perfs, accs)
    write_json_report(report, cfg.out / "mc.json")
    if cfg.keep_pairs:
        for est, acc in zip(estimators, accs):
            write_pairs_csv(cfg.out / f"pairs_{est.label}.csv", acc.pairs_x, acc.pairs_xhat)
    for est_report in report.estimators:
        failed = [c for c in est_report.checks if not c.passed]
        print(
            f"{est_report.label}: {len(est_report.checks) - len(failed)}/{len(est_report.checks)} band checks passed, "
            f"bmse within band: {est_report.bmse_within_band}"
        )
    return 0 if report.passed else 1


def cmd_chanest(cfg: RunConfig) -> int:
    bundle = assemble_model(ChanestSetup(sigma_n2=cfg.sigma_n2))
    time_curves = analytic_bmse_curves(bundle, "time")
    freq_curves = analytic_bmse_curves(bundle, "freq")
    time_by = {c.label: c.values for c in time_curves}
    freq_by = {c.label: c.values for c in freq_curves}
    write_table_csv(
        cfg.out / "fig2.csv",
        list(TAP_CURVE_COLUMNS),
        time_curves[0].axis,
        [time_by[name.removeprefix("bmse_")] for name in TAP_CURVE_COLUMNS[1:]],
    )
    write_table_csv(
        cfg.out / "fig3.csv",
        list(SUBCARRIER_CURVE_COLUMNS),
        freq_curves[0].axis,
        [freq_by[name.removeprefix("bmse_")] for name in SUBCARRIER_CURVE_COLUMNS[1:]],
    )
    summary = summarize(bundle, time_curves, freq_curves)
    write_json_report(summary, cfg.out / "summary.json")
    print(
        f"frequency-domain BLUE peak {summary.max_blue_freq_bmse:.4g} at subcarrier {summary.argmax_subcarrier}; "
        f"mean CWCU/LMMSE ratio {summary.cwcu_lmmse_mean_ratio:.4f}"
    )
    return 0 if summary.ordering_ok else 1


COMMANDS = {
    "validate": cmd_validate,
    "compare": cmd_compare,
    "mc": cmd_mc,
    "chanest": cmd_chanest,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format=LOG_FORMAT)
    try:
        cfg = config_from_args(args)
    except ValidationError as e:
        first = e.errors()[0]
        print(f"error[invalid_config]: {'.'.join(map(str, first['loc']))}: {first['msg']}", file=sys.stderr)
        return 2
    try:
        cfg.out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[cfg.command](cfg)
    except CwcuError as e:
        print(f"error[{e.code}]: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"error[io_error]: {e}", file=sys.stderr)
        return 2
