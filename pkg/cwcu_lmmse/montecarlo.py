"""
Sample-based validation of the analytic claims.

Trials draw (x, n), form y = H·x + n and apply every estimator. The trial
range is cut into fixed-size chunks; chunk k owns a Philox stream keyed by
SeedSequence(seed, spawn_key=(k,)), so results do not depend on how many
workers process the chunks. Partial accumulators merge in chunk order.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import reduce

import numpy as np

from .estimators import conditional_mean_coefficients, generic_error_covariance
from .exceptions import (
    DegenerateRegressorError,
    DimensionMismatchError,
    FactorizationFailureError,
    InconsistentPriorError,
    InsufficientSamplesError,
)
from .linalg import as_complex_matrix, hermitian_part, max_abs_dev, psd_factor
from .models import (
    AffineEstimator,
    ComponentKind,
    ConditionalBiasReport,
    EmpiricalPerformance,
    EstimatorMonteCarloReport,
    GaussianPrior,
    LinearModel,
    MonteCarloReport,
    PriorSpec,
    TrialConfig,
)
from .synthetic import random_complex, seeded_rng

logger = logging.getLogger(__name__)

PRIOR_TOL = 1e-9
MIN_REGRESSION_PAIRS = 1000
MIN_REGRESSOR_VARIANCE = 1e-12


def sample_parameters(prior: PriorSpec, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Draw x from the prior; shape (n,) or (n, size) with trials along the last axis."""
    k = 1 if size is None else size
    if isinstance(prior, GaussianPrior):
        factor = psd_factor(prior.C_xx, "C_xx")
        x = prior.mean_x[:, None] + factor @ random_complex(rng, (prior.n, k))
    else:
        x = np.empty((prior.n, k), dtype=complex)
        for i, comp in enumerate(prior.components):
            if comp.kind is ComponentKind.COMPLEX_GAUSSIAN:
                x[i] = comp.mean + np.sqrt(comp.var) * random_complex(rng, k)
            elif comp.kind is ComponentKind.QPSK:
                a = np.sqrt(comp.var / 2.0)
                signs = 2 * rng.integers(0, 2, size=(2, k)) - 1
                x[i] = a * (signs[0] + 1j * signs[1])
            else:
                # uniform on a disk of radius R has variance R²/2
                radius = np.sqrt(2.0 * comp.var) * np.sqrt(rng.uniform(size=k))
                x[i] = comp.mean + radius * np.exp(2j * np.pi * rng.uniform(size=k))
    return x[:, 0] if size is None else x


def sample_noise(C_nn: np.ndarray, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Zero-mean circularly-symmetric complex Gaussian noise with positive-definite covariance C_nn."""
    c_nn = hermitian_part(as_complex_matrix(C_nn, "C_nn"), "C_nn")
    try:
        low = np.linalg.cholesky(c_nn)
    except np.linalg.LinAlgError as e:
        raise FactorizationFailureError(f"C_nn must be positive definite: {e}", name="C_nn") from e
    k = 1 if size is None else size
    noise = low @ random_complex(rng, (c_nn.shape[0], k))
    return noise[:, 0] if size is None else noise


@dataclass
class TrialAccumulator:
    """Sufficient statistics of (x_i, x̂_i) pairs and of the error e = x − x̂, merged associatively."""

    n: int
    keep_pairs: int = 0
    count: int = 0
    sum_x: np.ndarray | None = None
    sum_xhat: np.ndarray | None = None
    sum_abs_x2: np.ndarray | None = None
    sum_abs_xhat2: np.ndarray | None = None
    sum_cross: np.ndarray | None = None
    sum_err: np.ndarray | None = None
    sum_err_outer: np.ndarray | None = None
    sum_err_abs4: np.ndarray | None = None
    sum_err_abs2_outer: np.ndarray | None = None
    pairs_x: np.ndarray | None = None
    pairs_xhat: np.ndarray | None = None

    def __post_init__(self):
        n = self.n
        for name, shape, dtype in (
            ("sum_x", n, complex),
            ("sum_xhat", n, complex),
            ("sum_abs_x2", n, float),
            ("sum_abs_xhat2", n, float),
            ("sum_cross", n, complex),
            ("sum_err", n, complex),
            ("sum_err_outer", (n, n), complex),
            ("sum_err_abs4", n, float),
            ("sum_err_abs2_outer", (n, n), float),
            ("pairs_x", (n, 0), complex),
            ("pairs_xhat", (n, 0), complex),
        ):
            if getattr(self, name) is None:
                setattr(self, name, np.zeros(shape, dtype=dtype))

    def update(self, x: np.ndarray, xhat: np.ndarray) -> None:
        err = x - xhat
        abs_err2 = np.abs(err) ** 2
        self.count += x.shape[1]
        self.sum_x += x.sum(axis=1)
        self.sum_xhat += xhat.sum(axis=1)
        self.sum_abs_x2 += (np.abs(x) ** 2).sum(axis=1)
        self.sum_abs_xhat2 += (np.abs(xhat) ** 2).sum(axis=1)
        self.sum_cross += (x.conj() * xhat).sum(axis=1)
        self.sum_err += err.sum(axis=1)
        self.sum_err_outer += err @ err.conj().T
        self.sum_err_abs4 += (abs_err2**2).sum(axis=1)
        self.sum_err_abs2_outer += abs_err2 @ abs_err2.T
        room = self.keep_pairs - self.pairs_x.shape[1]
        if room > 0:
            self.pairs_x = np.concatenate([self.pairs_x, x[:, :room]], axis=1)
            self.pairs_xhat = np.concatenate([self.pairs_xhat, xhat[:, :room]], axis=1)

    def merge(self, other: "TrialAccumulator") -> "TrialAccumulator":
        if other.n != self.n:
            raise DimensionMismatchError(f"Cannot merge accumulators of size {self.n} and {other.n}")
        return TrialAccumulator(
            n=self.n,
            keep_pairs=self.keep_pairs,
            count=self.count + other.count,
            sum_x=self.sum_x + other.sum_x,
            sum_xhat=self.sum_xhat + other.sum_xhat,
            sum_abs_x2=self.sum_abs_x2 + other.sum_abs_x2,
            sum_abs_xhat2=self.sum_abs_xhat2 + other.sum_abs_xhat2,
            sum_cross=self.sum_cross + other.sum_cross,
            sum_err=self.sum_err + other.sum_err,
            sum_err_outer=self.sum_err_outer + other.sum_err_outer,
            sum_err_abs4=self.sum_err_abs4 + other.sum_err_abs4,
            sum_err_abs2_outer=self.sum_err_abs2_outer + other.sum_err_abs2_outer,
            pairs_x=np.concatenate([self.pairs_x, other.pairs_x], axis=1)[:, : self.keep_pairs],
            pairs_xhat=np.concatenate([self.pairs_xhat, other.pairs_xhat], axis=1)[:, : self.keep_pairs],
        )

    def performance(self, label: str = "") -> EmpiricalPerformance:
        count = self.count
        bmse = self.sum_err_outer.diagonal().real / count
        mean = self.sum_err / count
        second = self.sum_err_outer / count
        cov = second - np.outer(mean, mean.conj())
        return EmpiricalPerformance(
            bmse=bmse,
            bmse_stderr=np.sqrt(np.clip(self.sum_err_abs4 / count - bmse**2, 0.0, None) / count),
            error_cov=0.5 * (cov + cov.conj().T),
            error_cov_stderr=np.sqrt(np.clip(self.sum_err_abs2_outer / count - np.abs(second) ** 2, 0.0, None) / count),
            error_mean=mean,
            n_trials=count,
            label=label,
        )


def _check_prior(model: LinearModel, prior: PriorSpec) -> None:
    if prior.n != model.n:
        raise InconsistentPriorError(f"Prior has {prior.n} components, model has n={model.n}")
    mean_dev = max_abs_dev(prior.mean, model.mean_x)
    cov_dev = max_abs_dev(prior.covariance, model.C_xx)
    if mean_dev > PRIOR_TOL or cov_dev > PRIOR_TOL:
        logger.error(f"Prior disagrees with model: mean deviation {mean_dev:.3e}, covariance deviation {cov_dev:.3e}")
        raise InconsistentPriorError(
            f"Prior moments disagree with the model (mean deviation {mean_dev:.3e}, "
            f"covariance deviation {cov_dev:.3e})"
        )


def run_trials(
    model: LinearModel,
    prior: PriorSpec,
    estimators: list[AffineEstimator],
    cfg: TrialConfig,
) -> tuple[list[EmpiricalPerformance], list[TrialAccumulator]]:
    _check_prior(model, prior)
    for est in estimators:
        if est.E.shape != (model.n, model.m):
            raise DimensionMismatchError(f"Estimator {est.label or est.kind} has shape {est.E.shape}, expected {(model.n, model.m)}")

    n_chunks = -(-cfg.n_trials // cfg.chunk_size)
    logger.info(
        f"Running {cfg.n_trials} trials in {n_chunks} chunks on {cfg.n_workers} workers "
        f"for {len(estimators)} estimators"
    )

    def run_chunk(index: int) -> list[TrialAccumulator]:
        size = min(cfg.chunk_size, cfg.n_trials - index * cfg.chunk_size)
        rng = seeded_rng(cfg.seed, index)
        x = sample_parameters(prior, rng, size)
        y = model.H @ x + sample_noise(model.C_nn, rng, size)
        accs = []
        for est in estimators:
            acc = TrialAccumulator(n=model.n, keep_pairs=cfg.keep_pairs)
            acc.update(x, est.apply(y))
            accs.append(acc)
        logger.debug(f"Finished chunk {index} ({size} trials)")
        return accs

    with ThreadPoolExecutor(max_workers=cfg.n_workers) as pool:
        partials = list(pool.map(run_chunk, range(n_chunks)))

    merged = [reduce(TrialAccumulator.merge, column) for column in zip(*partials)]
    perfs = [acc.performance(est.label or est.kind.value) for acc, est in zip(merged, estimators)]
    logger.info(f"Finished {cfg.n_trials} trials")
    return perfs, merged


def conditional_bias_regression(pairs: TrialAccumulator) -> ConditionalBiasReport:
    """Complex least-squares fit x̂_i ≈ α_i·x_i + β_i per component, with standard errors."""
    count = pairs.count
    if count < MIN_REGRESSION_PAIRS:
        raise InsufficientSamplesError(
            f"Regression needs at least {MIN_REGRESSION_PAIRS} pairs, got {count}",
            n_samples=count,
            required=MIN_REGRESSION_PAIRS,
        )
    mean_x = pairs.sum_x / count
    mean_xhat = pairs.sum_xhat / count
    s_xx = pairs.sum_abs_x2 - count * np.abs(mean_x) ** 2
    s_xy = pairs.sum_cross - count * mean_x.conj() * mean_xhat
    s_yy = pairs.sum_abs_xhat2 - count * np.abs(mean_xhat) ** 2
    degenerate = np.flatnonzero(s_xx / count < MIN_REGRESSOR_VARIANCE)
    if degenerate.size:
        i = int(degenerate[0])
        raise DegenerateRegressorError(f"Sample variance of x_{i} is below {MIN_REGRESSOR_VARIANCE:.0e}", component=i)
    slope = s_xy / s_xx
    intercept = mean_xhat - slope * mean_x
    residual_variance = np.clip(s_yy - np.abs(s_xy) ** 2 / s_xx, 0.0, None) / (count - 2)
    return ConditionalBiasReport(
        slope=slope,
        intercept=intercept,
        slope_stderr=np.sqrt(residual_variance / s_xx),
        intercept_stderr=np.sqrt(residual_variance * (1.0 / count + np.abs(mean_x) ** 2 / s_xx)),
        residual_variance=residual_variance,
        n_trials=count,
    )


class MonteCarloRunner:
    DEFAULT_TRIALS = 100_000
    DEFAULT_WORKERS = 1
    DEFAULT_CHUNK_SIZE = 10_000
    DEFAULT_N_SIGMA = 3.0

    def __init__(
        self,
        n_trials: int = DEFAULT_TRIALS,
        seed: int = 0,
        n_workers: int = DEFAULT_WORKERS,
        chunk_size: int = DEFAULT_CHUNK_SIZE,
        keep_pairs: int = 0,
        n_sigma: float = DEFAULT_N_SIGMA,
    ):
        self.config = TrialConfig(
            n_trials=n_trials,
            seed=seed,
            n_workers=n_workers,
            chunk_size=chunk_size,
            keep_pairs=keep_pairs,
        )
        self.n_sigma = n_sigma

        logger.info(
            f"Initializing Monte Carlo runner: n_trials={n_trials}, seed={seed}, "
            f"n_workers={n_workers}, n_sigma={n_sigma}"
        )

    def run(
        self, model: LinearModel, prior: PriorSpec, estimators: list[AffineEstimator]
    ) -> tuple[list[EmpiricalPerformance], list[TrialAccumulator]]:
        return run_trials(model, prior, estimators, self.config)

    def check(self, model: LinearModel, prior: PriorSpec, estimators: list[AffineEstimator]) -> MonteCarloReport:
        """Run trials and test slopes, intercepts and Bayesian MSEs against their analytic values."""
        perfs, accs = self.run(model, prior, estimators)
        return self.evaluate(model, estimators, perfs, accs)

    def evaluate(
        self,
        model: LinearModel,
        estimators: list[AffineEstimator],
        perfs: list[EmpiricalPerformance],
        accs: list[TrialAccumulator],
    ) -> MonteCarloReport:
        reports = []
        for est, perf, acc in zip(estimators, perfs, accs):
            regression = conditional_bias_regression(acc)
            expected_slope, expected_intercept = conditional_mean_coefficients(model, est)
            checks = regression.band_checks(expected_slope, expected_intercept, self.n_sigma)
            analytic = generic_error_covariance(model, est).bmse
            with np.errstate(divide="ignore", invalid="ignore"):
                bmse_z = np.abs(perf.bmse - analytic) / perf.bmse_stderr
            reports.append(
                EstimatorMonteCarloReport(
                    label=perf.label,
                    kind=est.kind,
                    regression=regression,
                    empirical=perf,
                    analytic_bmse=analytic,
                    bmse_z=bmse_z,
                    bmse_within_band=bool(np.all(bmse_z <= self.n_sigma)),
                    checks=checks,
                    passed=all(check.passed for check in checks),
                )
            )
            if not reports[-1].bmse_within_band:
                logger.warning(f"Empirical Bayesian MSE of {perf.label} outside {self.n_sigma} sigma: max z {np.max(bmse_z):.2f}")
        return MonteCarloReport(
            n_trials=self.config.n_trials,
            seed=self.config.seed,
            n_sigma=self.n_sigma,
            estimators=reports,
            passed=all(report.passed for report in reports),
        )
