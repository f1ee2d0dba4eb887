"""
Closed-form affine estimators and their analytic error statistics.

LMMSE, the component-wise conditionally unbiased (CWCU) LMMSE estimator in
its moment, linear-Gaussian and independent-parameter forms, and the two
globally unbiased baselines: B1 (no subspace knowledge) and B2 (x known to
lie in span(V)).
"""

import logging

import numpy as np

from .exceptions import (
    CwcuNumericalError,
    DimensionMismatchError,
    NotDiagonalPriorError,
    RankDeficientError,
    UninformativeComponentError,
)
from .linalg import cholesky, solve_hpd
from .models import (
    AffineEstimator,
    DiagonalGain,
    EstimatorKind,
    EstimatorPerformance,
    JointGaussianModel,
    LinearModel,
    SubspaceConstraint,
)

logger = logging.getLogger(__name__)

UNINFORMATIVE_TOL = 1e-12
IMAG_TOL = 1e-10
MAX_CONDITION = 1e12


def _real_quadratic_forms(q: np.ndarray, what: str) -> np.ndarray:
    imag = np.abs(q.imag)
    bound = IMAG_TOL * np.maximum(1.0, np.abs(q))
    if np.any(imag > bound):
        i = int(np.argmax(imag - bound))
        raise CwcuNumericalError(f"{what} for component {i} has imaginary part {imag[i]:.3e}")
    return q.real


def _check_informative(denominator: np.ndarray, scale: np.ndarray) -> None:
    bad = np.flatnonzero(denominator <= UNINFORMATIVE_TOL * scale)
    if bad.size:
        i = int(bad[0])
        logger.error(f"Component {i} is uninformative: denominator {denominator[i]:.3e}")
        raise UninformativeComponentError(
            f"Measurement carries no information about component {i} "
            f"(denominator {denominator[i]:.3e}); the CWCU constraint is infeasible",
            component=i,
        )


def _cwcu_gain(c_yy_factor, c_yx: np.ndarray, var_x: np.ndarray) -> np.ndarray:
    """[D]_ii = σ²_xi / (C_xiy·C_yy⁻¹·C_yxi) for every column C_yxi of C_yx."""
    w = solve_hpd(c_yy_factor, c_yx)
    q = _real_quadratic_forms(np.einsum("ij,ij->j", c_yx.conj(), w), "Quadratic form C_xiy C_yy^-1 C_yxi")
    _check_informative(q, var_x)
    return var_x / q


def lmmse_from_moments(model: JointGaussianModel) -> AffineEstimator:
    """E_L = C_xy·C_yy⁻¹ and c = E[x] − E_L·E[y]."""
    factor = cholesky(model.C_yy, "C_yy")
    e = solve_hpd(factor, model.C_yx).conj().T
    c = model.mean_x - e @ model.mean_y
    logger.info(f"Built LMMSE estimator from moments: n={model.n}, m={model.m}")
    return AffineEstimator(E=e, c=c, kind=EstimatorKind.LMMSE)


def lmmse_linear(model: LinearModel) -> AffineEstimator:
    """LMMSE for the linear model, C_xx·Hᴴ·(H·C_xx·Hᴴ + C_nn)⁻¹."""
    return lmmse_from_moments(model.joint_moments())


def cwcu_from_moments(model: JointGaussianModel) -> tuple[AffineEstimator, DiagonalGain]:
    factor = cholesky(model.C_yy, "C_yy")
    d = _cwcu_gain(factor, model.C_yx, model.var_x)
    e = d[:, None] * solve_hpd(factor, model.C_yx).conj().T
    c = model.mean_x - e @ model.mean_y
    logger.info(f"Built CWCU LMMSE estimator from moments: n={model.n}, m={model.m}")
    logger.debug(f"D diagonal: {d}")
    return AffineEstimator(E=e, c=c, kind=EstimatorKind.CWCU_MOMENTS), DiagonalGain(d=d)


def d_matrix_ratio_form(model: JointGaussianModel) -> DiagonalGain:
    """D = diag(C_xx)·diag(A)⁻¹ with A = C_xy·C_yy⁻¹·C_yx."""
    factor = cholesky(model.C_yy, "C_yy")
    a = model.C_xy @ solve_hpd(factor, model.C_yx)
    diag_a = _real_quadratic_forms(np.diag(a), "Diagonal of A")
    _check_informative(diag_a, model.var_x)
    return DiagonalGain(d=model.var_x / diag_a)


def cwcu_linear_gaussian(model: LinearModel) -> tuple[AffineEstimator, DiagonalGain]:
    """CWCU LMMSE for the linear model with a (possibly singular) Gaussian prior."""
    factor = cholesky(model.C_yy, "H C_xx H^H + C_nn")
    c_yx = model.C_yx
    d = _cwcu_gain(factor, c_yx, model.var_x)
    e = d[:, None] * solve_hpd(factor, c_yx).conj().T
    c = model.mean_x - e @ model.mean_y
    logger.info(f"Built CWCU LMMSE estimator (Gaussian prior): n={model.n}, m={model.m}")
    return AffineEstimator(E=e, c=c, kind=EstimatorKind.CWCU_LINEAR_GAUSSIAN), DiagonalGain(d=d)


def _require_diagonal_prior(model: LinearModel) -> None:
    off = model.off_diagonal_prior_entries()
    if off:
        logger.error(f"Prior covariance has off-diagonal entries at {off}")
        raise NotDiagonalPriorError(
            f"C_xx must be diagonal for mutually independent parameters; off-diagonal entries at {off}",
            components=off,
        )


def cwcu_linear_independent(model: LinearModel) -> tuple[AffineEstimator, DiagonalGain]:
    """CWCU LMMSE for mutually independent parameters: [D]_ii = 1/(σ²_xi·h_iᴴ·C_yy⁻¹·h_i)."""
    _require_diagonal_prior(model)
    factor = cholesky(model.C_yy, "H C_xx H^H + C_nn")
    var = model.var_x
    w = solve_hpd(factor, model.H)
    q = _real_quadratic_forms(np.einsum("ij,ij->j", model.H.conj(), w), "Quadratic form h_i^H C_yy^-1 h_i")
    denominator = var * q
    _check_informative(denominator, np.ones_like(var))
    d = 1.0 / denominator
    e = (d * var)[:, None] * w.conj().T
    c = model.mean_x - e @ model.mean_y
    logger.info(f"Built CWCU LMMSE estimator (independent prior): n={model.n}, m={model.m}")
    return AffineEstimator(E=e, c=c, kind=EstimatorKind.CWCU_INDEPENDENT), DiagonalGain(d=d)


def cwcu_row_alternative(model: LinearModel, i: int) -> np.ndarray:
    """
    Row i of the independent-prior CWCU estimator as the vector e with row = eᴴ,
    e = (h_iᴴ·C_i⁻¹·h_i)⁻¹·C_i⁻¹·h_i where C_i is the covariance of y without x_i.
    """
    _require_diagonal_prior(model)
    if not 0 <= i < model.n:
        raise DimensionMismatchError(f"Component index {i} out of range for n={model.n}")
    h_i = model.H[:, i]
    h_bar = np.delete(model.H, i, axis=1)
    var_bar = np.delete(model.var_x, i)
    c_i = (h_bar * var_bar) @ h_bar.conj().T + model.C_nn
    factor = cholesky(0.5 * (c_i + c_i.conj().T), f"C_{i}")
    w = solve_hpd(factor, h_i)
    q = float(np.real(h_i.conj() @ w))
    _check_informative(np.array([q]), np.array([1.0]))
    return w / q


def _gram_solve(model: LinearModel, hv: np.ndarray, what: str) -> np.ndarray:
    """Return ((HV)ᴴ·C_nn⁻¹·HV)⁻¹·(C_nn⁻¹·HV)ᴴ."""
    noise = cholesky(model.C_nn, "C_nn")
    w = solve_hpd(noise, hv)
    gram = hv.conj().T @ w
    gram = 0.5 * (gram + gram.conj().T)
    cond = float(np.linalg.cond(gram))
    if not np.isfinite(cond) or cond >= MAX_CONDITION:
        logger.error(f"{what} Gram matrix is numerically singular: condition number {cond:.3e}")
        raise RankDeficientError(f"{what} Gram matrix is numerically singular (cond {cond:.3e})", condition_number=cond)
    return solve_hpd(cholesky(gram, f"{what} Gram matrix"), w.conj().T)


def blue_b1(model: LinearModel) -> AffineEstimator:
    """(Hᴴ·C_nn⁻¹·H)⁻¹·Hᴴ·C_nn⁻¹, globally unbiased: E·H = I."""
    if model.m < model.n:
        raise RankDeficientError(f"B1 requires m >= n, got m={model.m}, n={model.n}")
    e = _gram_solve(model, model.H, "H^H C_nn^-1 H")
    logger.info(f"Built B1 estimator: n={model.n}, m={model.m}")
    return AffineEstimator(E=e, c=np.zeros(model.n, dtype=complex), kind=EstimatorKind.B1)


def blue_b2(model: LinearModel, sub: SubspaceConstraint) -> AffineEstimator:
    """V·(Vᴴ·Hᴴ·C_nn⁻¹·H·V)⁻¹·Vᴴ·Hᴴ·C_nn⁻¹, unbiased on span(V): E·H·V = V."""
    if sub.V.shape[0] != model.n:
        raise DimensionMismatchError(f"V has {sub.V.shape[0]} rows, model has n={model.n}")
    z_est = _gram_solve(model, model.H @ sub.V, "V^H H^H C_nn^-1 H V")
    logger.info(f"Built B2 estimator: n={model.n}, m={model.m}, p={sub.p}")
    return AffineEstimator(E=sub.V @ z_est, c=np.zeros(model.n, dtype=complex), kind=EstimatorKind.B2)


def _hermitize(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.conj().T)


def cwcu_error_covariance(model: JointGaussianModel, D: DiagonalGain) -> EstimatorPerformance:
    """C_ee = C_xx − A·D − D·A + D·A·D with A = C_xy·C_yy⁻¹·C_yx; the error mean is zero."""
    if D.d.shape[0] != model.n:
        raise DimensionMismatchError(f"D has length {D.d.shape[0]}, model has n={model.n}")
    factor = cholesky(model.C_yy, "C_yy")
    a = _hermitize(model.C_xy @ solve_hpd(factor, model.C_yx))
    d = D.d
    c_ee = _hermitize(model.C_xx - a * d[None, :] - d[:, None] * a + d[:, None] * a * d[None, :])
    return EstimatorPerformance(
        error_cov=c_ee,
        bmse=np.real(np.diag(c_ee)),
        error_mean=np.zeros(model.n, dtype=complex),
    )


def generic_error_covariance(model: LinearModel, est: AffineEstimator) -> EstimatorPerformance:
    """
    Error statistics of x − (E·y + c) under the linear model:
    mean (I − E·H)·E[x] − c, covariance (I − E·H)·C_xx·(I − E·H)ᴴ + E·C_nn·Eᴴ.
    """
    if est.E.shape != (model.n, model.m):
        raise DimensionMismatchError(f"Estimator shape {est.E.shape} does not match model ({model.n}, {model.m})")
    g = np.eye(model.n) - est.E @ model.H
    error_mean = g @ model.mean_x - est.c
    error_cov = _hermitize(g @ model.C_xx @ g.conj().T + est.E @ model.C_nn @ est.E.conj().T)
    bmse = np.real(np.diag(error_cov)) + np.abs(error_mean) ** 2
    return EstimatorPerformance(
        error_cov=error_cov, bmse=bmse, error_mean=error_mean, kind=est.kind, label=est.label
    )


def apply_estimator(est: AffineEstimator, y: np.ndarray) -> np.ndarray:
    return est.apply(y)


def conditional_mean_coefficients(model: LinearModel, est: AffineEstimator) -> tuple[np.ndarray, np.ndarray]:
    """
    Slope α and intercept β with E[x̂_i | x_i] = α_i·x_i + β_i.

    Exact whenever E[y | x_i] is affine in x_i (Gaussian or mutually
    independent priors): α_i = e_iᴴ·C_yxi / σ²_xi and β_i = c_i + e_iᴴ·E[y] − α_i·E[x_i].
    """
    var = model.var_x
    slope = np.einsum("ij,ji->i", est.E, model.C_yx) / var
    intercept = est.c + est.E @ model.mean_y - slope * model.mean_x
    return slope, intercept
