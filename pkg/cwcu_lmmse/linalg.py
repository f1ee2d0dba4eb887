"""
Dense complex linear algebra helpers.

Every inverse in the package goes through a Hermitian positive-definite
Cholesky factorization; explicit inverses are never formed.
"""

import logging

import numpy as np
from scipy import linalg as sla

from .exceptions import (
    DimensionMismatchError,
    FactorizationFailureError,
    NotHermitianError,
    NotPositiveDefiniteError,
    SingularCovarianceError,
)

logger = logging.getLogger(__name__)

HERMITIAN_TOL = 1e-10
PSD_TOL = 1e-8

CholeskyFactor = tuple[np.ndarray, bool]


def as_complex_vector(value, name: str, length: int | None = None) -> np.ndarray:
    arr = np.array(value, dtype=complex)
    if arr.ndim != 1:
        raise DimensionMismatchError(f"{name} must be a vector, got shape {arr.shape}")
    if length is not None and arr.shape[0] != length:
        raise DimensionMismatchError(f"{name} must have length {length}, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise DimensionMismatchError(f"{name} contains non-finite entries")
    return arr


def as_complex_matrix(value, name: str, shape: tuple[int, int] | None = None) -> np.ndarray:
    arr = np.array(value, dtype=complex)
    if arr.ndim != 2:
        raise DimensionMismatchError(f"{name} must be a matrix, got shape {arr.shape}")
    if shape is not None and arr.shape != shape:
        raise DimensionMismatchError(f"{name} must have shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DimensionMismatchError(f"{name} contains non-finite entries")
    return arr


def frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


def hermitian_part(a: np.ndarray, name: str, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Return (A + Aᴴ)/2 after checking that A deviates from Hermitian by at most ``tol``."""
    if a.shape[0] != a.shape[1]:
        raise DimensionMismatchError(f"{name} must be square, got shape {a.shape}")
    deviation = float(np.max(np.abs(a - a.conj().T), initial=0.0))
    if deviation > tol:
        logger.error(f"{name} is not Hermitian: max deviation {deviation:.3e}")
        raise NotHermitianError(
            f"{name} is not Hermitian (max |A - A^H| = {deviation:.3e} > {tol:.0e})",
            name=name,
            deviation=deviation,
        )
    return 0.5 * (a + a.conj().T)


def min_eigenvalue(a: np.ndarray) -> float:
    return float(sla.eigh(a, eigvals_only=True)[0])


def require_positive_definite(a: np.ndarray, name: str) -> CholeskyFactor:
    try:
        return sla.cho_factor(a, lower=True)
    except sla.LinAlgError as e:
        lam = min_eigenvalue(a)
        logger.error(f"{name} is not positive definite: smallest eigenvalue {lam:.3e}")
        raise NotPositiveDefiniteError(
            f"{name} must be positive definite (smallest eigenvalue {lam:.3e})",
            name=name,
            min_eigenvalue=lam,
        ) from e


def require_positive_semidefinite(a: np.ndarray, name: str, tol: float = PSD_TOL) -> None:
    lam = min_eigenvalue(a)
    scale = max(1.0, float(np.max(np.abs(a), initial=0.0)))
    if lam < -tol * scale:
        logger.error(f"{name} is not positive semidefinite: smallest eigenvalue {lam:.3e}")
        raise NotPositiveDefiniteError(
            f"{name} must be positive semidefinite (smallest eigenvalue {lam:.3e})",
            name=name,
            min_eigenvalue=lam,
        )


def cholesky(a: np.ndarray, name: str) -> CholeskyFactor:
    """Factor a Hermitian matrix that the caller expects to be positive definite."""
    try:
        return sla.cho_factor(a, lower=True)
    except sla.LinAlgError as e:
        logger.error(f"Cholesky factorization of {name} failed: {e}")
        raise SingularCovarianceError(f"{name} is numerically singular: {e}", name=name) from e


def solve_hpd(factor: CholeskyFactor, b: np.ndarray) -> np.ndarray:
    return sla.cho_solve(factor, b)


def psd_factor(c: np.ndarray, name: str, tol: float = PSD_TOL) -> np.ndarray:
    """
    Return L with L·Lᴴ = C for a Hermitian positive semidefinite C.

    Cholesky is tried first; singular covariances fall back to an eigen
    factorization with negative round-off eigenvalues clipped to zero.
    """
    try:
        low, _ = sla.cho_factor(c, lower=True)
        return np.tril(low)
    except sla.LinAlgError:
        logger.debug(f"Cholesky of {name} failed, using eigen factorization")
    try:
        lam, vecs = sla.eigh(c)
    except sla.LinAlgError as e:
        raise FactorizationFailureError(f"Eigen factorization of {name} failed: {e}", name=name) from e
    scale = max(1.0, float(np.max(np.abs(lam), initial=0.0)))
    if lam[0] < -tol * scale:
        raise FactorizationFailureError(
            f"{name} is not positive semidefinite (smallest eigenvalue {lam[0]:.3e})", name=name
        )
    return vecs * np.sqrt(np.clip(lam, 0.0, None))


def max_abs_dev(a, b) -> float:
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b)), initial=0.0))


def max_rel_dev(a, ref) -> float:
    """Max-entry modulus of ``a - ref`` relative to the max-entry modulus of ``ref``."""
    scale = float(np.max(np.abs(np.asarray(ref)), initial=0.0))
    return max_abs_dev(a, ref) / scale if scale > 0 else max_abs_dev(a, ref)
