from __future__ import annotations

from enum import StrEnum
from typing import Annotated, Literal

import numpy as np
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    NonNegativeInt,
    PlainSerializer,
    PositiveFloat,
    PositiveInt,
    ValidationInfo,
    field_validator,
    model_validator,
)

from .exceptions import DimensionMismatchError, NotPositiveDefiniteError, UnobservableComponentError
from .linalg import (
    as_complex_matrix,
    as_complex_vector,
    frozen,
    hermitian_part,
    min_eigenvalue,
    require_positive_definite,
    require_positive_semidefinite,
)

DIAGONAL_TOL = 1e-12
RANK_TOL = 1e-10


def encode_complex(arr: np.ndarray) -> list:
    """Encode a complex array as nested lists with [re, im] leaves (row-major)."""
    arr = np.asarray(arr, dtype=complex)
    return np.stack([arr.real, arr.imag], axis=-1).tolist()


def encode_real(arr: np.ndarray) -> list:
    arr = np.asarray(arr, dtype=float)
    return np.where(np.isfinite(arr), arr, np.nan).tolist()


ComplexArray = Annotated[np.ndarray, PlainSerializer(encode_complex, return_type=list, when_used="json")]
RealArray = Annotated[np.ndarray, PlainSerializer(encode_real, return_type=list, when_used="json")]
ComplexScalar = Annotated[complex, PlainSerializer(lambda z: [z.real, z.imag], return_type=list, when_used="json")]

_FROZEN_ARRAYS = ConfigDict(frozen=True, arbitrary_types_allowed=True)


class EstimatorKind(StrEnum):
    LMMSE = "lmmse"
    CWCU_MOMENTS = "cwcu_moments"
    CWCU_LINEAR_GAUSSIAN = "cwcu_linear_gaussian"
    CWCU_INDEPENDENT = "cwcu_independent"
    B1 = "b1"
    B2 = "b2"
    TRIVIAL = "trivial"

    @property
    def is_cwcu(self) -> bool:
        return self in {
            EstimatorKind.CWCU_MOMENTS,
            EstimatorKind.CWCU_LINEAR_GAUSSIAN,
            EstimatorKind.CWCU_INDEPENDENT,
        }


class JointGaussianModel(BaseModel):
    """
    Second-order moments of jointly distributed x (length n) and y (length m).

    Pass ``context={"strict": True}`` to ``model_validate`` (or use
    :meth:`validated`) to additionally check that the joint block covariance
    is positive semidefinite.
    """

    model_config = _FROZEN_ARRAYS

    mean_x: ComplexArray
    mean_y: ComplexArray
    C_xx: ComplexArray
    C_xy: ComplexArray
    C_yy: ComplexArray

    @field_validator("mean_x", "mean_y", mode="before")
    @classmethod
    def convert_vector(cls, v, info: ValidationInfo):
        return as_complex_vector(v, info.field_name)

    @field_validator("C_xy", mode="before")
    @classmethod
    def convert_matrix(cls, v, info: ValidationInfo):
        return as_complex_matrix(v, info.field_name)

    @field_validator("C_xx", "C_yy", mode="before")
    @classmethod
    def convert_hermitian(cls, v, info: ValidationInfo):
        return hermitian_part(as_complex_matrix(v, info.field_name), info.field_name)

    @model_validator(mode="after")
    def check_moments(self, info: ValidationInfo) -> JointGaussianModel:
        n, m = self.mean_x.shape[0], self.mean_y.shape[0]
        if self.C_xx.shape != (n, n) or self.C_yy.shape != (m, m) or self.C_xy.shape != (n, m):
            raise DimensionMismatchError(
                f"Moment shapes inconsistent with n={n}, m={m}: C_xx {self.C_xx.shape}, "
                f"C_xy {self.C_xy.shape}, C_yy {self.C_yy.shape}"
            )
        require_positive_definite(self.C_yy, "C_yy")
        var = self.var_x
        if np.any(var <= 0):
            bad = np.flatnonzero(var <= 0).tolist()
            raise NotPositiveDefiniteError(
                f"Prior variances must be strictly positive, components {bad} are not", name="C_xx"
            )
        if info.context and info.context.get("strict"):
            self.check_block_psd()
        for arr in (self.mean_x, self.mean_y, self.C_xx, self.C_xy, self.C_yy):
            frozen(arr)
        return self

    @classmethod
    def validated(cls, *, strict: bool = False, **fields) -> JointGaussianModel:
        return cls.model_validate(fields, context={"strict": strict})

    def check_block_psd(self, tol: float = 1e-8) -> None:
        block = np.block([[self.C_xx, self.C_xy], [self.C_xy.conj().T, self.C_yy]])
        lam = min_eigenvalue(block)
        if lam < -tol:
            raise NotPositiveDefiniteError(
                f"Joint covariance of (x, y) is not positive semidefinite (smallest eigenvalue {lam:.3e})",
                name="joint",
                min_eigenvalue=lam,
            )

    @property
    def n(self) -> int:
        return self.mean_x.shape[0]

    @property
    def m(self) -> int:
        return self.mean_y.shape[0]

    @property
    def C_yx(self) -> np.ndarray:
        return self.C_xy.conj().T

    @property
    def var_x(self) -> np.ndarray:
        return np.real(np.diag(self.C_xx))


class LinearModel(BaseModel):
    """y = H·x + n with prior mean/covariance of x and zero-mean noise of covariance C_nn."""

    model_config = _FROZEN_ARRAYS

    H: ComplexArray
    mean_x: ComplexArray
    C_xx: ComplexArray
    C_nn: ComplexArray

    @field_validator("H", mode="before")
    @classmethod
    def convert_matrix(cls, v, info: ValidationInfo):
        return as_complex_matrix(v, info.field_name)

    @field_validator("mean_x", mode="before")
    @classmethod
    def convert_vector(cls, v, info: ValidationInfo):
        return as_complex_vector(v, info.field_name)

    @field_validator("C_xx", "C_nn", mode="before")
    @classmethod
    def convert_hermitian(cls, v, info: ValidationInfo):
        return hermitian_part(as_complex_matrix(v, info.field_name), info.field_name)

    @model_validator(mode="after")
    def check_model(self) -> LinearModel:
        m, n = self.H.shape
        if m < 1 or n < 1:
            raise DimensionMismatchError(f"H must be non-empty, got shape {self.H.shape}")
        if self.mean_x.shape != (n,) or self.C_xx.shape != (n, n) or self.C_nn.shape != (m, m):
            raise DimensionMismatchError(
                f"Model shapes inconsistent with H {self.H.shape}: mean_x {self.mean_x.shape}, "
                f"C_xx {self.C_xx.shape}, C_nn {self.C_nn.shape}"
            )
        require_positive_definite(self.C_nn, "C_nn")
        require_positive_semidefinite(self.C_xx, "C_xx")
        var = self.var_x
        if np.any(var <= 0):
            bad = np.flatnonzero(var <= 0).tolist()
            raise NotPositiveDefiniteError(
                f"Prior variances must be strictly positive, components {bad} are not", name="C_xx"
            )
        zero_cols = np.all(self.H == 0, axis=0)
        if np.any(zero_cols):
            # a zero column is still observable through prior correlation with observed components
            coupled = np.any(np.abs(self.H @ self.C_xx) > 0, axis=0)
            unobservable = np.flatnonzero(zero_cols & ~coupled).tolist()
            if unobservable:
                raise UnobservableComponentError(
                    f"Components {unobservable} have a zero column in H and no prior coupling",
                    components=unobservable,
                )
        for arr in (self.H, self.mean_x, self.C_xx, self.C_nn):
            frozen(arr)
        return self

    @property
    def n(self) -> int:
        return self.H.shape[1]

    @property
    def m(self) -> int:
        return self.H.shape[0]

    @property
    def var_x(self) -> np.ndarray:
        return np.real(np.diag(self.C_xx))

    @property
    def mean_y(self) -> np.ndarray:
        return self.H @ self.mean_x

    @property
    def C_yx(self) -> np.ndarray:
        return self.H @ self.C_xx

    @property
    def C_yy(self) -> np.ndarray:
        c_yy = self.H @ self.C_xx @ self.H.conj().T + self.C_nn
        return 0.5 * (c_yy + c_yy.conj().T)

    def off_diagonal_prior_entries(self, tol: float = DIAGONAL_TOL) -> list[tuple[int, int]]:
        off = np.abs(self.C_xx - np.diag(np.diag(self.C_xx))) > tol
        return [(int(i), int(j)) for i, j in zip(*np.nonzero(off)) if i < j]

    def is_diagonal_prior(self, tol: float = DIAGONAL_TOL) -> bool:
        return not self.off_diagonal_prior_entries(tol)

    def joint_moments(self) -> JointGaussianModel:
        """Moments of (x, y) induced by the linear model."""
        return JointGaussianModel(
            mean_x=self.mean_x,
            mean_y=self.mean_y,
            C_xx=self.C_xx,
            C_xy=self.C_xx @ self.H.conj().T,
            C_yy=self.C_yy,
        )


class AffineEstimator(BaseModel):
    """x̂ = E·y + c."""

    model_config = _FROZEN_ARRAYS

    E: ComplexArray
    c: ComplexArray
    kind: EstimatorKind
    label: str = ""

    @field_validator("E", mode="before")
    @classmethod
    def convert_matrix(cls, v):
        return as_complex_matrix(v, "E")

    @field_validator("c", mode="before")
    @classmethod
    def convert_vector(cls, v):
        return as_complex_vector(v, "c")

    @model_validator(mode="after")
    def check_shapes(self) -> AffineEstimator:
        if self.c.shape[0] != self.E.shape[0]:
            raise DimensionMismatchError(f"c has length {self.c.shape[0]}, E has {self.E.shape[0]} rows")
        frozen(self.E)
        frozen(self.c)
        return self

    @property
    def n(self) -> int:
        return self.E.shape[0]

    @property
    def m(self) -> int:
        return self.E.shape[1]

    def apply(self, y: np.ndarray) -> np.ndarray:
        """Apply to one observation (m,) or to a batch with trials along the last axis (m, k)."""
        y = np.asarray(y)
        if y.shape[0] != self.m:
            raise DimensionMismatchError(f"Observation has length {y.shape[0]}, estimator expects {self.m}")
        out = self.E @ y
        return out + (self.c if y.ndim == 1 else self.c[:, None])


class DiagonalGain(BaseModel):
    model_config = _FROZEN_ARRAYS

    d: RealArray

    @field_validator("d", mode="before")
    @classmethod
    def convert_real(cls, v):
        arr = np.array(v, dtype=float)
        if arr.ndim != 1 or not np.all(np.isfinite(arr)):
            raise DimensionMismatchError(f"D diagonal must be a finite real vector, got shape {arr.shape}")
        return frozen(arr)

    @property
    def matrix(self) -> np.ndarray:
        return np.diag(self.d)


class EstimatorPerformance(BaseModel):
    """Analytic error statistics; bmse = diag(error_cov) + |error_mean|²."""

    model_config = _FROZEN_ARRAYS

    error_cov: ComplexArray
    bmse: RealArray
    error_mean: ComplexArray
    kind: EstimatorKind | None = None
    label: str = ""


class SubspaceConstraint(BaseModel):
    """x = V·z for a full column rank V (n×p, p ≤ n)."""

    model_config = _FROZEN_ARRAYS

    V: ComplexArray

    @field_validator("V", mode="before")
    @classmethod
    def convert_matrix(cls, v):
        return as_complex_matrix(v, "V")

    @model_validator(mode="after")
    def check_rank(self) -> SubspaceConstraint:
        n, p = self.V.shape
        if p > n:
            raise DimensionMismatchError(f"V must have at most {n} columns, got {p}")
        s = np.linalg.svd(self.V, compute_uv=False)
        if s[-1] <= RANK_TOL * s[0]:
            raise DimensionMismatchError(f"V is not full column rank (singular values {s[-1]:.3e} / {s[0]:.3e})")
        frozen(self.V)
        return self

    @property
    def p(self) -> int:
        return self.V.shape[1]


class ComponentKind(StrEnum):
    COMPLEX_GAUSSIAN = "complex_gaussian"
    QPSK = "qpsk"
    UNIFORM_DISK = "uniform_disk"


class ComponentDistribution(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: ComponentKind
    var: PositiveFloat
    mean: complex = 0j

    @model_validator(mode="after")
    def check_qpsk_centered(self) -> ComponentDistribution:
        if self.kind is ComponentKind.QPSK and self.mean != 0:
            raise ValueError("QPSK components are zero-mean")
        return self


class GaussianPrior(BaseModel):
    model_config = _FROZEN_ARRAYS

    variant: Literal["gaussian"] = "gaussian"
    mean_x: ComplexArray
    C_xx: ComplexArray

    @field_validator("mean_x", mode="before")
    @classmethod
    def convert_vector(cls, v):
        return as_complex_vector(v, "mean_x")

    @field_validator("C_xx", mode="before")
    @classmethod
    def convert_hermitian(cls, v):
        return hermitian_part(as_complex_matrix(v, "C_xx"), "C_xx")

    @model_validator(mode="after")
    def check_shapes(self) -> GaussianPrior:
        n = self.mean_x.shape[0]
        if self.C_xx.shape != (n, n):
            raise DimensionMismatchError(f"C_xx must have shape {(n, n)}, got {self.C_xx.shape}")
        frozen(self.mean_x)
        frozen(self.C_xx)
        return self

    @property
    def n(self) -> int:
        return self.mean_x.shape[0]

    @property
    def mean(self) -> np.ndarray:
        return self.mean_x

    @property
    def covariance(self) -> np.ndarray:
        return self.C_xx


class IndependentPrior(BaseModel):
    model_config = ConfigDict(frozen=True)

    variant: Literal["independent"] = "independent"
    components: list[ComponentDistribution] = Field(min_length=1)

    @property
    def n(self) -> int:
        return len(self.components)

    @property
    def mean(self) -> np.ndarray:
        return np.array([comp.mean for comp in self.components], dtype=complex)

    @property
    def covariance(self) -> np.ndarray:
        return np.diag([comp.var for comp in self.components]).astype(complex)


PriorSpec = Annotated[GaussianPrior | IndependentPrior, Field(discriminator="variant")]


class TrialConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    n_trials: PositiveInt = 100_000
    seed: int = Field(default=0, ge=0, lt=2**64)
    n_workers: PositiveInt = 1
    chunk_size: PositiveInt = 10_000
    keep_pairs: NonNegativeInt = 0


class BandCheck(BaseModel):
    name: str
    component: int
    value: ComplexScalar
    expected: ComplexScalar
    stderr: float
    z: float
    passed: bool


class ConditionalBiasReport(BaseModel):
    """Per-component complex least-squares fit x̂_i ≈ slope_i·x_i + intercept_i."""

    model_config = _FROZEN_ARRAYS

    slope: ComplexArray
    intercept: ComplexArray
    slope_stderr: RealArray
    intercept_stderr: RealArray
    residual_variance: RealArray
    n_trials: int

    def band_checks(self, expected_slope, expected_intercept, n_sigma: float = 3.0) -> list[BandCheck]:
        checks = []
        for name, value, expected, stderr in (
            ("slope", self.slope, np.broadcast_to(expected_slope, self.slope.shape), self.slope_stderr),
            ("intercept", self.intercept, np.broadcast_to(expected_intercept, self.intercept.shape), self.intercept_stderr),
        ):
            for i in range(value.shape[0]):
                dev = abs(value[i] - expected[i])
                z = dev / stderr[i] if stderr[i] > 0 else (0.0 if dev == 0 else np.inf)
                checks.append(
                    BandCheck(
                        name=name,
                        component=i,
                        value=complex(value[i]),
                        expected=complex(expected[i]),
                        stderr=float(stderr[i]),
                        z=float(z),
                        passed=bool(z <= n_sigma),
                    )
                )
        return checks


class EmpiricalPerformance(BaseModel):
    model_config = _FROZEN_ARRAYS

    bmse: RealArray
    bmse_stderr: RealArray
    error_cov: ComplexArray
    error_cov_stderr: RealArray
    error_mean: ComplexArray
    n_trials: int
    label: str = ""


class EstimatorMonteCarloReport(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    label: str
    kind: EstimatorKind
    regression: ConditionalBiasReport
    empirical: EmpiricalPerformance
    analytic_bmse: RealArray
    bmse_z: RealArray
    bmse_within_band: bool
    checks: list[BandCheck]
    passed: bool


class MonteCarloReport(BaseModel):
    n_trials: int
    seed: int
    n_sigma: float
    estimators: list[EstimatorMonteCarloReport]
    passed: bool
