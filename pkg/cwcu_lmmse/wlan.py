"""
Channel estimation from the two long training symbols of an 802.11a/g/n preamble.

The averaged used-subcarrier observation is ȳ = D_p·Bᵀ·M_1·h + ñ with
C_ññ = (N·σ_n²/2)·I, where F_N is the unnormalized N-point DFT, B selects the
52 used subcarriers, D_p holds the ±1 preamble symbols and M_1 is the first
l_h columns of F_N. The CIR h has independent taps with an exponential power
delay profile.
"""

from __future__ import annotations

import logging

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, PositiveInt, field_validator, model_validator

from .estimators import (
    conditional_mean_coefficients,
    cwcu_linear_gaussian,
    generic_error_covariance,
)
from .exceptions import DimensionMismatchError, UninformativeComponentError
from .linalg import as_complex_vector, cholesky, frozen, max_rel_dev, solve_hpd
from .models import AffineEstimator, EstimatorKind, LinearModel, RealArray
from .synthetic import random_complex

logger = logging.getLogger(__name__)

USED_SUBCARRIERS = tuple(range(1, 27)) + tuple(range(38, 64))
# DC bin and guard band
NULL_SUBCARRIERS = frozenset({0, *range(27, 38)})
EQUAL_VARIANCE_TOL = 1e-9


class ChanestSetup(BaseModel):
    model_config = ConfigDict(frozen=True)

    N: PositiveInt = 64
    used: tuple[int, ...] = USED_SUBCARRIERS
    l_h: PositiveInt = 16
    T_s: PositiveFloat = 50e-9
    tau_rms: PositiveFloat = 100e-9
    sigma_n2: PositiveFloat = 0.01
    preamble_signs: tuple[int, ...] | None = None

    @field_validator("used")
    @classmethod
    def check_used(cls, v):
        if list(v) != sorted(set(v)):
            raise ValueError("used subcarrier indices must be strictly ascending")
        return v

    @field_validator("preamble_signs")
    @classmethod
    def check_signs(cls, v):
        if v is not None and any(s not in (-1, 1) for s in v):
            raise ValueError("preamble signs must be +1 or -1")
        return v

    @model_validator(mode="after")
    def check_setup(self) -> ChanestSetup:
        if self.l_h > self.N:
            raise ValueError(f"l_h={self.l_h} exceeds N={self.N}")
        if not self.used or self.used[0] < 0 or self.used[-1] >= self.N:
            raise ValueError(f"used subcarriers must lie in [0, {self.N})")
        if len(self.used) != len(USED_SUBCARRIERS):
            raise ValueError(f"expected {len(USED_SUBCARRIERS)} used subcarriers, got {len(self.used)}")
        if nulls := sorted(NULL_SUBCARRIERS.intersection(self.used)):
            raise ValueError(f"used subcarriers include the DC or guard-band bins {nulls}")
        if self.preamble_signs is not None and len(self.preamble_signs) != len(self.used):
            raise ValueError(f"expected {len(self.used)} preamble signs, got {len(self.preamble_signs)}")
        return self

    @property
    def n_used(self) -> int:
        return len(self.used)

    @property
    def signs(self) -> np.ndarray:
        if self.preamble_signs is None:
            return np.ones(self.n_used)
        return np.array(self.preamble_signs, dtype=float)

    @property
    def noise_variance(self) -> float:
        """Per-bin noise variance N·σ_n²/2 after the DFT and two-symbol averaging."""
        return self.N * self.sigma_n2 / 2.0


class ChannelPrior(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    variances: RealArray

    @property
    def C_hh(self) -> np.ndarray:
        return np.diag(self.variances).astype(complex)


class ChanestModelBundle(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    setup: ChanestSetup
    prior: ChannelPrior
    F_N: np.ndarray
    B: np.ndarray
    D_p: np.ndarray
    M_1: np.ndarray
    model: LinearModel

    def frequency_model(self) -> LinearModel:
        """x = h̃ (all N bins), H = D_p·Bᵀ, rank-l_h prior covariance M_1·C_hh·M_1ᴴ."""
        c = self.M_1 @ self.prior.C_hh @ self.M_1.conj().T
        return LinearModel(
            H=self.D_p @ self.B.T,
            mean_x=np.zeros(self.setup.N, dtype=complex),
            C_xx=0.5 * (c + c.conj().T),
            C_nn=self.model.C_nn,
        )

    def used_bin_model(self) -> LinearModel:
        """x = h̃_u (used bins only), H = D_p."""
        m_u = self.B.T @ self.M_1
        c = m_u @ self.prior.C_hh @ m_u.conj().T
        return LinearModel(
            H=self.D_p,
            mean_x=np.zeros(self.setup.n_used, dtype=complex),
            C_xx=0.5 * (c + c.conj().T),
            C_nn=self.model.C_nn,
        )


class BmseCurve(BaseModel):
    """Bayesian MSE per tap or subcarrier; NaN marks indices where the estimator is undefined."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    label: str
    axis: list[int]
    values: RealArray

    @model_validator(mode="after")
    def check_lengths(self) -> BmseCurve:
        if len(self.axis) != self.values.shape[0]:
            raise DimensionMismatchError(f"Curve {self.label}: {len(self.axis)} indices, {self.values.shape[0]} values")
        return self


def build_dft_matrix(N: int) -> np.ndarray:
    """Unnormalized DFT matrix, entry (k, l) = exp(−j·2π·k·l/N)."""
    k = np.arange(N)
    return np.exp(-2j * np.pi * np.outer(k, k) / N)


def build_carrier_selection(setup: ChanestSetup) -> np.ndarray:
    b = np.zeros((setup.N, setup.n_used))
    b[list(setup.used), np.arange(setup.n_used)] = 1.0
    return b


def build_pdp(setup: ChanestSetup) -> ChannelPrior:
    """σ_i² = (1 − exp(−T_s/τ_rms))·exp(−i·T_s/τ_rms), i = 0..l_h−1."""
    ratio = setup.T_s / setup.tau_rms
    i = np.arange(setup.l_h)
    return ChannelPrior(variances=frozen((1.0 - np.exp(-ratio)) * np.exp(-i * ratio)))


def assemble_model(setup: ChanestSetup) -> ChanestModelBundle:
    f_n = build_dft_matrix(setup.N)
    b = build_carrier_selection(setup)
    d_p = np.diag(setup.signs).astype(complex)
    m_1 = f_n[:, : setup.l_h]
    prior = build_pdp(setup)
    model = LinearModel(
        H=d_p @ b.T @ m_1,
        mean_x=np.zeros(setup.l_h, dtype=complex),
        C_xx=prior.C_hh,
        C_nn=setup.noise_variance * np.eye(setup.n_used),
    )
    for arr in (f_n, b, d_p, m_1):
        frozen(arr)
    logger.info(f"Assembled channel model: N={setup.N}, used={setup.n_used}, l_h={setup.l_h}, sigma_n2={setup.sigma_n2}")
    return ChanestModelBundle(setup=setup, prior=prior, F_N=f_n, B=b, D_p=d_p, M_1=m_1, model=model)


def preamble_time_domain(setup: ChanestSetup) -> np.ndarray:
    """Time-domain long training symbol x_p with F_N·x_p = ±1 on the used bins, 0 elsewhere."""
    spectrum = build_carrier_selection(setup) @ setup.signs
    return np.fft.ifft(spectrum)


def synthesize_received_preambles(
    setup: ChanestSetup, h: np.ndarray, rng: np.random.Generator | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """
    Two received symbols: circular convolution of x_p with the CIR plus, when an
    rng is given, complex white noise of variance σ_n² per time sample.
    """
    h = as_complex_vector(h, "h", setup.l_h)
    h_padded = np.zeros(setup.N, dtype=complex)
    h_padded[: setup.l_h] = h
    clean = np.fft.ifft(np.fft.fft(preamble_time_domain(setup)) * np.fft.fft(h_padded))
    if rng is None:
        return clean, clean.copy()
    scale = np.sqrt(setup.sigma_n2)
    return clean + scale * random_complex(rng, setup.N), clean + scale * random_complex(rng, setup.N)


def average_received_preambles(y1: np.ndarray, y2: np.ndarray, setup: ChanestSetup) -> np.ndarray:
    """ȳ = ½·Bᵀ·F_N·(y1 + y2)."""
    y1 = as_complex_vector(y1, "y1", setup.N)
    y2 = as_complex_vector(y2, "y2", setup.N)
    return 0.5 * build_carrier_selection(setup).T @ np.fft.fft(y1 + y2)


def time_domain_estimators(bundle: ChanestModelBundle) -> dict[str, AffineEstimator]:
    """
    CIR estimators from the specialized forms that rely on D_pᴴ·D_p = I and white noise:
    BLUE (M_1ᴴBBᵀM_1)⁻¹M_1ᴴBD_p⁻¹, LMMSE with the (Nσ_n²/2)·C_hh⁻¹ loading, and
    CWCU = D·LMMSE with [D]_ii = 1/(e_L,iᴴ·h_i).
    """
    setup, prior = bundle.setup, bundle.prior
    m_u = bundle.B.T @ bundle.M_1
    gram = m_u.conj().T @ m_u
    # D_p is diagonal with unit-modulus entries, so D_p⁻¹ = D_pᴴ
    matched = m_u.conj().T @ bundle.D_p.conj()
    blue = solve_hpd(cholesky(gram, "M_1^H B B^T M_1"), matched)
    loaded = gram + setup.noise_variance * np.diag(1.0 / prior.variances)
    lmmse = solve_hpd(cholesky(loaded, "LMMSE normal matrix"), matched)
    d = 1.0 / np.real(np.einsum("ij,ji->i", lmmse, bundle.model.H))
    zeros = np.zeros(setup.l_h, dtype=complex)
    logger.info("Built time-domain BLUE, LMMSE and CWCU channel estimators")
    return {
        "blue": AffineEstimator(E=blue, c=zeros, kind=EstimatorKind.B1, label="blue"),
        "lmmse": AffineEstimator(E=lmmse, c=zeros, kind=EstimatorKind.LMMSE, label="lmmse"),
        "cwcu": AffineEstimator(E=d[:, None] * lmmse, c=zeros, kind=EstimatorKind.CWCU_INDEPENDENT, label="cwcu"),
    }


def frequency_domain_estimators(bundle: ChanestModelBundle) -> dict[str, AffineEstimator]:
    """
    Frequency-response estimators. "trivial" estimates h̃_u on the used bins only;
    "blue" and "lmmse" map the CIR estimators through M_1; "cwcu" is built on the
    all-bin model with the singular prior M_1·C_hh·M_1ᴴ and is not M_1 times the
    time-domain CWCU estimator.
    """
    setup = bundle.setup
    freq_model = bundle.frequency_model()
    var = freq_model.var_x
    total = float(np.sum(bundle.prior.variances))
    if max_rel_dev(var, np.full_like(var, total)) > EQUAL_VARIANCE_TOL:
        raise DimensionMismatchError(f"Per-bin prior variances deviate from the tap power sum {total:.6f}")
    time = time_domain_estimators(bundle)
    try:
        cwcu, _ = cwcu_linear_gaussian(freq_model)
    except UninformativeComponentError:
        logger.error("Frequency-domain CWCU estimator reported an uninformative bin")
        raise
    n_zeros = np.zeros(setup.N, dtype=complex)
    logger.info("Built frequency-domain trivial, BLUE, LMMSE and CWCU channel estimators")
    return {
        "trivial": AffineEstimator(
            E=bundle.D_p.conj(), c=np.zeros(setup.n_used, dtype=complex), kind=EstimatorKind.TRIVIAL, label="trivial"
        ),
        "blue": AffineEstimator(E=bundle.M_1 @ time["blue"].E, c=n_zeros, kind=EstimatorKind.B2, label="blue"),
        "lmmse": AffineEstimator(E=bundle.M_1 @ time["lmmse"].E, c=n_zeros, kind=EstimatorKind.LMMSE, label="lmmse"),
        "cwcu": cwcu.model_copy(update={"label": "cwcu"}),
    }


def analytic_bmse_curves(bundle: ChanestModelBundle, which: str) -> list[BmseCurve]:
    """Per-tap ("time") or per-subcarrier ("freq") Bayesian MSEs of every estimator."""
    setup = bundle.setup
    if which == "time":
        axis = list(range(setup.l_h))
        return [
            BmseCurve(label=label, axis=axis, values=generic_error_covariance(bundle.model, est).bmse)
            for label, est in time_domain_estimators(bundle).items()
        ]
    if which != "freq":
        raise ValueError(f"which must be 'time' or 'freq', got {which!r}")
    axis = list(range(setup.N))
    freq_model = bundle.frequency_model()
    curves = []
    for label, est in frequency_domain_estimators(bundle).items():
        if est.kind is EstimatorKind.TRIVIAL:
            values = np.full(setup.N, np.nan)
            values[list(setup.used)] = generic_error_covariance(bundle.used_bin_model(), est).bmse
        else:
            values = generic_error_covariance(freq_model, est).bmse
        curves.append(BmseCurve(label=label, axis=axis, values=values))
    return curves


def regression_gains(bundle: ChanestModelBundle) -> dict[str, np.ndarray]:
    """Analytic conditional-mean slopes E[x̂_i|x_i] / x_i of the frequency-domain estimators per bin."""
    freq_model = bundle.frequency_model()
    gains = {}
    for label, est in frequency_domain_estimators(bundle).items():
        model = bundle.used_bin_model() if est.kind is EstimatorKind.TRIVIAL else freq_model
        gains[label], _ = conditional_mean_coefficients(model, est)
    return gains


TAP_CURVE_COLUMNS = ("tap_index", "bmse_blue", "bmse_lmmse", "bmse_cwcu")
SUBCARRIER_CURVE_COLUMNS = ("subcarrier", "bmse_blue", "bmse_lmmse", "bmse_cwcu", "bmse_trivial")


class ChanestSummary(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    sigma_n2: float
    max_blue_freq_bmse: float
    argmax_subcarrier: int
    mean_bmse_time: dict[str, float]
    mean_bmse_freq: dict[str, float]
    cwcu_lmmse_mean_ratio: float
    cwcu_lmmse_ratio_ok: bool
    ordering_ok: bool
    freq_cwcu_vs_mapped_time_cwcu: float = Field(
        description="max deviation between the frequency-domain CWCU matrix and M_1 times the time-domain one"
    )


MAX_CWCU_LMMSE_RATIO = 1.25
ORDERING_SLACK = 1e-9


def summarize(bundle: ChanestModelBundle, time_curves: list[BmseCurve], freq_curves: list[BmseCurve]) -> ChanestSummary:
    time_by = {c.label: c.values for c in time_curves}
    freq_by = {c.label: c.values for c in freq_curves}
    blue = freq_by["blue"]
    argmax = int(np.argmax(blue))
    ratio = float(np.mean(time_by["cwcu"] / time_by["lmmse"]))
    ordering_ok = all(
        bool(np.all(curves["lmmse"] <= curves["cwcu"] + ORDERING_SLACK))
        and bool(np.all(curves["cwcu"] <= curves["blue"] + ORDERING_SLACK))
        for curves in (time_by, freq_by)
    )
    mapped = bundle.M_1 @ time_domain_estimators(bundle)["cwcu"].E
    deviation = float(np.max(np.abs(frequency_domain_estimators(bundle)["cwcu"].E - mapped)))
    if ratio > MAX_CWCU_LMMSE_RATIO:
        logger.warning(f"Mean CWCU/LMMSE Bayesian MSE ratio {ratio:.4f} exceeds {MAX_CWCU_LMMSE_RATIO}")
    return ChanestSummary(
        sigma_n2=bundle.setup.sigma_n2,
        max_blue_freq_bmse=float(blue[argmax]),
        argmax_subcarrier=argmax,
        mean_bmse_time={label: float(np.mean(v)) for label, v in time_by.items()},
        mean_bmse_freq={label: float(np.nanmean(v)) for label, v in freq_by.items()},
        cwcu_lmmse_mean_ratio=ratio,
        cwcu_lmmse_ratio_ok=ratio <= MAX_CWCU_LMMSE_RATIO,
        ordering_ok=ordering_ok,
        freq_cwcu_vs_mapped_time_cwcu=deviation,
    )
