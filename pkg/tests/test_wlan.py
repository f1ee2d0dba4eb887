import numpy as np
import pytest
from pydantic import ValidationError

from cwcu_lmmse.estimators import (
    blue_b1,
    blue_b2,
    cwcu_linear_independent,
    generic_error_covariance,
    lmmse_linear,
)
from cwcu_lmmse.exceptions import DimensionMismatchError
from cwcu_lmmse.linalg import max_abs_dev, max_rel_dev
from cwcu_lmmse.models import GaussianPrior, SubspaceConstraint
from cwcu_lmmse.montecarlo import MonteCarloRunner
from cwcu_lmmse.synthetic import random_complex, seeded_rng
from cwcu_lmmse.wlan import (
    USED_SUBCARRIERS,
    ChanestSetup,
    analytic_bmse_curves,
    assemble_model,
    average_received_preambles,
    build_carrier_selection,
    build_dft_matrix,
    build_pdp,
    frequency_domain_estimators,
    regression_gains,
    summarize,
    synthesize_received_preambles,
    time_domain_estimators,
)

# family-wise band for the many real-valued Bayesian MSE entries of the channel model
BMSE_BAND = 4.5


def curves_by_label(curves):
    return {curve.label: curve.values for curve in curves}


def test_setup_defaults():
    setup = ChanestSetup()
    assert setup.N == 64
    assert setup.n_used == 52
    assert setup.l_h == 16
    assert not set(setup.used) & {0, *range(27, 38)}
    assert setup.noise_variance == pytest.approx(0.32)
    assert np.array_equal(setup.signs, np.ones(52))


def test_setup_validation():
    with pytest.raises(ValidationError, match="exceeds"):
        ChanestSetup(l_h=65)
    with pytest.raises(ValidationError, match="preamble signs"):
        ChanestSetup(preamble_signs=(1,) * 10)
    with pytest.raises(ValidationError, match=r"\+1 or -1"):
        ChanestSetup(preamble_signs=(2,) * 52)
    with pytest.raises(ValidationError, match="ascending"):
        ChanestSetup(used=(3, 2, 1))
    with pytest.raises(ValidationError):
        ChanestSetup(sigma_n2=0.0)


def test_setup_rejects_null_subcarriers():
    with pytest.raises(ValidationError, match=r"DC or guard-band bins \[0\]"):
        ChanestSetup(used=(0, *range(2, 27), *range(38, 64)))
    with pytest.raises(ValidationError, match=r"DC or guard-band bins \[32\]"):
        ChanestSetup(used=(*range(1, 26), 32, *range(38, 64)))
    with pytest.raises(ValidationError, match="expected 52 used subcarriers, got 4"):
        ChanestSetup(used=(0, 1, 30, 32))


def test_dft_matrix():
    assert np.allclose(build_dft_matrix(2), [[1, 1], [1, -1]])
    f = build_dft_matrix(64)
    assert max_abs_dev(f.conj().T @ f, 64 * np.eye(64)) < 1e-9
    assert np.allclose(f[0], 1.0)
    assert np.allclose(f[:, 0], 1.0)


def test_carrier_selection():
    setup = ChanestSetup()
    b = build_carrier_selection(setup)
    assert b.shape == (64, 52)
    assert np.all(b.T @ np.eye(64)[0] == 0)
    assert np.array_equal(b.T @ np.eye(64)[1], np.eye(52)[0])
    assert np.array_equal(b.T @ b, np.eye(52))
    mask = b @ b.T
    assert np.array_equal(mask, np.diag(np.diag(mask)))
    assert np.trace(mask) == 52


def test_power_delay_profile():
    variances = build_pdp(ChanestSetup()).variances
    assert variances.shape == (16,)
    assert variances[0] == pytest.approx(1 - np.exp(-0.5))
    assert variances[0] == pytest.approx(0.393469, abs=1e-6)
    assert np.allclose(variances[:-1] / variances[1:], np.exp(0.5))
    assert variances.sum() == pytest.approx(0.999665, abs=1e-6)


def test_assemble_model(chanest_bundle):
    model = chanest_bundle.model
    assert (model.m, model.n) == (52, 16)
    assert np.allclose(np.sum(np.abs(model.H) ** 2, axis=0), 52.0)
    assert np.allclose(model.C_nn, 0.32 * np.eye(52))
    assert np.allclose(model.mean_x, 0.0)
    assert np.allclose(chanest_bundle.M_1.conj().T @ chanest_bundle.M_1, 64 * np.eye(16))
    assert np.allclose(chanest_bundle.D_p.conj().T @ chanest_bundle.D_p, np.eye(52))


def test_gram_is_sign_invariant(chanest_bundle):
    signs = tuple(int(s) for s in seeded_rng(30).choice([-1, 1], size=52))
    other = assemble_model(ChanestSetup(preamble_signs=signs))
    h, h_other = chanest_bundle.model.H, other.model.H
    assert max_abs_dev(h.conj().T @ h, h_other.conj().T @ h_other) < 1e-9


def test_average_received_preambles_identical_symbols():
    setup = ChanestSetup()
    y = random_complex(seeded_rng(31), 64)
    single = build_carrier_selection(setup).T @ np.fft.fft(y)
    assert max_abs_dev(average_received_preambles(y, y, setup), single) < 1e-9


def test_average_received_preambles_cancel():
    setup = ChanestSetup()
    y = random_complex(seeded_rng(32), 64)
    assert max_abs_dev(average_received_preambles(y, -y, setup), 0.0) < 1e-12


def test_average_received_preambles_length_mismatch():
    with pytest.raises(DimensionMismatchError):
        average_received_preambles(np.ones(63), np.ones(64), ChanestSetup())


def test_noiseless_preambles_follow_model():
    signs = tuple(int(s) for s in seeded_rng(33).choice([-1, 1], size=52))
    bundle = assemble_model(ChanestSetup(preamble_signs=signs))
    h = random_complex(seeded_rng(34), 16)
    y1, y2 = synthesize_received_preambles(bundle.setup, h)
    y_bar = average_received_preambles(y1, y2, bundle.setup)
    assert max_rel_dev(y_bar, bundle.model.H @ h) < 1e-9


def test_noisy_preambles_noise_variance(chanest_bundle):
    setup = chanest_bundle.setup
    rng = seeded_rng(35)
    residuals = []
    for _ in range(2000):
        h = random_complex(rng, 16)
        y1, y2 = synthesize_received_preambles(setup, h, rng)
        residuals.append(average_received_preambles(y1, y2, setup) - chanest_bundle.model.H @ h)
    assert np.mean(np.abs(np.array(residuals)) ** 2) == pytest.approx(0.32, rel=0.05)


def test_time_domain_estimators_match_general_constructions(chanest_bundle):
    model = chanest_bundle.model
    estimators = time_domain_estimators(chanest_bundle)
    assert set(estimators) == {"blue", "lmmse", "cwcu"}
    assert max_rel_dev(estimators["blue"].E, blue_b1(model).E) < 1e-8
    assert max_rel_dev(estimators["lmmse"].E, lmmse_linear(model).E) < 1e-8
    assert max_rel_dev(estimators["cwcu"].E, cwcu_linear_independent(model)[0].E) < 1e-8


def test_time_domain_unbiasedness(chanest_bundle):
    model = chanest_bundle.model
    estimators = time_domain_estimators(chanest_bundle)
    assert max_abs_dev(estimators["blue"].E @ model.H, np.eye(16)) < 1e-9
    assert max_abs_dev(np.diag(estimators["cwcu"].E @ model.H), 1.0) < 1e-9


def test_frequency_blue_equals_subspace_blue(chanest_bundle):
    freq_model = chanest_bundle.frequency_model()
    b2 = blue_b2(freq_model, SubspaceConstraint(V=chanest_bundle.M_1))
    assert max_rel_dev(frequency_domain_estimators(chanest_bundle)["blue"].E, b2.E) < 1e-8


def test_frequency_trivial_estimator(chanest_bundle):
    trivial = frequency_domain_estimators(chanest_bundle)["trivial"]
    assert trivial.E.shape == (52, 52)
    assert max_abs_dev(trivial.E @ chanest_bundle.D_p, np.eye(52)) < 1e-12


def test_frequency_cwcu_is_not_mapped_time_cwcu(chanest_bundle):
    freq = frequency_domain_estimators(chanest_bundle)["cwcu"]
    mapped = chanest_bundle.M_1 @ time_domain_estimators(chanest_bundle)["cwcu"].E
    assert freq.E.shape == (64, 52)
    assert np.max(np.abs(freq.E - mapped)) > 1e-3


def test_frequency_prior_variances_equal_tap_power(chanest_bundle):
    var = chanest_bundle.frequency_model().var_x
    assert np.allclose(var, chanest_bundle.prior.variances.sum())


def test_regression_gains(chanest_bundle):
    gains = regression_gains(chanest_bundle)
    assert max_abs_dev(gains["cwcu"], 1.0) < 1e-9
    assert max_abs_dev(gains["blue"][list(USED_SUBCARRIERS)], 1.0) < 1e-9
    assert max_abs_dev(gains["trivial"], 1.0) < 1e-9
    assert np.all(np.abs(gains["lmmse"]) < 1.0)


def test_frequency_blue_peak(chanest_bundle):
    blue = curves_by_label(analytic_bmse_curves(chanest_bundle, "freq"))["blue"]
    assert int(np.argmax(blue)) == 32
    assert 32.4 <= blue[32] <= 39.6


def test_curve_ordering(chanest_bundle):
    for which in ("time", "freq"):
        curves = curves_by_label(analytic_bmse_curves(chanest_bundle, which))
        assert np.all(curves["lmmse"] <= curves["cwcu"] + 1e-9)
        assert np.all(curves["cwcu"] <= curves["blue"] + 1e-9)


def test_curve_axes(chanest_bundle):
    time_curves = analytic_bmse_curves(chanest_bundle, "time")
    freq_curves = analytic_bmse_curves(chanest_bundle, "freq")
    assert [c.label for c in time_curves] == ["blue", "lmmse", "cwcu"]
    assert [c.label for c in freq_curves] == ["trivial", "blue", "lmmse", "cwcu"]
    assert all(c.axis == list(range(16)) for c in time_curves)
    assert all(c.axis == list(range(64)) for c in freq_curves)


def test_curves_reject_unknown_domain(chanest_bundle):
    with pytest.raises(ValueError, match="time"):
        analytic_bmse_curves(chanest_bundle, "space")


def test_trivial_curve(chanest_bundle):
    trivial = curves_by_label(analytic_bmse_curves(chanest_bundle, "freq"))["trivial"]
    used = list(USED_SUBCARRIERS)
    assert np.allclose(trivial[used], 0.32)
    unused = [k for k in range(64) if k not in USED_SUBCARRIERS]
    assert np.all(np.isnan(trivial[unused]))


def test_curves_are_sign_invariant(chanest_bundle):
    signs = tuple(int(s) for s in seeded_rng(36).choice([-1, 1], size=52))
    other = assemble_model(ChanestSetup(preamble_signs=signs))
    for which in ("time", "freq"):
        base = curves_by_label(analytic_bmse_curves(chanest_bundle, which))
        flipped = curves_by_label(analytic_bmse_curves(other, which))
        for label, values in base.items():
            finite = np.isfinite(values)
            assert max_rel_dev(flipped[label][finite], values[finite]) < 1e-10


def test_curves_decrease_with_noise_power(chanest_bundle):
    quiet = assemble_model(ChanestSetup(sigma_n2=1e-4))
    for which in ("time", "freq"):
        base = curves_by_label(analytic_bmse_curves(chanest_bundle, which))
        lower = curves_by_label(analytic_bmse_curves(quiet, which))
        for label, values in base.items():
            finite = np.isfinite(values)
            assert np.all(lower[label][finite] < values[finite])


def test_summary(chanest_bundle):
    summary = summarize(
        chanest_bundle,
        analytic_bmse_curves(chanest_bundle, "time"),
        analytic_bmse_curves(chanest_bundle, "freq"),
    )
    assert summary.argmax_subcarrier == 32
    assert 32.4 <= summary.max_blue_freq_bmse <= 39.6
    assert summary.ordering_ok
    assert summary.cwcu_lmmse_mean_ratio >= 1.0
    assert summary.cwcu_lmmse_ratio_ok == (summary.cwcu_lmmse_mean_ratio <= 1.25)
    assert summary.freq_cwcu_vs_mapped_time_cwcu > 1e-3
    assert set(summary.mean_bmse_freq) == {"trivial", "blue", "lmmse", "cwcu"}
    assert summary.mean_bmse_freq["trivial"] == pytest.approx(0.32)


def test_time_domain_monte_carlo(chanest_bundle):
    model = chanest_bundle.model
    estimators = list(time_domain_estimators(chanest_bundle).values())
    prior = GaussianPrior(mean_x=model.mean_x, C_xx=model.C_xx)
    report = MonteCarloRunner(n_trials=100_000, seed=40).check(model, prior, estimators)
    assert report.passed
    assert report.n_sigma == 3.0
    assert [r.label for r in report.estimators] == ["blue", "lmmse", "cwcu"]
    for est, est_report in zip(estimators, report.estimators):
        assert np.allclose(est_report.analytic_bmse, generic_error_covariance(model, est).bmse)
        assert np.all(est_report.bmse_z <= BMSE_BAND)


def test_frequency_cwcu_monte_carlo(chanest_bundle):
    freq_model = chanest_bundle.frequency_model()
    cwcu = frequency_domain_estimators(chanest_bundle)["cwcu"]
    prior = GaussianPrior(mean_x=freq_model.mean_x, C_xx=freq_model.C_xx)
    report = MonteCarloRunner(n_trials=100_000, seed=41).check(freq_model, prior, [cwcu])
    assert report.passed
    assert report.estimators[0].regression.slope.shape == (64,)
    assert np.all(report.estimators[0].bmse_z <= BMSE_BAND)


def test_frequency_domain_monte_carlo_bmse(chanest_bundle):
    freq_model = chanest_bundle.frequency_model()
    estimators = frequency_domain_estimators(chanest_bundle)
    mapped = [estimators["blue"], estimators["lmmse"]]
    prior = GaussianPrior(mean_x=freq_model.mean_x, C_xx=freq_model.C_xx)
    report = MonteCarloRunner(n_trials=100_000, seed=42).check(freq_model, prior, mapped)
    assert [r.label for r in report.estimators] == ["blue", "lmmse"]
    for est, est_report in zip(mapped, report.estimators):
        assert np.allclose(est_report.analytic_bmse, generic_error_covariance(freq_model, est).bmse)
        assert np.all(est_report.bmse_z <= BMSE_BAND)


def test_trivial_estimator_monte_carlo_bmse(chanest_bundle):
    used_model = chanest_bundle.used_bin_model()
    trivial = frequency_domain_estimators(chanest_bundle)["trivial"]
    prior = GaussianPrior(mean_x=used_model.mean_x, C_xx=used_model.C_xx)
    report = MonteCarloRunner(n_trials=100_000, seed=43).check(used_model, prior, [trivial])
    est_report = report.estimators[0]
    assert np.allclose(est_report.analytic_bmse, 0.32)
    assert np.all(est_report.bmse_z <= BMSE_BAND)
