import pytest

from cwcu_lmmse.exceptions import (
    CwcuError,
    CwcuModelError,
    CwcuNumericalError,
    CwcuValidationError,
    DegenerateRegressorError,
    DimensionMismatchError,
    FactorizationFailureError,
    InconsistentPriorError,
    InsufficientSamplesError,
    NotDiagonalPriorError,
    NotHermitianError,
    NotPositiveDefiniteError,
    RankDeficientError,
    SingularCovarianceError,
    UninformativeComponentError,
    UnobservableComponentError,
)


def test_base_exception():
    error = CwcuError("test error")
    assert str(error) == "test error"
    assert isinstance(error, Exception)
    assert error.code == "cwcu_error"


def test_not_hermitian_error():
    error = NotHermitianError("not hermitian", name="C_xx", deviation=0.5)
    assert str(error) == "not hermitian"
    assert error.name == "C_xx"
    assert error.deviation == 0.5
    assert isinstance(error, CwcuModelError)


def test_not_hermitian_error_without_optional_params():
    error = NotHermitianError("not hermitian")
    assert error.name is None
    assert error.deviation is None


def test_not_positive_definite_error():
    error = NotPositiveDefiniteError("not pd", name="C_nn", min_eigenvalue=-1.0)
    assert error.name == "C_nn"
    assert error.min_eigenvalue == -1.0
    assert isinstance(error, CwcuModelError)


def test_unobservable_component_error():
    error = UnobservableComponentError("zero column", components=[2])
    assert error.components == [2]
    assert UnobservableComponentError("zero column").components == []


def test_not_diagonal_prior_error():
    error = NotDiagonalPriorError("not diagonal", components=[(0, 1)])
    assert error.components == [(0, 1)]
    assert error.code == "not_diagonal_prior"


def test_model_errors_share_base():
    for cls in (DimensionMismatchError, InconsistentPriorError):
        error = cls("bad model")
        assert isinstance(error, CwcuModelError)
        assert isinstance(error, CwcuError)


def test_numerical_errors():
    assert SingularCovarianceError("singular", name="C_yy").name == "C_yy"
    assert RankDeficientError("rank", condition_number=1e13).condition_number == 1e13
    assert FactorizationFailureError("failed", name="C_nn").name == "C_nn"
    assert UninformativeComponentError("no info", component=3).component == 3
    assert DegenerateRegressorError("degenerate", component=1).component == 1
    error = InsufficientSamplesError("too few", n_samples=10, required=1000)
    assert error.n_samples == 10
    assert error.required == 1000
    assert isinstance(error, CwcuNumericalError)


def test_validation_error():
    error = CwcuValidationError("bad file", line=3, column=7, location="H")
    assert str(error) == "bad file"
    assert error.line == 3
    assert error.column == 7
    assert error.location == "H"
    assert error.code == "invalid_input_file"
    assert not isinstance(error, CwcuModelError)


def test_codes_are_unique():
    classes = [
        CwcuError,
        CwcuModelError,
        CwcuNumericalError,
        CwcuValidationError,
        NotHermitianError,
        NotPositiveDefiniteError,
        DimensionMismatchError,
        UnobservableComponentError,
        NotDiagonalPriorError,
        InconsistentPriorError,
        SingularCovarianceError,
        RankDeficientError,
        FactorizationFailureError,
        UninformativeComponentError,
        DegenerateRegressorError,
        InsufficientSamplesError,
    ]
    codes = [cls.code for cls in classes]
    assert len(set(codes)) == len(codes)


def test_exception_catching():
    with pytest.raises(CwcuError):
        raise RankDeficientError("rank deficient")

    with pytest.raises(CwcuModelError):
        raise NotHermitianError("not hermitian")

    with pytest.raises(CwcuNumericalError):
        raise UninformativeComponentError("no info")
