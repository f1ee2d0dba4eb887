class CwcuError(Exception):
    code = "cwcu_error"


class CwcuModelError(CwcuError):
    code = "invalid_model"


class NotHermitianError(CwcuModelError):
    code = "not_hermitian"

    def __init__(self, message: str, name: str | None = None, deviation: float | None = None):
        self.name = name
        self.deviation = deviation
        super().__init__(message)


class NotPositiveDefiniteError(CwcuModelError):
    code = "not_positive_definite"

    def __init__(self, message: str, name: str | None = None, min_eigenvalue: float | None = None):
        self.name = name
        self.min_eigenvalue = min_eigenvalue
        super().__init__(message)


class DimensionMismatchError(CwcuModelError):
    code = "dimension_mismatch"


class UnobservableComponentError(CwcuModelError):
    code = "unobservable_component"

    def __init__(self, message: str, components: list[int] | None = None):
        self.components = components or []
        super().__init__(message)


class NotDiagonalPriorError(CwcuModelError):
    code = "not_diagonal_prior"

    def __init__(self, message: str, components: list[tuple[int, int]] | None = None):
        self.components = components or []
        super().__init__(message)


class InconsistentPriorError(CwcuModelError):
    code = "inconsistent_prior"


class CwcuNumericalError(CwcuError):
    code = "numerical_error"


class SingularCovarianceError(CwcuNumericalError):
    code = "singular_covariance"

    def __init__(self, message: str, name: str | None = None):
        self.name = name
        super().__init__(message)


class RankDeficientError(CwcuNumericalError):
    code = "rank_deficient"

    def __init__(self, message: str, condition_number: float | None = None):
        self.condition_number = condition_number
        super().__init__(message)


class FactorizationFailureError(CwcuNumericalError):
    code = "factorization_failure"

    def __init__(self, message: str, name: str | None = None):
        self.name = name
        super().__init__(message)


class UninformativeComponentError(CwcuNumericalError):
    code = "uninformative_component"

    def __init__(self, message: str, component: int | None = None):
        self.component = component
        super().__init__(message)


class DegenerateRegressorError(CwcuNumericalError):
    code = "degenerate_regressor"

    def __init__(self, message: str, component: int | None = None):
        self.component = component
        super().__init__(message)


class InsufficientSamplesError(CwcuNumericalError):
    code = "insufficient_samples"

    def __init__(self, message: str, n_samples: int | None = None, required: int | None = None):
        self.n_samples = n_samples
        self.required = required
        super().__init__(message)


class CwcuValidationError(CwcuError):
    code = "invalid_input_file"

    def __init__(
        self,
        message: str,
        line: int | None = None,
        column: int | None = None,
        location: str | None = None,
    ):
        self.line = line
        self.column = column
        self.location = location
        super().__init__(message)
