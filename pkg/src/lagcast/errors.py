"""Exception hierarchy.

Every error raised by the package derives from :class:`LagcastError` and is
either a :class:`ValidationError` (bad input, CLI exit code 1) or a
:class:`NumericalError` (estimation failure, CLI exit code 2).
"""


class LagcastError(Exception):
    exit_code = 2


class ValidationError(LagcastError, ValueError):
    exit_code = 1


class NumericalError(LagcastError, ArithmeticError):
    exit_code = 2


# panel-core
class UnknownCanton(ValidationError, KeyError):
    def __str__(self):
        return f"unknown canton: {self.args[0]!r}"


class ZeroNationalCases(ValidationError):
    def __init__(self, month):
        super().__init__(f"national cases are zero in {month}; relative risk undefined")
        self.month = month


class MissingMonths(ValidationError):
    def __init__(self, canton, months, table=None):
        where = f" in {table} table" if table else ""
        listed = ", ".join(str(m) for m in months)
        super().__init__(f"canton {canton!r} is missing months{where}: {listed}")
        self.canton = canton
        self.months = list(months)
        self.table = table


class DuplicateKey(ValidationError):
    pass


class LagTooLarge(ValidationError):
    pass


# basis
class KnotsOutOfRange(ValidationError):
    pass


class DegenerateBoundary(ValidationError):
    pass


# zadist
class NegativeY(ValidationError):
    pass


# gamlss
class RankDeficient(NumericalError):
    def __init__(self, columns):
        super().__init__("design is rank deficient; offending columns: " + ", ".join(columns))
        self.columns = list(columns)


class MisalignedInputs(ValidationError):
    pass


class AllZeroResponse(ValidationError):
    pass


class NonConvergence(NumericalError):
    def __init__(self, iterations, grad_norm):
        super().__init__(f"no convergence after {iterations} iterations (gradient norm {grad_norm:.3g})")
        self.iterations = iterations
        self.grad_norm = grad_norm


class ColumnMismatch(ValidationError):
    pass


class NoZeroObservationsWarning(UserWarning):
    """No zeros in the response: the zero-probability MLE is pinned to 1/(2n)."""


# forest
class EmptyDesign(ValidationError):
    pass


class WidthMismatch(ValidationError):
    pass


class NoOobRows(ValidationError):
    pass


class DegenerateResponseWarning(UserWarning):
    pass


# var-forecast
class InsufficientData(ValidationError):
    pass


class SingularRegressors(NumericalError):
    pass


class HorizonZero(ValidationError):
    pass


class UnstableModelWarning(UserWarning):
    pass


# metrics
class ZeroMeanRisk(ValidationError):
    pass


class InvalidAlpha(ValidationError):
    pass


class MisalignedScores(ValidationError):
    pass


# pipeline
class HorizonExceedsVar(ValidationError):
    pass


class TooFewResiduals(ValidationError):
    pass


class MissingObservations(ValidationError):
    pass


class UnstableGenerator(ValidationError):
    pass


class PreconditionError(ValidationError):
    pass


# cli-io
class ParseError(ValidationError):
    def __init__(self, line, message):
        super().__init__(f"line {line}: {message}")
        self.line = line


class UnknownKey(ValidationError):
    pass


class ConstraintViolation(ValidationError):
    pass


class HeaderMismatch(ValidationError):
    pass


class NonNumericField(ValidationError):
    def __init__(self, path, row, message):
        super().__init__(f"{path}, row {row}: {message}")
        self.row = row


class MissingArtifact(ValidationError):
    pass
