"""Exception hierarchy shared by all mixedgm modules.

Two branches matter for callers: `ValidationError` marks bad inputs that
should be rejected before any real work happens, while `ComputationError`
marks failures that occur during otherwise well-posed work. The command
line maps the former to exit code 1 and the latter to exit code 2.
"""


class MixedGMError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(MixedGMError):
    """Invalid input: bad dimensions, schema, configuration, or data."""


class DimensionError(ValidationError):
    """Array shapes or index ranges do not match the declared dimensions."""


class SchemaError(ValidationError):
    """A dataset or file does not conform to its column schema."""


class EnumerationCapError(ValidationError):
    """An operation would enumerate more binary cells than its cap allows."""


class InfeasibleSpecError(ValidationError):
    """A generation spec asks for a graph that cannot exist."""


class ComputationError(MixedGMError):
    """A well-posed computation failed at run time."""


class NotPositiveDefiniteError(ComputationError):
    """A cell precision matrix is not positive definite."""


class BudgetExhaustedError(ComputationError):
    """Rejection sampling used up its attempt budget without success."""


class SolverError(ComputationError):
    """The penalized regression solver could not produce a usable fit."""


class DegenerateFitError(ComputationError):
    """A fitted regression is degenerate, e.g. zero residual variance."""


class DegenerateColumnError(ValidationError):
    """A column cannot support its regression, e.g. a single-class response."""
