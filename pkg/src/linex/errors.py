"""Exception hierarchy shared by all modules."""


class LinexError(Exception):
    """Base class for all package errors."""


class ConfigError(LinexError):
    """A run configuration failed validation."""


class SchemaError(LinexError):
    """A data file does not match the expected CSV schema."""


class EmptyDatasetError(LinexError):
    """A dataset contains zero examples."""


class TrainError(LinexError):
    """A built-in model could not be trained on the given data."""


class BlackBoxError(LinexError):
    """A black-box query failed or returned invalid values."""


class SpawnError(BlackBoxError):
    """An external model process could not be started."""


class ProtocolError(BlackBoxError):
    """An external model violated the stdio wire protocol."""


class QueryTimeoutError(BlackBoxError):
    """An external model did not reply within the configured timeout."""


class SingularSystemError(LinexError):
    """An unregularized least-squares system was rank deficient."""


class InnerDivergenceError(LinexError):
    """The inner constrained solver increased its objective repeatedly."""


class DegenerateGammaError(LinexError):
    """All per-environment coefficients are zero; no box bound can be derived."""


class DegenerateClassError(LinexError):
    """A class has a constant mean-input or mean-attribution vector."""


class DegenerateVarianceError(LinexError):
    """Paired differences have zero variance; the t statistic is undefined."""
