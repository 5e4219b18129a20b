"""Exception hierarchy shared by every pipeline stage.

Three broad families map onto CLI exit codes: configuration problems
(exit 2), data problems in the inputs (exit 3), and integrity violations
such as duplicate keys or manifest mismatches (exit 4).
"""


class EdBenchError(Exception):
    """Base class for all package-specific errors."""

    exit_code = 1


class ConfigError(EdBenchError):
    """Bad or inconsistent configuration."""

    exit_code = 2


class DataError(EdBenchError):
    """Malformed or unusable input data."""

    exit_code = 3


class IntegrityError(EdBenchError):
    """Internal consistency violation (keys, manifests, degenerate inputs)."""

    exit_code = 4


# -- ingest ---------------------------------------------------------------

class MissingColumn(DataError):
    """A required header is absent from a CSV table."""


class MalformedRow(DataError):
    """A row has the wrong number of fields."""


class BadTimestamp(DataError):
    """A non-empty timestamp cell in a root-table time field failed to parse."""


class DuplicateKey(IntegrityError):
    """Two rows share a primary key that must be unique."""


# -- comorbidity ----------------------------------------------------------

class UnknownVersion(DataError):
    """A diagnosis row carries an ICD version other than 9 or 10."""


# -- scores ---------------------------------------------------------------

class NoBand(DataError):
    """A value fell outside every band of a score component."""


class BadAcuity(DataError):
    """Triage acuity outside the 1..5 scale."""


# -- clean/split ----------------------------------------------------------

class AllMissingColumn(DataError):
    """An imputer was asked to fit a column with no observed values."""


# -- models ---------------------------------------------------------------

class NonFiniteLoss(IntegrityError):
    """Training produced a NaN or infinite loss."""


class ManifestMismatch(IntegrityError):
    """Feature matrix columns do not match the manifest a model was trained on."""


class WrongKind(IntegrityError):
    """An operation was applied to a model kind it does not support."""


class DegenerateLabels(UserWarning):
    """Training labels contain a single class; the model degenerates to a
    constant predictor."""


# -- evaluate -------------------------------------------------------------

class OneClassOnly(DataError):
    """A ranking metric needs both classes present."""


class NoPositives(DataError):
    """Average precision is undefined without positive labels."""


class ResampleExhausted(DataError):
    """Bootstrap could not draw enough two-class resamples."""
