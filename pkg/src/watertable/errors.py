"""Exception types shared across the pipeline."""


class WatertableError(Exception):
    """Base class for all pipeline errors."""


# --- ingest ---------------------------------------------------------------

class MalformedHeader(WatertableError):
    """CSV header does not match the documented schema."""


class DuplicateStationId(WatertableError):
    """Two rows in one network declare the same station_id."""


# --- spatial join ---------------------------------------------------------

class EmptyNetwork(WatertableError):
    """A network required for matching has no stations."""


# --- labeling -------------------------------------------------------------

class InsufficientHistory(WatertableError):
    """A well has fewer level observations than the configured minimum."""


class MissingThresholds(WatertableError):
    """A well to be labeled has no fitted thresholds."""


# --- features -------------------------------------------------------------

class UnsortedSeries(WatertableError):
    """Rolling-window input not sorted by date."""


class SchemaMismatch(WatertableError):
    """Feature rows do not conform to the expected schema."""


class AllMissingColumn(WatertableError):
    """A numeric column has no observed values, so its median is undefined."""


# --- learner --------------------------------------------------------------

class EmptyClass(WatertableError):
    """Stratified splitting requires at least one row per class."""


class DegenerateData(WatertableError):
    """Training data cannot support a meaningful fit (e.g. single class)."""


class FoldTooSmall(WatertableError):
    """K-fold assignment would leave a fold without enough rows."""


# --- evaluation -----------------------------------------------------------

class LengthMismatch(WatertableError):
    """True and predicted label vectors differ in length."""


class EmptyMatrix(WatertableError):
    """Metrics requested for an empty confusion matrix."""


# --- scenario -------------------------------------------------------------

class UnknownVariable(WatertableError):
    """Scenario perturbation references a variable absent from the forcing data."""


# --- cli ------------------------------------------------------------------

class MissingUpstreamArtifact(WatertableError):
    """A subcommand requires an artifact its upstream stage has not produced."""


class ConfigValidation(WatertableError):
    """Run configuration failed validation."""


class RunDirLocked(WatertableError):
    """Another command currently holds the run-directory lock."""
