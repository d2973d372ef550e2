"""Exception hierarchy shared by the whole pipeline.

Exit-code mapping used by the CLI: InputError -> 2, ContractError -> 3,
anything else -> 4.
"""


class HeightcastError(Exception):
    """Base class for all pipeline errors."""


class InputError(HeightcastError):
    """Unreadable, malformed, or missing input data."""


class ContractError(HeightcastError):
    """A cross-stage contract was violated (e.g. feature manifest mismatch)."""


class ProjectionError(InputError):
    """Point outside the valid range of the local projection."""


class EmptyNetworkError(InputError):
    """A street file yielded no usable linestrings."""


class FeatureError(HeightcastError):
    """A morphometric feature could not be computed."""


class InsideBuildingError(HeightcastError):
    """A camera position lies strictly inside a footprint."""


class NoDetectionsError(HeightcastError):
    """A detection set retained no windows or doors above the confidence cut."""


class AvailabilityError(HeightcastError):
    """A training-set request exceeds the available labelled rows."""


class TrainingError(HeightcastError):
    """A regressor could not be fitted on the given dataset."""


class EvaluationError(HeightcastError):
    """Metrics are undefined for the given prediction/truth vectors."""


class ExportError(HeightcastError):
    """A city-model file could not be produced."""
