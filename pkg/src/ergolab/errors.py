"""Exception hierarchy.

Every error raised on purpose by the library derives from :class:`ErgolabError`;
the CLI maps :class:`ValidationError` subclasses to exit status 2 and anything
else to exit status 3.
"""


class ErgolabError(Exception):
    """Base class for all library errors."""


class ValidationError(ErgolabError, ValueError):
    """Inputs violate a documented precondition."""


class DistinctSpaceError(ValidationError):
    """Two labelings are not defined over the same atoms."""


class InsufficientDataError(ValidationError):
    """A word is too short for the requested block length."""


class IncompatibleDistributionError(ValidationError):
    """Block distributions of different lengths were compared."""


class LengthMismatchError(ValidationError):
    pass


class AlphabetError(ValidationError):
    """A symbol lies outside the declared alphabet."""


class ModelError(ValidationError):
    """Model parameters are invalid (non-stochastic, reducible, periodic, ...)."""


class NullConditioningError(ErgolabError):
    """Conditioning on a cylinder of measure zero."""


class ImpossiblePathError(ErgolabError):
    """A path prefix has zero measure under the model it is evaluated with."""


class CapacityError(ErgolabError):
    """An exhaustive enumeration would exceed its hard size guard."""


class InternalConsistencyError(ErgolabError):
    """A quantity that holds by construction failed to hold."""


class InfeasibleTowerError(ValidationError):
    pass


class EpsilonTooLargeError(ValidationError):
    """The overwrite coefficient is undefined or not below one."""


class BudgetExceededError(ErgolabError):
    """The recoding layout does not fit below the overwrite height."""

    def __init__(self, message, minimal_height=None):
        super().__init__(message)
        self.minimal_height = minimal_height


class CodebookError(ErgolabError):
    """A prefix or index is missing from the shared codebook."""


class DesyncError(ErgolabError):
    """The base marker pattern of a recoded column is malformed."""


class CorruptionError(ErgolabError):
    """A decoded rank or index lies outside its codebook."""


class AtypicalColumnError(ErgolabError):
    """A column name lies outside the relative typical set."""

    def __init__(self, message, column=None):
        super().__init__(message)
        self.column = column


class UnsupportedNameError(ErgolabError):
    """No conditional distribution is available for a column name."""
