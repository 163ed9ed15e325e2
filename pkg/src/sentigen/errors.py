"""Exception hierarchy shared by all sentigen modules.

Every error carries an ``exit_code`` so the CLI can map failures to its
documented process exit codes: 2 for input errors, 3 for numeric failures,
4 for artifact mismatches.
"""


class SentigenError(Exception):
    exit_code = 2


class OverlapError(SentigenError):
    """A token occurs in both the positive and the negative lexicon file."""


class EmptyLexiconError(SentigenError):
    """A lexicon polarity set is empty after filtering."""


class InsufficientDataError(SentigenError):
    """Too few distinct posts to perform a three-way split."""


class LengthError(SentigenError):
    """A sequence exceeds the configured maximum length."""


class EmptyResponseError(SentigenError):
    """An instance has an empty response sequence."""


class EmptyInputError(SentigenError):
    """A metric was asked to aggregate over zero items."""


class ZeroDenominatorError(SentigenError):
    """No n-grams exist at the requested order."""


class ShapeError(SentigenError):
    """Operand shapes are incompatible for a tensor operation."""


class NonFiniteError(SentigenError):
    """A NaN or Inf value appeared in a tensor computation."""

    exit_code = 3


class ModelMismatchError(SentigenError):
    """Checkpoint architecture does not match what the caller requested."""

    exit_code = 4


class CheckpointFormatError(SentigenError):
    """Checkpoint file is corrupt or has an unknown layout."""

    exit_code = 4
