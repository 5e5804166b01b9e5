"""Exception types shared across the engine.

Every error carries a stable ``code`` string so the CLI and HTTP layer can
report machine-readable failures without string-matching messages.
"""


class WordspotError(Exception):
    """Base class for all engine errors."""

    code = "error"


class DegenerateWordError(WordspotError):
    """A word box contains no ink pixels."""

    code = "degenerate_word"


class IngestError(WordspotError):
    """Document ingestion failed (for example, label count mismatch)."""

    code = "ingest_error"


class GenerationError(WordspotError):
    """Synthetic corpus generation failed."""

    code = "generation_error"


class IndexFormatError(WordspotError):
    """Index file is corrupt, truncated, or fails its checksum."""

    code = "index_format_error"


class VersionError(WordspotError):
    """Index file declares an unsupported format version."""

    code = "version_error"


class DimensionError(WordspotError):
    """Vector lengths do not match the expected dimension."""

    code = "dimension_error"


class RangeError(WordspotError):
    """A numeric argument is outside its documented range."""

    code = "range_error"


class SpaceError(WordspotError):
    """Query space tag does not match the index state."""

    code = "space_error"


class EmptyIndexError(WordspotError):
    """Ranking was requested against an index with no entries."""

    code = "empty_index"


class EmptyFeedbackError(WordspotError):
    """A feedback update was requested with no usable judgments."""

    code = "empty_feedback"


class JudgmentError(WordspotError):
    """A judgment references an unknown or not-shown word id."""

    code = "judgment_error"


class InsufficientDataError(WordspotError):
    """Too few samples to estimate statistics."""

    code = "insufficient_data"


class SymmetryError(WordspotError):
    """Matrix expected to be symmetric is not."""

    code = "symmetry_error"


class NumericalError(WordspotError):
    """An iterative numerical routine failed to converge."""

    code = "numerical_error"


class DegenerateSpectrumError(WordspotError):
    """All eigenvalues are zero; no subspace can be selected."""

    code = "degenerate_spectrum"


class ModeError(WordspotError):
    """Operation requires a model mode that is not enabled."""

    code = "mode_error"


class NoGroundTruthError(WordspotError):
    """Evaluation needs labels that are missing or empty."""

    code = "no_ground_truth"
