"""Exception hierarchy shared by all markerlab modules.

Every error raised by the library derives from MarkerlabError, so callers
(notably the CLI) can catch one type and emit a machine-readable report.
"""

from __future__ import annotations


class MarkerlabError(Exception):
    """Base class for all markerlab errors."""


# -- corpus ------------------------------------------------------------------

class MalformedRecord(MarkerlabError):
    """A corpus / lexicon / interchange line could not be parsed."""

    def __init__(self, message: str, line_no: int | None = None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


class NonMonotoneTurnIndex(MarkerlabError):
    """turn_index values within one dialogue are not strictly increasing."""


class MoreThanTwoSpeakers(MarkerlabError):
    """A dialogue contains more than two distinct speakers."""


class InvalidFraction(MarkerlabError):
    """Train fraction outside the open interval (0, 1)."""


# -- lexicon -----------------------------------------------------------------

class DuplicateVariant(MarkerlabError):
    """The same variant string is claimed by two lexicon entries."""


class EmptyEntry(MarkerlabError):
    """A lexicon entry has no canonical form or an empty variant."""


# -- datasetgen --------------------------------------------------------------

class EmptyRandomPool(MarkerlabError):
    """Random replacement requested but the token pool is empty."""


class SpanNotFound(MarkerlabError):
    """A marker span does not belong to the given corpus."""


# -- embeddings --------------------------------------------------------------

class DimensionMismatch(MarkerlabError):
    """Vectors or matrices of inconsistent dimension were combined."""


class TooFewRecords(MarkerlabError):
    """An analysis operation needs more records than were supplied."""


# -- cluster -----------------------------------------------------------------

class KTooLarge(MarkerlabError):
    """Requested more clusters than there are points."""


class SingleCluster(MarkerlabError):
    """Silhouette needs at least two clusters."""


class TooFewPoints(MarkerlabError):
    """A k sweep needs at least k_min + 1 points."""


# -- nlgeval -----------------------------------------------------------------

class EmptyGenerationSet(MarkerlabError):
    """No generation records supplied."""


class NoMarkerTokens(MarkerlabError):
    """Perplexity requested but no marker log-probabilities are present."""


class EmptyPair(MarkerlabError):
    """BLEU requires non-empty candidate and reference texts."""


class MissingVectors(MarkerlabError):
    """BERTScore requires token vectors on both sides of every pair."""
