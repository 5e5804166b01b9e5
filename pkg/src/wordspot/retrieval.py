"""Ranking indexed words against a query vector.

Distances are city-block (L1) sums over descriptor components in the
original 93-dimensional space. In a fitted subspace the scan uses squared
Euclidean distance when the model whitens (where Euclidean geometry is the
principled choice) and L1 on the raw projections otherwise. Each ranking
also reports a similarity rate: 100 for a perfect match down to 0 for the
farthest entry in the corpus.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .corpus import CorpusIndex
from .errors import (
    DegenerateWordError,
    DimensionError,
    EmptyIndexError,
    RangeError,
    SpaceError,
)
from .features import (
    DESCRIPTOR_SIZE,
    PageImage,
    WordBox,
    extract_descriptor,
    segment_words,
)
from . import subspace as subspace_mod

SPACE_ORIGINAL = "original"
SPACE_SUBSPACE = "subspace"
_SPACES = (SPACE_ORIGINAL, SPACE_SUBSPACE)


@dataclass(frozen=True, eq=False)
class QueryVector:
    """A query point plus the space it lives in.

    Components are finite but not confined to [0, 1]; refined queries leave
    the unit cube.
    """

    v: np.ndarray
    space: str = SPACE_ORIGINAL

    def __post_init__(self):
        vec = np.asarray(self.v, dtype=float)
        if vec.ndim != 1:
            raise DimensionError("query vector must be 1-D")
        if not np.all(np.isfinite(vec)):
            raise RangeError("query vector components must be finite")
        if self.space not in _SPACES:
            raise SpaceError(f"unknown space tag {self.space!r}")
        object.__setattr__(self, "v", vec)

    def __eq__(self, other):
        if not isinstance(other, QueryVector):
            return NotImplemented
        return self.space == other.space and np.array_equal(self.v, other.v)


@dataclass(frozen=True)
class RankedResult:
    word_id: int
    distance: float
    rate: float


@dataclass(frozen=True, eq=False)
class RankedList:
    """A full corpus ranking, best match first.

    Array fields are in rank order; ties in distance are broken by ascending
    word_id. ``results`` materializes result objects on demand.
    """

    word_ids: np.ndarray
    distances: np.ndarray
    rates: np.ndarray
    max_distance: float
    space: str
    doc_ids: np.ndarray = field(repr=False, default=None)

    def __len__(self) -> int:
        return len(self.word_ids)

    @cached_property
    def results(self) -> list[RankedResult]:
        return self.top(len(self.word_ids))

    def top(self, n: int) -> list[RankedResult]:
        return [
            RankedResult(int(w), float(d), float(r))
            for w, d, r in zip(self.word_ids[:n], self.distances[:n], self.rates[:n])
        ]


def minkowski_distance(q, w) -> float:
    """City-block distance: the sum of absolute component differences."""
    qa = np.asarray(q, dtype=float)
    wa = np.asarray(w, dtype=float)
    if qa.shape != wa.shape or qa.ndim != 1:
        raise DimensionError(f"length mismatch: {qa.shape} vs {wa.shape}")
    return float(np.abs(qa - wa).sum())


def similarity_rate(md: float, max_md: float) -> float:
    """Normalize a distance onto 0..100 against the corpus maximum.

    100 means identical, 0 means as far as the farthest indexed word. An
    all-identical corpus (max 0) rates everything 100.
    """
    if md < 0 or max_md < 0 or md > max_md:
        raise RangeError(f"need 0 <= md <= max_md, got md={md}, max_md={max_md}")
    if max_md == 0:
        return 100.0
    return 100.0 * (1.0 - md / max_md)


def scan_distances(query: QueryVector, index: CorpusIndex) -> np.ndarray:
    """Distance from the query to every entry, in storage order."""
    if len(index) == 0:
        raise EmptyIndexError("cannot rank an empty index")
    if query.space == SPACE_SUBSPACE:
        if index.pca is None:
            raise SpaceError("index has no fitted subspace model")
        target = index.subspace_matrix
        if query.v.shape[0] != target.shape[1]:
            raise DimensionError(
                f"query has {query.v.shape[0]} components, subspace has {target.shape[1]}"
            )
        diff = target - query.v
        if index.pca.whiten:
            # Euclidean metric (not squared) so similarity rates stay
            # comparable with the L1 modes under one threshold.
            return np.sqrt(np.einsum("ij,ij->i", diff, diff))
        return np.abs(diff).sum(axis=1)
    if query.v.shape[0] != DESCRIPTOR_SIZE:
        raise DimensionError(
            f"original-space query must have {DESCRIPTOR_SIZE} components"
        )
    return np.abs(index.matrix - query.v).sum(axis=1)


def rank(query: QueryVector, index: CorpusIndex) -> RankedList:
    """Rank every indexed word against the query.

    Produces one result per entry, sorted ascending by distance with
    word_id as the tiebreak, and rates computed against this ranking's own
    maximum distance.
    """
    distances = scan_distances(query, index)
    order = np.lexsort((index.ids, distances))
    sorted_d = distances[order]
    max_md = float(sorted_d[-1])
    if max_md > 0:
        rates = 100.0 * (1.0 - sorted_d / max_md)
    else:
        rates = np.full(len(sorted_d), 100.0)
    doc_ids = index.doc_ids[order]
    return RankedList(
        word_ids=index.ids[order],
        distances=sorted_d,
        rates=rates,
        max_distance=max_md,
        space=query.space,
        doc_ids=doc_ids,
    )


def query_from_descriptor(
    descriptor: np.ndarray, index: CorpusIndex, use_subspace: bool = False
) -> QueryVector:
    """Wrap an original-space descriptor, projecting it when requested."""
    if use_subspace:
        if index.pca is None:
            raise SpaceError("index has no fitted subspace model")
        return QueryVector(
            subspace_mod.project(index.pca, descriptor), SPACE_SUBSPACE
        )
    return QueryVector(np.asarray(descriptor, dtype=float), SPACE_ORIGINAL)


def descriptor_from_word_image(page: PageImage) -> np.ndarray:
    """Extract a descriptor from an image containing a single word.

    The word box is the tight bounding box of all ink; multi-word images
    should be segmented instead.
    """
    boxes = segment_words(page)
    if not boxes:
        raise DegenerateWordError("query image contains no ink")
    x0 = min(b.x for b in boxes)
    y0 = min(b.y for b in boxes)
    x1 = max(b.x + b.w for b in boxes)
    y1 = max(b.y + b.h for b in boxes)
    return extract_descriptor(page, WordBox(x0, y0, x1 - x0, y1 - y0))
