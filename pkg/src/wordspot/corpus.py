"""Building, persisting, and loading the word-entry index.

The index file is little-endian binary: magic ``DIRX``, a u32 format
version, a u64 entry count, fixed-layout entry records (ids, box, 93
float64 descriptor components, length-prefixed label), the corpus mean
vector, an optional subspace-model block, and a trailing CRC-32 of all
preceding bytes.
"""

from __future__ import annotations

import io
import logging
import re
import struct
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import fonts, subspace
from .errors import GenerationError, IndexFormatError, IngestError, VersionError
from .features import (
    DESCRIPTOR_SIZE,
    PageImage,
    WordBox,
    extract_descriptor,
    segment_words,
)
from .subspace import PcaModel

logger = logging.getLogger(__name__)

MAGIC = b"DIRX"
FORMAT_VERSION = 1

_HEADER = struct.Struct("<4sIQ")
_ENTRY_FIXED = struct.Struct("<QQIIII")
_LABEL_NONE = 0xFFFF

# Synthetic page layout constants (pixels).
PAGE_WIDTH = 960
PAGE_MARGIN = 12
WORD_GAP = 16
LINE_GAP = 6

# Per-occurrence rendering variation. Same-word occurrences must land near
# but not on each other in feature space: wide enough that feedback has
# something to fix, tight enough that a rate threshold keeps recall high.
SCALE_CHOICES = (4,)
BOLD_PROBABILITY = 0.35
SPACING_CHOICES = (2, 3)
JITTER_PROBABILITY = 0.2

# Vocabulary bounds: words shorter than 3 letters carry too little shape,
# and a narrow length band keeps per-query maximum distances comparable.
MIN_WORD_LENGTH = 3
MAX_WORD_LENGTH = 8

DEFAULT_DOCS = 100
DEFAULT_WORDS_PER_PAGE = 120


@dataclass(frozen=True, eq=False)
class WordEntry:
    """One indexed word occurrence."""

    word_id: int
    doc_id: int
    box: WordBox
    descriptor: np.ndarray
    label: str | None = None

    def __post_init__(self):
        desc = np.asarray(self.descriptor, dtype=float)
        if desc.shape != (DESCRIPTOR_SIZE,):
            raise ValueError(f"descriptor must have {DESCRIPTOR_SIZE} components")
        if not np.all(np.isfinite(desc)) or desc.min() < 0.0 or desc.max() > 1.0:
            raise ValueError("descriptor components must be finite and in [0, 1]")
        object.__setattr__(self, "descriptor", desc)
        if self.label is not None:
            object.__setattr__(self, "label", self.label.lower())

    def __eq__(self, other):
        if not isinstance(other, WordEntry):
            return NotImplemented
        return (
            self.word_id == other.word_id
            and self.doc_id == other.doc_id
            and self.box == other.box
            and self.label == other.label
            and np.array_equal(self.descriptor, other.descriptor)
        )


@dataclass(frozen=True, eq=False)
class CorpusIndex:
    """Immutable collection of word entries plus feature-space metadata."""

    entries: tuple[WordEntry, ...]
    feature_mean: np.ndarray
    pca: PcaModel | None = None
    format_version: int = FORMAT_VERSION
    matrix: np.ndarray | None = field(repr=False, default=None)
    subspace_matrix: np.ndarray | None = field(repr=False, default=None)

    def __post_init__(self):
        entries = tuple(sorted(self.entries, key=lambda e: e.word_id))
        ids = [e.word_id for e in entries]
        if len(set(ids)) != len(ids):
            raise ValueError("word_ids must be unique within an index")
        object.__setattr__(self, "entries", entries)
        object.__setattr__(
            self, "feature_mean", np.asarray(self.feature_mean, dtype=float)
        )
        if self.matrix is None:
            matrix = (
                np.vstack([e.descriptor for e in entries])
                if entries
                else np.zeros((0, DESCRIPTOR_SIZE))
            )
            object.__setattr__(self, "matrix", matrix)
        if self.pca is not None and self.subspace_matrix is None:
            object.__setattr__(
                self, "subspace_matrix", subspace.project(self.pca, self.matrix)
            )
        object.__setattr__(
            self, "_id_to_pos", {e.word_id: i for i, e in enumerate(self.entries)}
        )
        object.__setattr__(
            self, "ids", np.array([e.word_id for e in self.entries], dtype=np.int64)
        )
        object.__setattr__(
            self, "doc_ids", np.array([e.doc_id for e in self.entries], dtype=np.int64)
        )

    def __len__(self) -> int:
        return len(self.entries)

    def entry(self, word_id: int) -> WordEntry:
        return self.entries[self.position(word_id)]

    def position(self, word_id: int) -> int:
        try:
            return self._id_to_pos[word_id]
        except KeyError:
            raise KeyError(f"unknown word_id {word_id}") from None

    def with_pca(self, model: PcaModel | None) -> "CorpusIndex":
        return CorpusIndex(
            entries=self.entries,
            feature_mean=self.feature_mean,
            pca=model,
            format_version=self.format_version,
            matrix=self.matrix,
        )

    def __eq__(self, other):
        if not isinstance(other, CorpusIndex):
            return NotImplemented
        return (
            self.format_version == other.format_version
            and len(self) == len(other)
            and all(a == b for a, b in zip(self.entries, other.entries))
            and np.array_equal(self.feature_mean, other.feature_mean)
            and self.pca == other.pca
        )


def ingest_document(
    page: PageImage,
    doc_id: int,
    labels: list[str] | None = None,
    start_word_id: int = 0,
) -> list[WordEntry]:
    """Segment one page and extract an entry per word box.

    When labels are given they must match the segmented boxes one-to-one in
    reading order. Boxes that turn out degenerate are skipped (with their
    label) and counted in the log.
    """
    boxes = segment_words(page)
    if labels is not None and len(labels) != len(boxes):
        raise IngestError(
            f"doc {doc_id}: {len(labels)} labels for {len(boxes)} word boxes"
        )
    entries = []
    skipped = 0
    word_id = start_word_id
    for i, box in enumerate(boxes):
        try:
            descriptor = extract_descriptor(page, box)
        except Exception:
            skipped += 1
            continue
        entries.append(
            WordEntry(
                word_id=word_id,
                doc_id=doc_id,
                box=box,
                descriptor=descriptor,
                label=labels[i] if labels is not None else None,
            )
        )
        word_id += 1
    if skipped:
        logger.info("doc %d: skipped %d degenerate boxes", doc_id, skipped)
    return entries


def build_index(entries) -> CorpusIndex:
    entries = tuple(entries)
    if entries:
        mean = np.vstack([e.descriptor for e in entries]).mean(axis=0)
    else:
        mean = np.zeros(DESCRIPTOR_SIZE)
    return CorpusIndex(entries=entries, feature_mean=mean)


def ingest_corpus(pages, labels_per_page=None) -> CorpusIndex:
    """Ingest a list of pages into a fresh index with dense word ids."""
    entries: list[WordEntry] = []
    for doc_id, page in enumerate(pages):
        labels = labels_per_page[doc_id] if labels_per_page is not None else None
        entries.extend(
            ingest_document(page, doc_id, labels=labels, start_word_id=len(entries))
        )
    return build_index(entries)


# ---------------------------------------------------------------------------
# Synthetic corpus generation
# ---------------------------------------------------------------------------


def _tokenize(text: str) -> list[str]:
    return [
        w
        for w in re.findall(r"[a-z]+", text.lower())
        if MIN_WORD_LENGTH <= len(w) <= MAX_WORD_LENGTH
    ]


def _render_page(words: list[str], rng: np.random.Generator) -> PageImage:
    """Lay words out line by line with randomized per-occurrence styling."""
    canvases = []
    for word in words:
        scale = int(SCALE_CHOICES[rng.integers(0, len(SCALE_CHOICES))])
        bold = bool(rng.random() < BOLD_PROBABILITY)
        spacing = int(SPACING_CHOICES[rng.integers(0, len(SPACING_CHOICES))])
        jitter = tuple(int(j) for j in rng.random(len(word)) < JITTER_PROBABILITY)
        canvases.append(fonts.render_word(word, scale, bold, spacing, jitter))

    cell_height = fonts.GLYPH_HEIGHT * max(SCALE_CHOICES) + 2
    usable = PAGE_WIDTH - 2 * PAGE_MARGIN
    positions = []
    x, line = PAGE_MARGIN, 0
    for canvas in canvases:
        if x > PAGE_MARGIN and x + canvas.shape[1] > PAGE_MARGIN + usable:
            x, line = PAGE_MARGIN, line + 1
        y = PAGE_MARGIN + line * (cell_height + LINE_GAP)
        # Bottom-align inside the line cell.
        positions.append((y + cell_height - canvas.shape[0], x))
        x += canvas.shape[1] + WORD_GAP

    height = PAGE_MARGIN * 2 + (line + 1) * (cell_height + LINE_GAP) - LINE_GAP
    grid = np.zeros((height, PAGE_WIDTH), dtype=bool)
    for canvas, (y, x) in zip(canvases, positions):
        grid[y : y + canvas.shape[0], x : x + canvas.shape[1]] |= canvas
    return PageImage(grid)


def generate_synthetic_corpus(
    source_text: str,
    n_docs: int,
    seed: int,
    words_per_page: int = DEFAULT_WORDS_PER_PAGE,
) -> tuple[list[PageImage], list[list[str]]]:
    """Render a reproducible corpus of word pages from a source vocabulary.

    Words are sampled with rank-weighted frequencies so the corpus has a
    natural mix of common and rare words; any word of length >= 4 that ends
    up on a single document is re-seeded onto a second one when possible.
    Same seed, same pages, bit for bit.
    """
    if n_docs < 1:
        raise GenerationError("need at least one document")
    tokens = _tokenize(source_text)
    vocab = list(dict.fromkeys(tokens))
    if len(vocab) < 50:
        raise GenerationError(
            f"source text has only {len(vocab)} distinct words of length >= 3"
        )

    rng = np.random.default_rng(seed)
    weights = 1.0 / (np.arange(len(vocab)) + 1.0)
    weights /= weights.sum()
    drawn = rng.choice(len(vocab), size=n_docs * words_per_page, p=weights)
    pages_words = [
        [vocab[k] for k in drawn[d * words_per_page : (d + 1) * words_per_page]]
        for d in range(n_docs)
    ]

    if n_docs >= 2:
        _ensure_second_document(pages_words, rng)

    pages = [_render_page(words, rng) for words in pages_words]
    for d, (page, words) in enumerate(zip(pages, pages_words)):
        found = len(segment_words(page))
        if found != len(words):
            raise GenerationError(
                f"doc {d}: rendered {len(words)} words but segmented {found}"
            )
    return pages, pages_words


def _ensure_second_document(pages_words: list[list[str]], rng: np.random.Generator):
    """Give every length >= 4 word a presence on at least two documents."""
    def doc_sets():
        sets: dict[str, set[int]] = {}
        for d, words in enumerate(pages_words):
            for w in words:
                sets.setdefault(w, set()).add(d)
        return sets

    sets = doc_sets()
    lonely = sorted(w for w, s in sets.items() if len(w) >= 4 and len(s) == 1)
    for word in lonely:
        home = next(iter(sets[word]))
        candidates = [d for d in range(len(pages_words)) if d != home]
        target = int(candidates[rng.integers(0, len(candidates))])
        # Overwrite an occurrence of a word present on three or more other
        # documents so no constraint is broken by the swap.
        slots = [
            i
            for i, w in enumerate(pages_words[target])
            if len(sets.get(w, ())) >= 3 and w != word
        ]
        if not slots:
            continue
        slot = int(slots[rng.integers(0, len(slots))])
        pages_words[target][slot] = word
        sets = doc_sets()


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------


def _pack_label(label: str | None) -> bytes:
    if label is None:
        return struct.pack("<H", _LABEL_NONE)
    raw = label.encode("utf-8")
    if len(raw) >= _LABEL_NONE:
        raise ValueError("label too long to serialize")
    return struct.pack("<H", len(raw)) + raw


def save_index(index: CorpusIndex, path: str | Path) -> None:
    buf = io.BytesIO()
    buf.write(_HEADER.pack(MAGIC, index.format_version, len(index)))
    for e in index.entries:
        buf.write(
            _ENTRY_FIXED.pack(e.word_id, e.doc_id, e.box.x, e.box.y, e.box.w, e.box.h)
        )
        buf.write(e.descriptor.astype("<f8").tobytes())
        buf.write(_pack_label(e.label))
    buf.write(index.feature_mean.astype("<f8").tobytes())
    if index.pca is None:
        buf.write(b"\x00")
    else:
        model = index.pca
        buf.write(b"\x01")
        buf.write(struct.pack("<IBd", model.m, int(model.whiten), model.epsilon))
        buf.write(model.mean.astype("<f8").tobytes())
        buf.write(model.eigenvalues.astype("<f8").tobytes())
        buf.write(model.basis.astype("<f8").tobytes())
        buf.write(model.whitening_scales.astype("<f8").tobytes())
    payload = buf.getvalue()
    payload += struct.pack("<I", zlib.crc32(payload))
    Path(path).write_bytes(payload)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise IndexFormatError("index file is truncated")
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt: struct.Struct):
        return fmt.unpack(self.take(fmt.size))

    def vector(self, count: int) -> np.ndarray:
        return np.frombuffer(self.take(count * 8), dtype="<f8").copy()


def load_index(path: str | Path) -> CorpusIndex:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size + 4:
        raise IndexFormatError("file too short to be an index")
    body, (stored_crc,) = data[:-4], struct.unpack("<I", data[-4:])
    if zlib.crc32(body) != stored_crc:
        raise IndexFormatError("checksum mismatch")

    r = _Reader(body)
    magic, version, count = r.unpack(_HEADER)
    if magic != MAGIC:
        raise IndexFormatError(f"bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise VersionError(f"unsupported format version {version}")

    entries = []
    for _ in range(count):
        word_id, doc_id, x, y, w, h = r.unpack(_ENTRY_FIXED)
        descriptor = r.vector(DESCRIPTOR_SIZE)
        (label_len,) = struct.unpack("<H", r.take(2))
        label = None
        if label_len != _LABEL_NONE:
            label = r.take(label_len).decode("utf-8")
        entries.append(
            WordEntry(
                word_id=word_id,
                doc_id=doc_id,
                box=WordBox(x, y, w, h),
                descriptor=descriptor,
                label=label,
            )
        )
    feature_mean = r.vector(DESCRIPTOR_SIZE)

    pca = None
    (flag,) = struct.unpack("<B", r.take(1))
    if flag == 1:
        m, whiten, epsilon = struct.unpack("<IBd", r.take(13))
        mean = r.vector(DESCRIPTOR_SIZE)
        eigenvalues = r.vector(DESCRIPTOR_SIZE)
        basis = r.vector(m * DESCRIPTOR_SIZE).reshape(m, DESCRIPTOR_SIZE)
        scales = r.vector(m)
        pca = PcaModel(
            mean=mean,
            eigenvalues=eigenvalues,
            basis=basis,
            m=m,
            whitening_scales=scales,
            epsilon=epsilon,
            whiten=bool(whiten),
        )
    elif flag != 0:
        raise IndexFormatError("bad subspace-model flag")
    if r.pos != len(body):
        raise IndexFormatError("trailing bytes after index payload")

    try:
        return CorpusIndex(
            entries=tuple(entries), feature_mean=feature_mean, pca=pca,
            format_version=version,
        )
    except ValueError as exc:
        raise IndexFormatError(str(exc)) from exc
