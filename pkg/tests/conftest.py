import numpy as np
import pytest

from wordspot import corpus as corpus_mod
from wordspot import texts
from wordspot.corpus import WordEntry, build_index
from wordspot.features import PageImage, WordBox


def make_entry(word_id, descriptor, label=None, doc_id=0, box=None):
    return WordEntry(
        word_id=word_id,
        doc_id=doc_id,
        box=box or WordBox(0, 0, 10, 10),
        descriptor=descriptor,
        label=label,
    )


def random_index(n_entries, rng, labels=None):
    """An index over uniform random descriptors, for oracle tests."""
    entries = [
        make_entry(
            i,
            rng.uniform(0.0, 1.0, size=93),
            label=None if labels is None else labels[i],
        )
        for i in range(n_entries)
    ]
    return build_index(entries)


@pytest.fixture(scope="session")
def mini_corpus():
    """A small rendered corpus shared by integration-flavored tests."""
    pages, labels = corpus_mod.generate_synthetic_corpus(
        texts.DEFAULT_SOURCE_TEXT, n_docs=8, seed=7
    )
    return pages, labels


@pytest.fixture(scope="session")
def mini_index(mini_corpus):
    pages, labels = mini_corpus
    return corpus_mod.ingest_corpus(pages, labels)


def blank_page(height=40, width=60):
    return PageImage(np.zeros((height, width), dtype=bool))


def page_with(blocks, height=64, width=96):
    """A page with filled rectangles given as (x, y, w, h)."""
    grid = np.zeros((height, width), dtype=bool)
    for x, y, w, h in blocks:
        grid[y : y + h, x : x + w] = True
    return PageImage(grid)
