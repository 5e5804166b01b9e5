"""Index construction, persistence, and synthetic corpus generation."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wordspot import texts
from wordspot.corpus import (
    CorpusIndex,
    build_index,
    generate_synthetic_corpus,
    ingest_corpus,
    ingest_document,
    load_index,
    save_index,
)
from wordspot.errors import (
    GenerationError,
    IndexFormatError,
    IngestError,
    VersionError,
)
from wordspot.features import WordBox, segment_words
from wordspot import subspace as subspace_mod

from conftest import blank_page, make_entry


class TestBuildIndex:
    def test_entries_sorted_and_ids_unique(self):
        rng = np.random.default_rng(0)
        entries = [make_entry(i, rng.uniform(0, 1, 93)) for i in (3, 0, 2, 1)]
        index = build_index(entries)
        assert [e.word_id for e in index.entries] == [0, 1, 2, 3]
        with pytest.raises(ValueError):
            build_index(entries + [make_entry(2, rng.uniform(0, 1, 93))])

    def test_feature_mean_matches_definition(self):
        rng = np.random.default_rng(1)
        entries = [make_entry(i, rng.uniform(0, 1, 93)) for i in range(7)]
        index = build_index(entries)
        expected = np.mean([e.descriptor for e in entries], axis=0)
        assert np.max(np.abs(index.feature_mean - expected)) <= 1e-12

    def test_descriptor_validation(self):
        with pytest.raises(ValueError):
            make_entry(0, np.full(93, 1.5))
        with pytest.raises(ValueError):
            make_entry(0, np.zeros(50))

    def test_labels_lowercased(self):
        e = make_entry(0, np.zeros(93), label="Harbor")
        assert e.label == "harbor"


class TestIngest:
    def test_blank_page_no_entries(self):
        assert ingest_document(blank_page(), doc_id=0) == []

    def test_rendered_page_labels_attach_in_order(self, mini_corpus):
        pages, labels = mini_corpus
        entries = ingest_document(pages[2], doc_id=2, labels=labels[2])
        assert len(entries) == len(labels[2])
        assert [e.label for e in entries] == labels[2]
        assert [e.word_id for e in entries] == list(range(len(entries)))

    def test_label_count_mismatch(self, mini_corpus):
        pages, labels = mini_corpus
        with pytest.raises(IngestError):
            ingest_document(pages[0], doc_id=0, labels=labels[0][:-1])

    def test_word_ids_dense_after_full_build(self, mini_index):
        ids = [e.word_id for e in mini_index.entries]
        assert ids == list(range(len(ids)))


class TestSyntheticCorpus:
    def test_same_seed_bit_identical(self):
        a_pages, a_labels = generate_synthetic_corpus(
            texts.DEFAULT_SOURCE_TEXT, 2, seed=5
        )
        b_pages, b_labels = generate_synthetic_corpus(
            texts.DEFAULT_SOURCE_TEXT, 2, seed=5
        )
        assert a_labels == b_labels
        for pa, pb in zip(a_pages, b_pages):
            np.testing.assert_array_equal(pa.pixels, pb.pixels)

    def test_different_seed_differs(self):
        a_pages, _ = generate_synthetic_corpus(texts.DEFAULT_SOURCE_TEXT, 1, seed=5)
        b_pages, _ = generate_synthetic_corpus(texts.DEFAULT_SOURCE_TEXT, 1, seed=6)
        assert not np.array_equal(a_pages[0].pixels, b_pages[0].pixels)

    def test_single_document(self):
        pages, labels = generate_synthetic_corpus(texts.DEFAULT_SOURCE_TEXT, 1, seed=3)
        assert len(pages) == 1
        assert len(labels[0]) > 0

    def test_insufficient_vocabulary(self):
        with pytest.raises(GenerationError):
            generate_synthetic_corpus("tiny text with few words", 2, seed=1)

    def test_eligible_words_on_two_documents(self, mini_corpus):
        pages, labels = mini_corpus
        docs_per_word: dict[str, set] = {}
        for d, words in enumerate(labels):
            for w in words:
                docs_per_word.setdefault(w, set()).add(d)
        lonely = [
            w for w, docs in docs_per_word.items() if len(w) >= 4 and len(docs) < 2
        ]
        assert lonely == []

    def test_segmentation_matches_labels(self, mini_corpus):
        pages, labels = mini_corpus
        for page, words in zip(pages[:3], labels[:3]):
            assert len(segment_words(page)) == len(words)


class TestPersistence:
    def make_index(self, n=12, with_pca=False, with_labels=True, seed=0):
        rng = np.random.default_rng(seed)
        entries = [
            make_entry(
                i,
                rng.uniform(0, 1, 93),
                label=f"word{i}" if with_labels else None,
                doc_id=i % 3,
                box=WordBox(i, 2 * i, 5 + i, 7),
            )
            for i in range(n)
        ]
        index = build_index(entries)
        if with_pca:
            model = subspace_mod.fit_pca(index.matrix, variance_target=0.9)
            index = index.with_pca(model)
        return index

    def test_roundtrip_plain(self, tmp_path):
        index = self.make_index()
        path = tmp_path / "plain.dirx"
        save_index(index, path)
        assert load_index(path) == index

    def test_roundtrip_with_pca_and_none_labels(self, tmp_path):
        index = self.make_index(with_pca=True, with_labels=False)
        path = tmp_path / "pca.dirx"
        save_index(index, path)
        loaded = load_index(path)
        assert loaded == index
        assert loaded.pca is not None
        assert loaded.pca.whiten == index.pca.whiten
        np.testing.assert_array_equal(loaded.subspace_matrix, index.subspace_matrix)

    def test_flipped_byte_detected(self, tmp_path):
        index = self.make_index()
        path = tmp_path / "corrupt.dirx"
        save_index(index, path)
        blob = bytearray(path.read_bytes())
        blob[len(blob) // 2] ^= 0xFF
        path.write_bytes(bytes(blob))
        with pytest.raises(IndexFormatError):
            load_index(path)

    def test_truncation_detected(self, tmp_path):
        index = self.make_index()
        path = tmp_path / "short.dirx"
        save_index(index, path)
        blob = path.read_bytes()
        path.write_bytes(blob[: len(blob) - 9])
        with pytest.raises(IndexFormatError):
            load_index(path)

    def test_empty_file_rejected(self, tmp_path):
        path = tmp_path / "empty.dirx"
        path.write_bytes(b"")
        with pytest.raises(IndexFormatError):
            load_index(path)

    def test_unknown_version_rejected(self, tmp_path):
        import struct
        import zlib

        index = self.make_index(n=2)
        path = tmp_path / "version.dirx"
        save_index(index, path)
        blob = bytearray(path.read_bytes())
        blob[4:8] = struct.pack("<I", 99)
        body = bytes(blob[:-4])
        blob[-4:] = struct.pack("<I", zlib.crc32(body))
        path.write_bytes(bytes(blob))
        with pytest.raises(VersionError):
            load_index(path)

    @given(
        n=st.integers(0, 6),
        seed=st.integers(0, 2**31 - 1),
        with_pca=st.booleans(),
    )
    @settings(max_examples=25, deadline=None)
    def test_roundtrip_property(self, tmp_path_factory, n, seed, with_pca):
        rng = np.random.default_rng(seed)
        entries = [
            make_entry(
                i,
                rng.uniform(0, 1, 93),
                label=None if i % 3 == 0 else f"w{i}",
                doc_id=int(rng.integers(0, 5)),
            )
            for i in range(n)
        ]
        index = build_index(entries)
        if with_pca and n >= 2:
            try:
                model = subspace_mod.fit_pca(index.matrix, variance_target=0.8)
                index = index.with_pca(model)
            except Exception:
                pass
        path = tmp_path_factory.mktemp("idx") / "prop.dirx"
        save_index(index, path)
        assert load_index(path) == index
