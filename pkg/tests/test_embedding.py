"""Tests for the embedding providers and the flat cosine index."""
import hashlib
import math
import random
from collections import Counter
from types import SimpleNamespace

import numpy as np
import pytest

from ttprag.embedding import (
    HashingEmbeddingProvider,
    OpenAIEmbeddingProvider,
    build_index,
    cosine,
    embed,
    embed_many,
    load_index,
    make_provider,
    save_index,
    tokenize,
    top_k,
)
from ttprag.embedding.index import FlatIndex, deserialize_index, serialize_index
from ttprag.utils.errors import ErrorCategory, ErrorCode

from tests.fixtures.assertions import assert_pipeline_error

WORDS = ["adversary", "credential", "dump", "lsass", "mimikatz", "phishing", "email",
         "registry", "dll", "hijack", "rdp", "smb", "archive", "rar", "https", "beacon"]


def random_texts(n, seed):
    rng = random.Random(seed)
    return [" ".join(rng.choice(WORDS) for _ in range(rng.randint(1, 8))) for _ in range(n)]


def bucket_counts(text, provider):
    return Counter(provider.bucket(token) for token in tokenize(text))


def count_cosine(a, b):
    dot = sum(n * b[k] for k, n in a.items() if k in b)
    return dot / (math.sqrt(sum(n * n for n in a.values())) * math.sqrt(sum(n * n for n in b.values())))


class TestHashingProvider:
    def test_tokenize(self):
        assert tokenize("APT-28 used T1003.001!") == ["apt", "28", "used", "t1003", "001"]

    def test_vectors_are_normalized_and_deterministic(self, hashing_provider):
        first = embed("Mimikatz dumps LSASS memory", hashing_provider)
        second = embed("Mimikatz dumps LSASS memory", HashingEmbeddingProvider(1024))
        assert first.dimension == 1024
        assert first.norm == pytest.approx(1.0)
        assert not first.is_zero
        assert np.array_equal(first.values, second.values)

    def test_empty_text_is_flagged_zero(self, hashing_provider):
        vector = embed("  ...  ", hashing_provider)
        assert vector.is_zero
        assert vector.norm == 0.0

    def test_case_and_punctuation_insensitive(self, hashing_provider):
        a, b = embed_many(["Credential, Dumping!", "credential dumping"], hashing_provider)
        assert np.array_equal(a.values, b.values)

    def test_shared_token_cosine(self, hashing_provider):
        if len({hashing_provider.bucket(t) for t in ("a", "b", "c")}) < 3:
            pytest.skip("tokens collide at this dimension")
        a, b = embed_many(["a b", "a c"], hashing_provider)
        assert cosine(a.values, b.values) == pytest.approx(0.5)

    def test_cosine_symmetric(self, hashing_provider):
        a, b = embed_many(["lsass memory dump", "dump the registry"], hashing_provider)
        assert cosine(a.values, b.values) == cosine(b.values, a.values)

    def test_cosine_equals_count_cosine_without_collisions(self):
        provider = HashingEmbeddingProvider(1024)
        vocabulary, used = [], set()
        for word in WORDS + [f"tok{i}" for i in range(300)]:
            if provider.bucket(word) not in used:
                used.add(provider.bucket(word))
                vocabulary.append(word)
        assert len(vocabulary) > 100

        rng = random.Random(17)
        for _ in range(200):
            a = [rng.choice(vocabulary) for _ in range(rng.randint(1, 12))]
            b = [rng.choice(vocabulary) for _ in range(rng.randint(1, 12))]
            got = cosine(embed(" ".join(a), provider).values, embed(" ".join(b), provider).values)
            assert got == pytest.approx(count_cosine(Counter(a), Counter(b)), abs=1e-9)

    def test_cosine_zero_vector(self):
        assert_pipeline_error(cosine, np.zeros(4), np.ones(4), code=ErrorCode.INDEX_ZERO_QUERY)

    def test_make_provider(self):
        assert make_provider("hashing", 64).dimension == 64
        with pytest.raises(ValueError):
            make_provider("word2vec")


class FakeEmbeddings:
    def __init__(self, dimension):
        self.dimension = dimension
        self.calls = []

    def create(self, model, input):
        self.calls.append(list(input))
        return SimpleNamespace(data=[
            SimpleNamespace(embedding=[float(len(text))] + [1.0] * (self.dimension - 1))
            for text in input
        ])


class TestOpenAIProvider:
    """Remote provider against a stand-in client."""

    def test_batches_and_skips_empty_texts(self):
        fake = FakeEmbeddings(4)
        provider = OpenAIEmbeddingProvider(dimension=4, batch_size=2, client=SimpleNamespace(embeddings=fake))
        matrix = provider.embed_texts(["abc", "", "de", "f"])
        assert fake.calls == [["abc", "de"], ["f"]]
        assert not np.any(matrix[1])
        assert np.linalg.norm(matrix[0]) == pytest.approx(1.0)

    def test_dimension_mismatch(self):
        fake = FakeEmbeddings(3)
        provider = OpenAIEmbeddingProvider(dimension=4, client=SimpleNamespace(embeddings=fake))
        assert_pipeline_error(provider.embed_texts, ["abc"],
                              code=ErrorCode.EMBEDDING_DIMENSION, category=ErrorCategory.EMBEDDING)


class TestFlatIndex:
    """Exact top-k search."""

    def test_empty_index(self, hashing_provider):
        index = build_index([], hashing_provider)
        assert len(index) == 0
        assert top_k(index, embed("anything", hashing_provider), 3) == []

    def test_self_is_top_hit(self, hashing_provider):
        texts = random_texts(20, seed=1)
        entries = [(f"k{i:02d}", t) for i, t in enumerate(texts)]
        index = build_index(entries, hashing_provider)
        for key, text in entries:
            query = embed(text, hashing_provider)
            hits = top_k(index, query, 1)
            assert hits[0][1] == pytest.approx(1.0)
            assert hits[0][0] <= key
            assert np.allclose(index.matrix[index.position(hits[0][0])], query.values)

    def test_k_larger_than_index(self, hashing_provider):
        index = build_index([("a", "rdp session"), ("b", "smb share")], hashing_provider)
        hits = top_k(index, embed("rdp", hashing_provider), 10)
        assert [k for k, _ in hits] == ["a", "b"]

    def test_exclude(self, hashing_provider):
        index = build_index([("a", "rdp session"), ("b", "rdp session"), ("c", "smb")], hashing_provider)
        hits = top_k(index, embed("rdp session", hashing_provider), 2, exclude={"a"})
        assert hits[0][0] == "b"
        assert "a" not in [k for k, _ in hits]

    def test_ties_broken_by_key(self, hashing_provider):
        index = build_index([("z", "same text"), ("m", "same text"), ("a", "same text")], hashing_provider)
        hits = top_k(index, embed("same text", hashing_provider), 2)
        assert [k for k, _ in hits] == ["a", "m"]

    def test_matches_brute_force(self, hashing_provider):
        entries = [(f"p{i:03d}", t) for i, t in enumerate(random_texts(50, seed=2))]
        index = build_index(entries, hashing_provider)
        counts = {key: bucket_counts(text, hashing_provider) for key, text in entries}
        queries = [(text, {key}) for key, text in entries]
        queries += [(text, set()) for text in random_texts(50, seed=3)]

        for query_text, exclude in queries:
            q = bucket_counts(query_text, hashing_provider)
            truth = sorted((count_cosine(q, c) for k, c in counts.items() if k not in exclude), reverse=True)
            hits = top_k(index, embed(query_text, hashing_provider), 5, exclude=exclude)

            assert [s for _, s in hits] == pytest.approx(truth[:5], abs=1e-9)
            for key, score in hits:
                assert key not in exclude
                assert score == pytest.approx(count_cosine(q, counts[key]), abs=1e-9)

    def test_bad_k(self, hashing_provider):
        index = build_index([("a", "rdp")], hashing_provider)
        assert_pipeline_error(top_k, index, embed("rdp", hashing_provider), 0, code=ErrorCode.INDEX_BAD_K)

    def test_zero_query(self, hashing_provider):
        index = build_index([("a", "rdp")], hashing_provider)
        assert_pipeline_error(top_k, index, embed("", hashing_provider), 3,
                              code=ErrorCode.INDEX_ZERO_QUERY, category=ErrorCategory.INDEX)

    def test_duplicate_key(self, hashing_provider):
        assert_pipeline_error(build_index, [("a", "x"), ("a", "y")], hashing_provider,
                              code=ErrorCode.INDEX_DUPLICATE_KEY)

    def test_payloads(self, hashing_provider):
        index = build_index([("a", "rdp")], hashing_provider, payloads={"a": 42})
        assert "a" in index and "b" not in index
        assert index.entry("a").payload_ref == 42
        assert index.with_payloads({"a": 7}).payload("a") == 7


class TestIndexFile:
    """Binary index persistence."""

    def test_save_and_load(self, tmp_path, hashing_provider):
        entries = [(f"p{i}", t) for i, t in enumerate(random_texts(10, seed=4))]
        index = build_index(entries, hashing_provider)
        path = tmp_path / "procedures.idx"
        save_index(index, path)
        loaded = load_index(path)
        assert loaded.keys == index.keys
        assert np.array_equal(loaded.matrix, index.matrix)
        for query_text in random_texts(10, seed=5):
            query = embed(query_text, hashing_provider)
            assert top_k(loaded, query, 5) == top_k(index, query, 5)

    def test_corruption_detected(self, tmp_path, hashing_provider):
        data = bytearray(serialize_index(build_index([("a", "rdp"), ("b", "smb")], hashing_provider)))
        data[30] ^= 0xFF
        path = tmp_path / "bad.idx"
        path.write_bytes(bytes(data))
        assert_pipeline_error(load_index, path, code=ErrorCode.INDEX_CHECKSUM)

    def test_bad_magic_with_valid_digest(self, hashing_provider):
        data = serialize_index(build_index([("a", "rdp")], hashing_provider))
        body = b"NOTANIDX" + data[8:-32]
        assert_pipeline_error(deserialize_index, body + hashlib.sha256(body).digest(),
                              code=ErrorCode.INDEX_FORMAT)

    def test_too_short(self):
        assert_pipeline_error(deserialize_index, b"short", code=ErrorCode.INDEX_FORMAT)

    def test_empty_index_round_trips(self):
        empty = FlatIndex([], np.zeros((0, 8)))
        assert len(deserialize_index(serialize_index(empty))) == 0
