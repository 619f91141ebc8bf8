import numpy as np
import pytest

from phem.backend.providers import (
    CachingProvider,
    EmbeddingProvider,
    ProviderUnavailableError,
    RemoteProvider,
    StoreProvider,
    SyntheticBlobProvider,
    SyntheticHashProvider,
    TextNotFoundError,
    TransportError,
    UnknownTextError,
)
from phem.backend.store import write_store
from phem.core import EmbeddingVector


class TestSyntheticHash:
    def test_same_text_same_vector(self):
        p = SyntheticHashProvider(dim=16, seed=7)
        a, b = p.embed_batch(["hello", "hello"])
        assert a == b

    def test_different_texts_differ(self):
        p = SyntheticHashProvider(dim=16, seed=7)
        a, b = p.embed_batch(["hello", "world"])
        assert not np.allclose(a.values, b.values)

    def test_seed_changes_vectors(self):
        a = SyntheticHashProvider(dim=16, seed=1).embed_batch(["x"])[0]
        b = SyntheticHashProvider(dim=16, seed=2).embed_batch(["x"])[0]
        assert not np.allclose(a.values, b.values)

    def test_normalized_contract(self):
        p = SyntheticHashProvider(dim=32)
        (v,) = p.embed_batch(["anything"], normalize=True)
        assert v.normalized
        assert np.linalg.norm(v.values.astype(np.float64)) == pytest.approx(1.0, abs=1e-6)

    def test_input_validation(self):
        p = SyntheticHashProvider(dim=4)
        with pytest.raises(ValueError):
            p.embed_batch([])
        with pytest.raises(ValueError):
            p.embed_batch([""])


class TestSyntheticBlob:
    def test_zero_sigma_hits_centroid_exactly(self):
        p = SyntheticBlobProvider.orthogonal({"t1": "A", "t2": "B"}, dim=4, noise_sigma=0.0)
        v1, v2 = p.embed_batch(["t1", "t2"])
        np.testing.assert_array_equal(v1.values, [1.0, 0.0, 0.0, 0.0])
        np.testing.assert_array_equal(v2.values, [0.0, 1.0, 0.0, 0.0])

    def test_unknown_text(self):
        p = SyntheticBlobProvider.orthogonal({"t1": "A"}, dim=2)
        with pytest.raises(UnknownTextError):
            p.embed_batch(["nope"])

    def test_deterministic_given_seed(self):
        texts = [f"t{i}" for i in range(20)]
        assignment = {t: "A" if i % 2 else "B" for i, t in enumerate(texts)}
        p1 = SyntheticBlobProvider.orthogonal(assignment, dim=8, noise_sigma=0.1, seed=3)
        p2 = SyntheticBlobProvider.orthogonal(assignment, dim=8, noise_sigma=0.1, seed=3)
        assert p1.embed_batch(texts) == p2.embed_batch(texts)

    def test_noise_stays_near_centroid(self):
        p = SyntheticBlobProvider.orthogonal({"t": "A"}, dim=16, noise_sigma=0.01, seed=0)
        (v,) = p.embed_batch(["t"])
        centroid = np.zeros(16)
        centroid[0] = 1.0
        assert np.linalg.norm(v.values - centroid) < 0.1

    def test_sigma_must_be_nonnegative(self):
        with pytest.raises(ValueError):
            SyntheticBlobProvider.orthogonal({"t": "A"}, dim=2, noise_sigma=-0.1)

    def test_dim_must_cover_classes(self):
        with pytest.raises(ValueError):
            SyntheticBlobProvider.orthogonal({"a": "A", "b": "B", "c": "C"}, dim=2)


class TestStoreProvider:
    def test_lookup_in_input_order(self, tmp_path):
        path = tmp_path / "s.phem"
        write_store(path, [("a", [1.0, 0.0]), ("b", [0.0, 1.0])])
        p = StoreProvider(path)
        vb, va = p.embed_batch(["b", "a"])
        np.testing.assert_array_equal(vb.values, [0.0, 1.0])
        np.testing.assert_array_equal(va.values, [1.0, 0.0])

    def test_missing_text(self, tmp_path):
        path = tmp_path / "s.phem"
        write_store(path, [("a", [1.0, 0.0])])
        with pytest.raises(TextNotFoundError):
            StoreProvider(path).embed_batch(["a", "zz"])

    def test_normalize_flag(self, tmp_path):
        path = tmp_path / "s.phem"
        write_store(path, [("a", [3.0, 4.0])])
        (v,) = StoreProvider(path).embed_batch(["a"], normalize=True)
        np.testing.assert_allclose(v.values, [0.6, 0.8], atol=1e-7)


class FakeTransport:
    """Scripted transport: pops one outcome per call.

    Outcomes: ("ok", dim) -> 200 with hash-like vectors; ("status", code);
    ("raise",) -> TransportError.
    """

    def __init__(self, script):
        self.script = list(script)
        self.calls = []

    def __call__(self, url, payload, timeout):
        self.calls.append((url, payload))
        kind = self.script.pop(0)
        if kind[0] == "raise":
            raise TransportError("boom")
        if kind[0] == "status":
            return kind[1], {"error": "scripted"}
        dim = kind[1]
        texts = payload["texts"]
        vectors = [[float(len(t) + i) for i in range(dim)] for t in texts]
        return 200, {"model": "fake-model", "dim": dim, "vectors": vectors}


def no_sleep(_):
    pass


class TestRemoteProvider:
    def test_batching_respects_max_batch(self):
        transport = FakeTransport([("ok", 3)] * 4)
        p = RemoteProvider("http://svc", max_batch=2, transport=transport, sleep=no_sleep)
        out = p.embed_batch([f"t{i}" for i in range(7)])
        assert len(out) == 7
        assert len(transport.calls) == 4
        assert all(len(c[1]["texts"]) <= 2 for c in transport.calls)
        assert p.model_name == "fake-model"
        assert p.dim == 3

    def test_order_preserved_across_chunks(self):
        transport = FakeTransport([("ok", 1)] * 5)
        p = RemoteProvider("http://svc", max_batch=1, in_flight=4, transport=transport, sleep=no_sleep)
        texts = ["a", "bb", "ccc", "dddd", "eeeee"]
        out = p.embed_batch(texts)
        assert [v.values[0] for v in out] == [float(len(t)) for t in texts]

    def test_retries_on_transport_error_then_succeeds(self):
        sleeps = []
        transport = FakeTransport([("raise",), ("status", 503), ("ok", 2)])
        p = RemoteProvider("http://svc", transport=transport, sleep=sleeps.append)
        out = p.embed_batch(["x"])
        assert len(out) == 1
        assert sleeps == [0.5, 1.0]  # base 0.5, factor 2

    def test_gives_up_after_three_attempts(self):
        transport = FakeTransport([("status", 500)] * 3)
        p = RemoteProvider("http://svc", transport=transport, sleep=no_sleep)
        with pytest.raises(ProviderUnavailableError):
            p.embed_batch(["x"])
        assert len(transport.calls) == 3

    def test_client_error_fails_fast(self):
        transport = FakeTransport([("status", 400)])
        p = RemoteProvider("http://svc", transport=transport, sleep=no_sleep)
        with pytest.raises(ProviderUnavailableError):
            p.embed_batch(["x"])
        assert len(transport.calls) == 1

    def test_count_mismatch_rejected(self):
        def transport(url, payload, timeout):
            return 200, {"model": "m", "dim": 2, "vectors": [[0.0, 1.0]] * (len(payload["texts"]) + 1)}

        p = RemoteProvider("http://svc", transport=transport, sleep=no_sleep)
        with pytest.raises(ProviderUnavailableError):
            p.embed_batch(["x"])


class CountingProvider(EmbeddingProvider):
    model_name = "counting"
    dim = 2

    def __init__(self):
        self.seen = []

    def embed_batch(self, texts, normalize=False):
        self.seen.extend(texts)
        return [EmbeddingVector(np.array([len(t), 1.0], dtype=np.float32)) for t in texts]


class TestCachingProvider:
    def test_each_text_fetched_at_most_once(self):
        inner = CountingProvider()
        p = CachingProvider(inner)
        p.embed_batch(["a", "b", "a"])
        p.embed_batch(["b", "c"])
        p.embed_batch(["a", "c"], normalize=True)
        assert sorted(inner.seen) == ["a", "b", "c"]

    def test_normalized_and_raw_served_from_one_entry(self):
        inner = CountingProvider()
        p = CachingProvider(inner)
        (raw,) = p.embed_batch(["abcd"])
        (unit,) = p.embed_batch(["abcd"], normalize=True)
        assert inner.seen == ["abcd"]
        assert not raw.normalized
        assert unit.normalized
        np.testing.assert_allclose(
            unit.values,
            raw.values / np.linalg.norm(raw.values.astype(np.float64)),
            atol=1e-6,
        )

    def test_disk_cache_survives_new_process_object(self, tmp_path):
        inner1 = CountingProvider()
        CachingProvider(inner1, cache_dir=tmp_path).embed_batch(["x", "y"])
        inner2 = CountingProvider()
        out = CachingProvider(inner2, cache_dir=tmp_path).embed_batch(["x", "y"])
        assert inner2.seen == []
        assert [tuple(v.values) for v in out] == [(1.0, 1.0), (1.0, 1.0)]

    def test_model_name_delegates(self):
        p = CachingProvider(CountingProvider())
        assert p.model_name == "counting"
