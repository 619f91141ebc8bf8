"""Acceptance suite: one test per release criterion, printed pass/fail.

Every expected value is either derived from an independent oracle computed
inside this module (brute-force enumeration, direct entropy arithmetic,
position-by-position precision sums, hand-assembled bytes) or is an exact
string/byte constant.  Nothing here requires a model service: synthetic
providers and canned predictions drive the end-to-end run.
"""

import contextlib
import itertools
import math
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from corpus_fixtures import build_workspace
from phem.backend.providers import SyntheticBlobProvider, stack_vectors
from phem.backend.store import read_store, write_store
from phem.clustering import clustering_accuracy, hungarian_max, kmeans, nmi
from phem.core import Phrase
from phem.expansion import ap_at_k
from phem.prompting import build_mlm_query, build_prompt
from phem.core import KeywordSet


@contextlib.contextmanager
def criterion(name):
    started = time.perf_counter()
    try:
        yield
    except BaseException:
        print(f"ACCEPTANCE {name}: FAIL")
        raise
    print(f"ACCEPTANCE {name}: PASS ({time.perf_counter() - started:.2f}s)")


# ---------------------------------------------------------------------------
# oracles


def brute_force_max_total(w):
    r, c = w.shape
    best = -math.inf
    if r <= c:
        for cols in itertools.permutations(range(c), r):
            best = max(best, sum(w[i, cols[i]] for i in range(r)))
    else:
        for rows in itertools.permutations(range(r), c):
            best = max(best, sum(w[rows[j], j] for j in range(c)))
    return best


def oracle_accuracy(a, b):
    from collections import Counter

    pairs = Counter(zip(a, b))
    clusters = sorted(set(a))
    classes = sorted(set(b))
    small, big, flipped = (
        (clusters, classes, False) if len(clusters) <= len(classes) else (classes, clusters, True)
    )
    best = 0
    for mapped in itertools.permutations(big, len(small)):
        correct = sum(pairs[(m, s)] if flipped else pairs[(s, m)] for s, m in zip(small, mapped))
        best = max(best, correct)
    return best / len(a)


def oracle_nmi(a, b):
    from collections import Counter

    n = len(a)
    joint, pa, pb = Counter(zip(a, b)), Counter(a), Counter(b)
    h_a = -sum((c / n) * math.log(c / n) for c in pa.values())
    h_b = -sum((c / n) * math.log(c / n) for c in pb.values())
    if h_a == 0.0 and h_b == 0.0:
        return 1.0
    mi = sum(
        (c / n) * math.log((c / n) / ((pa[x] / n) * (pb[y] / n))) for (x, y), c in joint.items()
    )
    return 0.0 if mi <= 0.0 else mi / ((h_a + h_b) / 2.0)


def oracle_ap(surfaces, relevant, k):
    if not relevant:
        return 0.0
    total, hits = 0.0, 0
    for pos in range(1, min(k, len(surfaces)) + 1):
        if surfaces[pos - 1] in relevant:
            hits += 1
            total += hits / pos
    return total / min(k, len(relevant))


# ---------------------------------------------------------------------------
# criteria


def test_assignment_oracle():
    with criterion("assignment-oracle"):
        started = time.perf_counter()
        rng = np.random.default_rng(2024)
        for case in range(200):
            r = int(rng.integers(1, 8))
            c = int(rng.integers(1, 8))
            w = rng.integers(0, 1000, size=(r, c)).astype(np.float64)
            pairs, total = hungarian_max(w)
            assert total == brute_force_max_total(w), f"case {case}: {w}"
            assert total == sum(w[i, j] for i, j in pairs)
        assert time.perf_counter() - started < 10.0


def test_metric_oracles():
    with criterion("metric-oracles"):
        started = time.perf_counter()
        assert clustering_accuracy([1, 1, 0, 2], [0, 0, 1, 1]) == 0.75
        assert nmi([0, 0, 0, 1], [0, 0, 1, 1]) == pytest.approx(0.3437, abs=1e-3)
        rng = np.random.default_rng(77)
        for _ in range(200):
            n = int(rng.integers(1, 51))
            a = rng.integers(0, int(rng.integers(1, 7)), size=n).tolist()
            b = rng.integers(0, int(rng.integers(1, 7)), size=n).tolist()
            assert clustering_accuracy(a, b) == oracle_accuracy(a, b)
            assert nmi(a, b) == pytest.approx(oracle_nmi(a, b), abs=1e-9)
        assert time.perf_counter() - started < 10.0


def test_ap_oracle():
    with criterion("ap-oracle"):
        assert ap_at_k(["a", "b", "c"], {"a", "c"}, 3) == pytest.approx(5.0 / 6.0, abs=1e-12)
        rng = np.random.default_rng(55)
        universe = [f"e{i}" for i in range(40)]
        for _ in range(200):
            size = int(rng.integers(1, 35))
            ranking = list(rng.choice(universe, size=size, replace=False))
            relevant = set(rng.choice(universe, size=int(rng.integers(0, 20)), replace=False))
            k = int(rng.integers(1, 40))
            assert ap_at_k(ranking, relevant, k) == pytest.approx(
                oracle_ap(ranking, relevant, k), abs=1e-12
            )


def test_kmeans_criterion():
    with criterion("kmeans"):
        started = time.perf_counter()

        # enumerated 4-point optimum
        points = np.array([[0.0, 0.0], [0.0, 1.0], [10.0, 0.0], [10.0, 1.0]])
        result = kmeans(points, 2, seed=0)
        assert result.inertia == pytest.approx(1.0, abs=1e-9)

        # per-iteration inertia monotonicity on assorted runs
        rng = np.random.default_rng(31)
        for _ in range(8):
            data = rng.standard_normal((int(rng.integers(20, 120)), int(rng.integers(2, 8))))
            res = kmeans(data, int(rng.integers(2, 7)), n_restarts=4, seed=int(rng.integers(10_000)))
            hist = res.inertia_history
            assert all(hist[i + 1] <= hist[i] + 1e-9 for i in range(len(hist) - 1))

        # synthetic blobs, orthogonal centroids, sigma 0.05, 200 points
        for n_classes in (2, 3, 4, 5, 6):
            class_rng = np.random.default_rng(100 + n_classes)
            texts = [f"t{i}" for i in range(200)]
            labels = class_rng.integers(0, n_classes, size=200)
            provider = SyntheticBlobProvider.orthogonal(
                {t: f"C{labels[i]}" for i, t in enumerate(texts)},
                dim=16,
                noise_sigma=0.05,
                seed=n_classes,
            )
            x = stack_vectors(provider.embed_batch(texts))
            res = kmeans(x, n_classes, seed=0)
            assert clustering_accuracy(res.assignments, labels.tolist()) >= 0.99
            assert nmi(res.assignments, labels.tolist()) >= 0.95

        assert time.perf_counter() - started < 30.0


def test_prompt_byte_exactness():
    with criterion("prompt-byte-exactness"):
        phrase = Phrase("United States")
        assert build_mlm_query(phrase) == "United States is a [mask]"
        keywords = KeywordSet("United States", ("country", "republic", "nation"))
        assert build_prompt(phrase, keywords) == (
            "A photo of United States. A country, republic, nation"
        )
        assert build_prompt(phrase, KeywordSet("United States")) == "A photo of United States"


def test_store_format(tmp_path):
    with criterion("store-format"):
        rng = np.random.default_rng(9)
        records = [
            (f"record-{i}-☃", rng.standard_normal(12).astype(np.float32)) for i in range(10_000)
        ]
        path = tmp_path / "bulk.phem"
        write_store(path, records)
        loaded = read_store(path)
        assert loaded.count == 10_000
        for (t0, v0), (t1, v1) in zip(records, loaded.records):
            assert t0 == t1
            assert v0.tobytes() == v1.tobytes()

        expected = (
            b"PHEM"
            + (1).to_bytes(4, "little")
            + (2).to_bytes(4, "little")
            + (1).to_bytes(8, "little")
            + (2).to_bytes(4, "little")
            + b"ab"
            + bytes([0x00, 0x00, 0x80, 0x3F, 0x00, 0x00, 0x00, 0x40])
        )
        single = tmp_path / "single.phem"
        write_store(single, [("ab", [1.0, 2.0])])
        assert single.read_bytes() == expected


PIPELINE = [
    [
        "keywords",
        "--bio", "data/corpus.bio",
        "--exclude-class", "MISC",
        "--dataset-id", "demo",
        "--mlm", "canned",
        "--mlm-canned", "data/canned.json",
        "--keyword-cache", "keywords.tsv",
    ],
    [
        "cluster",
        "--bio", "data/corpus.bio",
        "--exclude-class", "MISC",
        "--dataset-id", "demo",
        "--keyword-cache", "keywords.tsv",
        "--provider", "synthetic-blob",
        "--dim", "8",
        "--noise-sigma", "0.01",
        "--results", "results.jsonl",
    ],
    [
        "expand",
        "--vocab", "data/vocab.tsv",
        "--seeds", "data/seeds.tsv",
        "--dataset-id", "demo",
        "--keyword-cache", "keywords.tsv",
        "--provider", "synthetic-blob",
        "--dim", "8",
        "--noise-sigma", "0.01",
        "--results", "results.jsonl",
    ],
    [
        "ground",
        "--bio", "data/corpus.bio",
        "--exclude-class", "MISC",
        "--dataset-id", "demo",
        "--keyword-cache", "keywords.tsv",
        "--captions", "data/captions.txt",
        "--threshold", "3",
        "--results", "results.jsonl",
    ],
]


def _run_pipeline(root: Path) -> tuple[bytes, bytes]:
    for argv in PIPELINE:
        proc = subprocess.run(
            [sys.executable, "-m", "phem.cli", *argv],
            cwd=root,
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0, f"{argv[0]} failed:\n{proc.stdout}\n{proc.stderr}"
    return (root / "results.jsonl").read_bytes(), (root / "keywords.tsv").read_bytes()


def test_end_to_end_without_any_model(tmp_path):
    with criterion("end-to-end-no-model"):
        started = time.perf_counter()
        first = build_workspace(tmp_path / "run1")
        second = build_workspace(tmp_path / "run2")
        results_1, cache_1 = _run_pipeline(first["root"])
        results_2, cache_2 = _run_pipeline(second["root"])

        assert results_1 == results_2, "metric records differ between identical runs"
        assert cache_1 == cache_2, "keyword caches differ between identical runs"

        lines = results_1.decode("utf-8").strip().splitlines()
        assert len(lines) == 3
        import json

        by_kind = {json.loads(l)["record"]: json.loads(l) for l in lines}
        assert by_kind["cluster"]["acc"] == 1.0
        assert by_kind["expansion"]["map10"] == 1.0
        assert by_kind["grounding"]["keyword_ratio"] > by_kind["grounding"]["phrase_ratio"]
        assert time.perf_counter() - started < 60.0
