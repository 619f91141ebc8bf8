import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phem.backend.providers import SyntheticBlobProvider
from phem.core import EmbeddingVector, Phrase
from phem.expansion import (
    EmptyQuerySetError,
    MissingSeedEmbeddingError,
    RankedList,
    ap_at_k,
    expand,
    map_at_k,
)
from phem.ingest import SeedQuery


def enumerate_ap(surfaces, relevant, k):
    """Position-by-position AP oracle, written independently of ap_at_k."""
    if not relevant:
        return 0.0
    numerator = 0.0
    hits_so_far = 0
    for position in range(1, min(k, len(surfaces)) + 1):
        is_rel = surfaces[position - 1] in relevant
        if is_rel:
            hits_so_far += 1
            precision_here = hits_so_far / position
            numerator += precision_here
    return numerator / min(k, len(relevant))


def vec(*values):
    return EmbeddingVector(np.array(values, dtype=np.float32))


def query(*seed_surfaces, class_id=0):
    return SeedQuery(class_id=class_id, seeds=tuple(Phrase(s, label=class_id) for s in seed_surfaces))


def vocab_from(mapping, label=0):
    return [(Phrase(s, label=label), vec(*v)) for s, v in mapping.items()]


class TestExpand:
    def test_cosine_ordering(self):
        vocabulary = vocab_from(
            {
                "s1": (1.0, 0.0),
                "s2": (1.0, 0.0),
                "s3": (1.0, 0.0),
                "near": (0.8, 0.6),
                "far": (0.0, 1.0),
            }
        )
        ranked = expand(query("s1", "s2", "s3"), vocabulary, top_n=2)
        assert ranked.surfaces == ["near", "far"]
        assert ranked.entries[0][1] == pytest.approx(0.8, abs=1e-6)
        assert ranked.entries[1][1] == pytest.approx(0.0, abs=1e-6)

    def test_seeds_never_ranked(self):
        vocabulary = vocab_from(
            {"s1": (1.0, 0.0), "s2": (0.9, 0.1), "s3": (1.0, 0.1), "c": (0.5, 0.5)}
        )
        ranked = expand(query("s1", "s2", "s3"), vocabulary, top_n=1)
        assert ranked.surfaces == ["c"]

    def test_missing_seed_embedding(self):
        vocabulary = vocab_from({"s1": (1.0, 0.0), "c": (0.5, 0.5), "d": (1.0, 1.0), "e": (0.0, 1.0)})
        with pytest.raises(MissingSeedEmbeddingError):
            expand(query("s1", "zz", "ww"), vocabulary, top_n=1)

    def test_top_n_bounded_by_candidates(self):
        vocabulary = vocab_from({"s1": (1.0, 0.0), "s2": (0.9, 0.1), "s3": (1.0, 0.1), "c": (0.5, 0.5)})
        with pytest.raises(ValueError):
            expand(query("s1", "s2", "s3"), vocabulary, top_n=2)

    def test_tie_breaks_lexicographically(self):
        vocabulary = vocab_from(
            {"s1": (1.0, 0.0), "s2": (1.0, 0.0), "s3": (1.0, 0.0),
             "zebra": (0.5, 0.0), "apple": (1.0, 0.0)}
        )
        # both candidates have cosine 1.0 direction? apple exactly aligned, zebra also aligned
        ranked = expand(query("s1", "s2", "s3"), vocabulary, top_n=2)
        assert ranked.surfaces == ["apple", "zebra"]

    def test_blob_vocabulary_top10_all_from_seed_class(self):
        texts = [f"t{i}" for i in range(40)]
        assignment = {t: ("A" if i < 20 else "B") for i, t in enumerate(texts)}
        provider = SyntheticBlobProvider.orthogonal(assignment, dim=8, noise_sigma=0.01, seed=2)
        vectors = provider.embed_batch(texts)
        vocabulary = [
            (Phrase(t, label=0 if assignment[t] == "A" else 1), v) for t, v in zip(texts, vectors)
        ]
        q = SeedQuery(class_id=0, seeds=(vocabulary[0][0], vocabulary[1][0], vocabulary[2][0]))
        ranked = expand(q, vocabulary, top_n=10)

        # oracle: nearest-centroid labeling confirms every top entry is class A
        centroid = np.zeros(8)
        centroid[0] = 1.0
        for surface, _ in ranked.entries:
            assert assignment[surface] == "A"

    def test_scaling_a_candidate_does_not_change_its_cosine(self):
        base = vocab_from(
            {"s1": (1.0, 0.0), "s2": (1.0, 0.0), "s3": (1.0, 0.0), "c": (0.6, 0.8)}
        )
        scaled = vocab_from(
            {"s1": (1.0, 0.0), "s2": (1.0, 0.0), "s3": (1.0, 0.0), "c": (6.0, 8.0)}
        )
        r1 = expand(query("s1", "s2", "s3"), base, top_n=1)
        r2 = expand(query("s1", "s2", "s3"), scaled, top_n=1)
        assert r1.entries[0][1] == pytest.approx(r2.entries[0][1], abs=1e-6)


class TestRankedListInvariants:
    def test_rejects_increasing_scores(self):
        q = query("s1", "s2", "s3")
        with pytest.raises(ValueError):
            RankedList(q, (("a", 0.1), ("b", 0.5)))

    def test_rejects_seed_entries(self):
        q = query("s1", "s2", "s3")
        with pytest.raises(ValueError):
            RankedList(q, (("s1", 0.9),))


class TestApAtK:
    def test_perfect_prefix(self):
        assert ap_at_k(["a", "b", "c"], {"a", "b", "c", "d"}, 3) == 1.0

    def test_no_relevant_in_top_k(self):
        assert ap_at_k(["x", "y"], {"a"}, 2) == 0.0

    def test_enumerated_example(self):
        assert ap_at_k(["a", "b", "c"], {"a", "c"}, 3) == pytest.approx(0.8333333333, abs=1e-6)
        assert ap_at_k(["a", "b", "c"], {"a", "c"}, 3) == pytest.approx(
            enumerate_ap(["a", "b", "c"], {"a", "c"}, 3), abs=1e-12
        )

    def test_empty_relevant_is_zero(self):
        assert ap_at_k(["a", "b"], set(), 2) == 0.0

    def test_k_must_be_positive(self):
        with pytest.raises(ValueError):
            ap_at_k(["a"], {"a"}, 0)

    def test_matches_enumeration_on_random_rankings(self):
        rng = np.random.default_rng(13)
        universe = [f"e{i}" for i in range(30)]
        for _ in range(250):
            size = int(rng.integers(1, 25))
            ranking = list(rng.choice(universe, size=size, replace=False))
            relevant = set(rng.choice(universe, size=int(rng.integers(0, 15)), replace=False))
            k = int(rng.integers(1, 30))
            assert ap_at_k(ranking, relevant, k) == pytest.approx(
                enumerate_ap(ranking, relevant, k), abs=1e-12
            )

    @given(
        st.lists(st.sampled_from([f"e{i}" for i in range(12)]), max_size=12, unique=True),
        st.sets(st.sampled_from([f"e{i}" for i in range(12)]), max_size=8),
        st.integers(1, 12),
    )
    @settings(max_examples=150)
    def test_bounded(self, ranking, relevant, k):
        assert 0.0 <= ap_at_k(ranking, relevant, k) <= 1.0

    def test_promoting_a_relevant_entry_never_hurts(self):
        rng = np.random.default_rng(29)
        universe = [f"e{i}" for i in range(15)]
        for _ in range(100):
            ranking = list(rng.permutation(universe))
            relevant = set(rng.choice(universe, size=5, replace=False))
            k = int(rng.integers(1, 15))
            rel_positions = [i for i, s in enumerate(ranking) if s in relevant and i > 0]
            if not rel_positions:
                continue
            i = rel_positions[0]
            promoted = ranking.copy()
            promoted[i - 1], promoted[i] = promoted[i], promoted[i - 1]
            assert ap_at_k(promoted, relevant, k) >= ap_at_k(ranking, relevant, k) - 1e-12


class TestMapAtK:
    def test_single_query_equals_its_ap(self):
        ranking = ["a", "b", "c"]
        relevant = {"a", "c"}
        assert map_at_k([(ranking, relevant)], 3) == ap_at_k(ranking, relevant, 3)

    def test_mean_of_two(self):
        perfect = (["a"], {"a"})
        empty = (["x"], {"a"})
        assert map_at_k([perfect, empty], 1) == 0.5

    def test_empty_query_set(self):
        with pytest.raises(EmptyQuerySetError):
            map_at_k([], 10)
