import numpy as np
import pytest

from mvprompt.config import SCORE_DIMENSIONS, EngineConfig
from mvprompt.errors import ConfigError, InsufficientData, KeywordAbsent, NoScoredCandidates, ProviderError
from mvprompt.imaging import BinaryMask
from mvprompt.promptlab import (
    ClusterResult,
    KeywordStat,
    MISC_CLUSTER,
    PromptRecord,
    ScoredPrompt,
    assign_section,
    attention_iou,
    augment,
    build_keyword_stats,
    cluster,
    extract_keywords,
    keyword_score,
    load_corpus,
    load_stopwords,
    project_2d,
    recommend,
    tokenize,
)
from mvprompt.scoring import DimensionScore, ScoreVector


def make_vector(values: dict):
    scores = {}
    for dim in SCORE_DIMENSIONS:
        v = values.get(dim)
        scores[dim] = None if v is None else DimensionScore(value=v, raw=v, provenance="computed")
    return ScoreVector(scores)


def scored(cid, text, values):
    return ScoredPrompt(candidate_id=cid, tokens=frozenset(tokenize(text)), scores=make_vector(values))


class StaticEmbedding:
    dimension = 4

    def __init__(self, table):
        self.table = table

    def embed_text(self, text):
        return np.asarray(self.table[text], dtype=float)

    def embed_image(self, img):
        raise NotImplementedError


class TestTokenize:
    def test_lowercase_and_punctuation(self):
        assert tokenize("A Pink-Cat, with Blue eyes!") == ["a", "pink", "cat", "with", "blue", "eyes"]

    def test_containment_is_token_membership(self):
        assert "cat" in tokenize("a catalog of cats, one cat")
        assert "catalog" in tokenize("a catalog")


class TestAssets:
    def test_corpus_loads_with_hash(self):
        corpus = load_corpus()
        assert len(corpus.entries) >= 40
        assert len(corpus.content_hash) == 16

    def test_stopwords_exclude_comments(self):
        stops = load_stopwords()
        assert "the" in stops.entries
        assert not any(e.startswith("#") for e in stops.entries)


class FailingLLM:
    def suggest_prompts(self, base, modifiers, n, seed):
        raise ProviderError("offline")


class EchoLLM:
    """Returns deterministic variants; some duplicates to exercise dedup."""

    def suggest_prompts(self, base, modifiers, n, seed):
        out = []
        for i in range(n):
            out.append(f"{base}, {modifiers[(seed + i) % len(modifiers)]}")
        out[1:2] = [out[0]]  # inject a duplicate
        return out


class TestAugment:
    def test_count_and_base_token_retention(self):
        t0 = PromptRecord(id="p0", text="a pink cat")
        records = augment(t0, EchoLLM(), load_corpus(), n=8, seed=3)
        assert len(records) == 8
        assert len({r.text.lower() for r in records}) == 8
        for r in records:
            assert "cat" in tokenize(r.text)
            assert not r.drift
            assert r.parent_id == "p0"
            assert r.source == "augmented"

    def test_lower_bound_honored(self):
        t0 = PromptRecord(id="p0", text="a pink cat")
        records = augment(t0, None, load_corpus(), n=4, seed=1)
        assert len(records) == 4

    def test_out_of_range_count_rejected(self):
        t0 = PromptRecord(id="p0", text="a cat")
        with pytest.raises(ConfigError):
            augment(t0, None, load_corpus(), n=3)
        with pytest.raises(ConfigError):
            augment(t0, None, load_corpus(), n=65)

    def test_provider_failure_falls_back_to_corpus(self):
        t0 = PromptRecord(id="p0", text="a pink cat")
        records = augment(t0, FailingLLM(), load_corpus(), n=6, seed=9)
        assert len(records) == 6
        assert all("cat" in tokenize(r.text) for r in records)

    def test_seed_reproducibility(self):
        t0 = PromptRecord(id="p0", text="a pink cat")
        a = [r.text for r in augment(t0, None, load_corpus(), n=16, seed=7)]
        b = [r.text for r in augment(t0, None, load_corpus(), n=16, seed=7)]
        c = [r.text for r in augment(t0, None, load_corpus(), n=16, seed=8)]
        assert a == b
        assert a != c

    def test_drift_flagged_when_base_tokens_lost(self):
        class DriftingLLM:
            def suggest_prompts(self, base, modifiers, n, seed):
                return [f"unrelated thing {i}" for i in range(n)]

        t0 = PromptRecord(id="p0", text="a pink cat")
        records = augment(t0, DriftingLLM(), load_corpus(), n=4, seed=0)
        assert all(r.drift for r in records[:4] if "cat" not in r.text)


class TestProject2d:
    def test_identical_embeddings_identical_points(self):
        table = {"a": [1, 2, 3, 4], "b": [1, 2, 3, 4], "c": [5, 0, 0, 0]}
        prompts = [PromptRecord(id=i, text=i) for i in table]
        pts = project_2d(prompts, StaticEmbedding(table))
        assert np.allclose(pts[0], pts[1])

    def test_2d_embeddings_preserve_distances(self):
        table = {"a": [0, 0, 0, 0], "b": [3, 0, 0, 0], "c": [0, 4, 0, 0]}
        prompts = [PromptRecord(id=i, text=i) for i in table]
        pts = project_2d(prompts, StaticEmbedding(table))
        orig = np.array([[0, 0], [3, 0], [0, 4]], dtype=float)

        def pairwise(m):
            return sorted(
                float(np.linalg.norm(m[i] - m[j])) for i in range(len(m)) for j in range(i + 1, len(m))
            )

        assert np.allclose(pairwise(pts), pairwise(orig), atol=1e-9)

    def test_collinear_points_stay_collinear(self):
        # hand oracle: points on a line in 4D project onto one principal axis,
        # so the second component is 0 and the spacing ratio 1:2 is preserved
        base = np.array([1.0, 2.0, 3.0, 4.0])
        step = np.array([1.0, 1.0, 0.0, -1.0])
        table = {"a": base, "b": base + step, "c": base + 3 * step}
        prompts = [PromptRecord(id=i, text=i) for i in table]
        pts = project_2d(prompts, StaticEmbedding(table))
        assert np.allclose(pts[:, 1], 0.0, atol=1e-9)
        d01 = np.linalg.norm(pts[1] - pts[0])
        d12 = np.linalg.norm(pts[2] - pts[1])
        assert d12 / d01 == pytest.approx(2.0, abs=1e-9)

    def test_insufficient_prompts(self):
        with pytest.raises(InsufficientData):
            project_2d([PromptRecord(id="a", text="a")], StaticEmbedding({"a": [1, 0, 0, 0]}))

    def test_deterministic_reruns(self):
        rng = np.random.default_rng(4)
        table = {f"t{i}": rng.normal(size=4) for i in range(10)}
        prompts = [PromptRecord(id=k, text=k) for k in table]
        p1 = project_2d(prompts, StaticEmbedding(table))
        p2 = project_2d(prompts, StaticEmbedding(table))
        assert np.array_equal(p1, p2)


def two_blobs(n_per=20, separation=10.0, radius=1.0, seed=0):
    rng = np.random.default_rng(seed)
    a = rng.normal(scale=radius / 3, size=(n_per, 2))
    b = rng.normal(scale=radius / 3, size=(n_per, 2)) + [separation * radius, 0.0]
    return np.vstack([a, b]), [0] * n_per + [1] * n_per


class TestCluster:
    def test_two_blob_exact_recovery(self):
        points, truth = two_blobs()
        result = cluster(points)
        assert MISC_CLUSTER not in result.sizes
        assert sorted(result.sizes.values()) == [20, 20]
        # same partition as ground truth
        mapping = {}
        for label, t in zip(result.labels, truth):
            mapping.setdefault(t, label)
            assert mapping[t] == label
        assert mapping[0] != mapping[1]

    def test_permutation_invariance(self):
        points, _ = two_blobs(seed=3)
        base = cluster(points)
        rng = np.random.default_rng(11)
        for _ in range(20):
            perm = rng.permutation(len(points))
            permuted = cluster(points[perm])
            # canonical labels: cluster of the lowest original index is 0
            expected = [base.labels[i] for i in perm]
            first = {}
            for lbl in expected:
                if lbl not in first:
                    first[lbl] = len(first)
            expected = [first[l] for l in expected]
            assert list(permuted.labels) == expected

    def test_all_identical_points_single_cluster(self):
        points = np.ones((5, 2))
        result = cluster(points)
        assert result.sizes == {0: 5}

    def test_below_min_cluster_size_is_misc(self):
        result = cluster(np.array([[0.0, 0.0], [1.0, 1.0]]))
        assert result.sizes == {MISC_CLUSTER: 2}

    def test_insufficient_points(self):
        with pytest.raises(InsufficientData):
            cluster(np.array([[0.0, 0.0]]))


class TestExtractKeywords:
    def test_frequency_ranking(self):
        prompts = [PromptRecord(id="a", text="red cat"), PromptRecord(id="b", text="red dog")]
        kws = extract_keywords(prompts)
        assert kws[0].keyword == "red"
        assert kws[0].frequency == 2

    def test_all_stopwords_empty(self):
        prompts = [PromptRecord(id="a", text="the of and")]
        assert extract_keywords(prompts) == []

    def test_lexicographic_tie_break(self):
        prompts = [PromptRecord(id="a", text="dog cat")]
        kws = extract_keywords(prompts)
        assert [k.keyword for k in kws] == ["cat", "dog"]

    def test_short_tokens_excluded(self):
        prompts = [PromptRecord(id="a", text="ox ox ox wolf")]
        kws = extract_keywords(prompts)
        assert [k.keyword for k in kws] == ["wolf"]

    def test_top_k_limit(self):
        text = " ".join(f"word{i:02d}" for i in range(30))
        kws = extract_keywords([PromptRecord(id="a", text=text)], top_k=12)
        assert len(kws) == 12


class TestKeywordScore:
    def test_mean_over_containing(self):
        candidates = [
            scored("c1", "a metallic orb", {"plausibility_3d": 0.8}),
            scored("c2", "metallic cube", {"plausibility_3d": 0.6}),
            scored("c3", "wooden cube", {"plausibility_3d": 0.1}),
        ]
        means = keyword_score("metallic", candidates)
        assert means["plausibility_3d"] == pytest.approx(0.7)

    def test_single_candidate_verbatim(self):
        values = {d: 0.3 for d in SCORE_DIMENSIONS}
        candidates = [scored("c1", "a glass torus", values)]
        means = keyword_score("glass", candidates)
        assert all(means[d] == pytest.approx(0.3) for d in SCORE_DIMENSIONS)

    def test_missing_values_skipped(self):
        candidates = [
            scored("c1", "shiny orb", {"clip_i": 0.9}),
            scored("c2", "shiny cube", {"clip_i": None}),
        ]
        means = keyword_score("shiny", candidates)
        assert means["clip_i"] == pytest.approx(0.9)
        assert means["clip_score"] is None

    def test_absent_keyword(self):
        with pytest.raises(KeywordAbsent):
            keyword_score("dragon", [scored("c1", "a cat", {})])

    def test_matches_brute_force_oracle(self):
        rng = np.random.default_rng(17)
        words = ["cat", "dog", "orb", "cube", "glass", "wood", "metal", "ring"]
        candidates = []
        for i in range(50):
            picks = rng.choice(words, size=3, replace=False)
            values = {d: float(rng.random()) if rng.random() > 0.2 else None for d in SCORE_DIMENSIONS}
            candidates.append(scored(f"c{i}", " ".join(picks), values))
        for word in words:
            containing = [c for c in candidates if word in c.tokens]
            if not containing:
                continue
            means = keyword_score(word, candidates)
            for dim in SCORE_DIMENSIONS:
                present = [c.scores.value(dim) for c in containing if c.scores.value(dim) is not None]
                if present:
                    assert means[dim] == sum(present) / len(present)
                else:
                    assert means[dim] is None


def stat(keyword, freq, values, cluster_id=0):
    means = {d: values.get(d) for d in SCORE_DIMENSIONS}
    return KeywordStat(
        keyword=keyword, frequency=freq, cluster_id=cluster_id, mean_scores=means, section=assign_section(means)
    )


class TestRecommend:
    def test_rank_by_focus_dimension(self):
        stats = [
            stat("matte", 3, {"plausibility_3d": 0.5}),
            stat("glossy", 2, {"plausibility_3d": 0.9}),
        ]
        out = recommend(stats, ["plausibility_3d"], "a cat")
        assert [s.keyword for s in out] == ["glossy", "matte"]

    def test_exclusion_of_current_prompt_tokens(self):
        stats = [stat("glossy", 2, {"plausibility_3d": 0.9}), stat("matte", 1, {"plausibility_3d": 0.5})]
        out = recommend(stats, ["plausibility_3d"], "a glossy cat")
        assert [s.keyword for s in out] == ["matte"]

    def test_full_focus_matches_brute_force(self):
        rng = np.random.default_rng(23)
        stats = []
        for i in range(12):
            values = {d: float(rng.random()) if rng.random() > 0.3 else None for d in SCORE_DIMENSIONS}
            stats.append(stat(f"word{i:02d}", int(rng.integers(1, 9)), values))
        out = recommend(stats, list(SCORE_DIMENSIONS), "a cat")

        def brute(s):
            vals = [v for v in s.mean_scores.values() if v is not None]
            return sum(vals) / len(vals) if vals else None

        expected = [s for s in stats if brute(s) is not None]
        expected.sort(key=lambda s: (-brute(s), -s.frequency, s.keyword))
        assert [s.keyword for s in out] == [s.keyword for s in expected]

    def test_deterministic_total_order(self):
        stats = [
            stat("aaa", 2, {"clip_score": 0.5}),
            stat("bbb", 2, {"clip_score": 0.5}),
            stat("ccc", 3, {"clip_score": 0.5}),
        ]
        out1 = recommend(stats, ["clip_score"], "x")
        out2 = recommend(list(stats), ["clip_score"], "x")
        assert [s.keyword for s in out1] == ["ccc", "aaa", "bbb"]
        assert [s.keyword for s in out1] == [s.keyword for s in out2]

    def test_empty_stats_rejected(self):
        with pytest.raises(NoScoredCandidates):
            recommend([], ["clip_score"], "x")

    def test_unknown_focus_rejected(self):
        with pytest.raises(ConfigError):
            recommend([stat("a", 1, {})], ["sharpness"], "x")


class TestSectionAssignment:
    def test_argmax_dimension(self):
        s = stat("x", 1, {"clip_score": 0.2, "plausibility_3d": 0.9})
        assert s.section == "plausibility_3d"

    def test_tie_breaks_by_fixed_order(self):
        s = stat("x", 1, {"color_consistency": 0.5, "clip_score": 0.5})
        assert s.section == "color_consistency"

    def test_unscored_keyword_has_no_section(self):
        s = stat("x", 1, {})
        assert s.section is None


class TestAttentionIoU:
    def test_attention_equals_foreground(self):
        mask = np.zeros((20, 20), dtype=bool)
        mask[5:15, 5:15] = True
        attention = mask.astype(float)
        assert attention_iou(attention, BinaryMask(mask)) == pytest.approx(1.0)

    def test_disjoint(self):
        mask = np.zeros((20, 20), dtype=bool)
        mask[:, 10:] = True
        attention = np.zeros((20, 20))
        attention[:, :5] = 1.0
        assert attention_iou(attention, BinaryMask(mask)) == 0.0

    def test_left_half_vs_centered_box_pixel_oracle(self):
        h = w = 20
        attention = np.zeros((h, w))
        attention[:, : w // 2] = 1.0  # left half
        mask = np.zeros((h, w), dtype=bool)
        mask[5:15, 5:15] = True  # centered box
        attn_mask = attention > 0.5
        inter = sum(1 for y in range(h) for x in range(w) if attn_mask[y, x] and mask[y, x])
        union = sum(1 for y in range(h) for x in range(w) if attn_mask[y, x] or mask[y, x])
        assert attention_iou(attention, BinaryMask(mask)) == pytest.approx(inter / union)


class TestBuildKeywordStats:
    def test_stats_cover_all_clusters(self):
        prompts = [
            PromptRecord(id="p0", text="red cat toy"),
            PromptRecord(id="p1", text="red cat figure"),
            PromptRecord(id="p2", text="blue dog toy"),
            PromptRecord(id="p3", text="blue dog statue"),
        ]
        points = np.array([[0, 0], [0.1, 0], [10, 10], [10.1, 10]])
        result = ClusterResult(points=points, labels=(0, 0, 1, 1), sizes={0: 2, 1: 2})
        candidates = [scored("c0", "red cat toy", {"clip_score": 0.8}), scored("c1", "blue dog toy", {"clip_score": 0.4})]
        stats = build_keyword_stats(result, prompts, candidates)
        by_cluster = {s.cluster_id for s in stats}
        assert by_cluster == {0, 1}
        red = next(s for s in stats if s.keyword == "red")
        assert red.mean_scores["clip_score"] == pytest.approx(0.8)
