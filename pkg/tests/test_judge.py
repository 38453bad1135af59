import json

import numpy as np
import pytest

from mvprompt.config import HIGH_LEVEL_DIMENSIONS
from mvprompt.errors import MalformedVerdict, ProviderError, UnknownMetric
from mvprompt.imaging import RasterImage
from mvprompt.judge import (
    JudgeTemplate,
    JudgeVerdict,
    VerdictCache,
    build_request,
    judge_candidate,
    parse_verdict,
    view_pairs,
)
from mvprompt.scoring import MultiViewSet


def make_set(cid="c0", shade=0):
    views = []
    for i in range(9):
        px = np.full((32, 32, 3), 15, dtype=np.uint8)
        px[8:24, 8:24] = (100 + 10 * i + shade, 50, 50)
        views.append(RasterImage(px))
    return MultiViewSet(cid, tuple(views))


class ScriptedJudge:
    """Returns canned per-call responses; repeats the last one."""

    def __init__(self, responses):
        self.responses = list(responses)
        self.calls = 0

    def evaluate(self, request):
        resp = self.responses[min(self.calls, len(self.responses) - 1)]
        self.calls += 1
        if resp is ProviderError:
            raise ProviderError("scripted outage")
        return resp


class ConstantJudge:
    def __init__(self, score):
        self.score = score
        self.requests = []

    def evaluate(self, request):
        self.requests.append(request)
        return json.dumps({"score": self.score, "rationale": "scripted"})


class PerPairJudge:
    """Score depends on the pair index via a lookup table."""

    def __init__(self, table):
        self.table = table

    def evaluate(self, request):
        return json.dumps({"score": self.table[request.pair_index], "rationale": ""})


class TestTemplate:
    def test_version_changes_with_text(self):
        t1 = JudgeTemplate()
        t2 = JudgeTemplate(rubric=t1.rubric + " Extra step.")
        assert t1.version != t2.version

    def test_render_contains_all_components(self):
        t = JudgeTemplate()
        text = t.render("plausibility_3d", "a pink cat")
        assert "a pink cat" in text
        assert "Calibration examples" in text
        assert "step by step" in text
        assert '"score"' in text

    def test_unknown_metric(self):
        with pytest.raises(UnknownMetric):
            JudgeTemplate().render("style", "x")


class TestBuildRequest:
    def test_request_references_two_images(self):
        mv = make_set()
        req = build_request("plausibility_3d", mv, (0, 1), "a cat", JudgeTemplate())
        assert req.image_a is mv.views[0]
        assert req.image_b is mv.views[1]
        assert req.pair_index == 0

    def test_pair_topology_and_request_count(self):
        pairs = view_pairs()
        assert pairs == [(i, i + 1) for i in range(8)]
        assert len(pairs) * len(HIGH_LEVEL_DIMENSIONS) == 32

    def test_template_version_changes_cache_key(self):
        mv = make_set()
        t1 = JudgeTemplate()
        t2 = JudgeTemplate(calibration=t1.calibration + " More.")
        r1 = build_request("plausibility_3d", mv, (0, 1), "a cat", t1)
        r2 = build_request("plausibility_3d", mv, (0, 1), "a cat", t2)
        assert r1.cache_key() != r2.cache_key()
        assert r1.cache_key()[2:] == r2.cache_key()[2:]

    def test_rejects_low_level_metric(self):
        with pytest.raises(UnknownMetric):
            build_request("clip_score", make_set(), (0, 1), "a cat", JudgeTemplate())


class TestParseVerdict:
    def test_strict_json(self):
        v = parse_verdict('{"score": 7, "rationale": "minor seam"}', "plausibility_3d")
        assert v.raw == 7
        assert v.normalized == pytest.approx(0.7)
        assert v.rationale == "minor seam"

    def test_fallback_first_integer(self):
        v = parse_verdict("Score: 9/10. Clean silhouette.", "plausibility_3d")
        assert v.raw == 9
        assert "Clean silhouette" in v.rationale

    def test_out_of_range_is_malformed(self):
        with pytest.raises(MalformedVerdict):
            parse_verdict('{"score": 15}', "plausibility_3d")

    def test_zero_is_malformed(self):
        with pytest.raises(MalformedVerdict):
            parse_verdict('{"score": 0}', "plausibility_3d")

    def test_garbage_is_malformed(self):
        with pytest.raises(MalformedVerdict):
            parse_verdict("no numbers here at all", "plausibility_3d")

    def test_json_embedded_in_prose(self):
        v = parse_verdict('Here you go: {"score": 4, "rationale": "warped"} Thanks!', "low_level_texture")
        assert v.raw == 4 and v.rationale == "warped"

    def test_regions_parsed_and_validated(self):
        v = parse_verdict('{"score": 3, "regions": [[0.1, 0.1, 0.5, 0.5]]}', "plausibility_3d")
        assert v.regions == ((0.1, 0.1, 0.5, 0.5),)
        with pytest.raises(MalformedVerdict):
            parse_verdict('{"score": 3, "regions": [[0.5, 0.5, 0.1, 0.1]]}', "plausibility_3d")


class TestJudgeCandidate:
    def test_constant_score_gives_constant_mean(self):
        result = judge_candidate(make_set(), "a cat", ConstantJudge(8))
        for metric in HIGH_LEVEL_DIMENSIONS:
            assert result.scores[metric] is not None
            assert result.scores[metric].value == pytest.approx(0.8)
            assert len(result.verdicts[metric]) == 8

    def test_mixed_scores_mean_oracle(self):
        # pairs 0..3 score 10, pairs 4..7 score 6: mean = 8 -> 0.8
        table = {i: (10 if i < 4 else 6) for i in range(8)}
        result = judge_candidate(make_set(), "a cat", PerPairJudge(table))
        expected = sum(table.values()) / 8 / 10
        for metric in HIGH_LEVEL_DIMENSIONS:
            assert result.scores[metric].value == pytest.approx(expected)
            assert result.scores[metric].value == pytest.approx(0.8)

    def test_always_malformed_yields_all_missing(self):
        result = judge_candidate(make_set(), "a cat", ScriptedJudge(["total nonsense"]))
        assert all(result.scores[m] is None for m in HIGH_LEVEL_DIMENSIONS)

    def test_provider_error_yields_missing_without_crash(self):
        result = judge_candidate(make_set(), "a cat", ScriptedJudge([ProviderError]))
        assert all(result.scores[m] is None for m in HIGH_LEVEL_DIMENSIONS)

    def test_no_provider_all_missing(self):
        result = judge_candidate(make_set(), "a cat", None)
        assert all(result.scores[m] is None for m in HIGH_LEVEL_DIMENSIONS)

    def test_retry_salvages_flaky_judge(self):
        class Flaky:
            def __init__(self):
                self.by_key = {}

            def evaluate(self, request):
                key = (request.metric, request.pair_index)
                n = self.by_key.get(key, 0)
                self.by_key[key] = n + 1
                if n == 0:
                    return "garbage"
                return '{"score": 6}'

        result = judge_candidate(make_set(), "a cat", Flaky())
        for metric in HIGH_LEVEL_DIMENSIONS:
            assert result.scores[metric].value == pytest.approx(0.6)

    def test_regions_attributed_to_both_views_of_pair(self):
        class RegionJudge:
            def evaluate(self, request):
                if request.metric == "plausibility_3d" and request.pair_index == 3:
                    return '{"score": 2, "regions": [[0.0, 0.0, 0.4, 0.4]]}'
                return '{"score": 9}'

        result = judge_candidate(make_set(), "a cat", RegionJudge())
        assert 3 in result.regions_by_view and 4 in result.regions_by_view


class TestVerdictCache:
    def test_cache_roundtrip_byte_identical(self, tmp_path):
        cache = VerdictCache(tmp_path)
        mv = make_set()
        req = build_request("plausibility_3d", mv, (0, 1), "a cat", JudgeTemplate())
        verdict = parse_verdict('{"score": 7, "rationale": "ok"}', "plausibility_3d", 0)
        cache.put(req, verdict)
        path = cache._path(req)
        first = path.read_bytes()
        hit = cache.get(req)
        assert hit is not None and hit.raw == 7 and hit.rationale == "ok"
        cache.put(req, hit)
        assert path.read_bytes() == first

    def test_cache_layout(self, tmp_path):
        cache = VerdictCache(tmp_path)
        mv = make_set()
        t = JudgeTemplate()
        req = build_request("low_level_texture", mv, (2, 3), "a cat", t)
        cache.put(req, JudgeVerdict("low_level_texture", 5, "", 2))
        expected = tmp_path / t.version / "low_level_texture"
        assert expected.is_dir()
        assert len(list(expected.glob("*_*.json"))) == 1

    def test_cached_judge_not_reinvoked(self, tmp_path):
        cache = VerdictCache(tmp_path)
        judge = ConstantJudge(8)
        mv = make_set()
        judge_candidate(mv, "a cat", judge, cache=cache)
        first_calls = len(judge.requests)
        assert first_calls == 32
        judge_candidate(mv, "a cat", judge, cache=cache)
        assert len(judge.requests) == first_calls
