"""Multimodal-judge orchestration for the four high-level dimensions:
request construction over consecutive view pairs, verdict parsing with a
lenient fallback, bounded retries, aggregation, and a content-addressed
disk cache.
"""

from __future__ import annotations

import hashlib
import json
import re
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .config import HIGH_LEVEL_DIMENSIONS, EngineConfig, DEFAULT_CONFIG
from .errors import MalformedVerdict, ProviderError, UnknownMetric
from .scoring import DimensionScore, MultiViewSet
from .providers.base import JudgeProvider, JudgeRequest

PAIR_COUNT = 8  # consecutive pairs (v0,v1)..(v7,v8) over the yaw-ordered views

_TASK_DEFINITIONS = {
    "text_image_alignment": (
        "Judge how faithfully the rendered object matches the text description: "
        "subject identity, named attributes, colors, and style."
    ),
    "plausibility_3d": (
        "Judge whether the object reads as one coherent solid: consistent "
        "silhouette between the two rotations, no floating parts, no impossible "
        "geometry, no collapsed or mirrored back side."
    ),
    "texture_geometry": (
        "Judge whether surface detail follows the underlying shape: textures "
        "wrap around contours instead of sliding, seams stay aligned, and "
        "shading agrees with the geometry."
    ),
    "low_level_texture": (
        "Judge fine surface quality: edge sharpness, pattern continuity, color "
        "detail, and absence of smearing or noise artifacts."
    ),
}

_CALIBRATION_EXAMPLES = (
    "Calibration examples:\n"
    "- High quality (9-10): the two rotations clearly show the same object; "
    "edges stay crisp, colors and material look continuous across the turn.\n"
    "- Low quality (1-3): the second rotation deforms, loses limbs or parts, "
    "turns dark or smeared, or shows a different object than the first."
)

_RUBRIC = (
    "Evaluate step by step:\n"
    "1. Describe what both images show.\n"
    "2. List agreements and disagreements between the two rotations for the "
    "criterion above.\n"
    "3. Weigh the severity of each disagreement.\n"
    "4. Commit to a single integer score from 1 (worst) to 10 (best)."
)

_OUTPUT_FORMAT = (
    'Respond with strict JSON only: {"score": <integer 1-10>, "rationale": '
    '"<one or two sentences>", "regions": [[x0, y0, x1, y1], ...]} where '
    "regions is an optional list of normalized rectangles (0-1 coordinates) "
    "marking defective areas."
)


@dataclass(frozen=True)
class JudgeTemplate:
    """Prompt template with task definitions, calibration examples, rubric,
    and the output-format contract. The version id is a content hash, so any
    text change changes the cache key."""

    task_definitions: dict[str, str] = field(default_factory=lambda: dict(_TASK_DEFINITIONS))
    calibration: str = _CALIBRATION_EXAMPLES
    rubric: str = _RUBRIC
    output_format: str = _OUTPUT_FORMAT

    @property
    def version(self) -> str:
        payload = json.dumps(
            [sorted(self.task_definitions.items()), self.calibration, self.rubric, self.output_format],
            sort_keys=True,
        )
        return hashlib.sha256(payload.encode()).hexdigest()[:12]

    def render(self, metric: str, prompt_text: str) -> str:
        if metric not in self.task_definitions:
            raise UnknownMetric(f"no task definition for metric {metric!r}")
        return (
            f"You are scoring two consecutive rotations of one 3D model generated "
            f'for the prompt: "{prompt_text}".\n\n'
            f"Criterion ({metric}): {self.task_definitions[metric]}\n\n"
            f"{self.calibration}\n\n{self.rubric}\n\n{self.output_format}"
        )


@dataclass(frozen=True)
class JudgeVerdict:
    metric: str
    raw: int                  # 1..10
    rationale: str
    pair_index: int
    regions: tuple[tuple[float, float, float, float], ...] = ()

    @property
    def normalized(self) -> float:
        return self.raw / 10.0

    def to_dict(self) -> dict:
        return {
            "metric": self.metric,
            "raw": self.raw,
            "normalized": self.normalized,
            "rationale": self.rationale,
            "pair_index": self.pair_index,
            "regions": [list(r) for r in self.regions],
        }


def view_pairs() -> list[tuple[int, int]]:
    """The 8 consecutive pairs over views ordered by yaw, front included."""
    return [(i, i + 1) for i in range(PAIR_COUNT)]


def build_request(
    metric: str,
    mv: MultiViewSet,
    pair: tuple[int, int],
    prompt_text: str,
    template: JudgeTemplate,
) -> JudgeRequest:
    if metric not in HIGH_LEVEL_DIMENSIONS:
        raise UnknownMetric(f"{metric!r} is not a judge metric; expected one of {HIGH_LEVEL_DIMENSIONS}")
    a, b = pair
    return JudgeRequest(
        metric=metric,
        template_version=template.version,
        template_text=template.render(metric, prompt_text),
        prompt_text=prompt_text,
        image_a=mv.views[a],
        image_b=mv.views[b],
        pair_index=a,
    )


_JSON_BLOCK = re.compile(r"\{.*\}", re.DOTALL)
_FALLBACK_SCORE = re.compile(r"\b(10|[1-9])\b")


def _parse_regions(raw) -> tuple[tuple[float, float, float, float], ...]:
    regions = []
    for item in raw or []:
        if not isinstance(item, (list, tuple)) or len(item) != 4:
            raise MalformedVerdict(f"region must be a 4-element rect, got {item!r}")
        x0, y0, x1, y1 = (float(v) for v in item)
        if not (0 <= x0 <= x1 <= 1 and 0 <= y0 <= y1 <= 1):
            raise MalformedVerdict(f"region out of normalized bounds: {item!r}")
        regions.append((x0, y0, x1, y1))
    return tuple(regions)


def parse_verdict(response: str, metric: str, pair_index: int = 0) -> JudgeVerdict:
    """Strict JSON extraction with one lenient fallback.

    The fallback takes the first standalone integer in 1..10 as the score and
    the full response as rationale. Anything else raises MalformedVerdict.
    """
    block = None
    try:
        block = json.loads(response)
    except (json.JSONDecodeError, TypeError):
        m = _JSON_BLOCK.search(response or "")
        if m:
            try:
                block = json.loads(m.group(0))
            except json.JSONDecodeError:
                block = None

    if isinstance(block, dict) and "score" in block:
        score = block["score"]
        if isinstance(score, bool) or not isinstance(score, (int, float)) or int(score) != score:
            raise MalformedVerdict(f"score is not an integer: {score!r}")
        score = int(score)
        if not 1 <= score <= 10:
            raise MalformedVerdict(f"score out of 1-10 range: {score}")
        return JudgeVerdict(
            metric=metric,
            raw=score,
            rationale=str(block.get("rationale", "")),
            pair_index=pair_index,
            regions=_parse_regions(block.get("regions")),
        )

    m = _FALLBACK_SCORE.search(response or "")
    if m:
        return JudgeVerdict(
            metric=metric,
            raw=int(m.group(1)),
            rationale=(response or "").strip(),
            pair_index=pair_index,
        )
    raise MalformedVerdict("no parsable score in judge response")


@dataclass(frozen=True)
class JudgeResult:
    scores: dict[str, DimensionScore | None]          # per high-level metric
    verdicts: dict[str, tuple[JudgeVerdict, ...]]     # per metric, by pair order
    regions_by_view: dict[int, list[tuple[float, float, float, float]]]


class VerdictCache:
    """Disk cache keyed by (template version, metric, ordered image hashes)."""

    def __init__(self, root: Path | str):
        self.root = Path(root)

    def _path(self, request: JudgeRequest) -> Path:
        version, metric, ha, hb = request.cache_key()
        return self.root / version / metric / f"{ha}_{hb}.json"

    def get(self, request: JudgeRequest) -> JudgeVerdict | None:
        path = self._path(request)
        if not path.exists():
            return None
        data = json.loads(path.read_text())
        return JudgeVerdict(
            metric=data["metric"],
            raw=data["raw"],
            rationale=data["rationale"],
            pair_index=request.pair_index,
            regions=tuple(tuple(r) for r in data.get("regions", [])),
        )

    def put(self, request: JudgeRequest, verdict: JudgeVerdict) -> None:
        path = self._path(request)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(verdict.to_dict(), sort_keys=True))


def _evaluate_pair(
    provider: JudgeProvider,
    request: JudgeRequest,
    retries: int,
    cache: VerdictCache | None,
) -> JudgeVerdict | None:
    if cache is not None:
        hit = cache.get(request)
        if hit is not None:
            return hit
    for _ in range(retries + 1):
        try:
            response = provider.evaluate(request)
            verdict = parse_verdict(response, request.metric, request.pair_index)
        except MalformedVerdict:
            continue
        except ProviderError:
            return None
        if cache is not None:
            cache.put(request, verdict)
        return verdict
    return None


def judge_candidate(
    mv: MultiViewSet,
    prompt_text: str,
    provider: JudgeProvider | None,
    template: JudgeTemplate | None = None,
    config: EngineConfig = DEFAULT_CONFIG,
    cache: VerdictCache | None = None,
) -> JudgeResult:
    """Score all four high-level metrics over the 8 view pairs.

    Each metric aggregates the normalized pair scores (mean by default,
    median by config). A metric with no successful pair verdicts is missing;
    failure never raises past this function.
    """
    empty = {m: None for m in HIGH_LEVEL_DIMENSIONS}
    if provider is None:
        return JudgeResult(scores=empty, verdicts={m: () for m in HIGH_LEVEL_DIMENSIONS}, regions_by_view={})

    template = template or JudgeTemplate()
    pairs = view_pairs()
    requests = [
        (metric, pair, build_request(metric, mv, pair, prompt_text, template))
        for metric in HIGH_LEVEL_DIMENSIONS
        for pair in pairs
    ]

    results: dict[tuple[str, int], JudgeVerdict | None] = {}
    workers = max(1, config.in_flight_limit)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = {
            pool.submit(_evaluate_pair, provider, req, config.judge_retries, cache): (metric, pair[0])
            for metric, pair, req in requests
        }
        for future, key in futures.items():
            try:
                results[key] = future.result()
            except Exception:
                results[key] = None

    scores: dict[str, DimensionScore | None] = {}
    verdicts: dict[str, tuple[JudgeVerdict, ...]] = {}
    regions_by_view: dict[int, list[tuple[float, float, float, float]]] = {}
    for metric in HIGH_LEVEL_DIMENSIONS:
        got = [results.get((metric, i)) for i in range(PAIR_COUNT)]
        present = [v for v in got if v is not None]
        verdicts[metric] = tuple(present)
        if not present:
            scores[metric] = None
            continue
        values = [v.normalized for v in present]
        agg = statistics.median(values) if config.judge_aggregate == "median" else statistics.fmean(values)
        raw_agg = statistics.median([v.raw for v in present]) if config.judge_aggregate == "median" else statistics.fmean(
            [v.raw for v in present]
        )
        scores[metric] = DimensionScore(value=agg, raw=raw_agg, provenance="judge")
        for v in present:
            if v.regions:
                for view_index in (v.pair_index, v.pair_index + 1):
                    regions_by_view.setdefault(view_index, []).extend(v.regions)

    return JudgeResult(scores=scores, verdicts=verdicts, regions_by_view=regions_by_view)
