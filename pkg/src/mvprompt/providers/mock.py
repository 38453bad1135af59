"""Seeded deterministic mock providers.

Every output is a pure function of (seed, request content), so full
pipelines replay byte-identically offline. Generation renders procedural
primitives (sphere / cube / torus silhouettes) at the correct yaw with
prompt-derived color and yaw-dependent shading, which gives the scoring
stack realistic, non-trivial values.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import ProviderError
from ..imaging import BinaryMask, RasterImage
from .base import GenerationResult, JudgeRequest, ProviderConfig

_U64 = np.uint64


def stable_hash(*parts: str | int) -> int:
    """64-bit hash of the joined parts, stable across processes."""
    payload = "\x1f".join(str(p) for p in parts)
    return int(hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16], 16)


def _rng(*parts: str | int) -> np.random.Generator:
    return np.random.default_rng(stable_hash(*parts))


def _maybe_stall(config: ProviderConfig) -> None:
    if config.mock_latency_ms > 0:
        time.sleep(config.mock_latency_ms / 1000.0)


def _hsv_to_rgb(h: float, s: float, v: float) -> tuple[int, int, int]:
    i = int(h * 6.0) % 6
    f = h * 6.0 - int(h * 6.0)
    p, q, t = v * (1 - s), v * (1 - f * s), v * (1 - (1 - f) * s)
    r, g, b = [(v, t, p), (q, v, p), (p, v, t), (p, q, v), (t, p, v), (v, p, q)][i]
    return int(r * 255), int(g * 255), int(b * 255)


_BACKGROUND = (24, 26, 30)
_SHAPES = ("sphere", "cube", "torus")


@dataclass(frozen=True)
class _CandidateStyle:
    shape: str
    color: tuple[int, int, int]
    offset: tuple[float, float]   # fractional center offset
    scale: float                  # base radius as a fraction of min side
    light_phase: float            # radians


def _style_for(prompt: str, seed: int) -> _CandidateStyle:
    rng = _rng(seed, "style", prompt)
    return _CandidateStyle(
        shape=_SHAPES[int(rng.integers(0, len(_SHAPES)))],
        color=_hsv_to_rgb(float(rng.random()), 0.65 + 0.3 * float(rng.random()), 0.85),
        offset=(float(rng.uniform(-0.08, 0.08)), float(rng.uniform(-0.08, 0.08))),
        scale=float(rng.uniform(0.24, 0.34)),
        light_phase=float(rng.uniform(0, 2 * np.pi)),
    )


def _render_view(style: _CandidateStyle, yaw_deg: float, size: int) -> RasterImage:
    yaw = np.deg2rad(yaw_deg)
    h = w = size
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    cx = w / 2 + style.offset[0] * w
    cy = h / 2 + style.offset[1] * h
    base = style.scale * min(w, h)

    if style.shape == "sphere":
        r = base * (0.92 + 0.08 * np.cos(yaw))
        mask = (xx - cx) ** 2 + (yy - cy) ** 2 <= r * r
    elif style.shape == "cube":
        half_w = base * (abs(np.cos(yaw)) + abs(np.sin(yaw))) / np.sqrt(2)
        half_h = base * 0.95
        mask = (np.abs(xx - cx) <= half_w) & (np.abs(yy - cy) <= half_h)
    else:  # torus: squashing ring
        y_scale = 0.35 + 0.65 * abs(np.cos(yaw))
        dist = np.sqrt((xx - cx) ** 2 + ((yy - cy) / y_scale) ** 2)
        mask = (dist <= base) & (dist >= base * 0.45)

    brightness = 0.65 + 0.35 * np.cos(yaw - style.light_phase)
    color = np.clip(np.array(style.color, dtype=np.float64) * brightness, 0, 255).astype(np.uint8)
    px = np.empty((h, w, 3), dtype=np.uint8)
    px[:, :] = _BACKGROUND
    px[mask] = color
    return RasterImage(px)


class MockGenerationProvider:
    def __init__(self, config: ProviderConfig):
        self.config = config

    def generate(self, prompt: str, seed: int) -> GenerationResult:
        _maybe_stall(self.config)
        style = _style_for(prompt, stable_hash(self.config.mock_seed, seed))
        size = self.config.mock_view_size
        views = tuple(_render_view(style, i * 45.0, size) for i in range(9))
        mesh = f"mock://mesh/{stable_hash(self.config.mock_seed, seed, prompt):016x}"
        return GenerationResult(prompt=prompt, branch="generation", views=views, mesh_ref=mesh)


class MockEmbeddingProvider:
    """Text: seeded hash-to-unit-vector. Image: downsampled pixel features
    through a seed-fixed random projection, so similar views embed nearby."""

    def __init__(self, config: ProviderConfig):
        self.config = config
        self.dimension = config.embedding_dim
        rng = _rng(config.mock_seed, "image-projection")
        self._projection = rng.normal(size=(self.dimension, 48))

    def embed_text(self, text: str) -> np.ndarray:
        vec = _rng(self.config.mock_seed, "text", text).normal(size=self.dimension)
        return vec / np.linalg.norm(vec)

    def embed_image(self, img: RasterImage) -> np.ndarray:
        px = img.pixels.astype(np.float64)
        h, w = px.shape[:2]
        ys = np.linspace(0, h, 5).astype(int)
        xs = np.linspace(0, w, 5).astype(int)
        cells = np.empty((4, 4, 3))
        for i in range(4):
            for j in range(4):
                cells[i, j] = px[ys[i] : max(ys[i] + 1, ys[i + 1]), xs[j] : max(xs[j] + 1, xs[j + 1])].mean(
                    axis=(0, 1)
                )
        features = cells.reshape(-1) / 255.0
        vec = self._projection @ features
        norm = np.linalg.norm(vec)
        return vec / norm if norm > 0 else vec


_FIXTURE_PROMPTS = (
    "a red sphere ornament",
    "a blue cube crate",
    "a golden torus ring",
    "a green ceramic teacup",
    "a pink cat figurine",
    "a wooden toy robot",
    "a silver rocket model",
    "a purple dragon statue",
    "a yellow rubber duck",
    "an orange pumpkin lantern",
    "a white porcelain vase",
    "a brown leather boot",
    "a teal glass bottle",
    "a crimson racing helmet",
    "a navy submarine toy",
    "a copper steam kettle",
    "a jade garden ornament",
    "a black chess knight",
    "a pastel donut sculpture",
    "an ivory elephant carving",
    "a turquoise gemstone pendant",
    "a scarlet maple bonsai",
    "a gray concrete planter",
    "a violet crystal cluster",
    "a bronze anchor paperweight",
    "a mint gaming console",
)


class MockRetrievalProvider:
    """Fixture library stands in for a large shape repository; results are
    ranked by mock-embedding cosine between the query and fixture prompts."""

    def __init__(self, config: ProviderConfig, embedding: MockEmbeddingProvider):
        self.config = config
        self.embedding = embedding
        self._generator = MockGenerationProvider(config)
        self._fixture_vectors = [self.embedding.embed_text(p) for p in _FIXTURE_PROMPTS]

    @property
    def fixture_prompts(self) -> tuple[str, ...]:
        return _FIXTURE_PROMPTS

    def retrieve(self, prompt: str, k: int) -> list[GenerationResult]:
        _maybe_stall(self.config)
        query = self.embedding.embed_text(prompt)
        scored = sorted(
            range(len(_FIXTURE_PROMPTS)),
            key=lambda i: (-float(np.dot(query, self._fixture_vectors[i])), i),
        )
        out = []
        for i in scored[: max(0, k)]:
            fixture = _FIXTURE_PROMPTS[i]
            style = _style_for(fixture, stable_hash(self.config.mock_seed, "fixture"))
            size = self.config.mock_view_size
            views = tuple(_render_view(style, v * 45.0, size) for v in range(9))
            out.append(GenerationResult(prompt=fixture, branch="retrieval", views=views, mesh_ref=None))
        return out


class MockSegmentationProvider:
    """Foreground = pixels that differ from the border's background estimate."""

    def __init__(self, config: ProviderConfig):
        self.config = config

    def segment(self, img: RasterImage) -> BinaryMask:
        _maybe_stall(self.config)
        px = img.pixels.astype(np.int64)
        border = np.concatenate([px[0], px[-1], px[:, 0], px[:, -1]])
        background = np.median(border, axis=0)
        diff = np.abs(px - background).max(axis=2)
        return BinaryMask(diff > 12)


class MockLLMProvider:
    """Composes the base prompt with corpus modifiers sampled from the seed."""

    def __init__(self, config: ProviderConfig):
        self.config = config

    def suggest_prompts(self, base: str, modifiers: list[str], n: int, seed: int) -> list[str]:
        _maybe_stall(self.config)
        rng = _rng(self.config.mock_seed, "augment", seed, base)
        out: list[str] = []
        seen: set[str] = set()
        attempts = 0
        while len(out) < n and attempts < n * 20:
            attempts += 1
            # widen the combination space if duplicates keep coming up
            max_k = 2 + attempts // (n * 5)
            k = 1 + int(rng.integers(0, max_k))
            picks = rng.choice(len(modifiers), size=min(k, len(modifiers)), replace=False)
            text = base + ", " + ", ".join(modifiers[int(i)] for i in sorted(picks))
            if text.lower() not in seen:
                seen.add(text.lower())
                out.append(text)
        return out


class MockJudgeProvider:
    """Scripted verdicts from a scenario mapping (or file), with a
    hash-derived deterministic default.

    Scenario forms:
      {"mode": "fail"}                          raise ProviderError
      {"mode": "malformed"}                     unparsable text
      {"default": 8}                            constant score
      {"per_metric": {metric: score}}           constant per metric
      {"per_pair": {metric: [s0, ..., s7]}}     score per pair index
    """

    def __init__(self, config: ProviderConfig):
        self.config = config
        script = config.judge_script
        if isinstance(script, str):
            script = json.loads(Path(script).read_text())
        self.script: dict | None = script

    def _scripted_score(self, request: JudgeRequest) -> int | None:
        if self.script is None:
            return None
        if self.script.get("mode") == "fail":
            raise ProviderError("scripted judge outage")
        if self.script.get("mode") == "malformed":
            return -1  # sentinel: return garbage text
        per_pair = self.script.get("per_pair", {})
        if request.metric in per_pair:
            return int(per_pair[request.metric][request.pair_index])
        per_metric = self.script.get("per_metric", {})
        if request.metric in per_metric:
            return int(per_metric[request.metric])
        if "default" in self.script:
            return int(self.script["default"])
        return None

    def evaluate(self, request: JudgeRequest) -> str:
        _maybe_stall(self.config)
        score = self._scripted_score(request)
        if score == -1:
            return "the model refuses to produce a score today"
        if score is None:
            h = stable_hash(
                self.config.mock_seed,
                "judge",
                request.metric,
                request.image_a.content_hash(),
                request.image_b.content_hash(),
            )
            score = 4 + h % 6  # 4..9: plausible mid-to-high verdicts
        return json.dumps({"score": int(score), "rationale": f"mock verdict for {request.metric}"})


class MockAttentionProvider:
    """Gaussian blob centered at a keyword-hash-derived offset; gives
    non-trivial IoU values against real foreground masks."""

    def __init__(self, config: ProviderConfig):
        self.config = config

    def attention(self, keyword: str, img: RasterImage) -> np.ndarray:
        _maybe_stall(self.config)
        rng = _rng(self.config.mock_seed, "attention", keyword)
        h, w = img.height, img.width
        cx = w / 2 + float(rng.uniform(-0.25, 0.25)) * w
        cy = h / 2 + float(rng.uniform(-0.25, 0.25)) * h
        sigma = 0.18 * min(w, h)
        yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
        blob = np.exp(-(((xx - cx) ** 2 + (yy - cy) ** 2) / (2 * sigma * sigma)))
        return blob
