"""Provider abstractions: config, request/result shapes, and the protocols
every backend (mock or HTTP) implements.

No module outside this package performs network I/O.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol, runtime_checkable

import numpy as np

from ..errors import ConfigError
from ..imaging import BinaryMask, RasterImage

PROVIDER_KINDS = ("embedding", "generation", "retrieval", "judge", "llm", "segmentation", "attention")

DEFAULT_EMBEDDING_DIM = 64
DEFAULT_TIMEOUT_MS = 10_000
DEFAULT_RETRIES = 2
DEFAULT_IN_FLIGHT = 4
RETRY_BASE_MS = 250
RETRY_FACTOR = 2


@dataclass(frozen=True)
class ProviderConfig:
    """Configuration for one provider slot."""

    kind: str = "mock"                 # "mock" | "http"
    endpoint: str | None = None
    auth_env: str | None = None        # env var holding the bearer token
    timeout_ms: int = DEFAULT_TIMEOUT_MS
    retries: int = DEFAULT_RETRIES
    in_flight_limit: int = DEFAULT_IN_FLIGHT
    mock_seed: int = 0
    embedding_dim: int = DEFAULT_EMBEDDING_DIM
    mock_latency_ms: int = 0           # deterministic stall for async-contract tests
    mock_view_size: int = 256
    judge_script: dict | str | None = None  # scenario mapping or path to a JSON scenario file

    def __post_init__(self):
        if self.kind not in ("mock", "http"):
            raise ConfigError(f"provider kind must be 'mock' or 'http', got {self.kind!r}")
        if self.kind == "http" and not self.endpoint:
            raise ConfigError("http provider requires an endpoint")


@dataclass(frozen=True)
class GenerationResult:
    """One candidate from either branch: a prompt plus its 9 yaw renders."""

    prompt: str
    branch: str                        # "generation" | "retrieval"
    views: tuple[RasterImage, ...]     # 9 views, view i at yaw i*45 degrees
    mesh_ref: str | None = None        # opaque passthrough

    def __post_init__(self):
        if len(self.views) != 9:
            raise ValueError(f"expected 9 views, got {len(self.views)}")
        dims = {(v.width, v.height) for v in self.views}
        if len(dims) != 1:
            raise ValueError("views must share dimensions")


@dataclass(frozen=True)
class JudgeRequest:
    metric: str
    template_version: str
    template_text: str
    prompt_text: str
    image_a: RasterImage
    image_b: RasterImage
    pair_index: int

    def cache_key(self) -> tuple[str, str, str, str]:
        return (self.template_version, self.metric, self.image_a.content_hash(), self.image_b.content_hash())


@dataclass(frozen=True)
class ProviderHealth:
    name: str
    status: str        # "ok" | "degraded" | "down"
    latency_ms: float
    detail: str = ""


@runtime_checkable
class EmbeddingProvider(Protocol):
    dimension: int

    def embed_text(self, text: str) -> np.ndarray: ...

    def embed_image(self, img: RasterImage) -> np.ndarray: ...


@runtime_checkable
class SegmentationProvider(Protocol):
    def segment(self, img: RasterImage) -> BinaryMask: ...


@runtime_checkable
class JudgeProvider(Protocol):
    def evaluate(self, request: JudgeRequest) -> str: ...


@runtime_checkable
class LLMProvider(Protocol):
    def suggest_prompts(self, base: str, modifiers: list[str], n: int, seed: int) -> list[str]: ...


@runtime_checkable
class GenerationProvider(Protocol):
    def generate(self, prompt: str, seed: int) -> GenerationResult: ...


@runtime_checkable
class RetrievalProvider(Protocol):
    def retrieve(self, prompt: str, k: int) -> list[GenerationResult]: ...


@runtime_checkable
class AttentionProvider(Protocol):
    def attention(self, keyword: str, img: RasterImage) -> np.ndarray: ...
