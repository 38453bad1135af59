"""Provider set assembly from a config mapping, plus health reporting."""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field

from ..errors import ConfigError
from .base import (
    PROVIDER_KINDS,
    AttentionProvider,
    EmbeddingProvider,
    GenerationProvider,
    JudgeProvider,
    LLMProvider,
    ProviderConfig,
    ProviderHealth,
    RetrievalProvider,
    SegmentationProvider,
)
from . import http as http_providers
from . import mock as mock_providers


@dataclass
class ProviderSet:
    embedding: EmbeddingProvider
    generation: GenerationProvider | None
    retrieval: RetrievalProvider | None
    judge: JudgeProvider | None
    llm: LLMProvider | None
    segmentation: SegmentationProvider | None
    attention: AttentionProvider | None
    configs: dict[str, ProviderConfig] = field(default_factory=dict)
    config_hash: str = ""


def _config_for(raw: dict, name: str, seed: int) -> ProviderConfig:
    entry = dict(raw.get(name, {}))
    entry.setdefault("kind", "mock")
    known = {f for f in ProviderConfig.__dataclass_fields__}
    unknown = set(entry) - known
    if unknown:
        raise ConfigError(f"unknown provider config keys for {name!r}: {sorted(unknown)}")
    config = ProviderConfig(**entry)
    if config.kind == "mock":
        # all mock randomness flows from the session seed mixed with the configured one
        config = ProviderConfig(**{**entry, "mock_seed": mock_providers.stable_hash(config.mock_seed, seed, name)})
    return config


def providers_config_hash(raw: dict) -> str:
    return hashlib.sha256(json.dumps(raw, sort_keys=True).encode()).hexdigest()[:16]


def build_providers(raw: dict | None, seed: int = 0) -> ProviderSet:
    """Build the full provider set; every slot defaults to its mock."""
    raw = raw or {}
    unknown = set(raw) - set(PROVIDER_KINDS)
    if unknown:
        raise ConfigError(f"unknown provider slots: {sorted(unknown)}")

    configs = {name: _config_for(raw, name, seed) for name in PROVIDER_KINDS}

    def is_http(name: str) -> bool:
        return configs[name].kind == "http"

    embedding = (
        http_providers.HttpEmbeddingProvider(configs["embedding"])
        if is_http("embedding")
        else mock_providers.MockEmbeddingProvider(configs["embedding"])
    )
    generation = (
        http_providers.HttpGenerationProvider(configs["generation"])
        if is_http("generation")
        else mock_providers.MockGenerationProvider(configs["generation"])
    )
    if is_http("retrieval"):
        retrieval = http_providers.HttpRetrievalProvider(configs["retrieval"])
    else:
        retrieval_embedding = (
            embedding
            if isinstance(embedding, mock_providers.MockEmbeddingProvider)
            else mock_providers.MockEmbeddingProvider(configs["retrieval"])
        )
        retrieval = mock_providers.MockRetrievalProvider(configs["retrieval"], retrieval_embedding)
    judge = (
        http_providers.HttpJudgeProvider(configs["judge"])
        if is_http("judge")
        else mock_providers.MockJudgeProvider(configs["judge"])
    )
    llm = (
        http_providers.HttpLLMProvider(configs["llm"])
        if is_http("llm")
        else mock_providers.MockLLMProvider(configs["llm"])
    )
    segmentation = (
        http_providers.HttpSegmentationProvider(configs["segmentation"])
        if is_http("segmentation")
        else mock_providers.MockSegmentationProvider(configs["segmentation"])
    )
    attention = (
        http_providers.HttpAttentionProvider(configs["attention"])
        if is_http("attention")
        else mock_providers.MockAttentionProvider(configs["attention"])
    )

    return ProviderSet(
        embedding=embedding,
        generation=generation,
        retrieval=retrieval,
        judge=judge,
        llm=llm,
        segmentation=segmentation,
        attention=attention,
        configs=configs,
        config_hash=providers_config_hash(raw),
    )


def health(configs: dict[str, ProviderConfig]) -> dict[str, ProviderHealth]:
    """Per-provider status; mocks are always ok with a measured latency sample."""
    out = {}
    for name, config in configs.items():
        if config.kind == "mock":
            start = time.monotonic()
            mock_providers.stable_hash(config.mock_seed, "health-probe")
            latency = (time.monotonic() - start) * 1000.0
            out[name] = ProviderHealth(name=name, status="ok", latency_ms=latency)
        else:
            out[name] = http_providers.http_health(config, name)
    return out


def overall_status(healths: dict[str, ProviderHealth]) -> str:
    statuses = {h.status for h in healths.values()}
    if statuses <= {"ok"}:
        return "ok"
    if "ok" in statuses:
        return "degraded"
    return "down"
