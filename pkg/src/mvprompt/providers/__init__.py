from .base import (
    AttentionProvider,
    EmbeddingProvider,
    GenerationProvider,
    GenerationResult,
    JudgeProvider,
    JudgeRequest,
    LLMProvider,
    ProviderConfig,
    ProviderHealth,
    RetrievalProvider,
    SegmentationProvider,
)

__all__ = [
    "AttentionProvider",
    "EmbeddingProvider",
    "GenerationProvider",
    "GenerationResult",
    "JudgeProvider",
    "JudgeRequest",
    "LLMProvider",
    "ProviderConfig",
    "ProviderHealth",
    "RetrievalProvider",
    "SegmentationProvider",
]
