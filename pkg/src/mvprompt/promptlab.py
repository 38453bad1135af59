"""Score-guided prompt recommendation: augmentation, 2D projection, density
clustering, keyword extraction and scoring, ranked recommendation, and
keyword-to-view contribution links.
"""

from __future__ import annotations

import hashlib
import logging
import re
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .config import SCORE_DIMENSIONS, EngineConfig, DEFAULT_CONFIG
from .errors import ConfigError, InsufficientData, KeywordAbsent, NoScoredCandidates, ProviderError
from .imaging import BinaryMask, otsu_threshold
from .providers.base import AttentionProvider, EmbeddingProvider, LLMProvider
from .scoring import MultiViewSet, ScoreVector

logger = logging.getLogger(__name__)

_TOKEN_RE = re.compile(r"[a-z0-9]+")
MIN_KEYWORD_LENGTH = 3
MISC_CLUSTER = -1


def tokenize(text: str) -> list[str]:
    """Lowercased alphanumeric tokens, punctuation stripped."""
    return _TOKEN_RE.findall(text.lower())


@dataclass(frozen=True)
class TextAsset:
    """A line-per-entry UTF-8 asset, versioned by content hash."""

    entries: tuple[str, ...]
    content_hash: str

    @classmethod
    def from_text(cls, text: str) -> "TextAsset":
        entries = tuple(
            line.strip() for line in text.splitlines() if line.strip() and not line.startswith("#")
        )
        digest = hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]
        return cls(entries=entries, content_hash=digest)


def _load_asset(name: str) -> TextAsset:
    text = resources.files("mvprompt.assets").joinpath(name).read_text(encoding="utf-8")
    return TextAsset.from_text(text)


def load_corpus() -> TextAsset:
    return _load_asset("corpus_3d_modifiers.txt")


def load_stopwords() -> TextAsset:
    return _load_asset("stopwords.txt")


@dataclass(frozen=True)
class PromptRecord:
    id: str
    text: str
    parent_id: str | None = None
    source: str = "user"        # "user" | "augmented" | "keyword-merge"
    drift: bool = False

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError("prompt text must be non-empty")

    @property
    def tokens(self) -> tuple[str, ...]:
        return tuple(tokenize(self.text))

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "text": self.text,
            "parent_id": self.parent_id,
            "source": self.source,
            "drift": self.drift,
        }


def _template_augmentations(base: str, corpus: TextAsset, count: int, seed: int) -> list[str]:
    """Pure corpus-template augmentation: base prompt plus sampled modifier pairs."""
    rng = np.random.default_rng(np.uint64(seed) ^ np.uint64(int(hashlib.sha256(base.encode()).hexdigest()[:15], 16)))
    entries = list(corpus.entries)
    out: list[str] = []
    seen: set[str] = set()
    attempts = 0
    while len(out) < count and attempts < count * 20:
        attempts += 1
        k = 1 + int(rng.integers(0, 2))
        picks = rng.choice(len(entries), size=min(k, len(entries)), replace=False)
        text = base + ", " + ", ".join(entries[int(i)] for i in sorted(picks))
        if text.lower() not in seen:
            seen.add(text.lower())
            out.append(text)
    return out


def augment(
    t0: PromptRecord,
    llm: LLMProvider | None,
    corpus: TextAsset,
    n: int | None = None,
    seed: int = 0,
    id_prefix: str = "p",
    config: EngineConfig = DEFAULT_CONFIG,
) -> list[PromptRecord]:
    """Expand the base prompt into n enriched variants.

    Provider completions are deduplicated case-insensitively and topped up
    from the corpus-template fallback; variants that lost every token of the
    base prompt are flagged as drifted rather than dropped.
    """
    n = config.augment_count if n is None else n
    if not 4 <= n <= 64:
        raise ConfigError(f"augmentation count must be in [4, 64], got {n}")

    suggestions: list[str] = []
    if llm is not None:
        try:
            suggestions = list(llm.suggest_prompts(t0.text, list(corpus.entries), n, seed))
        except ProviderError as exc:
            logger.warning("augmentation provider failed (%s); using corpus templates", exc)
            suggestions = []

    seen: set[str] = set()
    texts: list[str] = []
    for text in suggestions:
        text = text.strip()
        if text and text.lower() not in seen:
            seen.add(text.lower())
            texts.append(text)
        if len(texts) == n:
            break

    if len(texts) < n:
        for text in _template_augmentations(t0.text, corpus, n * 2, seed):
            if text.lower() not in seen:
                seen.add(text.lower())
                texts.append(text)
            if len(texts) == n:
                break

    if len(texts) < n:
        logger.warning("only %d distinct augmentations available (requested %d)", len(texts), n)

    base_tokens = set(t0.tokens)
    records = []
    for i, text in enumerate(texts):
        drift = not (base_tokens & set(tokenize(text)))
        records.append(
            PromptRecord(id=f"{id_prefix}{i:03d}", text=text, parent_id=t0.id, source="augmented", drift=drift)
        )
    return records


def project_2d(prompts: list[PromptRecord], emb: EmbeddingProvider) -> np.ndarray:
    """PCA projection of prompt-text embeddings to 2 components.

    Deterministic and seedless: components are sign-fixed so the largest
    absolute loading is positive.
    """
    if len(prompts) < 2:
        raise InsufficientData(f"projection needs at least 2 prompts, got {len(prompts)}")
    vectors = np.vstack([np.asarray(emb.embed_text(p.text), dtype=np.float64) for p in prompts])
    centered = vectors - vectors.mean(axis=0)
    if not np.any(centered):
        return np.zeros((len(prompts), 2))
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    signs = np.sign(vt[np.arange(vt.shape[0]), np.argmax(np.abs(vt), axis=1)])
    signs[signs == 0] = 1.0
    vt = vt * signs[:, None]
    points = centered @ vt[:2].T
    if points.shape[1] < 2:
        points = np.column_stack([points, np.zeros(len(prompts))])
    if not np.all(np.isfinite(points)):
        raise InsufficientData("projection produced non-finite coordinates")
    return points


@dataclass(frozen=True)
class ClusterResult:
    points: np.ndarray                 # (n, 2)
    labels: tuple[int, ...]            # >= 0, or MISC_CLUSTER for the synthetic misc bucket
    sizes: dict[int, int]

    def members(self, label: int) -> list[int]:
        return [i for i, l in enumerate(self.labels) if l == label]

    def cluster_ids(self) -> list[int]:
        return sorted(l for l in self.sizes if l != MISC_CLUSTER)

    def to_dict(self) -> dict:
        return {
            "points": [[float(x), float(y)] for x, y in self.points],
            "labels": list(self.labels),
            "sizes": {str(k): v for k, v in self.sizes.items()},
        }


def cluster(points: np.ndarray, config: EngineConfig = DEFAULT_CONFIG) -> ClusterResult:
    """Density clustering of the 2D prompt map.

    Noise and degenerate inputs land in the synthetic misc cluster; labels
    are canonicalized by each cluster's lowest member index so the result is
    stable under point-order permutation.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[1] != 2:
        raise InsufficientData(f"expected (n, 2) points, got {points.shape}")
    n = len(points)
    if n < 2:
        raise InsufficientData("clustering needs at least 2 points")

    mcs = config.min_cluster_size
    if n < mcs:
        labels = [MISC_CLUSTER] * n
    elif float(np.ptp(points, axis=0).max()) < 1e-12:
        labels = [0] * n
    else:
        from sklearn.cluster import HDBSCAN

        raw = HDBSCAN(min_cluster_size=mcs).fit_predict(points)
        labels = [int(l) if l >= 0 else MISC_CLUSTER for l in raw]

    # canonical relabel: clusters ordered by their lowest member index
    order: dict[int, int] = {}
    for i, label in enumerate(labels):
        if label != MISC_CLUSTER and label not in order:
            order[label] = len(order)
    remap = {old: new for new, old in enumerate(sorted(order, key=order.get))}
    labels = [remap[l] if l != MISC_CLUSTER else MISC_CLUSTER for l in labels]

    sizes: dict[int, int] = {}
    for label in labels:
        sizes[label] = sizes.get(label, 0) + 1
    return ClusterResult(points=points, labels=tuple(labels), sizes=sizes)


@dataclass(frozen=True)
class KeywordFreq:
    keyword: str
    frequency: int


def extract_keywords(
    prompts: list[PromptRecord],
    stopwords: TextAsset | None = None,
    top_k: int | None = None,
    config: EngineConfig = DEFAULT_CONFIG,
) -> list[KeywordFreq]:
    """Most frequent non-stopword tokens of a cluster, ties broken lexicographically."""
    stop = set((stopwords or load_stopwords()).entries)
    top_k = config.keywords_per_cluster if top_k is None else top_k
    counts: dict[str, int] = {}
    for record in prompts:
        for token in record.tokens:
            if len(token) >= MIN_KEYWORD_LENGTH and token not in stop:
                counts[token] = counts.get(token, 0) + 1
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return [KeywordFreq(keyword=k, frequency=f) for k, f in ranked[:top_k]]


@dataclass(frozen=True)
class ScoredPrompt:
    """Minimal candidate view used by keyword scoring: its tokens and scores."""

    candidate_id: str
    tokens: frozenset[str]
    scores: ScoreVector


def keyword_score(keyword: str, candidates: list[ScoredPrompt]) -> dict[str, float | None]:
    """Per-dimension mean over candidates whose token list contains the keyword.

    Containment is token membership, not substring. Missing dimension values
    are skipped; a dimension with no present values stays None.
    """
    containing = [c for c in candidates if keyword in c.tokens]
    if not containing:
        raise KeywordAbsent(f"no candidate prompt contains {keyword!r}")
    out: dict[str, float | None] = {}
    for dim in SCORE_DIMENSIONS:
        values = [c.scores.value(dim) for c in containing]
        present = [v for v in values if v is not None]
        out[dim] = sum(present) / len(present) if present else None
    return out


@dataclass(frozen=True)
class KeywordStat:
    keyword: str
    frequency: int
    cluster_id: int
    mean_scores: dict[str, float | None]
    section: str | None  # argmax dimension of the mean vector; None when unscored

    def to_dict(self) -> dict:
        return {
            "keyword": self.keyword,
            "frequency": self.frequency,
            "cluster_id": self.cluster_id,
            "mean_scores": self.mean_scores,
            "section": self.section,
        }


def assign_section(mean_scores: dict[str, float | None]) -> str | None:
    """Semantic section = argmax dimension; fixed dimension order breaks ties."""
    best: str | None = None
    best_value = -1.0
    for dim in SCORE_DIMENSIONS:
        v = mean_scores.get(dim)
        if v is not None and v > best_value:
            best, best_value = dim, v
    return best


def build_keyword_stats(
    cluster_result: ClusterResult,
    prompts: list[PromptRecord],
    candidates: list[ScoredPrompt],
    stopwords: TextAsset | None = None,
    config: EngineConfig = DEFAULT_CONFIG,
) -> list[KeywordStat]:
    """Keyword statistics for every cluster (misc included)."""
    stats: list[KeywordStat] = []
    for label in sorted(cluster_result.sizes):
        members = [prompts[i] for i in cluster_result.members(label)]
        for kf in extract_keywords(members, stopwords, config=config):
            try:
                means = keyword_score(kf.keyword, candidates)
            except KeywordAbsent:
                means = {dim: None for dim in SCORE_DIMENSIONS}
            stats.append(
                KeywordStat(
                    keyword=kf.keyword,
                    frequency=kf.frequency,
                    cluster_id=label,
                    mean_scores=means,
                    section=assign_section(means),
                )
            )
    return stats


def recommend(
    stats: list[KeywordStat],
    focus: list[str] | None,
    current_prompt: str,
) -> list[KeywordStat]:
    """Keywords ranked by mean score over the focus dimensions.

    Keywords already present in the current prompt are excluded; ties break
    by frequency, then lexicographically. The order is total, so identical
    inputs always produce identical lists.
    """
    if not stats:
        raise NoScoredCandidates("no keyword statistics available; run a scored iteration first")
    focus = list(focus) if focus else list(SCORE_DIMENSIONS)
    unknown = [f for f in focus if f not in SCORE_DIMENSIONS]
    if unknown:
        raise ConfigError(f"unknown focus dimensions: {unknown}")
    current = set(tokenize(current_prompt))

    def rank(stat: KeywordStat) -> float | None:
        values = [stat.mean_scores.get(d) for d in focus]
        present = [v for v in values if v is not None]
        return sum(present) / len(present) if present else None

    ranked = [(rank(s), s) for s in stats if s.keyword not in current]
    scored = [(r, s) for r, s in ranked if r is not None]
    scored.sort(key=lambda rs: (-rs[0], -rs[1].frequency, rs[1].keyword))
    return [s for _, s in scored]


@dataclass(frozen=True)
class ContributionLink:
    keyword: str
    candidate_id: str
    view_index: int
    weight: float

    def to_dict(self) -> dict:
        return {
            "keyword": self.keyword,
            "candidate_id": self.candidate_id,
            "view_index": self.view_index,
            "weight": self.weight,
        }


def attention_iou(attention: np.ndarray, foreground: BinaryMask) -> float:
    """IoU of the Otsu-thresholded attention map against the foreground mask."""
    attention = np.asarray(attention, dtype=np.float64)
    if attention.shape != foreground.bits.shape:
        raise ConfigError(f"attention shape {attention.shape} does not match mask {foreground.bits.shape}")
    attn_mask = attention > otsu_threshold(attention)
    inter = np.count_nonzero(attn_mask & foreground.bits)
    union = np.count_nonzero(attn_mask | foreground.bits)
    return inter / union if union else 0.0


def contribution(
    keyword: str,
    mv: MultiViewSet,
    masks: list[BinaryMask],
    attn: AttentionProvider,
) -> list[ContributionLink]:
    """One link per view; failed provider calls just omit their link."""
    links = []
    for i, view in enumerate(mv.views):
        try:
            weight = attention_iou(attn.attention(keyword, view), masks[i])
        except ProviderError as exc:
            logger.warning("attention provider failed for view %d (%s); link omitted", i, exc)
            continue
        links.append(ContributionLink(keyword=keyword, candidate_id=mv.candidate_id, view_index=i, weight=weight))
    return links
