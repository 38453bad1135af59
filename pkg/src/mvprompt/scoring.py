"""Hybrid-level scoring: the 3D-friendly gate, low-level consistency metrics,
embedding similarity, score-vector assembly, defect heatmaps, and the
Bland-Altman consistency utility.

Scoring of distinct candidates may run in parallel; everything here is pure
over its inputs.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass, field

import numpy as np

from .config import HIGH_LEVEL_DIMENSIONS, LOW_LEVEL_DIMENSIONS, SCORE_DIMENSIONS, EngineConfig, DEFAULT_CONFIG
from .errors import ConfigError, InsufficientData, RangeViolation, Unscorable, UnknownMetric, NoForeground
from .imaging import (
    BinaryMask,
    Histogram,
    LabImage,
    RasterImage,
    bhattacharyya,
    foreground_mask,
    histogram,
    mask_metrics,
    mean_histogram,
    rgb_to_lab,
)
from .providers.base import EmbeddingProvider, SegmentationProvider


@dataclass(frozen=True)
class MultiViewSet:
    """Nine renders of one candidate at 45-degree yaw steps; view 0 is the front."""

    candidate_id: str
    views: tuple[RasterImage, ...]

    def __post_init__(self):
        if len(self.views) != 9:
            raise ValueError(f"multi-view set needs exactly 9 views, got {len(self.views)}")
        dims = {(v.width, v.height) for v in self.views}
        if len(dims) != 1:
            raise ValueError("views must share dimensions")

    @property
    def width(self) -> int:
        return self.views[0].width

    @property
    def height(self) -> int:
        return self.views[0].height

    def yaw_degrees(self, index: int) -> float:
        return index * 45.0


@dataclass(frozen=True)
class ThreeDFriendlyScore:
    """Gate score: weighted centering + mask-agreement composite in [0, 1]."""

    co_term: float
    iou: float
    bbox_iou: float
    weights: tuple[float, float, float]
    total: float = field(init=False)

    def __post_init__(self):
        if abs(sum(self.weights) - 1.0) > 1e-9:
            raise RangeViolation(f"gate weights must sum to 1, got {self.weights}")
        for name, v in (("co_term", self.co_term), ("iou", self.iou), ("bbox_iou", self.bbox_iou)):
            if not 0.0 <= v <= 1.0:
                raise RangeViolation(f"{name} out of [0,1]: {v}")
        w_o, w_iou, w_bb = self.weights
        object.__setattr__(self, "total", w_o * self.co_term + w_iou * self.iou + w_bb * self.bbox_iou)

    def to_dict(self) -> dict:
        return {
            "co_term": self.co_term,
            "iou": self.iou,
            "bbox_iou": self.bbox_iou,
            "weights": list(self.weights),
            "total": self.total,
        }


@dataclass(frozen=True)
class DimensionScore:
    value: float       # normalized to [0, 1]
    raw: float         # pre-normalization value kept for transparency
    provenance: str    # "computed" | "judge"

    def __post_init__(self):
        if not 0.0 <= self.value <= 1.0:
            raise RangeViolation(f"dimension value out of [0,1]: {self.value}")
        if self.provenance not in ("computed", "judge"):
            raise RangeViolation(f"unknown provenance {self.provenance!r}")


@dataclass(frozen=True)
class ScoreVector:
    """The 8-dimensional quality vector; absent dimensions stay None, never 0."""

    scores: dict[str, DimensionScore | None]

    def __post_init__(self):
        if set(self.scores) != set(SCORE_DIMENSIONS):
            raise UnknownMetric(f"score vector must have exactly dimensions {SCORE_DIMENSIONS}")

    def value(self, dim: str) -> float | None:
        s = self.scores[dim]
        return s.value if s is not None else None

    def present_dimensions(self) -> list[str]:
        return [d for d in SCORE_DIMENSIONS if self.scores[d] is not None]

    def missing_dimensions(self) -> list[str]:
        return [d for d in SCORE_DIMENSIONS if self.scores[d] is None]

    def to_dict(self) -> dict:
        out = {}
        for dim in SCORE_DIMENSIONS:
            s = self.scores[dim]
            if s is None:
                out[dim] = {"value": None, "raw": None, "provenance": "missing"}
            else:
                out[dim] = {"value": s.value, "raw": s.raw, "provenance": s.provenance}
        return out


@dataclass(frozen=True)
class DefectMap:
    """Per-view patch deviation grids with the red-frame flags."""

    grids: np.ndarray          # (9, G, G) floats in [0, 1]
    flagged: tuple[bool, ...]  # per view
    deviation_cutoff: float
    flag_fraction: float

    def to_dict(self) -> dict:
        return {
            "grid": [g.tolist() for g in self.grids],
            "flags": list(self.flagged),
            "deviation_cutoff": self.deviation_cutoff,
            "flag_fraction": self.flag_fraction,
        }


@dataclass(frozen=True)
class ViewAnalysis:
    """Per-view foreground masks and masked histograms, computed once per candidate."""

    lab: tuple[LabImage, ...]
    masks: tuple[BinaryMask, ...]
    lab_hists: tuple[Histogram, ...]
    l_hists: tuple[Histogram, ...]


def analyze_views(mv: MultiViewSet, config: EngineConfig = DEFAULT_CONFIG) -> ViewAnalysis:
    """Foreground masks and masked histograms for all 9 views.

    The color histograms use the configured granularity (joint lab3d by
    default). Raises Unscorable if any view has no detectable foreground.
    """
    labs, masks, lab_hists, l_hists = [], [], [], []
    for i, view in enumerate(mv.views):
        lab = rgb_to_lab(view)
        try:
            mask = foreground_mask(view)
        except NoForeground as exc:
            raise Unscorable(f"view {i} has no foreground: {exc}", stage="analysis") from exc
        labs.append(lab)
        masks.append(mask)
        lab_hists.append(histogram(lab, config.histogram_mode, mask))
        l_hists.append(histogram(lab, "l_channel", mask))
    return ViewAnalysis(tuple(labs), tuple(masks), tuple(lab_hists), tuple(l_hists))


def three_d_friendly(
    img: RasterImage,
    seg: SegmentationProvider | None,
    config: EngineConfig = DEFAULT_CONFIG,
) -> ThreeDFriendlyScore:
    """3D-friendliness gate for one image.

    In "dual" mode the saliency-derived foreground is compared against the
    segmentation provider's mask (the provider mask is the centroid
    reference); in "saliency" mode, or when no provider is configured, the
    saliency mask is compared against its own tight box as a compactness
    proxy.
    """
    try:
        sal = foreground_mask(img)
    except NoForeground:
        sal = None

    provider_mask: BinaryMask | None = None
    if config.gate_mode == "dual" and seg is not None:
        provider_mask = seg.segment(img)
        if provider_mask.foreground_count == 0:
            provider_mask = None

    if sal is None and provider_mask is None:
        raise Unscorable("no foreground found by either estimator", stage="gate")

    dims = (img.width, img.height)
    if config.gate_mode == "dual" and seg is not None:
        reference = provider_mask if provider_mask is not None else sal
        other = sal if provider_mask is not None else BinaryMask(np.zeros((img.height, img.width), dtype=bool))
        assert reference is not None
        metrics = mask_metrics(reference, other, dims)
    else:
        assert sal is not None
        box = sal.bbox()
        assert box is not None
        filled = np.zeros((img.height, img.width), dtype=bool)
        filled[box[1] : box[3], box[0] : box[2]] = True
        metrics = mask_metrics(sal, BinaryMask(filled), dims)

    co_term = 1.0 - metrics.centroid_offset / metrics.offset_max
    return ThreeDFriendlyScore(
        co_term=co_term, iou=metrics.iou, bbox_iou=metrics.bbox_iou, weights=config.gate_weights
    )


def consistency_score(hists: list[Histogram]) -> float:
    """Mean Bhattacharyya coefficient of each histogram against their mean.

    The formula core; callable at any N for oracle checks. The engine-level
    entry point below enforces the 9-view contract.
    """
    if not hists:
        raise InsufficientData("need at least one histogram")
    center = mean_histogram(hists)
    return float(np.mean([bhattacharyya(h, center) for h in hists]))


def view_consistency(
    mv: MultiViewSet,
    channel: str,
    analysis: ViewAnalysis | None = None,
    config: EngineConfig = DEFAULT_CONFIG,
) -> float:
    """Color or light consistency over the 9 foreground-masked views."""
    if channel not in ("color", "light"):
        raise UnknownMetric(f"channel must be 'color' or 'light', got {channel!r}")
    if analysis is None:
        analysis = analyze_views(mv, config)
    hists = analysis.lab_hists if channel == "color" else analysis.l_hists
    return consistency_score(list(hists))


def _cosine(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ConfigError(f"embedding dimensions differ: {a.shape} vs {b.shape}")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise ConfigError("zero-norm embedding cannot be compared")
    return float(np.dot(a, b) / (na * nb))


def normalize_cosine(cos: float) -> float:
    """Map cosine from [-1, 1] to the shared [0, 1] display range."""
    return (cos + 1.0) / 2.0


@dataclass(frozen=True)
class ClipScoreResult:
    raw: float    # cosine in [-1, 1]
    value: float  # normalized


def clip_score(text: str, img: RasterImage, emb: EmbeddingProvider) -> ClipScoreResult:
    """Prompt-to-image embedding similarity."""
    cos = _cosine(emb.embed_text(text), emb.embed_image(img))
    return ClipScoreResult(raw=cos, value=normalize_cosine(cos))


@dataclass(frozen=True)
class ClipIResult:
    per_view: tuple[float, ...]      # normalized, views 1..8 against the front view
    per_view_raw: tuple[float, ...]  # raw cosines
    aggregate: float                 # mean of normalized per-view values
    aggregate_min: float             # min, reported alongside


def clip_i(mv: MultiViewSet, emb: EmbeddingProvider) -> ClipIResult:
    """Cross-view coherence: front view (0 degrees) against each other view."""
    ref = emb.embed_image(mv.views[0])
    raw = tuple(_cosine(ref, emb.embed_image(mv.views[j])) for j in range(1, 9))
    norm = tuple(normalize_cosine(c) for c in raw)
    return ClipIResult(
        per_view=norm,
        per_view_raw=raw,
        aggregate=float(np.mean(norm)),
        aggregate_min=float(min(norm)),
    )


def assemble_score_vector(
    lowlevel: dict[str, DimensionScore | None],
    judge: dict[str, DimensionScore | None],
) -> ScoreVector:
    """Combine computed and judge dimensions into the fixed 8-slot vector.

    Absent dimensions stay None; DimensionScore construction enforces the
    [0, 1] range so out-of-range values reject with RangeViolation.
    """
    for name in lowlevel:
        if name not in LOW_LEVEL_DIMENSIONS:
            raise UnknownMetric(f"{name!r} is not a low-level dimension")
    for name in judge:
        if name not in HIGH_LEVEL_DIMENSIONS:
            raise UnknownMetric(f"{name!r} is not a judge dimension")
    scores: dict[str, DimensionScore | None] = {d: None for d in SCORE_DIMENSIONS}
    scores.update({k: v for k, v in lowlevel.items()})
    scores.update({k: v for k, v in judge.items()})
    return ScoreVector(scores)


def _patch_slices(length: int, grid: int, index: int) -> slice:
    lo = index * length // grid
    hi = (index + 1) * length // grid
    return slice(lo, hi)


def defect_heatmap(
    mv: MultiViewSet,
    analysis: ViewAnalysis | None = None,
    judge_regions: dict[int, list[tuple[float, float, float, float]]] | None = None,
    config: EngineConfig = DEFAULT_CONFIG,
) -> DefectMap:
    """Per-view GxG patch deviations against the whole-set mean foreground histogram.

    A patch's deviation is 1 - BC(patch foreground Lab histogram, set mean);
    patches without foreground pixels carry no evidence and stay 0. Judge
    regions (normalized rects per view), when present, override the covered
    patches to deviation 1. A view is flagged when more than flag_fraction
    of its patches deviate beyond the cutoff.
    """
    if analysis is None:
        analysis = analyze_views(mv, config)
    g = config.patch_grid
    # patch deviations always use the joint lab3d space regardless of the
    # consistency histogram granularity knob
    set_mean = mean_histogram(
        [histogram(analysis.lab[v], "lab3d", analysis.masks[v]) for v in range(9)]
    )
    grids = np.zeros((9, g, g), dtype=np.float64)

    for v in range(9):
        lab = analysis.lab[v].values
        mask = analysis.masks[v].bits
        for gy in range(g):
            for gx in range(g):
                sy = _patch_slices(mv.height, g, gy)
                sx = _patch_slices(mv.width, g, gx)
                patch_mask = mask[sy, sx]
                if not patch_mask.any():
                    continue
                vals = lab[sy, sx][patch_mask]
                li = np.clip((vals[:, 0] / 100.0 * 8).astype(np.int64), 0, 7)
                ai = np.clip(((vals[:, 1] + 128.0) / 255.0 * 8).astype(np.int64), 0, 7)
                bi = np.clip(((vals[:, 2] + 128.0) / 255.0 * 8).astype(np.int64), 0, 7)
                counts = np.bincount((li * 8 + ai) * 8 + bi, minlength=512).astype(np.float64)
                patch_hist = Histogram(counts / counts.sum(), "lab3d", 512)
                grids[v, gy, gx] = 1.0 - bhattacharyya(patch_hist, set_mean)

    if judge_regions:
        for v, rects in judge_regions.items():
            for x0, y0, x1, y1 in rects:
                for gy in range(g):
                    for gx in range(g):
                        cx = (gx + 0.5) / g
                        cy = (gy + 0.5) / g
                        if x0 <= cx <= x1 and y0 <= cy <= y1:
                            grids[v, gy, gx] = 1.0

    flagged = tuple(
        bool(np.mean(grid > config.patch_deviation_cutoff) > config.flag_fraction) for grid in grids
    )
    return DefectMap(
        grids=grids,
        flagged=flagged,
        deviation_cutoff=config.patch_deviation_cutoff,
        flag_fraction=config.flag_fraction,
    )


@dataclass(frozen=True)
class BlandAltman:
    mean_diff: float
    sd: float
    lower_limit: float
    upper_limit: float
    inside_fraction: float

    def to_dict(self) -> dict:
        return {
            "mean_diff": self.mean_diff,
            "sd": self.sd,
            "limits": [self.lower_limit, self.upper_limit],
            "inside_fraction": self.inside_fraction,
        }


def bland_altman(pairs: list[tuple[float, float]]) -> BlandAltman:
    """Agreement between engine scores and reference scores.

    Differences are engine minus reference; limits are mean +/- 1.96 sample
    standard deviations.
    """
    if len(pairs) < 2:
        raise InsufficientData(f"Bland-Altman needs at least 2 pairs, got {len(pairs)}")
    diffs = [e - r for e, r in pairs]
    mean_diff = statistics.fmean(diffs)
    sd = statistics.stdev(diffs) if len(diffs) > 1 else 0.0
    lower, upper = mean_diff - 1.96 * sd, mean_diff + 1.96 * sd
    inside = sum(1 for d in diffs if lower <= d <= upper) / len(diffs)
    return BlandAltman(mean_diff=mean_diff, sd=sd, lower_limit=lower, upper_limit=upper, inside_fraction=inside)
