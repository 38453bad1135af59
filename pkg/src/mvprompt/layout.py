"""Deterministic geometry for the visual encodings. The UI renders these
scene descriptions verbatim and never recomputes them.

Canvas coordinates are abstract units, origin top-left, y down.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .config import LOW_LEVEL_DIMENSIONS, SCORE_DIMENSIONS
from .errors import BadRadii, RangeViolation

# section width shares: four low-level + four high-level at 1.2x the area,
# so 4*l + 4*(1.2*l) = 1  =>  l = 1/8.8
LOW_SECTION_FRACTION = 1.0 / 8.8
HIGH_SECTION_FRACTION = 1.2 / 8.8

FONT_MIN = 10.0
FONT_MAX = 28.0
WORD_PADDING = 2.0
CHAR_WIDTH_RATIO = 0.6
LINE_HEIGHT_RATIO = 1.2


@dataclass(frozen=True)
class Satellite:
    view_index: int          # 1..8
    angle_degrees: float     # view_index * 45
    radius: float
    color_index: float       # score mapped deep-blue (0) to light-blue (1)
    score: float | None
    hollow: bool             # rendered hollow when the score is missing


@dataclass(frozen=True)
class SatelliteLayout:
    center_score: float | None
    r_min: float
    r_max: float
    satellites: tuple[Satellite, ...]

    def to_dict(self) -> dict:
        return {
            "center_score": self.center_score,
            "r_min": self.r_min,
            "r_max": self.r_max,
            "satellites": [
                {
                    "view_index": s.view_index,
                    "angle_degrees": s.angle_degrees,
                    "radius": s.radius,
                    "color_index": s.color_index,
                    "score": s.score,
                    "hollow": s.hollow,
                }
                for s in self.satellites
            ],
        }


def satellite(scores: list[float | None], r_min: float, r_max: float) -> SatelliteLayout:
    """Radial layout: view i at angle i*45 degrees, radius affine in (1 - score).

    scores has 9 entries (front first); missing scores are treated as 0 for
    the radius and rendered hollow.
    """
    if not (math.isfinite(r_min) and math.isfinite(r_max)) or r_min < 0 or r_min >= r_max:
        raise BadRadii(f"need 0 <= r_min < r_max, got ({r_min}, {r_max})")
    if len(scores) != 9:
        raise RangeViolation(f"expected 9 per-view scores, got {len(scores)}")
    sats = []
    for i in range(1, 9):
        s = scores[i]
        if s is not None and not 0.0 <= s <= 1.0:
            raise RangeViolation(f"satellite score out of [0,1]: {s}")
        effective = 0.0 if s is None else s
        sats.append(
            Satellite(
                view_index=i,
                angle_degrees=i * 45.0,
                radius=r_min + (1.0 - effective) * (r_max - r_min),
                color_index=effective,
                score=s,
                hollow=s is None,
            )
        )
    return SatelliteLayout(center_score=scores[0], r_min=r_min, r_max=r_max, satellites=tuple(sats))


@dataclass(frozen=True)
class Rect:
    x: float
    y: float
    w: float
    h: float

    @property
    def area(self) -> float:
        return self.w * self.h

    def to_dict(self) -> dict:
        return {"x": self.x, "y": self.y, "w": self.w, "h": self.h}


def squarify(weights: list[float], rect: Rect) -> list[Rect]:
    """Squarified treemap of the rect; result areas are exactly proportional
    to the weights, in input order."""
    if any(w <= 0 for w in weights):
        raise RangeViolation("treemap weights must be positive")
    total = sum(weights)
    order = sorted(range(len(weights)), key=lambda i: (-weights[i], i))
    areas = [weights[i] / total * rect.area for i in order]

    placed: list[Rect | None] = [None] * len(weights)
    x, y, w, h = rect.x, rect.y, rect.w, rect.h
    row: list[int] = []  # indices into `order`
    i = 0

    def worst(row_areas: list[float], side: float) -> float:
        s = sum(row_areas)
        if s <= 0 or side <= 0:
            return math.inf
        mx, mn = max(row_areas), min(row_areas)
        return max(side**2 * mx / s**2, s**2 / (side**2 * mn))

    def lay_row(row_idx: list[int]) -> None:
        nonlocal x, y, w, h
        s = sum(areas[j] for j in row_idx)
        if w >= h:  # lay the row vertically along the left edge
            col_w = s / h if h > 0 else 0.0
            cy = y
            for j in row_idx:
                rh = areas[j] / col_w if col_w > 0 else 0.0
                placed[order[j]] = Rect(x, cy, col_w, rh)
                cy += rh
            x += col_w
            w -= col_w
        else:  # horizontally along the top edge
            row_h = s / w if w > 0 else 0.0
            cx = x
            for j in row_idx:
                rw = areas[j] / row_h if row_h > 0 else 0.0
                placed[order[j]] = Rect(cx, y, rw, row_h)
                cx += rw
            y += row_h
            h -= row_h

    while i < len(areas):
        side = min(w, h)
        if not row:
            row = [i]
            i += 1
            continue
        current = [areas[j] for j in row]
        if worst(current + [areas[i]], side) <= worst(current, side):
            row.append(i)
            i += 1
        else:
            lay_row(row)
            row = []
    if row:
        lay_row(row)
    return [r for r in placed if r is not None]


@dataclass(frozen=True)
class WordBox:
    keyword: str
    frequency: int
    font_size: float
    x: float
    y: float
    w: float
    h: float

    def to_dict(self) -> dict:
        return {
            "keyword": self.keyword,
            "frequency": self.frequency,
            "font_size": self.font_size,
            "x": self.x,
            "y": self.y,
            "w": self.w,
            "h": self.h,
        }


def _font_size(freq: int, f_lo: int, f_hi: int) -> float:
    if f_hi == f_lo:
        return FONT_MAX
    t = (freq - f_lo) / (f_hi - f_lo)
    return FONT_MIN + t * (FONT_MAX - FONT_MIN)


def place_words(rect: Rect, keywords: list[tuple[str, int]]) -> list[WordBox]:
    """Greedy descending-frequency row packing inside the rect.

    Word boxes use a fixed character metric so geometry is reproducible; the
    rows are centered as a block. Words that cannot fit anywhere are dropped
    (lowest-frequency words go first since placement is frequency-ordered).
    """
    if rect.w <= 0 or rect.h <= 0:
        return []
    if not keywords:
        return []
    ordered = sorted(keywords, key=lambda kf: (-kf[1], kf[0]))
    freqs = [f for _, f in ordered]
    f_lo, f_hi = min(freqs), max(freqs)

    rows: list[list[tuple[str, int, float, float, float]]] = [[]]  # (word, freq, font, w, h)
    row_widths = [0.0]
    row_heights = [0.0]
    used_height = 0.0

    for word, freq in ordered:
        font = _font_size(freq, f_lo, f_hi)
        bw = CHAR_WIDTH_RATIO * font * len(word)
        bh = LINE_HEIGHT_RATIO * font
        if bw > rect.w or bh > rect.h:
            continue  # cannot fit even alone
        cur_w = row_widths[-1]
        needed = bw if cur_w == 0.0 else cur_w + WORD_PADDING + bw
        if needed <= rect.w and used_height - row_heights[-1] + max(row_heights[-1], bh) <= rect.h:
            used_height += max(row_heights[-1], bh) - row_heights[-1]
            rows[-1].append((word, freq, font, bw, bh))
            row_widths[-1] = needed
            row_heights[-1] = max(row_heights[-1], bh)
        elif used_height + WORD_PADDING + bh <= rect.h and rows[-1]:
            rows.append([(word, freq, font, bw, bh)])
            row_widths.append(bw)
            row_heights.append(bh)
            used_height += WORD_PADDING + bh
        # else: dropped

    rows = [r for r in rows if r]
    if not rows:
        return []
    block_h = sum(LINE_HEIGHT_RATIO * max(f for _, _, f, _, _ in r) for r in rows) + WORD_PADDING * (len(rows) - 1)
    y = rect.y + max(0.0, (rect.h - block_h) / 2.0)
    boxes: list[WordBox] = []
    for row in rows:
        row_w = sum(b[3] for b in row) + WORD_PADDING * (len(row) - 1)
        row_h = max(b[4] for b in row)
        x = rect.x + max(0.0, (rect.w - row_w) / 2.0)
        for word, freq, font, bw, bh in row:
            boxes.append(WordBox(keyword=word, frequency=freq, font_size=font, x=x, y=y, w=bw, h=bh))
            x += bw + WORD_PADDING
        y += row_h + WORD_PADDING
    return boxes


@dataclass(frozen=True)
class ClusterSpec:
    cluster_id: int
    weight: float
    keywords: tuple[tuple[str, int], ...]  # (keyword, frequency)


@dataclass(frozen=True)
class SectionLayout:
    dimension: str
    rect: Rect
    cluster_rects: tuple[tuple[int, Rect], ...]  # (cluster_id, rect)
    word_boxes: tuple[WordBox, ...]


@dataclass(frozen=True)
class TreemapWordle:
    canvas_w: float
    canvas_h: float
    sections: tuple[SectionLayout, ...]

    def to_dict(self) -> dict:
        return {
            "canvas": {"w": self.canvas_w, "h": self.canvas_h},
            "sections": [
                {
                    "dimension": s.dimension,
                    "rect": s.rect.to_dict(),
                    "clusters": [{"cluster_id": cid, "rect": r.to_dict()} for cid, r in s.cluster_rects],
                    "words": [w.to_dict() for w in s.word_boxes],
                }
                for s in self.sections
            ],
        }


def treemap(
    sections: dict[str, list[ClusterSpec]],
    canvas_w: float,
    canvas_h: float,
) -> TreemapWordle:
    """Two-level layout: 8 fixed semantic sections along x (high-level 1.2x
    wider), squarified cluster rectangles inside each, word boxes inside those.

    Empty sections keep their rectangle and render empty.
    """
    if canvas_w <= 0 or canvas_h <= 0:
        raise RangeViolation("canvas must have positive area")
    unknown = set(sections) - set(SCORE_DIMENSIONS)
    if unknown:
        raise RangeViolation(f"unknown section dimensions: {sorted(unknown)}")

    out = []
    x = 0.0
    for dim in SCORE_DIMENSIONS:
        frac = LOW_SECTION_FRACTION if dim in LOW_LEVEL_DIMENSIONS else HIGH_SECTION_FRACTION
        rect = Rect(x, 0.0, frac * canvas_w, canvas_h)
        x += rect.w
        specs = sections.get(dim, [])
        cluster_rects: list[tuple[int, Rect]] = []
        word_boxes: list[WordBox] = []
        if specs:
            rects = squarify([s.weight for s in specs], rect)
            for spec, crect in zip(specs, rects):
                cluster_rects.append((spec.cluster_id, crect))
                inner = Rect(
                    crect.x + WORD_PADDING,
                    crect.y + WORD_PADDING,
                    max(0.0, crect.w - 2 * WORD_PADDING),
                    max(0.0, crect.h - 2 * WORD_PADDING),
                )
                word_boxes.extend(place_words(inner, list(spec.keywords)))
        out.append(
            SectionLayout(
                dimension=dim,
                rect=rect,
                cluster_rects=tuple(cluster_rects),
                word_boxes=tuple(word_boxes),
            )
        )
    return TreemapWordle(canvas_w=canvas_w, canvas_h=canvas_h, sections=tuple(out))


@dataclass(frozen=True)
class SankeyLink:
    keyword: str
    view_index: int
    weight: float
    color_index: float  # 1 - weight: yellow (high) to purple (low)

    def to_dict(self) -> dict:
        return {
            "keyword": self.keyword,
            "view_index": self.view_index,
            "weight": self.weight,
            "color_index": self.color_index,
        }


@dataclass(frozen=True)
class SankeyData:
    keywords: tuple[str, ...]
    views: tuple[int, ...]
    links: tuple[SankeyLink, ...]
    threshold: float

    def to_dict(self) -> dict:
        return {
            "keywords": list(self.keywords),
            "views": list(self.views),
            "links": [l.to_dict() for l in self.links],
            "threshold": self.threshold,
        }


def sankey(links: list[tuple[str, int, float]], threshold: float) -> SankeyData:
    """Keyword-to-view flow, keeping links with weight >= threshold."""
    if not 0.0 <= threshold <= 1.0:
        raise RangeViolation(f"threshold must be in [0,1], got {threshold}")
    kept = [
        SankeyLink(keyword=k, view_index=v, weight=w, color_index=1.0 - w)
        for k, v, w in links
        if w >= threshold
    ]
    kept.sort(key=lambda l: (l.keyword, l.view_index))
    keywords = tuple(sorted({l.keyword for l in kept}))
    views = tuple(sorted({l.view_index for l in kept}))
    return SankeyData(keywords=keywords, views=views, links=tuple(kept), threshold=threshold)


@dataclass(frozen=True)
class ScoreSeries:
    """Line-chart data: fixed dimension order on x, values in [0, 1] on y.

    Per-view dimensions carry one polyline per view; model-level dimensions
    are a single shared point. Missing values are simply absent (gaps).
    """

    dimensions: tuple[str, ...]
    model_level: dict[str, float]
    per_view: dict[str, dict[int, float]]

    def to_dict(self) -> dict:
        return {
            "dimensions": list(self.dimensions),
            "model_level": dict(self.model_level),
            "per_view": {dim: {str(v): val for v, val in views.items()} for dim, views in self.per_view.items()},
        }


def score_series(
    model_level: dict[str, float | None],
    per_view: dict[str, dict[int, float]] | None = None,
) -> ScoreSeries:
    per_view = per_view or {}
    for dim in list(model_level) + list(per_view):
        if dim not in SCORE_DIMENSIONS:
            raise RangeViolation(f"unknown dimension {dim!r}")
    clean_model = {}
    for dim, v in model_level.items():
        if v is None:
            continue  # gap, never zero
        if not 0.0 <= v <= 1.0:
            raise RangeViolation(f"series value out of [0,1]: {dim}={v}")
        clean_model[dim] = v
    clean_views: dict[str, dict[int, float]] = {}
    for dim, views in per_view.items():
        for idx, v in views.items():
            if not 0.0 <= v <= 1.0:
                raise RangeViolation(f"series value out of [0,1]: {dim}[{idx}]={v}")
        clean_views[dim] = dict(views)
    return ScoreSeries(dimensions=SCORE_DIMENSIONS, model_level=clean_model, per_view=clean_views)
