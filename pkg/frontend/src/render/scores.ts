/** Heatmap overlay and eight-dimension line chart scenes. Deviations and
 * score values are copied from the payload; the brush filter only selects
 * which server-provided polylines stay visible. */

import type { CandidatePayload, DefectMapPayload, ScoreSeriesPayload } from "../types.js";

export interface HeatmapCell {
  gx: number;
  gy: number;
  alpha: number; // deviation verbatim
}

export interface HeatmapScene {
  viewIndex: number;
  flagged: boolean; // red frame
  cells: HeatmapCell[];
  grid: number;
}

export function buildHeatmapScenes(defectMap: DefectMapPayload): HeatmapScene[] {
  return defectMap.grid.map((grid, viewIndex) => {
    const cells: HeatmapCell[] = [];
    grid.forEach((row, gy) =>
      row.forEach((deviation, gx) => {
        if (deviation > 0) cells.push({ gx, gy, alpha: deviation });
      }),
    );
    return {
      viewIndex,
      flagged: defectMap.flags[viewIndex],
      cells,
      grid: grid.length,
    };
  });
}

export interface PolylinePoint {
  dimension: string;
  dimensionIndex: number;
  value: number; // payload verbatim
}

export interface Polyline {
  label: string; // "view 3" or "model"
  viewIndex: number | null;
  points: PolylinePoint[];
}

export interface LineChartScene {
  dimensions: string[];
  modelLine: Polyline;
  viewLines: Polyline[];
}

export function buildLineChart(series: ScoreSeriesPayload): LineChartScene {
  const dims = series.dimensions;
  const modelPoints: PolylinePoint[] = [];
  dims.forEach((dimension, dimensionIndex) => {
    const value = series.model_level[dimension];
    if (value !== undefined) modelPoints.push({ dimension, dimensionIndex, value });
  });

  const viewIndices = new Set<number>();
  for (const perView of Object.values(series.per_view)) {
    for (const key of Object.keys(perView)) viewIndices.add(Number(key));
  }
  const viewLines: Polyline[] = [...viewIndices]
    .sort((a, b) => a - b)
    .map((viewIndex) => {
      const points: PolylinePoint[] = [];
      dims.forEach((dimension, dimensionIndex) => {
        const value = series.per_view[dimension]?.[String(viewIndex)];
        if (value !== undefined) points.push({ dimension, dimensionIndex, value });
      });
      return { label: `view ${viewIndex}`, viewIndex, points };
    })
    .filter((line) => line.points.length > 0);

  return { dimensions: dims, modelLine: { label: "model", viewIndex: null, points: modelPoints }, viewLines };
}

/** Brush rule: only polylines with every point inside [lo, hi] stay shown. */
export function brushFilter(lines: Polyline[], brush: [number, number] | null): Polyline[] {
  if (!brush) return lines;
  const [lo, hi] = brush;
  return lines.filter((line) => line.points.every((p) => p.value >= lo && p.value <= hi));
}

export function buildScoreScenes(candidate: CandidatePayload): {
  heatmaps: HeatmapScene[];
  chart: LineChartScene | null;
} {
  return {
    heatmaps: candidate.defect_map ? buildHeatmapScenes(candidate.defect_map) : [],
    chart: candidate.score_series ? buildLineChart(candidate.score_series) : null,
  };
}
