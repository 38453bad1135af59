/** Heatmap overlay and eight-dimension line chart scenes. Deviations and
 * score values are copied from the payload; the brush filter only selects
 * which server-provided polylines stay visible. */
export function buildHeatmapScenes(defectMap) {
    return defectMap.grid.map((grid, viewIndex) => {
        const cells = [];
        grid.forEach((row, gy) => row.forEach((deviation, gx) => {
            if (deviation > 0)
                cells.push({ gx, gy, alpha: deviation });
        }));
        return {
            viewIndex,
            flagged: defectMap.flags[viewIndex],
            cells,
            grid: grid.length,
        };
    });
}
export function buildLineChart(series) {
    const dims = series.dimensions;
    const modelPoints = [];
    dims.forEach((dimension, dimensionIndex) => {
        const value = series.model_level[dimension];
        if (value !== undefined)
            modelPoints.push({ dimension, dimensionIndex, value });
    });
    const viewIndices = new Set();
    for (const perView of Object.values(series.per_view)) {
        for (const key of Object.keys(perView))
            viewIndices.add(Number(key));
    }
    const viewLines = [...viewIndices]
        .sort((a, b) => a - b)
        .map((viewIndex) => {
        const points = [];
        dims.forEach((dimension, dimensionIndex) => {
            const value = series.per_view[dimension]?.[String(viewIndex)];
            if (value !== undefined)
                points.push({ dimension, dimensionIndex, value });
        });
        return { label: `view ${viewIndex}`, viewIndex, points };
    })
        .filter((line) => line.points.length > 0);
    return { dimensions: dims, modelLine: { label: "model", viewIndex: null, points: modelPoints }, viewLines };
}
/** Brush rule: only polylines with every point inside [lo, hi] stay shown. */
export function brushFilter(lines, brush) {
    if (!brush)
        return lines;
    const [lo, hi] = brush;
    return lines.filter((line) => line.points.every((p) => p.value >= lo && p.value <= hi));
}
export function buildScoreScenes(candidate) {
    return {
        heatmaps: candidate.defect_map ? buildHeatmapScenes(candidate.defect_map) : [],
        chart: candidate.score_series ? buildLineChart(candidate.score_series) : null,
    };
}
