/** Keyword-contribution Sankey scene. The server already filtered links by
 * threshold; weights and color indices pass through untouched. */
export function buildSankeyScene(payload) {
    return {
        threshold: payload.threshold,
        keywords: [...payload.keywords],
        views: [...payload.views],
        links: payload.links.map((l) => ({
            keyword: l.keyword,
            viewIndex: l.view_index,
            weight: l.weight,
            colorIndex: l.color_index,
        })),
    };
}
/** Yellow (high contribution) to purple (low). */
export function linkColor(colorIndex) {
    const t = Math.min(1, Math.max(0, colorIndex));
    const channel = (lo, hi) => Math.round(lo + t * (hi - lo));
    return `rgb(${channel(250, 126)}, ${channel(204, 58)}, ${channel(21, 242)})`;
}
