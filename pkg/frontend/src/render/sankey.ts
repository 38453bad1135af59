/** Keyword-contribution Sankey scene. The server already filtered links by
 * threshold; weights and color indices pass through untouched. */

import type { SankeyPayload } from "../types.js";

export interface SankeyScene {
  threshold: number;
  keywords: string[];
  views: number[];
  links: {
    keyword: string;
    viewIndex: number;
    weight: number;     // payload verbatim
    colorIndex: number; // payload verbatim: 0 = yellow (high) .. 1 = purple (low)
  }[];
}

export function buildSankeyScene(payload: SankeyPayload): SankeyScene {
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
export function linkColor(colorIndex: number): string {
  const t = Math.min(1, Math.max(0, colorIndex));
  const channel = (lo: number, hi: number) => Math.round(lo + t * (hi - lo));
  return `rgb(${channel(250, 126)}, ${channel(204, 58)}, ${channel(21, 242)})`;
}
