/** Treemap-wordle scene: every rectangle and word box is the server's
 * geometry verbatim. */

import type { TreemapPayload } from "../types.js";

export interface TreemapRect {
  kind: "section" | "cluster";
  dimension: string;
  clusterId: number | null;
  x: number;
  y: number;
  w: number;
  h: number;
}

export interface TreemapWord {
  keyword: string;
  frequency: number;
  fontSize: number; // payload verbatim
  x: number;
  y: number;
  w: number;
  h: number;
  dimension: string;
}

export interface TreemapScene {
  canvasW: number;
  canvasH: number;
  rects: TreemapRect[];
  words: TreemapWord[];
}

export function buildTreemapScene(payload: TreemapPayload): TreemapScene {
  const rects: TreemapRect[] = [];
  const words: TreemapWord[] = [];
  for (const section of payload.sections) {
    rects.push({
      kind: "section",
      dimension: section.dimension,
      clusterId: null,
      x: section.rect.x,
      y: section.rect.y,
      w: section.rect.w,
      h: section.rect.h,
    });
    for (const cluster of section.clusters) {
      rects.push({
        kind: "cluster",
        dimension: section.dimension,
        clusterId: cluster.cluster_id,
        x: cluster.rect.x,
        y: cluster.rect.y,
        w: cluster.rect.w,
        h: cluster.rect.h,
      });
    }
    for (const word of section.words) {
      words.push({
        keyword: word.keyword,
        frequency: word.frequency,
        fontSize: word.font_size,
        x: word.x,
        y: word.y,
        w: word.w,
        h: word.h,
        dimension: section.dimension,
      });
    }
  }
  return { canvasW: payload.canvas.w, canvasH: payload.canvas.h, rects, words };
}

const SECTION_COLORS: Record<string, string> = {
  color_consistency: "#dbeafe",
  light_consistency: "#e0f2fe",
  clip_score: "#dcfce7",
  clip_i: "#ecfccb",
  text_image_alignment: "#fef9c3",
  plausibility_3d: "#ffedd5",
  texture_geometry: "#fde2e4",
  low_level_texture: "#ede9fe",
};

export function sectionColor(dimension: string): string {
  return SECTION_COLORS[dimension] ?? "#f3f4f6";
}
