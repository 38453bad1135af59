/** Satellite-chart scene construction. Radii, angles and color indices come
 * straight from the server payload; the only work here is arranging the
 * pass-through values for SVG. */

import type { CandidatePayload, SatelliteLayoutPayload } from "../types.js";

export interface SatelliteNode {
  viewIndex: number;
  angleDegrees: number; // payload verbatim
  radius: number;       // payload verbatim
  colorIndex: number;   // payload verbatim
  hollow: boolean;
  blob: string;         // view image digest
}

export interface SatelliteScene {
  candidateId: string;
  grayed: boolean;
  prompt: string;
  centerBlob: string;
  gateTotal: number | null;
  satellites: SatelliteNode[];
}

export function buildSatelliteScene(candidate: CandidatePayload): SatelliteScene {
  const layout: SatelliteLayoutPayload | null = candidate.satellite;
  const satellites: SatelliteNode[] = (layout?.satellites ?? []).map((s) => ({
    viewIndex: s.view_index,
    angleDegrees: s.angle_degrees,
    radius: s.radius,
    colorIndex: s.color_index,
    hollow: s.hollow,
    blob: candidate.views[s.view_index],
  }));
  return {
    candidateId: candidate.id,
    grayed: candidate.grayed,
    prompt: candidate.prompt.text,
    centerBlob: candidate.views[0],
    gateTotal: candidate.gate ? candidate.gate.total : null,
    satellites,
  };
}

/** Deep-blue (low) to light-blue (high) stops for the satellite dots. */
export function satelliteColor(colorIndex: number): string {
  const t = Math.min(1, Math.max(0, colorIndex));
  const channel = (lo: number, hi: number) => Math.round(lo + t * (hi - lo));
  return `rgb(${channel(21, 148)}, ${channel(58, 199)}, ${channel(125, 235)})`;
}
