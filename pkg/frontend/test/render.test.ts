import assert from "node:assert/strict";
import { test } from "node:test";

import { buildSatelliteScene } from "../src/render/gallery.js";
import { buildSankeyScene } from "../src/render/sankey.js";
import { brushFilter, buildHeatmapScenes, buildLineChart } from "../src/render/scores.js";
import { buildTreemapScene } from "../src/render/treemap.js";
import type { CandidatePayload, DefectMapPayload, TreemapPayload } from "../src/types.js";

function candidatePayload(): CandidatePayload {
  return {
    id: "s1-i01-c000",
    prompt: { id: "p0", text: "a pink cat", parent_id: null, source: "augmented", drift: false },
    branch: "generation",
    views: ["h0", "h1", "h2", "h3", "h4", "h5", "h6", "h7", "h8"],
    view_size: [96, 96],
    mesh_ref: null,
    fuse_cosine: 0.5,
    gate: { co_term: 0.9, iou: 0.8, bbox_iou: 0.7, weights: [0.3, 0.4, 0.3], total: 0.8 },
    grayed: false,
    unscorable: null,
    score_vector: null,
    clip_i_per_view: null,
    per_view_plausibility: null,
    defect_map: null,
    satellite: {
      center_score: 0.75,
      r_min: 100,
      r_max: 200,
      satellites: Array.from({ length: 8 }, (_, i) => ({
        view_index: i + 1,
        angle_degrees: (i + 1) * 45,
        radius: 100 + i * 12.5,
        color_index: 1 - i / 8,
        score: 1 - i / 8,
        hollow: i === 7,
      })),
    },
    score_series: null,
  };
}

test("satellite scene radii and angles are payload verbatim", () => {
  const payload = candidatePayload();
  const scene = buildSatelliteScene(payload);
  assert.equal(scene.satellites.length, 8);
  payload.satellite!.satellites.forEach((sat, i) => {
    assert.equal(scene.satellites[i].radius, sat.radius); // snapshot diff = 0
    assert.equal(scene.satellites[i].angleDegrees, sat.angle_degrees);
    assert.equal(scene.satellites[i].colorIndex, sat.color_index);
    assert.equal(scene.satellites[i].blob, payload.views[sat.view_index]);
  });
  assert.equal(scene.gateTotal, 0.8);
});

test("heatmap scene copies deviations as alphas and flags as frames", () => {
  const defectMap: DefectMapPayload = {
    grid: [
      [
        [0, 0.6],
        [0.2, 0],
      ],
      [
        [0, 0],
        [0, 0],
      ],
    ],
    flags: [true, false],
    deviation_cutoff: 0.5,
    flag_fraction: 0.25,
  };
  const scenes = buildHeatmapScenes(defectMap);
  assert.equal(scenes.length, 2);
  assert.equal(scenes[0].flagged, true);
  const alphas = scenes[0].cells.map((c) => c.alpha).sort();
  assert.deepEqual(alphas, [0.2, 0.6]);
  assert.equal(scenes[1].cells.length, 0); // zero deviation draws no overlay
  assert.equal(scenes[1].flagged, false);
});

test("line chart keeps gaps for missing dimensions", () => {
  const chart = buildLineChart({
    dimensions: ["color_consistency", "clip_score", "clip_i"],
    model_level: { color_consistency: 0.9, clip_i: 0.7 },
    per_view: { clip_i: { "1": 0.6, "2": 0.8 } },
  });
  assert.deepEqual(
    chart.modelLine.points.map((p) => p.dimension),
    ["color_consistency", "clip_i"], // clip_score missing -> gap, never zero
  );
  assert.equal(chart.viewLines.length, 2);
  assert.equal(chart.viewLines[0].points[0].value, 0.6);
});

test("brush keeps only polylines fully inside the range", () => {
  const lines = [
    { label: "view 1", viewIndex: 1, points: [{ dimension: "a", dimensionIndex: 0, value: 0.8 }] },
    {
      label: "view 2",
      viewIndex: 2,
      points: [
        { dimension: "a", dimensionIndex: 0, value: 0.75 },
        { dimension: "b", dimensionIndex: 1, value: 0.5 },
      ],
    },
  ];
  const kept = brushFilter(lines, [0.7, 1.0]);
  assert.deepEqual(
    kept.map((l) => l.label),
    ["view 1"],
  );
  assert.equal(brushFilter(lines, null).length, 2);
});

test("treemap scene rectangles and fonts are payload verbatim", () => {
  const payload: TreemapPayload = {
    canvas: { w: 880, h: 320 },
    sections: [
      {
        dimension: "clip_score",
        rect: { x: 200, y: 0, w: 100, h: 320 },
        clusters: [{ cluster_id: 3, rect: { x: 200, y: 0, w: 50, h: 320 } }],
        words: [{ keyword: "glossy", frequency: 4, font_size: 28, x: 210, y: 100, w: 80, h: 33.6 }],
      },
    ],
  };
  const scene = buildTreemapScene(payload);
  const section = scene.rects.find((r) => r.kind === "section")!;
  assert.deepEqual(
    { x: section.x, y: section.y, w: section.w, h: section.h },
    payload.sections[0].rect, // snapshot diff = 0
  );
  const cluster = scene.rects.find((r) => r.kind === "cluster")!;
  assert.equal(cluster.clusterId, 3);
  assert.deepEqual(
    { x: cluster.x, y: cluster.y, w: cluster.w, h: cluster.h },
    payload.sections[0].clusters[0].rect,
  );
  assert.equal(scene.words[0].fontSize, 28);
  assert.equal(scene.words[0].x, 210);
});

test("sankey scene passes weights and colors through", () => {
  const scene = buildSankeyScene({
    keywords: ["cat"],
    views: [0, 4],
    links: [
      { keyword: "cat", view_index: 0, weight: 0.9, color_index: 0.1 },
      { keyword: "cat", view_index: 4, weight: 0.3, color_index: 0.7 },
    ],
    threshold: 0.2,
  });
  assert.equal(scene.links.length, 2);
  assert.equal(scene.links[0].weight, 0.9);
  assert.equal(scene.links[0].colorIndex, 0.1);
  assert.equal(scene.threshold, 0.2);
});
