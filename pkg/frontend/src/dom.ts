/** Scene-to-DOM adapters. Geometry numbers land in SVG attributes verbatim;
 * polar satellite placement is expressed with SVG rotate/translate
 * transforms so the payload values appear untouched in the markup. */

import { satelliteColor, type SatelliteScene } from "./render/gallery.js";
import { linkColor, type SankeyScene } from "./render/sankey.js";
import { brushFilter, type HeatmapScene, type LineChartScene } from "./render/scores.js";
import { sectionColor, type TreemapScene } from "./render/treemap.js";

const SVG_NS = "http://www.w3.org/2000/svg";

function svgEl<K extends keyof SVGElementTagNameMap>(
  tag: K,
  attrs: Record<string, string | number> = {},
): SVGElementTagNameMap[K] {
  const el = document.createElementNS(SVG_NS, tag);
  for (const [key, value] of Object.entries(attrs)) el.setAttribute(key, String(value));
  return el;
}

export function renderSatellite(
  scene: SatelliteScene,
  blobUrl: (digest: string) => string,
  size = 480,
  thumb = 72,
): SVGSVGElement {
  const half = size / 2;
  const svg = svgEl("svg", {
    viewBox: `${-half} ${-half} ${size} ${size}`,
    width: size,
    height: size,
    "data-candidate": scene.candidateId,
    "data-grayed": String(scene.grayed),
  });
  if (scene.grayed) svg.setAttribute("style", "filter: saturate(0.15) opacity(0.6)");

  const center = svgEl("image", {
    href: blobUrl(scene.centerBlob),
    x: -thumb / 2,
    y: -thumb / 2,
    width: thumb,
    height: thumb,
  });
  svg.appendChild(center);

  for (const sat of scene.satellites) {
    const group = svgEl("g", {
      // angle and radius verbatim from the server layout
      transform: `rotate(${sat.angleDegrees - 90}) translate(${sat.radius} 0) rotate(${90 - sat.angleDegrees})`,
      "data-view": sat.viewIndex,
      "data-radius": sat.radius,
    });
    const ring = svgEl("circle", {
      r: thumb / 2 + 4,
      fill: sat.hollow ? "none" : satelliteColor(sat.colorIndex),
      stroke: satelliteColor(sat.colorIndex),
      "stroke-width": 2,
    });
    group.appendChild(ring);
    if (!sat.hollow) {
      group.appendChild(
        svgEl("image", {
          href: blobUrl(sat.blob),
          x: -thumb / 2,
          y: -thumb / 2,
          width: thumb,
          height: thumb,
          "clip-path": `circle(${thumb / 2}px)`,
        }),
      );
    }
    svg.appendChild(group);
  }
  return svg;
}

export function renderHeatmapOverlay(scene: HeatmapScene, size = 128): SVGSVGElement {
  const svg = svgEl("svg", {
    viewBox: `0 0 ${scene.grid} ${scene.grid}`,
    width: size,
    height: size,
    "data-view": scene.viewIndex,
    "data-flagged": String(scene.flagged),
  });
  for (const cell of scene.cells) {
    svg.appendChild(
      svgEl("rect", {
        x: cell.gx,
        y: cell.gy,
        width: 1,
        height: 1,
        fill: "red",
        "fill-opacity": cell.alpha,
      }),
    );
  }
  if (scene.flagged) {
    svg.appendChild(
      svgEl("rect", {
        x: 0,
        y: 0,
        width: scene.grid,
        height: scene.grid,
        fill: "none",
        stroke: "red",
        "stroke-width": 0.6,
      }),
    );
  }
  return svg;
}

export function renderLineChart(
  scene: LineChartScene,
  brush: [number, number] | null,
  width = 560,
  height = 220,
): SVGSVGElement {
  const svg = svgEl("svg", { viewBox: `0 0 ${width} ${height}`, width, height });
  const padding = 28;
  const step = (width - 2 * padding) / Math.max(1, scene.dimensions.length - 1);
  const yOf = (value: number) => height - padding - value * (height - 2 * padding);

  scene.dimensions.forEach((dim, i) => {
    const label = svgEl("text", {
      x: padding + i * step,
      y: height - 6,
      "font-size": 8,
      "text-anchor": "middle",
    });
    label.textContent = dim.replace(/_/g, " ");
    svg.appendChild(label);
  });

  const lines = [...brushFilter(scene.viewLines, brush), ...brushFilter([scene.modelLine], brush)];
  for (const line of lines) {
    if (line.points.length === 0) continue;
    const points = line.points
      .map((p) => `${padding + p.dimensionIndex * step},${yOf(p.value)}`)
      .join(" ");
    svg.appendChild(
      svgEl("polyline", {
        points,
        fill: "none",
        stroke: line.viewIndex === null ? "#111" : `hsl(${(line.viewIndex * 40) % 360} 70% 50%)`,
        "stroke-width": line.viewIndex === null ? 2 : 1,
        "data-line": line.label,
      }),
    );
  }
  return svg;
}

export function renderTreemap(
  scene: TreemapScene,
  onKeywordClick: (keyword: string) => void,
  onKeywordHover: (keyword: string | null) => void,
): SVGSVGElement {
  const svg = svgEl("svg", {
    viewBox: `0 0 ${scene.canvasW} ${scene.canvasH}`,
    width: scene.canvasW,
    height: scene.canvasH,
  });
  for (const rect of scene.rects) {
    svg.appendChild(
      svgEl("rect", {
        x: rect.x,
        y: rect.y,
        width: rect.w,
        height: rect.h,
        fill: rect.kind === "section" ? sectionColor(rect.dimension) : "none",
        stroke: rect.kind === "section" ? "#94a3b8" : "#cbd5e1",
        "stroke-width": rect.kind === "section" ? 1.5 : 0.75,
        "data-kind": rect.kind,
        "data-dimension": rect.dimension,
      }),
    );
  }
  for (const word of scene.words) {
    const text = svgEl("text", {
      x: word.x,
      y: word.y + word.h * 0.8,
      "font-size": word.fontSize,
      "data-keyword": word.keyword,
      style: "cursor: pointer; user-select: none;",
    });
    text.textContent = word.keyword;
    text.addEventListener("click", () => onKeywordClick(word.keyword));
    text.addEventListener("mouseenter", () => onKeywordHover(word.keyword));
    text.addEventListener("mouseleave", () => onKeywordHover(null));
    svg.appendChild(text);
  }
  return svg;
}

export function renderSankey(scene: SankeyScene, width = 560, height = 260): SVGSVGElement {
  const svg = svgEl("svg", { viewBox: `0 0 ${width} ${height}`, width, height });
  const leftX = 120;
  const rightX = width - 80;
  const keywordY = new Map(scene.keywords.map((k, i) => [k, 30 + (i * (height - 60)) / Math.max(1, scene.keywords.length - 1 || 1)]));
  const viewY = new Map(scene.views.map((v, i) => [v, 30 + (i * (height - 60)) / Math.max(1, scene.views.length - 1 || 1)]));

  for (const [keyword, y] of keywordY) {
    const label = svgEl("text", { x: leftX - 8, y: y + 4, "text-anchor": "end", "font-size": 11 });
    label.textContent = keyword;
    svg.appendChild(label);
  }
  for (const [view, y] of viewY) {
    const label = svgEl("text", { x: rightX + 8, y: y + 4, "font-size": 11 });
    label.textContent = `view ${view}`;
    svg.appendChild(label);
  }
  for (const link of scene.links) {
    const y0 = keywordY.get(link.keyword) ?? height / 2;
    const y1 = viewY.get(link.viewIndex) ?? height / 2;
    const mid = (leftX + rightX) / 2;
    svg.appendChild(
      svgEl("path", {
        d: `M ${leftX} ${y0} C ${mid} ${y0}, ${mid} ${y1}, ${rightX} ${y1}`,
        fill: "none",
        stroke: linkColor(link.colorIndex),
        "stroke-width": 1 + 5 * link.weight,
        "stroke-opacity": 0.8,
        "data-link": `${link.keyword}->${link.viewIndex}`,
        "data-weight": link.weight,
      }),
    );
  }
  return svg;
}
