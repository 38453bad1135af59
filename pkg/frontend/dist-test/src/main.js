/** Application shell: prompt entry, satellite gallery, candidate detail
 * (heatmaps + line chart), treemap wordle, contribution Sankey. */
import { ApiClient } from "./api.js";
import { clickKeyword, refreshSankey, startSession } from "./controller.js";
import { renderHeatmapOverlay, renderLineChart, renderSankey, renderSatellite, renderTreemap } from "./dom.js";
import { buildSatelliteScene } from "./render/gallery.js";
import { buildSankeyScene } from "./render/sankey.js";
import { buildScoreScenes } from "./render/scores.js";
import { buildTreemapScene } from "./render/treemap.js";
import { highlightedCandidates, initialState, reduce } from "./state.js";
const api = new ApiClient("");
let state = initialState;
let currentIteration = null;
let sankeyKeyword = null;
function $(id) {
    const el = document.getElementById(id);
    if (!el)
        throw new Error(`missing element #${id}`);
    return el;
}
function dispatch(event) {
    state = reduce(state, event);
}
function setStatus(text) {
    $("status").textContent = text;
}
function renderGallery(iteration) {
    const gallery = $("gallery");
    gallery.replaceChildren();
    const highlighted = highlightedCandidates(iteration.candidates, state.hoveredKeyword);
    for (const candidate of iteration.candidates) {
        const scene = buildSatelliteScene(candidate);
        const node = renderSatellite(scene, (digest) => api.blobUrl(digest), 360, 56);
        node.addEventListener("click", () => selectCandidate(candidate));
        const wrapper = document.createElement("div");
        wrapper.className = "satellite";
        wrapper.title = `${candidate.prompt.text}\n3D-friendly: ${candidate.gate?.total?.toFixed(3) ?? "n/a"}`;
        if (highlighted.size > 0) {
            wrapper.style.outline = highlighted.has(candidate.id) ? "3px solid #f59e0b" : "none";
            wrapper.style.opacity = highlighted.has(candidate.id) ? "1" : "0.45";
        }
        wrapper.appendChild(node);
        gallery.appendChild(wrapper);
    }
}
async function selectCandidate(candidate) {
    dispatch({ kind: "select-candidate", candidateId: candidate.id });
    const detail = $("detail");
    detail.replaceChildren();
    const { heatmaps, chart } = buildScoreScenes(candidate);
    const strip = document.createElement("div");
    strip.className = "heatmap-strip";
    heatmaps.forEach((scene) => {
        const cell = document.createElement("div");
        cell.className = "heatmap-cell";
        const img = document.createElement("img");
        img.src = api.blobUrl(candidate.views[scene.viewIndex]);
        img.width = 96;
        img.height = 96;
        cell.appendChild(img);
        cell.appendChild(renderHeatmapOverlay(scene, 96));
        detail.appendChild(cell);
        strip.appendChild(cell);
    });
    detail.appendChild(strip);
    if (chart) {
        detail.appendChild(renderLineChart(chart, state.brush));
    }
    if (sankeyKeyword) {
        await updateSankey(candidate.id, sankeyKeyword);
    }
}
async function updateSankey(candidateId, keyword) {
    const payload = await refreshSankey(api, candidateId, keyword, state.sankeyThreshold);
    const scene = buildSankeyScene(payload);
    const host = $("sankey");
    host.replaceChildren(renderSankey(scene));
}
function renderTreemapPanel(iteration) {
    if (!iteration.treemap)
        return;
    const scene = buildTreemapScene(iteration.treemap);
    const host = $("treemap");
    host.replaceChildren(renderTreemap(scene, (keyword) => {
        void onKeywordClick(keyword);
    }, (keyword) => {
        dispatch({ kind: "hover-keyword", keyword });
        if (currentIteration)
            renderGallery(currentIteration);
    }));
}
async function onKeywordClick(keyword) {
    if (!state.sessionId)
        return;
    setStatus(`adding "${keyword}" and starting a new iteration...`);
    const { prompt, iteration } = await clickKeyword(api, state.sessionId, keyword);
    $("prompt").value = prompt;
    dispatch({ kind: "iteration-started", index: iteration });
    await watchIteration(iteration);
}
async function watchIteration(index) {
    if (!state.sessionId)
        return;
    const { pollIteration } = await import("./poll.js");
    const done = await pollIteration(api, state.sessionId, index, {
        intervalMs: 1000,
        onUpdate: (it) => {
            dispatch({ kind: "iteration-status", status: it.status });
            setStatus(`iteration ${index}: ${it.status}`);
        },
    });
    currentIteration = done;
    if (done.status === "ready") {
        renderGallery(done);
        renderTreemapPanel(done);
        setStatus(`iteration ${index}: ready (${done.candidates.length} candidates)`);
    }
    else {
        setStatus(`iteration ${index} failed: ${JSON.stringify(done.diagnostics)}`);
    }
}
async function onRun() {
    const prompt = $("prompt").value.trim();
    if (!prompt)
        return;
    if (!state.sessionId) {
        const seed = Number($("seed").value || "7");
        const sessionId = await startSession(api, seed);
        dispatch({ kind: "session-created", sessionId });
        $("session-label").textContent = sessionId;
    }
    setStatus("starting iteration...");
    const { iteration } = await api.startIteration(state.sessionId, prompt);
    dispatch({ kind: "iteration-started", index: iteration });
    await watchIteration(iteration);
}
function wireControls() {
    $("run").addEventListener("click", () => void onRun());
    const slider = $("threshold");
    slider.addEventListener("input", () => {
        dispatch({ kind: "set-threshold", threshold: Number(slider.value) });
        $("threshold-label").textContent = Number(slider.value).toFixed(2);
        if (state.selectedCandidate && sankeyKeyword) {
            void updateSankey(state.selectedCandidate, sankeyKeyword);
        }
    });
    const sankeyInput = $("sankey-keyword");
    sankeyInput.addEventListener("change", () => {
        sankeyKeyword = sankeyInput.value.trim() || null;
        if (state.selectedCandidate && sankeyKeyword) {
            void updateSankey(state.selectedCandidate, sankeyKeyword);
        }
    });
}
if (typeof document !== "undefined" && document.getElementById("run")) {
    wireControls();
    setStatus("enter a prompt to begin");
}
