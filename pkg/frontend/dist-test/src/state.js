/** UI view state: a pure function of API data plus user events. No score or
 * layout numbers originate here. */
export const initialState = {
    sessionId: null,
    iterationIndex: null,
    iterationStatus: null,
    hoveredKeyword: null,
    selectedCandidate: null,
    focusDimensions: [],
    sankeyThreshold: 0,
    brush: null,
};
export function reduce(state, event) {
    switch (event.kind) {
        case "session-created":
            return { ...initialState, sessionId: event.sessionId };
        case "iteration-started":
            return { ...state, iterationIndex: event.index, iterationStatus: "pending", selectedCandidate: null };
        case "iteration-status":
            return { ...state, iterationStatus: event.status };
        case "hover-keyword":
            return { ...state, hoveredKeyword: event.keyword };
        case "select-candidate":
            return { ...state, selectedCandidate: event.candidateId };
        case "set-focus":
            return { ...state, focusDimensions: [...event.dimensions] };
        case "set-threshold": {
            const t = Math.min(1, Math.max(0, event.threshold));
            return { ...state, sankeyThreshold: t };
        }
        case "set-brush":
            return { ...state, brush: event.brush };
    }
}
/** Candidates highlighted while hovering a keyword: prompt token membership. */
export function highlightedCandidates(candidates, keyword) {
    if (!keyword)
        return new Set();
    const needle = keyword.toLowerCase();
    const out = new Set();
    for (const candidate of candidates) {
        const tokens = candidate.prompt.text.toLowerCase().match(/[a-z0-9]+/g) ?? [];
        if (tokens.includes(needle))
            out.add(candidate.id);
    }
    return out;
}
