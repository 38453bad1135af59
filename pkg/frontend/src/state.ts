/** UI view state: a pure function of API data plus user events. No score or
 * layout numbers originate here. */

export interface ViewState {
  sessionId: string | null;
  iterationIndex: number | null;
  iterationStatus: string | null;
  hoveredKeyword: string | null;
  selectedCandidate: string | null;
  focusDimensions: string[];
  sankeyThreshold: number;
  brush: [number, number] | null; // y-axis selection on the line chart
}

export const initialState: ViewState = {
  sessionId: null,
  iterationIndex: null,
  iterationStatus: null,
  hoveredKeyword: null,
  selectedCandidate: null,
  focusDimensions: [],
  sankeyThreshold: 0,
  brush: null,
};

export type Event =
  | { kind: "session-created"; sessionId: string }
  | { kind: "iteration-started"; index: number }
  | { kind: "iteration-status"; status: string }
  | { kind: "hover-keyword"; keyword: string | null }
  | { kind: "select-candidate"; candidateId: string | null }
  | { kind: "set-focus"; dimensions: string[] }
  | { kind: "set-threshold"; threshold: number }
  | { kind: "set-brush"; brush: [number, number] | null };

export function reduce(state: ViewState, event: Event): ViewState {
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
export function highlightedCandidates(
  candidates: { id: string; prompt: { text: string } }[],
  keyword: string | null,
): Set<string> {
  if (!keyword) return new Set();
  const needle = keyword.toLowerCase();
  const out = new Set<string>();
  for (const candidate of candidates) {
    const tokens: string[] = candidate.prompt.text.toLowerCase().match(/[a-z0-9]+/g) ?? [];
    if (tokens.includes(needle)) out.add(candidate.id);
  }
  return out;
}
