/** Thin typed client over the gateway JSON API. All interactions the UI can
 * perform reduce to these calls. */

import type {
  CandidatePayload,
  IterationPayload,
  KeywordStatPayload,
  SankeyPayload,
  SessionSummaryPayload,
  TreemapPayload,
} from "./types.js";

export type FetchFn = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
  ) {
    super(message);
  }
}

export class ApiClient {
  constructor(
    private baseUrl: string = "",
    private fetchFn: FetchFn = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: { "content-type": "application/json" } };
    if (body !== undefined) init.body = JSON.stringify(body);
    const response = await this.fetchFn(this.baseUrl + path, init);
    const text = await response.text();
    const data = text ? JSON.parse(text) : null;
    if (!response.ok) {
      const code = data && typeof data.code === "string" ? data.code : `http_${response.status}`;
      const message = data && typeof data.message === "string" ? data.message : response.statusText;
      throw new ApiError(response.status, code, message);
    }
    return data as T;
  }

  createSession(seed: number, config?: Record<string, unknown>): Promise<{ id: string; seed: number }> {
    return this.request("POST", "/sessions", { seed, config });
  }

  getSession(id: string): Promise<SessionSummaryPayload> {
    return this.request("GET", `/sessions/${id}`);
  }

  startIteration(
    sessionId: string,
    prompt: string,
    n?: number,
    branches?: string[],
  ): Promise<{ iteration: number; status: string }> {
    return this.request("POST", `/sessions/${sessionId}/iterations`, { prompt, n, branches });
  }

  getIteration(sessionId: string, index: number): Promise<IterationPayload> {
    return this.request("GET", `/sessions/${sessionId}/iterations/${index}`);
  }

  getTreemap(
    sessionId: string,
    index: number,
  ): Promise<{ treemap: TreemapPayload; keyword_stats: KeywordStatPayload[] }> {
    return this.request("GET", `/sessions/${sessionId}/iterations/${index}/treemap`);
  }

  getCandidate(candidateId: string): Promise<CandidatePayload> {
    return this.request("GET", `/candidates/${candidateId}`);
  }

  getContribution(candidateId: string, keyword: string, threshold: number): Promise<SankeyPayload> {
    const params = new URLSearchParams({ keyword, threshold: String(threshold) });
    return this.request("GET", `/candidates/${candidateId}/contribution?${params}`);
  }

  postKeywords(sessionId: string, keywords: string[]): Promise<{ prompt: string }> {
    return this.request("POST", `/sessions/${sessionId}/prompt/keywords`, { keywords });
  }

  getRecommendations(sessionId: string, focus?: string[]): Promise<{ recommendations: KeywordStatPayload[] }> {
    const query = focus && focus.length ? `?focus=${encodeURIComponent(focus.join(","))}` : "";
    return this.request("GET", `/sessions/${sessionId}/recommendations${query}`);
  }

  healthz(): Promise<{ status: string; providers: Record<string, { status: string }> }> {
    return this.request("GET", "/healthz");
  }

  blobUrl(digest: string): string {
    return `${this.baseUrl}/blobs/${digest}.png`;
  }
}
