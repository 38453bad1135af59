/** Thin typed client over the gateway JSON API. All interactions the UI can
 * perform reduce to these calls. */
export class ApiError extends Error {
    status;
    code;
    constructor(status, code, message) {
        super(message);
        this.status = status;
        this.code = code;
    }
}
export class ApiClient {
    baseUrl;
    fetchFn;
    constructor(baseUrl = "", fetchFn = (input, init) => fetch(input, init)) {
        this.baseUrl = baseUrl;
        this.fetchFn = fetchFn;
    }
    async request(method, path, body) {
        const init = { method, headers: { "content-type": "application/json" } };
        if (body !== undefined)
            init.body = JSON.stringify(body);
        const response = await this.fetchFn(this.baseUrl + path, init);
        const text = await response.text();
        const data = text ? JSON.parse(text) : null;
        if (!response.ok) {
            const code = data && typeof data.code === "string" ? data.code : `http_${response.status}`;
            const message = data && typeof data.message === "string" ? data.message : response.statusText;
            throw new ApiError(response.status, code, message);
        }
        return data;
    }
    createSession(seed, config) {
        return this.request("POST", "/sessions", { seed, config });
    }
    getSession(id) {
        return this.request("GET", `/sessions/${id}`);
    }
    startIteration(sessionId, prompt, n, branches) {
        return this.request("POST", `/sessions/${sessionId}/iterations`, { prompt, n, branches });
    }
    getIteration(sessionId, index) {
        return this.request("GET", `/sessions/${sessionId}/iterations/${index}`);
    }
    getTreemap(sessionId, index) {
        return this.request("GET", `/sessions/${sessionId}/iterations/${index}/treemap`);
    }
    getCandidate(candidateId) {
        return this.request("GET", `/candidates/${candidateId}`);
    }
    getContribution(candidateId, keyword, threshold) {
        const params = new URLSearchParams({ keyword, threshold: String(threshold) });
        return this.request("GET", `/candidates/${candidateId}/contribution?${params}`);
    }
    postKeywords(sessionId, keywords) {
        return this.request("POST", `/sessions/${sessionId}/prompt/keywords`, { keywords });
    }
    getRecommendations(sessionId, focus) {
        const query = focus && focus.length ? `?focus=${encodeURIComponent(focus.join(","))}` : "";
        return this.request("GET", `/sessions/${sessionId}/recommendations${query}`);
    }
    healthz() {
        return this.request("GET", "/healthz");
    }
    blobUrl(digest) {
        return `${this.baseUrl}/blobs/${digest}.png`;
    }
}
