/** User-intent flows. Every interaction reduces to documented API calls. */
import { pollIteration } from "./poll.js";
export async function startSession(api, seed) {
    const { id } = await api.createSession(seed);
    return id;
}
export async function runPrompt(api, sessionId, prompt, options = {}) {
    const { iteration } = await api.startIteration(sessionId, prompt, options.n, options.branches);
    return pollIteration(api, sessionId, iteration, options.poll);
}
/** Clicking a recommended keyword: exactly one keyword POST, then exactly
 * one iteration POST with the merged prompt. Polling happens separately. */
export async function clickKeyword(api, sessionId, keyword, options = {}) {
    const { prompt } = await api.postKeywords(sessionId, [keyword]);
    const { iteration } = await api.startIteration(sessionId, prompt, options.n, options.branches);
    return { prompt, iteration };
}
/** The threshold slider re-queries the contribution endpoint; the server
 * does the filtering. */
export async function refreshSankey(api, candidateId, keyword, threshold) {
    return api.getContribution(candidateId, keyword, threshold);
}
