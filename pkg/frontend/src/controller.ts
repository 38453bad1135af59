/** User-intent flows. Every interaction reduces to documented API calls. */

import type { ApiClient } from "./api.js";
import { pollIteration, type PollOptions } from "./poll.js";
import type { IterationPayload, SankeyPayload } from "./types.js";

export async function startSession(api: ApiClient, seed: number): Promise<string> {
  const { id } = await api.createSession(seed);
  return id;
}

export async function runPrompt(
  api: ApiClient,
  sessionId: string,
  prompt: string,
  options: { n?: number; branches?: string[]; poll?: PollOptions } = {},
): Promise<IterationPayload> {
  const { iteration } = await api.startIteration(sessionId, prompt, options.n, options.branches);
  return pollIteration(api, sessionId, iteration, options.poll);
}

/** Clicking a recommended keyword: exactly one keyword POST, then exactly
 * one iteration POST with the merged prompt. Polling happens separately. */
export async function clickKeyword(
  api: ApiClient,
  sessionId: string,
  keyword: string,
  options: { n?: number; branches?: string[] } = {},
): Promise<{ prompt: string; iteration: number }> {
  const { prompt } = await api.postKeywords(sessionId, [keyword]);
  const { iteration } = await api.startIteration(sessionId, prompt, options.n, options.branches);
  return { prompt, iteration };
}

/** The threshold slider re-queries the contribution endpoint; the server
 * does the filtering. */
export async function refreshSankey(
  api: ApiClient,
  candidateId: string,
  keyword: string,
  threshold: number,
): Promise<SankeyPayload> {
  return api.getContribution(candidateId, keyword, threshold);
}
