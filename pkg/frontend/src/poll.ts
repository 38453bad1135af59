/** Iteration progress polling (status field, 1 s default interval). */

import type { ApiClient } from "./api.js";
import type { IterationPayload } from "./types.js";

const TERMINAL = new Set(["ready", "failed"]);

export interface PollOptions {
  intervalMs?: number;
  timeoutMs?: number;
  onUpdate?: (iteration: IterationPayload) => void;
  sleep?: (ms: number) => Promise<void>;
}

const defaultSleep = (ms: number) => new Promise<void>((resolve) => setTimeout(resolve, ms));

export async function pollIteration(
  api: ApiClient,
  sessionId: string,
  index: number,
  options: PollOptions = {},
): Promise<IterationPayload> {
  const interval = options.intervalMs ?? 1000;
  const timeout = options.timeoutMs ?? 300_000;
  const sleep = options.sleep ?? defaultSleep;
  const deadline = Date.now() + timeout;
  for (;;) {
    const iteration = await api.getIteration(sessionId, index);
    options.onUpdate?.(iteration);
    if (TERMINAL.has(iteration.status)) return iteration;
    if (Date.now() > deadline) throw new Error(`iteration ${index} still ${iteration.status} after timeout`);
    await sleep(interval);
  }
}
