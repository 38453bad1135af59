/** Iteration progress polling (status field, 1 s default interval). */
const TERMINAL = new Set(["ready", "failed"]);
const defaultSleep = (ms) => new Promise((resolve) => setTimeout(resolve, ms));
export async function pollIteration(api, sessionId, index, options = {}) {
    const interval = options.intervalMs ?? 1000;
    const timeout = options.timeoutMs ?? 300_000;
    const sleep = options.sleep ?? defaultSleep;
    const deadline = Date.now() + timeout;
    for (;;) {
        const iteration = await api.getIteration(sessionId, index);
        options.onUpdate?.(iteration);
        if (TERMINAL.has(iteration.status))
            return iteration;
        if (Date.now() > deadline)
            throw new Error(`iteration ${index} still ${iteration.status} after timeout`);
        await sleep(interval);
    }
}
