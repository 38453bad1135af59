import assert from "node:assert/strict";
import { test } from "node:test";

import { ApiClient } from "../src/api.js";
import { clickKeyword } from "../src/controller.js";
import { pollIteration } from "../src/poll.js";

function jsonResponse(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}

test("clicking a keyword issues exactly one keyword POST then one iteration POST", async () => {
  const calls: { method: string; path: string; body: unknown }[] = [];
  const fetchFn = async (input: string, init?: RequestInit) => {
    const path = input;
    const method = init?.method ?? "GET";
    const body = init?.body ? JSON.parse(String(init.body)) : null;
    calls.push({ method, path, body });
    if (path.endsWith("/prompt/keywords")) {
      return jsonResponse(200, { prompt: "a pink cat, thinner" });
    }
    if (path.endsWith("/iterations")) {
      return jsonResponse(202, { iteration: 2, status: "pending" });
    }
    throw new Error(`unexpected call ${method} ${path}`);
  };

  const api = new ApiClient("", fetchFn);
  const result = await clickKeyword(api, "s1", "thinner");

  assert.equal(result.prompt, "a pink cat, thinner");
  assert.equal(result.iteration, 2);
  const posts = calls.filter((c) => c.method === "POST");
  assert.equal(posts.length, 2);
  assert.equal(posts[0].path, "/sessions/s1/prompt/keywords");
  assert.deepEqual(posts[0].body, { keywords: ["thinner"] });
  assert.equal(posts[1].path, "/sessions/s1/iterations");
  assert.equal((posts[1].body as { prompt: string }).prompt, "a pink cat, thinner");
  // keyword POST strictly precedes iteration POST
  assert.ok(calls.findIndex((c) => c.path.endsWith("keywords")) < calls.findIndex((c) => c.path.endsWith("iterations")));
});

test("polling repeats until a terminal status, 1s cadence by default", async () => {
  const statuses = ["pending", "generating", "scoring", "ready"];
  let call = 0;
  const sleeps: number[] = [];
  const fetchFn = async () =>
    jsonResponse(200, {
      index: 1,
      status: statuses[Math.min(call++, statuses.length - 1)],
      root_prompt: { id: "r", text: "x", parent_id: null, source: "user", drift: false },
      options: { n: 4, branches: ["generation"] },
      augmented: [],
      candidates: [],
      cluster: null,
      keyword_stats: [],
      treemap: null,
      diagnostics: {},
    });
  const api = new ApiClient("", fetchFn);
  const seen: string[] = [];
  const result = await pollIteration(api, "s1", 1, {
    onUpdate: (it) => seen.push(it.status),
    sleep: async (ms) => {
      sleeps.push(ms);
    },
  });
  assert.equal(result.status, "ready");
  assert.deepEqual(seen, statuses);
  assert.ok(sleeps.every((ms) => ms === 1000));
});

test("api errors carry the machine code", async () => {
  const fetchFn = async () => jsonResponse(404, { code: "session_not_found", message: "nope" });
  const api = new ApiClient("", fetchFn);
  await assert.rejects(api.getSession("missing"), (error: Error & { code?: string }) => {
    assert.equal(error.code, "session_not_found");
    return true;
  });
});
