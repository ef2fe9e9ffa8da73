/**
 * End-to-end checks against a real rating-service process:
 *
 * 1. Blinding: every payload the console receives over the wire is free of
 *    system identifiers, and 8 submitted ratings export to a rater x item
 *    matrix identical to the submissions.
 * 2. Curation loop: an exemplar edited through the console API is versioned
 *    server-side, and a stage-3 rerun retrieves the new version.
 */

import { spawn, spawnSync, type ChildProcess } from "node:child_process";
import { mkdtempSync, readFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { createClient, type Client } from "../src/api.js";
import { DQ_CRITERIA } from "../src/forms.js";

const SYSTEM_IDS = ["normforge-tuned", "baseline-model"];
const PORT = 8700 + (process.pid % 200);
const BASE = `http://127.0.0.1:${PORT}`;

let workDir: string;
let server: ChildProcess | null = null;
let raterA: Client;
let raterB: Client;

function python(args: string[], label: string): void {
  const result = spawnSync("python3", args, { encoding: "utf-8" });
  if (result.status !== 0) {
    throw new Error(`${label} failed:\n${result.stdout}\n${result.stderr}`);
  }
}

async function waitForHealth(): Promise<void> {
  for (let attempt = 0; attempt < 100; attempt += 1) {
    try {
      const response = await fetch(`${BASE}/healthz`);
      if (response.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((resolve) => setTimeout(resolve, 300));
  }
  throw new Error("rating service never became healthy");
}

beforeAll(async () => {
  workDir = mkdtempSync(join(tmpdir(), "console-e2e-"));
  python([join(__dirname, "fixtures", "make_fixtures.py"), workDir], "fixture build");

  server = spawn(
    "python3",
    [
      "-m", "normforge.cli", "serve",
      "--addr", `127.0.0.1:${PORT}`,
      "--store", join(workDir, "store"),
      "--corpus", join(workDir, "corpus.jsonl"),
      "--comparisons", join(workDir, "comparisons.jsonl"),
      "--exemplars", join(workDir, "exemplars"),
      "--tokens", "tok-a:rater-a,tok-b:rater-b",
    ],
    { stdio: "pipe" },
  );
  await waitForHealth();
  raterA = createClient(BASE, "tok-a");
  raterB = createClient(BASE, "tok-b");
});

afterAll(() => {
  server?.kill("SIGTERM");
});

describe("blinding end-to-end", () => {
  it("serves A/B payloads with no system identifiers anywhere", async () => {
    const session = await raterA.createSession({ task_kind: "ab_preference", seed: 4 });
    expect(session.size).toBe(20);
    let served = 0;
    for (;;) {
      const next = await raterA.nextItem(session.session_id);
      if (next.done || next.item === null) break;
      const wire = JSON.stringify(next);
      for (const system of SYSTEM_IDS) {
        expect(wire).not.toContain(system);
      }
      expect(Object.keys(next.item).sort()).toEqual(
        ["context", "item_id", "response_a", "response_b"],
      );
      await raterA.submitRating(session.session_id, String(next.item.item_id), {
        choice: served % 2 === 0 ? "A" : "B",
      });
      served += 1;
    }
    expect(served).toBe(20);

    // de-blinding happens only at export: the mapping resurfaces there
    const exported = await raterA.exportResults([session.session_id]);
    const ab = exported.ab as { n: number; per_system: Record<string, number> };
    expect(ab.n).toBe(20);
    expect(Object.keys(ab.per_system).sort()).toEqual([...SYSTEM_IDS].sort());
  });

  it("exports 8 submitted ratings as a rater x item matrix identical to the submissions", async () => {
    const submissions: Record<string, Record<string, number>> = { "rater-a": {}, "rater-b": {} };
    const sessionIds: string[] = [];
    const clients: Array<[string, Client]> = [["rater-a", raterA], ["rater-b", raterB]];
    for (const [rater, client] of clients) {
      const session = await client.createSession({
        task_kind: "dq_rating",
        seed: 9,
        sample_size: 4,
      });
      sessionIds.push(session.session_id);
      for (let i = 0; i < 4; i += 1) {
        const next = await client.nextItem(session.session_id);
        expect(next.done).toBe(false);
        const itemId = String(next.item?.item_id);
        const value = 1 + ((itemId.length + i + (rater === "rater-a" ? 0 : 2)) % 5);
        const scores: Record<string, number> = {};
        for (const criterion of DQ_CRITERIA) scores[criterion] = value;
        await client.submitRating(session.session_id, itemId, { scores });
        submissions[rater][itemId] = value;
      }
    }
    const exported = await raterA.exportResults(sessionIds);
    const matrix = exported.dq_matrix as Record<string, Record<string, Record<string, number>>>;
    for (const criterion of DQ_CRITERIA) {
      expect(matrix[criterion]).toEqual(submissions);
    }
    // same seed -> both raters rated the same 4 items (a proper matrix)
    expect(Object.keys(submissions["rater-a"]).sort()).toEqual(
      Object.keys(submissions["rater-b"]).sort(),
    );
  });
});

describe("curation loop", () => {
  it("an edited exemplar is versioned and surfaces in a stage-3 rerun", async () => {
    const session = await raterA.createSession({ task_kind: "exemplar_curation", seed: 1 });
    const next = await raterA.nextItem(session.session_id);
    expect(next.done).toBe(false);
    const item = next.item as Record<string, unknown>;
    const exemplarId = String(item.exemplar_id);
    expect(Number(item.version)).toBe(1);

    const revisedSituation =
      "Jordan is Alex's direct manager, and the mood is formal. " +
      "Alex has rehearsed this apology on the walk over. " +
      "The conversation is about to begin.";
    await raterA.submitRating(session.session_id, String(item.item_id), {
      scenario: String(item.scenario),
      situation: revisedSituation,
    });

    // rerun stage 3 over the naive pairs; retrieval must pick version 2
    const traces = join(workDir, "traces.jsonl");
    python(
      [
        "-m", "normforge.cli", "stage3",
        "--pairs", join(workDir, "pairs.jsonl"),
        "--taxonomy", join(workDir, "taxonomy"),
        "--exemplars", join(workDir, "exemplars"),
        "--mode", "record",
        "--provider", "scripted",
        "--cache", join(workDir, "stage3-cache.jsonl"),
        "--out-traces", traces,
      ],
      "stage3 rerun",
    );
    const lines = readFileSync(traces, "utf-8").trim().split("\n");
    const used = lines.flatMap(
      (line) => (JSON.parse(line).exemplars_used as Array<[string, number]>) ?? [],
    );
    expect(used).toContainEqual([exemplarId, 2]);
  });
});
