/**
 * End-to-end against the real gateway: the suite spawns `opengo serve`,
 * drives it through the same client the browser uses, and checks the
 * console-level properties on live wire traffic — cursor replay losslessness,
 * inline surfacing of the runtime's out-of-range rejection, and e-stop
 * latch/refuse/resume.
 *
 * Requires the Python package to be installed (`pip install -e .` at the
 * repository root); the whole file is skipped with a clear error otherwise.
 */

import { spawn, type ChildProcess } from "node:child_process";
import { fileURLToPath } from "node:url";
import path from "node:path";

import WebSocket from "ws";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { GatewayClient, type StreamHandle, type WebSocketLike } from "../src/client.js";
import {
  applyPoll,
  applyUpdate,
  emptyView,
  recordOutbound,
  transcript,
  type SessionView,
} from "../src/session.js";
import { renderLearningPanel, renderTranscript } from "../src/render.js";
import type { UpdateEntry } from "../src/types.js";

const HERE = path.dirname(fileURLToPath(import.meta.url));
const REPO_ROOT = path.resolve(HERE, "..", "..");
const PORT = 8700 + Math.floor(Math.random() * 800);
const BASE = `http://127.0.0.1:${PORT}`;

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

class Recorder {
  entries: UpdateEntry[] = [];

  push(entry: UpdateEntry): void {
    this.entries.push(entry);
  }

  async waitFor(
    pred: (e: UpdateEntry) => boolean,
    label: string,
    afterSeq = 0,
    timeoutMs = 20_000,
  ): Promise<UpdateEntry> {
    const deadline = Date.now() + timeoutMs;
    while (Date.now() < deadline) {
      const hit = this.entries.find((e) => e.seq > afterSeq && pred(e));
      if (hit) {
        return hit;
      }
      await sleep(25);
    }
    throw new Error(`timed out waiting for ${label}`);
  }
}

async function waitUntil(cond: () => boolean, label: string, timeoutMs = 20_000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    if (cond()) {
      return;
    }
    await sleep(25);
  }
  throw new Error(`timed out waiting until ${label}`);
}

let proc: ChildProcess;
let stderrLog = "";
let client: GatewayClient;
let liveView: SessionView;
let recorder: Recorder;
let liveStream: StreamHandle;
const extraHandles: StreamHandle[] = [];

const socketFactory = (url: string): WebSocketLike => new WebSocket(url) as unknown as WebSocketLike;

beforeAll(async () => {
  proc = spawn("python3", ["-m", "opengo.cli", "serve", "--bind", `127.0.0.1:${PORT}`], {
    cwd: REPO_ROOT,
    stdio: ["ignore", "pipe", "pipe"],
  });
  proc.stderr?.on("data", (chunk: Buffer) => {
    stderrLog += chunk.toString();
  });

  client = new GatewayClient(BASE, { socketFactory });
  const deadline = Date.now() + 45_000;
  for (;;) {
    if (proc.exitCode !== null) {
      throw new Error(`gateway exited early (code ${proc.exitCode}):\n${stderrLog}`);
    }
    try {
      await client.getState();
      break;
    } catch {
      if (Date.now() > deadline) {
        throw new Error(`gateway never came up on ${BASE}:\n${stderrLog}`);
      }
      await sleep(200);
    }
  }

  liveView = emptyView();
  recorder = new Recorder();
  liveStream = client.openStream(0, (entry) => {
    recorder.push(entry);
    applyUpdate(liveView, entry);
  });
});

afterAll(async () => {
  liveStream?.close();
  for (const handle of extraHandles) {
    handle.close();
  }
  if (proc && proc.exitCode === null) {
    proc.kill("SIGTERM");
    const gone = new Promise<void>((resolve) => proc.once("exit", () => resolve()));
    await Promise.race([gone, sleep(5000).then(() => proc.kill("SIGKILL"))]);
  }
});

async function instruct(text: string): Promise<string> {
  const reply = await client.sendMessage(text);
  recordOutbound(liveView, reply.corr_id, text);
  return reply.corr_id;
}

describe("gateway e2e", () => {
  it("replaying the stream from cursor 0 reproduces the transcript and plan states", async () => {
    const corr1 = await instruct("move forward 1 meter");
    await recorder.waitFor((e) => e.kind === "ask_feedback" && e.corr_id === corr1, "first instruction to finish");
    const corr2 = await instruct("turn left");
    await recorder.waitFor((e) => e.kind === "ask_feedback" && e.corr_id === corr2, "second instruction to finish");

    expect(Object.values(liveView.plans).map((p) => p.status)).toEqual(["completed", "completed"]);

    // Page reload: journal restored from local storage, stream replayed.
    const reloaded = emptyView();
    for (const rec of liveView.journal) {
      recordOutbound(reloaded, rec.corrId, rec.text);
    }
    const handle = client.openStream(0, (entry) => applyUpdate(reloaded, entry));
    extraHandles.push(handle);
    await waitUntil(() => reloaded.cursor >= liveView.cursor, "replay to catch up");
    handle.close();

    expect(transcript(reloaded)).toEqual(transcript(liveView));
    expect(reloaded.plans).toEqual(liveView.plans);
    expect(reloaded.planOrder).toEqual(liveView.planOrder);
    expect(reloaded.estop).toEqual(liveView.estop);
  });

  it("resuming from a mid-stream cursor converges on the same view", async () => {
    const seen = recorder.entries.slice();
    expect(seen.length).toBeGreaterThan(4);
    const split = Math.floor(seen.length / 2);

    const resumed = emptyView();
    for (const rec of liveView.journal) {
      recordOutbound(resumed, rec.corrId, rec.text);
    }
    for (const entry of seen.slice(0, split)) {
      applyUpdate(resumed, entry);
    }
    const handle = client.openStream(resumed.cursor, (entry) => applyUpdate(resumed, entry));
    extraHandles.push(handle);
    await waitUntil(() => resumed.cursor >= liveView.cursor, "resume to catch up");
    handle.close();

    expect(transcript(resumed)).toEqual(transcript(liveView));
    expect(resumed.plans).toEqual(liveView.plans);
  });

  it("surfaces the runtime's out-of-range rejection inline, with no state change", async () => {
    const before = await client.getState();
    const plansBefore = Object.keys(liveView.plans).length;

    const corr = await instruct("move forward 99 meters");
    const done = await recorder.waitFor(
      (e) => e.kind === "plan_done" && e.corr_id === corr,
      "rejection to come back",
    );
    expect(done.payload["status"]).toBe("rejected");

    const findings = liveView.findingsByCorr[corr];
    expect(findings, "findings should be attached to the operator's message").toBeDefined();
    expect(findings!.join("\n")).toMatch(/PARAM_OUT_OF_RANGE/);
    expect(findings!.join("\n")).toContain("outside [0.1, 10.0]");

    // No plan was created and the robot did not move.
    expect(Object.keys(liveView.plans)).toHaveLength(plansBefore);
    const after = await client.getState();
    expect(after.state).toEqual(before.state);

    // The finding renders inside the operator's own bubble.
    const html = renderTranscript(liveView);
    const start = html.indexOf(`data-corr="${corr}"`);
    expect(start).toBeGreaterThan(-1);
    const bubble = html.slice(start, html.indexOf("</div>", start));
    expect(bubble).toContain("move forward 99 meters");
    expect(bubble).toContain("inline-error");
    expect(bubble).toContain("PARAM_OUT_OF_RANGE");
  });

  it("e-stop latches, refuses new work, and resume restores service", async () => {
    const seqBefore = liveView.cursor;
    await client.estop();
    await recorder.waitFor(
      (e) => e.kind === "estop" && e.payload["latched"] === true,
      "latch to stream back",
      seqBefore,
    );
    expect(liveView.estop.latched).toBe(true);
    expect((await client.getState()).estop).toBe(true);

    // A second click is idempotent: still one latched state.
    await client.estop();
    expect((await client.getState()).estop).toBe(true);

    const refusedCorr = await instruct("stand up");
    const refusal = await recorder.waitFor(
      (e) => e.kind === "plan_done" && e.corr_id === refusedCorr,
      "refusal while latched",
    );
    expect(refusal.payload["status"]).toBe("refused_estop");

    const seqBeforeResume = liveView.cursor;
    await instruct("resume");
    await recorder.waitFor(
      (e) => e.kind === "estop" && e.payload["latched"] === false,
      "resume to clear the latch",
      seqBeforeResume,
    );
    expect(liveView.estop.latched).toBe(false);

    const corr = await instruct("stand up");
    await recorder.waitFor((e) => e.kind === "ask_feedback" && e.corr_id === corr, "service to resume");
    expect(liveView.plans[liveView.awaitingFeedback!]!.status).toBe("completed");
  });

  it("approve feeds the learning store and the panel reflects it", async () => {
    const planId = liveView.awaitingFeedback;
    expect(planId).toBeTruthy();

    const reply = await client.sendMessage(`approve ${planId}`);
    recordOutbound(liveView, reply.corr_id, `approve ${planId}`);
    expect(reply.ok).toBe(true);
    expect(reply.plan_id).toBe(planId);
    expect(reply.applied_updates ?? 0).toBeGreaterThan(0);

    applyPoll(liveView, await client.getState());
    const flat = liveView.learning["flat"] ?? [];
    expect(flat.length).toBeGreaterThan(0);
    expect(renderLearningPanel(liveView)).toContain("flat");
  });
});
