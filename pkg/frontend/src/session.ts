/**
 * SessionView: the console's entire model, folded from the gateway stream.
 *
 * Invariants this module enforces:
 *
 * - Pure view: every rendered plan/step status derives from a received
 *   update; pose trail points derive from streamed states or `GET /state`
 *   polls.  Nothing is extrapolated client-side.
 * - Deterministic replay: folding the same (journal, entries, polls) in the
 *   same order always yields the same view, so a page reload that replays
 *   the stream from a cursor reproduces the identical transcript and plan
 *   states.
 * - Idempotent redelivery: entries at or below the cursor are ignored, so
 *   an overlapping reconnect cannot double-apply updates.
 *
 * The transcript is a *selector* over (journal, notes), not accumulated
 * state — that is what makes live accumulation and replay converge.
 */

import type {
  PlanDoneStatus,
  PlanWire,
  RobotStateWire,
  UpdateEntry,
  UpdateKind,
} from "./types.js";

// ---------------------------------------------------------------------------
// View model
// ---------------------------------------------------------------------------

export type StepStatus = "pending" | "running" | "ok" | "failed";

export interface StepView {
  skill: string;
  params: Record<string, number>;
  status: StepStatus;
  errorCode?: string;
  detail?: string;
}

export type PlanViewStatus =
  | "proposed"
  | "running"
  | "completed"
  | "failed"
  | "preempted";

export interface PlanView {
  planId: string;
  origin: string;
  createdAt: string;
  corrId: string;
  steps: StepView[];
  status: PlanViewStatus;
}

/** Something the operator sent (instruction, correction or command). */
export interface OutboundRecord {
  corrId: string;
  text: string;
}

/** One robot-side transcript line, derived from exactly one update. */
export interface RobotNote {
  seq: number;
  corrId: string;
  kind: UpdateKind;
  text: string;
}

export interface TranscriptLine {
  role: "operator" | "robot";
  corrId: string;
  text: string;
  kind?: UpdateKind;
  seq?: number;
  /** Runtime findings surfaced inline under the operator's own message. */
  findings?: string[];
}

export interface TrailPoint {
  x: number;
  y: number;
  heading: number;
  tick: number;
}

/** The subset of `GET /state` the poll path consumes. */
export interface PollSample {
  state: RobotStateWire;
  terrain: string | null;
  estop: boolean;
  learning?: Record<string, { skill: string; score: number }[]>;
}

export interface SessionView {
  /** Highest stream seq applied so far; reconnect with `?cursor=<this>`. */
  cursor: number;
  journal: OutboundRecord[];
  notes: RobotNote[];
  /** Rejection findings keyed by the corr id of the message they answer. */
  findingsByCorr: Record<string, string[]>;
  plans: Record<string, PlanView>;
  planOrder: string[];
  currentPlanId: string | null;
  estop: { latched: boolean; reasons: string[] };
  robot: RobotStateWire | null;
  terrain: string | null;
  trail: TrailPoint[];
  awaitingFeedback: string | null;
  learning: Record<string, { skill: string; score: number }[]>;
  gaps: { from: number; to: number }[];
}

const POSE_EPS = 1e-9;
const MAX_TRAIL_POINTS = 2000;

export function emptyView(): SessionView {
  return {
    cursor: 0,
    journal: [],
    notes: [],
    findingsByCorr: {},
    plans: {},
    planOrder: [],
    currentPlanId: null,
    estop: { latched: false, reasons: [] },
    robot: null,
    terrain: null,
    trail: [],
    awaitingFeedback: null,
    learning: {},
    gaps: [],
  };
}

export function shortId(planId: string): string {
  return planId.slice(0, 8);
}

// ---------------------------------------------------------------------------
// Outbound journal
// ---------------------------------------------------------------------------

export function recordOutbound(view: SessionView, corrId: string, text: string): void {
  view.journal.push({ corrId, text });
}

// ---------------------------------------------------------------------------
// Update fold
// ---------------------------------------------------------------------------

/**
 * Fold one stream entry into the view.  Returns true when the entry was
 * applied, false when it was a stale redelivery.
 */
export function applyUpdate(view: SessionView, entry: UpdateEntry): boolean {
  if (entry.seq <= view.cursor) {
    return false;
  }
  view.cursor = entry.seq;

  const p = entry.payload;
  switch (entry.kind) {
    case "plan_proposed": {
      const wire = p["plan"] as PlanWire;
      const plan: PlanView = {
        planId: wire.plan_id,
        origin: wire.origin,
        createdAt: wire.created_at,
        corrId: entry.corr_id,
        steps: wire.steps.map((s) => ({
          skill: s.skill,
          params: { ...s.params },
          status: "pending" as StepStatus,
        })),
        status: "proposed",
      };
      // Plan ids are content hashes, so re-running an instruction reuses
      // the id: reset rather than duplicate.
      if (!(wire.plan_id in view.plans)) {
        view.planOrder.push(wire.plan_id);
      }
      view.plans[wire.plan_id] = plan;
      view.currentPlanId = wire.plan_id;
      note(view, entry, `plan ${shortId(wire.plan_id)} proposed (${wire.origin}): ${planSummary(plan)}`);
      break;
    }

    case "step_started": {
      const step = stepOf(view, p);
      if (step) {
        step.status = "running";
        planOf(view, p)!.status = "running";
      }
      note(view, entry, `step ${p["step"]} ${p["skill"]} started`);
      break;
    }

    case "step_completed": {
      const step = stepOf(view, p);
      if (step) {
        step.status = "ok";
      }
      const state = p["state"] as RobotStateWire | undefined;
      if (state) {
        view.robot = state;
        pushTrail(view, state);
      }
      note(view, entry, `step ${p["step"]} ${p["skill"]} completed`);
      break;
    }

    case "step_failed": {
      const step = stepOf(view, p);
      const code = (p["error_code"] as string | undefined) ?? "ERROR";
      if (step) {
        step.status = "failed";
        step.errorCode = code;
        if (typeof p["detail"] === "string") {
          step.detail = p["detail"];
        }
      }
      const detail = typeof p["detail"] === "string" ? ` — ${p["detail"]}` : "";
      note(view, entry, `step ${p["step"]} ${p["skill"]} failed: ${code}${detail}`);
      break;
    }

    case "plan_done": {
      const status = p["status"] as PlanDoneStatus;
      const planIds = (p["plan_ids"] as string[] | undefined) ?? [];
      planIds.forEach((planId, index) => {
        const plan = view.plans[planId];
        if (!plan) {
          return;
        }
        if (index === planIds.length - 1) {
          if (status === "completed" || status === "failed" || status === "preempted") {
            plan.status = status;
          }
        } else if (plan.status === "running" || plan.status === "proposed") {
          // A superseded plan in a replan chain ended on its failed step.
          plan.status = "failed";
        }
      });
      if (status === "rejected") {
        const findings = (p["findings"] as string[] | undefined) ?? [];
        view.findingsByCorr[entry.corr_id] = dedupe(findings);
        note(view, entry, `instruction rejected (${dedupe(findings).length} finding(s))`);
      } else if (status === "refused_estop") {
        const detail = typeof p["detail"] === "string" ? `: ${p["detail"]}` : "";
        note(view, entry, `instruction refused${detail}`);
      } else {
        note(view, entry, `instruction ${status}`);
      }
      break;
    }

    case "estop": {
      const latched = Boolean(p["latched"]);
      const reasons = (p["reasons"] as string[] | undefined) ?? [];
      view.estop = { latched, reasons };
      note(view, entry, latched ? `e-stop latched (${reasons.join(", ") || "OPERATOR"})` : "e-stop cleared");
      break;
    }

    case "ask_feedback": {
      const planId = p["plan_id"] as string;
      view.awaitingFeedback = planId;
      note(view, entry, `approve or reject plan ${shortId(planId)}?`);
      break;
    }

    case "stream_gap": {
      const from = Number(p["missed_from"]);
      const to = Number(p["missed_to"]);
      view.gaps.push({ from, to });
      note(view, entry, `stream gap: updates ${from}–${to} are no longer retained`);
      break;
    }
  }
  return true;
}

/** Fold a `GET /state` poll.  Polls feed the state panel, map trail, e-stop
 * badge and learning panel only — never plan or step statuses. */
export function applyPoll(view: SessionView, sample: PollSample): void {
  view.robot = sample.state;
  view.terrain = sample.terrain;
  if (sample.estop !== view.estop.latched) {
    view.estop = { latched: sample.estop, reasons: sample.estop ? view.estop.reasons : [] };
  }
  if (sample.learning !== undefined) {
    view.learning = sample.learning;
  }
  pushTrail(view, sample.state);
}

// ---------------------------------------------------------------------------
// Transcript selector
// ---------------------------------------------------------------------------

/**
 * Merge the outbound journal with robot notes into one chat transcript.
 *
 * Each operator line is anchored immediately before the first robot note
 * that carries its corr id; lines nothing has answered yet trail at the
 * end in journal order.  Anchoring is a pure function of (journal, notes),
 * so live views and cursor replays render identically.
 */
export function transcript(view: SessionView): TranscriptLine[] {
  const firstNoteSeq = new Map<string, number>();
  for (const n of view.notes) {
    if (!firstNoteSeq.has(n.corrId)) {
      firstNoteSeq.set(n.corrId, n.seq);
    }
  }

  const anchored = new Map<number, OutboundRecord[]>();
  const unanswered: OutboundRecord[] = [];
  for (const record of view.journal) {
    const seq = firstNoteSeq.get(record.corrId);
    if (seq === undefined) {
      unanswered.push(record);
    } else {
      const bucket = anchored.get(seq) ?? [];
      bucket.push(record);
      anchored.set(seq, bucket);
    }
  }

  const operatorLine = (record: OutboundRecord): TranscriptLine => ({
    role: "operator",
    corrId: record.corrId,
    text: record.text,
    findings: view.findingsByCorr[record.corrId],
  });

  const lines: TranscriptLine[] = [];
  for (const n of view.notes) {
    const waiting = anchored.get(n.seq);
    if (waiting) {
      lines.push(...waiting.map(operatorLine));
      anchored.delete(n.seq);
    }
    lines.push({ role: "robot", corrId: n.corrId, text: n.text, kind: n.kind, seq: n.seq });
  }
  lines.push(...unanswered.map(operatorLine));
  return lines;
}

// ---------------------------------------------------------------------------
// Internals
// ---------------------------------------------------------------------------

function note(view: SessionView, entry: UpdateEntry, text: string): void {
  view.notes.push({ seq: entry.seq, corrId: entry.corr_id, kind: entry.kind, text });
}

function planOf(view: SessionView, payload: Record<string, unknown>): PlanView | undefined {
  return view.plans[payload["plan_id"] as string];
}

function stepOf(view: SessionView, payload: Record<string, unknown>): StepView | undefined {
  return planOf(view, payload)?.steps[payload["step"] as number];
}

function planSummary(plan: PlanView): string {
  return plan.steps.map((s) => s.skill).join(" → ");
}

function dedupe(items: string[]): string[] {
  return [...new Set(items)];
}

function pushTrail(view: SessionView, state: RobotStateWire): void {
  const last = view.trail[view.trail.length - 1];
  if (
    last &&
    Math.abs(last.x - state.x) < POSE_EPS &&
    Math.abs(last.y - state.y) < POSE_EPS &&
    Math.abs(last.heading - state.heading) < POSE_EPS
  ) {
    return;
  }
  view.trail.push({ x: state.x, y: state.y, heading: state.heading, tick: state.tick });
  if (view.trail.length > MAX_TRAIL_POINTS) {
    view.trail.shift();
  }
}
