/**
 * Wire types for the opengo gateway.
 *
 * Everything here mirrors the JSON the gateway actually sends; the console
 * never invents fields.  Sources of truth on the Python side:
 * the update bus entry shape, `RobotState.to_dict()`, plan `to_dict()`,
 * and the `GET /state` snapshot.
 */

// ---------------------------------------------------------------------------
// Update stream
// ---------------------------------------------------------------------------

/** Update kinds published by the session runtime, plus the bus's own
 * `stream_gap` marker for evicted history. */
export type UpdateKind =
  | "plan_proposed"
  | "step_started"
  | "step_completed"
  | "step_failed"
  | "plan_done"
  | "estop"
  | "ask_feedback"
  | "stream_gap";

/** One entry from `WS /stream`: a sequenced envelope around an update. */
export interface UpdateEntry {
  seq: number;
  kind: UpdateKind;
  corr_id: string;
  payload: Record<string, unknown>;
  ts: string;
}

/** Terminal instruction statuses carried by `plan_done`. */
export type PlanDoneStatus =
  | "completed"
  | "failed"
  | "preempted"
  | "rejected"
  | "refused_estop";

// ---------------------------------------------------------------------------
// Robot state and plans
// ---------------------------------------------------------------------------

export interface RobotStateWire {
  x: number;
  y: number;
  heading: number;
  posture: string;
  roll: number;
  pitch: number;
  battery_pct: number;
  collision: boolean;
  estop: boolean;
  tick: number;
}

export interface PlanStepWire {
  skill: string;
  params: Record<string, number>;
}

export interface PlanWire {
  plan_id: string;
  origin: string;
  created_at: string;
  steps: PlanStepWire[];
}

// ---------------------------------------------------------------------------
// REST payloads
// ---------------------------------------------------------------------------

/** `GET /state` snapshot. */
export interface StateSnapshot {
  state: RobotStateWire;
  terrain: string | null;
  estop: boolean;
  skills: string[];
  history_length: number;
  plans: Record<string, string>;
  learning: Record<string, { skill: string; score: number }[]>;
  queue_depth: number;
  stream_head: number;
}

/** Reply to `POST /message`: either queued for the worker, or the immediate
 * result of a reserved command (estop / resume / approve / reject / status). */
export interface SubmitReply {
  corr_id: string;
  queued?: boolean;
  position?: number;
  ok?: boolean;
  estop?: boolean;
  status?: StateSnapshot;
  plan_id?: string;
  applied_updates?: number;
  error?: string;
}

export interface PlanLookupReply extends PlanWire {
  status: string;
}
