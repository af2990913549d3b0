/**
 * Pure HTML/SVG renderers for the SessionView.
 *
 * Every function returns a markup string from view data alone, so the
 * test suite can assert on rendered output without a browser.  main.ts
 * mounts the result and wires events via `data-action` attributes.
 */

import type {
  PlanView,
  SessionView,
  StepView,
  TranscriptLine,
} from "./session.js";
import { shortId, transcript } from "./session.js";

export function escapeHtml(text: string): string {
  return text
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;");
}

const STEP_GLYPHS: Record<StepView["status"], string> = {
  pending: "○",
  running: "▶",
  ok: "✓",
  failed: "✗",
};

// ---------------------------------------------------------------------------
// Transcript
// ---------------------------------------------------------------------------

export function renderTranscriptLine(line: TranscriptLine): string {
  const cls = line.role === "operator" ? "msg operator" : `msg robot kind-${line.kind ?? "none"}`;
  const findings = (line.findings ?? [])
    .map((f) => `<div class="inline-error">${escapeHtml(f)}</div>`)
    .join("");
  return `<div class="${cls}" data-corr="${escapeHtml(line.corrId)}">
  <span class="text">${escapeHtml(line.text)}</span>${findings}
</div>`;
}

export function renderTranscript(view: SessionView): string {
  const lines = transcript(view).map(renderTranscriptLine).join("\n");
  return `<div class="transcript" id="transcript">${lines}</div>`;
}

// ---------------------------------------------------------------------------
// Plan panel
// ---------------------------------------------------------------------------

function renderStep(step: StepView, index: number): string {
  const params = Object.entries(step.params)
    .map(([k, v]) => `${k}=${formatNumber(v)}`)
    .join(", ");
  const error = step.errorCode
    ? ` <span class="step-error">${escapeHtml(step.errorCode)}${step.detail ? `: ${escapeHtml(step.detail)}` : ""}</span>`
    : "";
  return `<li class="step ${step.status}"><span class="glyph">${STEP_GLYPHS[step.status]}</span> ${index}. ${escapeHtml(step.skill)}(${escapeHtml(params)})${error}</li>`;
}

export function renderPlan(plan: PlanView): string {
  const steps = plan.steps.map(renderStep).join("\n");
  return `<div class="plan status-${plan.status}" data-plan="${plan.planId}">
  <div class="plan-head">plan <code>${shortId(plan.planId)}</code> <span class="origin">${escapeHtml(plan.origin)}</span> <span class="badge">${plan.status}</span></div>
  <ol class="steps">${steps}</ol>
</div>`;
}

export function renderPlanPanel(view: SessionView): string {
  const current = view.currentPlanId ? view.plans[view.currentPlanId] : undefined;
  const body = current ? renderPlan(current) : `<div class="plan-empty">no plan yet</div>`;
  const feedback =
    view.awaitingFeedback && view.plans[view.awaitingFeedback]?.status === "completed"
      ? `<div class="feedback-bar" data-plan="${view.awaitingFeedback}">
  <button data-action="approve">approve</button>
  <button data-action="reject">reject</button>
</div>`
      : "";
  return `<section class="panel plan-panel"><h2>Plan</h2>${body}${feedback}</section>`;
}

// ---------------------------------------------------------------------------
// State panel
// ---------------------------------------------------------------------------

export function renderStatePanel(view: SessionView): string {
  const s = view.robot;
  if (!s) {
    return `<section class="panel state-panel"><h2>Robot</h2><div class="state-empty">no telemetry yet</div></section>`;
  }
  const estop = view.estop.latched
    ? `<div class="estop-flag latched">E-STOP (${escapeHtml(view.estop.reasons.join(", ") || "OPERATOR")})</div>`
    : "";
  return `<section class="panel state-panel"><h2>Robot</h2>${estop}
  <dl>
    <dt>pose</dt><dd>(${formatNumber(s.x)}, ${formatNumber(s.y)}) @ ${formatNumber(s.heading)} rad</dd>
    <dt>posture</dt><dd>${escapeHtml(s.posture)}</dd>
    <dt>terrain</dt><dd>${escapeHtml(view.terrain ?? "?")}</dd>
    <dt>battery</dt><dd>${s.battery_pct.toFixed(1)}%</dd>
    <dt>tick</dt><dd>${s.tick}</dd>
  </dl>
</section>`;
}

// ---------------------------------------------------------------------------
// Map
// ---------------------------------------------------------------------------

const MAP_SIZE_M = 15;
const CELL_M = 0.5;

export function renderMap(view: SessionView): string {
  const gridLines: string[] = [];
  for (let v = 0; v <= MAP_SIZE_M; v += CELL_M) {
    gridLines.push(`<line x1="${v}" y1="0" x2="${v}" y2="${MAP_SIZE_M}"/>`);
    gridLines.push(`<line x1="0" y1="${v}" x2="${MAP_SIZE_M}" y2="${v}"/>`);
  }
  const trail = view.trail.map((p) => `${round3(p.x)},${round3(p.y)}`).join(" ");
  const robot = view.robot;
  const marker = robot
    ? `<circle class="robot" cx="${round3(robot.x)}" cy="${round3(robot.y)}" r="0.18"/>
  <line class="heading" x1="${round3(robot.x)}" y1="${round3(robot.y)}" x2="${round3(robot.x + 0.35 * Math.cos(robot.heading))}" y2="${round3(robot.y + 0.35 * Math.sin(robot.heading))}"/>`
    : "";
  const latched = view.estop.latched ? " latched" : "";
  return `<svg class="map${latched}" viewBox="0 0 ${MAP_SIZE_M} ${MAP_SIZE_M}" xmlns="http://www.w3.org/2000/svg">
  <g transform="translate(0,${MAP_SIZE_M}) scale(1,-1)">
    <g class="grid">${gridLines.join("")}</g>
    <polyline class="trail" fill="none" points="${trail}"/>
    ${marker}
  </g>
</svg>`;
}

// ---------------------------------------------------------------------------
// Learning panel
// ---------------------------------------------------------------------------

export function renderLearningPanel(view: SessionView): string {
  const terrains = Object.entries(view.learning);
  if (terrains.length === 0) {
    return `<section class="panel learning-panel"><h2>Learned preferences</h2><div class="learning-empty">nothing learned yet</div></section>`;
  }
  const rows = terrains
    .map(
      ([terrain, skills]) =>
        `<li><strong>${escapeHtml(terrain)}</strong>: ${skills
          .map((s) => `${escapeHtml(s.skill)} ${s.score.toFixed(3)}`)
          .join(", ")}</li>`,
    )
    .join("\n");
  return `<section class="panel learning-panel"><h2>Learned preferences</h2><ul>${rows}</ul></section>`;
}

// ---------------------------------------------------------------------------
// Controls + full console
// ---------------------------------------------------------------------------

export function renderControls(view: SessionView): string {
  const resume = view.estop.latched ? `<button data-action="resume" class="resume">resume</button>` : "";
  return `<div class="controls">
  <button data-action="estop" class="estop${view.estop.latched ? " latched" : ""}">E-STOP</button>${resume}
</div>`;
}

export function renderConsole(view: SessionView): string {
  return `<div class="console${view.estop.latched ? " estop-latched" : ""}">
  <header>
    <h1>opengo console</h1>
    ${renderControls(view)}
  </header>
  <main>
    <section class="panel chat-panel">
      ${renderTranscript(view)}
      <form id="composer">
        <input id="instruction" type="text" placeholder="instruction… (estop, resume, approve, reject, status act immediately)" autocomplete="off"/>
        <button type="submit" id="send">send</button>
      </form>
    </section>
    <div class="side">
      ${renderPlanPanel(view)}
      ${renderStatePanel(view)}
      <section class="panel map-panel"><h2>Map</h2>${renderMap(view)}</section>
      ${renderLearningPanel(view)}
    </div>
  </main>
</div>`;
}

function formatNumber(value: number): string {
  return Number.isInteger(value) ? String(value) : value.toFixed(3).replace(/0+$/, "").replace(/\.$/, "");
}

function round3(value: number): number {
  return Math.round(value * 1000) / 1000;
}
