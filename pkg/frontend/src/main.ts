/**
 * Browser entry point: mounts the console, opens the update stream and the
 * state poll loop, and forwards operator actions to the gateway.
 *
 * The gateway origin comes from `?gateway=http://host:port`, defaulting to
 * the page's own origin (for when the gateway itself serves the bundle).
 */

import { GatewayClient } from "./client.js";
import {
  applyPoll,
  applyUpdate,
  emptyView,
  recordOutbound,
  type SessionView,
} from "./session.js";
import { renderConsole } from "./render.js";

const POLL_INTERVAL_MS = 500;

function gatewayBase(): string {
  const fromQuery = new URLSearchParams(window.location.search).get("gateway");
  return fromQuery ?? window.location.origin;
}

function mount(): void {
  const root = document.getElementById("app");
  if (!root) {
    throw new Error("missing #app mount point");
  }

  const client = new GatewayClient(gatewayBase());
  const view: SessionView = emptyView();
  let connected = false;

  const rerender = (): void => {
    const input = document.getElementById("instruction") as HTMLInputElement | null;
    const draft = input?.value ?? "";
    const hadFocus = document.activeElement === input;
    root.innerHTML = renderConsole(view);
    root.classList.toggle("disconnected", !connected);
    const nextInput = document.getElementById("instruction") as HTMLInputElement | null;
    if (nextInput) {
      nextInput.value = draft;
      if (hadFocus) {
        nextInput.focus();
      }
    }
    const log = document.getElementById("transcript");
    if (log) {
      log.scrollTop = log.scrollHeight;
    }
  };

  client.openStream(
    view.cursor,
    (entry) => {
      if (applyUpdate(view, entry)) {
        rerender();
      }
    },
    {
      onStatus: (up) => {
        connected = up;
        rerender();
      },
    },
  );

  const poll = async (): Promise<void> => {
    try {
      applyPoll(view, await client.getState());
      connected = true;
    } catch {
      connected = false;
    }
    rerender();
  };
  void poll();
  setInterval(() => void poll(), POLL_INTERVAL_MS);

  const send = async (text: string): Promise<void> => {
    const trimmed = text.trim();
    if (!trimmed) {
      return;
    }
    try {
      const reply = await client.sendMessage(trimmed);
      recordOutbound(view, reply.corr_id, trimmed);
    } catch (error) {
      recordOutbound(view, "local", `${trimmed} — ${String(error)}`);
    }
    rerender();
  };

  root.addEventListener("submit", (ev) => {
    const form = ev.target as HTMLElement;
    if (form.id === "composer") {
      ev.preventDefault();
      const input = document.getElementById("instruction") as HTMLInputElement | null;
      if (input) {
        const text = input.value;
        input.value = "";
        void send(text);
      }
    }
  });

  root.addEventListener("click", (ev) => {
    const target = (ev.target as HTMLElement).closest("[data-action]");
    if (!(target instanceof HTMLElement)) {
      return;
    }
    const action = target.dataset["action"];
    if (action === "estop") {
      void client.estop().catch(() => undefined);
    } else if (action === "resume") {
      void send("resume");
    } else if (action === "approve" || action === "reject") {
      const planId = target.closest<HTMLElement>("[data-plan]")?.dataset["plan"] ?? "";
      void send(`${action} ${planId}`.trim());
    }
  });
}

mount();
