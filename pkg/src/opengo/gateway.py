"""HTTP/WebSocket gateway that fronts one session runtime.

Transport layout:

* ``POST /message`` — operator text.  Reserved commands (estop, resume,
  approve, reject, status) act immediately and never touch the planner;
  anything else is queued for the single session worker, so a busy
  session queues instructions instead of interleaving them.
* ``WS /stream`` — ordered update stream.  Clients pass ``?cursor=N`` to
  resume; updates the bus no longer retains are acknowledged with a
  ``stream_gap`` marker rather than silently skipped.
* ``GET /state`` — live robot/session snapshot.
* ``GET /plans/{plan_id}`` — a proposed plan and its derived status.
* ``POST /estop`` — transport-level e-stop, equivalent to the reserved
  message but available without message parsing.

The plain-HTTP surface doubles as the platform adapter seam: any chat
platform that can POST text and read a socket can drive a session.
"""

from __future__ import annotations

import queue
import threading
import uuid
from collections import deque
from contextlib import asynccontextmanager
from dataclasses import dataclass, field
from typing import Any, Protocol

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from opengo.dispatch.model import now_iso
from opengo.learning import APPROVE, REJECT
from opengo.runtime import SessionRuntime, Update

RESERVED_COMMANDS = ("estop", "resume", "approve", "reject", "status")

#: how many updates the bus retains for cursor replay
RETAIN_UPDATES = 4096


class PlatformAdapter(Protocol):
    """Contract for bridging a chat platform onto a session.

    Implementations forward operator text to ``submit`` and deliver each
    published update back to the platform.  The shipped HTTP gateway is
    one such adapter; others live entirely outside this package.
    """

    def submit(self, text: str, corr_id: str) -> dict[str, Any]: ...

    def deliver(self, update: dict[str, Any]) -> None: ...


class UpdateBus:
    """Sequenced, bounded update log, safe across threads."""

    def __init__(self, retain: int = RETAIN_UPDATES) -> None:
        self._entries: deque[dict[str, Any]] = deque(maxlen=retain)
        self._seq = 0
        self._lock = threading.Lock()
        self.last_feedback_plan: str | None = None

    def publish(self, update: Update) -> dict[str, Any]:
        with self._lock:
            self._seq += 1
            entry = {
                "seq": self._seq,
                "kind": update.kind,
                "corr_id": update.corr_id,
                "payload": update.payload,
                "ts": now_iso(),
            }
            self._entries.append(entry)
            if update.kind == "ask_feedback":
                self.last_feedback_plan = update.payload.get("plan_id")
            return entry

    @property
    def head_seq(self) -> int:
        with self._lock:
            return self._seq

    def since(self, cursor: int) -> tuple[list[dict[str, Any]], tuple[int, int] | None]:
        """Entries after ``cursor`` plus an optional (from, to) gap of
        entries that are no longer retained."""
        with self._lock:
            entries = [e for e in self._entries if e["seq"] > cursor]
            gap: tuple[int, int] | None = None
            if entries and entries[0]["seq"] > cursor + 1:
                gap = (cursor + 1, entries[0]["seq"] - 1)
            elif not entries and self._seq > cursor:
                gap = (cursor + 1, self._seq)
            return entries, gap


@dataclass
class QueuedMessage:
    text: str
    corr_id: str


@dataclass
class Gateway:
    runtime: SessionRuntime
    bus: UpdateBus = field(default_factory=UpdateBus)

    def __post_init__(self) -> None:
        self.runtime.set_update_sink(self.bus.publish)
        self._inbox: queue.Queue[QueuedMessage | None] = queue.Queue()
        self._worker = threading.Thread(target=self._drain, name="session-worker", daemon=True)
        self._worker.start()

    # -- worker ------------------------------------------------------------

    def _drain(self) -> None:
        while True:
            message = self._inbox.get()
            if message is None:
                return
            try:
                self.runtime.handle_instruction(message.text, message.corr_id)
            except Exception as exc:  # defensive: the worker must survive anything
                self.bus.publish(
                    Update(
                        kind="plan_done",
                        corr_id=message.corr_id,
                        payload={"status": "failed", "detail": f"{type(exc).__name__}: {exc}"},
                    )
                )

    def shutdown(self) -> None:
        self._inbox.put(None)
        self._worker.join(timeout=5)

    # -- message handling ------------------------------------------------------

    def submit(self, text: str, corr_id: str) -> dict[str, Any]:
        stripped = text.strip()
        command = stripped.split(maxsplit=1)[0].lower() if stripped else ""
        if command in RESERVED_COMMANDS:
            return self._reserved(command, stripped, corr_id)
        self._inbox.put(QueuedMessage(text=stripped, corr_id=corr_id))
        return {
            "queued": True,
            "corr_id": corr_id,
            "position": self._inbox.qsize(),
        }

    def _reserved(self, command: str, text: str, corr_id: str) -> dict[str, Any]:
        remainder = text.split(maxsplit=1)[1].strip() if " " in text else ""
        if command == "estop":
            self.runtime.estop(corr_id)
            return {"ok": True, "corr_id": corr_id, "estop": True}
        if command == "resume":
            self.runtime.resume(corr_id)
            return {"ok": True, "corr_id": corr_id, "estop": False}
        if command == "status":
            return {"ok": True, "corr_id": corr_id, "status": self.runtime.status_snapshot()}
        # approve / reject
        plan_id = remainder or self.bus.last_feedback_plan
        if not plan_id:
            return {"ok": False, "corr_id": corr_id, "error": "no plan awaiting feedback"}
        if plan_id not in self.runtime.plans:
            return {"ok": False, "corr_id": corr_id, "error": f"unknown plan {plan_id!r}"}
        verdict = APPROVE if command == "approve" else REJECT
        updates = self.runtime.feedback(plan_id, verdict)
        return {
            "ok": True,
            "corr_id": corr_id,
            "plan_id": plan_id,
            "applied_updates": len(updates),
        }


class MessageIn(BaseModel):
    text: str
    corr_id: str | None = None


def create_app(runtime: SessionRuntime, bus: UpdateBus | None = None) -> FastAPI:
    gateway = Gateway(runtime=runtime, bus=bus or UpdateBus())

    @asynccontextmanager
    async def lifespan(_: FastAPI):
        yield
        gateway.shutdown()

    app = FastAPI(title="opengo gateway", lifespan=lifespan)
    # The operator console is served as static files from a separate origin.
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    app.state.gateway = gateway

    @app.post("/message")
    def message(body: MessageIn) -> dict[str, Any]:
        corr_id = body.corr_id or uuid.uuid4().hex[:12]
        return gateway.submit(body.text, corr_id)

    @app.get("/state")
    def state() -> dict[str, Any]:
        snapshot = gateway.runtime.status_snapshot()
        snapshot["queue_depth"] = gateway._inbox.qsize()
        snapshot["stream_head"] = gateway.bus.head_seq
        return snapshot

    @app.get("/plans/{plan_id}")
    def plan(plan_id: str):
        stored = gateway.runtime.plans.get(plan_id)
        if stored is None:
            return JSONResponse(status_code=404, content={"error": f"unknown plan {plan_id!r}"})
        doc = stored.to_dict()
        doc["status"] = gateway.runtime.plan_status(plan_id)
        return doc

    @app.post("/estop")
    def estop() -> dict[str, Any]:
        gateway.runtime.estop("http-estop")
        return {"ok": True, "estop": True}

    @app.websocket("/stream")
    async def stream(socket: WebSocket) -> None:
        import asyncio

        await socket.accept()
        cursor = int(socket.query_params.get("cursor", 0))
        try:
            while True:
                entries, gap = gateway.bus.since(cursor)
                if gap is not None and cursor < gap[0]:
                    await socket.send_json(
                        {"seq": gap[0] - 1, "kind": "stream_gap",
                         "corr_id": "", "payload": {"missed_from": gap[0], "missed_to": gap[1]},
                         "ts": now_iso()}
                    )
                    cursor = gap[1]
                    continue
                for entry in entries:
                    await socket.send_json(entry)
                    cursor = entry["seq"]
                await asyncio.sleep(0.03)
        except WebSocketDisconnect:
            return

    return app
