"""Planner backends.

A backend turns a planner context into a wire-format reply (text).  All
replies, including the local rule backend's, cross the same parse and
validation gate: backends are untrusted by construction, and nothing
they emit reaches the robot unvalidated.

``RuleBackend`` is a deterministic phrase lexicon.  It doubles as the
offline fallback when no remote planner is configured or a remote one
keeps failing, and as a test oracle: the same instruction always yields
byte-identical wire output.

``LlmBackend`` speaks the common chat-completions HTTP shape.  The API
key comes from the OPENGO_LLM_KEY environment variable.
"""

from __future__ import annotations

import math
import os
import re
from typing import Protocol

import httpx

from opengo.errors import MalformedReply
from opengo.dispatch.model import PlannerContext
from opengo.dispatch.wire import RawStep, serialize_plan


class PlannerBackend(Protocol):
    """What the dispatcher needs from a planner."""

    kind: str

    def propose(self, context: PlannerContext) -> str:
        """Return a wire-format reply for the context's instruction."""
        ...


# -- rule backend ---------------------------------------------------------------

_CLAUSE_SPLIT = re.compile(r"\s*(?:\bthen\b|;|,\s*then\b)\s*")
_NUMBER = r"(-?\d+(?:\.\d+)?)"

_DISTANCE = re.compile(_NUMBER + r"\s*(?:m\b|meters?\b|metres?\b)")
_DEGREES = re.compile(_NUMBER + r"\s*(?:deg\b|degrees?\b)")
_RADIANS = re.compile(_NUMBER + r"\s*(?:rad\b|radians?\b)")
_SECONDS = re.compile(_NUMBER + r"\s*(?:s\b|secs?\b|seconds?\b)")
_STEPS = re.compile(_NUMBER + r"\s*(?:steps?\b|stairs?\b)")
_FORBIDDEN_PAIR = re.compile(r"(\S+) must not follow (\S+)")


def _parse_clause(clause: str) -> RawStep | None:
    """Map one instruction clause onto a skill; None when nothing matches."""
    text = clause.strip().lower()
    if not text:
        return None

    if re.search(r"\bclimb\b", text):
        params: dict[str, float | int] = {}
        steps = _STEPS.search(text)
        if steps:
            params["steps"] = int(float(steps.group(1)))
        return RawStep("climb_stairs", params)

    if re.search(r"\bback\s?flip\b|\bflip\b", text):
        return RawStep("backflip", {})

    if re.search(r"\bdance\b|\bcelebrate\b|\bboogie\b", text):
        params = {}
        seconds = _SECONDS.search(text)
        if seconds:
            params["duration"] = float(seconds.group(1))
        for style in ("waltz", "shuffle", "spin"):
            if style in text:
                params["style"] = style
                break
        return RawStep("dance", params)

    if re.search(r"\bturn around\b|\babout face\b|\bturn back\b", text):
        return RawStep("turn", {"angle": math.pi})

    turn = re.search(r"\bturn\b(?:\s+to the)?(?:\s+(left|right))?", text)
    if turn:
        sign = -1.0 if turn.group(1) == "right" else 1.0
        angle = math.pi / 2
        degrees = _DEGREES.search(text)
        radians = _RADIANS.search(text)
        if degrees:
            angle = math.radians(float(degrees.group(1)))
        elif radians:
            angle = float(radians.group(1))
        return RawStep("turn", {"angle": sign * angle})

    if re.search(r"\b(?:move|go|walk|head|advance)\b", text):
        params = {}
        distance = _DISTANCE.search(text)
        if distance:
            params["distance"] = float(distance.group(1))
        if re.search(r"\bslowly\b|\bcarefully\b", text):
            params["speed"] = 0.25
        elif re.search(r"\bquickly\b|\bfast\b", text):
            params["speed"] = 1.0
        return RawStep("move_forward", params)

    if re.search(r"\bcrouch\b|\bduck\b|\bget (?:low|down)\b", text):
        return RawStep("crouch", {})

    if re.search(r"\bstand\b|\bget up\b|\brise\b", text):
        return RawStep("stand", {})

    if re.search(r"\bstop\b|\bhalt\b|\bfreeze\b|\bwait\b", text):
        return RawStep("stop", {})

    return None


class RuleBackend:
    """Deterministic lexicon planner; same instruction, same bytes out."""

    kind = "rule"

    def propose(self, context: PlannerContext) -> str:
        steps: list[RawStep] = []
        for clause in _CLAUSE_SPLIT.split(context.instruction):
            step = _parse_clause(clause)
            if step is None:
                continue
            if step.skill in context.avoid:
                continue
            steps.append(step)

        # repair forbidden adjacencies reported on an earlier attempt by
        # settling in between
        pairs = set()
        for item in context.feedback:
            if "FORBIDDEN_TRANSITION" in item:
                match = _FORBIDDEN_PAIR.search(item)
                if match:
                    pairs.add((match.group(2), match.group(1)))
        if pairs:
            repaired: list[RawStep] = []
            for step in steps:
                if repaired and (repaired[-1].skill, step.skill) in pairs:
                    repaired.append(RawStep("stand", {}))
                repaired.append(step)
            steps = repaired

        return serialize_plan(steps)


# -- remote backend -------------------------------------------------------------

API_KEY_ENV = "OPENGO_LLM_KEY"


class LlmBackend:
    """Chat-completions planner over HTTP.

    ``transport`` exists so tests can inject an httpx.MockTransport; the
    wire contract stays identical either way.
    """

    kind = "llm"

    def __init__(
        self,
        endpoint: str,
        model: str = "gpt-4o-mini",
        api_key: str | None = None,
        timeout_s: float = 20.0,
        transport: httpx.BaseTransport | None = None,
    ) -> None:
        key = api_key or os.environ.get(API_KEY_ENV)
        if not key:
            raise ValueError(f"no API key: pass api_key or set {API_KEY_ENV}")
        self.model = model
        self._client = httpx.Client(
            base_url=endpoint.rstrip("/"),
            timeout=timeout_s,
            transport=transport,
            headers={"Authorization": f"Bearer {key}"},
        )

    def propose(self, context: PlannerContext) -> str:
        payload = {
            "model": self.model,
            "temperature": 0,
            "messages": [
                {"role": "system", "content": context.render_prompt()},
                {"role": "user", "content": context.instruction},
            ],
        }
        response = self._client.post("/chat/completions", json=payload)
        response.raise_for_status()
        try:
            return response.json()["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise MalformedReply(f"unexpected completion shape: {exc}") from None

    def close(self) -> None:
        self._client.close()
