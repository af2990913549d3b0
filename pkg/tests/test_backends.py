"""Planner backends: the rule lexicon and the HTTP chat-completions client."""

from __future__ import annotations

import json
import math

import httpx
import pytest

from opengo.errors import MalformedReply
from opengo.dispatch.backends import API_KEY_ENV, LlmBackend, RuleBackend
from opengo.dispatch.model import PlannerContext
from opengo.dispatch.wire import parse_plan_text
from opengo.sim.model import Posture, RobotState


def context(instruction: str, **kw) -> PlannerContext:
    fields = dict(
        task="operator session",
        instruction=instruction,
        terrain="flat",
        state=RobotState(x=0.25, y=0.25, heading=0.0, posture=Posture.STANDING),
        candidates=[],
    )
    fields.update(kw)
    return PlannerContext(**fields)


def rule_steps(instruction: str, **kw):
    return parse_plan_text(RuleBackend().propose(context(instruction, **kw)))


class TestRuleLexicon:
    @pytest.mark.parametrize(
        "instruction,expected",
        [
            ("walk forward", [("move_forward", {})]),
            ("move 3 meters", [("move_forward", {"distance": 3.0})]),
            ("go 2.5 m slowly", [("move_forward", {"distance": 2.5, "speed": 0.25})]),
            ("advance quickly", [("move_forward", {"speed": 1.0})]),
            ("turn left", [("turn", {"angle": math.pi / 2})]),
            ("turn right", [("turn", {"angle": -math.pi / 2})]),
            ("turn right 45 degrees", [("turn", {"angle": -math.radians(45)})]),
            ("turn left 1.2 radians", [("turn", {"angle": 1.2})]),
            ("turn around", [("turn", {"angle": math.pi})]),
            ("do a backflip", [("backflip", {})]),
            ("flip!", [("backflip", {})]),
            ("dance for 5 seconds", [("dance", {"duration": 5.0})]),
            ("dance a waltz", [("dance", {"style": "waltz"})]),
            ("climb the stairs", [("climb_stairs", {})]),
            ("climb 4 steps", [("climb_stairs", {"steps": 4})]),
            ("crouch", [("crouch", {})]),
            ("duck down", [("crouch", {})]),
            ("stand up", [("stand", {})]),
            ("get up", [("stand", {})]),
            ("stop", [("stop", {})]),
            ("halt now", [("stop", {})]),
        ],
    )
    def test_single_clause(self, instruction: str, expected) -> None:
        steps = rule_steps(instruction)
        assert [(s.skill, s.params) for s in steps] == expected

    def test_multi_clause_then(self) -> None:
        steps = rule_steps("move 2 meters then turn left then dance")
        assert [s.skill for s in steps] == ["move_forward", "turn", "dance"]

    def test_semicolon_split(self) -> None:
        steps = rule_steps("crouch; stand up; do a backflip")
        assert [s.skill for s in steps] == ["crouch", "stand", "backflip"]

    def test_unmatched_clauses_dropped(self) -> None:
        steps = rule_steps("contemplate philosophy then move 1 m")
        assert [s.skill for s in steps] == ["move_forward"]

    def test_gibberish_yields_empty_plan(self) -> None:
        assert rule_steps("recite the alphabet backwards") == []

    def test_avoid_list_filters_skills(self) -> None:
        steps = rule_steps("dance then move 1 m", avoid=["dance"])
        assert [s.skill for s in steps] == ["move_forward"]

    def test_determinism_bytewise(self) -> None:
        ctx = context("move 2 meters then turn left then dance for 3 seconds")
        backend = RuleBackend()
        first = backend.propose(ctx)
        assert all(backend.propose(ctx) == first for _ in range(20))

    def test_forbidden_transition_repair(self) -> None:
        steps = rule_steps(
            "climb 3 steps then do a backflip",
            feedback=["FORBIDDEN_TRANSITION (step 1): backflip must not follow climb_stairs"],
        )
        assert [s.skill for s in steps] == ["climb_stairs", "stand", "backflip"]

    def test_repair_without_feedback_leaves_plan_alone(self) -> None:
        steps = rule_steps("climb 3 steps then do a backflip")
        assert [s.skill for s in steps] == ["climb_stairs", "backflip"]


# -- LLM backend over a mock transport -------------------------------------------


def make_llm(handler, **kw) -> LlmBackend:
    return LlmBackend(
        "https://planner.example/v1",
        api_key="test-key",
        transport=httpx.MockTransport(handler),
        **kw,
    )


def completion(content: str) -> httpx.Response:
    return httpx.Response(200, json={"choices": [{"message": {"content": content}}]})


class TestLlmBackend:
    def test_happy_path_returns_reply_text(self) -> None:
        wire = '{"plan": [{"skill": "stand"}]}'
        backend = make_llm(lambda request: completion(wire))
        assert backend.propose(context("stand up")) == wire
        backend.close()

    def test_request_shape(self) -> None:
        seen: dict = {}

        def handler(request: httpx.Request) -> httpx.Response:
            seen["url"] = str(request.url)
            seen["auth"] = request.headers.get("Authorization")
            seen["body"] = json.loads(request.content)
            return completion('{"plan": []}')

        backend = make_llm(handler, model="planner-large")
        backend.propose(context("turn around"))
        assert seen["url"] == "https://planner.example/v1/chat/completions"
        assert seen["auth"] == "Bearer test-key"
        assert seen["body"]["model"] == "planner-large"
        assert seen["body"]["temperature"] == 0
        roles = [m["role"] for m in seen["body"]["messages"]]
        assert roles == ["system", "user"]
        assert seen["body"]["messages"][1]["content"] == "turn around"
        backend.close()

    def test_system_prompt_carries_candidates_and_feedback(self, registry) -> None:
        template = registry.lookup("move_forward")
        ctx = context(
            "go",
            candidates=[
                {
                    "skill": template.head_id,
                    "prompts": template.prompts,
                    "parameters": [s.to_dict() for s in template.parameters],
                }
            ],
            feedback=["PARAM_OUT_OF_RANGE (step 0): speed too high"],
            avoid=["backflip"],
        )
        prompt = ctx.render_prompt()
        assert "move_forward" in prompt
        assert "PARAM_OUT_OF_RANGE" in prompt
        assert "Do not use these skills: backflip" in prompt
        assert '"plan"' in prompt  # the exact-reply contract

    def test_http_error_propagates(self) -> None:
        backend = make_llm(lambda request: httpx.Response(500, text="boom"))
        with pytest.raises(httpx.HTTPStatusError):
            backend.propose(context("go"))
        backend.close()

    def test_unexpected_completion_shape(self) -> None:
        backend = make_llm(lambda request: httpx.Response(200, json={"choices": []}))
        with pytest.raises(MalformedReply):
            backend.propose(context("go"))
        backend.close()

    def test_missing_key_refused(self, monkeypatch) -> None:
        monkeypatch.delenv(API_KEY_ENV, raising=False)
        with pytest.raises(ValueError, match=API_KEY_ENV):
            LlmBackend("https://planner.example/v1")

    def test_key_from_environment(self, monkeypatch) -> None:
        monkeypatch.setenv(API_KEY_ENV, "env-key")
        seen: dict = {}

        def handler(request: httpx.Request) -> httpx.Response:
            seen["auth"] = request.headers.get("Authorization")
            return completion('{"plan": []}')

        backend = LlmBackend(
            "https://planner.example/v1", transport=httpx.MockTransport(handler)
        )
        backend.propose(context("go"))
        assert seen["auth"] == "Bearer env-key"
        backend.close()


def test_context_serializes_byte_for_byte(registry) -> None:
    ctx = context("move 1 m", prior_skill="stand")
    assert ctx.to_bytes() == ctx.to_bytes()
    doc = json.loads(ctx.to_bytes())
    assert doc["instruction"] == "move 1 m"
    assert doc["prior_skill"] == "stand"
