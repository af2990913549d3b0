"""Command-line surface.

Everything the library does is reachable here: admitting skill
documents, running instructions against the simulator, serving the
gateway, benchmarking dispatch latency and rendering the report
figures, and replaying an execution log into a fresh learning state.
"""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click

from opengo import bench as bench_mod
from opengo.dispatch.backends import LlmBackend, RuleBackend
from opengo.learning import PreferenceStore
from opengo.memory import HistoryStore
from opengo.runtime import RuntimeSettings, SessionRuntime
from opengo.sim.core import SimConfig, Simulator
from opengo.sim.model import TerrainClass
from opengo.skills import library
from opengo.skills.registry import SkillRegistry

BIND_ENV = "OPENGO_BIND_ADDR"
DEFAULT_BIND = "127.0.0.1:8731"


@click.group()
def main() -> None:
    """Language-guided skill orchestration for a simulated quadruped."""


# -- skills ----------------------------------------------------------------------


@main.group()
def skill() -> None:
    """Inspect and admit skill templates."""


@skill.command("list")
def skill_list() -> None:
    registry = library.build_registry()
    for head in registry.heads():
        template = registry.lookup(head)
        params = ", ".join(p.name for p in template.parameters) or "-"
        click.echo(f"{template.skill_id:24} {template.head_label:18} params: {params}")


@skill.command("show")
@click.argument("head")
def skill_show(head: str) -> None:
    registry = library.build_registry()
    template = registry.lookup(head)
    click.echo(json.dumps(template.to_dict(), indent=2))
    click.echo(f"# status={template.status.value} version={template.version}")


@skill.command("import")
@click.argument("path", type=click.Path(exists=True, path_type=Path))
def skill_import(path: Path) -> None:
    """Run one document through review, validation and registration."""
    registry = library.build_registry()
    template, review, validation = library.import_document(path, registry)
    for finding in review.findings:
        click.echo(f"review [{finding.severity}] {finding.code}: {finding.message}")
    if validation is not None:
        for run in validation.runs:
            click.echo(f"validation run {run.label}: {run.status}" + (f" ({run.error_code})" if run.error_code else ""))
        for finding in validation.findings:
            click.echo(f"validation [{finding.severity}] {finding.code}: {finding.message}")
    click.echo(f"result: {template.status.value}" + (f" as {template.skill_id}" if template.version else ""))
    if template.status.value != "registered":
        raise SystemExit(1)


# -- running instructions -----------------------------------------------------------


def _make_backend(llm_endpoint: str | None, llm_model: str):
    if llm_endpoint:
        return LlmBackend(endpoint=llm_endpoint, model=llm_model)
    return RuleBackend()


@main.command()
@click.argument("instruction")
@click.option("--terrain", type=click.Choice([t.value for t in library.SPAWNS]), default="flat",
              help="Start the robot on this terrain class.")
@click.option("--battery", type=float, default=100.0, help="Initial battery percentage.")
@click.option("--log", "log_path", type=click.Path(path_type=Path), default=None,
              help="Append execution records to this JSONL file.")
@click.option("--llm-endpoint", default=None, help="Chat-completions endpoint; omit to plan locally.")
@click.option("--llm-model", default="gpt-4o-mini", show_default=True)
def run(instruction: str, terrain: str, battery: float, log_path: Path | None,
        llm_endpoint: str | None, llm_model: str) -> None:
    """Plan and execute one instruction in the simulator."""
    registry = library.build_registry()
    config = library.spawn_config(TerrainClass(terrain), battery_pct=battery)
    runtime = SessionRuntime(
        registry,
        Simulator(config),
        backend=_make_backend(llm_endpoint, llm_model),
        history=HistoryStore(log_path=log_path),
    )
    result = runtime.handle_instruction(instruction)

    for plan in result.plans:
        click.echo(f"plan {plan.plan_id} ({plan.origin}):")
        for i, step in enumerate(plan.steps):
            click.echo(f"  {i}. {step.skill} {json.dumps(step.params)}")
    for record in result.records:
        mark = "ok" if record.ok else f"{record.outcome}:{record.error_code}"
        click.echo(f"step {record.step_index} {record.skill}: {mark}")
    if result.findings:
        for finding in result.findings:
            click.echo(f"finding {finding.render()}")
    state = runtime.sim.state
    click.echo(
        f"status: {result.status} | pos ({state.x:.2f}, {state.y:.2f}) "
        f"heading {state.heading:.3f} battery {state.battery_pct:.1f}%"
    )
    if result.status != "completed":
        raise SystemExit(1)


# -- gateway ------------------------------------------------------------------------


def _parse_bind(bind: str) -> tuple[str, int]:
    host, _, port = bind.rpartition(":")
    return host or "127.0.0.1", int(port)


@main.command()
@click.option("--bind", default=None, help=f"host:port (defaults to ${BIND_ENV} or {DEFAULT_BIND}).")
@click.option("--terrain", type=click.Choice([t.value for t in library.SPAWNS]), default="flat")
def serve(bind: str | None, terrain: str) -> None:
    """Serve the HTTP/WebSocket gateway around one session."""
    import uvicorn

    from opengo.gateway import create_app

    registry = library.build_registry()
    runtime = SessionRuntime(registry, Simulator(library.spawn_config(TerrainClass(terrain))))
    app = create_app(runtime)
    host, port = _parse_bind(bind or os.environ.get(BIND_ENV, DEFAULT_BIND))
    uvicorn.run(app, host=host, port=port, log_level="warning")


@main.command()
@click.option("--url", default=None, help="Gateway base URL (defaults to the serve default).")
def estop(url: str | None) -> None:
    """Latch the e-stop on a running gateway."""
    import httpx

    base = url or "http://" + os.environ.get(BIND_ENV, DEFAULT_BIND)
    reply = httpx.post(base.rstrip("/") + "/estop", timeout=5.0)
    reply.raise_for_status()
    click.echo(reply.text)


# -- bench / report -------------------------------------------------------------------


@main.group()
def bench() -> None:
    """Dispatch latency measurements."""


@bench.command("run")
@click.option("--reps", default=10, show_default=True, help="Repetitions per single skill.")
@click.option("--comp-reps", default=5, show_default=True, help="Repetitions per composition.")
@click.option("--delay-config", type=click.Path(exists=True, path_type=Path), default=None,
              help="YAML overriding the planner delay model.")
@click.option("--out", type=click.Path(path_type=Path), default=Path("bench_trials.json"),
              show_default=True)
def bench_run(reps: int, comp_reps: int, delay_config: Path | None, out: Path) -> None:
    """Run the harness and save raw trials."""
    registry = library.build_registry()
    model = bench_mod.DelayModel.from_yaml(delay_config) if delay_config else bench_mod.DelayModel()
    singles = bench_mod.run_single_trials(registry, model, reps=reps)
    comps = bench_mod.run_composition_trials(registry, model, reps=comp_reps)
    bench_mod.export_json(singles + comps, out)
    bench_mod.export_csv(singles + comps, out.with_suffix(".csv"))
    click.echo(f"wrote {len(singles) + len(comps)} trials to {out} and {out.with_suffix('.csv')}")


@bench.command("report")
@click.option("--trials", type=click.Path(exists=True, path_type=Path), default=None,
              help="Existing trials JSON; omitted, the harness runs first.")
@click.option("--reps", default=10, show_default=True)
@click.option("--comp-reps", default=5, show_default=True)
@click.option("--out", type=click.Path(path_type=Path), default=Path("bench_report"),
              show_default=True, help="Output directory for figures, CSV and summary.")
def bench_report(trials: Path | None, reps: int, comp_reps: int, out: Path) -> None:
    """Render latency figures with the CSV and summary beside them."""
    from opengo.report import render_report

    if trials is not None:
        loaded = bench_mod.load_trials(trials)
        singles = [t for t in loaded if t.kind == "single"]
        comps = [t for t in loaded if t.kind == "composition"]
    else:
        registry = library.build_registry()
        singles = bench_mod.run_single_trials(registry, reps=reps)
        comps = bench_mod.run_composition_trials(registry, reps=comp_reps)
    paths = render_report(singles, comps, out)
    for name, path in paths.items():
        click.echo(f"{name}: {path}")


# -- learning --------------------------------------------------------------------------


@main.group()
def learn() -> None:
    """Inspect and rebuild learned preferences."""


@learn.command("show")
@click.option("--state-dir", type=click.Path(exists=True, path_type=Path), required=True)
def learn_show(state_dir: Path) -> None:
    store = PreferenceStore.load(state_dir)
    click.echo(json.dumps(store.to_obj(), indent=2, sort_keys=True))


@learn.command("replay")
@click.option("--log", "log_path", type=click.Path(exists=True, path_type=Path), required=True,
              help="Execution log to fold into a fresh store.")
@click.option("--save", "save_dir", type=click.Path(path_type=Path), default=None,
              help="Write the resulting learning state here.")
def learn_replay(log_path: Path, save_dir: Path | None) -> None:
    registry = library.build_registry()
    store = PreferenceStore()
    records = HistoryStore.read_log(log_path)
    for record in records:
        store.apply_outcome(record, registry)
    click.echo(f"replayed {len(records)} records")
    click.echo(json.dumps(store.to_obj(), indent=2, sort_keys=True))
    if save_dir is not None:
        path = store.save(save_dir)
        click.echo(f"saved to {path}")


if __name__ == "__main__":
    main(prog_name="opengo")
