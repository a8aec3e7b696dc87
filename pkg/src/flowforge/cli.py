"""Command line front door: flow validate/plan/run, agent ask, bench scale,
and the HTTP service."""

from __future__ import annotations

import json
import sys
import uuid
from pathlib import Path

import click

from .agent import AgentConfig, ScriptedLmClient, run_agent
from .bench import bench_scale
from .components.io import read_frame
from .config import load_config
from .errors import EngineError, FlowParseError
from .executor import Engine
from .flow import parse_flow, validate
from .planner import build_plan, sequential_plan
from .store import FrameStore, StoreConfig


@click.group()
def main():
    """Parallel component-based ML workflow engine."""


def _load_flow(path: str):
    try:
        return parse_flow(Path(path).read_text(encoding="utf-8"))
    except FlowParseError as exc:
        click.echo(f"parse error: {exc}", err=True)
        sys.exit(1)


@main.group()
def flow():
    """Work with flow documents."""


@flow.command("validate")
@click.argument("flow_file", type=click.Path(exists=True))
def flow_validate(flow_file):
    """Exit 0 when the flow is valid; issues go to stderr."""
    parsed = _load_flow(flow_file)
    issues = validate(parsed)
    if issues:
        for issue in issues:
            click.echo(f"{issue.code} {list(issue.node_ids)}: {issue.message}", err=True)
        sys.exit(1)
    click.echo("valid")


@flow.command("plan")
@click.argument("flow_file", type=click.Path(exists=True))
@click.option("--mode", type=click.Choice(["optimized", "sequential"]), default="optimized")
@click.option("--json", "as_json", is_flag=True, help="emit the plan as JSON")
def flow_plan(flow_file, mode, as_json):
    """Print the execution plan as a wave table (or JSON)."""
    parsed = _load_flow(flow_file)
    try:
        plan = sequential_plan(parsed) if mode == "sequential" else build_plan(parsed)
    except EngineError as exc:
        click.echo(str(exc), err=True)
        sys.exit(1)
    if as_json:
        click.echo(json.dumps(plan.to_json(), indent=2))
    else:
        click.echo(plan.render_table())


@flow.command("run")
@click.argument("flow_file", type=click.Path(exists=True))
@click.option("--workers", default=4, show_default=True)
@click.option("--mode", type=click.Choice(["optimized", "sequential"]), default="optimized")
@click.option("--budget-mb", default=256, show_default=True, help="per-run memory budget")
@click.option("--spill-dir", default=None, help="directory for spilled frames")
def flow_run(flow_file, workers, mode, budget_mb, spill_dir):
    """Execute a flow and print the run record as JSON."""
    parsed = _load_flow(flow_file)
    issues = validate(parsed)
    if issues:
        for issue in issues:
            click.echo(f"{issue.code} {list(issue.node_ids)}: {issue.message}", err=True)
        sys.exit(1)
    import tempfile

    spill = spill_dir or tempfile.mkdtemp(prefix="flowforge-spill-")
    store = FrameStore(StoreConfig(budget_mb * 1024 * 1024, spill))
    engine = Engine(store)
    plan = sequential_plan(parsed) if mode == "sequential" else build_plan(parsed)
    ctx = engine.create_context(f"cli-{uuid.uuid4().hex[:8]}", workers)
    try:
        record = engine.run_plan(ctx, parsed, plan)
        click.echo(json.dumps(record.to_json(), indent=2))
        if record.status != "finished":
            sys.exit(1)
    finally:
        engine.release_context(ctx)


@main.group()
def agent():
    """Ask the data agent questions over CSV tables."""


@agent.command("ask")
@click.argument("question")
@click.option("--tables", required=True,
              help="comma-separated name=path.csv pairs")
@click.option("--script", "script_file", type=click.Path(exists=True), required=True,
              help="scripted model fixture (JSON)")
@click.option("--top-k", default=10, show_default=True)
def agent_ask(question, tables, script_file, top_k):
    """Answer QUESTION over the given tables with a scripted model client."""
    catalog = {}
    for pair in tables.split(","):
        if "=" not in pair:
            click.echo(f"bad --tables entry {pair!r}; expected name=path", err=True)
            sys.exit(1)
        name, path = pair.split("=", 1)
        catalog[name.strip()] = read_frame("csv", path.strip())
    lm = ScriptedLmClient.from_fixture(script_file)
    answer, transcript = run_agent(question, catalog, lm, AgentConfig(top_k=top_k))
    click.echo(json.dumps({"answer": answer, "transcript": transcript}, indent=2))


@main.group()
def bench():
    """Scaling benchmarks."""


@bench.command("scale")
@click.option("--flow", "flow_file", type=click.Path(exists=True), default=None,
              help="flow to benchmark (default: the 4-branch reference flow)")
@click.option("--workers", default=4, show_default=True)
@click.option("--seed", default=7, show_default=True)
@click.option("--rows", default=2000, show_default=True)
@click.option("--out", "out_dir", default="bench-out", show_default=True)
def bench_scale_cmd(flow_file, workers, seed, rows, out_dir):
    """Run all dataset fractions under both modes; write CSV, JSON and a figure."""
    parsed = _load_flow(flow_file) if flow_file else None
    report = bench_scale(flow=parsed, workers=workers, seed=seed, rows=rows)
    paths = report.save(out_dir)
    click.echo(report.to_csv(), nl=False)
    for kind, path in paths.items():
        click.echo(f"{kind}: {path}", err=True)


@main.command("serve")
@click.option("--config", "config_file", type=click.Path(exists=True), default=None)
@click.option("--port", default=None, type=int, help="override the configured port")
def serve(config_file, port):
    """Run the HTTP service."""
    import uvicorn

    from .service import create_app

    cfg = load_config(config_file)
    if port is not None:
        cfg.port = port
    uvicorn.run(create_app(cfg), host="127.0.0.1", port=cfg.port)


if __name__ == "__main__":
    main()
