"""Scaling benchmark: sequential vs optimized execution over dataset slices.

The reference flow reads a slice of the synthetic dataset, forks it across
four branches whose cost is proportional to the row count, joins the
branches and sinks the result. Each fraction of the (seeded, shuffled)
dataset runs under both plan modes; the report lands as CSV + JSON and a
rendered figure of the two timing curves.
"""

from __future__ import annotations

import json
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .components.io import write_frame
from .errors import PlanError
from .executor import Engine
from .flow import Flow, parse_flow
from .planner import build_plan, sequential_plan
from .store import FrameStore, StoreConfig
from .synth import generate_dataset

DEFAULT_FRACTIONS = tuple(round(0.1 * k, 1) for k in range(1, 11))
REFERENCE_ROWS = 2000
REFERENCE_BRANCHES = 4
REFERENCE_MS_PER_ROW = 0.12


@dataclass
class BenchReport:
    fractions: list[float]
    rows: list[int]
    sequential_ms: list[float]
    optimized_ms: list[float]
    worker_count: int
    seed: int
    flow_name: str = ""

    def to_json(self) -> dict:
        return {
            "flow": self.flow_name,
            "worker_count": self.worker_count,
            "seed": self.seed,
            "rows": self.rows,
            "fractions": self.fractions,
            "sequential_ms": self.sequential_ms,
            "optimized_ms": self.optimized_ms,
        }

    def to_csv(self) -> str:
        lines = ["fraction,rows,sequential_ms,optimized_ms"]
        for f, r, s, o in zip(self.fractions, self.rows, self.sequential_ms, self.optimized_ms):
            lines.append(f"{f},{r},{s:.3f},{o:.3f}")
        return "\n".join(lines) + "\n"

    def save(self, out_dir: str | Path, stem: str = "bench") -> dict[str, Path]:
        """Write <stem>.csv, <stem>.json and <stem>.png into out_dir."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        csv_path = out / f"{stem}.csv"
        json_path = out / f"{stem}.json"
        png_path = out / f"{stem}.png"
        csv_path.write_text(self.to_csv(), encoding="utf-8")
        json_path.write_text(json.dumps(self.to_json(), indent=2) + "\n", encoding="utf-8")
        render_figure(self, png_path)
        return {"csv": csv_path, "json": json_path, "png": png_path}


def render_figure(report: BenchReport, path: str | Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    ax.plot(report.fractions, report.sequential_ms, "o-", label="sequential")
    ax.plot(report.fractions, report.optimized_ms, "s-", label="optimized")
    ax.set_xlabel("dataset fraction")
    ax.set_ylabel("wall time (ms)")
    ax.set_title(f"sequential vs optimized, {report.worker_count} workers")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def reference_flow_doc(csv_path: str, branches: int = REFERENCE_BRANCHES,
                       ms_per_row: float = REFERENCE_MS_PER_ROW) -> dict:
    nodes = [
        {
            "id": "read",
            "kind": "csv_read",
            "params": {"path": csv_path, "features": ["num1", "num2"]},
        },
        {"id": "split", "kind": "fork", "params": {"ways": branches}},
        {"id": "merge", "kind": "join", "params": {"arity": branches}},
        {"id": "out", "kind": "sink", "params": {}},
    ]
    edges = [{"src": "read.out", "dst": "split.in"}, {"src": "merge.out", "dst": "out.in"}]
    for i in range(branches):
        nodes.append(
            {"id": f"work{i}", "kind": "delay", "params": {"ms_per_row": ms_per_row}}
        )
        edges.append({"src": f"split.out{i}", "dst": f"work{i}.in"})
        edges.append({"src": f"work{i}.out", "dst": f"merge.in{i}"})
    return {"name": "bench-reference", "nodes": nodes, "edges": edges}


def make_reference_flow(csv_path: str, branches: int = REFERENCE_BRANCHES,
                        ms_per_row: float = REFERENCE_MS_PER_ROW) -> Flow:
    return parse_flow(json.dumps(reference_flow_doc(csv_path, branches, ms_per_row)))


def _rewrite_read_path(flow: Flow, csv_path: str) -> Flow:
    readers = [n for n in flow.nodes if n.kind == "csv_read"]
    if not readers:
        raise PlanError("bench flow needs a csv_read node to feed slices into")
    doc = {
        "name": flow.name,
        "nodes": [
            {
                "id": n.id,
                "kind": n.kind,
                "params": {**n.params, "path": csv_path} if n.kind == "csv_read" else n.params,
            }
            for n in flow.nodes
        ],
        "edges": [
            {"src": f"{e.src[0]}.{e.src[1]}", "dst": f"{e.dst[0]}.{e.dst[1]}"}
            for e in flow.edges
        ],
    }
    return parse_flow(json.dumps(doc))


def bench_scale(
    flow: Flow | None = None,
    fractions=DEFAULT_FRACTIONS,
    workers: int = 4,
    seed: int = 7,
    rows: int = REFERENCE_ROWS,
) -> BenchReport:
    """Run every fraction under both plan modes and report wall times.

    The dataset is generated once from the seed and shuffled with it, so
    slice contents and row counts are identical across reruns.
    """
    dataset = generate_dataset(seed, rows)
    order = np.random.default_rng(seed).permutation(rows)

    report = BenchReport(
        fractions=[], rows=[], sequential_ms=[], optimized_ms=[],
        worker_count=workers, seed=seed,
    )
    with tempfile.TemporaryDirectory(prefix="ffbench-") as tmp:
        store = FrameStore(StoreConfig(256 * 1024 * 1024, Path(tmp) / "spill"))
        engine = Engine(store)
        for fraction in fractions:
            count = max(1, int(round(fraction * rows)))
            slice_frame = dataset.select_rows([int(i) for i in order[:count]])
            csv_path = str(Path(tmp) / f"slice_{int(fraction * 100):03d}.csv")
            write_frame(slice_frame, csv_path)
            bench_flow = (
                make_reference_flow(csv_path)
                if flow is None
                else _rewrite_read_path(flow, csv_path)
            )
            seq_ms = _run_once(engine, bench_flow, sequential_plan(bench_flow), 1, f"seq{fraction}")
            opt_ms = _run_once(engine, bench_flow, build_plan(bench_flow), workers, f"opt{fraction}")
            report.fractions.append(float(fraction))
            report.rows.append(count)
            report.sequential_ms.append(seq_ms)
            report.optimized_ms.append(opt_ms)
            if flow is None:
                report.flow_name = "bench-reference"
            else:
                report.flow_name = flow.name
    return report


def _run_once(engine: Engine, flow: Flow, plan, workers: int, run_id: str) -> float:
    ctx = engine.create_context(run_id, workers)
    try:
        record = engine.run_plan(ctx, flow, plan)
        if record.status != "finished":
            failed = record.tasks.get(record.failed_node)
            detail = failed.error if failed is not None else "unknown failure"
            raise PlanError(f"bench run {run_id} failed at node {record.failed_node}: {detail}")
        return record.wall_time_ms
    finally:
        engine.release_context(ctx)
