"""Plan execution over a bounded worker pool with one shared context per run.

Waves run under a barrier: a wave starts only once the previous wave has
fully completed, and within a wave at most ``worker_count`` tasks execute
concurrently. Frames move between tasks through the store; fork outputs that
alias the same object reuse a single handle, so duplication is free.
"""

from __future__ import annotations

import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .components import create_instance
from .components.models import ModelArtifact
from .errors import ComponentError, ContextError, NotFoundError
from .flow import Flow
from .frame import Frame
from .planner import ExecutionPlan
from .store import FrameHandle, FrameStore

CREATED = "created"
RUNNING = "running"
FINISHED = "finished"
FAILED = "failed"
RELEASED = "released"


@dataclass
class TaskResult:
    node_id: str
    outputs: dict[str, FrameHandle] = field(default_factory=dict)
    started: float = 0.0
    finished: float = 0.0
    status: str = "ok"  # "ok" | "failed"
    error: str = ""

    def to_json(self) -> dict:
        return {
            "node_id": self.node_id,
            "outputs": {port: h.id for port, h in self.outputs.items()},
            "started_ms": self.started * 1000.0,
            "finished_ms": self.finished * 1000.0,
            "status": self.status,
            "error": self.error,
        }


@dataclass
class RunRecord:
    run_id: str
    mode: str
    tasks: dict[str, TaskResult] = field(default_factory=dict)
    wave_times_ms: list[float] = field(default_factory=list)
    wall_time_ms: float = 0.0
    status: str = RUNNING
    failed_node: str = ""

    def to_json(self) -> dict:
        return {
            "run_id": self.run_id,
            "mode": self.mode,
            "status": self.status,
            "failed_node": self.failed_node,
            "wall_time_ms": self.wall_time_ms,
            "wave_times_ms": self.wave_times_ms,
            "tasks": {k: v.to_json() for k, v in sorted(self.tasks.items())},
        }


@dataclass
class ExecutionContext:
    run_id: str
    worker_count: int
    store: FrameStore
    catalog: dict[str, FrameHandle] = field(default_factory=dict)
    status: str = CREATED

    def require_active(self):
        if self.status == RELEASED:
            raise ContextError(f"context for run {self.run_id!r} is released")


class Engine:
    """Owns the store and the registry of active run contexts."""

    def __init__(self, store: FrameStore):
        self.store = store
        self._contexts: dict[str, ExecutionContext] = {}
        self._lock = threading.Lock()

    def create_context(self, run_id: str, worker_count: int) -> ExecutionContext:
        if worker_count < 1:
            raise ValueError("worker_count must be >= 1")
        with self._lock:
            existing = self._contexts.get(run_id)
            if existing is not None and existing.status != RELEASED:
                raise ContextError(f"run {run_id!r} already has an active context")
            ctx = ExecutionContext(run_id, worker_count, self.store)
            self._contexts[run_id] = ctx
            return ctx

    def release_context(self, ctx: ExecutionContext) -> dict:
        """Drop the run's stored data; idempotent."""
        if ctx.status == RELEASED:
            return {"run_id": ctx.run_id, "entries_removed": 0}
        removed = self.store.drop_run(ctx.run_id)
        ctx.status = RELEASED
        ctx.catalog.clear()
        return {"run_id": ctx.run_id, "entries_removed": removed}

    def run_plan(self, ctx: ExecutionContext, flow: Flow, plan: ExecutionPlan) -> RunRecord:
        ctx.require_active()
        if ctx.status == RUNNING:
            raise ContextError(f"run {ctx.run_id!r} is already executing")
        plan_nodes = {n for wave in plan.waves for n in wave}
        if plan_nodes != set(flow.node_ids()):
            raise ContextError("plan does not cover this flow's nodes")
        ctx.status = RUNNING
        record = RunRecord(run_id=ctx.run_id, mode=plan.mode)
        run_start = time.perf_counter()
        edges_by_dst: dict[str, list] = {}
        for e in flow.edges:
            edges_by_dst.setdefault(e.dst[0], []).append(e)

        failed = False
        with ThreadPoolExecutor(max_workers=ctx.worker_count) as pool:
            for wave in plan.waves:
                wave_start = time.perf_counter()
                futures = {
                    node_id: pool.submit(self._run_task, ctx, flow, record, edges_by_dst, node_id)
                    for node_id in wave
                }
                for node_id, future in futures.items():
                    result = future.result()
                    record.tasks[node_id] = result
                    if result.status == "failed":
                        failed = True
                        record.failed_node = record.failed_node or node_id
                record.wave_times_ms.append((time.perf_counter() - wave_start) * 1000.0)
                if failed:
                    break

        record.wall_time_ms = (time.perf_counter() - run_start) * 1000.0
        if failed:
            record.status = FAILED
            ctx.status = FAILED
        else:
            record.status = FINISHED
            ctx.status = FINISHED
            self._publish_catalog(ctx, flow, record)
        return record

    def _run_task(self, ctx, flow: Flow, record: RunRecord, edges_by_dst, node_id: str) -> TaskResult:
        result = TaskResult(node_id=node_id)
        result.started = time.perf_counter()
        try:
            node = flow.node(node_id)
            inputs = {}
            for edge in edges_by_dst.get(node_id, ()):
                src_id, src_port = edge.src
                upstream = record.tasks.get(src_id)
                if upstream is None or src_port not in upstream.outputs:
                    raise ComponentError(
                        f"input {edge.dst[1]!r} of {node_id!r} has no upstream result"
                    )
                handle = upstream.outputs[src_port]
                if ctx.store.entry_kind(handle) == "frame":
                    inputs[edge.dst[1]] = ctx.store.get_frame(handle)
                else:
                    inputs[edge.dst[1]] = ModelArtifact.deserialize(ctx.store.get_artifact(handle))
            instance = create_instance(node.kind, node.params)
            outputs = instance.execute(inputs)
            stored: dict[str, FrameHandle] = {}
            seen: dict[int, FrameHandle] = {}
            for port in sorted(outputs):
                value = outputs[port]
                alias = seen.get(id(value))
                if alias is not None:
                    stored[port] = alias
                    continue
                if isinstance(value, Frame):
                    handle = ctx.store.put_frame(ctx.run_id, value)
                elif isinstance(value, ModelArtifact):
                    handle = ctx.store.put_artifact(ctx.run_id, value.serialize(), value.kind)
                else:
                    raise ComponentError(
                        f"component {node.kind!r} produced {type(value).__name__} on port {port!r}"
                    )
                seen[id(value)] = handle
                stored[port] = handle
            result.outputs = stored
        except Exception as exc:  # noqa: BLE001 - failures become task status
            result.status = "failed"
            result.error = f"{type(exc).__name__}: {exc}"
        result.finished = time.perf_counter()
        return result

    def _publish_catalog(self, ctx: ExecutionContext, flow: Flow, record: RunRecord):
        """Expose terminal-node frames as named tables for the agent."""
        has_successor = {e.src[0] for e in flow.edges}
        for node in flow.nodes:
            if node.id in has_successor:
                continue
            result = record.tasks.get(node.id)
            if result is None:
                continue
            frame_ports = [
                p for p, h in result.outputs.items()
                if ctx.store.entry_kind(h) == "frame"
            ]
            for port in frame_ports:
                name = node.id if len(frame_ports) == 1 else f"{node.id}_{port}"
                ctx.catalog[name] = result.outputs[port]

    def catalog_frames(self, ctx: ExecutionContext) -> dict[str, Frame]:
        """Materialize the run's catalog as name -> Frame for the SQL tools."""
        return {name: self.store.get_frame(h) for name, h in ctx.catalog.items()}

    def result_frame(self, record: RunRecord, node_id: str, port: str | None = None) -> Frame:
        result = record.tasks.get(node_id)
        if result is None:
            raise NotFoundError(f"no result for node {node_id!r}")
        frame_ports = {
            p: h for p, h in result.outputs.items() if self.store.entry_kind(h) == "frame"
        }
        if not frame_ports:
            raise NotFoundError(f"node {node_id!r} produced no frames")
        if port is None:
            if len(frame_ports) == 1:
                port = next(iter(frame_ports))
            elif "out" in frame_ports:
                port = "out"
            else:
                raise NotFoundError(
                    f"node {node_id!r} has several frame outputs: {sorted(frame_ports)}"
                )
        if port not in frame_ports:
            raise NotFoundError(f"node {node_id!r} has no frame output {port!r}")
        return self.store.get_frame(frame_ports[port])
