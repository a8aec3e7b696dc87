"""HTTP front door: flow CRUD/validation, planning, runs, results, agent
sessions and the component manifest.

Runs execute on background threads; status polling never blocks on them.
Result payloads are capped and paginated so large frames stay server-side.
"""

from __future__ import annotations

import json
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, Query, Request, Response
from fastapi.responses import JSONResponse

from .agent import AgentConfig, ScriptStep, ScriptedLmClient, run_agent
from .components import manifest_json
from .components.io import frame_to_csv_text, read_frame
from .config import ServiceConfig
from .errors import EngineError, FlowParseError, NotFoundError
from .executor import Engine, RunRecord
from .flow import Flow, parse_flow, serialize_flow, validate
from .frame import Frame
from .planner import build_plan, sequential_plan
from .store import FrameStore, StoreConfig

DEFAULT_PAGE_SIZE = 10


@dataclass
class _RunState:
    run_id: str
    flow_id: str
    mode: str
    state: str = "queued"  # queued | running | finished | failed
    record: RunRecord | None = None
    error: str = ""
    catalog: dict = field(default_factory=dict)


@dataclass
class _Session:
    session_id: str
    catalog: dict
    script: list
    top_k: int = 10


class ServiceState:
    def __init__(self, config: ServiceConfig):
        self.config = config
        spill = Path(config.spill_dir)
        spill.mkdir(parents=True, exist_ok=True)
        self.engine = Engine(FrameStore(StoreConfig(config.memory_budget_bytes, spill)))
        self.flows: dict[str, Flow] = {}
        self.runs: dict[str, _RunState] = {}
        self.sessions: dict[str, _Session] = {}
        self.lock = threading.Lock()


def _frame_rows_json(frame: Frame, offset: int, limit: int) -> dict:
    names = frame.schema.names
    rows = []
    end = min(offset + limit, frame.row_count)
    for i in range(offset, end):
        row = {}
        for j, n in enumerate(names):
            v = frame.columns[j][i]
            row[n] = list(v) if isinstance(v, tuple) else v
        rows.append(row)
    return {
        "columns": [
            {"name": c.name, "dtype": str(c.dtype), "role": c.role.value}
            for c in frame.schema.columns
        ],
        "rows": rows,
        "row_count": frame.row_count,
        "next_offset": end if end < frame.row_count else None,
    }


def _frame_csv(frame: Frame, offset: int, limit: int) -> str:
    end = min(offset + limit, frame.row_count)
    return frame_to_csv_text(frame.select_rows(range(offset, end)))


def create_app(config: ServiceConfig | None = None) -> FastAPI:
    state = ServiceState(config or ServiceConfig())
    app = FastAPI(title="flowforge", version="0.1.0")
    app.state.service = state

    @app.exception_handler(EngineError)
    async def engine_error_handler(_: Request, exc: EngineError):
        status = 404 if isinstance(exc, NotFoundError) else 400
        return JSONResponse(status_code=status, content={"error": str(exc)})

    @app.get("/components")
    def components():
        return manifest_json()

    @app.post("/flows")
    def submit_flow(body: dict):
        try:
            flow = parse_flow(json.dumps(body))
        except FlowParseError as exc:
            return JSONResponse(status_code=422, content={"issues": [
                {"code": "PARSE", "node_ids": [], "message": str(exc)}
            ]})
        issues = validate(flow)
        if issues:
            return JSONResponse(
                status_code=422, content={"issues": [i.to_json() for i in issues]}
            )
        flow_id = uuid.uuid4().hex[:12]
        with state.lock:
            state.flows[flow_id] = flow
        return JSONResponse(status_code=201, content={"flow_id": flow_id})

    @app.get("/flows/{flow_id}")
    def get_flow(flow_id: str):
        flow = state.flows.get(flow_id)
        if flow is None:
            return JSONResponse(status_code=404, content={"error": "unknown flow"})
        return Response(content=serialize_flow(flow), media_type="application/json")

    @app.post("/flows/{flow_id}/plan")
    def plan_flow(flow_id: str, mode: str = Query("optimized")):
        flow = state.flows.get(flow_id)
        if flow is None:
            return JSONResponse(status_code=404, content={"error": "unknown flow"})
        plan = sequential_plan(flow) if mode == "sequential" else build_plan(flow)
        return plan.to_json()

    @app.post("/flows/{flow_id}/runs")
    def start_run(flow_id: str, body: dict | None = None):
        body = body or {}
        flow = state.flows.get(flow_id)
        if flow is None:
            return JSONResponse(status_code=404, content={"error": "unknown flow"})
        run_id = body.get("run_id") or uuid.uuid4().hex[:12]
        workers = int(body.get("workers", state.config.default_workers))
        mode = body.get("mode", "optimized")
        with state.lock:
            if run_id in state.runs:
                return JSONResponse(status_code=409, content={"error": "duplicate run"})
            run_state = _RunState(run_id=run_id, flow_id=flow_id, mode=mode)
            state.runs[run_id] = run_state

        plan = sequential_plan(flow) if mode == "sequential" else build_plan(flow)
        ctx = state.engine.create_context(run_id, max(1, workers))

        def execute():
            run_state.state = "running"
            try:
                record = state.engine.run_plan(ctx, flow, plan)
                run_state.record = record
                run_state.catalog = dict(ctx.catalog)
                run_state.state = record.status
                if record.status == "failed":
                    failed = record.tasks.get(record.failed_node)
                    run_state.error = failed.error if failed else "task failed"
            except Exception as exc:  # noqa: BLE001 - surfaced via status
                run_state.state = "failed"
                run_state.error = str(exc)

        threading.Thread(target=execute, daemon=True).start()
        return JSONResponse(status_code=202, content={"run_id": run_id})

    @app.get("/runs/{run_id}")
    def run_status(run_id: str):
        run_state = state.runs.get(run_id)
        if run_state is None:
            return JSONResponse(status_code=404, content={"error": "unknown run"})
        doc = {
            "run_id": run_id,
            "flow_id": run_state.flow_id,
            "mode": run_state.mode,
            "state": run_state.state,
            "error": run_state.error,
        }
        if run_state.record is not None:
            doc["record"] = run_state.record.to_json()
        return doc

    @app.get("/runs/{run_id}/results/{node_id}")
    def run_results(
        run_id: str,
        node_id: str,
        request: Request,
        offset: int = Query(0, ge=0),
        limit: int = Query(DEFAULT_PAGE_SIZE, ge=1, le=1000),
        port: str | None = None,
    ):
        run_state = state.runs.get(run_id)
        if run_state is None or run_state.record is None:
            return JSONResponse(status_code=404, content={"error": "unknown run or not finished"})
        try:
            frame = state.engine.result_frame(run_state.record, node_id, port)
        except NotFoundError as exc:
            return JSONResponse(status_code=404, content={"error": str(exc)})
        if "text/csv" in request.headers.get("accept", ""):
            return Response(content=_frame_csv(frame, offset, limit), media_type="text/csv")
        return _frame_rows_json(frame, offset, limit)

    @app.post("/agent/sessions")
    def create_session(body: dict):
        catalog: dict[str, Frame] = {}
        for name, path in (body.get("tables") or {}).items():
            catalog[name] = read_frame("csv", path)
        run_id = body.get("run_id")
        if run_id:
            run_state = state.runs.get(run_id)
            if run_state is None:
                return JSONResponse(status_code=404, content={"error": "unknown run"})
            for name, handle in run_state.catalog.items():
                catalog[name] = state.engine.store.get_frame(handle)
        if not catalog:
            return JSONResponse(status_code=422, content={"error": "no tables given"})
        script = [
            ScriptStep(s["completion"], s.get("expect"))
            for s in (body.get("script") or [])
        ]
        session_id = uuid.uuid4().hex[:12]
        state.sessions[session_id] = _Session(
            session_id, catalog, script, top_k=int(body.get("top_k", 10))
        )
        return JSONResponse(status_code=201, content={"session_id": session_id})

    @app.post("/agent/sessions/{session_id}/ask")
    def ask(session_id: str, body: dict):
        session = state.sessions.get(session_id)
        if session is None:
            return JSONResponse(status_code=404, content={"error": "unknown session"})
        question = body.get("question", "")
        script = [
            ScriptStep(s["completion"], s.get("expect"))
            for s in (body.get("script") or [])
        ] or session.script
        if not script:
            return JSONResponse(
                status_code=422,
                content={"error": "no model script configured for this session"},
            )
        lm = ScriptedLmClient(script)
        answer, transcript = run_agent(
            question, session.catalog, lm, AgentConfig(top_k=session.top_k)
        )
        return {"answer": answer, "transcript": transcript}

    ui_dir = state.config.ui_dir
    if ui_dir and Path(ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
