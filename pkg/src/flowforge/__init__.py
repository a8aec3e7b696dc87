"""flowforge: a parallel, component-based machine-learning workflow engine.

Flows are DAGs of typed components. The engine validates them, translates
them into wave-parallel execution plans, runs them over a budgeted columnar
store, and exposes the resulting tables to a SQL-speaking data agent.
"""

from .errors import (
    AgentBudgetError,
    ComponentError,
    ContextError,
    EngineError,
    FlowParseError,
    NotFoundError,
    OptimizationError,
    PlanError,
    SchemaError,
    SqlError,
    StoreFullError,
)
from .frame import (
    BOOLEAN,
    FLOAT64,
    INT64,
    UTF8,
    Column,
    ColumnRole,
    DType,
    Frame,
    FrameSchema,
    decode_frame,
    encode_frame,
    frame_size_bytes,
    vector,
)
from .stage import StagePhase
from .store import FrameHandle, FrameStore, StoreConfig
from .flow import Flow, FlowEdge, FlowNode, ValidationIssue, parse_flow, serialize_flow, topo_order, validate
from .planner import (
    CostModel,
    CriticalPathResult,
    ExecutionPlan,
    SubProcess,
    bfs_layers,
    build_plan,
    critical_path,
    group_join_fork,
    partition_stages,
    sequential_plan,
)
from .executor import Engine, ExecutionContext, RunRecord, TaskResult

__version__ = "0.1.0"

__all__ = [
    "AgentBudgetError",
    "ComponentError",
    "ContextError",
    "EngineError",
    "FlowParseError",
    "NotFoundError",
    "OptimizationError",
    "PlanError",
    "SchemaError",
    "SqlError",
    "StoreFullError",
    "BOOLEAN",
    "FLOAT64",
    "INT64",
    "UTF8",
    "Column",
    "ColumnRole",
    "DType",
    "Frame",
    "FrameSchema",
    "decode_frame",
    "encode_frame",
    "frame_size_bytes",
    "vector",
    "StagePhase",
    "FrameHandle",
    "FrameStore",
    "StoreConfig",
    "Flow",
    "FlowEdge",
    "FlowNode",
    "ValidationIssue",
    "parse_flow",
    "serialize_flow",
    "topo_order",
    "validate",
    "CostModel",
    "CriticalPathResult",
    "ExecutionPlan",
    "SubProcess",
    "bfs_layers",
    "build_plan",
    "critical_path",
    "group_join_fork",
    "partition_stages",
    "sequential_plan",
    "Engine",
    "ExecutionContext",
    "RunRecord",
    "TaskResult",
    "__version__",
]
