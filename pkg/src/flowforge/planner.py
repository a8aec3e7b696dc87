"""Translate validated flows into parallel execution plans.

The translation follows four steps: breadth-first layering of the DAG,
partitioning into stage subprocesses, critical-path analysis, and branch
grouping around joins/forks. Waves are the global longest-path layers
(earliest placement satisfying all dependencies), so with unit costs the
wave count equals the critical path's node count. All tie-breaking is by
lexical node id, making plans deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import PlanError
from .flow import Flow, effective_phases, topo_order, validate
from .stage import StagePhase


@dataclass(frozen=True)
class CostModel:
    """Per-node positive costs; anything unlisted costs ``default``."""

    costs: dict = field(default_factory=dict, hash=False)
    default: float = 1.0

    def __post_init__(self):
        if self.default <= 0 or any(v <= 0 for v in self.costs.values()):
            raise PlanError("all costs must be positive")

    def cost(self, node_id: str) -> float:
        return float(self.costs.get(node_id, self.default))


UNIT_COST = CostModel()


@dataclass(frozen=True)
class SubProcess:
    phase: StagePhase
    node_ids: frozenset

    def to_json(self) -> dict:
        return {"phase": self.phase.value, "node_ids": sorted(self.node_ids)}


@dataclass(frozen=True)
class CriticalPathResult:
    length: float
    path: tuple[str, ...]

    def to_json(self) -> dict:
        return {"length": self.length, "path": list(self.path)}


@dataclass(frozen=True)
class ExecutionPlan:
    waves: tuple[tuple[str, ...], ...]
    mode: str  # "optimized" | "sequential"
    stages: tuple[SubProcess, ...] = ()
    critical_path: CriticalPathResult | None = None
    # branch groups per stage, parallel to ``stages``
    branch_groups: tuple = ()

    def wave_of(self, node_id: str) -> int:
        for i, wave in enumerate(self.waves):
            if node_id in wave:
                return i
        raise KeyError(node_id)

    def to_json(self) -> dict:
        doc = {"mode": self.mode, "waves": [list(w) for w in self.waves]}
        if self.stages:
            doc["stages"] = [s.to_json() for s in self.stages]
        if self.critical_path is not None:
            doc["critical_path"] = self.critical_path.to_json()
        if self.branch_groups:
            doc["branch_groups"] = [
                [list(g) for g in groups] for groups in self.branch_groups
            ]
        return doc

    def render_table(self) -> str:
        lines = [f"plan ({self.mode}), {len(self.waves)} waves"]
        for i, wave in enumerate(self.waves):
            lines.append(f"  wave {i}: " + " ".join(wave))
        return "\n".join(lines)


def _require_order(flow: Flow) -> list[str]:
    order, cycle = topo_order(flow)
    if cycle is not None:
        raise PlanError(f"flow has a cycle through {cycle}")
    return order


def bfs_layers(flow: Flow) -> list[list[str]]:
    """Layer k holds the nodes whose longest incoming path has k edges."""
    order = _require_order(flow)
    depth: dict[str, int] = {}
    for node_id in order:
        preds = flow.predecessors(node_id)
        depth[node_id] = 1 + max((depth[p] for p in preds), default=-1)
    layers: list[list[str]] = [[] for _ in range(max(depth.values(), default=-1) + 1)]
    for node_id in order:
        layers[depth[node_id]].append(node_id)
    return [sorted(layer) for layer in layers]


def partition_stages(flow: Flow) -> list[SubProcess]:
    """Nodes grouped by effective phase, in phase order; a partition."""
    order = _require_order(flow)
    phases = effective_phases(flow, order)
    groups: dict[StagePhase, set] = {}
    for node_id, phase in phases.items():
        groups.setdefault(phase, set()).add(node_id)
    return [
        SubProcess(phase, frozenset(groups[phase]))
        for phase in sorted(groups, key=lambda p: p.rank)
    ]


def critical_path(flow: Flow, cost: CostModel = UNIT_COST) -> CriticalPathResult:
    """Maximum-cost source-to-sink path; ties resolved toward lexically
    smaller predecessors so results are deterministic."""
    order = _require_order(flow)
    if not order:
        return CriticalPathResult(0.0, ())
    dist: dict[str, float] = {}
    back: dict[str, str | None] = {}
    for node_id in order:
        best_pred, best_dist = None, 0.0
        for p in flow.predecessors(node_id):  # sorted lexically
            if dist[p] > best_dist:
                best_pred, best_dist = p, dist[p]
        dist[node_id] = best_dist + cost.cost(node_id)
        back[node_id] = best_pred
    end = min((n for n in dist), key=lambda n: (-dist[n], n))
    path: list[str] = []
    cursor: str | None = end
    while cursor is not None:
        path.append(cursor)
        cursor = back[cursor]
    path.reverse()
    return CriticalPathResult(dist[end], tuple(path))


def group_join_fork(flow: Flow, subprocess: SubProcess) -> list[list[str]]:
    """Antichain groups inside one subprocess: nodes grouped by longest-path
    depth within the induced subgraph, so fork/join branches that share no
    path run side by side and no group contains an ancestor/descendant pair."""
    members = subprocess.node_ids
    order = _require_order(flow)
    depth: dict[str, int] = {}
    for node_id in order:
        if node_id not in members:
            continue
        preds = [p for p in flow.predecessors(node_id) if p in members]
        depth[node_id] = 1 + max((depth[p] for p in preds), default=-1)
    if not depth:
        return []
    groups: list[list[str]] = [[] for _ in range(max(depth.values()) + 1)]
    for node_id, d in depth.items():
        groups[d].append(node_id)
    return [sorted(g) for g in groups]


def build_plan(flow: Flow, cost: CostModel = UNIT_COST) -> ExecutionPlan:
    """Compose the four translation steps into an optimized plan.

    Waves are earliest-possible layers; stage and critical-path results ride
    along as metadata for inspection and the run preview.
    """
    issues = validate(flow)
    if issues:
        summary = "; ".join(f"{i.code}: {i.message}" for i in issues)
        raise PlanError(f"flow is invalid: {summary}")
    layers = bfs_layers(flow)
    stages = partition_stages(flow)
    cp = critical_path(flow, cost)
    groups = tuple(
        tuple(tuple(g) for g in group_join_fork(flow, stage)) for stage in stages
    )
    return ExecutionPlan(
        waves=tuple(tuple(layer) for layer in layers),
        mode="optimized",
        stages=tuple(stages),
        critical_path=cp,
        branch_groups=groups,
    )


def sequential_plan(flow: Flow) -> ExecutionPlan:
    """One node per wave in (deterministic) topological order."""
    order = _require_order(flow)
    return ExecutionPlan(waves=tuple((n,) for n in order), mode="sequential")
