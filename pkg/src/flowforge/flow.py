"""Flow documents: parsing, canonical serialization and validity checking.

A flow is a DAG of component nodes wired by ports. The JSON wire format is
shared verbatim with the UI:

    {"name": ..., "nodes": [{"id", "kind", "params": {...}}],
     "edges": [{"src": "nodeId.port", "dst": "nodeId.port"}]}

The port suffix may be dropped when a component has a single port. A
top-level "layout" key (UI sidecar) is accepted and ignored; any other
unknown key is rejected.

Validation runs four checks, reporting every issue it finds: (1) required
parameters, (2) presence of input and output endpoints, (3) cycles, and
(4) stage ordering, where join/fork are phase-transparent and inherit the
highest phase reaching them.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .components import get_spec, validate_params
from .errors import FlowParseError
from .frame import is_identifier
from .stage import StagePhase

_ALLOWED_TOP_KEYS = {"name", "nodes", "edges", "layout"}
_PHASE_TRANSPARENT_KINDS = {"join", "fork"}


@dataclass(frozen=True)
class FlowNode:
    id: str
    kind: str
    params: dict = field(hash=False, default_factory=dict)
    in_ports: tuple[str, ...] = ()
    out_ports: tuple[str, ...] = ()

    @property
    def phase(self) -> StagePhase:
        return get_spec(self.kind).phase


@dataclass(frozen=True)
class FlowEdge:
    src: tuple[str, str]  # (node id, out port)
    dst: tuple[str, str]  # (node id, in port)


@dataclass(frozen=True)
class Flow:
    name: str
    nodes: tuple[FlowNode, ...]
    edges: tuple[FlowEdge, ...]

    def node(self, node_id: str) -> FlowNode:
        for n in self.nodes:
            if n.id == node_id:
                return n
        raise KeyError(node_id)

    def node_ids(self) -> list[str]:
        return [n.id for n in self.nodes]

    def predecessors(self, node_id: str) -> list[str]:
        return sorted({e.src[0] for e in self.edges if e.dst[0] == node_id})

    def successors(self, node_id: str) -> list[str]:
        return sorted({e.dst[0] for e in self.edges if e.src[0] == node_id})


@dataclass(frozen=True)
class ValidationIssue:
    code: str  # PARAM_MISSING | NO_ENDPOINT | CYCLE | STAGE_ORDER | UNKNOWN_KIND | BAD_EDGE
    node_ids: tuple[str, ...]
    message: str

    def to_json(self) -> dict:
        return {"code": self.code, "node_ids": list(self.node_ids), "message": self.message}


# -- parsing -------------------------------------------------------------------

def _parse_endpoint(text: str, field_name: str) -> tuple[str, str | None]:
    if not isinstance(text, str) or not text:
        raise FlowParseError(f"edge {field_name} must be a non-empty string")
    if "." in text:
        node_id, port = text.split(".", 1)
        return node_id, port
    return text, None


def parse_flow(document: str) -> Flow:
    """Parse a flow JSON document; structural problems raise FlowParseError."""
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as exc:
        raise FlowParseError(
            f"syntax error at line {exc.lineno}, column {exc.colno}: {exc.msg}",
            line=exc.lineno,
            column=exc.colno,
        ) from None
    if not isinstance(doc, dict):
        raise FlowParseError("flow document must be a JSON object")
    unknown = sorted(set(doc) - _ALLOWED_TOP_KEYS)
    if unknown:
        raise FlowParseError(f"unknown top-level keys: {unknown}")
    name = doc.get("name", "")
    if not isinstance(name, str):
        raise FlowParseError("flow name must be a string")

    nodes: list[FlowNode] = []
    seen: set[str] = set()
    for raw in doc.get("nodes", []):
        if not isinstance(raw, dict):
            raise FlowParseError("each node must be an object")
        node_id = raw.get("id")
        kind = raw.get("kind")
        params = raw.get("params", {})
        if not isinstance(node_id, str) or not is_identifier(node_id):
            raise FlowParseError(f"node id {node_id!r} is not a valid identifier")
        if node_id in seen:
            raise FlowParseError(f"duplicate node id {node_id!r}")
        seen.add(node_id)
        if not isinstance(kind, str):
            raise FlowParseError(f"node {node_id!r}: kind must be a string")
        if not isinstance(params, dict):
            raise FlowParseError(f"node {node_id!r}: params must be an object")
        spec = get_spec(kind)
        if spec is None:
            raise FlowParseError(f"node {node_id!r}: unknown component kind {kind!r}")
        try:
            in_ports, out_ports = spec.ports_for(params)
        except (TypeError, ValueError):
            in_ports, out_ports = spec.in_ports, spec.out_ports
        nodes.append(FlowNode(node_id, kind, dict(params), in_ports, out_ports))

    by_id = {n.id: n for n in nodes}
    edges: list[FlowEdge] = []
    for raw in doc.get("edges", []):
        if not isinstance(raw, dict) or "src" not in raw or "dst" not in raw:
            raise FlowParseError("each edge must be an object with src and dst")
        src_id, src_port = _parse_endpoint(raw["src"], "src")
        dst_id, dst_port = _parse_endpoint(raw["dst"], "dst")
        if src_port is None:
            node = by_id.get(src_id)
            src_port = node.out_ports[0] if node and len(node.out_ports) == 1 else ""
        if dst_port is None:
            node = by_id.get(dst_id)
            dst_port = node.in_ports[0] if node and len(node.in_ports) == 1 else ""
        edges.append(FlowEdge((src_id, src_port), (dst_id, dst_port)))

    return Flow(name, tuple(nodes), tuple(edges))


def serialize_flow(flow: Flow) -> str:
    """Canonical form: nodes sorted by id, edges by (src, dst), stable keys.
    Two serializations of equal flows are byte-identical."""
    doc = {
        "name": flow.name,
        "nodes": [
            {"id": n.id, "kind": n.kind, "params": n.params}
            for n in sorted(flow.nodes, key=lambda n: n.id)
        ],
        "edges": [
            {"src": f"{e.src[0]}.{e.src[1]}", "dst": f"{e.dst[0]}.{e.dst[1]}"}
            for e in sorted(flow.edges, key=lambda e: (e.src, e.dst))
        ],
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


# -- topology --------------------------------------------------------------------

def topo_order(flow: Flow) -> tuple[list[str] | None, list[str] | None]:
    """Kahn's algorithm with lexical tie-breaking.

    Returns ``(order, None)`` for a DAG and ``(None, cycle_nodes)`` when a
    cycle exists; cycle_nodes are the ids left unplaceable.
    """
    ids = flow.node_ids()
    indegree = {i: 0 for i in ids}
    succ: dict[str, list[str]] = {i: [] for i in ids}
    for e in flow.edges:
        if e.src[0] in indegree and e.dst[0] in indegree:
            indegree[e.dst[0]] += 1
            succ[e.src[0]].append(e.dst[0])
    ready = sorted([i for i in ids if indegree[i] == 0])
    order: list[str] = []
    while ready:
        current = ready.pop(0)
        order.append(current)
        changed = False
        for nxt in succ[current]:
            indegree[nxt] -= 1
            if indegree[nxt] == 0:
                ready.append(nxt)
                changed = True
        if changed:
            ready.sort()
    if len(order) == len(ids):
        return order, None
    return None, sorted(i for i in ids if i not in order)


def cycle_nodes(flow: Flow) -> list[str]:
    """Exactly the nodes on cycles: members of non-trivial strongly connected
    components, plus self-loops (iterative Tarjan)."""
    ids = flow.node_ids()
    succ: dict[str, list[str]] = {i: [] for i in ids}
    self_loop: set[str] = set()
    for e in flow.edges:
        if e.src[0] in succ and e.dst[0] in succ:
            succ[e.src[0]].append(e.dst[0])
            if e.src[0] == e.dst[0]:
                self_loop.add(e.src[0])
    index: dict[str, int] = {}
    low: dict[str, int] = {}
    on_stack: set[str] = set()
    stack: list[str] = []
    counter = [0]
    result: set[str] = set(self_loop)

    def strongconnect(root: str):
        work = [(root, iter(succ[root]))]
        index[root] = low[root] = counter[0]
        counter[0] += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            node, it = work[-1]
            advanced = False
            for nxt in it:
                if nxt not in index:
                    index[nxt] = low[nxt] = counter[0]
                    counter[0] += 1
                    stack.append(nxt)
                    on_stack.add(nxt)
                    work.append((nxt, iter(succ[nxt])))
                    advanced = True
                    break
                if nxt in on_stack:
                    low[node] = min(low[node], index[nxt])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
            if low[node] == index[node]:
                component = []
                while True:
                    member = stack.pop()
                    on_stack.discard(member)
                    component.append(member)
                    if member == node:
                        break
                if len(component) > 1:
                    result.update(component)

    for node_id in ids:
        if node_id not in index:
            strongconnect(node_id)
    return sorted(result)


def effective_phases(flow: Flow, order: list[str]) -> dict[str, StagePhase]:
    """Declared phases, except join/fork inherit the max phase of their
    inputs (phase-transparent)."""
    phases: dict[str, StagePhase] = {}
    for node_id in order:
        node = flow.node(node_id)
        spec = get_spec(node.kind)
        phase = spec.phase if spec else StagePhase.PREPROCESS
        if node.kind in _PHASE_TRANSPARENT_KINDS:
            incoming = [phases[p] for p in flow.predecessors(node_id) if p in phases]
            if incoming:
                phase = max(incoming + [phase], key=lambda p: p.rank)
        phases[node_id] = phase
    return phases


# -- validation --------------------------------------------------------------------

def validate(flow: Flow) -> list[ValidationIssue]:
    """All checks, no fail-fast: edge wiring, params, endpoints, cycles,
    stage order."""
    issues: list[ValidationIssue] = []
    by_id = {n.id: n for n in flow.nodes}

    # wiring problems are reported first; later checks use the valid subset
    valid_edges: list[FlowEdge] = []
    fed: set[tuple[str, str]] = set()
    for e in flow.edges:
        problems = []
        src_node = by_id.get(e.src[0])
        dst_node = by_id.get(e.dst[0])
        if src_node is None:
            problems.append(f"unknown source node {e.src[0]!r}")
        elif e.src[1] not in src_node.out_ports:
            problems.append(f"node {e.src[0]!r} has no output port {e.src[1]!r}")
        if dst_node is None:
            problems.append(f"unknown destination node {e.dst[0]!r}")
        elif e.dst[1] not in dst_node.in_ports:
            problems.append(f"node {e.dst[0]!r} has no input port {e.dst[1]!r}")
        if not problems and e.dst in fed:
            problems.append(f"input port {e.dst[0]}.{e.dst[1]} is fed more than once")
        if problems:
            node_ids = tuple(i for i in (e.src[0], e.dst[0]) if i in by_id)
            issues.append(ValidationIssue("BAD_EDGE", node_ids, "; ".join(problems)))
        else:
            fed.add(e.dst)
            valid_edges.append(e)
    checked = Flow(flow.name, flow.nodes, tuple(valid_edges))

    # check 1: declared parameters (and unfed required input ports)
    for node in flow.nodes:
        spec = get_spec(node.kind)
        if spec is None:
            issues.append(
                ValidationIssue("UNKNOWN_KIND", (node.id,), f"unknown component kind {node.kind!r}")
            )
            continue
        problems = validate_params(spec, node.params)
        if problems:
            issues.append(
                ValidationIssue(
                    "PARAM_MISSING", (node.id,), f"node {node.id!r}: " + "; ".join(problems)
                )
            )
        unfed = [p for p in node.in_ports if (node.id, p) not in fed]
        if unfed:
            issues.append(
                ValidationIssue(
                    "PARAM_MISSING",
                    (node.id,),
                    f"node {node.id!r}: input ports not connected: {unfed}",
                )
            )

    # check 2: at least one input and one output component
    known = [n for n in flow.nodes if get_spec(n.kind) is not None]
    if not any(n.phase is StagePhase.INPUT for n in known):
        issues.append(ValidationIssue("NO_ENDPOINT", (), "flow has no input component"))
    if not any(n.phase is StagePhase.OUTPUT for n in known):
        issues.append(ValidationIssue("NO_ENDPOINT", (), "flow has no output component"))

    # check 3: cycles (including self-loops)
    order, blocked = topo_order(checked)
    if blocked is not None:
        members = cycle_nodes(checked)
        issues.append(
            ValidationIssue("CYCLE", tuple(members), f"cycle through nodes {members}")
        )

    # check 4: stage phases never decrease along an edge
    if order is not None:
        phases = effective_phases(checked, order)
        for e in checked.edges:
            src_phase = phases[e.src[0]]
            dst_phase = phases[e.dst[0]]
            if by_id[e.dst[0]].kind in _PHASE_TRANSPARENT_KINDS:
                continue  # transparent nodes absorb any input phase
            if src_phase.rank > dst_phase.rank:
                issues.append(
                    ValidationIssue(
                        "STAGE_ORDER",
                        (e.src[0], e.dst[0]),
                        f"{src_phase.value} node {e.src[0]!r} feeds "
                        f"{dst_phase.value} node {e.dst[0]!r}",
                    )
                )
    return issues
