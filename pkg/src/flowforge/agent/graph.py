"""Minimal state-graph runtime: named nodes, plain and conditional edges,
an END sentinel, and a budget-bounded invoke loop."""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import AgentBudgetError

END = "__end__"


@dataclass(frozen=True)
class StateGraph:
    nodes: dict
    edges: dict
    conditional_edges: dict
    entry: str

    def __post_init__(self):
        object.__setattr__(self, "nodes", dict(self.nodes))
        object.__setattr__(self, "edges", dict(self.edges))
        object.__setattr__(self, "conditional_edges", dict(self.conditional_edges))


def compile_graph(nodes: dict, edges: dict, conditional_edges: dict, entry: str) -> StateGraph:
    """Validate and freeze a graph: the entry and every edge target must be a
    known node (or END), and each node routes through exactly one edge kind."""
    if not nodes:
        raise ValueError("graph has no nodes")
    if entry not in nodes:
        raise ValueError(f"entry node {entry!r} does not exist")
    for name in nodes:
        has_plain = name in edges
        has_cond = name in conditional_edges
        if has_plain and has_cond:
            raise ValueError(f"node {name!r} has both a plain and a conditional edge")
        if not has_plain and not has_cond:
            raise ValueError(f"node {name!r} has no outgoing edge (route it to END)")
    for src, dst in edges.items():
        if src not in nodes:
            raise ValueError(f"edge from unknown node {src!r}")
        if dst != END and dst not in nodes:
            raise ValueError(f"edge from {src!r} to unknown node {dst!r}")
    for src in conditional_edges:
        if src not in nodes:
            raise ValueError(f"conditional edge from unknown node {src!r}")
    return StateGraph(nodes, edges, conditional_edges, entry)


def invoke(graph: StateGraph, state, max_steps: int = 8):
    """Apply node handlers and follow edges until END or the step budget.

    Each handler application counts one step; exhausting the budget raises
    AgentBudgetError carrying the partial state. Conditional edges may route
    to unknown targets only at runtime, which is reported as a ValueError
    naming the offending node.
    """
    if max_steps < 1:
        raise ValueError("max_steps must be >= 1")
    current = graph.entry
    steps = 0
    while True:
        if steps >= max_steps:
            raise AgentBudgetError(
                f"step budget of {max_steps} exhausted at node {current!r}", state=state
            )
        handler = graph.nodes[current]
        try:
            state = handler(state)
        except AgentBudgetError:
            raise
        except Exception as exc:
            raise RuntimeError(f"node {current!r} failed: {exc}") from exc
        steps += 1
        if current in graph.edges:
            nxt = graph.edges[current]
        else:
            nxt = graph.conditional_edges[current](state)
        if nxt == END:
            return state
        if nxt not in graph.nodes:
            raise ValueError(f"node {current!r} routed to unknown node {nxt!r}")
        current = nxt
