"""Shared test utilities: random valid flows and brute-force graph oracles.

The flow generator builds component-valid DAGs by assigning kinds from node
degrees: sources become gen_rows, single-input nodes delay, multi-input
nodes join, and a sink is appended so validation passes. The oracles here
enumerate paths directly and are kept independent of the planner.
"""

from __future__ import annotations

import json
import random

from flowforge.flow import Flow, parse_flow


def random_dag_edges(rng: random.Random, n: int, p: float = 0.35) -> list[tuple[int, int]]:
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < p:
                edges.append((i, j))
    return edges


def random_valid_flow(rng: random.Random, max_core: int = 10) -> Flow:
    """A random flow that passes validate(): gen_rows sources, delay/join
    middles, one appended sink."""
    n = rng.randint(1, max_core)
    core_edges = random_dag_edges(rng, n)
    indegree = {i: 0 for i in range(n)}
    for _, j in core_edges:
        indegree[j] += 1

    names = {i: f"n{i:02d}" for i in range(n)}
    nodes = []
    for i in range(n):
        if indegree[i] == 0:
            nodes.append({"id": names[i], "kind": "gen_rows", "params": {"rows": 3}})
        elif indegree[i] == 1:
            nodes.append({"id": names[i], "kind": "delay", "params": {}})
        else:
            nodes.append(
                {"id": names[i], "kind": "join", "params": {"arity": indegree[i]}}
            )
    port_cursor: dict[int, int] = {i: 0 for i in range(n)}
    edges = []
    for i, j in sorted(core_edges):
        if indegree[j] == 1:
            dst = f"{names[j]}.in"
        else:
            dst = f"{names[j]}.in{port_cursor[j]}"
            port_cursor[j] += 1
        edges.append({"src": f"{names[i]}.out", "dst": dst})

    # terminal sink keeps check 2 happy; hang it off the last core sink
    sinks = [i for i in range(n) if not any(a == i for a, _ in core_edges)]
    anchor = names[max(sinks)]
    nodes.append({"id": "zout", "kind": "sink", "params": {}})
    edges.append({"src": f"{anchor}.out", "dst": "zout.in"})

    return parse_flow(json.dumps({"name": "random", "nodes": nodes, "edges": edges}))


def edge_list(flow: Flow) -> list[tuple[str, str]]:
    return [(e.src[0], e.dst[0]) for e in flow.edges]


def brute_force_longest_path_edges(flow: Flow) -> dict[str, int]:
    """Longest incoming path (in edges) per node, by memoized enumeration."""
    preds: dict[str, list[str]] = {n: [] for n in flow.node_ids()}
    for a, b in edge_list(flow):
        preds[b].append(a)
    memo: dict[str, int] = {}

    def depth(node: str) -> int:
        if node not in memo:
            memo[node] = 1 + max((depth(p) for p in preds[node]), default=-1)
        return memo[node]

    return {n: depth(n) for n in flow.node_ids()}


def brute_force_max_path_cost(flow: Flow, costs: dict[str, float]) -> float:
    """Max total cost over every source-to-sink path, enumerated explicitly."""
    succs: dict[str, list[str]] = {n: [] for n in flow.node_ids()}
    has_pred = set()
    for a, b in edge_list(flow):
        succs[a].append(b)
        has_pred.add(b)
    best = 0.0

    def walk(node: str, acc: float):
        nonlocal best
        acc += costs[node]
        if not succs[node]:
            best = max(best, acc)
            return
        for nxt in succs[node]:
            walk(nxt, acc)

    for source in flow.node_ids():
        if source not in has_pred:
            walk(source, 0.0)
    return best


def reachable_pairs(flow: Flow) -> set[tuple[str, str]]:
    """All (ancestor, descendant) pairs by DFS from every node."""
    succs: dict[str, list[str]] = {n: [] for n in flow.node_ids()}
    for a, b in edge_list(flow):
        succs[a].append(b)
    pairs: set[tuple[str, str]] = set()

    def walk(origin: str, node: str):
        for nxt in succs[node]:
            if (origin, nxt) not in pairs:
                pairs.add((origin, nxt))
                walk(origin, nxt)

    for n in flow.node_ids():
        walk(n, n)
    return pairs
