import json
import random

import pytest

from flowforge.errors import PlanError
from flowforge.flow import parse_flow
from flowforge.planner import (
    CostModel,
    bfs_layers,
    build_plan,
    critical_path,
    group_join_fork,
    partition_stages,
    sequential_plan,
)
from flowforge.stage import StagePhase

from helpers import (
    brute_force_longest_path_edges,
    brute_force_max_path_cost,
    random_valid_flow,
    reachable_pairs,
)
from test_flow import diamond_doc, pipeline_doc


def chain_doc():
    return json.dumps(
        {
            "name": "chain",
            "nodes": [
                {"id": "a", "kind": "gen_rows", "params": {"rows": 1}},
                {"id": "b", "kind": "delay", "params": {}},
                {"id": "c", "kind": "sink", "params": {}},
            ],
            "edges": [{"src": "a.out", "dst": "b.in"}, {"src": "b.out", "dst": "c.in"}],
        }
    )


def test_bfs_layers_diamond():
    layers = bfs_layers(parse_flow(diamond_doc()))
    assert layers == [["a"], ["b", "c"], ["d"], ["e"]]


def test_bfs_layers_chain():
    assert bfs_layers(parse_flow(chain_doc())) == [["a"], ["b"], ["c"]]


def test_bfs_layers_random_match_brute_force():
    rng = random.Random(21)
    for _ in range(60):
        flow = random_valid_flow(rng, max_core=11)
        layers = bfs_layers(flow)
        expected = brute_force_longest_path_edges(flow)
        for depth, layer in enumerate(layers):
            for node in layer:
                assert expected[node] == depth
        assert sum(len(l) for l in layers) == len(flow.nodes)


def test_bfs_layers_cycle_is_plan_error():
    doc = {
        "name": "loop",
        "nodes": [
            {"id": "a", "kind": "delay", "params": {}},
            {"id": "b", "kind": "delay", "params": {}},
        ],
        "edges": [{"src": "a.out", "dst": "b.in"}, {"src": "b.out", "dst": "a.in"}],
    }
    with pytest.raises(PlanError, match="cycle"):
        bfs_layers(parse_flow(json.dumps(doc)))


def test_partition_stages_pipeline():
    flow = parse_flow(pipeline_doc())
    stages = partition_stages(flow)
    by_phase = {s.phase: set(s.node_ids) for s in stages}
    assert [s.phase for s in stages] == [
        StagePhase.INPUT,
        StagePhase.FEATURE,
        StagePhase.MODEL,
        StagePhase.PREDICT,
        StagePhase.OUTPUT,
    ]
    assert by_phase[StagePhase.INPUT] == {"read"}
    assert by_phase[StagePhase.FEATURE] == {"tok", "tfidf", "cat", "merge", "chisq"}
    assert by_phase[StagePhase.MODEL] == {"fit"}
    assert by_phase[StagePhase.PREDICT] == {"pred", "ev"}
    assert by_phase[StagePhase.OUTPUT] == {"write", "metrics_out"}


def test_partition_two_node_flow():
    doc = {
        "name": "io",
        "nodes": [
            {"id": "g", "kind": "gen_rows", "params": {"rows": 1}},
            {"id": "s", "kind": "sink", "params": {}},
        ],
        "edges": [{"src": "g.out", "dst": "s.in"}],
    }
    stages = partition_stages(parse_flow(json.dumps(doc)))
    assert len(stages) == 2


def test_partition_is_a_partition():
    rng = random.Random(5)
    for _ in range(30):
        flow = random_valid_flow(rng)
        stages = partition_stages(flow)
        seen = [n for s in stages for n in s.node_ids]
        assert sorted(seen) == sorted(flow.node_ids())


def bare_diamond():
    """Four-node diamond; parses fine but skips endpoint validity (the
    structural planner ops do not validate)."""
    return parse_flow(json.dumps({
        "name": "bare",
        "nodes": [
            {"id": "a", "kind": "gen_rows", "params": {"rows": 1}},
            {"id": "b", "kind": "delay", "params": {}},
            {"id": "c", "kind": "delay", "params": {}},
            {"id": "d", "kind": "join", "params": {"arity": 2}},
        ],
        "edges": [
            {"src": "a.out", "dst": "b.in"},
            {"src": "a.out", "dst": "c.in"},
            {"src": "b.out", "dst": "d.in0"},
            {"src": "c.out", "dst": "d.in1"},
        ],
    }))


def test_critical_path_chain_and_diamond():
    assert critical_path(parse_flow(chain_doc())).length == 3.0
    assert critical_path(bare_diamond()).length == 3.0  # unit-cost diamond
    result = critical_path(parse_flow(diamond_doc()))
    assert result.length == 4.0  # a -> b|c -> d -> e
    assert result.path[0] == "a"
    assert result.path[-1] == "e"


def test_bfs_layers_bare_diamond_matches_textbook_shape():
    assert bfs_layers(bare_diamond()) == [["a"], ["b", "c"], ["d"]]


def test_critical_path_random_weighted_match_brute_force():
    rng = random.Random(31)
    for _ in range(50):
        flow = random_valid_flow(rng, max_core=9)
        costs = {n: rng.uniform(0.5, 5.0) for n in flow.node_ids()}
        model = CostModel(costs)
        result = critical_path(flow, model)
        expected = brute_force_max_path_cost(flow, costs)
        assert abs(result.length - expected) < 1e-9
        assert abs(sum(costs[n] for n in result.path) - result.length) < 1e-9
        # returned path must be a real directed path
        edge_set = {(e.src[0], e.dst[0]) for e in flow.edges}
        for u, v in zip(result.path, result.path[1:]):
            assert (u, v) in edge_set


def test_critical_path_invariant_under_transitive_edges():
    doc = json.loads(diamond_doc())
    base = critical_path(parse_flow(json.dumps(doc))).length
    # a->d is implied by a->b->d already
    doc["nodes"][3]["params"]["arity"] = 3
    doc["edges"] = [e for e in doc["edges"]]
    doc["edges"].insert(2, {"src": "a.out", "dst": "d.in2"})
    with_extra = critical_path(parse_flow(json.dumps(doc))).length
    assert with_extra == base


def test_group_join_fork_fixture():
    doc = {
        "name": "forkjoin",
        "nodes": [
            {"id": "g", "kind": "gen_rows", "params": {"rows": 2}},
            {"id": "f", "kind": "fork", "params": {"ways": 2}},
            {"id": "b1", "kind": "delay", "params": {}},
            {"id": "b2", "kind": "delay", "params": {}},
            {"id": "j", "kind": "join", "params": {"arity": 2}},
            {"id": "s", "kind": "sink", "params": {}},
        ],
        "edges": [
            {"src": "g.out", "dst": "f.in"},
            {"src": "f.out0", "dst": "b1.in"},
            {"src": "f.out1", "dst": "b2.in"},
            {"src": "b1.out", "dst": "j.in0"},
            {"src": "b2.out", "dst": "j.in1"},
            {"src": "j.out", "dst": "s.in"},
        ],
    }
    flow = parse_flow(json.dumps(doc))
    stages = partition_stages(flow)
    preprocess = next(s for s in stages if s.phase is StagePhase.PREPROCESS)
    groups = group_join_fork(flow, preprocess)
    assert groups == [["f"], ["b1", "b2"], ["j"]]


def test_group_three_branch_heads_concurrent():
    doc = {
        "name": "threeway",
        "nodes": [
            {"id": "g1", "kind": "gen_rows", "params": {"rows": 1}},
            {"id": "g2", "kind": "gen_rows", "params": {"rows": 1}},
            {"id": "g3", "kind": "gen_rows", "params": {"rows": 1}},
            {"id": "j", "kind": "join", "params": {"arity": 3}},
            {"id": "s", "kind": "sink", "params": {}},
        ],
        "edges": [
            {"src": "g1.out", "dst": "j.in0"},
            {"src": "g2.out", "dst": "j.in1"},
            {"src": "g3.out", "dst": "j.in2"},
            {"src": "j.out", "dst": "s.in"},
        ],
    }
    flow = parse_flow(json.dumps(doc))
    stages = partition_stages(flow)
    inputs = next(s for s in stages if s.phase is StagePhase.INPUT)
    assert group_join_fork(flow, inputs) == [["g1", "g2", "g3"]]


def test_groups_never_contain_ancestor_descendant():
    rng = random.Random(41)
    for _ in range(40):
        flow = random_valid_flow(rng)
        pairs = reachable_pairs(flow)
        for stage in partition_stages(flow):
            for group in group_join_fork(flow, stage):
                for u in group:
                    for v in group:
                        if u != v:
                            assert (u, v) not in pairs


def test_build_plan_diamond():
    plan = build_plan(parse_flow(diamond_doc()))
    assert len(plan.waves) == 4
    assert plan.waves[1] == ("b", "c")
    assert plan.mode == "optimized"


def test_build_plan_chain_single_task_waves():
    plan = build_plan(parse_flow(chain_doc()))
    assert all(len(w) == 1 for w in plan.waves)


def test_build_plan_rejects_invalid_flow():
    doc = {
        "name": "bad",
        "nodes": [{"id": "t", "kind": "tokenizer", "params": {}}],
        "edges": [],
    }
    with pytest.raises(PlanError, match="PARAM_MISSING"):
        build_plan(parse_flow(json.dumps(doc)))


def test_build_plan_random_oracle():
    rng = random.Random(55)
    for _ in range(60):
        flow = random_valid_flow(rng, max_core=11)
        plan = build_plan(flow)
        wave_of = {n: i for i, w in enumerate(plan.waves) for n in w}
        assert sorted(wave_of) == sorted(flow.node_ids())
        for e in flow.edges:
            assert wave_of[e.src[0]] < wave_of[e.dst[0]]
        depths = brute_force_longest_path_edges(flow)
        assert len(plan.waves) == max(depths.values()) + 1
        assert len(plan.waves) == len(plan.critical_path.path)


def test_plan_determinism():
    rng = random.Random(77)
    flow = random_valid_flow(rng, max_core=10)
    assert build_plan(flow) == build_plan(flow)
    assert sequential_plan(flow) == sequential_plan(flow)


def test_sequential_plan():
    flow = parse_flow(diamond_doc())
    plan = sequential_plan(flow)
    assert plan.mode == "sequential"
    assert len(plan.waves) == 5
    assert all(len(w) == 1 for w in plan.waves)
    position = {w[0]: i for i, w in enumerate(plan.waves)}
    for e in flow.edges:
        assert position[e.src[0]] < position[e.dst[0]]


def test_optimized_never_more_waves_than_sequential():
    rng = random.Random(13)
    for _ in range(40):
        flow = random_valid_flow(rng)
        optimized = build_plan(flow)
        sequential = sequential_plan(flow)
        assert len(optimized.waves) <= len(sequential.waves)
        is_total_order = all(len(w) == 1 for w in optimized.waves)
        assert (len(optimized.waves) == len(sequential.waves)) == is_total_order
