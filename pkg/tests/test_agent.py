import json

import pytest

from flowforge.agent import (
    END,
    AgentConfig,
    AgentState,
    ScriptStep,
    ScriptedLmClient,
    build_tools,
    compile_graph,
    invoke,
    parse_completion,
    react_step,
    run_agent,
)
from flowforge.errors import AgentBudgetError
from flowforge.frame import INT64, ColumnRole, Frame
from flowforge.minisql import catalog_fingerprint


def price_catalog():
    return {
        "t": Frame.from_columns(
            [("price", INT64, ColumnRole.PLAIN, [1, 3])]
        )
    }


# -- state graph ----------------------------------------------------------------

def test_compile_two_node_loop():
    graph = compile_graph(
        nodes={"agent": lambda s: s, "tools": lambda s: s},
        edges={"tools": "agent"},
        conditional_edges={"agent": lambda s: END},
        entry="agent",
    )
    assert graph.entry == "agent"


def test_compile_rejects_dangling_and_empty():
    with pytest.raises(ValueError, match="unknown"):
        compile_graph(
            nodes={"a": lambda s: s}, edges={"a": "ghost"}, conditional_edges={}, entry="a"
        )
    with pytest.raises(ValueError, match="no nodes"):
        compile_graph(nodes={}, edges={}, conditional_edges={}, entry="a")
    with pytest.raises(ValueError, match="entry"):
        compile_graph(nodes={"a": lambda s: s}, edges={"a": END}, conditional_edges={}, entry="b")
    with pytest.raises(ValueError, match="outgoing"):
        compile_graph(nodes={"a": lambda s: s}, edges={}, conditional_edges={}, entry="a")


def test_invoke_single_step_termination():
    graph = compile_graph(
        nodes={"only": lambda s: s | {"answer": 42}},
        edges={"only": END},
        conditional_edges={},
        entry="only",
    )
    out = invoke(graph, {"answer": None})
    assert out["answer"] == 42


def test_invoke_budget_error_carries_state():
    graph = compile_graph(
        nodes={"a": lambda s: s + ["a"], "b": lambda s: s + ["b"]},
        edges={"a": "b", "b": "a"},
        conditional_edges={},
        entry="a",
    )
    with pytest.raises(AgentBudgetError) as err:
        invoke(graph, [], max_steps=8)
    assert len(err.value.state) == 8


def test_invoke_handler_failure_names_node():
    def boom(_):
        raise RuntimeError("kaput")

    graph = compile_graph(
        nodes={"fragile": boom}, edges={"fragile": END}, conditional_edges={}, entry="fragile"
    )
    with pytest.raises(RuntimeError, match="fragile"):
        invoke(graph, {})


# -- completion parsing ------------------------------------------------------------

def test_parse_action_completion():
    parsed = parse_completion("Thought: need tables\nAction: list_tables\nAction Input: ")
    assert parsed == ("need tables", "list_tables", "", None)


def test_parse_final_answer():
    parsed = parse_completion("Thought: done\nFinal Answer: 2.0")
    assert parsed == ("done", None, None, "2.0")


def test_parse_garbage_is_none():
    assert parse_completion("complete nonsense") is None


# -- react step ---------------------------------------------------------------------

def test_react_step_list_tables():
    catalog = price_catalog()
    tools = build_tools(catalog, top_k=10)
    config = AgentConfig()
    lm = ScriptedLmClient(
        [ScriptStep("Thought: need tables\nAction: list_tables\nAction Input: ")]
    )
    state = react_step(AgentState(question="which tables?"), lm, tools, catalog, config)
    assert state.step_count == 1
    entry = state.scratchpad[0]
    assert entry.action == "list_tables"
    assert entry.observation == "t"


def test_react_step_final_answer():
    catalog = price_catalog()
    tools = build_tools(catalog, top_k=10)
    lm = ScriptedLmClient([ScriptStep("Thought: trivial\nFinal Answer: 2.0")])
    state = react_step(AgentState(question="q"), lm, tools, catalog, AgentConfig())
    assert state.final_answer == "2.0"
    assert state.step_count == 1


def test_react_step_garbage_becomes_observation():
    catalog = price_catalog()
    tools = build_tools(catalog, top_k=10)
    lm = ScriptedLmClient([ScriptStep("???")])
    state = react_step(AgentState(question="q"), lm, tools, catalog, AgentConfig())
    assert state.final_answer is None
    assert state.step_count == 1
    assert "could not parse" in state.scratchpad[0].observation


def test_react_step_unknown_tool_observation():
    catalog = price_catalog()
    tools = build_tools(catalog, top_k=10)
    lm = ScriptedLmClient([ScriptStep("Thought: hm\nAction: fly\nAction Input: moon")])
    state = react_step(AgentState(question="q"), lm, tools, catalog, AgentConfig())
    assert "unknown tool" in state.scratchpad[0].observation


# -- the three transcript fixtures ----------------------------------------------------

AVERAGE_SCRIPT = [
    ScriptStep(
        "Thought: I should look at the tables first\n"
        "Action: list_tables\nAction Input: ",
        expect="What is the average of column price?",
    ),
    ScriptStep(
        "Thought: t has the prices; query the mean\n"
        "Action: query\nAction Input: SELECT AVG(price) FROM t",
        expect="Observation: t",
    ),
    ScriptStep(
        "Thought: the engine returned 2.0\nFinal Answer: 2.0",
        expect="avg_price",
    ),
]


def test_average_price_fixture():
    answer, transcript = run_agent(
        "What is the average of column price?", price_catalog(),
        ScriptedLmClient(AVERAGE_SCRIPT),
    )
    assert answer == "2.0"
    steps = transcript["scratchpad"]
    assert len(steps) == 3
    assert steps[0]["action"] == "list_tables"
    assert steps[0]["observation"] == "t"
    assert steps[1]["action"] == "query"
    assert steps[1]["action_input"] == "SELECT AVG(price) FROM t"
    assert "2.0" in steps[1]["observation"]
    assert steps[2]["action"] is None
    assert transcript["final_answer"] == "2.0"
    assert transcript["budget_exhausted"] is False


def test_unrelated_question_fixture():
    script = [ScriptStep("Thought: the tables say nothing about weather\nFinal Answer: I don't know")]
    answer, transcript = run_agent(
        "What's the weather?", price_catalog(), ScriptedLmClient(script)
    )
    assert answer == "I don't know"
    assert len(transcript["scratchpad"]) == 1


DML_SCRIPT = [
    ScriptStep("Thought: let me clear the table\nAction: query\nAction Input: DROP TABLE t"),
    ScriptStep(
        "Thought: forbidden; rewrite as a read\n"
        "Action: query\nAction Input: SELECT COUNT(*) FROM t",
        expect="DML_FORBIDDEN",
    ),
    ScriptStep("Thought: two rows\nFinal Answer: 2", expect="count"),
]


def test_dml_rewrite_fixture():
    catalog = price_catalog()
    answer, transcript = run_agent(
        "How many rows does t have?", catalog, ScriptedLmClient(DML_SCRIPT)
    )
    steps = transcript["scratchpad"]
    assert "DML_FORBIDDEN" in steps[0]["observation"]
    assert steps[1]["action_input"] == "SELECT COUNT(*) FROM t"
    assert answer == "2"


def test_fixture_replays_to_identical_state():
    first = run_agent(
        "What is the average of column price?", price_catalog(),
        ScriptedLmClient(AVERAGE_SCRIPT),
    )
    second = run_agent(
        "What is the average of column price?", price_catalog(),
        ScriptedLmClient(AVERAGE_SCRIPT),
    )
    assert json.dumps(first[1], sort_keys=True) == json.dumps(second[1], sort_keys=True)


def test_catalog_fingerprint_unchanged_by_runs():
    catalog = price_catalog()
    before = catalog_fingerprint(catalog)
    run_agent("What is the average of column price?", catalog, ScriptedLmClient(AVERAGE_SCRIPT))
    run_agent("How many rows does t have?", catalog, ScriptedLmClient(DML_SCRIPT))
    assert catalog_fingerprint(catalog) == before


def test_budget_exhaustion_answers_i_dont_know():
    looping = ScriptedLmClient(
        [ScriptStep("Thought: browse\nAction: list_tables\nAction Input: ")] * 10
    )
    answer, transcript = run_agent(
        "loop forever", price_catalog(), looping, AgentConfig(max_steps=4)
    )
    assert answer == "I don't know"
    assert transcript["budget_exhausted"] is True


def test_query_tool_never_executes_failing_checks():
    catalog = price_catalog()
    tools = build_tools(catalog, top_k=10)
    observation = tools["query"]("SELECT missing FROM t")
    assert "UNKNOWN_COLUMN" in observation
    observation = tools["query"]("DELETE FROM t")
    assert "DML_FORBIDDEN" in observation
    assert catalog["t"].row_count == 2


def test_query_checker_tool():
    tools = build_tools(price_catalog(), top_k=10)
    assert tools["query_checker"]("SELECT price FROM t") == "query is valid"
    assert "DML_FORBIDDEN" in tools["query_checker"]("DROP TABLE t")


def test_prompt_template_carries_the_contract():
    from flowforge.agent import build_prompt, default_prompt_template

    template = default_prompt_template()
    assert "{top_k}" in template
    assert "INSERT" in template and "DROP" in template  # DML prohibition spelled out
    assert "I don't know" in template

    from flowforge.agent import ScratchpadEntry

    catalog = price_catalog()
    tools = build_tools(catalog, top_k=7)
    state = AgentState(question="how many rows?")
    state.scratchpad.append(
        ScratchpadEntry(thought="look first", action="list_tables", action_input="", observation="t")
    )
    prompt = build_prompt(state, catalog, tools, AgentConfig(top_k=7))
    assert "7" in prompt
    assert "t" in prompt
    assert "how many rows?" in prompt
    assert "Observation: t" in prompt
    assert "query_checker" in prompt


def test_top_k_respected_by_query_tool():
    frame = Frame.from_columns([("n", INT64, ColumnRole.PLAIN, list(range(50)))])
    tools = build_tools({"big": frame}, top_k=5)
    observation = tools["query"]("SELECT n FROM big")
    assert len(observation.splitlines()) == 1 + 5  # header + top_k rows
