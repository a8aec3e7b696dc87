"""ReAct agent over the SQL tools: thought, action, observation cycles.

The model client is pluggable; tests use ScriptedLmClient, a deterministic
fixture-driven stand-in (each script step may pin a substring the prompt
must contain, then returns a canned completion). A live client only has to
provide ``complete(prompt) -> str``.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from importlib import resources
from typing import Mapping, Protocol

from ..errors import AgentBudgetError, SqlError
from ..frame import Frame
from ..minisql import check_query, list_tables, parse_sql, render_result, table_info
from ..minisql.engine import execute_query
from .graph import END, compile_graph, invoke


class LmClient(Protocol):
    def complete(self, prompt: str) -> str: ...


@dataclass
class ScriptStep:
    completion: str
    expect: str | None = None  # substring the prompt must contain


class ScriptedLmClient:
    """Replays canned completions in order; deterministic by construction."""

    def __init__(self, steps: list[ScriptStep]):
        self.steps = list(steps)
        self.cursor = 0

    @classmethod
    def from_fixture(cls, path) -> "ScriptedLmClient":
        doc = json.loads(open(path, encoding="utf-8").read())
        return cls([ScriptStep(s["completion"], s.get("expect")) for s in doc["steps"]])

    def complete(self, prompt: str) -> str:
        if self.cursor >= len(self.steps):
            raise RuntimeError("script exhausted: no completion for this prompt")
        step = self.steps[self.cursor]
        if step.expect is not None and step.expect not in prompt:
            raise RuntimeError(
                f"script step {self.cursor}: prompt does not contain {step.expect!r}"
            )
        self.cursor += 1
        return step.completion


@dataclass
class AgentConfig:
    top_k: int = 10
    max_steps: int = 8
    prompt_template: str | None = None

    def __post_init__(self):
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")


@dataclass
class ScratchpadEntry:
    thought: str
    action: str | None = None
    action_input: str | None = None
    observation: str | None = None

    def to_json(self) -> dict:
        return {
            "thought": self.thought,
            "action": self.action,
            "action_input": self.action_input,
            "observation": self.observation,
        }


@dataclass
class AgentState:
    question: str
    scratchpad: list[ScratchpadEntry] = field(default_factory=list)
    final_answer: str | None = None
    budget_exhausted: bool = False

    @property
    def step_count(self) -> int:
        return len(self.scratchpad)

    def to_json(self) -> dict:
        return {
            "question": self.question,
            "scratchpad": [e.to_json() for e in self.scratchpad],
            "final_answer": self.final_answer,
            "budget_exhausted": self.budget_exhausted,
        }


def default_prompt_template() -> str:
    return resources.files("flowforge.agent").joinpath("prompt.txt").read_text("utf-8")


# -- tools --------------------------------------------------------------------

def build_tools(catalog: Mapping[str, Frame], top_k: int) -> dict:
    """The four catalog tools. The query tool always checks before executing,
    so a failing check becomes an observation the model can react to."""

    def tool_list_tables(_: str) -> str:
        names = list_tables(catalog)
        return ", ".join(names) if names else "(no tables)"

    def tool_table_info(arg: str) -> str:
        try:
            return table_info(catalog, arg.strip())
        except SqlError as exc:
            return _issues_text(exc)

    def tool_query_checker(arg: str) -> str:
        issues = check_query(arg, catalog)
        if not issues:
            return "query is valid"
        return "; ".join(f"{i.code}: {i.message}" for i in issues)

    def tool_query(arg: str) -> str:
        issues = [i for i in check_query(arg, catalog) if i.severity == "error"]
        if issues:
            return "; ".join(f"{i.code}: {i.message}" for i in issues)
        try:
            result = execute_query(parse_sql(arg), catalog, top_k)
        except SqlError as exc:
            return _issues_text(exc)
        return render_result(result)

    return {
        "list_tables": tool_list_tables,
        "table_info": tool_table_info,
        "query_checker": tool_query_checker,
        "query": tool_query,
    }


def _issues_text(exc: SqlError) -> str:
    if exc.issues:
        return "; ".join(f"{i.code}: {i.message}" for i in exc.issues)
    return str(exc)


# -- prompt / completion plumbing ------------------------------------------------

def build_prompt(state: AgentState, catalog: Mapping[str, Frame], tools: dict, config: AgentConfig) -> str:
    template = config.prompt_template or default_prompt_template()
    scratchpad_lines = []
    for entry in state.scratchpad:
        scratchpad_lines.append(f"Thought: {entry.thought}")
        if entry.action is not None:
            scratchpad_lines.append(f"Action: {entry.action}")
            scratchpad_lines.append(f"Action Input: {entry.action_input or ''}")
        if entry.observation is not None:
            scratchpad_lines.append(f"Observation: {entry.observation}")
    return template.format(
        top_k=config.top_k,
        tables=", ".join(list_tables(catalog)) or "(none)",
        tools=", ".join(sorted(tools)),
        question=state.question,
        scratchpad="\n".join(scratchpad_lines),
    )


_FINAL_RE = re.compile(r"Final Answer:\s*(.*)", re.DOTALL)
_THOUGHT_RE = re.compile(r"Thought:\s*(.*?)\s*(?=Action:|Final Answer:|$)", re.DOTALL)
_ACTION_RE = re.compile(r"Action:\s*([^\n]*)")
_INPUT_RE = re.compile(r"Action Input:\s*([^\n]*)")


def parse_completion(text: str):
    """Extract (thought, action, action_input, final_answer); a completion
    must carry either an action or a final answer to parse."""
    thought_match = _THOUGHT_RE.search(text)
    thought = thought_match.group(1).strip() if thought_match else ""
    final = _FINAL_RE.search(text)
    if final:
        return thought, None, None, final.group(1).strip()
    action_match = _ACTION_RE.search(text)
    if action_match:
        input_match = _INPUT_RE.search(text)
        action_input = input_match.group(1).strip() if input_match else ""
        return thought, action_match.group(1).strip(), action_input, None
    return None


# -- the ReAct cycle ----------------------------------------------------------------

def react_step(state: AgentState, lm: LmClient, tools: dict,
               catalog: Mapping[str, Frame], config: AgentConfig) -> AgentState:
    """One full cycle: prompt the model, then either dispatch the chosen tool
    and record its observation, or accept a final answer. Unparsable
    completions become parse-failure observations so the loop can recover."""
    if state.final_answer is not None:
        raise ValueError("agent already produced a final answer")
    _plan_node(state, lm, tools, catalog, config)
    if state.final_answer is None and state.scratchpad and state.scratchpad[-1].action:
        _act_node(state, tools)
    return state


def _plan_node(state: AgentState, lm, tools, catalog, config) -> AgentState:
    prompt = build_prompt(state, catalog, tools, config)
    completion = lm.complete(prompt)
    parsed = parse_completion(completion)
    if parsed is None:
        state.scratchpad.append(
            ScratchpadEntry(
                thought="",
                observation="could not parse the model output; "
                "expected Thought/Action/Action Input or Final Answer",
            )
        )
        return state
    thought, action, action_input, final = parsed
    if final is not None:
        state.scratchpad.append(ScratchpadEntry(thought=thought))
        state.final_answer = final
        return state
    state.scratchpad.append(
        ScratchpadEntry(thought=thought, action=action, action_input=action_input)
    )
    return state


def _act_node(state: AgentState, tools: dict) -> AgentState:
    entry = state.scratchpad[-1]
    tool = tools.get(entry.action or "")
    if tool is None:
        entry.observation = (
            f"unknown tool {entry.action!r}; available: " + ", ".join(sorted(tools))
        )
        return state
    entry.observation = tool(entry.action_input or "")
    return state


def run_agent(question: str, catalog: Mapping[str, Frame], lm: LmClient,
              config: AgentConfig | None = None) -> tuple[str, dict]:
    """Answer a question over the catalog; returns (answer, transcript).

    The loop is the two-node agent/tools graph: the agent node plans via the
    model, a conditional edge either finishes or dispatches to the tools
    node, and tools always loop back. Budget exhaustion degrades to
    "I don't know" with a flag in the transcript.
    """
    config = config or AgentConfig()
    tools = build_tools(catalog, config.top_k)

    def agent_node(state: AgentState) -> AgentState:
        return _plan_node(state, lm, tools, catalog, config)

    def tools_node(state: AgentState) -> AgentState:
        return _act_node(state, tools)

    def route(state: AgentState) -> str:
        if state.final_answer is not None:
            return END
        last = state.scratchpad[-1] if state.scratchpad else None
        if last is not None and last.action and last.observation is None:
            return "tools"
        return "agent"  # parse failure: ask the model again

    graph = compile_graph(
        nodes={"agent": agent_node, "tools": tools_node},
        edges={"tools": "agent"},
        conditional_edges={"agent": route},
        entry="agent",
    )
    state = AgentState(question=question)
    try:
        state = invoke(graph, state, max_steps=config.max_steps)
        answer = state.final_answer if state.final_answer is not None else "I don't know"
    except AgentBudgetError as exc:
        state = exc.state or state
        state.budget_exhausted = True
        answer = "I don't know"
    transcript = state.to_json()
    transcript["answer"] = answer
    return answer, transcript
