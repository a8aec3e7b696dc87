from .graph import END, StateGraph, compile_graph, invoke
from .react import (
    AgentConfig,
    AgentState,
    LmClient,
    ScratchpadEntry,
    ScriptStep,
    ScriptedLmClient,
    build_prompt,
    build_tools,
    default_prompt_template,
    parse_completion,
    react_step,
    run_agent,
)

__all__ = [
    "END",
    "StateGraph",
    "compile_graph",
    "invoke",
    "AgentConfig",
    "AgentState",
    "LmClient",
    "ScratchpadEntry",
    "ScriptStep",
    "ScriptedLmClient",
    "build_prompt",
    "build_tools",
    "default_prompt_template",
    "parse_completion",
    "react_step",
    "run_agent",
]
