"""Component manifest and registry.

Every component kind is described by a ComponentSpec (phase, parameter
schema, ports) and backed by a pure execute function mapping input frames to
output frames / model artifacts. The manifest is the single source of truth
for flow validation and for the UI palette (GET /components).
"""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import ComponentError
from ..stage import StagePhase

SCALAR_TYPES = {"int", "float", "str", "bool", "list", "map", "scalar"}


@dataclass(frozen=True)
class ParamSpec:
    name: str
    type: str
    required: bool = False
    default: object = None
    doc: str = ""

    def __post_init__(self):
        if self.type not in SCALAR_TYPES:
            raise ValueError(f"unknown param type {self.type!r}")
        if self.required and self.default is not None:
            raise ValueError(f"required param {self.name!r} cannot have a default")


@dataclass(frozen=True)
class ComponentSpec:
    kind: str
    phase: StagePhase
    params: tuple[ParamSpec, ...]
    in_ports: tuple[str, ...]
    out_ports: tuple[str, ...]
    doc: str = ""
    variadic_in: bool = False  # in0..in{arity-1}, driven by the "arity" param
    variadic_out: bool = False  # out0..out{ways-1}, driven by the "ways" param

    def ports_for(self, params: dict) -> tuple[tuple[str, ...], tuple[str, ...]]:
        ins = self.in_ports
        outs = self.out_ports
        if self.variadic_in:
            arity = params.get("arity", _default_of(self, "arity"))
            ins = tuple(f"in{i}" for i in range(int(arity)))
        if self.variadic_out:
            ways = params.get("ways", _default_of(self, "ways"))
            outs = tuple(f"out{i}" for i in range(int(ways)))
        return ins, outs

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "phase": self.phase.value,
            "params": [
                {
                    "name": p.name,
                    "type": p.type,
                    "required": p.required,
                    "default": p.default,
                    "doc": p.doc,
                }
                for p in self.params
            ],
            "in_ports": list(self.in_ports),
            "out_ports": list(self.out_ports),
            "variadic_in": self.variadic_in,
            "variadic_out": self.variadic_out,
            "doc": self.doc,
        }


def _default_of(spec: ComponentSpec, name: str):
    for p in spec.params:
        if p.name == name:
            return p.default
    return None


def _type_ok(value, type_name: str) -> bool:
    if type_name == "int":
        return isinstance(value, int) and not isinstance(value, bool)
    if type_name == "float":
        return isinstance(value, (int, float)) and not isinstance(value, bool)
    if type_name == "str":
        return isinstance(value, str)
    if type_name == "bool":
        return isinstance(value, bool)
    if type_name == "list":
        return isinstance(value, list)
    if type_name == "map":
        return isinstance(value, dict)
    return isinstance(value, (int, float, str, bool))  # scalar


def validate_params(spec: ComponentSpec, params: dict) -> list[str]:
    """Human-readable problems with a node's params; empty list = fine."""
    problems = []
    known = {p.name for p in spec.params}
    for p in spec.params:
        if p.name not in params:
            if p.required:
                problems.append(f"missing required param {p.name!r}")
            continue
        if not _type_ok(params[p.name], p.type):
            problems.append(
                f"param {p.name!r} expects {p.type}, got {params[p.name]!r}"
            )
    for name in sorted(params):
        if name not in known:
            problems.append(f"unknown param {name!r}")
    return problems


def resolve_params(spec: ComponentSpec, params: dict) -> dict:
    problems = validate_params(spec, params)
    if problems:
        raise ComponentError(f"{spec.kind}: " + "; ".join(problems))
    resolved = {}
    for p in spec.params:
        if p.name in params:
            value = params[p.name]
            if p.type == "float" and isinstance(value, int):
                value = float(value)
            resolved[p.name] = value
        elif p.default is not None or not p.required:
            resolved[p.name] = p.default
    return resolved


@dataclass
class ComponentInstance:
    spec: ComponentSpec
    params: dict

    def execute(self, inputs: dict) -> dict:
        fn = _EXECUTORS[self.spec.kind]
        return fn(self.params, inputs)


_REGISTRY: dict[str, ComponentSpec] = {}
_EXECUTORS: dict[str, object] = {}


def register(spec: ComponentSpec, execute_fn):
    if spec.kind in _REGISTRY:
        raise ValueError(f"component kind {spec.kind!r} already registered")
    _REGISTRY[spec.kind] = spec
    _EXECUTORS[spec.kind] = execute_fn


def get_spec(kind: str) -> ComponentSpec | None:
    return _REGISTRY.get(kind)


def all_specs() -> list[ComponentSpec]:
    return [spec for _, spec in sorted(_REGISTRY.items())]


def create_instance(kind: str, params: dict) -> ComponentInstance:
    spec = _REGISTRY.get(kind)
    if spec is None:
        raise ComponentError(f"unknown component kind {kind!r}")
    return ComponentInstance(spec, resolve_params(spec, params))


def manifest_json() -> list[dict]:
    return [spec.to_json() for spec in all_specs()]


# Importing the implementation modules registers every built-in kind.
from . import io, preprocess, features, models  # noqa: E402,F401
