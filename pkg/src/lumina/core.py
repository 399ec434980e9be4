"""Shared domain types, action parsing, config validation, and seeding.

Everything here is an immutable value: action calls, oracle configurations,
task instances, turns, and trajectories. Values serialize to a stable
line-delimited JSON schema that the rest of the package (and external
consumers) treat as the interchange format.
"""

from __future__ import annotations

import ast
import enum
import hashlib
import json
import random
import re
from dataclasses import dataclass, field
from typing import Any, Iterable, Iterator, Mapping, Sequence

Scalar = int | str | None

# Parameter order for every known action, used to map positional arguments.
ACTION_SIGNATURES: dict[str, tuple[str, ...]] = {
    "pop": ("id",),
    "done": (),
    "get_children": ("id",),
    "found": ("id",),
    "unreachable": (),
    "up": (),
    "down": (),
    "left": (),
    "right": (),
}


class LuminaError(Exception):
    """Base class for all package errors."""


# ---------------------------------------------------------------------------
# Actions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ActionCall:
    """A parsed agent action: a function name plus scalar arguments.

    ``args`` is stored as an ordered tuple of (name, value) pairs so the
    value is hashable and argument order survives serialization.
    """

    name: str
    args: tuple[tuple[str, Scalar], ...] = ()

    def __post_init__(self) -> None:
        if not self.name or not self.name.isidentifier():
            raise ValueError(f"action name must be an identifier, got {self.name!r}")
        for key, value in self.args:
            if not isinstance(key, str) or not key.isidentifier():
                raise ValueError(f"argument name must be an identifier, got {key!r}")
            if not _is_scalar(value):
                raise ValueError(f"argument {key}={value!r} is not a scalar")

    @classmethod
    def make(cls, name: str, **kwargs: Scalar) -> "ActionCall":
        return cls(name, tuple(kwargs.items()))

    def arg(self, key: str, default: Scalar = None) -> Scalar:
        for k, v in self.args:
            if k == key:
                return v
        return default

    def arg_names(self) -> tuple[str, ...]:
        return tuple(k for k, _ in self.args)

    def render(self) -> str:
        """Render as a python call, e.g. ``pop(id=3)``.

        ``parse_action`` inverts this for any call whose string arguments do
        not contain triple backticks.
        """
        inner = ", ".join(f"{k}={v!r}" for k, v in self.args)
        return f"{self.name}({inner})"

    def to_dict(self) -> dict[str, Any]:
        return {"name": self.name, "args": {k: v for k, v in self.args}}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ActionCall":
        return cls(data["name"], tuple(data.get("args", {}).items()))

    def __str__(self) -> str:
        return self.render()


def _is_scalar(value: Any) -> bool:
    # bool is an int subclass; the action vocabulary has no boolean arguments.
    return value is None or isinstance(value, str) or (isinstance(value, int) and not isinstance(value, bool))


class ParseErrorKind(str, enum.Enum):
    NO_CODE_BLOCK = "no_code_block"
    MULTIPLE_STATEMENTS = "multiple_statements"
    UNKNOWN_SYNTAX = "unknown_syntax"


class ParseError(LuminaError):
    """Raised when model text does not contain exactly one well-formed call."""

    def __init__(self, kind: ParseErrorKind, span: str, detail: str = ""):
        self.kind = kind
        self.span = span
        self.detail = detail
        super().__init__(f"{kind.value}: {detail or span[:120]!r}")


@dataclass(frozen=True)
class ParseFailure:
    """Serializable marker stored in a turn when parsing failed."""

    kind: str
    span: str

    @classmethod
    def from_error(cls, err: ParseError) -> "ParseFailure":
        return cls(err.kind.value, err.span)

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind, "span": self.span}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ParseFailure":
        return cls(data["kind"], data["span"])


# A language tag is only a tag when it sits alone on the opening-fence line;
# otherwise the first line is call text (e.g. ```done()```).
_FENCE_RE = re.compile(r"```(?:[A-Za-z0-9_+-]*[ \t]*\r?\n)?(.*?)```", re.DOTALL)


def parse_action(
    raw_output: str,
    signatures: Mapping[str, tuple[str, ...]] = ACTION_SIGNATURES,
) -> ActionCall:
    """Extract and parse the single function call from model output.

    The last triple-fenced code block wins. The block must contain exactly
    one call of the form ``name(k=v, ...)``; positional arguments are mapped
    through ``signatures``.
    """
    blocks = _FENCE_RE.findall(raw_output)
    if not blocks:
        raise ParseError(ParseErrorKind.NO_CODE_BLOCK, raw_output.strip(), "no fenced code block found")
    text = blocks[-1].strip()

    try:
        tree = ast.parse(text)
    except SyntaxError as exc:
        raise ParseError(ParseErrorKind.UNKNOWN_SYNTAX, text, f"not valid python: {exc.msg}") from exc

    if len(tree.body) == 0:
        raise ParseError(ParseErrorKind.UNKNOWN_SYNTAX, text, "code block is empty")
    if len(tree.body) > 1:
        raise ParseError(ParseErrorKind.MULTIPLE_STATEMENTS, text, f"{len(tree.body)} statements in code block")

    stmt = tree.body[0]
    if not isinstance(stmt, ast.Expr) or not isinstance(stmt.value, ast.Call):
        raise ParseError(ParseErrorKind.UNKNOWN_SYNTAX, text, "statement is not a function call")
    call = stmt.value
    if not isinstance(call.func, ast.Name):
        raise ParseError(ParseErrorKind.UNKNOWN_SYNTAX, text, "call target is not a plain name")
    name = call.func.id

    args: list[tuple[str, Scalar]] = []
    if call.args:
        params = signatures.get(name)
        if params is None:
            raise ParseError(
                ParseErrorKind.UNKNOWN_SYNTAX, text,
                f"positional arguments to unknown function {name!r} cannot be mapped",
            )
        if len(call.args) > len(params):
            raise ParseError(ParseErrorKind.UNKNOWN_SYNTAX, text, f"too many positional arguments for {name}()")
        for param, node in zip(params, call.args):
            args.append((param, _literal(node, text)))
    seen = {k for k, _ in args}
    for kw in call.keywords:
        if kw.arg is None:
            raise ParseError(ParseErrorKind.UNKNOWN_SYNTAX, text, "**kwargs is not supported")
        if kw.arg in seen:
            raise ParseError(ParseErrorKind.UNKNOWN_SYNTAX, text, f"duplicate argument {kw.arg!r}")
        seen.add(kw.arg)
        args.append((kw.arg, _literal(kw.value, text)))

    return ActionCall(name, tuple(args))


def _literal(node: ast.expr, span: str) -> Scalar:
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, ast.USub) and isinstance(node.operand, ast.Constant):
        inner = node.operand.value
        if isinstance(inner, int) and not isinstance(inner, bool):
            return -inner
    if isinstance(node, ast.Constant) and _is_scalar(node.value):
        return node.value
    raise ParseError(ParseErrorKind.UNKNOWN_SYNTAX, span, "arguments must be integer, string, or None literals")


# ---------------------------------------------------------------------------
# Oracle configuration
# ---------------------------------------------------------------------------


class ConfigError(LuminaError):
    """Raised for an invalid oracle configuration."""


@dataclass(frozen=True)
class OracleConfig:
    """Which context interventions are active for a run.

    History pruning removes the turn history, which is only safe when the
    state summary is present, so ``history`` requires ``state``. That leaves
    six valid configurations out of the eight flag combinations.
    """

    plan: bool = False
    state: bool = False
    history: bool = False

    def label(self) -> str:
        parts = [c for c, on in (("S", self.state), ("P", self.plan), ("H", self.history)) if on]
        return ",".join(parts) if parts else "none"

    @classmethod
    def from_label(cls, label: str) -> "OracleConfig":
        cleaned = label.strip().lower()
        if cleaned in ("", "none", "baseline"):
            return validate_oracle_config(False, False, False)
        flags = {"p": False, "s": False, "h": False}
        for token in re.split(r"[,+\s]+", cleaned):
            if token not in flags:
                raise ConfigError(f"unknown intervention {token!r} in config label {label!r}")
            flags[token] = True
        return validate_oracle_config(flags["p"], flags["s"], flags["h"])

    def to_dict(self) -> dict[str, bool]:
        return {"plan": self.plan, "state": self.state, "history": self.history}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "OracleConfig":
        return validate_oracle_config(
            bool(data.get("plan", False)), bool(data.get("state", False)), bool(data.get("history", False))
        )


def validate_oracle_config(plan: bool, state: bool, history: bool) -> OracleConfig:
    """Return the config, rejecting history pruning without state tracking."""
    if history and not state:
        raise ConfigError("history pruning requires the state tracking intervention")
    return OracleConfig(plan=plan, state=state, history=history)


#: The six valid configurations, in canonical sweep order.
ALL_CONFIGS: tuple[OracleConfig, ...] = (
    OracleConfig(),
    OracleConfig(plan=True),
    OracleConfig(state=True),
    OracleConfig(plan=True, state=True),
    OracleConfig(state=True, history=True),
    OracleConfig(plan=True, state=True, history=True),
)


# ---------------------------------------------------------------------------
# Seeding
# ---------------------------------------------------------------------------


def seeded_rng(seed: int, stream_label: str) -> random.Random:
    """A deterministic RNG keyed by (seed, label).

    Labels decorrelate independent uses of the same seed (e.g. world
    generation vs. policy noise) without any shared-stream coupling.
    """
    digest = hashlib.sha256(f"{seed}\x1f{stream_label}".encode()).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def derive_seed(base_seed: int, label: str) -> int:
    """A stable 63-bit child seed for (base_seed, label)."""
    digest = hashlib.sha256(f"{base_seed}\x1f{label}".encode()).digest()
    return int.from_bytes(digest[:8], "big") >> 1


# ---------------------------------------------------------------------------
# Task instances
# ---------------------------------------------------------------------------


class EnvKind(str, enum.Enum):
    LISTWORLD = "listworld"
    TREEWORLD = "treeworld"
    GRIDWORLD = "gridworld"


# World classes register here (envs does this at import) so instances can be
# deserialized without core depending on the environment modules.
WORLD_TYPES: dict[str, type] = {}


def register_world_type(env: EnvKind, cls: type) -> None:
    WORLD_TYPES[env.value] = cls


@dataclass(frozen=True)
class TaskInstance:
    """One procedurally generated episode definition."""

    id: str
    env: EnvKind
    world: Any
    optimal_steps: int
    turn_budget: int
    seed: int

    def __post_init__(self) -> None:
        if self.optimal_steps < 1:
            raise ValueError("optimal_steps must be positive")
        if self.turn_budget < self.optimal_steps:
            raise ValueError("turn_budget must be at least optimal_steps")

    @property
    def goal(self) -> dict[str, Any]:
        """The goal-predicate parameters, as the environment defines them."""
        return self.world.goal_params()

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "env": self.env.value,
            "world": self.world.to_dict(),
            "optimal_steps": self.optimal_steps,
            "turn_budget": self.turn_budget,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "TaskInstance":
        env = EnvKind(data["env"])
        world_cls = WORLD_TYPES.get(env.value)
        if world_cls is None:
            raise LuminaError(f"no world type registered for {env.value!r}")
        return cls(
            id=data["id"],
            env=env,
            world=world_cls.from_dict(data["world"]),
            optimal_steps=data["optimal_steps"],
            turn_budget=data["turn_budget"],
            seed=data["seed"],
        )


# ---------------------------------------------------------------------------
# Turns and trajectories
# ---------------------------------------------------------------------------


class TerminationCause(str, enum.Enum):
    AGENT_DONE = "agent_done"
    ENV_BUDGET = "env_budget"
    PARSE_FAILURE_LIMIT = "parse_failure_limit"


@dataclass(frozen=True)
class Turn:
    """One agent turn: what was sent, what came back, and how it scored.

    ``optimal`` is judged against the optimal-action set of the state the
    action was taken in, before the environment applied it.
    """

    index: int
    context_fingerprint: str
    raw_output: str
    parsed: ActionCall | ParseFailure
    optimal: bool
    observation: str

    def to_dict(self) -> dict[str, Any]:
        data: dict[str, Any] = {
            "index": self.index,
            "context_fingerprint": self.context_fingerprint,
            "raw_output": self.raw_output,
        }
        if isinstance(self.parsed, ActionCall):
            data["action"] = self.parsed.to_dict()
        else:
            data["parse_error"] = self.parsed.to_dict()
        data["optimal"] = self.optimal
        data["observation"] = self.observation
        return data

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "Turn":
        parsed: ActionCall | ParseFailure
        if "action" in data:
            parsed = ActionCall.from_dict(data["action"])
        else:
            parsed = ParseFailure.from_dict(data["parse_error"])
        return cls(
            index=data["index"],
            context_fingerprint=data["context_fingerprint"],
            raw_output=data["raw_output"],
            parsed=parsed,
            optimal=data["optimal"],
            observation=data["observation"],
        )


@dataclass(frozen=True)
class Trajectory:
    """A completed episode: ordered turns plus the outcome."""

    instance_id: str
    config: OracleConfig
    turns: tuple[Turn, ...]
    success: bool
    terminated_by: TerminationCause
    meta: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.success and self.terminated_by is not TerminationCause.AGENT_DONE:
            raise ValueError("a successful episode must terminate through the agent's action")

    def to_dict(self) -> dict[str, Any]:
        return {
            "instance_id": self.instance_id,
            "config": self.config.to_dict(),
            "success": self.success,
            "terminated_by": self.terminated_by.value,
            "turns": [t.to_dict() for t in self.turns],
            "meta": dict(self.meta),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "Trajectory":
        return cls(
            instance_id=data["instance_id"],
            config=OracleConfig.from_dict(data["config"]),
            turns=tuple(Turn.from_dict(t) for t in data["turns"]),
            success=data["success"],
            terminated_by=TerminationCause(data["terminated_by"]),
            meta=dict(data.get("meta", {})),
        )


# ---------------------------------------------------------------------------
# Serialization helpers
# ---------------------------------------------------------------------------


def to_json_line(value: TaskInstance | Trajectory) -> str:
    return json.dumps(value.to_dict(), separators=(",", ":"), ensure_ascii=False)


class DecodeError(LuminaError):
    """Raised when a JSON-lines record cannot be decoded."""

    def __init__(self, path: str, line_number: int, reason: str):
        self.path = path
        self.line_number = line_number
        self.reason = reason
        super().__init__(f"{path}:{line_number}: {reason}")


def _read_jsonl(path: str) -> Iterator[tuple[int, dict[str, Any]]]:
    with open(path, "r", encoding="utf-8") as fh:
        for line_number, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                yield line_number, json.loads(line)
            except json.JSONDecodeError as exc:
                raise DecodeError(path, line_number, f"invalid JSON: {exc.msg}") from exc


def write_instances(path: str, instances: Iterable[TaskInstance]) -> int:
    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        for inst in instances:
            fh.write(to_json_line(inst) + "\n")
            count += 1
    return count


def read_instances(path: str) -> list[TaskInstance]:
    out = []
    for line_number, data in _read_jsonl(path):
        try:
            out.append(TaskInstance.from_dict(data))
        except (KeyError, ValueError) as exc:
            raise DecodeError(path, line_number, f"bad instance record: {exc}") from exc
    return out


def read_trajectories(path: str) -> list[Trajectory]:
    out = []
    for line_number, data in _read_jsonl(path):
        try:
            out.append(Trajectory.from_dict(data))
        except (KeyError, ValueError) as exc:
            raise DecodeError(path, line_number, f"bad trajectory record: {exc}") from exc
    return out


def fingerprint_messages(messages: Sequence[Mapping[str, str]]) -> str:
    """A short stable hash of a chat message sequence."""
    canonical = json.dumps(
        [{"role": m["role"], "content": m["content"]} for m in messages],
        separators=(",", ":"),
        ensure_ascii=False,
    )
    return hashlib.sha256(canonical.encode()).hexdigest()[:16]
