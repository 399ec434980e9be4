"""The three game environments behind one reset/step interface.

Each environment module provides procedural generation, an immutable state
type, a pure transition function, and the prompt placeholder fills for its
task template. ``HOOKS`` exposes those uniformly for the episode runner,
the oracle, and the bindings.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable

from ..core import ActionCall, EnvKind, TaskInstance, register_world_type

DEFAULT_BUDGET_M = 2
DEFAULT_BUDGET_N = 5


def horizon_budget(t_star: int, m: int = DEFAULT_BUDGET_M, n: int = DEFAULT_BUDGET_N) -> int:
    """Turn cap m*T* + n for an instance whose optimal policy takes T* actions."""
    if t_star < 1 or m < 1 or n < 0:
        raise ValueError("need t_star >= 1, m >= 1, n >= 0")
    return m * t_star + n


@dataclass(frozen=True)
class StepResult:
    """Observation plus termination flags for one environment step."""

    observation: str
    terminal: bool = False
    success: bool = False

    def __post_init__(self) -> None:
        if self.success and not self.terminal:
            raise ValueError("success implies terminal")


#: Observation returned for a turn whose model output failed to parse.
PARSE_ERROR_OBSERVATION = (
    "Error: could not parse an action from your response. "
    "Provide a single python function call enclosed in a code block."
)


@dataclass(frozen=True)
class EnvHooks:
    """Uniform access to one environment's machinery."""

    kind: EnvKind
    initial_state: Callable[[Any], Any]
    step: Callable[[Any, ActionCall], tuple[Any, StepResult]]
    legal_actions: Callable[[Any], list[ActionCall]]
    placeholders: Callable[[Any], dict[str, str]]
    rewrite_placeholders: Callable[[Any], dict[str, str]]
    terminal_action_names: frozenset[str]


from . import gridworld, listworld, treeworld  # noqa: E402  (need StepResult defined first)

register_world_type(EnvKind.LISTWORLD, listworld.ListWorld)
register_world_type(EnvKind.TREEWORLD, treeworld.TreeWorld)
register_world_type(EnvKind.GRIDWORLD, gridworld.GridWorld)

HOOKS: dict[EnvKind, EnvHooks] = {
    EnvKind.LISTWORLD: EnvHooks(
        kind=EnvKind.LISTWORLD,
        initial_state=listworld.initial_state,
        step=listworld.step_listworld,
        legal_actions=listworld.legal_actions,
        placeholders=listworld.placeholders,
        rewrite_placeholders=listworld.rewrite_placeholders,
        terminal_action_names=frozenset({"done"}),
    ),
    EnvKind.TREEWORLD: EnvHooks(
        kind=EnvKind.TREEWORLD,
        initial_state=treeworld.initial_state,
        step=treeworld.step_treeworld,
        legal_actions=treeworld.legal_actions,
        placeholders=treeworld.placeholders,
        rewrite_placeholders=treeworld.rewrite_placeholders,
        terminal_action_names=frozenset({"found", "unreachable"}),
    ),
    EnvKind.GRIDWORLD: EnvHooks(
        kind=EnvKind.GRIDWORLD,
        initial_state=gridworld.initial_state,
        step=gridworld.step_gridworld,
        legal_actions=gridworld.legal_actions,
        placeholders=gridworld.placeholders,
        rewrite_placeholders=gridworld.rewrite_placeholders,
        terminal_action_names=frozenset({"done"}),
    ),
}


def hooks_for(env: EnvKind) -> EnvHooks:
    return HOOKS[env]


def reset(instance: TaskInstance) -> Any:
    """Fresh environment state for an instance."""
    return HOOKS[instance.env].initial_state(instance.world)


gen_listworld = listworld.gen_listworld
gen_treeworld = treeworld.gen_treeworld
gen_gridworld = gridworld.gen_gridworld
step_listworld = listworld.step_listworld
step_treeworld = treeworld.step_treeworld
step_gridworld = gridworld.step_gridworld
