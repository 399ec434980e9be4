"""Exact optimal-action sets and the three context interventions.

An action is optimal when at least one optimal policy takes it from the
current state, so the oracle returns sets: duplicated list tokens, equal
cost grid paths, and interchangeable frontier expansions all yield multiple
optima. The interventions (plan hint, state summary, history pruning)
render from the same ground truth and compose into the agent's context.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Sequence

from . import _kernels as kernels
from . import prompts
from .core import ActionCall, EnvKind, LuminaError, OracleConfig, TaskInstance
from .envs import gridworld, listworld, treeworld
from .envs.gridworld import GridState
from .envs.listworld import ListState
from .envs.treeworld import TreeState

TREEWORLD_MODES = ("exploration", "hindsight")


class UnsolvableState(LuminaError):
    """The target list can no longer be reached; a correct harness only asks
    for optimal actions on solvable states."""


class BudgetInfeasible(LuminaError):
    """The remaining move budget is below the min cost to the goal, so no
    action is optimal any more."""


# ---------------------------------------------------------------------------
# ListWorld
# ---------------------------------------------------------------------------


def _intern(state: ListState) -> tuple[list[int], list[int]]:
    vocab: dict[str, int] = {}
    for token in state.current + state.target:
        if token not in vocab:
            vocab[token] = len(vocab)
    return [vocab[t] for t in state.current], [vocab[t] for t in state.target]


def list_solvable(state: ListState) -> bool:
    """Whether the target is still reachable under left-to-right popping."""
    current, target = _intern(state)
    return kernels.list_solvable(current, target, state.lock)


def optimal_actions_listworld(state: ListState) -> frozenset[ActionCall]:
    """{done} at the goal, otherwise every solvability-preserving pop."""
    if state.at_goal:
        return frozenset({ActionCall.make("done")})
    current, target = _intern(state)
    if not kernels.list_solvable(current, target, state.lock):
        raise UnsolvableState(
            f"target {state.target!r} unreachable from {state.current!r} with lock {state.lock}"
        )
    pops = kernels.list_optimal_pops(current, target, state.lock)
    return frozenset(ActionCall.make("pop", id=i) for i in pops)


# ---------------------------------------------------------------------------
# TreeWorld
# ---------------------------------------------------------------------------


def optimal_actions_treeworld(state: TreeState, mode: str = "exploration") -> frozenset[ActionCall]:
    """Exploration mode: any informative frontier expansion (or the forced
    terminal report). Hindsight mode: only expansions on the true
    root-to-target path; identical to exploration when the target is absent,
    since proving absence requires expanding everything anyway."""
    if mode not in TREEWORLD_MODES:
        raise ValueError(f"unknown treeworld mode {mode!r}")
    world = state.world
    if state.target_revealed:
        return frozenset({ActionCall.make("found", id=world.target_id)})
    frontier = state.frontier()
    if world.target_id is None and not frontier:
        return frozenset({ActionCall.make("unreachable")})
    candidates = frontier
    if mode == "hindsight" and world.target_id is not None:
        on_path = set(treeworld.path_from_root(world, world.target_id))
        candidates = tuple(nid for nid in frontier if nid in on_path)
    return frozenset(ActionCall.make("get_children", id=nid) for nid in candidates)


def _canonical_treeworld(state: TreeState) -> ActionCall | None:
    """The plan oracle's pick: the deepest revealed node on the true path
    (so a follower finishes in exactly T* steps), or the oldest frontier
    node when the target is absent."""
    world = state.world
    if state.target_revealed:
        return ActionCall.make("found", id=world.target_id)
    frontier = state.frontier()
    if not frontier:
        return ActionCall.make("unreachable") if world.target_id is None else None
    if world.target_id is None:
        return ActionCall.make("get_children", id=frontier[0])
    path = treeworld.path_from_root(world, world.target_id)
    deepest = max(i for i, nid in enumerate(path) if nid in state.revealed)
    return ActionCall.make("get_children", id=path[deepest])


# ---------------------------------------------------------------------------
# GridWorld
# ---------------------------------------------------------------------------


def grid_min_cost(world: gridworld.GridWorld, origin: tuple[int, int]) -> dict[tuple[int, int], int]:
    """Min cost from ``origin`` to every cell; entering a hole costs 4."""
    return gridworld.min_cost_map(world, origin)


def optimal_actions_gridworld(state: GridState) -> frozenset[ActionCall]:
    """{done} at the goal, otherwise every move that starts a min-cost path.

    Slack never makes a detour optimal: the task demands the fewest moves.
    """
    if state.at_goal:
        return frozenset({ActionCall.make("done")})
    need = gridworld.cost_to_goal(state.world, state.position)
    if state.remaining_moves < need:
        raise BudgetInfeasible(
            f"need {need} moves from {state.position} but only {state.remaining_moves} remain"
        )
    return frozenset(ActionCall.make(m) for m in gridworld.optimal_moves(state.world, state.position))


def _canonical_gridworld(state: GridState) -> ActionCall | None:
    if state.at_goal:
        return ActionCall.make("done")
    moves = gridworld.optimal_moves(state.world, state.position)
    if state.remaining_moves < gridworld.cost_to_goal(state.world, state.position):
        return None
    return ActionCall.make(moves[0])


# ---------------------------------------------------------------------------
# Dispatch
# ---------------------------------------------------------------------------


def optimal_actions(
    instance: TaskInstance, state: Any, treeworld_mode: str = "exploration"
) -> frozenset[ActionCall]:
    if instance.env is EnvKind.LISTWORLD:
        return optimal_actions_listworld(state)
    if instance.env is EnvKind.TREEWORLD:
        return optimal_actions_treeworld(state, treeworld_mode)
    return optimal_actions_gridworld(state)


def safe_optimal_actions(
    instance: TaskInstance, state: Any, treeworld_mode: str = "exploration"
) -> frozenset[ActionCall]:
    """Like ``optimal_actions`` but empty once the episode is doomed; used
    for scoring, where every action from a doomed state counts non-optimal."""
    try:
        return optimal_actions(instance, state, treeworld_mode)
    except (UnsolvableState, BudgetInfeasible):
        return frozenset()


def canonical_optimal_action(instance: TaskInstance, state: Any) -> ActionCall | None:
    """A deterministic member of the optimal set: lowest pop index, deepest
    on-path frontier node, first optimal direction in up/down/left/right
    order. None when no optimal action exists."""
    if instance.env is EnvKind.LISTWORLD:
        if state.at_goal:
            return ActionCall.make("done")
        try:
            actions = optimal_actions_listworld(state)
        except UnsolvableState:
            return None
        return min(actions, key=lambda a: a.arg("id"))
    if instance.env is EnvKind.TREEWORLD:
        return _canonical_treeworld(state)
    return _canonical_gridworld(state)


# ---------------------------------------------------------------------------
# Interventions
# ---------------------------------------------------------------------------


def render_plan_hint(instance: TaskInstance, state: Any) -> str:
    """A single-turn subtask description whose satisfying action is a member
    of the optimal set."""
    action = canonical_optimal_action(instance, state)
    if action is None:
        return prompts.render_intervention("hint.none")
    env = instance.env
    if env is EnvKind.LISTWORLD:
        if action.name == "done":
            return prompts.render_intervention("listworld.hint.done")
        idx = action.arg("id")
        return prompts.render_intervention("listworld.hint.pop", index=idx, value=state.current[idx])
    if env is EnvKind.TREEWORLD:
        if action.name == "found":
            return prompts.render_intervention("treeworld.hint.found", id=action.arg("id"))
        if action.name == "unreachable":
            return prompts.render_intervention("treeworld.hint.unreachable")
        return prompts.render_intervention("treeworld.hint.expand", id=action.arg("id"))
    if action.name == "done":
        return prompts.render_intervention("gridworld.hint.done")
    return prompts.render_intervention("gridworld.hint.move", direction=action.name)


def render_state_summary(instance: TaskInstance, state: Any, include_lock: bool = True) -> str:
    """A compact, faithful statement of the agent's precise state; sufficient
    on its own for optimal decision-making."""
    env = instance.env
    if env is EnvKind.LISTWORLD:
        current = repr(list(state.current))
        if not include_lock:
            return prompts.render_intervention("listworld.state.nolock", current=current)
        if state.lock == 0:
            return prompts.render_intervention("listworld.state.unlocked", current=current)
        return prompts.render_intervention("listworld.state.locked", current=current, lock=state.lock)
    if env is EnvKind.TREEWORLD:
        return prompts.render_intervention(
            "treeworld.state",
            tree_info=treeworld.render_known_info(state),
            frontier=repr(list(state.frontier())),
        )
    return prompts.render_intervention(
        "gridworld.state",
        position=state.position,
        cost_used=state.cost_used,
        remaining=state.remaining_moves,
    )


@dataclass(frozen=True)
class InterventionText:
    """Rendered oracle texts; a field is set exactly when its flag is active."""

    plan_hint: str | None = None
    state_summary: str | None = None
    rewritten_task: str | None = None

    def oracle_message(self) -> str | None:
        lines = [t for t in (self.plan_hint, self.state_summary) if t is not None]
        return "\n".join(lines) if lines else None


def compute_interventions(
    instance: TaskInstance, state: Any, config: OracleConfig
) -> InterventionText:
    return InterventionText(
        plan_hint=render_plan_hint(instance, state) if config.plan else None,
        state_summary=render_state_summary(instance, state) if config.state else None,
        rewritten_task=prompts.rewritten_task_text(instance, state) if config.history else None,
    )


def build_context(
    bundle: prompts.PromptBundle,
    instance: TaskInstance,
    state: Any,
    history: Sequence[tuple[str, str]],
    config: OracleConfig,
) -> list[dict[str, str]]:
    """Compose the message sequence the policy sees this turn.

    With no flags the output is exactly the unintervened context. History
    pruning drops all prior turns and swaps in the rewritten task; the plan
    hint and state summary arrive as one fresh environment message after
    the latest observation.
    """
    iv = compute_interventions(instance, state, config)
    messages = [{"role": "system", "content": bundle.system_text}]
    if config.history:
        messages.append({"role": "user", "content": iv.rewritten_task})
    else:
        messages.append({"role": "user", "content": bundle.task_text})
        for raw, observation in history:
            messages.append({"role": "assistant", "content": raw})
            messages.append({"role": "user", "content": observation})
    oracle_message = iv.oracle_message()
    if oracle_message is not None:
        messages.append({"role": "user", "content": oracle_message})
    return messages
