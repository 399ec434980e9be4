"""ListWorld: prune an initial list down to a target list with pop(id).

Pops must proceed left to right: after popping index i the surviving
elements before i are locked and can never be removed, which makes every
wrong pop irrecoverable.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Mapping

from ..core import ActionCall, EnvKind, TaskInstance, seeded_rng

#: Small vocabulary so longer lists naturally contain duplicates, which is
#: what creates multiple equally optimal pops.
TOKENS = ("apple", "brick", "cloud", "drum", "fern", "grape", "harp", "iris", "jade", "kite")


@dataclass(frozen=True)
class ListWorld:
    initial: tuple[str, ...]
    target: tuple[str, ...]

    def goal_params(self) -> dict[str, Any]:
        return {"target": list(self.target)}

    def to_dict(self) -> dict[str, Any]:
        return {"initial": list(self.initial), "target": list(self.target)}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ListWorld":
        return cls(initial=tuple(data["initial"]), target=tuple(data["target"]))


@dataclass(frozen=True)
class ListState:
    initial: tuple[str, ...]
    current: tuple[str, ...]
    target: tuple[str, ...]
    lock: int

    def __post_init__(self) -> None:
        if not 0 <= self.lock <= len(self.current):
            raise ValueError("lock must lie within the current list")

    @property
    def at_goal(self) -> bool:
        return self.current == self.target


def initial_state(world: ListWorld) -> ListState:
    return ListState(initial=world.initial, current=world.initial, target=world.target, lock=0)


def gen_listworld(target_len: int, num_pops: int, seed: int) -> TaskInstance:
    """Generate an instance whose target keeps ``target_len`` of the
    ``target_len + num_pops`` initial elements."""
    if target_len < 0 or num_pops < 0:
        raise ValueError("target_len and num_pops must be non-negative")
    from . import horizon_budget

    rng = seeded_rng(seed, "gen/listworld")
    total = target_len + num_pops
    initial = tuple(rng.choice(TOKENS) for _ in range(total))
    keep = sorted(rng.sample(range(total), target_len))
    target = tuple(initial[i] for i in keep)
    t_star = num_pops + 1
    return TaskInstance(
        id=f"listworld-t{target_len}-p{num_pops}-{seed:016x}",
        env=EnvKind.LISTWORLD,
        world=ListWorld(initial=initial, target=target),
        optimal_steps=t_star,
        turn_budget=horizon_budget(t_star),
        seed=seed,
    )


def step_listworld(state: ListState, action: ActionCall) -> tuple[ListState, "StepResult"]:
    from . import StepResult

    if action.name == "done":
        if action.args:
            return state, StepResult("Error: done() takes no arguments.")
        return state, StepResult("Episode finished.", terminal=True, success=state.at_goal)

    if action.name == "pop":
        idx = action.arg("id")
        if action.arg_names() != ("id",) or not isinstance(idx, int):
            return state, StepResult("Error: pop() requires a single integer 'id' argument.")
        if idx < 0 or idx >= len(state.current):
            return state, StepResult(f"Error: index {idx} is out of range for the current list.")
        if idx < state.lock:
            return state, StepResult(
                f"Error: index {idx} is locked; elements before index {state.lock} can no longer be removed."
            )
        current = state.current[:idx] + state.current[idx + 1 :]
        new_state = ListState(initial=state.initial, current=current, target=state.target, lock=idx)
        return new_state, StepResult("Element removed.")

    return state, StepResult(f"Error: unknown action '{action.name}'. Available actions: pop(id), done().")


def legal_actions(state: ListState) -> list[ActionCall]:
    """Actions that do not bounce off the rules: in-range unlocked pops, done."""
    out = [ActionCall.make("pop", id=i) for i in range(state.lock, len(state.current))]
    out.append(ActionCall.make("done"))
    return out


def placeholders(world: ListWorld) -> dict[str, str]:
    return {
        "initial_list": repr(list(world.initial)),
        "target_list": repr(list(world.target)),
    }


def rewrite_placeholders(state: ListState) -> dict[str, str]:
    """Task fills for history pruning: the current list becomes the initial one."""
    return {
        "initial_list": repr(list(state.current)),
        "target_list": repr(list(state.target)),
    }
