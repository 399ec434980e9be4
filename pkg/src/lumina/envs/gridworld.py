"""GridWorld: navigate an N x N board from start to goal within a move budget.

Every move costs 1; stepping into a hole costs 3 extra. Off-grid moves are
rejected with an error observation and cost nothing but the turn. The
episode ends in failure as soon as a move would push spent cost past the
budget.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Any, Mapping

from ..core import ActionCall, EnvKind, LuminaError, TaskInstance, seeded_rng
from .. import _kernels as kernels

Cell = tuple[int, int]

#: Direction deltas in canonical precedence order (used for tie-breaking).
DIRECTIONS: dict[str, Cell] = {"up": (-1, 0), "down": (1, 0), "left": (0, -1), "right": (0, 1)}


@dataclass(frozen=True)
class GridWorld:
    size: int
    start: Cell
    goal: Cell
    holes: frozenset[Cell]
    max_moves: int

    def goal_params(self) -> dict[str, Any]:
        return {"goal": list(self.goal)}

    def entry_cost(self, cell: Cell) -> int:
        return kernels.HOLE_COST if cell in self.holes else kernels.STEP_COST

    def on_grid(self, cell: Cell) -> bool:
        return 0 <= cell[0] < self.size and 0 <= cell[1] < self.size

    def to_dict(self) -> dict[str, Any]:
        return {
            "size": self.size,
            "start": list(self.start),
            "goal": list(self.goal),
            "holes": [list(c) for c in sorted(self.holes)],
            "max_moves": self.max_moves,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "GridWorld":
        return cls(
            size=data["size"],
            start=tuple(data["start"]),
            goal=tuple(data["goal"]),
            holes=frozenset(tuple(c) for c in data["holes"]),
            max_moves=data["max_moves"],
        )


@dataclass(frozen=True)
class GridState:
    world: GridWorld
    position: Cell
    cost_used: int

    def __post_init__(self) -> None:
        if self.cost_used > self.world.max_moves:
            raise ValueError("cost_used may never exceed the move budget")

    @property
    def remaining_moves(self) -> int:
        return self.world.max_moves - self.cost_used

    @property
    def at_goal(self) -> bool:
        return self.position == self.world.goal


def initial_state(world: GridWorld) -> GridState:
    return GridState(world=world, position=world.start, cost_used=0)


def _hole_mask(world: GridWorld) -> list[int]:
    mask = [0] * (world.size * world.size)
    for r, c in world.holes:
        mask[r * world.size + c] = 1
    return mask


def min_cost_map(world: GridWorld, origin: Cell) -> dict[Cell, int]:
    """Min cost from ``origin`` to every cell (entering a hole costs 4)."""
    flat = kernels.grid_min_cost_from(world.size, _hole_mask(world), origin[0] * world.size + origin[1])
    return {(i // world.size, i % world.size): d for i, d in enumerate(flat)}


@lru_cache(maxsize=1024)
def distances_to_goal(world: GridWorld) -> tuple[int, ...]:
    """Min cost from every cell to the goal, flat row-major; cached because
    the field is static for the whole episode."""
    flat = kernels.grid_min_cost_to(
        world.size, tuple(_hole_mask(world)), world.goal[0] * world.size + world.goal[1]
    )
    return tuple(flat)


def cost_to_goal(world: GridWorld, cell: Cell) -> int:
    return distances_to_goal(world)[cell[0] * world.size + cell[1]]


def optimal_moves(world: GridWorld, position: Cell) -> list[str]:
    """Directions that start a minimum-cost path to the goal, in canonical
    precedence order (up, down, left, right)."""
    here = cost_to_goal(world, position)
    out = []
    for name, (dr, dc) in DIRECTIONS.items():
        nxt = (position[0] + dr, position[1] + dc)
        if world.on_grid(nxt) and world.entry_cost(nxt) + cost_to_goal(world, nxt) == here:
            out.append(name)
    return out


def canonical_path_moves(world: GridWorld) -> list[str]:
    """The move sequence a canonical shortest-path follower takes from the
    start (first optimal direction in precedence order at every cell)."""
    moves = []
    position = world.start
    while position != world.goal:
        name = optimal_moves(world, position)[0]
        dr, dc = DIRECTIONS[name]
        position = (position[0] + dr, position[1] + dc)
        moves.append(name)
    return moves


def gen_gridworld(size: int, hole_density: float, budget_slack: int, seed: int) -> TaskInstance:
    """Random board with start/goal never on holes and a budget of
    min-cost + slack, so every instance is solvable within budget."""
    if size < 2:
        raise ValueError("size must be at least 2")
    if not 0.0 <= hole_density <= 1.0:
        raise ValueError("hole_density must lie in [0, 1]")
    if budget_slack < 0:
        raise ValueError("budget_slack must be non-negative")
    from . import horizon_budget

    rng = seeded_rng(seed, "gen/gridworld")
    cells = [(r, c) for r in range(size) for c in range(size)]
    for _ in range(100):
        start = rng.choice(cells)
        goal = rng.choice(cells)
        while goal == start:
            goal = rng.choice(cells)
        holes = frozenset(
            cell for cell in cells if cell not in (start, goal) and rng.random() < hole_density
        )
        probe = GridWorld(size=size, start=start, goal=goal, holes=holes, max_moves=0)
        min_cost = min_cost_map(probe, start)[goal]
        if min_cost < 0:
            continue
        world = GridWorld(
            size=size, start=start, goal=goal, holes=holes, max_moves=min_cost + budget_slack
        )
        t_star = len(canonical_path_moves(world)) + 1
        return TaskInstance(
            id=f"gridworld-n{size}-h{int(hole_density * 100):02d}-k{budget_slack}-{seed:016x}",
            env=EnvKind.GRIDWORLD,
            world=world,
            optimal_steps=t_star,
            turn_budget=horizon_budget(t_star),
            seed=seed,
        )
    raise LuminaError("could not generate a solvable grid instance")


def step_gridworld(state: GridState, action: ActionCall) -> tuple[GridState, "StepResult"]:
    from . import StepResult

    world = state.world
    if action.name == "done":
        if action.args:
            return state, StepResult("Error: done() takes no arguments.")
        return state, StepResult("Episode finished.", terminal=True, success=state.at_goal)

    if action.name in DIRECTIONS:
        if action.args:
            return state, StepResult(f"Error: {action.name}() takes no arguments.")
        dr, dc = DIRECTIONS[action.name]
        nxt = (state.position[0] + dr, state.position[1] + dc)
        if not world.on_grid(nxt):
            return state, StepResult(
                f"Error: move would leave the grid. Position: {state.position}. "
                f"Remaining moves: {state.remaining_moves}."
            )
        new_cost = state.cost_used + world.entry_cost(nxt)
        if new_cost > world.max_moves:
            return state, StepResult("Out of moves. Episode finished.", terminal=True, success=False)
        new_state = GridState(world=world, position=nxt, cost_used=new_cost)
        return new_state, StepResult(
            f"Moved {action.name}. Position: {nxt}. Remaining moves: {new_state.remaining_moves}."
        )

    return state, StepResult(
        f"Error: unknown action '{action.name}'. "
        "Available actions: up(), down(), left(), right(), done()."
    )


def legal_actions(state: GridState) -> list[ActionCall]:
    """On-grid moves plus done; off-grid moves are excluded because they
    bounce with an error observation."""
    out = []
    for name, (dr, dc) in DIRECTIONS.items():
        if state.world.on_grid((state.position[0] + dr, state.position[1] + dc)):
            out.append(ActionCall.make(name))
    out.append(ActionCall.make("done"))
    return out


def placeholders(world: GridWorld) -> dict[str, str]:
    return {
        "size": str(world.size),
        "start": str(world.start),
        "goal": str(world.goal),
        "holes": str(sorted(world.holes)),
        "max_moves": str(world.max_moves),
    }


def rewrite_placeholders(state: GridState) -> dict[str, str]:
    """Task fills for history pruning: current position becomes the start
    and the budget shrinks to what remains."""
    return {
        "size": str(state.world.size),
        "start": str(state.position),
        "goal": str(state.world.goal),
        "holes": str(sorted(state.world.holes)),
        "max_moves": str(state.remaining_moves),
    }
