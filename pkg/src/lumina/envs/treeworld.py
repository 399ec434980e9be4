"""TreeWorld: search a hidden rooted tree for a node holding a target value.

The agent only ever sees (id, value) pairs it has been shown. Expanding a
node with get_children reveals its children; found/unreachable terminate.
An instance may be generated with the target value absent, in which case
only unreachable() succeeds.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any, Mapping

from ..core import ActionCall, EnvKind, TaskInstance, seeded_rng


@dataclass(frozen=True)
class TreeNode:
    value: int
    children: tuple[str, ...]


@dataclass(frozen=True)
class TreeWorld:
    nodes: Mapping[str, TreeNode]
    root: str
    target_value: int
    target_id: str | None
    initial_revealed: tuple[str, ...]
    initial_expanded: tuple[str, ...]

    def goal_params(self) -> dict[str, Any]:
        return {"target_value": self.target_value, "target_id": self.target_id}

    def to_dict(self) -> dict[str, Any]:
        return {
            "nodes": [
                {"id": nid, "value": node.value, "children": list(node.children)}
                for nid, node in self.nodes.items()
            ],
            "root": self.root,
            "target_value": self.target_value,
            "target_id": self.target_id,
            "initial_revealed": list(self.initial_revealed),
            "initial_expanded": list(self.initial_expanded),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "TreeWorld":
        nodes = {
            entry["id"]: TreeNode(entry["value"], tuple(entry["children"]))
            for entry in data["nodes"]
        }
        return cls(
            nodes=nodes,
            root=data["root"],
            target_value=data["target_value"],
            target_id=data.get("target_id"),
            initial_revealed=tuple(data["initial_revealed"]),
            initial_expanded=tuple(data["initial_expanded"]),
        )


@dataclass(frozen=True)
class TreeState:
    world: TreeWorld
    revealed: frozenset[str]
    expanded: frozenset[str]
    revealed_order: tuple[str, ...]  # discovery order, for deterministic rendering

    def frontier(self) -> tuple[str, ...]:
        """Revealed nodes whose children the agent has not been shown."""
        return tuple(nid for nid in self.revealed_order if nid not in self.expanded)

    @property
    def target_revealed(self) -> bool:
        tid = self.world.target_id
        return tid is not None and tid in self.revealed


def initial_state(world: TreeWorld) -> TreeState:
    return TreeState(
        world=world,
        revealed=frozenset(world.initial_revealed),
        expanded=frozenset(world.initial_expanded),
        revealed_order=world.initial_revealed,
    )


def gen_treeworld(
    branching: int,
    num_nodes: int,
    reveal_fraction: float = 0.0,
    unreachable_rate: float = 0.0,
    seed: int = 0,
) -> TaskInstance:
    """Random rooted tree with at most ``branching`` children per node.

    The target is a leaf value; with probability ``unreachable_rate`` the
    target value is absent from the tree entirely. ``reveal_fraction``
    controls how many non-root nodes are disclosed up front (about half of
    those also get their child lists shown, the rest read UNKNOWN).
    """
    if num_nodes < 1:
        raise ValueError("num_nodes must be at least 1")
    if branching < 2:
        raise ValueError("branching must be at least 2")
    if not (0.0 <= reveal_fraction <= 1.0 and 0.0 <= unreachable_rate <= 1.0):
        raise ValueError("reveal_fraction and unreachable_rate must lie in [0, 1]")
    from . import horizon_budget

    rng = seeded_rng(seed, "gen/treeworld")
    children: list[list[int]] = [[] for _ in range(num_nodes)]
    for k in range(1, num_nodes):
        open_parents = [p for p in range(k) if len(children[p]) < branching]
        children[rng.choice(open_parents)].append(k)

    labels = rng.sample(range(num_nodes), num_nodes)
    ids = [f"n{labels[k]}" for k in range(num_nodes)]
    value_pool_top = max(1000, num_nodes * 10)
    values = rng.sample(range(1, value_pool_top), num_nodes)
    nodes = {
        ids[k]: TreeNode(values[k], tuple(ids[c] for c in children[k]))
        for k in range(num_nodes)
    }
    root = ids[0]

    leaves = [k for k in range(num_nodes) if not children[k]]
    target_k = rng.choice(leaves)
    if rng.random() < unreachable_rate:
        target_id = None
        used = set(values)
        target_value = rng.randrange(1, value_pool_top + 500)
        while target_value in used:
            target_value = rng.randrange(1, value_pool_top + 500)
    else:
        target_id = ids[target_k]
        target_value = values[target_k]

    others = ids[1:]
    sample = rng.sample(others, int(reveal_fraction * len(others)))
    revealed: list[str] = [root] + sample
    expanded: list[str] = []
    for nid in sample:
        if rng.random() < 0.5:
            expanded.append(nid)
            for cid in nodes[nid].children:
                if cid not in revealed:
                    revealed.append(cid)

    world = TreeWorld(
        nodes=nodes,
        root=root,
        target_value=target_value,
        target_id=target_id,
        initial_revealed=tuple(revealed),
        initial_expanded=tuple(expanded),
    )
    t_star = _optimal_step_count(world)
    return TaskInstance(
        id=(
            f"treeworld-n{num_nodes}-m{branching}-r{int(reveal_fraction * 100):02d}"
            f"-u{int(unreachable_rate * 100):02d}-{seed:016x}"
        ),
        env=EnvKind.TREEWORLD,
        world=world,
        optimal_steps=t_star,
        turn_budget=horizon_budget(t_star),
        seed=seed,
    )


def path_from_root(world: TreeWorld, node_id: str) -> tuple[str, ...]:
    """Root-to-node id chain in the ground-truth tree."""
    parent: dict[str, str] = {}
    for nid, node in world.nodes.items():
        for cid in node.children:
            parent[cid] = nid
    path = [node_id]
    while path[-1] != world.root:
        path.append(parent[path[-1]])
    return tuple(reversed(path))


def _optimal_step_count(world: TreeWorld) -> int:
    """T*: expansions a ground-truth-aware policy needs, plus the final report.

    Reachable target: walk the root-to-target path from its deepest
    initially revealed node. Absent target: every node whose children are
    not disclosed up front must be expanded to prove absence.
    """
    if world.target_id is None:
        return (len(world.nodes) - len(world.initial_expanded)) + 1
    revealed = set(world.initial_revealed)
    if world.target_id in revealed:
        return 1
    path = path_from_root(world, world.target_id)
    deepest = max(i for i, nid in enumerate(path) if nid in revealed)
    depth = len(path) - 1
    return (depth - deepest) + 1


def _children_payload(world: TreeWorld, nid: str) -> str:
    return json.dumps(
        [{"id": cid, "val": world.nodes[cid].value} for cid in world.nodes[nid].children]
    )


def step_treeworld(state: TreeState, action: ActionCall) -> tuple[TreeState, "StepResult"]:
    from . import StepResult

    world = state.world
    if action.name == "get_children":
        nid = action.arg("id")
        if action.arg_names() != ("id",) or not isinstance(nid, str):
            return state, StepResult("Error: get_children() requires a single string 'id' argument.")
        if nid not in state.revealed:
            return state, StepResult(f"Error: unknown node id '{nid}'.")
        observation = f"Children of node '{nid}': {_children_payload(world, nid)}"
        if nid in state.expanded:
            return state, StepResult(observation)
        order = list(state.revealed_order)
        for cid in world.nodes[nid].children:
            if cid not in state.revealed:
                order.append(cid)
        new_state = TreeState(
            world=world,
            revealed=state.revealed | set(world.nodes[nid].children),
            expanded=state.expanded | {nid},
            revealed_order=tuple(order),
        )
        return new_state, StepResult(observation)

    if action.name == "found":
        nid = action.arg("id")
        if action.arg_names() != ("id",) or not isinstance(nid, str):
            return state, StepResult("Error: found() requires a single string 'id' argument.")
        node = world.nodes.get(nid)
        success = node is not None and node.value == world.target_value
        return state, StepResult("Episode finished.", terminal=True, success=success)

    if action.name == "unreachable":
        if action.args:
            return state, StepResult("Error: unreachable() takes no arguments.")
        return state, StepResult("Episode finished.", terminal=True, success=world.target_id is None)

    return state, StepResult(
        f"Error: unknown action '{action.name}'. "
        "Available actions: get_children(id), found(id), unreachable()."
    )


def legal_actions(state: TreeState) -> list[ActionCall]:
    """Every rule-abiding action: expand or report any revealed node, or
    declare the target unreachable."""
    out = [ActionCall.make("get_children", id=nid) for nid in state.revealed_order]
    out.extend(ActionCall.make("found", id=nid) for nid in state.revealed_order)
    out.append(ActionCall.make("unreachable"))
    return out


def render_known_info(state: TreeState) -> str:
    """The agent-visible tree knowledge, in the task prompt's notation."""
    lines = []
    for nid in state.revealed_order:
        node = state.world.nodes[nid]
        if nid in state.expanded:
            shown = "[" + ", ".join(node.children) + "]"
        else:
            shown = "UNKNOWN"
        lines.append(f"(id={nid}, value={node.value}) -> {shown}")
    return "\n".join(lines)


def placeholders(world: TreeWorld) -> dict[str, str]:
    return {
        "tree_info": render_known_info(initial_state(world)),
        "target_node_val": str(world.target_value),
    }


def rewrite_placeholders(state: TreeState) -> dict[str, str]:
    """Task fills for history pruning: the explored subtree becomes the
    initially known information."""
    return {
        "tree_info": render_known_info(state),
        "target_node_val": str(state.world.target_value),
    }
