"""Prompt templates and their placeholder plumbing.

Templates are plain-text assets. The task template is what gets rewritten
under history pruning (the current state is substituted back into the
"initial" placeholders), so filling is factored to take any placeholder
source.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from string import Template
from typing import Any

from ..core import ActionCall, EnvKind, LuminaError, TaskInstance
from ..envs import gridworld, listworld, treeworld


class MissingTemplate(LuminaError):
    """Raised when no template asset exists for an environment."""


def _load_asset(name: str) -> str:
    ref = resources.files(__package__).joinpath("assets").joinpath(name)
    try:
        return ref.read_text(encoding="utf-8")
    except FileNotFoundError as exc:
        raise MissingTemplate(name) from exc


def _load_interventions() -> dict[str, str]:
    blocks: dict[str, str] = {}
    key = None
    lines: list[str] = []
    for line in _load_asset("interventions.txt").splitlines():
        if line.startswith("@"):
            if key is not None:
                blocks[key] = "\n".join(lines)
            key = line[1:].strip()
            lines = []
        else:
            lines.append(line)
    if key is not None:
        blocks[key] = "\n".join(lines)
    return blocks


_INTERVENTIONS = _load_interventions()
_SYSTEM_TEMPLATES = {kind: _load_asset(f"{kind.value}_system.txt") for kind in EnvKind}
_TASK_TEMPLATES = {kind: _load_asset(f"{kind.value}_task.txt") for kind in EnvKind}


def intervention_template(key: str) -> Template:
    try:
        return Template(_INTERVENTIONS[key])
    except KeyError as exc:
        raise MissingTemplate(f"interventions.txt#{key}") from exc


def render_intervention(key: str, **fills: Any) -> str:
    return intervention_template(key).substitute(**{k: str(v) for k, v in fills.items()})


def system_text(env: EnvKind) -> str:
    return _SYSTEM_TEMPLATES[env].rstrip("\n")


def task_text(instance: TaskInstance) -> str:
    """The task section with the instance's ground truth filled in."""
    from ..envs import hooks_for

    fills = hooks_for(instance.env).placeholders(instance.world)
    return Template(_TASK_TEMPLATES[instance.env]).substitute(fills).rstrip("\n")


def rewritten_task_text(instance: TaskInstance, state: Any) -> str:
    """The task section re-filled from the current state, for history pruning."""
    from ..envs import hooks_for

    fills = hooks_for(instance.env).rewrite_placeholders(state)
    return Template(_TASK_TEMPLATES[instance.env]).substitute(fills).rstrip("\n")


@dataclass(frozen=True)
class PromptBundle:
    """Everything the runner sends before the conversation starts."""

    system_text: str
    task_text: str
    example_text: str


# ---------------------------------------------------------------------------
# Canonical in-context example episodes
# ---------------------------------------------------------------------------
#
# One hand-written episode per environment; the per-config variants shown to
# the model are re-rendered mechanically from these scripts so the example
# format always matches what the agent will actually see.


@dataclass(frozen=True)
class ExampleScript:
    instance: TaskInstance
    steps: tuple[tuple[str, ActionCall], ...]  # (reasoning line, action)


def _listworld_example() -> ExampleScript:
    world = listworld.ListWorld(
        initial=("red", "blue", "red", "green"), target=("blue", "green")
    )
    instance = TaskInstance(
        id="example-listworld", env=EnvKind.LISTWORLD, world=world,
        optimal_steps=3, turn_budget=11, seed=0,
    )
    return ExampleScript(
        instance=instance,
        steps=(
            ("The target keeps 'blue' and 'green'; the leftmost extra element is 'red' at index 0.",
             ActionCall.make("pop", id=0)),
            ("The list is now ['blue', 'red', 'green'], so the extra 'red' sits at index 1.",
             ActionCall.make("pop", id=1)),
            ("The list now equals the target.",
             ActionCall.make("done")),
        ),
    )


def _treeworld_example() -> ExampleScript:
    world = treeworld.TreeWorld(
        nodes={
            "n0": treeworld.TreeNode(4, ("n1", "n2")),
            "n1": treeworld.TreeNode(7, ()),
            "n2": treeworld.TreeNode(2, ()),
        },
        root="n0",
        target_value=2,
        target_id="n2",
        initial_revealed=("n0",),
        initial_expanded=(),
    )
    instance = TaskInstance(
        id="example-treeworld", env=EnvKind.TREEWORLD, world=world,
        optimal_steps=2, turn_budget=9, seed=0,
    )
    return ExampleScript(
        instance=instance,
        steps=(
            ("Only the root n0 is known and its children are unknown, so expand it.",
             ActionCall.make("get_children", id="n0")),
            ("Node n2 carries the target value 2.",
             ActionCall.make("found", id="n2")),
        ),
    )


def _gridworld_example() -> ExampleScript:
    world = gridworld.GridWorld(
        size=3, start=(0, 0), goal=(1, 1), holes=frozenset({(0, 1)}), max_moves=2
    )
    instance = TaskInstance(
        id="example-gridworld", env=EnvKind.GRIDWORLD, world=world,
        optimal_steps=3, turn_budget=11, seed=0,
    )
    return ExampleScript(
        instance=instance,
        steps=(
            ("The goal is one row down and one column right; (0, 1) is a hole, so going down avoids the penalty.",
             ActionCall.make("down")),
            ("One step right reaches the goal.",
             ActionCall.make("right")),
            ("I am at the goal.",
             ActionCall.make("done")),
        ),
    )


_EXAMPLES: dict[EnvKind, ExampleScript] = {}


def example_script(env: EnvKind) -> ExampleScript:
    if env not in _EXAMPLES:
        builder = {
            EnvKind.LISTWORLD: _listworld_example,
            EnvKind.TREEWORLD: _treeworld_example,
            EnvKind.GRIDWORLD: _gridworld_example,
        }[env]
        _EXAMPLES[env] = builder()
    return _EXAMPLES[env]
