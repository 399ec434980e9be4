"""Episode driver: prompts, policies, and the turn loop.

``EpisodeSession`` owns one episode's state and applies raw model text one
turn at a time; ``run_episode`` drives a session with a policy. The session
is also the backbone of the foreign bindings, which guarantees both paths
behave identically.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache
from random import Random

from . import envs, oracle, prompts
from .core import (
    ActionCall,
    EnvKind,
    LuminaError,
    OracleConfig,
    ParseError,
    ParseFailure,
    TaskInstance,
    TerminationCause,
    Trajectory,
    Turn,
    fingerprint_messages,
    parse_action,
    seeded_rng,
)
from .llm_client import ChatClient, ChatRequest, ClientError

#: Scripted policies emit this fixed one-line rationale before their action
#: block so their output takes the same parsing path as real model text.
SCRIPTED_RATIONALE = "Taking the next step toward the goal."

MAX_CONSECUTIVE_PARSE_FAILURES = 3


class PolicyKind(str, enum.Enum):
    LLM = "llm"
    ORACLE_FOLLOWER = "oracle_follower"
    EPSILON_NOISY = "epsilon_noisy"
    UNIFORM_RANDOM = "uniform_random"


@dataclass(frozen=True)
class PolicyHandle:
    """Which policy answers each turn, plus its parameters."""

    kind: PolicyKind
    model: str = ""
    endpoint: str = ""
    temperature: float = 0.7
    max_tokens: int = 512
    epsilon: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError("epsilon must lie in [0, 1]")

    def fingerprint(self) -> str:
        if self.kind is PolicyKind.LLM:
            return f"llm({self.model},t={self.temperature})"
        if self.kind is PolicyKind.EPSILON_NOISY:
            return f"epsilon_noisy(eps={self.epsilon},seed={self.seed})"
        if self.kind is PolicyKind.UNIFORM_RANDOM:
            return f"uniform_random(seed={self.seed})"
        return "oracle_follower"


class PolicyFailure(LuminaError):
    """The policy could not produce text (e.g. transport exhaustion); carries
    whatever part of the episode completed."""

    def __init__(self, message: str, partial: Trajectory):
        super().__init__(message)
        self.partial = partial


# ---------------------------------------------------------------------------
# Prompt bundles and in-context example rendering
# ---------------------------------------------------------------------------


@lru_cache(maxsize=32)
def render_incontext_example(env: EnvKind, config: OracleConfig) -> str:
    """Re-render the canonical example episode to match the active oracles.

    Models underperform when the example format diverges from what they see
    at rollout time, so the oracle lines (and, under history pruning, the
    fresh single-turn task framing) are placed exactly as the runner will
    place them.
    """
    script = prompts.example_script(env)
    instance = script.instance
    hooks = envs.hooks_for(env)
    state = hooks.initial_state(instance.world)
    lines: list[str] = []
    if config.history:
        lines.append("=== Example task (each turn below is a fresh, self-contained task) ===")
        for turn_number, (reasoning, action) in enumerate(script.steps, start=1):
            iv = oracle.compute_interventions(instance, state, config)
            lines.append(f"Turn {turn_number}:")
            lines.append("Task:\n" + iv.rewritten_task)
            message = iv.oracle_message()
            if message is not None:
                lines.append("Oracle:\n" + message)
            lines.append(f"Assistant:\n{reasoning}\n```python\n{action.render()}\n```")
            state, _ = hooks.step(state, action)
    else:
        lines.append("=== Example task ===")
        lines.append(prompts.task_text(instance))
        result = None
        for reasoning, action in script.steps:
            message = oracle.compute_interventions(instance, state, config).oracle_message()
            if message is not None:
                lines.append("Oracle:\n" + message)
            lines.append(f"Assistant:\n{reasoning}\n```python\n{action.render()}\n```")
            state, result = hooks.step(state, action)
            lines.append("Environment:\n" + result.observation)
    lines.append("=== End of example ===")
    return "\n\n".join(lines)


def build_prompt(instance: TaskInstance, config: OracleConfig) -> prompts.PromptBundle:
    """System text (with the matching example variant) plus the filled task."""
    example = render_incontext_example(instance.env, config)
    return prompts.PromptBundle(
        system_text=prompts.system_text(instance.env) + "\n\n" + example,
        task_text=prompts.task_text(instance),
        example_text=example,
    )


# ---------------------------------------------------------------------------
# Episode session
# ---------------------------------------------------------------------------


class EpisodeSession:
    """One live episode: context building, parsing, scoring, stepping.

    Apply raw model text with :meth:`apply`; the session records turns and
    decides termination (terminal action, turn budget, or three consecutive
    parse failures).
    """

    def __init__(
        self,
        instance: TaskInstance,
        config: OracleConfig,
        treeworld_mode: str = "exploration",
    ):
        if treeworld_mode not in oracle.TREEWORLD_MODES:
            raise ValueError(f"unknown treeworld mode {treeworld_mode!r}")
        self.instance = instance
        self.config = config
        self.treeworld_mode = treeworld_mode
        self.hooks = envs.hooks_for(instance.env)
        self.bundle = build_prompt(instance, config)
        self.state = self.hooks.initial_state(instance.world)
        self.history: list[tuple[str, str]] = []
        self.turns: list[Turn] = []
        self.success = False
        self.terminated_by: TerminationCause | None = None
        self._consecutive_parse_failures = 0
        self._context_cache: tuple[int, list[dict[str, str]]] | None = None

    @property
    def finished(self) -> bool:
        return self.terminated_by is not None

    def context(self) -> list[dict[str, str]]:
        """The message sequence for the upcoming turn."""
        if self._context_cache is not None and self._context_cache[0] == len(self.turns):
            return self._context_cache[1]
        messages = oracle.build_context(
            self.bundle, self.instance, self.state, self.history, self.config
        )
        self._context_cache = (len(self.turns), messages)
        return messages

    def optimal_set(self) -> frozenset[ActionCall]:
        return oracle.safe_optimal_actions(self.instance, self.state, self.treeworld_mode)

    def legal_actions(self) -> list[ActionCall]:
        return self.hooks.legal_actions(self.state)

    def canonical_action(self) -> ActionCall | None:
        return oracle.canonical_optimal_action(self.instance, self.state)

    def apply(self, raw_output: str) -> Turn:
        """Parse, score, and step one turn of raw model text."""
        if self.finished:
            raise LuminaError("episode already finished")
        fingerprint = fingerprint_messages(self.context())
        optimal_set = self.optimal_set()

        parsed: ActionCall | ParseFailure
        try:
            action = parse_action(raw_output)
        except ParseError as err:
            parsed = ParseFailure.from_error(err)
            observation = envs.PARSE_ERROR_OBSERVATION
            optimal = False
            self._consecutive_parse_failures += 1
            if self._consecutive_parse_failures >= MAX_CONSECUTIVE_PARSE_FAILURES:
                self.terminated_by = TerminationCause.PARSE_FAILURE_LIMIT
        else:
            parsed = action
            optimal = action in optimal_set
            self._consecutive_parse_failures = 0
            self.state, result = self.hooks.step(self.state, action)
            observation = result.observation
            if result.terminal:
                self.success = result.success
                if action.name in self.hooks.terminal_action_names:
                    self.terminated_by = TerminationCause.AGENT_DONE
                else:
                    self.terminated_by = TerminationCause.ENV_BUDGET

        turn = Turn(
            index=len(self.turns),
            context_fingerprint=fingerprint,
            raw_output=raw_output,
            parsed=parsed,
            optimal=optimal,
            observation=observation,
        )
        self.turns.append(turn)
        self.history.append((raw_output, observation))
        if not self.finished and len(self.turns) >= self.instance.turn_budget:
            self.terminated_by = TerminationCause.ENV_BUDGET
        return turn

    def trajectory(self, policy_name: str) -> Trajectory:
        if not self.finished:
            raise LuminaError("episode still running")
        return Trajectory(
            instance_id=self.instance.id,
            config=self.config,
            turns=tuple(self.turns),
            success=self.success,
            terminated_by=self.terminated_by,
            meta={
                "env": self.instance.env.value,
                "t_star": self.instance.optimal_steps,
                "policy": policy_name,
                "seed": self.instance.seed,
            },
        )


# ---------------------------------------------------------------------------
# Policies
# ---------------------------------------------------------------------------


def scripted_action_text(action: ActionCall) -> str:
    return f"{SCRIPTED_RATIONALE}\n```python\n{action.render()}\n```"


def scripted_noise_choice(
    optimal: frozenset[ActionCall] | set[ActionCall],
    legal: list[ActionCall],
    epsilon: float,
    rng: Random,
    canonical: ActionCall | None = None,
) -> ActionCall:
    """With probability 1 - epsilon take the canonical optimal action;
    otherwise a uniform draw from the legal non-optimal alternatives
    (falling back to the optimal action when no alternative exists)."""
    if not legal:
        raise ValueError("no legal actions to choose from")
    if canonical is None and optimal:
        canonical = min(optimal, key=lambda a: (a.name, a.render()))
    alternatives = [a for a in legal if a not in optimal]
    if canonical is None:
        return rng.choice(alternatives or legal)
    if alternatives and rng.random() < epsilon:
        return rng.choice(alternatives)
    return canonical


def policy_next_action(
    handle: PolicyHandle,
    session: EpisodeSession,
    rng: Random | None = None,
    client: ChatClient | None = None,
) -> str:
    """Raw response text for the upcoming turn of ``session``."""
    if handle.kind is PolicyKind.LLM:
        if client is None:
            raise PolicyFailure("llm policy requires a chat client", _partial(session, handle))
        request = ChatRequest.from_message_dicts(
            model=handle.model,
            messages=session.context(),
            temperature=handle.temperature,
            max_tokens=handle.max_tokens,
        )
        return client.complete(request)

    if rng is None:
        raise ValueError("scripted policies need an rng")
    if handle.kind is PolicyKind.ORACLE_FOLLOWER:
        action = session.canonical_action()
        if action is None:
            action = session.legal_actions()[0]
        return scripted_action_text(action)
    if handle.kind is PolicyKind.EPSILON_NOISY:
        action = scripted_noise_choice(
            session.optimal_set(),
            session.legal_actions(),
            handle.epsilon,
            rng,
            canonical=session.canonical_action(),
        )
        return scripted_action_text(action)
    return scripted_action_text(rng.choice(session.legal_actions()))


def _partial(session: EpisodeSession, handle: PolicyHandle) -> Trajectory:
    cause = session.terminated_by or TerminationCause.ENV_BUDGET
    return Trajectory(
        instance_id=session.instance.id,
        config=session.config,
        turns=tuple(session.turns),
        success=False,
        terminated_by=cause,
        meta={
            "env": session.instance.env.value,
            "t_star": session.instance.optimal_steps,
            "policy": handle.fingerprint(),
            "seed": session.instance.seed,
            "partial": True,
        },
    )


def run_episode(
    instance: TaskInstance,
    policy: PolicyHandle,
    config: OracleConfig,
    client: ChatClient | None = None,
    treeworld_mode: str = "exploration",
) -> Trajectory:
    """Roll one episode to termination and return its trajectory."""
    session = EpisodeSession(instance, config, treeworld_mode=treeworld_mode)
    rng = seeded_rng(policy.seed, f"policy/{instance.id}/{config.label()}")
    while not session.finished:
        try:
            raw = policy_next_action(policy, session, rng=rng, client=client)
        except ClientError as err:
            raise PolicyFailure(str(err), _partial(session, policy)) from err
        session.apply(raw)
    return session.trajectory(policy.fingerprint())
