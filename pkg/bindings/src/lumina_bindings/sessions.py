"""Session lifecycle and file scoring over the primary package."""

from __future__ import annotations

import itertools
import json
import threading
from dataclasses import dataclass
from typing import Any

from lumina.agent import EpisodeSession
from lumina.core import LuminaError, OracleConfig, TaskInstance, read_trajectories
from lumina.evaluation import aggregate


class BindingsError(Exception):
    """Base error; carries the primary package's error text where one exists."""


class ClosedSessionError(BindingsError):
    pass


class SessionBusy(BindingsError):
    """A session was used from two execution contexts at once."""


@dataclass(frozen=True)
class SessionHandle:
    """Opaque reference to a live (instance, state) pair."""

    id: str


@dataclass(frozen=True)
class StepOutcome:
    """Result of applying one turn of raw model text.

    ``next_context`` is the full message list (JSON) the caller should send
    to its model for the following turn; empty once the episode is over.
    A history-pruning config rewrites the context each turn, so a full
    replacement is the only uniform contract.
    """

    observation: str
    optimal: bool
    terminal: bool
    success: bool
    next_context: str


class _LiveSession:
    def __init__(self, session: EpisodeSession):
        self.session = session
        self.lock = threading.Lock()


_SESSIONS: dict[str, _LiveSession] = {}
_REGISTRY_LOCK = threading.Lock()
_COUNTER = itertools.count(1)


def _context_json(session: EpisodeSession) -> str:
    return json.dumps(session.context(), ensure_ascii=False)


def session_open(instance_json: str, config_json: str) -> tuple[SessionHandle, str]:
    """Allocate a session for a serialized instance and oracle config.

    Returns the handle and the fully rendered initial context (JSON message
    list) for the chosen configuration. ``config_json`` holds the flags
    {"plan": bool, "state": bool, "history": bool} and optionally
    "treeworld_mode" ("exploration" or "hindsight").
    """
    try:
        instance_data = json.loads(instance_json)
        config_data = json.loads(config_json)
    except json.JSONDecodeError as exc:
        raise BindingsError(f"malformed JSON payload: {exc.msg}") from exc
    try:
        instance = TaskInstance.from_dict(instance_data)
        config = OracleConfig.from_dict(config_data)
        mode = config_data.get("treeworld_mode", "exploration")
        session = EpisodeSession(instance, config, treeworld_mode=mode)
    except (LuminaError, KeyError, ValueError, TypeError) as exc:
        raise BindingsError(str(exc)) from exc
    handle = SessionHandle(id=f"session-{next(_COUNTER)}")
    with _REGISTRY_LOCK:
        _SESSIONS[handle.id] = _LiveSession(session)
    return handle, _context_json(session)


def _live(handle: SessionHandle) -> _LiveSession:
    live = _SESSIONS.get(handle.id)
    if live is None:
        raise ClosedSessionError(f"{handle.id} is closed or was never opened")
    return live


def session_step(handle: SessionHandle, raw_model_text: str) -> StepOutcome:
    """Parse, score, and apply one turn of model text to the session.

    Mirrors the built-in runner's inner loop exactly: parse failures keep
    the environment untouched, count as non-optimal turns, and three in a
    row end the episode.
    """
    live = _live(handle)
    if not live.lock.acquire(blocking=False):
        raise SessionBusy(f"{handle.id} is already mid-step in another context")
    try:
        session = live.session
        if session.finished:
            raise ClosedSessionError(f"{handle.id} already reached a terminal state")
        turn = session.apply(raw_model_text)
        return StepOutcome(
            observation=turn.observation,
            optimal=turn.optimal,
            terminal=session.finished,
            success=session.success,
            next_context="" if session.finished else _context_json(session),
        )
    finally:
        live.lock.release()


def session_trajectory(handle: SessionHandle, policy_name: str = "external") -> str:
    """The finished episode as a JSON record in the interchange schema,
    labeled with the caller's policy name."""
    live = _live(handle)
    session = live.session
    if not session.finished:
        raise BindingsError(f"{handle.id} has not terminated yet")
    return json.dumps(
        session.trajectory(policy_name).to_dict(), separators=(",", ":"), ensure_ascii=False
    )


def session_close(handle: SessionHandle) -> None:
    """Release a session; later calls on the handle fail cleanly."""
    with _REGISTRY_LOCK:
        _SESSIONS.pop(handle.id, None)


def score_file(trajectories_path: str) -> list[dict[str, Any]]:
    """Aggregate a trajectories file exactly as the primary report command
    does (grouped by environment and oracle config).

    Empty files give an empty list; a corrupt line raises an error naming
    the line number.
    """
    try:
        trajectories = read_trajectories(trajectories_path)
    except LuminaError as exc:
        raise BindingsError(str(exc)) from exc
    except OSError as exc:
        raise BindingsError(f"cannot read {trajectories_path}: {exc}") from exc
    if not trajectories:
        return []
    return [report.to_dict() for report in aggregate(trajectories, ("env", "config"))]
