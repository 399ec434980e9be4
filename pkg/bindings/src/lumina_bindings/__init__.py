"""Session bindings: drive lumina environments from any agent framework.

The boundary is strings in, strings out (JSON payloads); no shared mutable
structures cross it. One session owns one episode; behaviour is identical
to the built-in runner because both sit on the same episode engine.

    handle, context_json = session_open(instance_json, config_json)
    while True:
        outcome = session_step(handle, model_text)
        if outcome.terminal:
            break
        # feed json.loads(outcome.next_context) back to your model
"""

from .sessions import (
    BindingsError,
    ClosedSessionError,
    SessionBusy,
    SessionHandle,
    StepOutcome,
    score_file,
    session_close,
    session_open,
    session_step,
    session_trajectory,
)

__version__ = "0.1.0"

__all__ = [
    "BindingsError",
    "ClosedSessionError",
    "SessionBusy",
    "SessionHandle",
    "StepOutcome",
    "score_file",
    "session_close",
    "session_open",
    "session_step",
    "session_trajectory",
]
