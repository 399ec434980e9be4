"""Scoring and aggregation: success rate, step accuracy, report export.

Step accuracy denominates over every turn, including parse failures and
rejected actions; an episode's step accuracy is the fraction of its turns
whose action belonged to the pre-step optimal set. Aggregates are
unweighted per-episode means.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from typing import Any, Iterable, Sequence

from . import envs, oracle
from .core import ActionCall, LuminaError, TaskInstance, Trajectory

GROUP_FIELDS = ("env", "config", "horizon", "policy")


class EmptyTrajectory(LuminaError):
    pass


def score_trajectory(traj: Trajectory) -> tuple[bool, float]:
    """(success, optimal-turn fraction) for one episode."""
    if not traj.turns:
        raise EmptyTrajectory(traj.instance_id)
    optimal = sum(1 for t in traj.turns if t.optimal)
    return traj.success, optimal / len(traj.turns)


@dataclass(frozen=True)
class MetricsReport:
    """One aggregate row; ungrouped dimensions read "all"."""

    env: str
    config: str
    horizon: str
    policy: str
    episodes: int
    success_rate: float
    step_accuracy: float
    ci95: float

    def to_dict(self) -> dict[str, Any]:
        return {
            "env": self.env,
            "config": self.config,
            "horizon": self.horizon,
            "policy": self.policy,
            "episodes": self.episodes,
            "success_rate": self.success_rate,
            "step_accuracy": self.step_accuracy,
            "ci95": self.ci95,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "MetricsReport":
        return cls(**data)


def binomial_ci95(p: float, n: int) -> float:
    """Normal-approximation half-width of the 95% binomial interval."""
    if n <= 0:
        return 0.0
    return 1.96 * math.sqrt(max(p * (1.0 - p), 0.0) / n)


def _group_key(traj: Trajectory, group_by: Sequence[str]) -> tuple[str, ...]:
    values = {
        "env": str(traj.meta.get("env", "?")),
        "config": traj.config.label(),
        "horizon": str(traj.meta.get("t_star", "?")),
        "policy": str(traj.meta.get("policy", "?")),
    }
    return tuple(values[f] if f in group_by else "all" for f in GROUP_FIELDS)


def aggregate(
    trajectories: Iterable[Trajectory], group_by: Sequence[str] = ("env", "config")
) -> list[MetricsReport]:
    """Group trajectories and compute mean success, mean step accuracy, and
    the binomial 95% half-width of the success rate."""
    for f in group_by:
        if f not in GROUP_FIELDS:
            raise ValueError(f"unknown group field {f!r}; valid: {GROUP_FIELDS}")
    groups: dict[tuple[str, ...], list[tuple[bool, float]]] = {}
    for traj in trajectories:
        if not traj.turns:
            continue
        groups.setdefault(_group_key(traj, group_by), []).append(score_trajectory(traj))
    reports = []
    for key in sorted(groups, key=_sort_key):
        scores = groups[key]
        n = len(scores)
        success_rate = sum(1 for ok, _ in scores if ok) / n
        step_accuracy = sum(acc for _, acc in scores) / n
        env, config, horizon, policy = key
        reports.append(
            MetricsReport(
                env=env,
                config=config,
                horizon=horizon,
                policy=policy,
                episodes=n,
                success_rate=success_rate,
                step_accuracy=step_accuracy,
                ci95=binomial_ci95(success_rate, n),
            )
        )
    return reports


def _sort_key(key: tuple[str, ...]) -> tuple:
    env, config, horizon, policy = key
    horizon_rank = (0, int(horizon)) if horizon.isdigit() else (1, 0)
    return (env, config, horizon_rank, policy)


CSV_HEADER = ["env", "config", "horizon", "policy", "episodes", "success_rate", "step_accuracy", "ci95"]


def export_results(reports: Sequence[MetricsReport], fmt: str, path: str) -> None:
    """Write reports as CSV (fixed 4-decimal formatting) or JSON lines."""
    if fmt == "csv":
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_HEADER)
            for r in reports:
                writer.writerow(
                    [
                        r.env,
                        r.config,
                        r.horizon,
                        r.policy,
                        r.episodes,
                        f"{r.success_rate:.4f}",
                        f"{r.step_accuracy:.4f}",
                        f"{r.ci95:.4f}",
                    ]
                )
    elif fmt == "jsonl":
        with open(path, "w", encoding="utf-8") as fh:
            for r in reports:
                fh.write(json.dumps(r.to_dict(), separators=(",", ":"), ensure_ascii=False) + "\n")
    else:
        raise ValueError(f"unknown export format {fmt!r}")


def load_reports_jsonl(path: str) -> list[MetricsReport]:
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(MetricsReport.from_dict(json.loads(line)))
    return out


# ---------------------------------------------------------------------------
# Offline re-scoring
# ---------------------------------------------------------------------------


def replay_trajectory(
    instance: TaskInstance, traj: Trajectory, treeworld_mode: str = "exploration"
) -> list[tuple[bool, str]]:
    """Recompute (optimal flag, observation) per turn from the instance's
    ground truth; persisted trajectories must reproduce them exactly."""
    hooks = envs.hooks_for(instance.env)
    state = hooks.initial_state(instance.world)
    out = []
    for turn in traj.turns:
        if isinstance(turn.parsed, ActionCall):
            optimal_set = oracle.safe_optimal_actions(instance, state, treeworld_mode)
            flag = turn.parsed in optimal_set
            state, result = hooks.step(state, turn.parsed)
            out.append((flag, result.observation))
        else:
            out.append((False, envs.PARSE_ERROR_OBSERVATION))
    return out
