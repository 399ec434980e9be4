"""Procedurally generated multi-turn game environments with exact
optimal-action oracles, counterfactual context interventions, and an
evaluation harness for LLM agents."""

from . import envs  # registers world types for deserialization  # noqa: F401
from .agent import EpisodeSession, PolicyHandle, PolicyKind, build_prompt, run_episode
from .core import (
    ALL_CONFIGS,
    ActionCall,
    ConfigError,
    EnvKind,
    OracleConfig,
    ParseError,
    TaskInstance,
    TerminationCause,
    Trajectory,
    Turn,
    parse_action,
    read_instances,
    read_trajectories,
    seeded_rng,
    to_json_line,
    validate_oracle_config,
)
from .envs import gen_gridworld, gen_listworld, gen_treeworld, horizon_budget
from .evaluation import MetricsReport, aggregate, export_results, score_trajectory
from .oracle import (
    build_context,
    canonical_optimal_action,
    grid_min_cost,
    list_solvable,
    optimal_actions,
    optimal_actions_gridworld,
    optimal_actions_listworld,
    optimal_actions_treeworld,
    render_plan_hint,
    render_state_summary,
)

__version__ = "0.1.0"

__all__ = [
    "ALL_CONFIGS",
    "ActionCall",
    "ConfigError",
    "EnvKind",
    "EpisodeSession",
    "MetricsReport",
    "OracleConfig",
    "ParseError",
    "PolicyHandle",
    "PolicyKind",
    "TaskInstance",
    "TerminationCause",
    "Trajectory",
    "Turn",
    "aggregate",
    "build_context",
    "build_prompt",
    "canonical_optimal_action",
    "envs",
    "export_results",
    "gen_gridworld",
    "gen_listworld",
    "gen_treeworld",
    "grid_min_cost",
    "horizon_budget",
    "list_solvable",
    "optimal_actions",
    "optimal_actions_gridworld",
    "optimal_actions_listworld",
    "optimal_actions_treeworld",
    "parse_action",
    "read_instances",
    "read_trajectories",
    "render_plan_hint",
    "render_state_summary",
    "run_episode",
    "score_trajectory",
    "seeded_rng",
    "to_json_line",
    "validate_oracle_config",
]
