"""Command-line entry points: generate instance sets, run sweeps, report.

Exit codes: 0 success, 1 empty or degenerate input, 2 invalid
configuration, 3 policy or transport failure.
"""

from __future__ import annotations

import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor, as_completed
from importlib import resources
from typing import Any, Sequence

import click
import jsonschema
import yaml

from . import agent, envs, evaluation, oracle
from .core import (
    ALL_CONFIGS,
    ConfigError,
    DecodeError,
    EnvKind,
    LuminaError,
    OracleConfig,
    TaskInstance,
    derive_seed,
    read_instances,
    read_trajectories,
    to_json_line,
)
from .llm_client import Cassette, CassetteMode, ChatClient, HttpTransport

EXIT_OK = 0
EXIT_EMPTY = 1
EXIT_CONFIG = 2
EXIT_POLICY = 3

DEFAULT_SPEC: dict[str, Any] = {
    "seed": 0,
    "episodes_per_cell": 10,
    "envs": {
        "listworld": {"target_len": 5, "pops": [2, 4, 6]},
        "treeworld": {"branching": 2, "nodes": [7, 15], "reveal_fraction": 0.0, "unreachable_rate": 0.0},
        "gridworld": {"sizes": [4, 6], "hole_density": 0.15, "budget_slack": 4},
    },
    "configs": ["none"],
    "policy": {"kind": "oracle_follower", "epsilon": 0.1, "seed": 0, "model": "",
               "endpoint": "", "temperature": 0.7, "max_tokens": 512},
    "concurrency": 4,
    "treeworld_mode": "exploration",
}

ENV_DEFAULTS = DEFAULT_SPEC["envs"]


def load_runspec(spec_path: str | None) -> dict[str, Any]:
    """Defaults overlaid with the run-spec file, validated against the schema."""
    spec = json.loads(json.dumps(DEFAULT_SPEC))
    if spec_path:
        with open(spec_path, "r", encoding="utf-8") as fh:
            loaded = yaml.safe_load(fh) or {}
        for key, value in loaded.items():
            if key == "envs":
                spec["envs"] = {
                    env: {**ENV_DEFAULTS.get(env, {}), **(cell or {})} for env, cell in value.items()
                }
            elif key == "policy":
                spec["policy"] = {**spec["policy"], **value}
            else:
                spec[key] = value
    schema = json.loads(resources.files("lumina").joinpath("runspec_schema.json").read_text())
    try:
        jsonschema.validate(spec, schema)
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"run spec invalid: {exc.message}") from exc
    return spec


def _parse_int_list(text: str) -> list[int]:
    return [int(tok) for tok in text.replace(",", " ").split()]


def generate_instances(spec: dict[str, Any]) -> list[TaskInstance]:
    """Instances for every (env, complexity, index) cell, each with a child
    seed derived from the base seed, so regeneration is byte-identical."""
    base_seed = spec["seed"]
    per_cell = spec["episodes_per_cell"]
    instances: list[TaskInstance] = []
    for env_name in sorted(spec["envs"]):
        cell = spec["envs"][env_name]
        if env_name == "listworld":
            for pops in cell["pops"]:
                for index in range(per_cell):
                    seed = derive_seed(base_seed, f"listworld/p{pops}/{index}")
                    instances.append(envs.gen_listworld(cell["target_len"], pops, seed))
        elif env_name == "treeworld":
            for nodes in cell["nodes"]:
                for index in range(per_cell):
                    seed = derive_seed(base_seed, f"treeworld/n{nodes}/{index}")
                    instances.append(
                        envs.gen_treeworld(
                            cell["branching"], nodes, cell["reveal_fraction"],
                            cell["unreachable_rate"], seed,
                        )
                    )
        elif env_name == "gridworld":
            for size in cell["sizes"]:
                for index in range(per_cell):
                    seed = derive_seed(base_seed, f"gridworld/s{size}/{index}")
                    instances.append(
                        envs.gen_gridworld(size, cell["hole_density"], cell["budget_slack"], seed)
                    )
    return instances


def _resolve_configs(labels: Sequence[str]) -> list[OracleConfig]:
    if any(label.strip().lower() == "all" for label in labels):
        return list(ALL_CONFIGS)
    return [OracleConfig.from_label(label) for label in labels]


def _build_policy(spec_policy: dict[str, Any]) -> agent.PolicyHandle:
    return agent.PolicyHandle(
        kind=agent.PolicyKind(spec_policy["kind"]),
        model=spec_policy.get("model", ""),
        endpoint=spec_policy.get("endpoint", ""),
        temperature=spec_policy.get("temperature", 0.7),
        max_tokens=spec_policy.get("max_tokens", 512),
        epsilon=spec_policy.get("epsilon", 0.0),
        seed=spec_policy.get("seed", 0),
    )


def _build_client(policy: agent.PolicyHandle, mode: str, cassette_path: str | None) -> ChatClient | None:
    if policy.kind is not agent.PolicyKind.LLM:
        return None
    cassette = None
    transport = None
    if mode in ("record", "replay"):
        if not cassette_path:
            raise ConfigError(f"--cassette is required in {mode} mode")
        cassette = Cassette(cassette_path, CassetteMode.RECORD if mode == "record" else CassetteMode.REPLAY)
    if mode in ("record", "live"):
        if not policy.endpoint:
            raise ConfigError("an --endpoint is required to reach a live model")
        api_key = os.environ.get("LUMINA_API_KEY") or os.environ.get("OPENAI_API_KEY")
        transport = HttpTransport(policy.endpoint, api_key=api_key)
    return ChatClient(transport=transport, cassette=cassette)


def _episode_key(instance_id: str, config: OracleConfig, policy_fp: str) -> str:
    return f"{instance_id}||{config.label()}||{policy_fp}"


@click.group()
def main() -> None:
    """Multi-turn game environments with exact oracles for agent evaluation."""


@main.command("generate")
@click.option("--spec", "spec_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="YAML run spec; flags override its values.")
@click.option("--env", "env_names", multiple=True,
              type=click.Choice([k.value for k in EnvKind]), help="Restrict to these environments.")
@click.option("--seed", type=int, default=None, help="Base seed for the whole set.")
@click.option("--episodes", type=int, default=None, help="Instances per complexity cell.")
@click.option("--pops", default=None, help="ListWorld pop counts, e.g. '2,4,8'.")
@click.option("--target-len", type=int, default=None, help="ListWorld target length.")
@click.option("--nodes", default=None, help="TreeWorld node counts, e.g. '7,15'.")
@click.option("--branching", type=int, default=None, help="TreeWorld max children per node.")
@click.option("--reveal-fraction", type=float, default=None)
@click.option("--unreachable-rate", type=float, default=None)
@click.option("--grid-sizes", default=None, help="GridWorld board sizes, e.g. '4,6'.")
@click.option("--hole-density", type=float, default=None)
@click.option("--budget-slack", type=int, default=None)
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
def cmd_generate(spec_path, env_names, seed, episodes, pops, target_len, nodes, branching,
                 reveal_fraction, unreachable_rate, grid_sizes, hole_density, budget_slack, out_path):
    """Write a deterministic TaskInstance JSON-lines file."""
    try:
        spec = load_runspec(spec_path)
        if seed is not None:
            spec["seed"] = seed
        if episodes is not None:
            spec["episodes_per_cell"] = episodes
        if env_names:
            spec["envs"] = {k: v for k, v in spec["envs"].items() if k in env_names}
            if not spec["envs"]:
                raise ConfigError(f"no environments selected from {env_names}")
        overrides = {
            ("listworld", "pops"): _parse_int_list(pops) if pops else None,
            ("listworld", "target_len"): target_len,
            ("treeworld", "nodes"): _parse_int_list(nodes) if nodes else None,
            ("treeworld", "branching"): branching,
            ("treeworld", "reveal_fraction"): reveal_fraction,
            ("treeworld", "unreachable_rate"): unreachable_rate,
            ("gridworld", "sizes"): _parse_int_list(grid_sizes) if grid_sizes else None,
            ("gridworld", "hole_density"): hole_density,
            ("gridworld", "budget_slack"): budget_slack,
        }
        for (env_name, field), value in overrides.items():
            if value is not None and env_name in spec["envs"]:
                spec["envs"][env_name][field] = value
        instances = generate_instances(spec)
    except (ConfigError, ValueError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    with open(out_path, "w", encoding="utf-8") as fh:
        for inst in instances:
            fh.write(to_json_line(inst) + "\n")
    click.echo(f"wrote {len(instances)} instances to {out_path}")


@main.command("run")
@click.option("--instances", "instances_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--spec", "spec_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--config", "config_labels", multiple=True,
              help="Oracle config label like 'none', 'S,P', 'S,P,H', or 'all'; repeatable.")
@click.option("--policy", "policy_kind", default=None,
              type=click.Choice([k.value for k in agent.PolicyKind]))
@click.option("--epsilon", type=float, default=None, help="Error rate for epsilon_noisy.")
@click.option("--policy-seed", type=int, default=None)
@click.option("--endpoint", default=None, help="Chat-completions base URL for llm policies.")
@click.option("--model", default=None)
@click.option("--temperature", type=float, default=None)
@click.option("--max-tokens", type=int, default=None)
@click.option("--mode", type=click.Choice(["record", "replay", "live"]), default="live")
@click.option("--cassette", "cassette_path", type=click.Path(dir_okay=False), default=None)
@click.option("--concurrency", type=int, default=None)
@click.option("--treeworld-mode", type=click.Choice(list(oracle.TREEWORLD_MODES)), default=None)
def cmd_run(instances_path, out_path, spec_path, config_labels, policy_kind, epsilon, policy_seed,
            endpoint, model, temperature, max_tokens, mode, cassette_path, concurrency, treeworld_mode):
    """Run every (instance x config) episode; resumable and streaming."""
    try:
        spec = load_runspec(spec_path)
        if policy_kind is not None:
            spec["policy"]["kind"] = policy_kind
        for key, value in (("epsilon", epsilon), ("seed", policy_seed), ("endpoint", endpoint),
                           ("model", model), ("temperature", temperature), ("max_tokens", max_tokens)):
            if value is not None:
                spec["policy"][key] = value
        if concurrency is not None:
            spec["concurrency"] = concurrency
        if treeworld_mode is not None:
            spec["treeworld_mode"] = treeworld_mode
        configs = _resolve_configs(config_labels or spec["configs"])
        policy = _build_policy(spec["policy"])
        client = _build_client(policy, mode, cassette_path)
    except (ConfigError, ValueError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)

    try:
        instances = read_instances(instances_path)
    except DecodeError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_EMPTY)
    if not instances:
        click.echo("error: no instances in input file", err=True)
        sys.exit(EXIT_EMPTY)

    done_keys: set[str] = set()
    if os.path.exists(out_path):
        for traj in read_trajectories(out_path):
            done_keys.add(_episode_key(traj.instance_id, traj.config, str(traj.meta.get("policy", ""))))

    policy_fp = policy.fingerprint()
    jobs = [
        (inst, config)
        for inst in instances
        for config in configs
        if _episode_key(inst.id, config, policy_fp) not in done_keys
    ]
    click.echo(f"{len(jobs)} episodes to run ({len(done_keys)} already complete)")

    failures = 0
    completed = 0
    with open(out_path, "a", encoding="utf-8") as fh:
        with ThreadPoolExecutor(max_workers=spec["concurrency"]) as pool:
            futures = {
                pool.submit(
                    agent.run_episode, inst, policy, config,
                    client=client, treeworld_mode=spec["treeworld_mode"],
                ): (inst, config)
                for inst, config in jobs
            }
            for future in as_completed(futures):
                inst, config = futures[future]
                try:
                    traj = future.result()
                except agent.PolicyFailure as exc:
                    failures += 1
                    click.echo(f"policy failure on {inst.id} [{config.label()}]: {exc}", err=True)
                    continue
                fh.write(to_json_line(traj) + "\n")
                fh.flush()
                completed += 1
    click.echo(f"completed {completed} episodes -> {out_path}")
    if failures:
        click.echo(f"{failures} episodes failed; rerun to retry them", err=True)
        sys.exit(EXIT_POLICY)


@main.command("report")
@click.option("--trajectories", "trajectories_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--group-by", default="env,config", help="Comma-joined subset of env,config,horizon,policy.")
@click.option("--out-csv", type=click.Path(dir_okay=False), default=None)
@click.option("--out-jsonl", type=click.Path(dir_okay=False), default=None)
def cmd_report(trajectories_path, group_by, out_csv, out_jsonl):
    """Aggregate a trajectories file into success-rate/step-accuracy tables."""
    try:
        trajectories = read_trajectories(trajectories_path)
    except DecodeError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_EMPTY)
    if not trajectories:
        click.echo("error: no episodes", err=True)
        sys.exit(EXIT_EMPTY)
    try:
        fields = tuple(f.strip() for f in group_by.split(",") if f.strip())
        reports = evaluation.aggregate(trajectories, fields)
    except ValueError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    if out_csv:
        evaluation.export_results(reports, "csv", out_csv)
        click.echo(f"wrote {out_csv}")
    if out_jsonl:
        evaluation.export_results(reports, "jsonl", out_jsonl)
        click.echo(f"wrote {out_jsonl}")
    header = f"{'env':<12}{'config':<8}{'horizon':<9}{'policy':<34}{'n':>6}{'success':>9}{'step_acc':>9}{'ci95':>7}"
    click.echo(header)
    click.echo("-" * len(header))
    for r in reports:
        click.echo(
            f"{r.env:<12}{r.config:<8}{r.horizon:<9}{r.policy:<34}{r.episodes:>6}"
            f"{r.success_rate:>9.4f}{r.step_accuracy:>9.4f}{r.ci95:>7.4f}"
        )


if __name__ == "__main__":
    main()
