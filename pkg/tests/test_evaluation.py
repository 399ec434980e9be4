"""Scoring, aggregation, and export."""

import math

import pytest

from lumina import evaluation
from lumina.agent import PolicyHandle, PolicyKind, run_episode
from lumina.core import (
    ActionCall,
    OracleConfig,
    TerminationCause,
    Trajectory,
    Turn,
)
from lumina.envs import gen_listworld
from lumina.evaluation import (
    EmptyTrajectory,
    MetricsReport,
    aggregate,
    binomial_ci95,
    export_results,
    load_reports_jsonl,
    score_trajectory,
)


def make_traj(optimal_flags, success, env="listworld", t_star=4, policy="p", config=None):
    turns = tuple(
        Turn(i, "f" * 16, "raw", ActionCall.make("done"), flag, "obs")
        for i, flag in enumerate(optimal_flags)
    )
    return Trajectory(
        instance_id="i",
        config=config or OracleConfig(),
        turns=turns,
        success=success,
        terminated_by=TerminationCause.AGENT_DONE if success else TerminationCause.ENV_BUDGET,
        meta={"env": env, "t_star": t_star, "policy": policy, "seed": 0},
    )


class TestScoreTrajectory:
    def test_ratio(self):
        success, accuracy = score_trajectory(make_traj([True, True, True, False], False))
        assert not success
        assert accuracy == 0.75

    def test_empty_raises(self):
        with pytest.raises(EmptyTrajectory):
            score_trajectory(make_traj([], False))

    def test_follower_scores_perfectly(self):
        inst = gen_listworld(3, 2, seed=61)
        traj = run_episode(inst, PolicyHandle(kind=PolicyKind.ORACLE_FOLLOWER), OracleConfig())
        assert score_trajectory(traj) == (True, 1.0)


class TestAggregate:
    def test_single_group_mean(self):
        reports = aggregate([make_traj([True], True), make_traj([False], False)])
        assert len(reports) == 1
        assert reports[0].success_rate == 0.5
        assert reports[0].episodes == 2
        assert math.isclose(reports[0].ci95, 1.96 * math.sqrt(0.25 / 2))

    def test_group_by_horizon_builds_curve(self):
        trajectories = []
        for t_star, succ in [(2, True), (2, True), (4, True), (4, False), (8, False)]:
            trajectories.append(make_traj([True] * t_star, succ, t_star=t_star))
        reports = aggregate(trajectories, ("env", "horizon"))
        by_horizon = {r.horizon: r.success_rate for r in reports}
        assert by_horizon == {"2": 1.0, "4": 0.5, "8": 0.0}
        assert [r.horizon for r in reports] == ["2", "4", "8"]  # numeric ordering

    def test_ungrouped_dimensions_read_all(self):
        reports = aggregate([make_traj([True], True)], ("env",))
        assert reports[0].config == "all"
        assert reports[0].policy == "all"

    def test_zero_turn_trajectories_are_filtered_not_nan(self):
        reports = aggregate([make_traj([], False), make_traj([True], True)])
        assert len(reports) == 1
        assert reports[0].episodes == 1

    def test_unknown_group_field_rejected(self):
        with pytest.raises(ValueError):
            aggregate([make_traj([True], True)], ("model",))


class TestExport:
    def _reports(self):
        return aggregate(
            [make_traj([True, False], True), make_traj([True], False, env="gridworld")]
        )

    def test_csv_layout(self, tmp_path):
        path = str(tmp_path / "out.csv")
        export_results(self._reports(), "csv", path)
        lines = open(path).read().splitlines()
        assert lines[0] == "env,config,horizon,policy,episodes,success_rate,step_accuracy,ci95"
        assert len(lines) == 3
        assert lines[1].startswith("gridworld,none,all,all,1,0.0000,")

    def test_reexport_is_byte_identical(self, tmp_path):
        a, b = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
        export_results(self._reports(), "csv", a)
        export_results(self._reports(), "csv", b)
        assert open(a, "rb").read() == open(b, "rb").read()

    def test_jsonl_round_trip_equals_originals(self, tmp_path):
        path = str(tmp_path / "out.jsonl")
        reports = self._reports()
        export_results(reports, "jsonl", path)
        assert load_reports_jsonl(path) == reports

    def test_unknown_format_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            export_results(self._reports(), "xml", str(tmp_path / "x"))


class TestCompoundingShape:
    def test_step_accuracy_dominates_success_for_noisy_listworld(self):
        # Small-scale version of the acceptance check: noisy rollouts keep
        # step accuracy above the success rate.
        noisy = PolicyHandle(kind=PolicyKind.EPSILON_NOISY, epsilon=0.15, seed=3)
        trajectories = [
            run_episode(gen_listworld(3, 5, seed=s), noisy, OracleConfig()) for s in range(80)
        ]
        report = aggregate(trajectories)[0]
        assert 0.0 < report.success_rate < 1.0
        assert report.step_accuracy > report.success_rate


class TestCi:
    def test_degenerate_population(self):
        assert binomial_ci95(0.0, 10) == 0.0
        assert binomial_ci95(1.0, 10) == 0.0
        assert binomial_ci95(0.5, 0) == 0.0
