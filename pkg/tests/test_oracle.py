"""Optimal-action sets, intervention rendering, context composition."""

import ast
import re

import pytest

from lumina import agent, oracle
from lumina.core import ActionCall, OracleConfig, seeded_rng
from lumina.envs import gen_gridworld, gen_listworld, gen_treeworld, gridworld, listworld, reset, treeworld
from oracles import (
    ListBruteOracle,
    grid_brute_min_cost,
    grid_brute_optimal_moves,
    tree_definitional_optimal,
)

pop = lambda i: ActionCall.make("pop", id=i)
done = ActionCall.make("done")


def list_state(current, target, lock):
    return listworld.ListState(tuple(current), tuple(current), tuple(target), lock)


class TestListSolvable:
    def test_matched_prefix_and_embeddable_suffix(self):
        assert oracle.list_solvable(list_state("bac", "bc", 1))

    def test_locked_prefix_mismatch(self):
        assert not oracle.list_solvable(list_state("abc", "bc", 2))

    def test_goal_state(self):
        assert oracle.list_solvable(list_state("bc", "bc", 2))

    def test_target_longer_than_current(self):
        assert not oracle.list_solvable(list_state("a", "ab", 0))


class TestOptimalActionsListworld:
    def test_unique_optimal_pop(self):
        state = list_state("abac", "bc", 0)
        assert oracle.optimal_actions_listworld(state) == {pop(0)}

    def test_duplicates_give_multiple_optima(self):
        state = list_state("xx", "x", 0)
        assert oracle.optimal_actions_listworld(state) == {pop(0), pop(1)}

    def test_goal_gives_done(self):
        state = list_state("bc", "bc", 0)
        assert oracle.optimal_actions_listworld(state) == {done}

    def test_unsolvable_raises(self):
        with pytest.raises(oracle.UnsolvableState):
            oracle.optimal_actions_listworld(list_state("abc", "bc", 2))

    @pytest.mark.parametrize("seed", range(15))
    def test_matches_brute_force_along_random_walks(self, seed):
        rng = seeded_rng(seed, "test/list-oracle")
        inst = gen_listworld(3, 3, seed=seed)
        brute = ListBruteOracle(inst.world.target)
        state = reset(inst)
        while True:
            expected = brute.optimal_actions(state.current, state.lock)
            if expected is None:
                with pytest.raises(oracle.UnsolvableState):
                    oracle.optimal_actions_listworld(state)
                break
            assert oracle.optimal_actions_listworld(state) == expected
            legal = listworld.legal_actions(state)
            action = rng.choice(legal)
            if action == done:
                break
            state, _ = listworld.step_listworld(state, action)

    def test_irrecoverability_of_wrong_pops(self):
        # Any pop outside the optimal set makes the state permanently unsolvable.
        inst = gen_listworld(3, 2, seed=21)
        state = reset(inst)
        optimal = oracle.optimal_actions_listworld(state)
        for action in listworld.legal_actions(state):
            if action.name != "pop" or action in optimal:
                continue
            broken, _ = listworld.step_listworld(state, action)
            assert not oracle.list_solvable(broken)
            # and it stays broken after any further pops
            for follow_up in listworld.legal_actions(broken):
                if follow_up.name == "pop":
                    worse, _ = listworld.step_listworld(broken, follow_up)
                    assert not oracle.list_solvable(worse)


class TestOptimalActionsTreeworld:
    def test_fresh_state_expands_root(self):
        inst = gen_treeworld(2, 7, 0.0, 0.0, seed=5)
        state = reset(inst)
        assert oracle.optimal_actions_treeworld(state) == {
            ActionCall.make("get_children", id=inst.world.root)
        }

    def test_revealed_target_forces_found(self):
        inst = gen_treeworld(2, 7, 0.0, 0.0, seed=5)
        state = reset(inst)
        while not state.target_revealed:
            action = oracle.canonical_optimal_action(inst, state)
            state, _ = treeworld.step_treeworld(state, action)
        assert oracle.optimal_actions_treeworld(state) == {
            ActionCall.make("found", id=inst.world.target_id)
        }

    def test_exploration_allows_all_frontier_hindsight_only_on_path(self):
        inst = gen_treeworld(2, 7, 0.0, 0.0, seed=6)
        state = reset(inst)
        state, _ = treeworld.step_treeworld(
            state, ActionCall.make("get_children", id=inst.world.root)
        )
        exploration = oracle.optimal_actions_treeworld(state, "exploration")
        hindsight = oracle.optimal_actions_treeworld(state, "hindsight")
        frontier = state.frontier()
        assert exploration == {ActionCall.make("get_children", id=n) for n in frontier}
        assert hindsight <= exploration
        path = set(treeworld.path_from_root(inst.world, inst.world.target_id))
        assert hindsight == {
            ActionCall.make("get_children", id=n) for n in frontier if n in path
        }

    def test_empty_frontier_with_absent_target_forces_unreachable(self):
        inst = gen_treeworld(2, 4, 0.0, 1.0, seed=7)
        state = reset(inst)
        while state.frontier():
            nid = state.frontier()[0]
            assert oracle.optimal_actions_treeworld(state) == {
                ActionCall.make("get_children", id=n) for n in state.frontier()
            }
            state, _ = treeworld.step_treeworld(state, ActionCall.make("get_children", id=nid))
        assert oracle.optimal_actions_treeworld(state) == {ActionCall.make("unreachable")}

    def test_hindsight_equals_exploration_when_target_absent(self):
        inst = gen_treeworld(2, 5, 0.0, 1.0, seed=8)
        state = reset(inst)
        assert oracle.optimal_actions_treeworld(state, "hindsight") == (
            oracle.optimal_actions_treeworld(state, "exploration")
        )

    def test_matches_definitional_recomputation(self):
        inst = gen_treeworld(3, 11, 0.3, 0.0, seed=9)
        state = reset(inst)
        rng = seeded_rng(9, "test/tree-oracle")
        actions = []
        for _ in range(8):
            got = oracle.optimal_actions_treeworld(state)
            expected = tree_definitional_optimal(inst.world, set(state.revealed), set(state.expanded))
            assert got == expected
            if state.target_revealed:
                break
            action = ActionCall.make("get_children", id=rng.choice(state.frontier()))
            actions.append(action)
            state, _ = treeworld.step_treeworld(state, action)


class TestGridMinCost:
    def test_manhattan_without_holes(self):
        world = gridworld.GridWorld(3, (0, 0), (2, 2), frozenset(), 4)
        assert oracle.grid_min_cost(world, (0, 0))[(2, 2)] == 4

    def test_detour_beats_hole(self):
        world = gridworld.GridWorld(3, (0, 0), (0, 2), frozenset({(0, 1)}), 4)
        dist = oracle.grid_min_cost(world, (0, 0))
        assert dist[(0, 2)] == 4  # around, not 5 through the hole

    def test_zero_at_origin(self):
        world = gridworld.GridWorld(3, (0, 0), (2, 2), frozenset(), 4)
        assert oracle.grid_min_cost(world, (2, 2))[(2, 2)] == 0


class TestOptimalActionsGridworld:
    def test_two_shortest_moves(self):
        world = gridworld.GridWorld(3, (0, 0), (2, 2), frozenset(), 8)
        state = gridworld.initial_state(world)
        assert oracle.optimal_actions_gridworld(state) == {
            ActionCall.make("down"),
            ActionCall.make("right"),
        }

    def test_done_at_goal(self):
        world = gridworld.GridWorld(3, (0, 0), (2, 2), frozenset(), 8)
        state = gridworld.GridState(world, (2, 2), 4)
        assert oracle.optimal_actions_gridworld(state) == {done}

    def test_hole_prunes_direction(self):
        world = gridworld.GridWorld(3, (0, 0), (0, 2), frozenset({(0, 1)}), 8)
        state = gridworld.initial_state(world)
        assert oracle.optimal_actions_gridworld(state) == {ActionCall.make("down")}

    def test_budget_infeasible_raises(self):
        world = gridworld.GridWorld(3, (0, 0), (2, 2), frozenset(), 3)
        state = gridworld.GridState(world, (0, 0), 0)
        with pytest.raises(oracle.BudgetInfeasible):
            oracle.optimal_actions_gridworld(state)

    @pytest.mark.parametrize("seed", range(10))
    def test_matches_brute_force_everywhere(self, seed):
        inst = gen_gridworld(4, 0.25, 6, seed=seed)
        world = inst.world
        for r in range(world.size):
            for c in range(world.size):
                state = gridworld.GridState(world, (r, c), 0)
                if (r, c) == world.goal:
                    assert oracle.optimal_actions_gridworld(state) == {done}
                    continue
                if world.max_moves < grid_brute_min_cost(world, (r, c), world.goal):
                    continue
                got = {a.name for a in oracle.optimal_actions_gridworld(state)}
                assert got == grid_brute_optimal_moves(world, (r, c))


class TestOracleSoundness:
    """Following any optimal action repeatedly succeeds in minimal steps."""

    @pytest.mark.parametrize("seed", range(8))
    def test_listworld_all_optimal_paths_are_minimal(self, seed):
        inst = gen_listworld(2, 3, seed=seed)
        brute = ListBruteOracle(inst.world.target)

        def walk(state, budget):
            assert budget >= 1
            actions = oracle.optimal_actions_listworld(state)
            assert actions, "optimal set must be non-empty on solvable states"
            for action in actions:
                if action == done:
                    assert budget == 1
                    continue
                nxt, _ = listworld.step_listworld(state, action)
                walk(nxt, budget - 1)

        state = reset(inst)
        walk(state, brute.min_steps(state.current, state.lock))

    @pytest.mark.parametrize("seed", range(8))
    def test_gridworld_optimal_moves_reach_goal_at_min_cost(self, seed):
        inst = gen_gridworld(4, 0.3, 0, seed=seed)
        world = inst.world
        state = gridworld.initial_state(world)
        expected = grid_brute_min_cost(world, world.start, world.goal)
        while not state.at_goal:
            actions = oracle.optimal_actions_gridworld(state)
            action = sorted(actions, key=lambda a: a.name)[0]
            state, res = gridworld.step_gridworld(state, action)
            assert not res.terminal
        assert state.cost_used == expected


class TestPlanHints:
    def test_listworld_hint_text(self):
        inst = gen_listworld(2, 2, seed=31)
        state = reset(inst)
        hint = oracle.render_plan_hint(inst, state)
        index = oracle.canonical_optimal_action(inst, state).arg("id")
        assert hint == f"Next: pop the element at index {index} (value '{state.current[index]}')."

    def test_gridworld_goal_hint(self):
        world = gridworld.GridWorld(3, (0, 0), (2, 2), frozenset(), 8)
        inst = gen_gridworld(3, 0.0, 0, seed=1)
        state = gridworld.GridState(world, (2, 2), 2)
        assert oracle.render_plan_hint(inst, state) == "Next: you have reached the goal; call done()."

    def test_treeworld_found_hint(self):
        inst = gen_treeworld(2, 3, 0.0, 0.0, seed=2)
        state = reset(inst)
        state, _ = treeworld.step_treeworld(
            state, ActionCall.make("get_children", id=inst.world.root)
        )
        if state.target_revealed:
            hint = oracle.render_plan_hint(inst, state)
            assert hint == f"Next: report found('{inst.world.target_id}')."

    @pytest.mark.parametrize("seed", range(10))
    @pytest.mark.parametrize("gen,args", [
        (gen_listworld, (3, 3)),
        (gen_treeworld, (2, 9, 0.2, 0.3)),
        (gen_gridworld, (4, 0.25, 3)),
    ])
    def test_hint_action_is_always_optimal(self, gen, args, seed):
        # The canonical action named by the hint must sit in the optimal set,
        # at every state along a canonical rollout.
        inst = gen(*args, seed=seed)
        hooks_step = {
            "listworld": listworld.step_listworld,
            "treeworld": treeworld.step_treeworld,
            "gridworld": gridworld.step_gridworld,
        }[inst.env.value]
        state = reset(inst)
        for _ in range(inst.turn_budget):
            action = oracle.canonical_optimal_action(inst, state)
            assert action is not None
            assert action in oracle.optimal_actions(inst, state)
            hint = oracle.render_plan_hint(inst, state)
            assert hint.startswith("Next:")
            state, res = hooks_step(state, action)
            if res.terminal:
                assert res.success
                break


class TestStateSummaries:
    def test_listworld_summary_parses_back(self):
        inst = gen_listworld(3, 2, seed=41)
        state = reset(inst)
        state, _ = listworld.step_listworld(
            state, oracle.canonical_optimal_action(inst, state)
        )
        text = oracle.render_state_summary(inst, state)
        match = re.fullmatch(
            r"Current list: (\[.*\])\. "
            r"(?:Elements before index (\d+) are locked\.|No elements are locked yet\.)",
            text,
        )
        assert match
        assert tuple(ast.literal_eval(match.group(1))) == state.current
        lock = int(match.group(2)) if match.group(2) else 0
        assert lock == state.lock

    def test_listworld_summary_without_lock(self):
        inst = gen_listworld(2, 1, seed=42)
        state = reset(inst)
        text = oracle.render_state_summary(inst, state, include_lock=False)
        assert text == f"Current list: {list(state.current)!r}."

    def test_gridworld_summary_parses_back(self):
        inst = gen_gridworld(4, 0.2, 3, seed=43)
        state = reset(inst)
        state, _ = gridworld.step_gridworld(state, oracle.canonical_optimal_action(inst, state))
        text = oracle.render_state_summary(inst, state)
        match = re.fullmatch(
            r"You are at \((\d+), (\d+)\)\. Moves used: (\d+)\. Remaining moves: (\d+)\.", text
        )
        assert match
        assert (int(match.group(1)), int(match.group(2))) == state.position
        assert int(match.group(3)) == state.cost_used
        assert int(match.group(4)) == state.remaining_moves

    def test_treeworld_summary_recovers_knowledge(self):
        inst = gen_treeworld(2, 9, 0.0, 0.0, seed=44)
        state = reset(inst)
        state, _ = treeworld.step_treeworld(
            state, ActionCall.make("get_children", id=inst.world.root)
        )
        text = oracle.render_state_summary(inst, state)
        lines = text.splitlines()
        assert lines[0] == "Known tree information:"
        parsed = {}
        for line in lines[1:-1]:
            m = re.fullmatch(r"\(id=(\S+), value=(\d+)\) -> (UNKNOWN|\[.*\])", line)
            assert m, line
            parsed[m.group(1)] = m.group(3)
        assert set(parsed) == set(state.revealed)
        expanded = {nid for nid, shown in parsed.items() if shown != "UNKNOWN"}
        assert expanded == set(state.expanded)
        frontier_match = re.fullmatch(r"Frontier \(revealed but unexpanded\): (\[.*\])\.", lines[-1])
        assert frontier_match
        assert tuple(ast.literal_eval(frontier_match.group(1))) == state.frontier()


class TestBuildContext:
    def _setup(self, config):
        inst = gen_listworld(2, 2, seed=51)
        session = agent.EpisodeSession(inst, config)
        return inst, session

    def test_baseline_is_bit_identical_to_unintervened_composition(self):
        inst, session = self._setup(OracleConfig())
        session.apply(agent.scripted_action_text(session.canonical_action()))
        messages = session.context()
        expected = [
            {"role": "system", "content": session.bundle.system_text},
            {"role": "user", "content": session.bundle.task_text},
            {"role": "assistant", "content": session.history[0][0]},
            {"role": "user", "content": session.history[0][1]},
        ]
        assert messages == expected

    def test_plan_only_appends_one_hint_message(self):
        # The task/history portion is unchanged; one oracle message is added.
        # (The system text differs by design: the in-context example variant
        # always matches the active interventions.)
        base_inst, base = self._setup(OracleConfig())
        _, with_plan = self._setup(OracleConfig(plan=True))
        baseline = base.context()
        planned = with_plan.context()
        assert planned[1:-1] == baseline[1:]
        assert planned[-1]["role"] == "user"
        assert planned[-1]["content"] == oracle.render_plan_hint(base_inst, base.state)

    def test_state_and_history_rewrites_task_and_drops_turns(self):
        inst, session = self._setup(OracleConfig(state=True, history=True))
        session.apply(agent.scripted_action_text(session.canonical_action()))
        messages = session.context()
        roles = [m["role"] for m in messages]
        assert roles == ["system", "user", "user"]
        assert f"Initial list: {list(session.state.current)!r}" in messages[1]["content"]
        assert messages[2]["content"] == oracle.render_state_summary(inst, session.state)

    def test_oracle_message_order_is_plan_then_state(self):
        inst, session = self._setup(OracleConfig(plan=True, state=True))
        content = session.context()[-1]["content"]
        lines = content.split("\n")
        assert lines[0].startswith("Next:")
        assert lines[1].startswith("Current list:")
