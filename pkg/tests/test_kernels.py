"""Parity between the compiled and pure kernel lanes, plus direct checks
against the brute-force references."""

import random

import pytest
from hypothesis import given, settings, strategies as st

from lumina._kernels import pure
from oracles import ListBruteOracle, grid_brute_min_cost

try:
    from lumina._kernels import _cykernels as compiled
except ImportError:
    compiled = None

LANES = [pure] + ([compiled] if compiled is not None else [])


def _random_grid(rng, size):
    holes = [1 if rng.random() < 0.3 else 0 for _ in range(size * size)]
    origin = rng.randrange(size * size)
    holes[origin] = 0
    return holes, origin


@pytest.mark.skipif(compiled is None, reason="compiled kernels not built")
class TestLaneParity:
    @given(
        data=st.data(),
        n=st.integers(min_value=0, max_value=8),
        m=st.integers(min_value=0, max_value=8),
        lock=st.integers(min_value=0, max_value=8),
    )
    @settings(max_examples=300)
    def test_list_kernels_agree(self, data, n, m, lock):
        current = [data.draw(st.integers(min_value=0, max_value=3)) for _ in range(n)]
        target = [data.draw(st.integers(min_value=0, max_value=3)) for _ in range(m)]
        lock = min(lock, n)
        assert pure.list_solvable(current, target, lock) == compiled.list_solvable(
            current, target, lock
        )
        assert pure.list_optimal_pops(current, target, lock) == compiled.list_optimal_pops(
            current, target, lock
        )

    @pytest.mark.parametrize("seed", range(30))
    def test_grid_kernels_agree(self, seed):
        rng = random.Random(seed)
        size = rng.randint(2, 9)
        holes, origin = _random_grid(rng, size)
        assert pure.grid_min_cost_from(size, holes, origin) == compiled.grid_min_cost_from(
            size, holes, origin
        )
        assert pure.grid_min_cost_to(size, holes, origin) == compiled.grid_min_cost_to(
            size, holes, origin
        )


@pytest.mark.parametrize("lane", LANES, ids=lambda m: m.__name__.rsplit(".", 1)[-1])
class TestKernelSemantics:
    def test_solvable_matches_brute_force(self, lane):
        rng = random.Random(1)
        for _ in range(200):
            n = rng.randint(0, 7)
            current = tuple(rng.choice("ab") for _ in range(n))
            target = tuple(rng.choice("ab") for _ in range(rng.randint(0, n)))
            lock = rng.randint(0, n)
            brute = ListBruteOracle(target).min_steps(current, lock) is not None
            ids = {t: i for i, t in enumerate(dict.fromkeys(current + target))}
            got = lane.list_solvable([ids[t] for t in current], [ids[t] for t in target], lock)
            assert got == brute, (current, target, lock)

    def test_grid_to_and_from_are_consistent(self, lane):
        # dist_to(v, goal) == dist_from(goal)[v] - entry(v) + 1 when the goal
        # is not a hole (path reversal swaps which endpoint gets entered).
        rng = random.Random(2)
        for _ in range(20):
            size = rng.randint(2, 6)
            holes, goal = _random_grid(rng, size)
            to_goal = lane.grid_min_cost_to(size, holes, goal)
            from_goal = lane.grid_min_cost_from(size, holes, goal)
            for cell in range(size * size):
                entry = 4 if holes[cell] else 1
                assert to_goal[cell] == from_goal[cell] - entry + 1 or cell == goal

    def test_grid_from_matches_brute_force(self, lane):
        from lumina.envs.gridworld import GridWorld

        rng = random.Random(3)
        for _ in range(15):
            size = rng.randint(2, 4)
            holes, origin = _random_grid(rng, size)
            world = GridWorld(
                size=size,
                start=divmod(origin, size),
                goal=divmod(origin, size),
                holes=frozenset(divmod(i, size) for i, h in enumerate(holes) if h),
                max_moves=0,
            )
            dist = lane.grid_min_cost_from(size, holes, origin)
            for cell in range(size * size):
                expected = grid_brute_min_cost(world, divmod(origin, size), divmod(cell, size))
                assert dist[cell] == expected
