from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hopgame.clustering import Grouping
from hopgame.game import CommodityState, DegreeViolation, MatchingBatch, build_step, commodity_step, measure_typicality
from hopgame.game.engine import _group_matchings, pairwise_cuts
from hopgame.game.players import random_player, PlayerContext
from hopgame.game.walk import REMOVED, SELF, fan_counts, locality_violations, walk_value_bounds
from hopgame.graph import MultiGraph
from hopgame.mixing import MixerSystem, mix


def step_for(grouping: Grouping, batch: MatchingBatch, k: int, first_id: int = 0):
    return build_step(grouping.n, k, _group_matchings(grouping, batch, first_id))


def random_grouping(rng: np.random.Generator):
    """Groups of k equal blocks over a random vertex subset; blocks may repeat across groups."""
    n = int(rng.integers(4, 16))
    k = int(rng.integers(2, 4))
    size = int(rng.integers(1, max(2, n // k) + 1))
    if size * k > n:
        size = n // k
    groups = []
    for _ in range(int(rng.integers(1, 4))):
        verts = rng.permutation(n)[: size * k]
        groups.append([sorted(verts[i * size:(i + 1) * size].tolist()) for i in range(k)])
    grouping = Grouping(n, groups, 1)
    cuts = pairwise_cuts(grouping)
    batch = random_player(cuts, PlayerContext(MultiGraph(n), np.eye(n), rng))
    return grouping, batch, k


class TestBuildStep:
    def test_empty_batch_keeps_state(self):
        step = build_step(5, 2, [])
        assert step.idle.all()
        state = CommodityState.fresh(5)
        assert np.array_equal(commodity_step(state, step).P, state.P)

    def test_two_groups_of_singletons(self):
        grouping = Grouping(4, [[[0], [1]], [[2], [3]]], 1)
        batch = MatchingBatch((((0, 1),), ((2, 3),)))
        step = step_for(grouping, batch, 2)
        P = commodity_step(CommodityState.fresh(4), step).P
        # Hand evaluation: each commodity splits over two identical mixers and returns half and half.
        expected = np.array([[0.5, 0.5, 0, 0], [0.5, 0.5, 0, 0], [0, 0, 0.5, 0.5], [0, 0, 0.5, 0.5]])
        assert P == pytest.approx(expected)
        assert P.sum(axis=0) == pytest.approx(np.ones(4))
        gain = sum(-x * math.log(x) for x in P.ravel() if x > 0)
        assert gain == pytest.approx(4 * math.log(2))

    def test_matches_mixing_module(self):
        # One group, k = 3, blocks of one vertex: the walk equals two-step mixing with the closed neighbourhoods.
        grouping = Grouping(3, [[[0], [1], [2]]], 1)
        batch = MatchingBatch((((0, 1),), ((0, 2),), ((1, 2),)))
        step = step_for(grouping, batch, 3)
        system = MixerSystem(range(3), [[0, 1, 2]] * 3)
        for v in range(3):
            p = np.eye(3)[:, v]
            ref = mix(p, system)
            assert step.operator() @ p == pytest.approx([ref[i] for i in range(3)])

    def test_wrong_block_count(self):
        grouping = Grouping(4, [[[0], [1]]], 1)
        with pytest.raises(DegreeViolation):
            step_for(grouping, MatchingBatch((((0, 1),),)), 3)

    def test_edge_ids(self):
        grouping = Grouping(4, [[[0, 1], [2, 3]]], 1)
        batch = MatchingBatch((((0, 2), (1, 3)),), frozenset({(0, 1, 3)}))
        step = step_for(grouping, batch, 2, first_id=10)
        assert set(np.unique(step.e1)) == {SELF, REMOVED, 10}


class TestTypicality:
    def test_fresh_state(self):
        stats = measure_typicality(CommodityState.fresh(6))
        assert stats.alpha == 1.0 and (stats.leakage == 0).all()

    def test_idle_vertex_leaks_everything(self):
        n = 6
        idle = np.zeros(n, dtype=bool)
        idle[2] = True
        stats = measure_typicality(CommodityState.fresh(n), idle_now=idle)
        assert stats.alpha == pytest.approx((n - 1) / n)
        assert stats.leakage[2] == pytest.approx(1.0)
        assert stats.by_cause["idle"][2] == pytest.approx(1.0)

    def test_cut_edge_leaks(self):
        grouping = Grouping(2, [[[0], [1]]], 1)
        step = step_for(grouping, MatchingBatch((((0, 1),),)), 2)
        state = commodity_step(CommodityState.fresh(2), step)
        # Edge 0 carried half of each commodity across; cutting it afterwards leaks that half.
        stats = measure_typicality(state, extra_cut={0})
        assert stats.leakage == pytest.approx([0.75, 0.75])
        assert stats.by_cause["removed"] == pytest.approx([0, 0])

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_leakage_matches_route_recount(self, seed):
        rng = np.random.default_rng(seed)
        grouping, batch, k = random_grouping(rng)
        n = grouping.n
        state = CommodityState.fresh(n)
        steps = []
        for it in range(2):
            step = step_for(grouping, batch, k, first_id=100 * it)
            steps.append(step)
            state = commodity_step(state, step)
        bad = {int(x) for x in rng.choice(200, size=5)}
        T = state.typical(extra_cut=bad)
        # Recount by pushing typical mass route by route.
        ref = np.eye(n)
        for step in steps:
            nxt = np.zeros((n, n))
            nxt[step.idle] += 0.0
            for s, d, w, a, b in zip(step.src, step.dst, step.weight, step.e1, step.e2):
                if a in bad or b in bad or a == REMOVED or b == REMOVED or step.idle[s]:
                    continue
                nxt[d] += w * ref[s]
            ref = nxt
        assert T == pytest.approx(ref, abs=1e-12)
        assert state.leakage(T) == pytest.approx(np.clip(state.P.sum(0) - ref.sum(0), 0, None), abs=1e-12)


class TestStepProperties:
    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_doubly_stochastic_and_stable(self, seed):
        rng = np.random.default_rng(seed)
        grouping, batch, k = random_grouping(rng)
        state = CommodityState.fresh(grouping.n)
        for it in range(3):
            step = step_for(grouping, batch, k, 50 * it)
            new = commodity_step(state, step)
            assert new.P.sum(axis=0) == pytest.approx(np.ones(grouping.n), abs=1e-9)
            assert new.P.sum(axis=1) == pytest.approx(np.ones(grouping.n), abs=1e-9)
            ent = lambda M: (-(M[M > 0]) * np.log(M[M > 0])).sum()
            for nu in range(grouping.n):
                assert ent(new.P[:, nu]) >= ent(state.P[:, nu]) - 1e-9
            state = new
        assert ent(state.P) <= grouping.n * math.log(grouping.n) + 1e-9

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_walk_values_and_fan_counts(self, seed):
        rng = np.random.default_rng(seed)
        grouping, batch, k = random_grouping(rng)
        step = step_for(grouping, batch, k)
        ok, lo, hi = walk_value_bounds(step)
        assert ok
        fan_out, fan_in = fan_counts(step, np.eye(grouping.n))
        assert fan_out >= k * k
        assert fan_in <= int(step.load.max()) * k + 1

    def test_locality_counter(self):
        T = np.array([[1.0, 0.0], [0.0, 1.0], [0.5, 0.0]])
        assert locality_violations(T, [[[0], [1]]]) == 0
        assert locality_violations(T, [[[0], [2]]]) == 1
