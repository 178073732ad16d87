from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hopgame.pseudo import (
    InconsistentPlan,
    InvalidPartition,
    MergePartition,
    OverflowedEntry,
    PseudoDistribution,
    PseudoDistributionError,
    SplitPlan,
    array_entropy,
    entropy,
    merge,
    split,
)
from oracles import brute_force_entropy

unit = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)


def pd(*values):
    return PseudoDistribution.from_sequence(values)


class TestPseudoDistribution:
    def test_rejects_out_of_range(self):
        with pytest.raises(PseudoDistributionError):
            pd(0.5, 1.5)
        with pytest.raises(PseudoDistributionError):
            pd(-0.1)

    def test_size_cached(self):
        p = pd(0.25, 0.5)
        assert p.size == pytest.approx(0.75, abs=1e-12)
        with pytest.raises(PseudoDistributionError):
            PseudoDistribution({0: 0.5}, size=0.6)

    def test_mass_and_missing_keys(self):
        p = pd(0.1, 0.2, 0.3)
        assert p.mass([0, 2, 7]) == pytest.approx(0.4)
        assert p[9] == 0.0


class TestEntropy:
    def test_point_mass(self):
        assert entropy(pd(1.0)) == 0.0

    def test_two_point_uniform(self):
        assert entropy(pd(0.5, 0.5)) == pytest.approx(math.log(2), abs=1e-12)

    def test_three_point(self):
        # Frozen from an independent scalar sum: 0.5 ln 2 + 0.5 ln 4.
        assert entropy(pd(0.5, 0.25, 0.25)) == pytest.approx(1.0397207708399179, abs=1e-12)

    def test_zero_entry_contributes_nothing(self):
        assert entropy(pd(0.0, 1.0)) == 0.0

    def test_array_entropy_agrees(self):
        x = np.array([[0.5, 0.25], [0.0, 0.25]])
        assert array_entropy(x) == pytest.approx(brute_force_entropy(x.ravel()), abs=1e-12)

    @given(st.lists(unit, min_size=1, max_size=30), st.randoms())
    def test_permutation_invariant(self, values, rnd):
        shuffled = list(values)
        rnd.shuffle(shuffled)
        assert entropy(pd(*values)) == pytest.approx(entropy(pd(*shuffled)), abs=1e-9)

    @given(st.lists(unit, min_size=1, max_size=30))
    def test_nonnegative(self, values):
        assert entropy(pd(*values)) >= 0.0


class TestSplit:
    def test_uniform_four_way(self):
        q = split(pd(1.0), SplitPlan({0: [0.25] * 4}))
        assert sorted(q.values.values()) == [0.25] * 4
        assert entropy(q) - 0.0 == pytest.approx(math.log(4), abs=1e-12)

    def test_identity(self):
        q = split(pd(0.6), SplitPlan({0: [0.6]}))
        assert entropy(q) == pytest.approx(entropy(pd(0.6)), abs=1e-15)

    def test_halving(self):
        p = pd(0.8, 0.2)
        q = split(p, SplitPlan({0: [0.4, 0.4], 1: [0.1, 0.1]}))
        assert entropy(q) == pytest.approx(entropy(p) + math.log(2), abs=1e-12)
        assert q.size == pytest.approx(p.size, abs=1e-12)

    def test_keys(self):
        q = split(pd(0.5, 0.5), SplitPlan({1: [0.25, 0.25]}))
        assert set(q.values) == {(0, 0), (1, 0), (1, 1)}

    def test_inconsistent_plan(self):
        with pytest.raises(InconsistentPlan):
            split(pd(0.5), SplitPlan({0: [0.2, 0.2]}))
        with pytest.raises(InconsistentPlan):
            split(pd(0.5), SplitPlan({3: [0.5]}))

    def test_plan_statistics(self):
        p = pd(0.8, 0.2)
        plan = SplitPlan({0: [0.4, 0.2, 0.2], 1: [0.2]})
        assert plan.max_fanout() == 3
        assert plan.min_split_factor(p) == pytest.approx(1.0)


class TestMerge:
    def test_merge_all(self):
        p = merge(pd(0.25, 0.25, 0.25, 0.25), MergePartition([{0, 1, 2, 3}]))
        assert p[0] == pytest.approx(1.0)
        assert entropy(p) >= math.log(4) - 1.0 * math.log(4) - 1e-12

    def test_singletons(self):
        q = pd(0.3, 0.7)
        p = merge(q, MergePartition([{0}, {1}]))
        assert entropy(p) == pytest.approx(entropy(q), abs=1e-15)

    def test_pairs(self):
        q = pd(0.1, 0.2, 0.3, 0.4)
        p = merge(q, MergePartition([{0, 1}, {2, 3}]))
        assert [p[0], p[1]] == pytest.approx([0.3, 0.7])
        assert entropy(p) >= entropy(q) - math.log(2) - 1e-12
        assert entropy(p) <= entropy(q) + 1e-12

    def test_overflow(self):
        with pytest.raises(OverflowedEntry):
            merge(pd(0.7, 0.7), MergePartition([{0, 1}]))

    def test_partition_errors(self):
        with pytest.raises(InvalidPartition):
            MergePartition([{0, 1}, {1, 2}])
        with pytest.raises(InvalidPartition):
            merge(pd(0.1, 0.2), MergePartition([{0}]))


def _random_split(p, rng, max_parts):
    parts = {}
    for i, v in p.values.items():
        k = int(rng.integers(1, max_parts + 1))
        w = rng.dirichlet(np.ones(k))
        chunk = list(v * w[:-1])
        chunk.append(v - math.fsum(chunk))
        parts[i] = [max(x, 0.0) for x in chunk]
    return SplitPlan(parts)


class TestInequalities:
    @given(st.lists(st.tuples(unit, unit), min_size=1, max_size=20))
    def test_subadditive(self, pairs):
        a = [x * (1 - y) for x, y in pairs]
        b = [(1 - x) * y for x, y in pairs]
        joint = [x + y for x, y in zip(a, b)]
        assert brute_force_entropy(joint) <= brute_force_entropy(a) + brute_force_entropy(b) + 1e-9

    @settings(max_examples=200)
    @given(st.integers(0, 2**32 - 1))
    def test_split_bounds(self, seed):
        rng = np.random.default_rng(seed)
        p = pd(*rng.random(int(rng.integers(1, 12))))
        plan = _random_split(p, rng, 5)
        q = split(p, plan)
        gamma = plan.min_split_factor(p)
        if math.isfinite(gamma) and gamma >= 1:
            assert entropy(q) >= entropy(p) + p.size * math.log(gamma) - 1e-9
        assert entropy(q) <= entropy(p) + p.size * math.log(plan.max_fanout()) + 1e-9

    @settings(max_examples=200)
    @given(st.integers(0, 2**32 - 1))
    def test_merge_inverts_split(self, seed):
        rng = np.random.default_rng(seed)
        p = pd(*rng.random(int(rng.integers(1, 12))))
        plan = _random_split(p, rng, 4)
        back = merge(split(p, plan), MergePartition.inverse_of(plan, p))
        for i in range(len(p)):
            assert back[i] == pytest.approx(p[i], abs=1e-12)

    @settings(max_examples=200)
    @given(st.integers(0, 2**32 - 1))
    def test_merge_lower_bound(self, seed):
        rng = np.random.default_rng(seed)
        m = int(rng.integers(1, 16))
        q = pd(*(rng.random(m) / m))
        labels = rng.integers(0, max(1, m // 2), size=m)
        groups = [set(np.flatnonzero(labels == g).tolist()) for g in np.unique(labels)]
        part = MergePartition(groups)
        p = merge(q, part)
        assert entropy(p) >= entropy(q) - q.size * math.log(part.factor) - 1e-9
        assert entropy(p) <= entropy(q) + 1e-9
