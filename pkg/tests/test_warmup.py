from __future__ import annotations

import math

import numpy as np
import pytest

from hopgame.harness.warmup import digit_blocks, exact_power, run_warmup


class TestHelpers:
    @pytest.mark.parametrize("n,k,m", [(64, 4, 3), (27, 3, 3), (1, 2, 0), (12, 2, None), (8, 1, None)])
    def test_exact_power(self, n, k, m):
        assert exact_power(n, k) == m

    def test_blocks_partition(self):
        blocks = digit_blocks(16, 4, 1)
        assert sorted(v for b in blocks for v in b) == list(range(16))
        assert blocks[1] == [4, 5, 6, 7]


class TestIdealPlayer:
    @pytest.mark.parametrize("n,k", [(64, 4), (16, 4), (27, 3), (8, 2)])
    def test_exact_increment(self, n, k):
        res = run_warmup(n, k)
        assert len(res.iterations) == exact_power(n, k)
        for it in res.iterations:
            assert it.delta == pytest.approx(n * math.log(k), abs=1e-6)
        assert res.terminated
        assert np.allclose(res.P, 1.0 / n)
        assert res.max_degree == exact_power(n, k) * (k - 1)

    def test_total_reaches_ceiling(self):
        res = run_warmup(64, 4)
        assert res.iterations[-1].entropy_after == pytest.approx(64 * math.log(64))

    def test_cap(self):
        res = run_warmup(64, 4, t=2)
        assert len(res.iterations) == 2 and not res.terminated

    def test_stops_once_uniform(self):
        assert len(run_warmup(16, 4, t=9).iterations) == 2

    def test_bad_n(self):
        with pytest.raises(ValueError):
            run_warmup(48, 4)

    def test_json(self):
        data = run_warmup(16, 4).to_json()
        assert data["terminated"] and len(data["iterations"]) == 2
        assert data["expected_delta"] == pytest.approx(16 * math.log(4))


class TestGamePlayers:
    @pytest.mark.parametrize("player", ["random", "lazy", "locality"])
    def test_never_beats_ideal(self, player):
        res = run_warmup(16, 4, t=2, player=player, seed=3)
        for it in res.iterations:
            assert it.delta <= 16 * math.log(4) + 1e-9
            assert it.delta >= -1e-9
