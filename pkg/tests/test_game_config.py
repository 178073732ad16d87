from __future__ import annotations

import math
import warnings

import pytest

from hopgame.game import GameConfig, InconsistentOverride, SmallEpsilonWarning, derive_config, desk_config


class TestDeriveConfig:
    def test_large_n_defaults(self):
        cfg = derive_config(1024, 0.5)
        assert (cfg.k, cfg.h_sep, cfg.b_max) == (672, 144, 72)
        assert cfg.c == pytest.approx(1 / 324) and cfg.c_prime == 0.5
        assert cfg.h_diam == 576 and cfg.h == 576 and cfg.t == 578
        assert cfg.phi == pytest.approx(672 / (216 * 576))
        assert cfg.check() == []

    def test_constant_overrides(self):
        cfg = derive_config(256, 0.5, {"21": 1, "36": 4})
        assert (cfg.k, cfg.h_sep, cfg.b_max) == (16, 16, 8)

    def test_k_prime_per_iteration(self):
        cfg = derive_config(256, 0.5, {"21": 1, "36": 4})
        assert cfg.k_prime is None
        assert cfg.effective_k_prime(2, 3) == 324 ** 2 * 2 * 3 * 16 == 10_077_696
        fixed = derive_config(256, 0.5, {"21": 1, "36": 4, "k_prime": 99})
        assert fixed.effective_k_prime(2, 3) == 99

    @pytest.mark.parametrize("overrides", [{"k": 1}, {"h_sep": 3}, {"h": 1}, {"t": 2}, {"phi": 1.0}, {"bogus": 1}])
    def test_inconsistent(self, overrides):
        with pytest.raises(InconsistentOverride):
            derive_config(64, 0.5, overrides)

    def test_input_range(self):
        with pytest.raises(ValueError):
            derive_config(0, 0.5)
        with pytest.raises(ValueError):
            derive_config(8, 0.0)

    def test_small_epsilon_warns(self):
        threshold = math.log(math.log(1024)) / math.log(1024)
        with pytest.warns(SmallEpsilonWarning):
            derive_config(1024, threshold / 2, {"21": 1, "36": 1, "k": 2})
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            derive_config(1024, 0.5)

    def test_json_round_trip(self):
        cfg = desk_config(32, seed=5)
        again = GameConfig(**{**cfg.to_json(), "constants": dict(cfg.to_json()["constants"])})
        assert again == cfg


class TestDeskConfig:
    def test_relations(self):
        cfg = desk_config(64)
        assert (cfg.k, cfg.b_max, cfg.h_sep, cfg.h_diam) == (4, 4, 8, 10)
        assert cfg.phi == pytest.approx(0.1)
        assert cfg.check() == []

    def test_extra_overrides(self):
        assert desk_config(64, final_exact=True).final_exact
