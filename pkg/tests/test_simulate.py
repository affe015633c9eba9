"""Monte Carlo simulator: configuration, determinism and decoding behavior."""

import json
import math

import numpy as np
import pytest

from latticeic.channel import ChannelMatrix3, symmetric_channel
from latticeic.lattice import build_codebook, construction_a, is_lattice_point, make_linear_code, scale_lattice
from latticeic.simulate import (
    ConfigError,
    SimConfig,
    align_interference_lattices,
    run_simulation,
    simulate_layered_symmetric,
    simulate_very_strong_symmetric,
    wilson_interval,
)


def vs_config(**kw):
    base = dict(
        scheme="very-strong-sym",
        n=4,
        trials=200,
        master_seed=3,
        rates=[0.25],
        power=3.0,
        a=4.0,
        search_budget=2,
    )
    base.update(kw)
    return SimConfig(**base)


class TestWilsonInterval:
    def test_zero_errors(self):
        lo, hi = wilson_interval(0, 100)
        assert lo == pytest.approx(0.0, abs=1e-12)
        assert 0 < hi < 0.05

    def test_contained_in_unit_interval(self):
        for e in (0, 1, 50, 99, 100):
            lo, hi = wilson_interval(e, 100)
            assert 0.0 <= lo <= e / 100 + 1e-15 and e / 100 <= hi + 1e-15 and hi <= 1.0

    def test_symmetry(self):
        lo, hi = wilson_interval(30, 100)
        lo2, hi2 = wilson_interval(70, 100)
        assert lo == pytest.approx(1 - hi2)
        assert hi == pytest.approx(1 - lo2)

    def test_rejects_zero_trials(self):
        with pytest.raises(ValueError):
            wilson_interval(0, 0)


class TestConfigValidation:
    def test_unknown_scheme(self):
        with pytest.raises(ConfigError):
            vs_config(scheme="mystery").validate()

    def test_too_few_trials(self):
        with pytest.raises(ConfigError):
            vs_config(trials=50).validate()

    def test_block_length_range(self):
        with pytest.raises(ConfigError):
            vs_config(n=1).validate()
        with pytest.raises(ConfigError):
            vs_config(n=11).validate()

    def test_very_strong_condition_enforced(self):
        # a^2 = 4 < P + 1 at P = 4
        with pytest.raises(ConfigError):
            vs_config(a=2.0, power=4.0).validate()

    def test_layer_rate_count(self):
        cfg = SimConfig(
            scheme="layered-sym", n=4, trials=100, master_seed=0, rates=[0.2], a=2.0, N=2
        )
        with pytest.raises(ConfigError):
            cfg.validate()

    def test_layered_band_rejected(self):
        cfg = SimConfig(
            scheme="layered-sym", n=4, trials=100, master_seed=0, rates=[0.2], a=1.0, N=1
        )
        with pytest.raises(ConfigError):
            cfg.validate()

    def test_hash_stable(self):
        assert vs_config().config_hash() == vs_config().config_hash()
        assert vs_config().config_hash() != vs_config(master_seed=4).config_hash()


class TestDeterminismAndStats:
    def test_identical_config_identical_stats(self):
        a = run_simulation(vs_config())
        b = run_simulation(vs_config())
        assert a == b

    def test_different_seed_still_valid_run(self):
        stats = run_simulation(vs_config(trials=400, master_seed=99))
        assert stats.trials == 400
        assert 0 <= stats.block_errors <= 400

    def test_zero_rate_no_errors(self):
        stats = run_simulation(vs_config(rates=[0.0]))
        assert stats.block_errors == 0

    def test_json_line_fields(self):
        cfg = vs_config()
        stats = run_simulation(cfg)
        doc = json.loads(stats.to_json_line(cfg))
        assert doc["config_hash"] == cfg.config_hash()
        assert doc["trials"] == cfg.trials
        assert set(doc["stage_errors"]) == {"interference", "message"}
        assert 0.0 <= doc["wilson"][0] <= doc["wilson"][1] <= 1.0


class TestSchemes:
    def test_noiseless_layered_zero_errors(self):
        cfg = SimConfig(
            scheme="layered-sym",
            n=6,
            trials=200,
            master_seed=11,
            rates=[0.3, 0.3],
            sigma2=1e-6,
            a=5.0,
            N=2,
        )
        stats = run_simulation(cfg)
        assert stats.block_errors == 0
        assert not any(stats.per_stage_interference_errors)
        assert not any(stats.per_stage_message_errors)

    def test_single_layer_equals_very_strong(self):
        shared = dict(n=4, trials=200, master_seed=3, rates=[0.25], a=2.0, search_budget=2)
        layered = SimConfig(scheme="layered-sym", N=1, **shared)
        single = SimConfig(scheme="very-strong-sym", power=3.0, **shared)
        assert simulate_layered_symmetric(layered) == simulate_very_strong_symmetric(single)

    def test_genie_makes_later_stages_independent(self):
        base = dict(
            scheme="layered-sym",
            n=4,
            trials=300,
            master_seed=9,
            a=math.sqrt(3.0),
            N=2,
            genie=True,
            search_budget=1,
        )
        a = run_simulation(SimConfig(rates=[0.2, 0.25], **base))
        b = run_simulation(SimConfig(rates=[0.3, 0.25], **base))
        assert a.per_stage_interference_errors[1] == b.per_stage_interference_errors[1]
        assert a.per_stage_message_errors[1] == b.per_stage_message_errors[1]

    def test_layered_rejects_rate_above_ceiling(self):
        cfg = SimConfig(
            scheme="layered-sym", n=4, trials=100, master_seed=0, rates=[0.9], a=math.sqrt(3.0), N=1
        )
        with pytest.raises(ConfigError):
            simulate_layered_symmetric(cfg)

    def test_error_rate_nonincreasing_in_snr(self):
        runs = []
        for s2 in (2.0, 0.5):
            cfg = SimConfig(
                scheme="p2p",
                n=8,
                trials=400,
                master_seed=5,
                rates=[1.0],
                power=15.0,
                sigma2=s2,
                search_budget=1,
            )
            runs.append(run_simulation(cfg))
        noisy, clean = runs
        # nonincreasing up to Wilson-interval overlap
        assert clean.block_error_rate <= noisy.block_error_rate or (
            clean.wilson_interval[0] <= noisy.wilson_interval[1]
        )

    def test_very_strong_general_runs_and_reports_condition(self):
        h = [[1, 4, 4], [4, 1, 4], [4, 4, 1]]
        cfg = SimConfig(
            scheme="very-strong-general",
            n=4,
            trials=200,
            master_seed=2,
            rates=[0.3, 0.3, 0.3],
            powers=[3.0, 3.0, 3.0],
            h=h,
            search_budget=4,
        )
        stats = run_simulation(cfg)
        assert stats.meta["condition_set"] == 1
        assert stats.block_error_rate <= 0.2

    def test_very_strong_general_requires_witness(self):
        h = [[1, math.sqrt(2.0), 1], [1, 1, 1], [1, 1, 1]]
        cfg = SimConfig(
            scheme="very-strong-general",
            n=4,
            trials=100,
            master_seed=0,
            rates=[0.2] * 3,
            powers=[3.0] * 3,
            h=h,
        )
        with pytest.raises(ConfigError):
            run_simulation(cfg)


class TestAlignment:
    def test_symmetric_channel_aligns_trivially(self):
        base = construction_a(make_linear_code(2, 1, 5, seed=1), 0.7)
        l1, l2, l3 = align_interference_lattices(symmetric_channel(2.0), base)
        assert l1.gamma == l2.gamma == l3.gamma == base.gamma

    def test_scale_factors_satisfy_all_three_equalities(self):
        h = np.array([[1.0, 2.0, 1.0], [1.0, 1.0, 3.0], [1.0, 1.0, 1.0]])
        ch = ChannelMatrix3(h, h1_witness=(6, 1))
        base = construction_a(make_linear_code(2, 1, 5, seed=2), 1.0)
        l1, l2, l3 = align_interference_lattices(ch, base)
        f1, f2, f3 = l1.gamma, l2.gamma, l3.gamma
        assert abs(h[0, 1]) * f2 == pytest.approx(6 * abs(h[0, 2]) * f3, rel=1e-12)
        assert abs(h[1, 0]) * f1 == pytest.approx(1 * abs(h[1, 2]) * f3, rel=1e-12)
        assert abs(h[2, 0]) * f1 == pytest.approx(abs(h[2, 1]) * f2, rel=1e-12)

    def test_random_witnessed_matrices_align(self):
        rng = np.random.default_rng(6)
        base = construction_a(make_linear_code(2, 1, 5, seed=3), 1.0)
        for _ in range(20):
            p = int(rng.integers(1, 7))
            q = int(rng.integers(1, 7))
            g = math.gcd(p, q)
            p, q = p // g, q // g
            h12, h21, h23, h32, h13 = rng.integers(1, 6, size=5).astype(float)
            h31 = (p / q) * h21 * h32 * h13 / (h12 * h23)
            h = np.array([[1, h12, h13], [h21, 1, h23], [h31, h32, 1.0]])
            ch = ChannelMatrix3(h, h1_witness=(p, q))
            l1, l2, l3 = align_interference_lattices(ch, base)
            assert abs(h[2, 0]) * l1.gamma == pytest.approx(abs(h[2, 1]) * l2.gamma, rel=1e-9)

    def test_missing_witness_rejected(self):
        ch = ChannelMatrix3(symmetric_channel(2.0).h)
        base = construction_a(make_linear_code(2, 1, 5, seed=4), 1.0)
        with pytest.raises(ValueError):
            align_interference_lattices(ch, base)

    def test_inconsistent_witness_rejected(self):
        # true ratio is 6; witness (2, 1) breaks the third equality
        h = np.array([[1.0, 2.0, 1.0], [1.0, 1.0, 3.0], [1.0, 1.0, 1.0]])
        ch = ChannelMatrix3(h, h1_witness=(2, 1))
        base = construction_a(make_linear_code(2, 1, 5, seed=5), 1.0)
        with pytest.raises(ValueError):
            align_interference_lattices(ch, base)

    def test_aggregate_interference_closure(self):
        # the sum of two shifted codewords, minus both shifts, stays on the
        # lattice, so the scaled aggregate lies on the scaled lattice
        a = 2.0
        lat = construction_a(make_linear_code(3, 2, 5, seed=7), 0.8)
        cb = build_codebook(lat, power=6.0, target_rate=0.25, shift_trials=4, seed=7)
        rng = np.random.default_rng(8)
        lat_a = scale_lattice(lat, a)
        for _ in range(50):
            w2, w3 = cb.words[rng.integers(0, len(cb), size=2)]
            assert is_lattice_point(lat, w2 + w3 - 2 * cb.shift, tol=1e-9)
            assert is_lattice_point(lat_a, a * (w2 + w3 - 2 * cb.shift), tol=1e-9)
