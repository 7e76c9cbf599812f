import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bdris import (
    Architecture,
    ConfigurationError,
    DegenerateInstanceError,
    Mode,
    OptimOptions,
    PowerAlloc,
    alternate,
    ascend_phase,
    ascend_phase_diagonal,
    effective_gains,
    embed,
    make_feasible_random,
    spectral_efficiency,
    validate,
    waterfill,
)
from bdris.objective import LN2
from bdris.optimizer import ArmijoOptions, _aligned_init
from helpers import random_channels

FAST = OptimOptions(restarts=2, inner_max_iters=120, outer_max_iters=25)


def grid_search_simplex(gains, budget, noise, steps=1000):
    """Exhaustive grid maximisation of the waterfilling objective.

    Enumerates every allocation p = (m_1, ..., m_N) * budget / steps with
    sum m_n = steps via max-plus dynamic programming over per-user tables,
    which scans exactly the same grid as the naive product enumeration.
    """
    gains = np.asarray(gains, float)
    grid = np.arange(steps + 1) * (budget / steps)
    tables = [np.log2(1.0 + grid * g / noise) for g in gains]
    best = tables[0]
    for table in tables[1:]:
        new = np.full(steps + 1, -np.inf)
        for total in range(steps + 1):
            new[total] = np.max(best[: total + 1] + table[total::-1])
        best = new
    return float(best[steps])


def grid_search_naive(gains, budget, noise, steps):
    """Direct product-grid enumeration; cross-checks the DP oracle."""
    gains = np.asarray(gains, float)
    grid = np.arange(steps + 1) * (budget / steps)
    best = -np.inf
    if gains.size == 2:
        for i in range(steps + 1):
            j = steps - i
            best = max(best, np.log2(1 + grid[i] * gains[0] / noise) + np.log2(1 + grid[j] * gains[1] / noise))
        return best
    assert gains.size == 3
    for i in range(steps + 1):
        for j in range(steps + 1 - i):
            k = steps - i - j
            val = (
                np.log2(1 + grid[i] * gains[0] / noise)
                + np.log2(1 + grid[j] * gains[1] / noise)
                + np.log2(1 + grid[k] * gains[2] / noise)
            )
            best = max(best, val)
    return best


class TestWaterfill:
    def test_symmetric_split(self):
        pa = waterfill(np.array([1.0, 1.0]), budget_mw=2.0, noise_mw=1.0)
        np.testing.assert_allclose(pa.powers_mw, [1.0, 1.0], atol=1e-8)

    def test_strong_user_takes_everything(self):
        # gains (1, 0.5), unit noise, unit budget: optimum is (1, 0), SE = 1
        pa = waterfill(np.array([1.0, 0.5]), budget_mw=1.0, noise_mw=1.0)
        np.testing.assert_allclose(pa.powers_mw, [1.0, 0.0], atol=1e-8)
        se = np.log2(1.0 + pa.powers_mw[0])
        oracle = grid_search_simplex([1.0, 0.5], 1.0, 1.0)
        assert se >= oracle - 1e-3
        assert se == pytest.approx(1.0, abs=1e-8)

    def test_single_user_takes_budget(self):
        pa = waterfill(np.array([3.7]), budget_mw=5.0, noise_mw=2.0)
        assert pa.powers_mw[0] == pytest.approx(5.0, abs=1e-8)

    def test_zero_gain_user_gets_nothing(self):
        pa = waterfill(np.array([1.0, 0.0, 2.0]), budget_mw=3.0, noise_mw=1.0)
        assert pa.powers_mw[1] == 0.0
        assert pa.powers_mw.sum() == pytest.approx(3.0, abs=1e-8)

    def test_all_zero_gains_degenerate(self):
        with pytest.raises(DegenerateInstanceError):
            waterfill(np.zeros(3), budget_mw=1.0, noise_mw=1.0)

    def test_invalid_inputs(self):
        with pytest.raises(ValueError):
            waterfill(np.array([1.0]), budget_mw=0.0, noise_mw=1.0)
        with pytest.raises(ValueError):
            waterfill(np.array([1.0]), budget_mw=1.0, noise_mw=0.0)

    def test_dp_oracle_matches_naive_enumeration(self):
        rng = np.random.default_rng(0)
        for n in (2, 3):
            gains = rng.uniform(0.2, 3.0, n)
            dp = grid_search_simplex(gains, 1.7, 0.9, steps=120)
            naive = grid_search_naive(gains, 1.7, 0.9, steps=120)
            assert dp == pytest.approx(naive, abs=1e-12)

    @settings(max_examples=50, deadline=None)
    @given(
        n=st.integers(min_value=1, max_value=6),
        seed=st.integers(min_value=0, max_value=10_000),
        budget=st.floats(min_value=0.1, max_value=100.0),
        noise=st.floats(min_value=0.05, max_value=10.0),
    )
    def test_kkt_conditions(self, n, seed, budget, noise):
        rng = np.random.default_rng(seed)
        gains = rng.uniform(0.0, 4.0, n)
        if not (gains > 0).any():
            gains[0] = 1.0
        pa = waterfill(gains, budget, noise, tol=1e-9)
        powers = pa.powers_mw
        assert (powers >= 0).all()
        assert powers.sum() <= budget + 1e-12
        assert budget - powers.sum() <= 1e-9
        active = powers > 1e-12
        if active.any():
            levels = powers[active] + noise / gains[active]
            mu = levels.mean()
            assert np.max(np.abs(levels - mu)) <= 1e-6 * mu
            inactive = (~active) & (gains > 0)
            if inactive.any():
                assert (noise / gains[inactive] >= mu * (1 - 1e-6)).all()


class TestAscendPhase:
    def test_returns_init_at_single_user_optimum(self):
        ch = random_channels(8, 1, seed=0)
        cfg = _aligned_init(ch, Architecture.fully_connected(), Mode.TRANSMISSIVE)
        pa = PowerAlloc(np.array([2.0]), budget_mw=2.0)
        result = ascend_phase(ch, pa, cfg, FAST)
        assert result.cfg is cfg
        assert result.iterations == 0
        assert not result.stalled

    def test_single_user_reaches_cauchy_schwarz_bound(self):
        for seed in range(4):
            ch = random_channels(8, 1, seed=seed)
            init = make_feasible_random(Architecture.fully_connected(), Mode.TRANSMISSIVE, 8, seed)
            pa = PowerAlloc(np.array([4.0]), budget_mw=4.0)
            result = ascend_phase(ch, pa, init, OptimOptions())
            bound = np.sum(np.abs(ch.ue_channels[0]) ** 2)
            assert effective_gains(ch, result.cfg)[0] >= 0.99 * bound

    def test_monotone_and_feasible(self):
        ch = random_channels(8, 4, seed=3)
        init = make_feasible_random(Architecture.group_connected(2), Mode.TRANSMISSIVE, 8, 3)
        pa = PowerAlloc(np.full(4, 0.5), budget_mw=2.0)
        result = ascend_phase(ch, pa, init, FAST)
        assert result.se >= spectral_efficiency(ch, init, pa)
        assert validate(result.cfg, 1e-8).passed

    def test_hybrid_ascent_improves(self):
        ch = random_channels(8, 2, seed=4)
        init = make_feasible_random(Architecture.fully_connected(), Mode.HYBRID, 8, 4)
        pa = PowerAlloc(np.array([1.0, 1.0]), budget_mw=2.0)
        result = ascend_phase(ch, pa, init, FAST)
        assert result.se > spectral_efficiency(ch, init, pa)
        assert validate(result.cfg, 1e-8).passed


class TestAscendPhaseDiagonal:
    def test_requires_single_connected(self):
        ch = random_channels(8, 2, seed=0)
        init = make_feasible_random(Architecture.fully_connected(), Mode.TRANSMISSIVE, 8, 0)
        pa = PowerAlloc(np.ones(2), budget_mw=2.0)
        with pytest.raises(ConfigurationError):
            ascend_phase_diagonal(ch, pa, init, FAST)

    def test_single_user_reaches_phase_alignment_bound(self):
        for seed in range(4):
            ch = random_channels(16, 1, seed=seed)
            init = make_feasible_random(Architecture.single_connected(), Mode.TRANSMISSIVE, 16, seed)
            pa = PowerAlloc(np.array([4.0]), budget_mw=4.0)
            result = ascend_phase_diagonal(ch, pa, init, OptimOptions())
            bound = np.sum(np.abs(ch.ue_channels[0]) * np.abs(ch.feed)) ** 2
            assert effective_gains(ch, result.cfg)[0] >= 0.99 * bound

    def test_stationary_at_phase_aligned_point(self):
        ch = random_channels(8, 1, seed=5)
        cfg = _aligned_init(ch, Architecture.single_connected(), Mode.TRANSMISSIVE)
        pa = PowerAlloc(np.array([1.0]), budget_mw=1.0)
        result = ascend_phase_diagonal(ch, pa, cfg, FAST)
        assert result.iterations == 0
        assert result.se == spectral_efficiency(ch, cfg, pa)

    def test_monotone(self):
        ch = random_channels(8, 3, seed=6)
        init = make_feasible_random(Architecture.single_connected(), Mode.TRANSMISSIVE, 8, 6)
        pa = PowerAlloc(np.full(3, 0.4), budget_mw=1.2)
        result = ascend_phase_diagonal(ch, pa, init, FAST)
        assert result.se >= spectral_efficiency(ch, init, pa)
        assert validate(result.cfg, 1e-8).passed

    def test_hybrid_diagonal_supported(self):
        ch = random_channels(8, 2, seed=7)
        init = make_feasible_random(Architecture.single_connected(), Mode.HYBRID, 8, 7)
        pa = PowerAlloc(np.ones(2), budget_mw=2.0)
        result = ascend_phase_diagonal(ch, pa, init, FAST)
        assert result.se >= spectral_efficiency(ch, init, pa)
        assert validate(result.cfg, 1e-8).passed


class TestAlternate:
    def test_vanishing_budget_gives_vanishing_se(self):
        ch = random_channels(4, 2, seed=0)
        sol = alternate(ch, Architecture.fully_connected(), Mode.TRANSMISSIVE, 1e-12, FAST, seed=0)
        assert sol.se < 1e-9

    def test_beats_random_phase_plus_waterfill_ablation(self):
        # the ablation oracle is computed by the test itself on the same instance
        ch = random_channels(4, 2, seed=1)
        seed = 11
        init = make_feasible_random(Architecture.fully_connected(), Mode.TRANSMISSIVE, 4, seed)
        ablation_pa = waterfill(effective_gains(ch, init), 2.0, ch.noise_mw)
        ablation_se = spectral_efficiency(ch, init, ablation_pa)
        sol = alternate(ch, Architecture.fully_connected(), Mode.TRANSMISSIVE, 2.0, FAST, seed=seed)
        assert sol.se >= ablation_se

    def test_warm_start_from_diagonal_solution_dominates(self):
        ch = random_channels(8, 3, seed=2)
        d_sol = alternate(ch, Architecture.single_connected(), Mode.TRANSMISSIVE, 4.0, FAST, seed=3)
        warm = embed(d_sol.cfg, Architecture.fully_connected())
        bd_sol = alternate(
            ch, Architecture.fully_connected(), Mode.TRANSMISSIVE, 4.0, FAST, seed=3, init=warm
        )
        assert bd_sol.se >= d_sol.se

    def test_trace_nondecreasing_and_se_consistent(self):
        ch = random_channels(8, 4, seed=3)
        sol = alternate(ch, Architecture.fully_connected(), Mode.TRANSMISSIVE, 4.0, FAST, seed=5)
        values = [v for _, v in sol.trace]
        assert all(b >= a for a, b in zip(values, values[1:]))
        assert sol.se == values[-1]
        assert sol.se == pytest.approx(spectral_efficiency(ch, sol.cfg, sol.pa), rel=1e-12)
        assert validate(sol.cfg, 1e-8).passed

    def test_deterministic(self):
        ch = random_channels(8, 3, seed=4)
        a = alternate(ch, Architecture.group_connected(2), Mode.TRANSMISSIVE, 2.0, FAST, seed=9)
        b = alternate(ch, Architecture.group_connected(2), Mode.TRANSMISSIVE, 2.0, FAST, seed=9)
        assert a.se == b.se
        assert a.trace == b.trace
        np.testing.assert_array_equal(a.cfg.blocks_transmit, b.cfg.blocks_transmit)
        np.testing.assert_array_equal(a.pa.powers_mw, b.pa.powers_mw)

    def test_architecture_nesting_with_warm_start(self):
        ch = random_channels(8, 3, seed=5)
        single = alternate(ch, Architecture.single_connected(), Mode.TRANSMISSIVE, 3.0, FAST, seed=1)
        group = alternate(
            ch, Architecture.group_connected(2), Mode.TRANSMISSIVE, 3.0, FAST, seed=1,
            init=embed(single.cfg, Architecture.group_connected(2)),
        )
        fully = alternate(
            ch, Architecture.fully_connected(), Mode.TRANSMISSIVE, 3.0, FAST, seed=1,
            init=embed(group.cfg, Architecture.fully_connected()),
        )
        assert single.se <= group.se <= fully.se

    def test_mismatched_warm_start_rejected(self):
        ch = random_channels(8, 2, seed=6)
        init = make_feasible_random(Architecture.single_connected(), Mode.TRANSMISSIVE, 8, 0)
        with pytest.raises(ConfigurationError):
            alternate(ch, Architecture.fully_connected(), Mode.TRANSMISSIVE, 1.0, FAST, init=init)

    def test_degenerate_propagates(self):
        ch = random_channels(4, 2, seed=7)
        cfg = make_feasible_random(Architecture.fully_connected(), Mode.TRANSMISSIVE, 4, 0)
        with pytest.raises(DegenerateInstanceError):
            waterfill(np.zeros(2), 1.0, ch.noise_mw)


class TestOptions:
    def test_option_validation(self):
        with pytest.raises(ValueError):
            OptimOptions(inner_rel_tol=0.0)
        with pytest.raises(ValueError):
            OptimOptions(restarts=0)
        with pytest.raises(ValueError):
            ArmijoOptions(shrink=1.0)
        with pytest.raises(ValueError):
            ArmijoOptions(init_step=0.0)

    def test_defaults(self):
        opts = OptimOptions()
        assert opts.inner_max_iters == 200
        assert opts.outer_max_iters == 50
        assert opts.inner_rel_tol == 1e-6
        assert opts.outer_rel_tol == 1e-5
        assert opts.waterfill_tol == 1e-9
        assert opts.armijo == ArmijoOptions(1.0, 0.5, 1e-4, 30)
