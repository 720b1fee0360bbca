# coding=utf-8
#
import time
import logging
import unittest
from dataclasses import replace

import numpy as np
import pytest

from adaptive_exposure_lib.errors import ClippedResponse, DegenerateAbscissa, DomainError, FlatResponse
from adaptive_exposure_lib.exposure_controller import (CLIPPED, CYCLE_LOG_COLUMNS, FLAT_RESPONSE, OUTLIER_PURGE,
                                                       SATURATED, UNDEREXPOSED_AT_LIMIT, ControllerConfig,
                                                       ControllerState, ExposureSample, LinearFit, clipped_exposure,
                                                       compute_t_opt, fit_least_squares, fit_linear_range,
                                                       fit_through_origin, fit_two_point, purge_on_outlier, run_cycle,
                                                       update_bracket)
from adaptive_exposure_lib.sensor_model import SensorConfig, capture, roi_mean
from tests.scenes import FACE_ROI, face_scene, step

# ========== Initial Logger ==========
logging.basicConfig(
    level=logging.INFO,
    format='[%(asctime)-15s][%(levelname)-5s][%(filename)s][%(funcName)s#%(lineno)d] %(message)s')
logger = logging.getLogger(__name__)
# ====================================


def _sample(T, I):
    return ExposureSample(float(T), float(I))


def _drive(spec, sensor, config, cycles, start=0):
    state = ControllerState.initial(config)
    results = []
    for k in range(start, start + cycles):
        cycle, state = run_cycle(state, spec, sensor, k / 15.0, config, index=k)
        results.append(cycle)
    return results, state


class FitTests(unittest.TestCase):
    def test_two_point_examples(self):
        fit = fit_two_point(_sample(5, 50), _sample(15, 150))
        assert (fit.k, fit.b) == (10.0, 0.0)
        fit = fit_two_point(_sample(5, 60), _sample(15, 140))
        assert (fit.k, fit.b) == (8.0, 20.0)

    def test_two_point_flat(self):
        with pytest.raises(FlatResponse):
            fit_two_point(_sample(8, 100), _sample(22, 100))

    def test_two_point_degenerate(self):
        with pytest.raises(DegenerateAbscissa):
            fit_two_point(_sample(8, 100), _sample(8, 120))

    def test_least_squares_collinear(self):
        samples = [_sample(T, 2 * T + 5) for T in (5, 10, 15, 20)]
        fit = fit_least_squares(samples)
        assert fit.k == pytest.approx(2.0, abs=1e-12)
        assert fit.b == pytest.approx(5.0, abs=1e-12)
        assert max(abs(s.intensity - fit.predict(s.exposure)) for s in samples) < 1e-12

    def test_least_squares_degenerate(self):
        with pytest.raises(DegenerateAbscissa):
            fit_least_squares([_sample(8, 10), _sample(8, 20), _sample(8, 30)])
        with pytest.raises(DomainError):
            fit_least_squares([_sample(8, 10)])

    def test_against_normal_equations(self):
        rng = np.random.default_rng(1)
        started = time.time()
        for _ in range(1000):
            n = int(rng.integers(2, 12))
            T = rng.uniform(0.1, 22.2, n)
            I = rng.uniform(0.5, 20.0) * T + rng.uniform(-30, 30) + rng.normal(0, 3, n)
            samples = [_sample(a, b) for a, b in zip(T, I)]
            design = np.column_stack([T, np.ones(n)])
            k, b = np.linalg.solve(design.T @ design, design.T @ I)
            if abs(k) < 0.05:
                continue
            fit = fit_least_squares(samples)
            assert fit.k == pytest.approx(k, rel=1e-9)
            assert fit.b == pytest.approx(b, rel=1e-9, abs=1e-9)
            if n == 2:
                exact = fit_two_point(samples[0], samples[1])
                assert (fit.k, fit.b) == (exact.k, exact.b)
        assert time.time() - started < 5.0


class LinearRangeTests(unittest.TestCase):
    def setUp(self):
        self.config = ControllerConfig()

    def test_clipped_sample_is_left_out(self):
        fit = fit_linear_range([_sample(5, 100), _sample(22, 255)], self.config)
        assert (fit.k, fit.b) == (20.0, 0.0)

    def test_near_ceiling_counts_as_clipped(self):
        fit = fit_linear_range([_sample(5, 100), _sample(10, 200), _sample(22, 254)], self.config)
        assert (fit.k, fit.b) == (20.0, 0.0)

    def test_dark_sample_is_left_out(self):
        fit = fit_linear_range([_sample(0.1, 0), _sample(10, 50)], self.config)
        assert (fit.k, fit.b) == (5.0, 0.0)

    def test_all_clipped(self):
        with pytest.raises(ClippedResponse):
            fit_linear_range([_sample(8, 255), _sample(22, 255)], self.config)
        with pytest.raises(ClippedResponse):
            fit_linear_range([_sample(8, 0), _sample(22, 255)], self.config)

    def test_through_origin(self):
        fit = fit_through_origin(_sample(4, 140))
        assert (fit.k, fit.b) == (35.0, 0.0)
        with pytest.raises(FlatResponse):
            fit_through_origin(_sample(22, 1))

    def test_unclipped_buffer_matches_least_squares(self):
        samples = [_sample(T, 9 * T + 3) for T in (6, 12, 18)]
        direct = fit_least_squares(samples)
        fit = fit_linear_range(samples, self.config)
        assert (fit.k, fit.b) == (direct.k, direct.b)


class OptimalExposureTests(unittest.TestCase):
    def setUp(self):
        self.config = ControllerConfig()

    def test_inversion(self):
        assert compute_t_opt(LinearFit(10.0, 0.0), self.config) == 14.0

    def test_clamped_to_ceiling(self):
        assert compute_t_opt(LinearFit(2.0, 0.0), self.config) == 22.2

    def test_clamped_to_floor(self):
        assert compute_t_opt(LinearFit(10.0, 139.0), self.config) == pytest.approx(0.1)
        assert compute_t_opt(LinearFit(10.0, 150.0), self.config) == 0.1

    def test_flat_slope(self):
        with pytest.raises(FlatResponse):
            compute_t_opt(LinearFit(0.01, 100.0), self.config)
        with pytest.raises(FlatResponse):
            compute_t_opt(LinearFit(-3.0, 100.0), self.config)


class BracketTests(unittest.TestCase):
    def setUp(self):
        self.config = ControllerConfig()
        self.state = ControllerState.initial(self.config)

    def test_policy(self):
        assert update_bracket(self.state, 14.0, self.config) == (7.0, 21.0)

    def test_high_clamp(self):
        assert update_bracket(self.state, 22.2, self.config) == (10.0, 22.0)

    def test_low_floor(self):
        assert update_bracket(self.state, 5.0, self.config) == (5.0, 15.0)

    def test_bounds_give_way_below_clipping(self):
        low, high = update_bracket(self.state, 7.0, self.config, ceiling=12.7)
        assert low == 3.5
        assert high == pytest.approx(9.85)
        assert update_bracket(self.state, 2.5, self.config, ceiling=5.0) == (1.25, 3.75)

    def test_far_ceiling_keeps_bounds(self):
        assert update_bracket(self.state, 14.0, self.config, ceiling=30.0) == (7.0, 21.0)

    def test_collapsed_bracket_is_spread(self):
        config = ControllerConfig(bracket_low_bounds=(12.0, 12.0), bracket_high_bounds=(12.0, 12.0))
        low, high = update_bracket(self.state, 14.0, config)
        assert (low, high) == (11.0, 13.0)

    def test_weather_presets(self):
        sunny = ControllerConfig.for_weather('sunny')
        overcast = ControllerConfig.for_weather('overcast')
        assert sunny.initial_bracket == (5.0, 16.0)
        assert overcast.initial_bracket == (8.0, 22.0)
        assert update_bracket(ControllerState.initial(sunny), 14.0, sunny) == (7.0, 16.0)
        assert sunny.bracket_high_bounds == (15.0, 16.0)
        with pytest.raises(DomainError):
            ControllerConfig.for_weather('foggy')

    def test_config_validation(self):
        with pytest.raises(DomainError):
            ControllerConfig(buffer_capacity=1)
        with pytest.raises(DomainError):
            ControllerConfig(i_target=300.0)
        with pytest.raises(DomainError):
            ControllerConfig(bracket_low_factor=1.2)


class PurgeTests(unittest.TestCase):
    def setUp(self):
        self.config = ControllerConfig(buffer_capacity=6)
        samples = tuple(_sample(T, 10 * T) for T in (5, 15, 6, 16, 7, 17))
        self.state = ControllerState(buffer=samples, current_bracket=(7.0, 17.0))
        self.fit = LinearFit(10.0, 0.0)

    def test_no_residual(self):
        assert purge_on_outlier(self.state, self.fit, _sample(17, 170), self.config) is self.state

    def test_large_residual(self):
        purged = purge_on_outlier(self.state, self.fit, _sample(17, 220), self.config)
        assert purged.buffer == self.state.buffer[-2:]

    def test_boundary_residual(self):
        assert purge_on_outlier(self.state, self.fit, _sample(17, 190), self.config) is self.state

    def test_clipped_reading_agrees_with_clipping_fit(self):
        fit = LinearFit(20.0, 0.0)
        assert purge_on_outlier(self.state, fit, _sample(22, 255), self.config) is self.state


class CycleTests(unittest.TestCase):
    def setUp(self):
        self.sensor = SensorConfig()
        self.config = ControllerConfig()

    def test_cycle_timing_and_tags(self):
        spec = face_scene(10.0)
        cycle, state = run_cycle(ControllerState.initial(self.config), spec, self.sensor, 2.0, self.config)
        assert cycle.frame_low.timestamp == 2.0
        assert cycle.frame_high.timestamp == pytest.approx(2.0 + 1 / 45.0)
        assert cycle.frame_opt.timestamp == pytest.approx(2.0 + 2 / 45.0)
        assert (cycle.frame_low.stream_tag, cycle.frame_high.stream_tag, cycle.frame_opt.stream_tag) == \
            ('low', 'high', 'opt')
        assert cycle.frame_low.exposure_time == 8.0
        assert cycle.frame_high.exposure_time == 22.0
        assert state.buffer == (cycle.sample_low, cycle.sample_high)
        assert state.last_t_opt == cycle.t_opt
        assert tuple(cycle.log_record()) == CYCLE_LOG_COLUMNS

    def test_one_cycle_convergence(self):
        rng = np.random.default_rng(5)
        config = ControllerConfig(initial_bracket=(5.0, 22.0))
        started = time.time()
        for _ in range(100):
            spec = face_scene(float(rng.uniform(6.4, 50.0)), duration=2.0)
            cycle, _ = run_cycle(ControllerState.initial(config), spec, self.sensor, 0.5, config)
            assert abs(cycle.mu_opt - 140.0) <= 1.0
        assert time.time() - started < 5.0

    def test_converges_over_reachable_light(self):
        # from 6.5 codes/ms (target just inside the 22.2 ms ceiling) to 1350 (target just above the 0.1 ms floor)
        rng = np.random.default_rng(11)
        rates = np.exp(rng.uniform(np.log(6.5), np.log(1350.0), 60))
        for rate in np.concatenate([rates, [6.5, 31.75, 254.0 / 22.0, 1350.0]]):
            spec = face_scene(float(rate), duration=2.0)
            cycles, state = _drive(spec, self.sensor, self.config, 8)
            for cycle in cycles[5:]:
                assert abs(cycle.mu_opt - 140.0) <= 1.0, 'rate {} cycle {}'.format(rate, cycle.index)
            low, high = state.current_bracket
            assert low <= cycles[-1].t_opt < high
            assert high * rate <= 255.0

    def test_noisy_convergence_with_history(self):
        config = ControllerConfig(buffer_capacity=6)
        sensor = SensorConfig(read_noise_sigma=2.0)
        for seed in range(10):
            spec = face_scene(9.0 + 0.2 * seed, duration=2.0, seed=seed)
            cycles, state = _drive(spec, sensor, config, 3)
            assert abs(cycles[-1].mu_opt - 140.0) <= 3.0
            assert len(state.buffer) == 6

    def test_step_up_recovers_within_two_cycles(self):
        spec = face_scene(7.0, duration=20.0, events=[step(10.0, 4.0)])
        cycles, _ = _drive(spec, self.sensor, self.config, 160)
        assert cycles[149].t_opt == 20.0
        assert cycles[150].t == 10.0
        assert CLIPPED in cycles[150].flags
        assert cycles[150].t_opt == 5.0
        for cycle in cycles[151:]:
            assert abs(cycle.mu_opt - 140.0) <= 5.0
            assert CLIPPED not in cycle.flags
        long_frame = capture(spec, self.sensor, 12.0, 22.0, 'fixed')
        assert roi_mean(long_frame, FACE_ROI) >= 250

    def test_step_down_recovers_within_two_cycles(self):
        spec = face_scene(28.0, duration=20.0, events=[step(10.0, 0.25)])
        cycles, _ = _drive(spec, self.sensor, self.config, 160)
        assert abs(cycles[149].mu_opt - 140.0) <= 1.0
        for cycle in cycles[150:]:
            assert abs(cycle.mu_opt - 140.0) <= 5.0

    def test_clipped_pair_steps_exposure(self):
        config = self.config
        t_opt, ceiling = clipped_exposure(_sample(8, 255), _sample(22, 255), config)
        assert (t_opt, ceiling) == (4.0, 8.0)
        t_opt, ceiling = clipped_exposure(_sample(0.25, 0), _sample(16, 255), config)
        assert (t_opt, ceiling) == (2.0, 16.0)
        t_opt, ceiling = clipped_exposure(_sample(1, 0), _sample(2, 0), config)
        assert (t_opt, ceiling) == (3.0, None)

    def test_underexposed_at_limit(self):
        spec = face_scene(2.0, duration=5.0)
        cycles, _ = _drive(spec, self.sensor, self.config, 10)
        for cycle in cycles:
            assert cycle.t_opt == 22.2
            assert cycle.mu_opt < 140
            assert UNDEREXPOSED_AT_LIMIT in cycle.flags

    def test_saturated_bracket_scales_down(self):
        spec = face_scene(100.0, duration=5.0)
        cycles, state = _drive(spec, self.sensor, self.config, 4)
        assert CLIPPED in cycles[0].flags
        assert SATURATED in cycles[0].flags
        assert cycles[0].fit is None
        assert cycles[0].t_opt == 4.0
        assert state.current_bracket[1] * 100.0 < 254.0
        for cycle in cycles[1:]:
            assert abs(cycle.mu_opt - 140.0) <= 1.0
            assert CLIPPED not in cycle.flags

    def test_flat_response_holds_exposure(self):
        spec = face_scene(0.05, duration=5.0)
        cycles, state = _drive(spec, self.sensor, self.config, 3)
        assert FLAT_RESPONSE in cycles[0].flags
        assert cycles[0].fit is None
        assert all(c.t_opt == 15.0 for c in cycles)
        assert all(np.isfinite(c.t_opt) for c in cycles)

    def test_buffer_capacity_and_order(self):
        config = replace(self.config, buffer_capacity=4)
        spec = face_scene(9.0, duration=5.0, pulse=(0.006, 0.02, 0.012))
        state = ControllerState.initial(config)
        for k in range(8):
            cycle, state = run_cycle(state, spec, self.sensor, k / 15.0, config)
            assert len(state.buffer) <= 4
            assert state.buffer[-2:] == (cycle.sample_low, cycle.sample_high)
            stamps = [s.timestamp for s in state.buffer]
            assert stamps == sorted(stamps)
            assert config.t_min <= cycle.t_opt <= config.t_max

    def test_outlier_purge_after_step(self):
        config = ControllerConfig(buffer_capacity=6)
        spec = face_scene(8.0, duration=5.0, events=[step(1.0, 1.5)])
        cycles, _ = _drive(spec, self.sensor, config, 20)
        assert OUTLIER_PURGE in cycles[15].flags
        assert abs(cycles[16].mu_opt - 140.0) <= 3.0
