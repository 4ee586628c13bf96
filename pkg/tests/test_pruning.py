"""
Tests for prune schedules and mask application.
"""

import numpy as np
import pytest
from numpy.testing import assert_array_equal

from conftest import random_model
from fiberdl.train.adam import AdamState
from fiberdl.train.pruning import PruneEvent, PruneSchedule, build_prune_schedule, prune_apply


class TestBuildSchedule:
    """Event placement"""

    def test_eleven_to_seven_taps_on_five_layers(self):
        schedule = build_prune_schedule([5] * 5, [3] * 5, 1000)
        assert len(schedule.events) == 10
        iterations = [event.iteration for event in schedule.events]
        assert all(b > a for a, b in zip(iterations, iterations[1:]))
        assert iterations[0] >= 1 and iterations[-1] <= 400
        assert sorted(event.layer for event in schedule.events) == sorted(list(range(5)) * 2)

    def test_longest_filter_first(self):
        schedule = build_prune_schedule([4, 2], [1, 1], 100)
        assert [event.layer for event in schedule.events] == [0, 0, 0, 1]

    def test_nothing_to_prune(self):
        schedule = build_prune_schedule([3, 3], [3, 3], 100)
        assert schedule.events == []

    def test_window_grows_to_fit_events(self):
        schedule = build_prune_schedule([5, 5], [0, 0], 5)
        iterations = [event.iteration for event in schedule.events]
        assert iterations == list(range(1, 11))

    def test_delay_shifts_every_event(self):
        schedule = build_prune_schedule([4], [1], 8, fraction=1.0, delay=2)
        assert [event.iteration for event in schedule.events] == [3, 5, 8]
        assert schedule.last_iteration == 8

    def test_negative_delay(self):
        with pytest.raises(ValueError):
            build_prune_schedule([4], [1], 8, delay=-1)

    def test_target_above_initial(self):
        with pytest.raises(ValueError):
            build_prune_schedule([2], [3], 100)

    def test_events_must_increase(self):
        with pytest.raises(ValueError):
            PruneSchedule([1], [PruneEvent(5, 0), PruneEvent(5, 0)])

    def test_dict_round_trip(self):
        schedule = build_prune_schedule([4, 3], [2, 2], 50)
        restored = PruneSchedule.from_dict(schedule.to_dict())
        assert restored.events == schedule.events


class TestPruneApply:
    """Masking the outermost tap pair"""

    def test_nine_to_seven_taps(self):
        model = random_model(np.random.default_rng(0), [4])
        schedule = build_prune_schedule([4], [3], 10)
        assert schedule.events == [PruneEvent(1, 0)]
        prune_apply(model, schedule, 1)
        linear = model.layers[0].linear
        assert not linear.mask[4]
        assert linear.half_taps[4] == 0
        assert linear.length == 7

    def test_other_iterations_untouched(self):
        model = random_model(np.random.default_rng(1), [4, 4])
        before = model.parameters()
        prune_apply(model, build_prune_schedule([4, 4], [3, 3], 100), 2)
        assert_array_equal(model.parameters(), before)

    def test_adam_moments_cleared(self):
        model = random_model(np.random.default_rng(2), [4, 2])
        state = AdamState(np.ones(model.parameter_count), np.ones(model.parameter_count), 3)
        prune_apply(model, PruneSchedule([3, 2], [PruneEvent(1, 0)]), 1, state)
        # layer 0: real parts at 0..4, imaginary parts at 5..9
        assert state.first_moment[4] == 0 and state.first_moment[9] == 0
        assert state.second_moment[4] == 0 and state.second_moment[9] == 0
        assert np.count_nonzero(state.first_moment == 0) == 2

    def test_pruned_taps_stay_zero(self):
        model = random_model(np.random.default_rng(3), [3])
        prune_apply(model, PruneSchedule([2], [PruneEvent(1, 0)]), 1)
        model.set_parameters(np.ones(model.parameter_count))
        assert model.layers[0].linear.half_taps[3] == 0

    def test_total_taps_reach_target(self):
        model = random_model(np.random.default_rng(4), [5] * 5)
        schedule = build_prune_schedule([5] * 5, [3] * 5, 30)
        for iteration in range(1, 31):
            prune_apply(model, schedule, iteration)
        assert model.total_taps == 5 * 6 + 1
