import numpy as np
import pytest

import cache_rl as cr
from cache_rl.schedules import (
    ConstantEpsilon,
    ExploreThenExploit,
    ExploreThenInverseDecay,
    InverseTimeEpsilon,
    PiecewiseCostSchedule,
    as_epsilon_schedule,
    beta_from_json,
    beta_to_json,
    epsilon_schedule_from_json,
    epsilon_schedule_to_json,
    VisitCountBeta,
)


class TestEpsilonSchedules:
    def test_constant(self):
        s = ConstantEpsilon(0.05)
        assert s.epsilon_at(1) == 0.05
        np.testing.assert_array_equal(s.epsilon_array(np.arange(1, 5)), [0.05] * 4)
        with pytest.raises(ValueError):
            ConstantEpsilon(1.5)

    def test_inverse_time(self):
        s = InverseTimeEpsilon()
        assert s.epsilon_at(1) == 1.0
        assert s.epsilon_at(4) == 0.25
        np.testing.assert_allclose(s.epsilon_array(np.array([1, 2, 10])), [1, 0.5, 0.1])

    def test_explore_then_exploit(self):
        s = ExploreThenExploit(t_explore=3)
        assert [s.epsilon_at(t) for t in (1, 2, 3, 4, 5)] == [1, 1, 1, 0, 0]
        np.testing.assert_array_equal(s.epsilon_array(np.arange(1, 6)), [1, 1, 1, 0, 0])

    def test_explore_then_inverse(self):
        s = ExploreThenInverseDecay(t_explore=2)
        assert [s.epsilon_at(t) for t in (1, 2, 3, 4, 6)] == [1, 1, 1.0, 0.5, 0.25]

    def test_coercion_and_json(self):
        assert as_epsilon_schedule(0.1) == ConstantEpsilon(0.1)
        for sched in (
            ConstantEpsilon(0.2),
            InverseTimeEpsilon(),
            ExploreThenExploit(5),
            ExploreThenInverseDecay(9),
        ):
            assert epsilon_schedule_from_json(epsilon_schedule_to_json(sched)) == sched

    def test_beta_json(self):
        assert beta_from_json(beta_to_json(0.8)) == 0.8
        assert isinstance(beta_from_json(beta_to_json(VisitCountBeta())), VisitCountBeta)


class TestPiecewiseCostSchedule:
    def test_validation(self):
        p = cr.CostParams(1, 2, 3)
        with pytest.raises(ValueError):
            PiecewiseCostSchedule(segments=((5, p),))
        with pytest.raises(ValueError):
            PiecewiseCostSchedule(segments=((0, p), (0, p)))

    def test_left_closed_boundaries(self):
        a, b = cr.CostParams(1, 0, 0), cr.CostParams(2, 0, 0)
        sched = PiecewiseCostSchedule(segments=((0, a), (10, b)))
        assert sched.params_at(9) == a
        assert sched.params_at(10) == b
        lam = sched.lambda_arrays(8, 12)
        np.testing.assert_array_equal(lam[0], [1, 1, 2, 2])

    def test_constant_helper(self):
        p = cr.CostParams(4, 5, 6)
        sched = PiecewiseCostSchedule.constant(p)
        assert sched.is_constant
        assert sched.params_at(123456) == p

    def test_json_round_trip(self):
        sched = PiecewiseCostSchedule(
            segments=((0, cr.CostParams(0, 1000, 0)), (100, cr.CostParams(0, 0, 1000)))
        )
        assert PiecewiseCostSchedule.from_json(sched.to_json()) == sched
