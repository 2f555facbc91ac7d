import math
from fractions import Fraction as Fr

import numpy as np
import pytest
from hypothesis import given

import oracles
from conftest import sample_functions
from weaklinf.errors import BadParams, NonPositiveT
from weaklinf.metric_measure import (
    MetricMeasureSpace,
    SampleFunction,
    counterexample_function,
    dyadic_counterexample_space,
)
from weaklinf.rearrangement import (
    StepFunction,
    cavalieri_lp,
    decreasing_rearrangement,
    distribution_function,
    duality_check,
    identity_id1_check,
    lebesgue_distribution,
    level_set_integral,
    level_set_integral_from_distribution,
    maximal_average,
    power_sum,
    sample_points,
    weak_seminorm,
)


def unit_line(values):
    n = len(values)
    space = MetricMeasureSpace(np.arange(n), np.ones(n), coords=np.arange(n, dtype=float)[:, None])
    return SampleFunction(space, values)


def dyadic(K=40):
    return counterexample_function(dyadic_counterexample_space(K))


def test_step_function_closed_forms():
    g = StepFunction([1.0, 3.0], [2.0, 1.0, 0.0])
    assert g(0.0) == 2.0 and g(1.0) == 1.0 and g(2.9) == 1.0 and g(3.0) == 0.0
    assert g.left_limit(1.0) == 2.0 and g.left_limit(3.0) == 1.0
    assert g.cumulative(2.0) == 3.0
    assert g.tail(0.5) == 3.0
    assert g.integral() == 4.0
    # p int x^(p-1) g = 2 * 1 + 1 * (9 - 1) for p = 2
    assert g.power_moment(2.0) == 10.0
    assert StepFunction.from_dict(g.to_dict()) == g


def test_step_function_rejects_bad_input():
    with pytest.raises(BadParams):
        StepFunction([1.0], [1.0, 2.0])
    with pytest.raises(BadParams):
        StepFunction([2.0, 1.0], [3.0, 2.0, 1.0])
    with pytest.raises(BadParams):
        StepFunction([1.0], [1.0])
    assert StepFunction([], [1.0]).tail(0.0) == math.inf


def test_zero_function():
    f = unit_line([0.0, 0.0])
    d = distribution_function(f)
    assert d(0.0) == 0 and d.breakpoints.size == 0
    fs = decreasing_rearrangement(d)
    assert fs(0.0) == 0 and fs(5.0) == 0
    assert duality_check(f)
    assert weak_seminorm(f)[0] == 0
    assert cavalieri_lp(f, 2.0) == 0
    assert identity_id1_check(f, 1.0)


def test_two_atom_example():
    f = unit_line([0.0, 1.0])
    d = distribution_function(f)
    assert d(0.5) == 1
    fs = decreasing_rearrangement(d)
    assert fs(0.0) == 1 and fs(0.999) == 1 and fs(1.0) == 0
    assert maximal_average(fs, 2.0) == 0.5
    assert weak_seminorm(f) == (1.0, 1.0)
    assert cavalieri_lp(f, 2.0) == 1.0
    assert level_set_integral(f, 0.5) == 1.0


def test_constant_function_seminorm():
    space = MetricMeasureSpace([0, 1], [0.25, 0.75], coords=[[0.0], [1.0]])
    f = SampleFunction(space, [3.0, -3.0])
    assert weak_seminorm(f) == (3.0, 1.0)
    fs = decreasing_rearrangement(distribution_function(f))
    for t in (0.1, 0.5, 1.0):
        assert maximal_average(fs, t) == pytest.approx(3.0, rel=1e-15)


def test_maximal_average_of_indicator():
    g = StepFunction([1.0], [1.0, 0.0])
    assert maximal_average(g, 4.0) == 0.25
    with pytest.raises(NonPositiveT):
        maximal_average(g, 0.0)


def test_dyadic_distribution_and_rearrangement():
    f = dyadic(40)
    d = distribution_function(f)
    assert d(1.5) == 0.5 - 2.0**-40
    assert d.breakpoints.size == 40
    fs = decreasing_rearrangement(d)
    assert fs(0.3) == 2.0
    assert fs(0.0) == 40.0
    assert duality_check(f)
    assert identity_id1_check(f, 1.0)


def test_dyadic_cavalieri_and_level_integral():
    K = 40
    f = dyadic(K)
    exact = 2 - (K + 2) * 2.0**-K
    assert cavalieri_lp(f, 1.0) == pytest.approx(exact, rel=1e-15)
    assert power_sum(f, 1.0) == pytest.approx(exact, rel=1e-15)
    # K -> infinity limit is 3/2 = (1 + 2) d(1)
    lam1 = level_set_integral(f, 1.0)
    assert abs(lam1 - 1.5) < 1e-10
    assert abs(lam1 - 3 * distribution_function(f)(1.0)) < 1e-10


def test_level_set_integral_above_max():
    f = dyadic(10)
    assert level_set_integral(f, 10.0) == 0
    assert level_set_integral(f, 11.0) == 0


def test_lebesgue_distribution_inverts_rearrangement():
    f = dyadic(12)
    d = distribution_function(f)
    assert lebesgue_distribution(decreasing_rearrangement(d)) == d


@given(sample_functions())
def test_distribution_matches_oracle(f):
    d = distribution_function(f)
    for lam in oracles.level_grid(f):
        assert Fr(d(float(lam))) == oracles.d_at(f, lam)


@given(sample_functions())
def test_rearrangement_matches_oracle(f):
    d = distribution_function(f)
    fs = decreasing_rearrangement(d)
    for t in oracles.t_grid(f):
        t = float(t)
        assert Fr(fs(t)) == oracles.f_star(f, t)
        assert maximal_average(fs, t) == pytest.approx(float(oracles.f_star_star(f, t)), rel=1e-12, abs=1e-300)


@given(sample_functions())
def test_weak_seminorm_matches_oracle(f):
    value, t = weak_seminorm(f)
    ref = float(oracles.weak_seminorm(f))
    assert value == pytest.approx(ref, rel=1e-12, abs=1e-12 * max(1.0, float(np.max(np.abs(f.values)))))
    if value > 0:
        fs = decreasing_rearrangement(distribution_function(f))
        assert maximal_average(fs, t) - fs(t) == value


@given(sample_functions())
def test_equimeasurable(f):
    # f* has the same distribution as |f| under Lebesgue measure
    d = distribution_function(f)
    assert lebesgue_distribution(decreasing_rearrangement(d)) == d


@given(sample_functions())
def test_identities(f):
    assert duality_check(f)
    d = distribution_function(f)
    fs = decreasing_rearrangement(d)
    for t in sample_points(fs, include_zero=False).tolist():
        assert identity_id1_check(f, t)
    for p in (0.5, 1.0, 2.0, 3.0):
        assert cavalieri_lp(f, p) == pytest.approx(power_sum(f, p), rel=1e-12, abs=1e-300)
    for lam in sample_points(d).tolist():
        assert level_set_integral_from_distribution(d, lam) == pytest.approx(
            level_set_integral(f, lam), rel=1e-12, abs=1e-300
        )


@given(sample_functions())
def test_rearrangement_invariance_under_scaling(f):
    s = 2.0**3
    g = SampleFunction(f.space.scaled(mass_factor=s), f.values)
    assert weak_seminorm(g)[0] == weak_seminorm(f)[0]
    h = f.scaled(-s)
    assert weak_seminorm(h)[0] == s * weak_seminorm(f)[0]
