import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracles
from conftest import spaces
from weaklinf.covering import (
    CoverInstance,
    czd_cover,
    refined_containment_check,
    stopping_radius,
    vitali_select,
)
from weaklinf.errors import HypothesisViolated, NotInE
from weaklinf.metric_measure import (
    Ball,
    MetricMeasureSpace,
    doubling_constant,
    dyadic_counterexample_space,
    enumerate_canonical_balls,
)
from weaklinf.verify import random_cover_instance


def line(points, masses=None):
    masses = np.ones(len(points)) if masses is None else masses
    return MetricMeasureSpace(np.arange(len(points)), masses, coords=np.array(points, float)[:, None])


def test_hypothesis_checks():
    space = line([0.0, 1.0, 2.0, 20.0])
    with pytest.raises(HypothesisViolated):
        CoverInstance(space, Ball(0, 1.5), frozenset({0, 1}))
    with pytest.raises(HypothesisViolated):
        CoverInstance(space, Ball(0, 1.5), frozenset({3}))
    inst = CoverInstance(space, Ball(0, 1.5), frozenset({0}))
    assert inst.E == {0}
    with pytest.raises(NotInE):
        stopping_radius(inst, 1)


def test_empty_E():
    space = line([0.0, 1.0, 2.0, 3.0])
    inst = CoverInstance(space, Ball(0, 1.5), frozenset({3}))
    assert inst.E == frozenset()
    r = czd_cover(inst)
    assert r.balls == [] and r.uncovered_mass == 0
    assert r.disjoint and r.property_i and r.property_ii and r.property_iii and r.chain_holds


def test_single_light_atom_in_heavy_ball():
    space = line([0.0, 1.0, 2.0, 3.0], [8.0, 8.0, 0.125, 8.0])
    inst = CoverInstance(space, Ball(1, 2.5), frozenset({2}))
    # B(2, 5 * 2**-k) keeps a heavy neighbour for k <= 2 and is {2} at k = 3
    assert stopping_radius(inst, 2) == 2
    r = czd_cover(inst)
    assert len(r.balls) == 1 and r.balls[0].center == 2
    assert r.property_i and r.property_ii and r.property_iii and r.chain_holds


def test_stopping_radius_balance_equal_then_fails():
    # B(0, 3) = {0, 1, 2} balances exactly; B(0, 1.5) = {0, 1} does not
    space = line([0.0, 1.0, 2.0], [2.0, 1.0, 1.0])
    inst = CoverInstance(space, Ball(1, 1.5), frozenset({0}))
    assert inst.masses_in(0, 3.0) == (2.0, 2.0)
    assert stopping_radius(inst, 0) == 0


def test_stopping_radius_heavy_center_terminates():
    space = line([0.0, 0.5, 2.0], [4.0, 1.0, 8.0])
    inst = CoverInstance(space, Ball(0, 2.5), frozenset({0}))
    # balanced while the ball reaches the atom at 2, then {0, 0.5} and {0} fail
    assert stopping_radius(inst, 0) == 1
    assert oracles.stopping_radius(inst, 0) == 1


def test_vitali_disjoint_input_kept():
    space = line([0.0, 10.0, 20.0])
    balls = [Ball(0, 1.0), Ball(1, 2.0), Ball(2, 3.0)]
    assert vitali_select(space, balls) == [Ball(2, 3.0), Ball(1, 2.0), Ball(0, 1.0)]


def test_vitali_duplicates_and_nested_chain():
    space = line([0.0, 1.0, 2.0, 3.0])
    assert vitali_select(space, [Ball(1, 1.5)] * 3) == [Ball(1, 1.5)]
    chain = [Ball(0, 0.5), Ball(0, 1.5), Ball(0, 2.5), Ball(1, 1.2)]
    kept = vitali_select(space, chain)
    assert kept == [Ball(0, 2.5)]
    five = set(space.ids[space.ball_indices(kept[0].dilate(5))].tolist())
    for b in chain:
        assert set(space.ids[space.ball_indices(b)].tolist()) <= five


@given(spaces(max_atoms=8), st.integers(0, 2**32 - 1))
def test_stopping_radius_matches_oracle(space, seed):
    rng = np.random.default_rng(seed)
    fam = enumerate_canonical_balls(space)
    B0 = fam[int(rng.integers(len(fam)))]
    d = space.distances_from(space.index(B0.center))
    mu_B0 = space.mass_of(np.flatnonzero(d < B0.radius))
    F, m = [], 0.0
    for a in rng.permutation(np.flatnonzero(d < 3 * B0.radius)).tolist():
        if m + space.masses[a] <= mu_B0 / 2:
            F.append(int(space.ids[a]))
            m += space.masses[a]
    inst = CoverInstance(space, B0, frozenset(F))
    for x in sorted(inst.E):
        assert stopping_radius(inst, x) == oracles.stopping_radius(inst, x)


def test_random_cover_properties():
    rng = np.random.default_rng(11)
    for _ in range(60):
        inst = random_cover_instance(rng, 24)
        c = doubling_constant(inst.space)
        r = czd_cover(inst, c)
        assert r.disjoint and r.balls_in_3B0
        assert r.property_i and r.property_ii and r.property_iii and r.chain_holds
        assert r.measured_constant <= 2 * c**3
        covered = set().union(*(b.dilate_members for b in r.balls)) if r.balls else set()
        assert inst.E <= covered


def test_dyadic_cover():
    space = dyadic_counterexample_space(12)
    inst = CoverInstance(space, Ball(0, 1.0), frozenset({1, 3, 5}))
    r = czd_cover(inst)
    assert r.property_i and r.property_ii and r.property_iii and r.chain_holds


def test_dilate_radius_is_exact_power_of_two():
    space = line([0.0, 0.3, 0.7, 1.9], [1.0, 0.25, 1.0, 2.0])
    inst = CoverInstance(space, Ball(0, 0.8), frozenset({1}))
    for b in czd_cover(inst).balls:
        assert b.dilate_radius == np.ldexp(0.8, 1 - b.k)


def test_refined_containment_zero_counterexample():
    # k = 0 at x = 3 and B(3, 8) reaches the atom at 10, outside 2 B0 but inside 3 B0
    space = line([-3.5, 0.0, 3.0, 10.0], [1.0, 0.5, 1.0, 1.0])
    inst = CoverInstance(space, Ball(1, 4.0), frozenset({2}))
    assert stopping_radius(inst, 2) == 0
    assert not refined_containment_check(inst, 0)
    r = czd_cover(inst)
    assert r.dilates_in_3B0


def multiscale_instance(rng, j):
    n = int(rng.integers(3, 12))
    dim = int(rng.integers(1, 3))
    coords = rng.random((n, dim)) * np.ldexp(1.0, -rng.integers(0, 8, size=(n, 1)))
    masses = np.ldexp(1.0, -rng.integers(0, 8, size=n))
    space = MetricMeasureSpace(np.arange(n), masses, coords=coords)
    c = doubling_constant(space)
    fam = enumerate_canonical_balls(space)
    B0 = fam[int(rng.integers(len(fam)))]
    d = space.distances_from(space.index(B0.center))
    mu_B0 = space.mass_of(np.flatnonzero(d < B0.radius))
    cap = mu_B0 / (2 * c**j)
    F, m = [], 0.0
    for a in rng.permutation(np.flatnonzero(d < 3 * B0.radius)).tolist():
        if m + masses[a] <= cap:
            F.append(a)
            m += masses[a]
    return CoverInstance(space, B0, frozenset(F)), c


@pytest.mark.parametrize("j", [1, 2, 5])
def test_refined_containment_holds(j):
    rng = np.random.default_rng(100 + j)
    for _ in range(80):
        inst, c = multiscale_instance(rng, j)
        assert refined_containment_check(inst, j, c)


def test_refined_containment_hypothesis():
    space = line([0.0, 1.0, 2.0])
    inst = CoverInstance(space, Ball(1, 1.5), frozenset({0}))
    with pytest.raises(HypothesisViolated):
        refined_containment_check(inst, 2)
