import math

import numpy as np
import pytest
from hypothesis import given

import oracles
from conftest import spaces
from weaklinf.errors import (
    BadParams,
    MetricAxiomViolation,
    NonPositiveMass,
    UnknownAtom,
    UnsupportedDimension,
    WrongSpaceShape,
)
from weaklinf.metric_measure import (
    Ball,
    MetricMeasureSpace,
    ball_members,
    build_space,
    counterexample_function,
    doubling_constant,
    dyadic_counterexample_space,
    enumerate_canonical_balls,
    log_example_space,
    random_function,
    random_space,
)


def line(points, masses=None):
    masses = np.ones(len(points)) if masses is None else masses
    return MetricMeasureSpace(np.arange(len(points)), masses, coords=np.array(points, float)[:, None])


def test_single_atom_space():
    space = build_space([{"id": 0, "mass": 1.0, "coords": [0.0]}])
    assert space.n == 1
    assert space.total_mass == 1.0


def test_dyadic_total_mass():
    assert dyadic_counterexample_space(8).total_mass == 2 - 2.0**-8
    for K in (1, 5, 40):
        assert dyadic_counterexample_space(K).total_mass == 2 - 2.0**-K


def test_dyadic_space_k1_and_k40():
    s = dyadic_counterexample_space(1)
    assert s.coords[:, 0].tolist() == [1.0, 0.5]
    assert s.masses.tolist() == [1.0, 0.5]
    s = dyadic_counterexample_space(40)
    assert s.n == 41
    assert all(m == 2.0**-k for k, m in enumerate(s.masses.tolist()))


def test_asymmetric_matrix_rejected():
    atoms = [{"id": 0, "mass": 1.0}, {"id": 1, "mass": 1.0}]
    with pytest.raises(MetricAxiomViolation):
        build_space(atoms, {"matrix": [[0, 1], [2, 0]]})


def test_triangle_violation_reports_triple():
    atoms = [{"id": i, "mass": 1.0} for i in (5, 6, 7)]
    m = [[0, 1, 5], [1, 0, 1], [5, 1, 0]]
    with pytest.raises(MetricAxiomViolation) as exc:
        build_space(atoms, {"matrix": m})
    assert set(exc.value.triple) == {5, 6, 7}


def test_triangle_within_tolerance_accepted():
    eps = 1e-13
    m = [[0, 1, 2 + eps], [1, 0, 1], [2 + eps, 1, 0]]
    space = build_space([{"id": i, "mass": 1.0} for i in range(3)], {"matrix": m})
    assert space.n == 3


def test_bad_masses_and_atoms():
    with pytest.raises(NonPositiveMass):
        build_space([{"id": 0, "mass": 0.0, "coords": [0.0]}])
    with pytest.raises(NonPositiveMass):
        build_space([{"id": 0, "mass": -1.0, "coords": [0.0]}])
    with pytest.raises(BadParams):
        build_space([])
    with pytest.raises(BadParams):
        build_space([{"id": 0, "mass": 1.0, "coords": [0.0]}, {"id": 0, "mass": 1.0, "coords": [1.0]}])
    with pytest.raises(MetricAxiomViolation):
        build_space([{"id": 0, "mass": 1.0}, {"id": 1, "mass": 1.0}], {"matrix": [[0, 0], [0, 0]]})


def test_ball_members_small_radius_is_center():
    space = line([0.0, 1.0, 3.0])
    assert ball_members(space, Ball(1, 1.0)) == {1}
    assert ball_members(space, Ball(1, 0.25)) == {1}


def test_ball_members_dyadic():
    space = dyadic_counterexample_space(10)
    # |2^-j - 2^-2| < 5/8 * 2^-2 holds for j = 2, 3 only
    assert ball_members(space, Ball(2, 5 * 2.0**-5)) == {2, 3}
    assert ball_members(space, Ball(2, 5 * 2.0**-7)) == {2}


def test_ball_members_whole_space_and_unknown_center():
    space = line([0.0, 1.0, 3.0])
    assert ball_members(space, Ball(0, 10.0)) == {0, 1, 2}
    with pytest.raises(UnknownAtom):
        ball_members(space, Ball(9, 1.0))
    with pytest.raises(BadParams):
        Ball(0, 0.0)


def test_canonical_balls_one_point():
    fam = enumerate_canonical_balls(line([2.0]))
    assert len(fam) == 1
    assert fam[0] == Ball(0, 1.0)


def test_canonical_balls_equidistant_neighbours_enter_together():
    fam = enumerate_canonical_balls(line([0.0, 1.0, 2.0]))
    sets = [fam.member_ids(j) for j in range(len(fam)) if fam[j].center == 1]
    assert sets == [frozenset({1}), frozenset({0, 1, 2})]


@given(spaces())
def test_canonical_balls_match_brute_force(space):
    fam = enumerate_canonical_balls(space)
    got = [(b.center, fam.member_ids(j)) for j, b in enumerate(fam)]
    assert len(got) == len(set(got))
    assert set(got) == oracles.member_sets(space)
    assert len(fam) <= space.n**2
    # every representative radius reproduces its member set
    for j, b in enumerate(fam):
        assert ball_members(space, b) == fam.member_ids(j)
    # ordered by center id, then radius
    keys = [(b.center, b.radius) for b in fam]
    assert keys == sorted(keys)


def test_canonical_radius_between_adjacent_floats():
    a = 1.0
    b = np.nextafter(a, 2.0)
    fam = enumerate_canonical_balls(line([0.0, a, b]))
    for j, ball in enumerate(fam):
        assert ball_members(fam.space, ball) == fam.member_ids(j)


def test_doubling_one_point():
    assert doubling_constant(line([0.0])) == 1.0


def test_doubling_four_collinear_points():
    space = line([0.0, 1.0, 2.0, 3.0])
    # worst case: B(1, 1) = {1} while B(1, 2) = {0, 1, 2}
    assert doubling_constant(space) == oracles.doubling(space)
    assert doubling_constant(space) == 3.0


def test_doubling_dyadic_at_most_four():
    for K in (2, 10, 40):
        assert doubling_constant(dyadic_counterexample_space(K)) <= 4


@given(spaces(max_atoms=8))
def test_doubling_matches_oracle(space):
    assert doubling_constant(space) == pytest.approx(oracles.doubling(space), rel=1e-12)


def test_counterexample_function_values():
    f = counterexample_function(dyadic_counterexample_space(6))
    assert f(0) == 0
    assert f(3) == -3
    assert f(4) == 4


def test_counterexample_function_wrong_shape():
    with pytest.raises(WrongSpaceShape):
        counterexample_function(line([0.0, 1.0]))


def test_log_example_1d_mass_and_level_sets():
    space, f = log_example_space(1, 1000)
    assert abs(space.total_mass - 2) <= 1e-9
    for lam in (0.5, 1.0, 2.0):
        d = math.fsum(space.masses[np.abs(f.values) > lam].tolist())
        assert abs(d - 2 * math.exp(-lam)) <= 2e-3


def test_log_example_2d_mass():
    space, f = log_example_space(2, 200)
    assert abs(space.total_mass - math.pi) <= 1e-3
    assert np.all(np.linalg.norm(space.coords, axis=1) < 1 + 2 / 200)


def test_log_example_bad_dimension():
    with pytest.raises(UnsupportedDimension):
        log_example_space(3, 10)


def test_random_generators_are_seeded():
    a = random_function(np.random.default_rng(3), random_space(np.random.default_rng(3), 20, 2, "dyadic"), "log")
    b = random_function(np.random.default_rng(3), random_space(np.random.default_rng(3), 20, 2, "dyadic"), "log")
    assert np.array_equal(a.values, b.values)
    assert np.array_equal(a.space.coords, b.space.coords)


def test_subspace_and_scaling():
    space = line([0.0, 1.0, 4.0], [1.0, 2.0, 4.0])
    sub = space.subspace([2, 0])
    assert sub.ids.tolist() == [2, 0]
    assert sub.distances_from(0).tolist() == [0.0, 4.0]
    big = space.scaled(mass_factor=2.0, metric_factor=3.0)
    assert big.total_mass == 14.0
    assert ball_members(big, Ball(0, 3.5)) == {0, 1}
