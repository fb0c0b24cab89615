import itertools
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rangecap import NonConvergence, ValidationError, make_group
from rangecap.potential import (
    EstimatorConfig,
    SimplexMeasure,
    capacity_bracket,
    capacity_mc,
    capacity_solve,
    empirical_measure,
    energy,
    equilibrium_measure,
    escape_mc,
    green_source,
    prefix_range_capacities,
    set_capacity,
)
from rangecap.potential.capacity import equilibrium_weights
from rangecap.potential.sandwich import capacity_sandwich_check, dyadic_sandwich, sandwich_sets
from rangecap.potential.variational import minimize_energy
from rangecap.walks import simulate

from conftest import lattice

Z1, Z3, Z5 = lattice(1), lattice(3), lattice(5)
WATSON_Z3 = 1.516386059151978

small_sets = st.lists(st.tuples(*[st.integers(-3, 3)] * 3), min_size=1, max_size=8, unique=True)


@pytest.mark.parametrize("R", [10, 50, 100])
def test_gamblers_ruin_bracket(R):
    est = capacity_bracket(Z1, [(0,)], R)
    assert est.bracket[1] == pytest.approx(1 / R, abs=1e-12)
    assert est.bracket[0] == pytest.approx(0.0, abs=1e-12)


def test_bracket_two_point_set_on_z():
    # from 0 with A = {0, 1} in (-R, R): escape only to the left, P = 1/2 * 1/R; symmetric at 1
    R = 20
    est = capacity_bracket(Z1, [(0,), (1,)], R)
    assert est.point == pytest.approx(0.5 / R + 0.5 / (R - 1), abs=1e-12)


@pytest.mark.parametrize("solver", ["jacobi", "cg"])
def test_iterative_solvers_agree_with_direct(solver):
    A = [(0, 0, 0), (1, 0, 0), (0, 1, 1)]
    d = capacity_bracket(Z3, A, 6, solver="direct")
    it = capacity_bracket(Z3, A, 6, solver=solver, tol=1e-12)
    assert it.point == pytest.approx(d.point, abs=1e-8)
    assert it.extra["iterations"] > 0


def test_jacobi_nonconvergence():
    with pytest.raises(NonConvergence):
        capacity_bracket(Z3, [(0, 0, 0)], 8, solver="jacobi", max_sweeps=3)


def test_bracket_rejects_points_outside_ball():
    with pytest.raises(ValidationError):
        capacity_bracket(Z3, [(5, 0, 0)], 3)


def test_singleton_capacity_is_inverse_green():
    est = capacity_solve(Z3, [(0, 0, 0)])
    assert est.point == pytest.approx(1 / WATSON_Z3, rel=1e-8)


def test_escape_mc_matches_inverse_green():
    e = (0, 0, 0)
    esc = escape_mc(Z3, [e], e, 4000, 2000, seed=1)
    # finite horizon biases the frequency upward by the escape-after-horizon probability
    assert abs(esc.value - 1 / WATSON_Z3) < 4 * esc.stderr + 0.02
    assert esc.half_value >= esc.value


def test_capacity_mc_close_to_solve():
    A = [(0, 0, 0), (1, 0, 0), (1, 1, 0)]
    mc = capacity_mc(Z3, A, 2000, 800, seed=2)
    exact = capacity_solve(Z3, A).point
    assert abs(mc.point - exact) < 4 * mc.stderr + 0.03


@given(small_sets, small_sets)
def test_capacity_monotone_and_subadditive(A, B):
    cA, cB = capacity_solve(Z3, A).point, capacity_solve(Z3, B).point
    U = list(dict.fromkeys(A + B))
    I = [a for a in A if a in set(B)]
    cU = capacity_solve(Z3, U).point
    cI = capacity_solve(Z3, I).point if I else 0.0
    tol = 1e-9
    assert cU >= max(cA, cB) - tol
    assert cA + cB >= cU + cI - tol


@given(small_sets, st.tuples(*[st.integers(-50, 50)] * 3))
def test_capacity_translation_invariant(A, h):
    shifted = [tuple(np.add(a, h)) for a in A]
    assert capacity_solve(Z3, shifted).point == pytest.approx(capacity_solve(Z3, A).point, rel=1e-10)


@given(small_sets)
def test_solve_within_bracket(A):
    br = capacity_bracket(Z3, A, 10)
    assert br.bracket[0] - 1e-12 <= capacity_solve(Z3, A).point <= br.bracket[1] + 1e-12


def test_recurrent_groups_have_zero_capacity():
    for G in (Z1, lattice(2)):
        est = capacity_solve(G, [(0,) * G.dim, (1,) + (0,) * (G.dim - 1)])
        assert est.point == 0 and est.method == "recurrent"


def test_equilibrium_weights_are_escape_probabilities():
    # the centre of a 3x3x3 cube cannot escape without re-entering A: weight 0
    A = list(itertools.product(range(3), repeat=3))
    w = equilibrium_weights(green_source(Z3).matrix(A))
    centre = A.index((1, 1, 1))
    assert abs(w[centre]) < 1e-10
    assert np.all(np.delete(w, centre) > 0)


def test_prefix_capacities_match_direct_solves():
    path = simulate(Z3, 800, 4)
    grid = [10, 100, 400, 800]
    nested = prefix_range_capacities(path, grid, EstimatorConfig())
    for n, est in zip(grid, nested):
        direct = capacity_solve(Z3, path.positions[: n + 1]).point
        assert est.point == pytest.approx(direct, rel=1e-9)
    assert all(b.point >= a.point for a, b in zip(nested, nested[1:]))


def test_prefix_capacities_escape_mc_path():
    path = simulate(Z5, 16, 1)
    cfg = EstimatorConfig(method="escape-mc", trials=200, horizon_factor=50)
    mc = prefix_range_capacities(path, [16], cfg)[0]
    exact = capacity_solve(Z5, path.positions).point
    assert abs(mc.point - exact) < 4 * mc.stderr + 0.05


def test_estimator_config_round_trip():
    cfg = EstimatorConfig.from_dict({"method": "escape-mc", "trials": 10})
    assert EstimatorConfig.from_dict(cfg.to_dict()) == cfg
    with pytest.raises(ValidationError):
        EstimatorConfig.from_dict({"bogus": 1})
    with pytest.raises(ValidationError):
        EstimatorConfig(method="magic")
    assert EstimatorConfig().resolve(Z1) == "recurrent"
    assert EstimatorConfig().resolve(make_group("heisenberg")) == "escape-mc"


def test_set_capacity_dispatch():
    assert set_capacity(Z3, [(0, 0, 0)]).point == pytest.approx(1 / WATSON_Z3, rel=1e-8)


# -- variational ---------------------------------------------------------------


def test_energy_of_empirical_measure_is_double_sum():
    path = simulate(Z3, 60, 9)
    nu = empirical_measure(path)
    src = green_source(Z3)
    direct = sum(src.value(tuple(np.subtract(b, a))) for a in path.positions[1:] for b in path.positions[1:]) / 60**2
    assert energy(Z3, path.positions, nu, src) == pytest.approx(direct, rel=1e-10)


def test_simplex_measure_validation():
    with pytest.raises(ValidationError):
        SimplexMeasure([(0,), (1,)], [0.7, 0.7])
    assert SimplexMeasure.dirac((0,)).as_dict() == {(0,): 1.0}
    with pytest.raises(ValidationError):
        energy(Z3, [(0, 0, 0)], SimplexMeasure.dirac((1, 0, 0)))


@given(small_sets)
def test_variational_value_equals_capacity(A):
    fw = equilibrium_measure(Z3, A, iterations=5000, tolerance=1e-12, step="line-search")
    cap = capacity_solve(Z3, A).point
    assert fw.estimate.point == pytest.approx(cap, rel=1e-6)
    # any other probability measure has at least the minimal energy
    nu = SimplexMeasure(fw.measure.support, np.full(len(fw.measure.support), 1 / len(fw.measure.support)))
    assert energy(Z3, A, nu) >= fw.energy - 1e-12


def test_open_loop_steps_reduce_gap():
    A = simulate(Z3, 40, 2).positions
    M = green_source(Z3).matrix(list(dict.fromkeys(A)))
    _, _, g_short, _, _ = minimize_energy(M, 10, 0.0)
    _, _, g_long, _, _ = minimize_energy(M, 2000, 0.0)
    assert g_long < g_short


def test_strict_nonconvergence():
    A = list(itertools.product(range(3), repeat=3))
    with pytest.raises(NonConvergence):
        equilibrium_measure(Z3, A, iterations=3, tolerance=1e-15, strict=True)
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        res = equilibrium_measure(Z3, A, iterations=3, tolerance=1e-15)
    assert not res.converged and w


# -- decompositions ----------------------------------------------------------------


@given(small_sets, small_sets)
def test_two_set_sandwich_exact_green(A, B):
    rep = sandwich_sets(Z3, A, B)
    assert rep.upper_ok and rep.lower_ok
    assert rep.upper_margin >= -1e-9 and rep.lower_margin >= -1e-9


def test_path_sandwich_and_dyadic():
    path = simulate(Z5, 256, 3)
    rep = capacity_sandwich_check(Z5, path, 100)
    assert rep.upper_ok and rep.lower_ok
    prev = None
    for L in (1, 2, 3):
        d = dyadic_sandwich(path, L)
        assert d.upper_ok and d.lower_margin >= -1e-9
        if prev is not None:
            assert d.segment_sum >= prev - 1e-9
        prev = d.segment_sum


def test_escape_mc_worked_values():
    e1, e2 = (0,), (0, 0)
    assert escape_mc(Z1, [(-1,), (0,), (1,)], e1, 50, 200, seed=0).value == 0.0
    assert escape_mc(lattice(2), [e2], e2, 1, 100, seed=0).value == 1.0


def test_escape_mc_nested_horizons():
    A = [(0, 0, 0), (1, 0, 0)]
    short = escape_mc(Z3, A, (0, 0, 0), 300, 500, seed=4)
    long = escape_mc(Z3, A, (0, 0, 0), 3000, 500, seed=4)
    assert long.value <= short.value
    assert long.half_value <= short.half_value or long.horizon // 2 > short.horizon


def test_capacity_mc_worked_values():
    assert capacity_mc(Z3, [], 100, 10, seed=0).point == 0.0
    assert capacity_mc(Z1, [(0,), (3,)], 10**4, 200, seed=1).point < 0.05


def test_symmetric_pair_equilibrium():
    fw = equilibrium_measure(Z3, [(1, 0, 0), (-1, 0, 0)], iterations=5000, tolerance=1e-12)
    assert np.allclose(fw.measure.weights, [0.5, 0.5], atol=1e-4)
    assert fw.estimate.method == "variational-lower"


@given(small_sets, st.lists(st.floats(0.01, 1.0), min_size=8, max_size=8))
def test_any_measure_respects_bracket(A, raw):
    w = np.asarray(raw[: len(A)])
    nu = SimplexMeasure(A, w / w.sum())
    br = capacity_bracket(Z3, A, 10)
    assert 1 / energy(Z3, A, nu) <= br.bracket[1] + 1e-6
