import math

import numpy as np
import pytest

from first_crossing import closed_forms as cf
from first_crossing.estimators import estimate_mean
from first_crossing.pdde import (
    BVPSolution,
    Grid1D,
    SolverError,
    default_x_min,
    grid_refine_study,
    solve_lt_bvp,
    solve_min_bvp,
    solve_moment_bvp,
    solve_pdde_levy,
    truncation_delta,
)
from first_crossing.process import Barrier, ProcessSpec, make_preset
from first_crossing.simulate import MCConfig, simulate_paths

BM1 = make_preset("BM_DRIFT", mu=1.0)
S = 2.0


def _grid(h=1e-3, width=30.0, level=S):
    return Grid1D.from_spacing(level - width, level, h)


def test_grid():
    g = Grid1D.from_spacing(-1.0, 2.0, 0.5)
    assert g.n_nodes == 7 and g.h == 0.5
    assert g.nodes[-1] == 2.0 and np.all(np.diff(g.nodes) > 0)
    with pytest.raises(ValueError):
        Grid1D.from_spacing(0.0, 1.0, 0.3)
    with pytest.raises(ValueError):
        Grid1D(0.0, 1.0, 2)
    with pytest.raises(ValueError):
        Grid1D(1.0, 1.0, 5)


def test_default_truncation():
    assert default_x_min(BM1, 2.0) == -28.0
    assert default_x_min(make_preset("BM_DRIFT", mu=0.1), 2.0) == -98.0
    assert default_x_min(make_preset("WF_CONJ"), 1.0) == -29.0


def test_solution_interpolation():
    sol = BVPSolution(Grid1D(0.0, 1.0, 3), np.array([0.0, 1.0, 4.0]), 0.0, "natural")
    assert sol.at(0.75) == 2.5
    with pytest.raises(ValueError):
        sol.at(1.5)


# Laplace transforms


def test_lt_bm_matches_closed_form():
    sol = solve_lt_bvp(BM1, 1.0, 1.5, _grid())
    assert sol.at(1.0) == pytest.approx(math.exp(-1), abs=1e-6)
    assert sol.values[-1] == 1.0 and sol.values[0] == 0.0
    assert sol.residual_norm < 1e-8
    assert sol.left_bc_kind == "dirichlet-zero"


def test_lt_small_lambda_is_one():
    sol = solve_lt_bvp(BM1, 1.0, 1e-8, _grid())
    x = sol.grid.nodes
    near = x > S - 10
    assert np.max(np.abs(sol.values[near] - 1.0)) < 1e-3


def test_lt_non_increasing_in_lambda():
    curves = [solve_lt_bvp(BM1, 1.0, lam, _grid(h=1e-2)).values for lam in (0.5, 1.0, 2.0, 4.0)]
    for a, b in zip(curves, curves[1:]):
        assert np.all(b <= a + 1e-12)


def test_lt_rejects_bad_input():
    with pytest.raises(ValueError):
        solve_lt_bvp(BM1, 1.0, 0.0, _grid(h=1e-2))
    with pytest.raises(ValueError):
        solve_lt_bvp(make_preset("POISSON", theta=1.0), 1.0, 1.0, _grid(h=1e-2))


def test_driftless_airy_transform_of_distance_to_barrier():
    # the Airy expression is the transform of int (S - X) dt for driftless BM
    bm0 = make_preset("BM_DRIFT", mu=0.0)
    sol = solve_lt_bvp(bm0, lambda x: S - x, 1.0, _grid(h=1e-3, width=30.0))
    assert sol.at(1.0) == pytest.approx(cf.driftless_barrier_area_lt(1.0, Barrier(S, 1.0)), abs=1e-5)


def test_driftless_transform_with_signed_weight_is_ill_posed():
    bm0 = make_preset("BM_DRIFT", mu=0.0)
    with pytest.raises(SolverError):
        solve_lt_bvp(bm0, lambda x: x, 1.0, _grid(h=1e-3, width=30.0))


def test_lt_truncation_robust():
    solve = lambda xm: solve_lt_bvp(BM1, 1.0, 1.5, Grid1D.from_spacing(xm, S, 1e-2))
    assert truncation_delta(solve, -28.0, 30.0, 1.0) < 1e-7


# Moments


def test_mean_crossing_time_is_linear():
    sol = solve_moment_bvp(BM1, 1.0, 1, _grid())
    x = sol.grid.nodes
    assert np.max(np.abs(sol.values - (S - x))) < 1e-8
    assert sol.left_bc_kind == "polynomial-match"


def test_second_crossing_moment():
    g = _grid()
    t1 = solve_moment_bvp(BM1, 1.0, 1, g)
    t2 = solve_moment_bvp(BM1, 1.0, 2, g, prev=t1)
    assert t2.at(1.0) == pytest.approx(cf.bm_fpt_moments(Barrier(S, 1.0), 1.0).second, abs=1e-6)


def test_area_moments():
    g = _grid()
    a1 = solve_moment_bvp(BM1, lambda x: x, 1, g)
    assert a1.at(1.0) == pytest.approx(1.0, abs=1e-6)
    a2 = solve_moment_bvp(BM1, lambda x: x, 2, g, prev=a1)
    assert a2.at(1.0) == pytest.approx(cf.bm_area_second(Barrier(S, 1.0), 1.0), abs=1e-4)
    assert "moment may not exist" not in a1.flags


def test_area_moments_other_drift():
    mu = 2.0
    spec = make_preset("BM_DRIFT", mu=mu)
    g = _grid(width=30.0)
    a1 = solve_moment_bvp(spec, lambda x: x, 1, g)
    a2 = solve_moment_bvp(spec, lambda x: x, 2, g, prev=a1)
    b = Barrier(S, 1.0)
    assert a1.at(1.0) == pytest.approx(cf.bm_area_mean(b, mu), abs=1e-6)
    assert a2.at(1.0) == pytest.approx(cf.bm_area_second(b, mu), abs=1e-4)


def test_natural_condition_agrees_for_linear_solution():
    sol = solve_moment_bvp(BM1, 1.0, 1, _grid(), left_bc_kind="natural")
    assert sol.at(1.0) == pytest.approx(1.0, abs=1e-8)
    assert sol.left_bc_kind == "natural"


def test_moment_requires_previous_solution():
    with pytest.raises(ValueError):
        solve_moment_bvp(BM1, 1.0, 2, _grid(h=1e-2))
    with pytest.raises(ValueError):
        solve_moment_bvp(BM1, 1.0, 3, _grid(h=1e-2))
    with pytest.raises(ValueError):
        solve_moment_bvp(BM1, 1.0, 1, _grid(h=1e-2), left_bc_kind="spline")


def test_ou_mean_crossing_time():
    ou = make_preset("OU", mu=1.0, sigma=1.0)
    g = Grid1D.from_spacing(default_x_min(ou, 1.0), 1.0, 1e-3)
    sol = solve_moment_bvp(ou, 1.0, 1, g)
    assert sol.left_bc_kind == "natural"
    assert sol.at(0.0) == pytest.approx(cf.ou_mean_fpt(Barrier(1.0, 0.0), 1.0, 1.0), abs=1e-4)


def test_moment_truncation_robust():
    solve = lambda xm: solve_moment_bvp(BM1, lambda x: x, 1, Grid1D.from_spacing(xm, S, 1e-2))
    assert truncation_delta(solve, -28.0, 30.0, 1.0) < 1e-7


# Minimum law


def test_min_bm_matches_closed_form():
    sol = solve_min_bvp(BM1, 0.0, S, Grid1D.from_spacing(0.0, S, 1e-4))
    assert sol.at(1.0) == pytest.approx(cf.bm_min_cdf(0.0, Barrier(S, 1.0), 1.0), abs=1e-8)
    assert "not monotone" not in sol.flags


def test_min_ou_matches_quadrature():
    ou = make_preset("OU", mu=1.0, sigma=1.0)
    sol = solve_min_bvp(ou, -1.0, 1.0, Grid1D.from_spacing(-1.0, 1.0, 1e-3))
    assert sol.at(0.0) == pytest.approx(cf.ou_min_cdf(-1.0, Barrier(1.0, 0.0), 1.0, 1.0), abs=1e-6)


def test_min_maximum_principle_and_monotone():
    for spec in (BM1, make_preset("BM_DRIFT", mu=-2.0), make_preset("OU", mu=3.0, sigma=0.5)):
        sol = solve_min_bvp(spec, -1.0, 1.0, Grid1D.from_spacing(-1.0, 1.0, 1e-3))
        assert np.all(sol.values >= -1e-10) and np.all(sol.values <= 1 + 1e-10)
        assert np.all(np.diff(sol.values) <= 1e-10)


def test_min_degenerate_interval():
    z = S - 1e-3
    sol = solve_min_bvp(BM1, z, S, Grid1D(z, S, 11))
    assert sol.values[0] == 1.0 and sol.values[-1] == 0.0
    with pytest.raises(ValueError):
        solve_min_bvp(BM1, 0.0, S, Grid1D.from_spacing(-1.0, S, 1e-2))


# Shift-coupled problems


def test_levy_small_jump_rate_matches_diffusion():
    g = _grid(h=1e-2)
    a = solve_pdde_levy(0.5, 1e-8, 1.0, "fpt-lt", g)
    b = solve_lt_bvp(make_preset("BM_DRIFT", mu=0.5), 1.0, 1.0, g)
    assert np.max(np.abs(a.values - b.values)) < 1e-5


def test_levy_pure_jump_limit_matches_poisson():
    g = _grid(h=1e-2, width=20.0, level=4.0)
    sol = solve_pdde_levy(0.0, 2.0, 0.0, "mean-fpt", g, sigma=1e-6)
    assert sol.at(1.0) == pytest.approx(1.5, abs=1e-4)
    assert sol.at(1.5) == pytest.approx(1.5, abs=1e-4)


def test_levy_mean_crossing_time_against_monte_carlo():
    sol = solve_pdde_levy(0.5, 1.0, 0.0, "mean-fpt", _grid(h=1e-2))
    spec = make_preset("LEVY", beta=0.5, theta=1.0)
    s = simulate_paths(spec, Barrier(S, 1.0), MCConfig(dt=1e-3, n_paths=20_000, seed=17,
                                                     bridge_correction=True))
    assert abs(estimate_mean(s.field("tau")).z_score(sol.at(1.0))) < 3
    # Wald: overshoot at the crossing makes (S - x) / (beta + theta) a lower bound
    assert sol.at(1.0) > 1.0 / 1.5


def test_levy_laplace_bounds_and_monotonicity():
    g = _grid(h=1e-2)
    prev = None
    for lam in (0.5, 1.0, 2.0):
        sol = solve_pdde_levy(0.5, 1.0, lam, "fpt-lt", g)
        assert np.all((sol.values >= 0) & (sol.values <= 1))
        if prev is not None:
            assert np.all(sol.values <= prev + 1e-12)
        prev = sol.values


def test_levy_input_checks():
    with pytest.raises(SolverError):
        solve_pdde_levy(0.5, 1.0, 1.0, "fpt-lt", Grid1D(-28.0, 2.0, 1001))
    with pytest.raises(ValueError):
        solve_pdde_levy(0.5, 1.0, 1.0, "fpt-lt", Grid1D.from_spacing(0.0, 2.0, 0.1))
    with pytest.raises(ValueError):
        solve_pdde_levy(0.5, 0.0, 1.0, "fpt-lt", _grid(h=1e-2))
    with pytest.raises(ValueError):
        solve_pdde_levy(0.5, 1.0, 1.0, "second-fpt", _grid(h=1e-2))


# Refinement studies


def test_refinement_order_lt():
    op = lambda h: solve_lt_bvp(BM1, 1.0, 1.5, _grid(h=h)).at(1.0)
    study = grid_refine_study(op, [0.1, 0.05, 0.025, 0.0125], exact=math.exp(-1))
    assert not study.flagged
    assert 1.8 <= study.order <= 2.2


def test_refinement_order_min():
    op = lambda h: solve_min_bvp(BM1, 0.0, S, Grid1D.from_spacing(0.0, S, h)).at(1.0)
    exact = cf.bm_min_cdf(0.0, Barrier(S, 1.0), 1.0)
    study = grid_refine_study(op, [0.1, 0.05, 0.025, 0.0125], exact=exact)
    assert 1.8 <= study.order <= 2.2


def test_refinement_richardson_without_exact_value():
    op = lambda h: solve_lt_bvp(BM1, 1.0, 1.5, _grid(h=h)).at(1.0)
    study = grid_refine_study(op, [0.1, 0.05, 0.025, 0.0125])
    assert study.errors.size == 3 and 1.8 <= study.order <= 2.2


def test_refinement_flags_discontinuous_coefficient():
    jump = 0.5 + 1 / math.pi
    spec = ProcessSpec(lambda x: np.where(np.asarray(x) < jump, 4.0, -2.0), lambda x: 1.0)
    op = lambda h: solve_min_bvp(spec, 0.0, 1.0, Grid1D.from_spacing(0.0, 1.0, h)).at(0.5)
    ref = solve_min_bvp(spec, 0.0, 1.0, Grid1D.from_spacing(0.0, 1.0, 1e-5)).at(0.5)
    study = grid_refine_study(op, [0.1, 0.05, 0.025, 0.0125], exact=ref)
    assert study.flagged and study.order is None


def test_refinement_needs_three_levels():
    with pytest.raises(ValueError):
        grid_refine_study(lambda h: h, [0.1, 0.05])
