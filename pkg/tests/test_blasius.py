import time

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import solve_bvp

from ibl_sbp.blasius import (blasius_state, compare_field, eval_velocity, integrate, solve_blasius,
                             wall_shear, write_profiles_csv)
from ibl_sbp.grid import build_grid


def bvp_reference(eta_max=10.0):
    eta = np.linspace(0.0, eta_max, 400)
    guess = np.vstack([eta - 1 + np.exp(-eta), 1 - np.exp(-eta), np.exp(-eta)])
    sol = solve_bvp(lambda x, y: np.vstack([y[1], y[2], -0.5 * y[0] * y[2]]),
                    lambda a, b: np.array([a[0], a[1], b[1] - 1.0]), eta, guess, tol=1e-10,
                    max_nodes=100000)
    assert sol.success
    return sol


def test_wall_curvature_matches_collocation_solver(blasius_table):
    sol = bvp_reference()
    assert blasius_table.fpp0 == pytest.approx(sol.sol(0.0)[2], abs=1e-7)
    eta = np.linspace(0.0, 10.0, 41)
    assert np.allclose(blasius_table.interp(eta)[1], sol.sol(eta)[1], atol=1e-7)


def test_classical_constants(blasius_table):
    assert blasius_table.fpp0 == pytest.approx(0.332, abs=1e-3)
    # displacement constant: eta - f tends to about 1.7208
    assert blasius_table.eta[-1] - blasius_table.f[-1] == pytest.approx(1.7208, abs=1e-3)
    assert abs(blasius_table.fp[-1] - 1.0) <= 1e-8


def test_step_halving_and_speed():
    t0 = time.perf_counter()
    coarse = solve_blasius(step=1e-3)
    elapsed = time.perf_counter() - t0
    fine = solve_blasius(step=5e-4)
    assert abs(coarse.fpp0 - fine.fpp0) <= 1e-6
    assert elapsed < 1.0


def test_integrator_is_fourth_order():
    ref = integrate(0.33, 2.0, 1e-3, store=False)[1][-1]
    e1 = np.abs(integrate(0.33, 2.0, 0.2, store=False)[1][-1] - ref).max()
    e2 = np.abs(integrate(0.33, 2.0, 0.1, store=False)[1][-1] - ref).max()
    assert np.log2(e1 / e2) == pytest.approx(4.0, abs=0.3)


def test_velocity_at_wall_and_far_field(blasius_table):
    u, v = eval_velocity(blasius_table, 2.0, 0.0)
    assert u == 0.0 and v == 0.0
    u, v = eval_velocity(blasius_table, 2.0, 50.0, U_inf=1.5, mu=0.01)
    assert u == pytest.approx(1.5)
    assert v == pytest.approx(0.5 * np.sqrt(0.01 * 1.5 / 2.0) * 1.7208, rel=1e-3)


_TABLE = solve_blasius()


@given(x=st.floats(0.1, 50.0), k=st.floats(1.1, 9.0))
def test_wall_shear_scales_like_inverse_root_x(x, k):
    t1, t2 = wall_shear(_TABLE, x), wall_shear(_TABLE, k * x)
    assert t1 / t2 == pytest.approx(np.sqrt(k), rel=1e-12)


@pytest.mark.parametrize("x", [0.0, -1.0])
def test_rejects_leading_edge_and_upstream(blasius_table, x):
    with pytest.raises(ValueError):
        eval_velocity(blasius_table, x, 0.5)
    with pytest.raises(ValueError):
        wall_shear(blasius_table, x)


@pytest.mark.parametrize("kw", [dict(eta_max=5.0), dict(shoot_tol=0.0)])
def test_solver_arguments(kw):
    with pytest.raises(ValueError):
        solve_blasius(**kw)


def test_bad_bracket():
    with pytest.raises(RuntimeError):
        solve_blasius(bracket=(0.5, 1.0))


def test_self_comparison_is_exact(blasius_table, tmp_path):
    grid = build_grid((1.0, 10.0, 0.0, 4.0), 20, 30, beta=3.0)
    u, v = blasius_state(grid, blasius_table)
    prof = compare_field(u, v, grid, blasius_table, [3.0, 9.0])
    assert all(p.max_u_err == 0.0 and p.max_v_err == 0.0 for p in prof)
    assert abs(prof[0].x_station - 3.0) <= np.diff(grid.x_nodes).max()
    with pytest.raises(ValueError):
        compare_field(u, v, grid, blasius_table, [12.0])
    write_profiles_csv(tmp_path / "p.csv", prof)
    assert len((tmp_path / "p.csv").read_text().splitlines()) == 1 + 2 * 30


def test_export_table(blasius_table, tmp_path):
    blasius_table.export_csv(tmp_path / "b.csv")
    data = np.loadtxt(tmp_path / "b.csv", delimiter=",", skiprows=1)
    assert data.shape == (blasius_table.n_eta, 4)
    assert np.array_equal(data[:, 2], blasius_table.fp)
