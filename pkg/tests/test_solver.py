import numpy as np
import pytest

from ibl_sbp import BoundarySpec, SolverConfig, run_steady, run_transient
from ibl_sbp.solver import (BackwardEuler, NewtonFailure, grid_hash, initial_free_stream,
                            read_checkpoint, write_checkpoint, write_history_csv)

from conftest import make_scheme, zero_specs


def bump(sc, amp=0.5):
    X, Y = sc.grid.mesh()
    u = amp * np.exp(-30 * ((X - 0.5) ** 2 + (Y - 0.5) ** 2))
    return np.r_[u, np.zeros(2 * sc.nm)]


def plate_scheme(N=12, s=1, sigma=1.0):
    specs = {
        "south": BoundarySpec("south", "no_slip", (0.0, 0.0)),
        "north": BoundarySpec("north", "robin_neumann_top", (0.0, 0.0)),
        "west": BoundarySpec("west", "inflow_velocity", (1.0,), sigma=sigma),
        "east": BoundarySpec("east", "pressure_outlet", (0.0,)),
    }
    return make_scheme(N=N, s=s, beta=2.0, specs=specs, mu=0.05, domain=(0.0, 2.0, 0.0, 1.0))


@pytest.mark.parametrize("bad", [dict(dt=0.0), dict(newton_tol=-1.0), dict(max_steps=0),
                                 dict(dt=1.0, dt_max=0.5), dict(t_final=-1.0)])
def test_config_validation(bad):
    with pytest.raises(ValueError):
        SolverConfig(**bad)


def test_zero_state_stays_zero_with_homogeneous_data():
    sc = make_scheme(N=8, specs=zero_specs(alpha=1.0))
    res = run_transient(SolverConfig(dt=0.05, t_final=0.5, initial_state=np.zeros(sc.size)), sc)
    assert res.steps == 10 and res.t == pytest.approx(0.5)
    assert np.array_equal(res.U, np.zeros(sc.size))


def test_uniform_stream_is_returned_without_steps():
    specs = {
        "south": BoundarySpec("south", "no_slip", (1.0, 0.0)),
        "north": BoundarySpec("north", "robin_neumann_top", (0.0, 0.0)),
        "west": BoundarySpec("west", "inflow_velocity", (1.0,)),
        "east": BoundarySpec("east", "pressure_outlet", (0.0,)),
    }
    sc = make_scheme(N=8, specs=specs)
    res = run_steady(SolverConfig(initial_state=initial_free_stream(sc)), sc)
    assert res.converged and res.steps == 0


@pytest.mark.parametrize("alpha", [0.0, 1.0])
def test_energy_never_grows_without_data(alpha):
    sc = make_scheme(N=15, s=2, specs=zero_specs(alpha=alpha), mu=0.01)
    res = run_transient(SolverConfig(dt=0.02, t_final=0.4, initial_state=bump(sc)), sc)
    E = [h["energy"] for h in res.history]
    assert E[-1] < E[0]
    assert all(b <= a * (1 + 1e-12) for a, b in zip(E, E[1:]))


def test_newton_converges_superlinearly():
    sc = plate_scheme()
    U0 = initial_free_stream(sc)
    stepper = BackwardEuler(sc, SolverConfig(dt=0.05, newton_tol=1e-26))
    res = stepper.newton_step(U0, U0, 0.05, 0.05)
    n = res.update_history
    assert len(n) >= 3
    # squared norms: quadratic convergence halves the exponent each iteration
    ratios = [np.log(b) / np.log(a) for a, b in zip(n, n[1:]) if a < 1e-2 and b > 1e-28]
    assert ratios and min(ratios) > 1.5


def test_modified_newton_agrees_with_full_newton():
    sc = plate_scheme()
    U0 = initial_free_stream(sc)
    out = []
    for reuse in (False, True):
        cfg = SolverConfig(dt=0.05, t_final=0.5, newton_tol=1e-22, initial_state=U0,
                           reuse_factorization=reuse)
        out.append(run_transient(cfg, sc).U)
    assert np.allclose(out[0], out[1], atol=1e-9)


def test_steady_run_reaches_tolerance():
    sc = plate_scheme()
    cfg = SolverConfig(dt=0.05, steady_rel_tol=1e-12, ser=True, dt_max=1e4,
                       initial_state=initial_free_stream(sc))
    res = run_steady(cfg, sc)
    r = [h["residual_P_norm"] for h in res.history]
    assert res.converged and r[-1] <= 1e-12 * r[0]
    assert sc.p_norm_sq(sc.residual(res.U)) == pytest.approx(r[-1])
    dts = [h["dt"] for h in res.history[1:]]
    assert dts[0] == 0.05 and max(dts) > 0.05


def test_steady_run_reports_step_cap():
    sc = plate_scheme()
    cfg = SolverConfig(dt=0.01, max_steps=2, initial_state=initial_free_stream(sc))
    res = run_steady(cfg, sc)
    assert not res.converged and res.steps == 2


def test_newton_failure_after_halvings():
    sc = plate_scheme()
    U0 = initial_free_stream(sc)
    cfg = SolverConfig(dt=0.05, newton_max_iters=1, newton_tol=1e-30, max_halvings=1,
                       t_final=0.05, initial_state=U0)
    with pytest.raises(NewtonFailure):
        run_transient(cfg, sc)


def test_checkpoint_roundtrip(tmp_path):
    sc = make_scheme(N=6, beta=2.0)
    U = np.random.default_rng(0).standard_normal(sc.size)
    path = tmp_path / "c.npz"
    write_checkpoint(path, U, sc.grid, 1.25, 7)
    back, meta = read_checkpoint(path, sc.grid)
    assert np.array_equal(back, U)
    assert meta["t"] == 1.25 and meta["step"] == 7 and meta["grid_hash"] == grid_hash(sc.grid)
    other = make_scheme(N=6, beta=3.0)
    with pytest.raises(ValueError):
        read_checkpoint(path, other.grid)


def test_history_csv(tmp_path):
    sc = plate_scheme()
    cfg = SolverConfig(dt=0.05, max_steps=3, initial_state=initial_free_stream(sc))
    res = run_steady(cfg, sc)
    write_history_csv(tmp_path / "h.csv", res.history)
    lines = (tmp_path / "h.csv").read_text().splitlines()
    assert lines[0] == "step,t,residual_P_norm,energy"
    assert len(lines) == 1 + len(res.history)
    row = lines[1].split(",")
    assert float(row[2]) == res.history[0]["residual_P_norm"]
