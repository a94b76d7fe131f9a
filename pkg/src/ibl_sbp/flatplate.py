"""Steady flat-plate boundary-layer runs compared against the similarity solution."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .blasius import BlasiusTable, compare_field, eval_velocity, solve_blasius, wall_shear
from .boundary import BoundarySpec
from .grid import build_grid, make_operators
from .solver import RunResult, SolverConfig, run_steady
from .spatial import SbpSatScheme, unpack

STATIONS = (3.0, 5.0, 7.0, 9.0)


@dataclass
class FlatPlateConfig:
    x0: float = 0.0
    x1: float = 10.0
    y0: float = 0.0
    y1: float = 4.0
    N: int = 80
    M: int = 80
    beta: float = 4.0
    s: int = 2
    mu: float = 0.01
    alpha: float = 0.0
    sigma: float = 0.0
    U_inf: float = 1.0
    p_inf: float = 0.0
    dt: float = 0.01
    steady_rel_tol: float = 1e-8
    newton_tol: float = 1e-8
    max_steps: int = 20_000
    ser: bool = False
    dt_max: float = 1e3

    @property
    def truncated(self) -> bool:
        return self.x0 > 0


@dataclass
class FlatPlateResult:
    cfg: FlatPlateConfig
    scheme: SbpSatScheme
    run: RunResult
    table: BlasiusTable

    @property
    def fields(self):
        return unpack(self.run.U, self.scheme.nm)

    def profiles(self, stations=STATIONS):
        u, v, _ = self.fields
        c = self.cfg
        return compare_field(u, v, self.scheme.grid, self.table, stations, c.U_inf, c.mu)

    def wall_shear(self):
        """``(x, computed, similarity)`` along the plate; the similarity value is nan at x <= 0."""
        x = self.scheme.grid.x_nodes
        tau = self.scheme.wall_shear(self.run.U)
        ref = np.full_like(x, np.nan)
        pos = x > 0
        ref[pos] = wall_shear(self.table, x[pos], self.cfg.U_inf, self.cfg.mu)
        return x, tau, ref


def flat_plate_scheme(cfg: FlatPlateConfig, table: BlasiusTable | None = None) -> SbpSatScheme:
    table = table or solve_blasius()
    grid = build_grid((cfg.x0, cfg.x1, cfg.y0, cfg.y1), cfg.N, cfg.M, beta=cfg.beta, s=cfg.s)
    ops = make_operators(grid, cfg.s)
    if cfg.truncated:
        u_in, _ = eval_velocity(table, cfg.x0, grid.y_nodes, cfg.U_inf, cfg.mu)
    else:
        u_in = np.full(cfg.M, cfg.U_inf)
    specs = {
        "south": BoundarySpec("south", "no_slip", (0.0, 0.0)),
        "north": BoundarySpec("north", "robin_neumann_top", (0.0, cfg.p_inf), alpha=cfg.alpha),
        "west": BoundarySpec("west", "inflow_velocity", (u_in,), sigma=cfg.sigma),
        "east": BoundarySpec("east", "pressure_outlet", (cfg.p_inf,)),
    }
    return SbpSatScheme(grid, ops, specs, cfg.mu)


def run_flat_plate(cfg: FlatPlateConfig, table: BlasiusTable | None = None) -> FlatPlateResult:
    """March ``u = U_inf, v = p = 0`` to steady state."""
    table = table or solve_blasius()
    sc = flat_plate_scheme(cfg, table)
    nm = sc.nm
    U1 = np.r_[np.full(nm, cfg.U_inf), np.zeros(2 * nm)]
    scfg = SolverConfig(dt=cfg.dt, newton_tol=cfg.newton_tol, steady_rel_tol=cfg.steady_rel_tol,
                        max_steps=cfg.max_steps, initial_state=U1,
                        ser=cfg.ser, dt_max=cfg.dt_max)
    return FlatPlateResult(cfg, sc, run_steady(scfg, sc), table)
