"""Backward-Euler time stepping with Newton iterations, for transient and steady runs."""

from __future__ import annotations

import csv
import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sps
import scipy.sparse.linalg as spla

from .grid import Grid2D
from .spatial import SbpSatScheme

log = logging.getLogger(__name__)


class NewtonFailure(RuntimeError):
    """Newton did not converge (cap reached or divergence)."""

    def __init__(self, msg: str, update_norm: float = float("nan")):
        super().__init__(msg)
        self.update_norm = update_norm


class SingularJacobian(NewtonFailure):
    pass


@dataclass
class SolverConfig:
    dt: float = 0.01
    newton_tol: float = 1e-8
    newton_max_iters: int = 20
    steady_rel_tol: float = 1e-8
    max_steps: int = 10_000
    t_final: float | None = None
    initial_state: np.ndarray | None = None
    # False: identity block on the u rows only; True: identity on every row
    full_identity: bool = False
    # modified Newton: keep one factorisation across iterations and steps
    reuse_factorization: bool = False
    refactor_every: int = 50
    max_halvings: int = 5
    growth_limit: int = 3
    # steady runs: grow dt as dt0 * ||R_1|| / ||R_k|| (switched evolution relaxation)
    ser: bool = False
    dt_max: float = 1e3

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not (self.newton_tol > 0 and self.steady_rel_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.newton_max_iters < 1 or self.max_steps < 1 or self.refactor_every < 1:
            raise ValueError("iteration caps must be at least 1")
        if self.dt_max < self.dt:
            raise ValueError("dt_max must be at least dt")
        if self.t_final is not None and self.t_final < 0:
            raise ValueError("t_final must be non-negative")


@dataclass
class NewtonResult:
    U: np.ndarray
    iterations: int
    update_norm: float
    update_history: list[float] = field(default_factory=list)


@dataclass
class RunResult:
    U: np.ndarray
    t: float
    steps: int
    history: list[dict]
    converged: bool = True


class BackwardEuler:
    """Stateful stepper: holds the scheme, config and an optional cached factorisation."""

    def __init__(self, scheme: SbpSatScheme, cfg: SolverConfig):
        self.scheme = scheme
        self.cfg = cfg
        nm = scheme.nm
        mass = np.ones(3 * nm) if cfg.full_identity else np.r_[np.ones(nm), np.zeros(2 * nm)]
        self.mass = mass
        self._lu = None
        self._lu_dt = None
        self._lu_age = 0

    def _factor(self, U, t, dt):
        A = self.scheme.jacobian(U, t) + sps.diags(self.mass / dt)
        try:
            return spla.splu(A.tocsc())
        except RuntimeError as exc:
            raise SingularJacobian(f"singular Newton matrix: {exc}") from exc

    def _solver_for(self, U, t, dt, first: bool):
        cfg = self.cfg
        if not cfg.reuse_factorization:
            return self._factor(U, t, dt)
        stale = (self._lu is None or self._lu_dt != dt
                 or (first and self._lu_age >= cfg.refactor_every))
        if stale:
            self._lu, self._lu_dt, self._lu_age = self._factor(U, t, dt), dt, 0
        elif first:
            self._lu_age += 1
        return self._lu

    def newton_step(self, U_guess: np.ndarray, U_prev: np.ndarray, t_new: float, dt: float) -> NewtonResult:
        """Solve ``I_u (U - U_prev)/dt + R(U, t_new) = 0``.

        Stops when ``||dU||^2_P < newton_tol``.
        """
        cfg, sc = self.cfg, self.scheme
        U = np.array(U_guess, dtype=float)
        norms: list[float] = []
        growth = 0
        for it in range(1, cfg.newton_max_iters + 1):
            F = self.mass * (U - U_prev) / dt + sc.residual(U, t_new)
            lu = self._solver_for(U, t_new, dt, first=(it == 1))
            dU = -lu.solve(F)
            if not np.all(np.isfinite(dU)):
                raise NewtonFailure("non-finite Newton update", float("nan"))
            U += dU
            nrm = sc.p_norm_sq(dU)
            if norms and nrm > norms[-1]:
                growth += 1
                if growth >= cfg.growth_limit:
                    raise NewtonFailure("Newton update norm grew repeatedly", nrm)
            else:
                growth = 0
            norms.append(nrm)
            if nrm < cfg.newton_tol:
                return NewtonResult(U, it, nrm, norms)
            if cfg.reuse_factorization and len(norms) >= 2 and norms[-1] > 0.1 * norms[-2]:
                # slow linear convergence: refresh the frozen Jacobian
                self._lu = None
        raise NewtonFailure(f"Newton cap of {cfg.newton_max_iters} iterations reached", norms[-1])

    def advance(self, U: np.ndarray, t: float, dt: float, depth: int = 0) -> tuple[np.ndarray, int]:
        """One step of size dt; on Newton failure retry as two half steps."""
        try:
            res = self.newton_step(U, U, t + dt, dt)
            return res.U, res.iterations
        except NewtonFailure as exc:
            if depth >= self.cfg.max_halvings or isinstance(exc, SingularJacobian):
                raise
            log.warning("step at t=%.6g failed (%s); halving dt to %.3g", t, exc, dt / 2)
            self._lu = None
            U1, i1 = self.advance(U, t, dt / 2, depth + 1)
            U2, i2 = self.advance(U1, t + dt / 2, dt / 2, depth + 1)
            return U2, i1 + i2


def _record(scheme, U, t, step, iters=0):
    R = scheme.residual(U, t)
    return {"step": step, "t": t, "residual_P_norm": scheme.p_norm_sq(R),
            "energy": scheme.energy(U), "newton_iterations": iters}


def newton_step(U_guess, U_prev, cfg: SolverConfig, scheme: SbpSatScheme, t_new: float) -> NewtonResult:
    return BackwardEuler(scheme, cfg).newton_step(U_guess, U_prev, t_new, cfg.dt)


def run_transient(cfg: SolverConfig, scheme: SbpSatScheme, record_residual: bool = False,
                  callback=None) -> RunResult:
    """Advance from ``cfg.initial_state`` at t=0 to ``cfg.t_final``.

    Boundary data are evaluated at the new time level. The history holds the
    energy ``||u||_P^2`` after every accepted step.
    """
    if cfg.t_final is None:
        raise ValueError("run_transient needs t_final")
    if cfg.initial_state is None:
        raise ValueError("run_transient needs an initial_state")
    U = np.array(cfg.initial_state, dtype=float)
    stepper = BackwardEuler(scheme, cfg)
    n_steps = int(round(cfg.t_final / cfg.dt))
    if not np.isclose(n_steps * cfg.dt, cfg.t_final, rtol=1e-12, atol=1e-14):
        n_steps = int(np.ceil(cfg.t_final / cfg.dt))
    t = 0.0
    history = [{"step": 0, "t": 0.0, "energy": scheme.energy(U), "newton_iterations": 0}]
    for k in range(1, n_steps + 1):
        dt = min(cfg.dt, cfg.t_final - t) if k == n_steps else cfg.dt
        U, iters = stepper.advance(U, t, dt)
        t = cfg.t_final if k == n_steps else t + dt
        row = {"step": k, "t": t, "energy": scheme.energy(U), "newton_iterations": iters}
        if record_residual:
            row["residual_P_norm"] = scheme.p_norm_sq(scheme.residual(U, t))
        history.append(row)
        if callback is not None:
            callback(k, t, U)
    return RunResult(U, t, n_steps, history)


def run_steady(cfg: SolverConfig, scheme: SbpSatScheme) -> RunResult:
    """Pseudo-time march until ``||R_k||^2_P <= steady_rel_tol * ||R_1||^2_P``.

    On reaching ``max_steps`` the last state is returned with ``converged=False``.
    """
    if cfg.initial_state is None:
        raise ValueError("run_steady needs an initial_state")
    U = np.array(cfg.initial_state, dtype=float)
    stepper = BackwardEuler(scheme, cfg)
    first = _record(scheme, U, 0.0, 0)
    history = [first]
    r1 = first["residual_P_norm"]
    if r1 <= np.finfo(float).tiny or r1 < 1e-28:
        return RunResult(U, 0.0, 0, history, True)
    t = 0.0
    dt = cfg.dt
    for k in range(1, cfg.max_steps + 1):
        U, iters = stepper.advance(U, t, dt)
        t += dt
        row = _record(scheme, U, 0.0, k, iters)
        row["t"] = t
        row["dt"] = dt
        history.append(row)
        if not np.isfinite(row["residual_P_norm"]):
            raise NewtonFailure("residual became non-finite")
        if row["residual_P_norm"] <= cfg.steady_rel_tol * r1:
            return RunResult(U, t, k, history, True)
        if cfg.ser:
            dt = min(cfg.dt_max, cfg.dt * np.sqrt(r1 / row["residual_P_norm"]))
    log.warning("steady run stopped at the step cap without meeting the tolerance")
    return RunResult(U, t, cfg.max_steps, history, False)


def initial_free_stream(scheme: SbpSatScheme, U_inf: float = 1.0) -> np.ndarray:
    """``u = U_inf``, ``v = p = 0``."""
    nm = scheme.nm
    return np.r_[np.full(nm, float(U_inf)), np.zeros(2 * nm)]


# I/O

def grid_hash(grid: Grid2D) -> str:
    h = hashlib.sha256()
    h.update(np.asarray([grid.N, grid.M], dtype=np.int64).tobytes())
    h.update(np.ascontiguousarray(grid.x_nodes, dtype=float).tobytes())
    h.update(np.ascontiguousarray(grid.y_nodes, dtype=float).tobytes())
    return h.hexdigest()


def write_checkpoint(path: str | Path, U: np.ndarray, grid: Grid2D, t: float, step: int) -> None:
    """Store the state in an ``.npz`` archive with a JSON metadata entry."""
    meta = {"N": grid.N, "M": grid.M, "t": float(t), "step": int(step),
            "grid_hash": grid_hash(grid), "layout": "[u; v; p], y-fastest"}
    with open(path, "wb") as fh:
        np.savez(fh, U=np.asarray(U, dtype=float), meta=np.array(json.dumps(meta)))


def read_checkpoint(path: str | Path, grid: Grid2D | None = None) -> tuple[np.ndarray, dict]:
    with np.load(path, allow_pickle=False) as z:
        U = z["U"].copy()
        meta = json.loads(str(z["meta"]))
    if grid is not None and meta["grid_hash"] != grid_hash(grid):
        raise ValueError("checkpoint was written on a different grid")
    return U, meta


def write_history_csv(path: str | Path, history: list[dict]) -> None:
    cols = ["step", "t", "residual_P_norm", "energy"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for row in history:
            w.writerow([row["step"]] + [
                f"{row[c]:.17e}" if row.get(c) is not None else "" for c in cols[1:]])
