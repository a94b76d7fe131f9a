"""Blasius flat-plate similarity solution and comparison against computed fields."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.interpolate import PchipInterpolator


def integrate(fpp0: float, eta_max: float = 10.0, step: float = 1e-3,
              store: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Classical RK4 for ``2 f''' + f f'' = 0`` from ``(0, 0, fpp0)``.

    Returns the grid ``eta`` and samples of shape ``(n, 3)`` holding ``(f, f', f'')``.
    With ``store=False`` only the final row is kept.
    """
    n = int(round(eta_max / step))
    h = eta_max / n
    h2, h6 = 0.5 * h, h / 6.0
    f, g, q = 0.0, 0.0, float(fpp0)
    rows = [(f, g, q)] if store else None
    for _ in range(n):
        # y = (f, f', f''), y' = (f', f'', -f f''/2)
        a1, b1, c1 = g, q, -0.5 * f * q
        f2, g2, q2 = f + h2 * a1, g + h2 * b1, q + h2 * c1
        a2, b2, c2 = g2, q2, -0.5 * f2 * q2
        f3, g3, q3 = f + h2 * a2, g + h2 * b2, q + h2 * c2
        a3, b3, c3 = g3, q3, -0.5 * f3 * q3
        f4, g4, q4 = f + h * a3, g + h * b3, q + h * c3
        a4, b4, c4 = g4, q4, -0.5 * f4 * q4
        f += h6 * (a1 + 2 * a2 + 2 * a3 + a4)
        g += h6 * (b1 + 2 * b2 + 2 * b3 + b4)
        q += h6 * (c1 + 2 * c2 + 2 * c3 + c4)
        if store:
            rows.append((f, g, q))
    if not store:
        return np.array([eta_max]), np.array([[f, g, q]])
    return np.linspace(0.0, eta_max, n + 1), np.array(rows)


def _miss(fpp0, eta_max, step):
    return integrate(fpp0, eta_max, step, store=False)[1][-1, 1] - 1.0


@dataclass(frozen=True)
class BlasiusTable:
    eta_max: float
    n_eta: int
    eta: np.ndarray
    f: np.ndarray
    fp: np.ndarray
    fpp: np.ndarray
    fpp0: float

    def __post_init__(self):
        object.__setattr__(self, "_fp_i", PchipInterpolator(self.eta, self.fp))
        object.__setattr__(self, "_f_i", PchipInterpolator(self.eta, self.f))

    def interp(self, eta):
        """``(f, f')`` at arbitrary ``eta >= 0``; beyond ``eta_max`` the asymptote is used."""
        eta = np.asarray(eta, dtype=float)
        inside = np.minimum(eta, self.eta_max)
        f = self._f_i(inside)
        fp = self._fp_i(inside)
        far = eta > self.eta_max
        f = np.where(far, self.f[-1] + (eta - self.eta_max), f)
        fp = np.where(far, 1.0, fp)
        return f, fp

    def export_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["eta", "f", "fp", "fpp"])
            for row in zip(self.eta, self.f, self.fp, self.fpp):
                w.writerow([f"{v:.17e}" for v in row])


def solve_blasius(eta_max: float = 10.0, step: float = 1e-3, shoot_tol: float = 1e-8,
                  bracket: tuple[float, float] = (0.1, 1.0), max_iter: int = 200) -> BlasiusTable:
    """Shoot on ``f''(0)`` until ``|f'(eta_max) - 1| <= shoot_tol``.

    A few bisection passes narrow the bracket before secant iterations.
    """
    if eta_max < 8:
        raise ValueError("eta_max must be at least 8")
    if not shoot_tol > 0:
        raise ValueError("shoot_tol must be positive")
    a, b = bracket
    fa, fb = _miss(a, eta_max, step), _miss(b, eta_max, step)
    if fa * fb > 0:
        raise RuntimeError(f"shooting bracket {bracket} does not enclose a root")
    for _ in range(3):
        m = 0.5 * (a + b)
        fm = _miss(m, eta_max, step)
        if fa * fm <= 0:
            b, fb = m, fm
        else:
            a, fa = m, fm
    x0, x1, f0, f1 = a, b, fa, fb
    for _ in range(max_iter):
        if abs(f1) <= shoot_tol:
            break
        x2 = x1 - f1 * (x1 - x0) / (f1 - f0)
        x0, f0 = x1, f1
        x1, f1 = x2, _miss(x2, eta_max, step)
    else:
        raise RuntimeError("shooting did not reach the tolerance")
    eta, Y = integrate(x1, eta_max, step)
    return BlasiusTable(eta_max, eta.size, eta, Y[:, 0], Y[:, 1], Y[:, 2], float(x1))


def _check_x(x):
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("similarity solution is undefined for x <= 0")
    return x


def eval_velocity(table: BlasiusTable, x, y, U_inf: float = 1.0, mu: float = 0.01, rho: float = 1.0):
    """Similarity velocities ``(u, v)`` at stations ``x > 0`` and heights ``y``."""
    x = _check_x(x)
    nu = mu / rho
    eta = np.asarray(y, dtype=float) * np.sqrt(U_inf / (nu * x))
    f, fp = table.interp(eta)
    u = U_inf * fp
    v = 0.5 * np.sqrt(nu * U_inf / x) * (eta * fp - f)
    return u, v


def wall_shear(table: BlasiusTable, x, U_inf: float = 1.0, mu: float = 0.01, rho: float = 1.0):
    """``mu U_inf sqrt(rho U_inf / (mu x)) f''(0)``."""
    x = _check_x(x)
    return mu * U_inf * np.sqrt(rho * U_inf / (mu * x)) * table.fpp0


@dataclass
class StationProfile:
    x_station: float
    column: int
    y: np.ndarray
    u_err_pct: np.ndarray
    v_err_pct: np.ndarray

    @property
    def max_u_err(self) -> float:
        return float(self.u_err_pct.max())

    @property
    def max_v_err(self) -> float:
        return float(self.v_err_pct.max())


def _pct(num, ref):
    scale = np.abs(ref).max()
    return 100.0 * np.abs(num - ref) / (scale if scale > 0 else 1.0)


def compare_field(u: np.ndarray, v: np.ndarray, grid, table: BlasiusTable, stations,
                  U_inf: float = 1.0, mu: float = 0.01, rho: float = 1.0) -> list[StationProfile]:
    """Percentage errors ``|u - u_B| / max|u_B| * 100`` on the grid column nearest each station."""
    stations = list(stations)
    if not stations:
        raise ValueError("empty station list")
    xs, ys = grid.x_nodes, grid.y_nodes
    U = np.asarray(u).reshape(grid.N, grid.M)
    V = np.asarray(v).reshape(grid.N, grid.M)
    out = []
    for xs_req in stations:
        if not xs[0] <= xs_req <= xs[-1]:
            raise ValueError(f"station {xs_req} outside the grid")
        i = int(np.argmin(np.abs(xs - xs_req)))
        ub, vb = eval_velocity(table, xs[i], ys, U_inf, mu, rho)
        out.append(StationProfile(float(xs[i]), i, ys.copy(), _pct(U[i], ub), _pct(V[i], vb)))
    return out


def write_profiles_csv(path: str | Path, profiles: list[StationProfile]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x_station", "y", "u_err_pct", "v_err_pct"])
        for pr in profiles:
            for y, eu, ev in zip(pr.y, pr.u_err_pct, pr.v_err_pct):
                w.writerow([f"{pr.x_station:.17e}", f"{y:.17e}", f"{eu:.17e}", f"{ev:.17e}"])


def blasius_state(grid, table: BlasiusTable, U_inf: float = 1.0, mu: float = 0.01, rho: float = 1.0,
                  x_min: float = 1e-12):
    """Similarity field ``(u, v)`` on the whole grid; columns with ``x <= 0`` use ``x_min``."""
    X, Y = grid.mesh()
    return eval_velocity(table, np.maximum(X, x_min), Y, U_inf, mu, rho)
