"""Tensor-product grids with optional sinh stretching and their SBP operators.

Each direction is mapped from a computational coordinate in ``[0, 1]`` by

    x(xi) = x0 + (x1 - x0) * sinh(beta * xi) / sinh(beta),

which clusters nodes towards ``x0`` (the wall / leading edge). Metric terms
``dxi/dx`` come from the closed-form derivative of the map. The physical
operators are ``D = diag(dxi/dx) D_xi`` and ``P = P_xi * dx/dxi``, which
keeps ``P D = Q_xi`` and hence the SBP identity in physical coordinates.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sps

from .sbp import Operator2D, Sbp1D, build_sbp_1d, min_nodes

SIDES = ("south", "east", "north", "west")


@dataclass(frozen=True)
class Grid2D:
    N: int
    M: int
    x_nodes: np.ndarray = field(repr=False)
    y_nodes: np.ndarray = field(repr=False)
    domain: tuple[float, float, float, float]
    stretch_beta: tuple[float | None, float | None]
    metric_x: np.ndarray = field(repr=False)
    metric_y: np.ndarray = field(repr=False)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.N, self.M)

    @property
    def size(self) -> int:
        return self.N * self.M

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Flattened y-fastest node coordinates (X, Y)."""
        X, Y = np.meshgrid(self.x_nodes, self.y_nodes, indexing="ij")
        return X.ravel(), Y.ravel()

    def export_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["i", "j", "x", "y"])
            for i, x in enumerate(self.x_nodes):
                for j, y in enumerate(self.y_nodes):
                    w.writerow([i, j, f"{x:.17e}", f"{y:.17e}"])


def _map_1d(a: float, b: float, n: int, beta: float | None):
    xi = np.linspace(0.0, 1.0, n)
    L = b - a
    if beta is None:
        nodes = a + L * xi
        metric = np.full(n, 1.0 / L)
    else:
        if not beta > 0:
            raise ValueError("stretching factor beta must be positive")
        nodes = a + L * np.sinh(beta * xi) / np.sinh(beta)
        metric = np.sinh(beta) / (L * beta * np.cosh(beta * xi))
    # endpoints are pinned exactly to the domain corners
    nodes[0], nodes[-1] = a, b
    return nodes, metric


def build_grid(domain, N: int, M: int, beta=None, s: int = 1) -> Grid2D:
    """Build an ``N x M`` tensor grid on ``domain = (x0, x1, y0, y1)``.

    ``beta`` is either a scalar applied to both directions or a pair
    ``(beta_x, beta_y)``; ``None`` entries leave that direction uniform.
    """
    x0, x1, y0, y1 = map(float, domain)
    if not (x0 < x1 and y0 < y1):
        raise ValueError(f"degenerate domain {domain}")
    nmin = min_nodes(s)
    if N < nmin or M < nmin:
        raise ValueError(f"need N, M >= {nmin} for boundary order s={s}")
    bx, by = beta if isinstance(beta, (tuple, list)) else (beta, beta)
    xn, mx = _map_1d(x0, x1, N, bx)
    yn, my = _map_1d(y0, y1, M, by)
    return Grid2D(N, M, xn, yn, (x0, x1, y0, y1), (bx, by), mx, my)


def transform_1d(sbp: Sbp1D, metric: np.ndarray) -> Sbp1D:
    """Carry a computational-coordinate operator to physical coordinates."""
    P = sbp.P / metric
    D = sps.diags(metric) @ sbp.D
    return Sbp1D(n=sbp.n, h=sbp.h, s=sbp.s, P=P, Q=sbp.Q, D=sps.csr_matrix(D))


@dataclass(frozen=True)
class Operators:
    """Physical-coordinate operator set for one grid."""

    sbp_x: Sbp1D
    sbp_y: Sbp1D
    Dx: Operator2D
    Dy: Operator2D
    Dyy: Operator2D
    P: Operator2D
    bq: dict[str, Operator2D]

    @property
    def s(self) -> int:
        return self.sbp_x.s


def _direction(sbp: Sbp1D | int, n: int, lo: float, hi: float, beta, metric) -> Sbp1D:
    s = sbp if isinstance(sbp, int) else sbp.s
    if not isinstance(sbp, int) and sbp.n != n:
        raise ValueError(f"operator has {sbp.n} nodes, grid direction has {n}")
    if beta is None:
        h = (hi - lo) / (n - 1)
        if isinstance(sbp, Sbp1D) and sbp.h == h:
            return sbp
        return build_sbp_1d(n, s, h)
    return transform_1d(build_sbp_1d(n, s, 1.0 / (n - 1)), metric)


def transformed_operators(grid: Grid2D, sbp_x: Sbp1D | int, sbp_y: Sbp1D | int | None = None) -> Operators:
    """Physical 2D operators for ``grid``.

    Uniform directions use the plain operator with the physical spacing;
    stretched directions fold the metric into D and its inverse into P.
    """
    sbp_y = sbp_x if sbp_y is None else sbp_y
    x0, x1, y0, y1 = grid.domain
    ox = _direction(sbp_x, grid.N, x0, x1, grid.stretch_beta[0], grid.metric_x)
    oy = _direction(sbp_y, grid.M, y0, y1, grid.stretch_beta[1], grid.metric_y)
    N, M = grid.N, grid.M
    e1N, eNN = np.eye(N)[0], np.eye(N)[-1]
    e1M, eMM = np.eye(M)[0], np.eye(M)[-1]
    bq = {
        "south": Operator2D("bq_south", N, M, ox.P, e1M),
        "east": Operator2D("bq_east", N, M, eNN, oy.P),
        "north": Operator2D("bq_north", N, M, ox.P, eMM),
        "west": Operator2D("bq_west", N, M, e1N, oy.P),
    }
    return Operators(
        sbp_x=ox,
        sbp_y=oy,
        Dx=Operator2D("d_dx", N, M, ox.D, None),
        Dy=Operator2D("d_dy", N, M, None, oy.D),
        Dyy=Operator2D("d2_dy2", N, M, None, sps.csr_matrix(oy.D @ oy.D)),
        P=Operator2D("norm_P", N, M, ox.P, oy.P),
        bq=bq,
    )


def make_operators(grid: Grid2D, s: int) -> Operators:
    return transformed_operators(grid, s, s)


@dataclass(frozen=True)
class BoundaryGeometry:
    side: str
    quadrature: np.ndarray = field(repr=False)
    Nx: np.ndarray = field(repr=False)
    Ny: np.ndarray = field(repr=False)
    node_indices: np.ndarray = field(repr=False)


def side_indices(grid: Grid2D, side: str) -> np.ndarray:
    idx = np.arange(grid.size).reshape(grid.N, grid.M)
    return {
        "south": idx[:, 0],
        "east": idx[-1, :],
        "north": idx[:, -1],
        "west": idx[0, :],
    }[side].copy()


def boundary_geometry(grid: Grid2D, side: str, ops: Operators) -> BoundaryGeometry:
    """Boundary quadrature and discrete outward normals of one side."""
    if side not in SIDES:
        raise ValueError(f"unknown side {side!r}")
    idx = side_indices(grid, side)
    nx = np.zeros(grid.size)
    ny = np.zeros(grid.size)
    sign = {"south": -1.0, "east": 1.0, "north": 1.0, "west": -1.0}[side]
    if side in ("east", "west"):
        nx[idx] = sign
    else:
        ny[idx] = sign
    return BoundaryGeometry(side, ops.bq[side].diagonal(), nx, ny, idx)
