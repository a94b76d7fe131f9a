"""Weak boundary conditions (SAT) and characteristic boundary diagnostics.

Conditions per side, written as ``B_k U = G_k``:

    south   no_slip             u = g_u,  v = g_v
    north   robin_neumann_top   alpha/2 v u - mu u_y = g,  p = g_p
    west    inflow_velocity     u = g_u
    east    pressure_outlet     p = g_p

``alpha = 1`` gives the Robin condition, ``alpha = 0`` the Neumann one.
"""

from __future__ import annotations

import csv
import logging
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .grid import SIDES, BoundaryGeometry, Grid2D, Operators

log = logging.getLogger(__name__)

KINDS = {
    "south": "no_slip",
    "east": "pressure_outlet",
    "north": "robin_neumann_top",
    "west": "inflow_velocity",
}
N_CONDITIONS = {"south": 2, "north": 2, "east": 1, "west": 1}

ADMISSIBILITY_TOL = 1e-12

DataLike = Sequence[np.ndarray] | Callable[[float], Sequence[np.ndarray]]


@dataclass
class BoundarySpec:
    """Condition kind and data on one side.

    ``data`` holds one array per imposed condition, sampled at the side's
    nodes in increasing index order, or a callable ``t -> arrays`` for
    time-dependent data. Scalars are broadcast.
    """

    side: str
    kind: str
    data: DataLike = ()
    alpha: float = 0.0
    # extra west penalty sigma |g| (u - g); it vanishes for homogeneous data
    sigma: float = 0.0

    def __post_init__(self):
        if self.side not in SIDES:
            raise ValueError(f"unknown side {self.side!r}")
        if KINDS[self.side] != self.kind:
            raise ValueError(
                f"side {self.side} takes kind {KINDS[self.side]!r}, got {self.kind!r}"
            )
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        if self.sigma < 0:
            raise ValueError("sigma must be non-negative")
        if self.sigma and self.side != "west":
            raise ValueError("sigma only applies to the west side")

    @property
    def n_conditions(self) -> int:
        return N_CONDITIONS[self.side]

    def values(self, t: float, n_nodes: int) -> list[np.ndarray]:
        raw = self.data(t) if callable(self.data) else self.data
        raw = list(raw)
        if not raw:
            raw = [0.0] * self.n_conditions
        if len(raw) != self.n_conditions:
            raise ValueError(
                f"{self.side}: expected {self.n_conditions} data arrays, got {len(raw)}"
            )
        out = []
        for g in raw:
            g = np.broadcast_to(np.asarray(g, dtype=float), (n_nodes,))
            out.append(g)
        return out


def default_specs(U_inf: float = 1.0, p_inf: float = 0.0, alpha: float = 0.0,
                  inflow: DataLike | None = None) -> dict[str, BoundarySpec]:
    """Flat-plate conditions: wall at south, free stream elsewhere."""
    return {
        "south": BoundarySpec("south", "no_slip", (0.0, 0.0)),
        "east": BoundarySpec("east", "pressure_outlet", (p_inf,)),
        "north": BoundarySpec("north", "robin_neumann_top", (0.0, p_inf), alpha=alpha),
        "west": BoundarySpec("west", "inflow_velocity", inflow if inflow is not None else (U_inf,)),
    }


# characteristic analysis


@dataclass
class CharacteristicSet:
    side: str
    lambdas: tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]
    W_plus: list[np.ndarray] = field(default_factory=list)
    W_minus: list[np.ndarray] = field(default_factory=list)
    Lambda_plus: list[np.ndarray] = field(default_factory=list)
    Lambda_minus: list[np.ndarray] = field(default_factory=list)
    S: np.ndarray | None = None


def characteristic_eigs(u_n, side: str) -> CharacteristicSet:
    """Pointwise eigenvalues of the boundary matrix for normal velocity ``u_n``."""
    u_n = np.asarray(u_n, dtype=float)
    r = np.sqrt((u_n / 2) ** 2 + 1.0)
    lam1 = u_n / 2 - r
    lam4 = u_n / 2 + r
    if side in ("north", "south"):
        lam2, lam3 = -np.ones_like(u_n), np.ones_like(u_n)
    elif side in ("east", "west"):
        lam2, lam3 = np.zeros_like(u_n), np.zeros_like(u_n)
    else:
        raise ValueError(f"unknown side {side!r}")
    return CharacteristicSet(side, (lam1, lam2, lam3, lam4))


def scaled_weights(cs: CharacteristicSet) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Diagonals of Lambda_plus and Lambda_minus (scaling lambda^2 + 1)."""
    lam1, lam2, lam3, lam4 = cs.lambdas
    w1 = lam1 / (lam1**2 + 1)
    w4 = lam4 / (lam4**2 + 1)
    if cs.side in ("north", "south"):
        return [lam3 / 2, w4], [w1, lam2 / 2]
    return [w4], [w1]


def coupling_matrix(side: str, cs: CharacteristicSet) -> np.ndarray:
    """The side's S with W_- = S W_+ + g, shaped (n_nodes, k, k)."""
    n = cs.lambdas[0].size
    if side == "south":
        S = np.array([[0.0, 1.0], [-1.0, 0.0]])
    elif side == "north":
        S = np.array([[0.0, 0.0], [1.0, 0.0]])
    elif side == "west":
        S = np.array([[1.0]])
    elif side == "east":
        return (cs.lambdas[0] / cs.lambdas[3]).reshape(n, 1, 1)
    else:
        raise ValueError(f"unknown side {side!r}")
    return np.broadcast_to(S, (n,) + S.shape).copy()


def check_admissibility(S: np.ndarray, Lambda_plus, Lambda_minus, side: str) -> np.ndarray:
    """Per-node smallest eigenvalue of ``Lambda_+ + S^T Lambda_- S``."""
    Lp = np.stack([np.asarray(a, float) for a in Lambda_plus], axis=-1)
    Lm = np.stack([np.asarray(a, float) for a in Lambda_minus], axis=-1)
    n, k = Lp.shape
    S = np.broadcast_to(np.asarray(S, float), (n, k, k))
    A = np.zeros((n, k, k))
    idx = np.arange(k)
    A[:, idx, idx] = Lp
    A += np.einsum("nji,nj,njk->nik", S, Lm, S)
    return np.linalg.eigvalsh(A)[:, 0]


def admissibility(u_n, side: str) -> np.ndarray:
    """Admissibility check for the side's prescribed S at normal velocities ``u_n``."""
    cs = characteristic_eigs(u_n, side)
    lp, lm = scaled_weights(cs)
    return check_admissibility(coupling_matrix(side, cs), lp, lm, side)


def normal_velocity(u: np.ndarray, v: np.ndarray, geom: BoundaryGeometry) -> np.ndarray:
    idx = geom.node_indices
    return geom.Nx[idx] * u[idx] + geom.Ny[idx] * v[idx]


def characteristic_variables(U: np.ndarray, dyU: np.ndarray, geom: BoundaryGeometry,
                             mu: float) -> CharacteristicSet:
    """Characteristic variables W+ and W- at the nodes of one side.

    ``U`` is the packed state ``[u; v; p]`` and ``dyU`` the y-derivative of u.
    """
    nm = geom.Nx.size
    u, v, p = U[:nm], U[nm:2 * nm], U[2 * nm:]
    idx = geom.node_indices
    cs = characteristic_eigs(normal_velocity(u, v, geom), geom.side)
    lam1, _, _, lam4 = cs.lambdas
    ub, vb, pb, uy = u[idx], v[idx], p[idx], np.asarray(dyU)[idx]
    if geom.side in ("north", "south"):
        ny = geom.Ny[idx]
        cs.W_plus = [vb + ny * pb, lam4 * ub - mu * ny * uy]
        cs.W_minus = [lam1 * ub - mu * ny * uy, vb - ny * pb]
    else:
        nx = geom.Nx[idx]
        cs.W_plus = [lam4 * ub + nx * pb]
        cs.W_minus = [lam1 * ub + nx * pb]
    cs.Lambda_plus, cs.Lambda_minus = scaled_weights(cs)
    cs.S = coupling_matrix(geom.side, cs)
    return cs


def flow_direction_violations(U: np.ndarray, geoms: dict[str, BoundaryGeometry],
                              tol: float = 1e-12) -> dict[str, int]:
    """Count nodes violating outflow at north/east and inflow at south/west."""
    nm = next(iter(geoms.values())).Nx.size
    u, v = U[:nm], U[nm:2 * nm]
    out = {}
    for side, g in geoms.items():
        un = normal_velocity(u, v, g)
        bad = un <= tol if side in ("north", "east") else un > tol
        out[side] = int(np.count_nonzero(bad))
    return out


def write_diagnostics_csv(path: str | Path, U: np.ndarray, dyU: np.ndarray,
                          grid: Grid2D, geoms: dict[str, BoundaryGeometry], mu: float) -> None:
    """Per-node eigenvalues, characteristic variables and admissibility."""
    X, Y = grid.mesh()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["side", "node", "x", "y", "lambda1", "lambda2", "lambda3", "lambda4",
                     "W_plus_1", "W_plus_2", "W_minus_1", "W_minus_2", "admissibility_min_eig"])
        for side, g in geoms.items():
            cs = characteristic_variables(U, dyU, g, mu)
            adm = check_admissibility(cs.S, cs.Lambda_plus, cs.Lambda_minus, side)
            for k, node in enumerate(g.node_indices):
                wp = [c[k] for c in cs.W_plus] + [np.nan] * (2 - len(cs.W_plus))
                wm = [c[k] for c in cs.W_minus] + [np.nan] * (2 - len(cs.W_minus))
                row = [side, int(node), X[node], Y[node]]
                row += [lam[k] for lam in cs.lambdas] + wp + wm + [adm[k]]
                w.writerow([f"{r:.17e}" if isinstance(r, float) else r for r in row])


# SAT terms


def scatter(grid_size: int, idx: np.ndarray, vals: np.ndarray) -> np.ndarray:
    g = np.zeros(grid_size)
    g[idx] = vals
    return g


def sat_contribution(U: np.ndarray, spec: BoundarySpec, geom: BoundaryGeometry,
                     ops: Operators, mu: float, t: float = 0.0) -> np.ndarray:
    """Penalty term ``P^-1 Sigma_k (I_j x P_k)(B_k U - G_k)`` of one side.

    The result is the term added on the right-hand side of the
    semi-discretisation; it vanishes when ``B_k U = G_k`` holds exactly.
    """
    if spec.side != geom.side:
        raise ValueError(f"spec side {spec.side} does not match geometry side {geom.side}")
    nm = geom.Nx.size
    if U.shape != (3 * nm,):
        raise ValueError(f"state length {U.shape} does not match 3*N*M={3 * nm}")
    idx = geom.node_indices
    G = [scatter(nm, idx, g) for g in spec.values(t, idx.size)]
    u, v, p = U[:nm], U[nm:2 * nm], U[2 * nm:]
    Pinv = 1.0 / ops.P.diagonal()
    bq = geom.quadrature
    out = np.zeros(3 * nm)
    side = spec.side
    if side == "north":
        r1 = 0.5 * spec.alpha * v * u - mu * ops.Dy.apply(u) - G[0]
        r2 = p - G[1]
        out[:nm] = Pinv * bq * r1
        out[nm:2 * nm] = Pinv * bq * r2
    elif side == "south":
        r1 = bq * (u - G[0])
        r2 = bq * (v - G[1])
        out[:nm] = Pinv * (-0.5 * v * r1 + mu * ops.Dy.apply_transpose(r1))
        out[2 * nm:] = -Pinv * r2
    elif side == "west":
        r = bq * (u - G[0])
        out[:nm] = -Pinv * (0.5 * u + spec.sigma * np.abs(G[0])) * r
        out[2 * nm:] = -Pinv * r
    else:
        out[:nm] = Pinv * bq * (p - G[0])
    return out
