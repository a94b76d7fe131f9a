"""Skew-symmetric SBP-SAT spatial residual of the boundary-layer equations.

The semi-discrete system is ``I_u U_t + R(U) = 0`` with ``U = [u; v; p]``,

    R(U) = 1/2 [A Dx + Dx A + B Dy + Dy B] U - mu I_u Dy Dy U - sum_k SAT_k(U),

``A = [[u, 0, 1], [0, 0, 0], [1, 0, 0]]``, ``B = [[v, 0, 0], [0, 0, 1], [0, 1, 0]]``
and ``I_u`` selecting the u block. Density is fixed to one.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sps

from .boundary import BoundarySpec, sat_contribution, scatter
from .grid import SIDES, BoundaryGeometry, Grid2D, Operators, boundary_geometry


def pack(u, v, p) -> np.ndarray:
    return np.concatenate([np.ravel(u), np.ravel(v), np.ravel(p)]).astype(float)


def unpack(U: np.ndarray, nm: int | None = None):
    """Views ``(u, v, p)`` into a packed state."""
    nm = U.size // 3 if nm is None else nm
    if U.size != 3 * nm:
        raise ValueError(f"state length {U.size} is not 3*N*M={3 * nm}")
    return U[:nm], U[nm:2 * nm], U[2 * nm:]


@dataclass
class StateVector:
    """Packed ``[u; v; p]`` state on an ``N x M`` grid (y-fastest blocks)."""

    N: int
    M: int
    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float)
        if self.data.shape != (3 * self.N * self.M,):
            raise ValueError(f"expected length {3 * self.N * self.M}, got {self.data.shape}")

    @classmethod
    def from_fields(cls, N: int, M: int, u, v, p) -> "StateVector":
        return cls(N, M, pack(u, v, p))

    @property
    def u(self) -> np.ndarray:
        return unpack(self.data)[0]

    @property
    def v(self) -> np.ndarray:
        return unpack(self.data)[1]

    @property
    def p(self) -> np.ndarray:
        return unpack(self.data)[2]


@dataclass
class SbpSatScheme:
    """Spatial discretisation on one grid: operators, boundary specs and viscosity."""

    grid: Grid2D
    ops: Operators
    specs: dict[str, BoundarySpec]
    mu: float
    geoms: dict[str, BoundaryGeometry] = field(init=False, repr=False)

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError("viscosity mu must be positive")
        missing = set(SIDES) - set(self.specs)
        if missing:
            raise ValueError(f"missing boundary specs for {sorted(missing)}")
        self.geoms = {s: boundary_geometry(self.grid, s, self.ops) for s in SIDES}
        self.nm = self.grid.size
        self.Pd = self.ops.P.diagonal()
        self.Pinv = 1.0 / self.Pd
        self.bq = {s: g.quadrature for s, g in self.geoms.items()}
        self.Dx_m = self.ops.Dx.matrix()
        self.Dy_m = self.ops.Dy.matrix()
        self.Dyy_m = self.ops.Dyy.matrix()
        self._static = all(not callable(sp.data) for sp in self.specs.values())
        self._data_cache = None

    @property
    def alpha(self) -> float:
        return self.specs["north"].alpha

    @property
    def sigma(self) -> float:
        return self.specs["west"].sigma

    @property
    def size(self) -> int:
        return 3 * self.nm

    def with_specs(self, specs: dict[str, BoundarySpec]) -> "SbpSatScheme":
        return SbpSatScheme(self.grid, self.ops, specs, self.mu)

    def boundary_data(self, t: float = 0.0) -> dict[str, list[np.ndarray]]:
        """Boundary data scattered into full node vectors."""
        if self._static and self._data_cache is not None:
            return self._data_cache
        out = {}
        for side, spec in self.specs.items():
            idx = self.geoms[side].node_indices
            out[side] = [scatter(self.nm, idx, g) for g in spec.values(t, idx.size)]
        if self._static:
            self._data_cache = out
        return out

    def _zero_data(self):
        return {s: [np.zeros(self.nm)] * sp.n_conditions for s, sp in self.specs.items()}

    # residual

    def interior(self, U: np.ndarray) -> np.ndarray:
        """``D(U) U`` without boundary terms."""
        u, v, p = unpack(U, self.nm)
        Dx, Dy = self.ops.Dx.apply, self.ops.Dy.apply
        dyu = Dy(u)
        Ru = 0.5 * (u * Dx(u) + Dx(u * u) + v * dyu + Dy(v * u)) + Dx(p) - self.mu * Dy(dyu)
        return np.concatenate([Ru, Dy(p), Dx(u) + Dy(v)])

    def residual(self, U: np.ndarray, t: float = 0.0, homogeneous: bool = False) -> np.ndarray:
        """Full residual ``R(U) = D(U) U - sum of SAT terms``."""
        U = np.asarray(U, dtype=float)
        if U.shape != (self.size,):
            raise ValueError(f"state length {U.shape} does not match 3*N*M={self.size}")
        nm, mu, Pinv, bq = self.nm, self.mu, self.Pinv, self.bq
        u, v, p = unpack(U, nm)
        G = self._zero_data() if homogeneous else self.boundary_data(t)
        Dx, Dy = self.ops.Dx.apply, self.ops.Dy.apply
        dyu = Dy(u)
        Ru = 0.5 * (u * Dx(u) + Dx(u * u) + v * dyu + Dy(v * u)) + Dx(p) - mu * Dy(dyu)
        Rv = Dy(p)
        Rp = Dx(u) + Dy(v)
        # north: Robin/Neumann on u, Dirichlet on p
        gn = G["north"]
        Ru -= Pinv * bq["north"] * (0.5 * self.alpha * v * u - mu * dyu - gn[0])
        Rv -= Pinv * bq["north"] * (p - gn[1])
        # south: no-slip, penalty carries the transposed derivative
        gs = G["south"]
        r1 = bq["south"] * (u - gs[0])
        Ru -= Pinv * (-0.5 * v * r1 + mu * self.ops.Dy.apply_transpose(r1))
        Rp += Pinv * bq["south"] * (v - gs[1])
        # west: inflow velocity
        gw = G["west"][0]
        rw = bq["west"] * (u - gw)
        Ru += Pinv * (0.5 * u + self.sigma * np.abs(gw)) * rw
        Rp += Pinv * rw
        # east: outlet pressure
        Ru -= Pinv * bq["east"] * (p - G["east"][0])
        return np.concatenate([Ru, Rv, Rp])

    def residual_by_sides(self, U: np.ndarray, t: float = 0.0) -> np.ndarray:
        """Same residual assembled from the per-side SAT routine (cross-check path)."""
        R = self.interior(U)
        for side in SIDES:
            R -= sat_contribution(U, self.specs[side], self.geoms[side], self.ops, self.mu, t)
        return R

    # Jacobians

    def jacobian(self, U: np.ndarray, t: float = 0.0) -> sps.csr_matrix:
        """Analytic Jacobian ``dR/dU`` of :meth:`residual`."""
        nm, mu, a = self.nm, self.mu, self.alpha
        u, v, _ = unpack(np.asarray(U, dtype=float), nm)
        G = self.boundary_data(t)
        Dx, Dy, Dyy = self.Dx_m, self.Dy_m, self.Dyy_m
        d = sps.diags
        Pinv = self.Pinv
        bn, bs, be, bw = (self.bq[k] for k in ("north", "south", "east", "west"))

        Juu = (0.5 * d(Dx @ u) + 0.5 * d(u) @ Dx + Dx @ d(u)
               + 0.5 * d(v) @ Dy + 0.5 * Dy @ d(v) - mu * Dyy
               - d(Pinv * bn) @ (0.5 * a * d(v) - mu * Dy)
               + 0.5 * d(Pinv * v * bs) - mu * d(Pinv) @ Dy.T @ d(bs)
               + 0.5 * d(Pinv * bw * (2.0 * u - G["west"][0]))
               + self.sigma * d(Pinv * bw * np.abs(G["west"][0])))
        Juv = (0.5 * d(Dy @ u) + 0.5 * Dy @ d(u)
               - 0.5 * a * d(Pinv * bn * u)
               + 0.5 * d(Pinv * bs * (u - G["south"][0])))
        Jup = Dx - d(Pinv * be)
        Jvp = Dy - d(Pinv * bn)
        Jpu = Dx + d(Pinv * bw)
        Jpv = Dy + d(Pinv * bs)
        return sps.bmat([[Juu, Juv, Jup],
                         [None, None, Jvp],
                         [Jpu, Jpv, None]], format="csr")

    def frozen_operator(self, U0: np.ndarray, include_bcs: bool = True) -> sps.csr_matrix:
        """Linear operator ``D(U0)`` with coefficients frozen at ``U0``.

        With homogeneous data ``frozen_operator(U0) @ U0 == residual(U0)``.
        """
        nm, mu, a = self.nm, self.mu, self.alpha
        u0, v0, _ = unpack(np.asarray(U0, dtype=float), nm)
        Dx, Dy, Dyy = self.Dx_m, self.Dy_m, self.Dyy_m
        d = sps.diags
        Auu = 0.5 * (d(u0) @ Dx + Dx @ d(u0) + d(v0) @ Dy + Dy @ d(v0)) - mu * Dyy
        Aup, Avp, Apu, Apv = Dx, Dy, Dx, Dy
        if include_bcs:
            Pinv = self.Pinv
            bn, bs, be, bw = (self.bq[k] for k in ("north", "south", "east", "west"))
            Auu = (Auu - d(Pinv * bn) @ (0.5 * a * d(v0) - mu * Dy)
                   + 0.5 * d(Pinv * v0 * bs) - mu * d(Pinv) @ Dy.T @ d(bs)
                   + d(Pinv * bw * (0.5 * u0 + self.sigma * np.abs(self.boundary_data()["west"][0]))))
            Aup = Dx - d(Pinv * be)
            Avp = Dy - d(Pinv * bn)
            Apu = Dx + d(Pinv * bw)
            Apv = Dy + d(Pinv * bs)
        Z = sps.csr_matrix((nm, nm))
        return sps.bmat([[Auu, Z, Aup], [Z, Z, Avp], [Apu, Apv, Z]], format="csr")

    # norms and energy

    def p_norm_sq(self, V: np.ndarray) -> float:
        """``V^T (I_3 x P) V``."""
        V = np.asarray(V).reshape(-1, self.nm)
        return float(np.sum(V * V * self.Pd))

    def energy(self, U: np.ndarray) -> float:
        """``||U||^2_{I_u P}``: the P-weighted square of the u block."""
        u = unpack(U, self.nm)[0]
        return float(u @ (self.Pd * u))

    def energy_rate(self, U: np.ndarray, dUdt: np.ndarray | None = None) -> tuple[float, float]:
        """Both sides of the discrete energy balance under homogeneous data.

        ``lhs = d/dt ||u||_P^2 + 2 mu ||Dy u||_P^2`` where the time derivative is
        ``-R_u(U)`` unless ``dUdt`` is given; the algebraic rows contribute
        ``-2 v^T P R_v - 2 p^T P R_p`` (zero on solutions).
        ``rhs = -(1 - alpha) u^T P_n diag(v) u - u^T P_e diag(u) u``.
        """
        nm = self.nm
        u, v, p = unpack(np.asarray(U, dtype=float), nm)
        R = self.residual(U, homogeneous=True)
        Ru, Rv, Rp = unpack(R, nm)
        ut = -Ru if dUdt is None else unpack(np.asarray(dUdt), nm)[0]
        dyu = self.ops.Dy.apply(u)
        P = self.Pd
        lhs = (2 * u @ (P * ut) - 2 * v @ (P * Rv) - 2 * p @ (P * Rp)
               + 2 * self.mu * dyu @ (P * dyu))
        rhs = (-(1 - self.alpha) * u @ (self.bq["north"] * v * u)
               - u @ (self.bq["east"] * u * u))
        return float(lhs), float(rhs)

    def wall_shear(self, U: np.ndarray) -> np.ndarray:
        """``mu * Dy u`` at the south nodes."""
        u = unpack(np.asarray(U), self.nm)[0]
        return self.mu * self.ops.Dy.apply(u)[self.geoms["south"].node_indices]


def fd_jacobian(scheme: SbpSatScheme, U: np.ndarray, eps: float = 1e-6, t: float = 0.0) -> np.ndarray:
    """Dense central-difference Jacobian of the residual (small grids only)."""
    U = np.asarray(U, dtype=float)
    n = U.size
    J = np.empty((n, n))
    for k in range(n):
        e = np.zeros(n)
        e[k] = eps
        J[:, k] = (scheme.residual(U + e, t) - scheme.residual(U - e, t)) / (2 * eps)
    return J


def spatial_residual(U, scheme: SbpSatScheme, t: float = 0.0) -> np.ndarray:
    return scheme.residual(U, t)


def assemble_jacobian(U, scheme: SbpSatScheme, t: float = 0.0) -> sps.csr_matrix:
    return scheme.jacobian(U, t)


def energy_rate(U, scheme: SbpSatScheme, dUdt=None) -> tuple[float, float]:
    return scheme.energy_rate(U, dUdt)


def dump_coo(path: str | Path, A: sps.spmatrix | np.ndarray) -> None:
    """Write a matrix (or vector) as ``i j value`` lines."""
    if isinstance(A, np.ndarray) and A.ndim == 1:
        A = sps.csr_matrix(A[:, None])
    A = sps.coo_matrix(A)
    with open(path, "w") as fh:
        fh.write("# i j value\n")
        for i, j, val in zip(A.row, A.col, A.data):
            fh.write(f"{i} {j} {val:.17e}\n")
