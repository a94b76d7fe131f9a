"""Diagonal-norm summation-by-parts first-derivative operators.

The three classical families SBP(2,1), SBP(4,2) and SBP(6,3) are provided.
An operator of family ``(2s, s)`` is ``2s``-order accurate in the interior and
``s``-order accurate in the boundary closure. ``D = P^{-1} Q`` where ``P`` is a
positive diagonal quadrature and ``Q + Q^T = diag(-1, 0, ..., 0, 1)``.

Two-dimensional operators are Kronecker products of 1D factors acting on
node vectors stored y-fastest, i.e. ``f[i * M + j] = f(x_i, y_j)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction as F
from pathlib import Path

import numpy as np
import scipy.sparse as sps

__all__ = [
    "Sbp1D",
    "Operator2D",
    "build_sbp_1d",
    "min_nodes",
    "apply_derivative",
    "quadrature_norm",
    "dump_sbp_matrices",
    "check_operator",
]

# Free parameter of the one-parameter SBP(6,3) family (the 5-6 entry of Q).
SBP63_Q56 = F(342523, 518400)


def _interior_stencil(s: int) -> list[F]:
    # coefficients a_k of sum_k a_k (u_{i+k} - u_{i-k}) / h
    return {
        1: [F(1, 2)],
        2: [F(2, 3), F(-1, 12)],
        3: [F(3, 4), F(-3, 20), F(1, 60)],
    }[s]


def _boundary_closure(s: int) -> tuple[list[F], dict[tuple[int, int], F]]:
    """Norm weights and upper-triangular skew entries of the left closure."""
    if s == 1:
        return [F(1, 2)], {}
    if s == 2:
        w = [F(17, 48), F(59, 48), F(43, 48), F(49, 48)]
        q = {
            (0, 1): F(59, 96), (0, 2): F(-1, 12), (0, 3): F(-1, 32),
            (1, 2): F(59, 96), (1, 3): F(0),
            (2, 3): F(59, 96),
        }
        return w, q
    if s == 3:
        t = SBP63_Q56
        w = [F(13649, 43200), F(12013, 8640), F(2711, 4320),
             F(5359, 4320), F(7877, 8640), F(43801, 43200)]
        q = {
            (0, 1): t - F(953, 16200),
            (0, 2): F(715489, 259200) - 4 * t,
            (0, 3): 6 * t - F(62639, 14400),
            (0, 4): F(147127, 51840) - 4 * t,
            (0, 5): t - F(89387, 129600),
            (1, 2): 10 * t - F(57139, 8640),
            (1, 3): F(745733, 51840) - 20 * t,
            (1, 4): 15 * t - F(18343, 1728),
            (1, 5): F(240569, 86400) - 4 * t,
            (2, 3): 20 * t - F(176839, 12960),
            (2, 4): F(242111, 17280) - 20 * t,
            (2, 5): 6 * t - F(182261, 43200),
            (3, 4): 10 * t - F(165041, 25920),
            (3, 5): F(710473, 259200) - 4 * t,
            (4, 5): t,
        }
        return w, q
    raise ValueError(f"unsupported boundary order s={s}; expected 1, 2 or 3")


def min_nodes(s: int) -> int:
    """Smallest node count hosting both boundary closures without overlap."""
    w, _ = _boundary_closure(s)
    return max(2 * len(w), 3)


@dataclass(frozen=True)
class Sbp1D:
    """One-dimensional SBP operator triple on ``n`` nodes with spacing ``h``."""

    n: int
    h: float
    s: int
    P: np.ndarray = field(repr=False)
    Q: sps.csr_matrix = field(repr=False)
    D: sps.csr_matrix = field(repr=False)

    @property
    def order(self) -> tuple[int, int]:
        return (2 * self.s, self.s)

    @property
    def closure_rows(self) -> int:
        return len(_boundary_closure(self.s)[0])


def _q_matrix(n: int, s: int) -> np.ndarray:
    a = [float(c) for c in _interior_stencil(s)]
    w, qup = _boundary_closure(s)
    r = len(w)
    Q = np.zeros((n, n))
    for i in range(n):
        for k, ak in enumerate(a, start=1):
            if i + k < n:
                Q[i, i + k] = ak
            if i - k >= 0:
                Q[i, i - k] = -ak
    # left closure: skew block plus the corner -1/2
    left = np.zeros((r, r))
    for (i, j), v in qup.items():
        left[i, j] = float(v)
        left[j, i] = -float(v)
    left[0, 0] = -0.5
    Q[:r, :r] = left
    # columns past the block are fixed by skew-symmetry with interior rows
    Q[:r, r:] = -Q[r:, :r].T
    # right closure mirrors the left one
    Q[n - r:, n - r:] = -left[::-1, ::-1]
    Q[n - r:, : n - r] = -Q[: n - r, n - r:].T
    return Q


def build_sbp_1d(n: int, s: int, h: float) -> Sbp1D:
    """Build the SBP(2s, s) first-derivative operator on ``n`` uniform nodes."""
    if s not in (1, 2, 3):
        raise ValueError(f"unsupported boundary order s={s}; expected 1, 2 or 3")
    if n < min_nodes(s):
        raise ValueError(f"SBP({2 * s},{s}) needs n >= {min_nodes(s)}, got n={n}")
    if not h > 0:
        raise ValueError("grid spacing h must be positive")

    w = np.array([float(c) for c in _boundary_closure(s)[0]])
    r = len(w)
    P = np.ones(n)
    P[:r] = w
    P[n - r:] = w[::-1]
    P *= h
    Q = _q_matrix(n, s)
    D = Q / P[:, None]
    return Sbp1D(n=n, h=h, s=s, P=P, Q=sps.csr_matrix(Q), D=sps.csr_matrix(D))


@dataclass(frozen=True)
class Operator2D:
    """Kronecker-structured operator ``fx (x) fy`` on y-fastest node vectors.

    ``fx`` acts along x (size N) and ``fy`` along y (size M); ``None`` stands
    for the identity. Diagonal kinds (``norm_P`` and boundary quadratures)
    store 1D weight vectors instead of matrices.
    """

    kind: str
    N: int
    M: int
    fx: sps.spmatrix | np.ndarray | None = None
    fy: sps.spmatrix | np.ndarray | None = None

    @property
    def is_diagonal(self) -> bool:
        return self.kind in ("norm_P", "bq_south", "bq_east", "bq_north", "bq_west")

    def _check(self, f: np.ndarray) -> np.ndarray:
        f = np.asarray(f)
        if f.shape[-1] != self.N * self.M:
            raise ValueError(
                f"field length {f.shape[-1]} does not match N*M={self.N * self.M}"
            )
        return f

    def diagonal(self) -> np.ndarray:
        """Diagonal entries of a diagonal operator as a length N*M vector."""
        if not self.is_diagonal:
            raise TypeError(f"{self.kind} is not diagonal")
        dx = np.ones(self.N) if self.fx is None else self.fx
        dy = np.ones(self.M) if self.fy is None else self.fy
        return np.outer(dx, dy).ravel()

    def apply(self, f: np.ndarray) -> np.ndarray:
        f = self._check(f)
        if self.is_diagonal:
            return self.diagonal() * f
        G = f.reshape(self.N, self.M)
        if self.fx is not None:
            G = self.fx @ G
        if self.fy is not None:
            G = (self.fy @ G.T).T
        return np.asarray(G).ravel()

    def apply_transpose(self, f: np.ndarray) -> np.ndarray:
        f = self._check(f)
        if self.is_diagonal:
            return self.diagonal() * f
        G = f.reshape(self.N, self.M)
        if self.fx is not None:
            G = self.fx.T @ G
        if self.fy is not None:
            G = (self.fy.T @ G.T).T
        return np.asarray(G).ravel()

    def matrix(self) -> sps.csr_matrix:
        """Explicit sparse N*M x N*M assembly (Jacobians, spectra, tests)."""
        if self.is_diagonal:
            return sps.diags(self.diagonal(), format="csr")
        ax = sps.identity(self.N) if self.fx is None else sps.csr_matrix(self.fx)
        ay = sps.identity(self.M) if self.fy is None else sps.csr_matrix(self.fy)
        return sps.kron(ax, ay, format="csr")

    def __matmul__(self, f: np.ndarray) -> np.ndarray:
        return self.apply(f)


def apply_derivative(op: Operator2D, field: np.ndarray) -> np.ndarray:
    """Apply a 2D derivative operator matrix-free."""
    return op.apply(field)


def quadrature_norm(field: np.ndarray, P2d: Operator2D) -> float:
    """Return ``f^T P f`` for the 2D quadrature ``P2d``."""
    if P2d.kind != "norm_P":
        raise ValueError(f"expected a norm_P operator, got {P2d.kind}")
    f = P2d._check(field)
    return float(f @ (P2d.diagonal() * f))


def dump_sbp_matrices(op: Sbp1D, directory: str | Path) -> list[Path]:
    """Write P, Q and D as row-major, space-separated text matrices."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    out = []
    for name, mat in (("P", np.diag(op.P)), ("Q", op.Q.toarray()), ("D", op.D.toarray())):
        path = directory / f"sbp{2 * op.s}{op.s}_n{op.n}_{name}.txt"
        np.savetxt(path, mat, fmt="%.17e", delimiter=" ")
        out.append(path)
    return out


def check_operator(s: int, n: int = 21, inject_fault: bool = False, seed: int = 0) -> dict[str, tuple[float, float]]:
    """Measure the defining SBP properties of one family on ``[0, 1]``.

    Returns ``{property: (max violation, tolerance)}``. ``inject_fault``
    perturbs one closure entry of Q to exercise the failure path.
    """
    n = max(n, min_nodes(s))
    op = build_sbp_1d(n, s, 1.0 / (n - 1))
    Q = op.Q.toarray()
    P = op.P
    if inject_fault:
        Q[0, 1] += 1e-3
    D = Q / P[:, None]
    B = np.zeros((n, n))
    B[0, 0], B[-1, -1] = -1.0, 1.0
    x = np.linspace(0.0, 1.0, n)
    r = op.closure_rows
    interior = slice(r, n - r)
    bnd_err = int_err = 0.0
    for k in range(2 * s + 1):
        err = np.abs(D @ x**k - (k * x ** (k - 1) if k else 0.0))
        if k <= s:
            bnd_err = max(bnd_err, err.max())
        int_err = max(int_err, err[interior].max())
    rng = np.random.default_rng(seed)
    ibp = 0.0
    for _ in range(10):
        u, v = rng.standard_normal(n), rng.standard_normal(n)
        lhs = u @ (P * (D @ v)) + (D @ u) @ (P * v)
        ibp = max(ibp, abs(lhs - (u[-1] * v[-1] - u[0] * v[0])))
    return {
        "Q+Q^T - B": (float(np.abs(Q + Q.T - B).max()), 1e-14),
        "P positive": (float(max(0.0, -P.min())), 0.0),
        "P sums to length": (float(abs(P.sum() - 1.0)), 1e-13),
        f"exact to degree {s} (all rows)": (float(bnd_err), 1e-9),
        f"exact to degree {2 * s} (interior)": (float(int_err), 1e-9),
        "integration by parts": (float(ibp), 1e-12),
    }
