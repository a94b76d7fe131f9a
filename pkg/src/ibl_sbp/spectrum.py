"""Eigenvalue diagnostics of the frozen-coefficient spatial operator."""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sps

from .spatial import SbpSatScheme

MAX_DENSE_NODES = 30 * 30
ZERO_TOL = 1e-10


def frozen_operator_matrix(U0: np.ndarray, scheme: SbpSatScheme, include_bcs: bool = True) -> sps.csr_matrix:
    """``D(U0)`` acting on perturbations; see :meth:`SbpSatScheme.frozen_operator`."""
    U0 = np.asarray(U0, dtype=float)
    if U0.shape != (scheme.size,):
        raise ValueError(f"U0 has length {U0.size}, expected {scheme.size}")
    return scheme.frozen_operator(U0, include_bcs)


@dataclass
class SpectrumSummary:
    min_re: float
    max_re: float
    n_nonpositive: int
    n: int


def spectrum(A, zero_tol: float = ZERO_TOL) -> tuple[np.ndarray, SpectrumSummary]:
    """Full dense spectrum with a summary; ``n_nonpositive`` counts ``Re <= zero_tol``."""
    A = A.toarray() if sps.issparse(A) else np.asarray(A, dtype=float)
    if A.shape[0] > 3 * MAX_DENSE_NODES:
        raise ValueError(f"matrix of size {A.shape[0]} exceeds the dense eigensolve cap")
    if A.size == 0:
        return np.zeros(0, complex), SpectrumSummary(float("nan"), float("nan"), 0, 0)
    lam = sla.eigvals(A)
    re = lam.real
    summ = SpectrumSummary(float(re.min()), float(re.max()), int(np.sum(re <= zero_tol)), lam.size)
    return lam, summ


def symmetric_part_min_eig(A, Pdiag: np.ndarray) -> float:
    """Smallest eigenvalue of the symmetric part ``(PA + (PA)^T) / 2`` with ``P = I_3 x (Px x Py)``."""
    A = A.toarray() if sps.issparse(A) else np.asarray(A)
    w = np.tile(Pdiag, A.shape[0] // Pdiag.size)
    PA = w[:, None] * A
    return float(np.linalg.eigvalsh(0.5 * (PA + PA.T)).min())


def smallest_singular_value(A) -> float:
    A = A.toarray() if sps.issparse(A) else np.asarray(A)
    return float(np.linalg.svd(A, compute_uv=False).min())


def write_spectrum_csv(path: str | Path, lam: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["re", "im"])
        for z in lam:
            w.writerow([f"{z.real:.17e}", f"{z.imag:.17e}"])


def write_summary_json(path: str | Path, summary: SpectrumSummary, **extra) -> None:
    Path(path).write_text(json.dumps({**asdict(summary), **extra}, indent=2))
