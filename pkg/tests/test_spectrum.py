import json

import numpy as np
import pytest

from ibl_sbp.spectrum import (MAX_DENSE_NODES, frozen_operator_matrix, smallest_singular_value,
                              spectrum, symmetric_part_min_eig, write_spectrum_csv,
                              write_summary_json)

from conftest import make_scheme


def test_summary_counts_diagonal_matrix():
    lam, summ = spectrum(np.diag([-1.0, 0.0, 1e-12, 2.0]))
    assert summ.n == 4 and summ.n_nonpositive == 3
    assert summ.min_re == -1.0 and summ.max_re == 2.0
    assert np.array_equal(np.sort(lam.real), [-1.0, 0.0, 1e-12, 2.0])


def test_symmetric_part_uses_the_norm():
    P = np.array([1.0, 2.0])
    A = np.array([[1.0, 3.0], [-1.5, 2.0]])
    # P A = [[1, 3], [-3, 4]] has symmetric part diag(1, 4)
    assert symmetric_part_min_eig(A, P) == pytest.approx(1.0)
    assert smallest_singular_value(np.diag([3.0, 0.5])) == pytest.approx(0.5)


@pytest.mark.parametrize("s,N", [(1, 10), (2, 10), (3, 12)])
@pytest.mark.parametrize("alpha", [0.0, 1.0])
def test_frozen_free_stream_is_dissipative(s, N, alpha):
    sc = make_scheme(N=N, s=s, alpha=alpha)
    U0 = np.r_[np.ones(sc.nm), np.zeros(2 * sc.nm)]
    A = frozen_operator_matrix(U0, sc, include_bcs=True)
    assert symmetric_part_min_eig(A, sc.Pd) >= -1e-10
    _, summ = spectrum(A)
    assert summ.n_nonpositive == 0


def test_boundary_terms_remove_null_space():
    sc = make_scheme(N=8, s=1)
    U0 = np.ones(sc.size)
    _, without = spectrum(frozen_operator_matrix(U0, sc, include_bcs=False))
    _, with_bcs = spectrum(frozen_operator_matrix(U0, sc, include_bcs=True))
    assert without.n_nonpositive >= 1 and with_bcs.n_nonpositive == 0


def test_dense_cap():
    sc = make_scheme(N=31, M=30, s=1)
    assert sc.nm > MAX_DENSE_NODES
    with pytest.raises(ValueError):
        spectrum(frozen_operator_matrix(np.ones(sc.size), sc))
    with pytest.raises(ValueError):
        frozen_operator_matrix(np.ones(sc.size - 1), sc)


def test_outputs(tmp_path):
    lam, summ = spectrum(np.array([[0.0, 1.0], [-1.0, 0.5]]))
    write_spectrum_csv(tmp_path / "e.csv", lam)
    data = np.loadtxt(tmp_path / "e.csv", delimiter=",", skiprows=1)
    assert np.allclose(np.sort(data[:, 0] + 1j * data[:, 1]), np.sort(lam))
    write_summary_json(tmp_path / "s.json", summ, include_bcs=True)
    out = json.loads((tmp_path / "s.json").read_text())
    assert out["n"] == 2 and out["include_bcs"] is True


def test_zero_matrix():
    lam, summ = spectrum(np.zeros((5, 5)))
    assert np.all(lam == 0) and summ.n_nonpositive == 5


def test_without_boundary_terms_operator_is_singular():
    sc = make_scheme(N=8, s=1)
    A = frozen_operator_matrix(np.ones(sc.size), sc, include_bcs=False)
    assert smallest_singular_value(A) < 1e-10
