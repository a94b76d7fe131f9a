import numpy as np
import pytest

from ibl_sbp.grid import SIDES, boundary_geometry, build_grid, make_operators, side_indices


@pytest.mark.parametrize("beta", [None, 1.0, 4.0])
def test_nodes_span_domain(beta):
    g = build_grid((2.0, 10.0, 0.0, 4.0), 21, 17, beta=beta)
    assert g.x_nodes[0] == 2.0 and g.x_nodes[-1] == 10.0
    assert g.y_nodes[0] == 0.0 and g.y_nodes[-1] == 4.0
    assert np.all(np.diff(g.x_nodes) > 0) and np.all(np.diff(g.y_nodes) > 0)


def test_stretching_clusters_near_the_low_end():
    g = build_grid((0.0, 1.0, 0.0, 1.0), 41, 41, beta=4.0)
    dy = np.diff(g.y_nodes)
    assert dy[0] < dy[-1] / 10
    assert np.all(np.diff(dy) > 0)


def test_metric_matches_node_differences():
    g = build_grid((0.0, 3.0, 0.0, 1.0), 401, 5, beta=(3.0, None))
    xi = np.linspace(0.0, 1.0, 401)
    dxdxi = np.gradient(g.x_nodes, xi, edge_order=2)
    assert np.allclose(g.metric_x, 1.0 / dxdxi, rtol=1e-4)
    assert np.allclose(g.metric_y, 1.0)


@pytest.mark.parametrize("s", [1, 2, 3])
def test_stretched_operator_keeps_sbp_identity(s):
    g = build_grid((0.0, 1.0, 0.0, 2.0), 30, 30, beta=4.0, s=s)
    ops = make_operators(g, s)
    for op in (ops.sbp_x, ops.sbp_y):
        PD = op.P[:, None] * op.D.toarray()
        B = np.zeros_like(PD)
        B[0, 0], B[-1, -1] = -1.0, 1.0
        assert np.abs(PD + PD.T - B).max() < 1e-12
        assert np.all(op.P > 0)


@pytest.mark.parametrize("s", [1, 2, 3])
def test_stretched_norm_integrates_length_at_quadrature_order(s):
    # P integrates dx/dxi, so the length is only recovered to quadrature accuracy
    errs = []
    for n in (30, 60):
        g = build_grid((0.0, 1.0, 0.0, 2.0), n, n, beta=4.0, s=s)
        errs.append(abs(make_operators(g, s).sbp_y.P.sum() - 2.0))
    assert np.log(errs[0] / errs[1]) / np.log(59 / 29) > 2 * s - 0.3


@pytest.mark.parametrize("s", [1, 2, 3])
def test_stretched_derivative_converges(s):
    errs = []
    for n in (41, 81):
        g = build_grid((0.0, 1.0, 0.0, 1.0), n, 12, beta=3.0, s=s)
        ops = make_operators(g, s)
        x = g.x_nodes
        errs.append(np.abs(ops.sbp_x.D @ np.sin(2 * x) - 2 * np.cos(2 * x)).max())
    assert np.log2(errs[0] / errs[1]) > s - 0.3


@pytest.mark.parametrize("bad", [
    dict(domain=(1.0, 0.0, 0.0, 1.0), N=10, M=10),
    dict(domain=(0.0, 1.0, 0.0, 1.0), N=7, M=10, s=2),
    dict(domain=(0.0, 1.0, 0.0, 1.0), N=10, M=10, beta=-1.0),
])
def test_build_grid_rejects(bad):
    with pytest.raises(ValueError):
        build_grid(**bad)


def test_boundary_geometry():
    g = build_grid((0.0, 2.0, 0.0, 1.0), 6, 5)
    ops = make_operators(g, 1)
    X, Y = g.mesh()
    normals = {"south": (0, -1), "east": (1, 0), "north": (0, 1), "west": (-1, 0)}
    lengths = {"south": 2.0, "north": 2.0, "east": 1.0, "west": 1.0}
    for side in SIDES:
        geo = boundary_geometry(g, side, ops)
        idx = side_indices(g, side)
        assert np.array_equal(geo.node_indices, idx)
        assert (geo.Nx[idx] == normals[side][0]).all() and (geo.Ny[idx] == normals[side][1]).all()
        assert geo.quadrature.sum() == pytest.approx(lengths[side])
        assert np.count_nonzero(geo.quadrature) == idx.size
    assert np.all(Y[side_indices(g, "north")] == 1.0)
    assert np.all(X[side_indices(g, "west")] == 0.0)


def test_export_csv(tmp_path):
    g = build_grid((0.0, 1.0, 0.0, 1.0), 4, 3)
    g.export_csv(tmp_path / "g.csv")
    data = np.loadtxt(tmp_path / "g.csv", delimiter=",", skiprows=1)
    X, Y = g.mesh()
    assert np.allclose(data[:, 2], X) and np.allclose(data[:, 3], Y)


def test_vanishing_stretch_is_uniform():
    g = build_grid((0.0, 1.0, 0.0, 1.0), 21, 21, beta=1e-8)
    dx = np.diff(g.x_nodes)
    assert np.abs(dx / 0.05 - 1).max() < 1e-6


def test_uniform_grid_uses_plain_operators():
    from ibl_sbp.sbp import build_sbp_1d
    g = build_grid((0.0, 2.0, 0.0, 1.0), 21, 11, s=2)
    ops = make_operators(g, 2)
    plain = build_sbp_1d(21, 2, 0.1)
    assert np.array_equal(ops.sbp_x.D.toarray(), plain.D.toarray())
    assert np.array_equal(ops.sbp_x.P, plain.P)
    assert np.all(g.metric_x == 0.5)


@pytest.mark.parametrize("s", [1, 2])
def test_stretched_2d_integration_by_parts(s):
    g = build_grid((0.0, 2.0, 0.0, 1.0), 11, 11, beta=3.0, s=s)
    ops = make_operators(g, s)
    rng = np.random.default_rng(s)
    a, b = rng.standard_normal(121), rng.standard_normal(121)
    P = ops.P.diagonal()
    for D, pos, neg in ((ops.Dx, "east", "west"), (ops.Dy, "north", "south")):
        lhs = a @ (P * D.apply(b)) + D.apply(a) @ (P * b)
        rhs = a @ (ops.bq[pos].diagonal() * b) - a @ (ops.bq[neg].diagonal() * b)
        assert lhs == pytest.approx(rhs, abs=1e-12)


def test_stretched_derivative_of_linear_converges_to_one():
    # closed-form metrics make D x = 1 only up to truncation error
    errs = []
    for n in (80, 160):
        g = build_grid((0.0, 10.0, 0.0, 4.0), n, n, beta=4.0, s=2)
        e = np.abs(make_operators(g, 2).sbp_y.D @ g.y_nodes - 1.0)
        errs.append((e.max(), e[8:-8].max()))
    assert np.log2(errs[0][0] / errs[1][0]) > 1.8
    assert np.log2(errs[0][1] / errs[1][1]) > 3.8
