import numpy as np
import pytest

from bhm4 import grid
from bhm4.errors import EmptyRegion, OutOfSupport, TooFewShells
from bhm4.grid import (
    AnnulusGrid,
    Ball,
    BallGrid4,
    Field,
    Shell,
    bilaplacian,
    divergence,
    geometric_radii,
    gradient,
    hessian,
    integrate,
    laplacian,
    polar_resample,
    radial_angular_split,
)


G8 = BallGrid4(1 / 8)


def sample(fn):
    return Field.from_function(G8, fn)


def test_gradient_exact_for_linear():
    u = sample(lambda x: x[:, :1])
    gu = gradient(u)
    vals = gu.values[gu.valid]
    np.testing.assert_allclose(vals[:, 0, 0], 1.0, atol=1e-13)
    assert np.abs(vals[:, 0, 1:]).max() < 1e-13


def test_gradient_exact_for_quadratic():
    u = sample(lambda x: (x ** 2).sum(1, keepdims=True))
    gu = gradient(u)
    pts = G8.points()[gu.valid]
    np.testing.assert_allclose(gu.values[gu.valid][:, 0, :], 2 * pts, atol=1e-12)


def test_gradient_second_order_on_sine():
    errs = []
    for h in (1 / 8, 1 / 16):
        g = BallGrid4(h)
        u = Field.from_function(g, lambda x: np.sin(np.pi * x[:, :1]))
        gu = gradient(u)
        pts = g.points()[gu.valid]
        exact = np.pi * np.cos(np.pi * pts[:, 0])
        errs.append(np.abs(gu.values[gu.valid][:, 0, 0] - exact).max())
    order = np.log2(errs[0] / errs[1])
    assert order > 1.8


def test_laplacian_quadratic_exact():
    u = sample(lambda x: (x ** 2).sum(1, keepdims=True))
    lu = laplacian(u)
    np.testing.assert_allclose(lu.values[lu.valid], 8.0, atol=1e-11)


def test_laplacian_and_bilaplacian_of_r4():
    # lap r^m = m(m+2) r^(m-2) in R^4: lap r^4 = 24 r^2, lap^2 r^4 = 192
    u = sample(lambda x: ((x ** 2).sum(1, keepdims=True)) ** 2)
    lu = laplacian(u)
    pts2 = (G8.points()[lu.valid] ** 2).sum(1)
    err = lu.values[lu.valid][:, 0] - 24 * pts2
    assert np.abs(err).max() < 24 * 4 * G8.h ** 2  # exact up to O(h^2) on r^4
    b = bilaplacian(u)
    np.testing.assert_allclose(b.values[b.valid], 192.0, atol=1e-8)


def test_constant_maps_to_zero():
    u = Field.constant(G8, [3.0, -1.0])
    for op in (gradient, laplacian, bilaplacian, hessian):
        out = op(u)
        assert np.abs(out.values[out.valid]).max() == 0.0


def test_bilaplacian_is_composition():
    u = sample(lambda x: np.sin(x[:, :1]) * np.cos(x[:, 1:2]))
    assert np.allclose(bilaplacian(u).values, laplacian(laplacian(u)).values)


def test_hessian_symmetric_and_traces_to_laplacian():
    u = sample(lambda x: np.sin(x[:, :1] + 0.5 * x[:, 1:2]) * x[:, 2:3])
    H = hessian(u)
    v = H.values[H.valid]
    assert np.abs(v - np.swapaxes(v, -1, -2)).max() == 0.0
    tr = np.trace(v, axis1=-2, axis2=-1)
    lu = laplacian(u)
    np.testing.assert_allclose(tr, lu.values[H.valid], atol=1e-10)


def test_divergence_of_gradient_approximates_laplacian():
    # div(grad u) is the wide second-difference stencil: agrees with the
    # compact laplacian to O(h^2), and both converge to the exact value
    u = sample(lambda x: np.cos(x[:, :1]) * x[:, 3:4])
    du = divergence(gradient(u))
    lu = laplacian(u)
    m = du.valid
    pts = G8.points()[m]
    exact = -np.cos(pts[:, 0]) * pts[:, 3]
    assert np.abs(du.values[m][:, 0] - exact).max() < 4 * G8.h ** 2
    assert np.abs(lu.values[m][:, 0] - exact).max() < 4 * G8.h ** 2


def test_integrate_ball_volume():
    g = BallGrid4(1 / 12)
    u = Field.constant(g, [1.0])
    vol = integrate(u)
    assert abs(vol - np.pi ** 2 / 2) / (np.pi ** 2 / 2) < 0.01


def test_integrate_regions_and_empty():
    u = Field.constant(G8, [1.0])
    b = integrate(u, Ball((0, 0, 0, 0), 0.5))
    ann = integrate(u, Shell((0, 0, 0, 0), 0.5, 0.9))
    assert 0 < b < np.pi ** 2 / 2
    assert 0 < ann
    assert integrate(u, Ball((0, 0, 0, 0), 0.0001)) == pytest.approx(G8.cell_volume)
    with pytest.raises(EmptyRegion):
        integrate(u, Ball((0.99, 0, 0, 0), 0.005))
    zero = Field.constant(G8, [0.0])
    assert integrate(zero) == 0.0


def test_integration_by_parts_compact_support():
    def bump(x, p):
        r2 = ((x - p) ** 2).sum(1, keepdims=True)
        out = np.zeros_like(r2)
        mask = r2 < 0.5 ** 2
        out[mask] = np.exp(-0.25 / (0.25 - r2[mask]))
        return out

    g = BallGrid4(1 / 10)
    u = Field.from_function(g, lambda x: bump(x, np.array([0.1, 0, 0, 0])))
    v = Field.from_function(g, lambda x: bump(x, np.array([0, -0.12, 0, 0])))
    lu, lv = laplacian(u), laplacian(v)
    m = lu.valid & lv.valid
    a = (lu.values[..., 0] * v.values[..., 0])[m].sum() * g.cell_volume
    b = (u.values[..., 0] * lv.values[..., 0])[m].sum() * g.cell_volume
    assert abs(a - b) < 1e-12


def test_sphere_quad_weights():
    q = grid.default_sphere_quad()
    assert abs(q.weights.sum() - 2 * np.pi ** 2) < 1e-10
    # integrates x_i^2 to |S^3|/4 each
    for i in range(4):
        val = q.integrate(q.nodes[:, i] ** 2)
        assert abs(val - np.pi ** 2 / 2) < 1e-10


def test_annulus_weights_total_measure():
    exact = 2 * np.pi ** 2 * (0.8 ** 4 - 0.2 ** 4) / 4
    coarse = AnnulusGrid(geometric_radii(0.2, 0.8)).weights.sum()
    assert abs(coarse - exact) / exact < 0.05
    dense = AnnulusGrid(geometric_radii(0.2, 0.8, max_ratio=1.01)).weights.sum()
    assert abs(dense - exact) / exact < 1e-4


def test_annulus_field_integrate_shell_measure():
    from bhm4.grid import AnnulusField
    exact = 2 * np.pi ** 2 * (0.6 ** 4 - 0.3 ** 4) / 4
    errs = []
    for n_r in (40, 160):
        ann = AnnulusGrid(np.linspace(0.3, 0.6, n_r))
        f = AnnulusField(ann, np.ones((ann.n_r, ann.sphere.n, 1)))
        errs.append(abs(integrate(f)[0] - exact) / exact)
    assert errs[0] < 1e-3
    assert errs[1] < 1e-5  # trapezoid is O(dr^2)


def test_polar_resample_linear_exact():
    ann = AnnulusGrid(geometric_radii(0.2, 0.7))
    u = sample(lambda x: x[:, 1:2])
    ru = polar_resample(u, ann)
    exact = ann.radii[:, None] * ann.sphere.nodes[None, :, 1]
    assert np.abs(ru.values[..., 0] - exact).max() < 1e-12


def test_polar_resample_quadratic_order():
    errs = []
    for h in (1 / 8, 1 / 16):
        g = BallGrid4(h)
        ann = AnnulusGrid(geometric_radii(0.2, 0.7))
        u = Field.from_function(g, lambda x: (x ** 2).sum(1, keepdims=True))
        ru = polar_resample(u, ann)
        errs.append(np.abs(ru.values[..., 0] - ann.radii[:, None] ** 2).max())
    assert np.log2(errs[0] / errs[1]) > 1.7


def test_polar_resample_constant_and_out_of_support():
    ann = AnnulusGrid(geometric_radii(0.2, 0.7))
    u = Field.constant(G8, [2.5])
    ru = polar_resample(u, ann)
    np.testing.assert_allclose(ru.values, 2.5, atol=0)
    with pytest.raises(OutOfSupport):
        polar_resample(u, AnnulusGrid(geometric_radii(0.5, 0.999)))


def test_radial_angular_split_radial_quadratic():
    from bhm4.grid import AnnulusField
    ann = AnnulusGrid(np.linspace(0.3, 0.7, 30))
    ru = AnnulusField.from_function(ann, lambda x: (x ** 2).sum(1, keepdims=True))
    sp = radial_angular_split(ru, l_max=4)
    r = ann.radii[:, None, None]
    # radial polynomial: 3-point differentiation is exact for quadratics
    assert np.abs(sp.du_dr - 2 * r).max() < 1e-10
    assert np.abs(sp.d2u_dr2 - 2.0).max() < 1e-9
    assert np.abs(sp.lapS3_u).max() < 1e-8
    # reconstruction: d2 + (3/r) d1 + lap_S3/r^2 = lap u = 8
    lap = sp.d2u_dr2 + 3 / r * sp.du_dr + sp.lapS3_u / r ** 2
    assert np.abs(lap - 8.0).max() < 1e-8


def test_radial_angular_split_reconstructs_laplacian_of_smooth():
    from bhm4.grid import AnnulusField

    def f(x):
        return (np.sin(x[:, :1]) * x[:, 1:2] + np.cos(x[:, 2:3])) * x[:, 3:4]

    def lap_f(x):
        # symbolic: lap = sum of second partials
        return (-np.sin(x[:, :1]) * x[:, 1:2] - np.cos(x[:, 2:3])) * x[:, 3:4]

    errs = []
    for n_r in (20, 40):
        ann = AnnulusGrid(np.linspace(0.3, 0.7, n_r))
        ru = AnnulusField.from_function(ann, f)
        sp = radial_angular_split(ru, l_max=8)
        r = ann.radii[:, None, None]
        lap = sp.d2u_dr2 + 3 / r * sp.du_dr + sp.lapS3_u / r ** 2
        exact = lap_f(ann.points().reshape(-1, 4)).reshape(lap.shape)
        errs.append(np.abs(lap - exact).max())
    assert errs[1] < 1e-2
    assert np.log2(errs[0] / errs[1]) > 1.5  # O(dr^2) radial differences


def test_radial_angular_split_degree_one_eigenfunction():
    ann = AnnulusGrid(np.linspace(0.3, 0.7, 20))
    u = sample(lambda x: x[:, :1])
    ru = polar_resample(u, ann)
    sp = radial_angular_split(ru, l_max=4)
    # u = r * (x1/r): lap_S3 of the angular part is -3 (x1/r) per shell
    ang = ann.sphere.nodes[None, :, 0] * ann.radii[:, None]
    assert np.abs(sp.lapS3_u[..., 0] - (-3.0) * ang).max() < 1e-8
    # tangential gradient is orthogonal to the radial direction
    rad = np.einsum("rsd,sd->rs", sp.angular_grad[..., 0, :], ann.sphere.nodes)
    assert np.abs(rad).max() < 1e-10


def test_radial_angular_split_constant_zero():
    ann = AnnulusGrid(np.linspace(0.3, 0.7, 8))
    u = Field.constant(G8, [4.0])
    sp = radial_angular_split(polar_resample(u, ann), l_max=2)
    for arr in (sp.du_dr, sp.d2u_dr2, sp.lapS3_u, sp.angular_grad):
        assert np.abs(arr).max() < 1e-9


def test_radial_angular_split_too_few_shells():
    ann = AnnulusGrid(np.linspace(0.3, 0.7, 4))
    u = Field.constant(G8, [1.0])
    with pytest.raises(TooFewShells):
        radial_angular_split(polar_resample(u, ann))


def test_operator_refinement_order_c6():
    # all operators converge at empirical order >= 1.8 on a C^6 function
    def f(x):
        return np.sin(np.pi * x[:, :1]) * np.cos(x[:, 1:2] + 0.3) + x[:, 2:3] ** 3

    errs = {op: [] for op in ("grad", "lap", "bilap", "hess")}
    for h in (1 / 8, 1 / 16):
        g = BallGrid4(h)
        u = Field.from_function(g, f)
        pts = g.points()
        x1, x2, x3 = pts[..., 0], pts[..., 1], pts[..., 2]
        gu = gradient(u)
        m = gu.valid
        exact = np.pi * np.cos(np.pi * x1) * np.cos(x2 + 0.3)
        errs["grad"].append(np.abs(gu.values[..., 0, 0] - exact)[m].max())
        lu = laplacian(u)
        m = lu.valid
        exact = (-np.pi ** 2 - 1) * np.sin(np.pi * x1) * np.cos(x2 + 0.3) + 6 * x3
        errs["lap"].append(np.abs(lu.values[..., 0] - exact)[m].max())
        bu = bilaplacian(u)
        m = bu.valid
        exact = (np.pi ** 2 + 1) ** 2 * np.sin(np.pi * x1) * np.cos(x2 + 0.3)
        errs["bilap"].append(np.abs(bu.values[..., 0] - exact)[m].max())
        hu = hessian(u)
        m = hu.valid
        exact = -np.pi * np.cos(np.pi * x1) * np.sin(x2 + 0.3)
        errs["hess"].append(np.abs(hu.values[..., 0, 0, 1] - exact)[m].max())
    for op, (e0, e1) in errs.items():
        assert np.log2(e0 / e1) > 1.8, op
