import numpy as np
import pytest

from bhm4 import manifold
from bhm4.errors import NotOnManifold, NotTangent, OutsideTubularNeighborhood


RNG = np.random.default_rng(7)


def random_sphere_points(k, n):
    y = RNG.normal(size=(n, k))
    return y / np.linalg.norm(y, axis=1, keepdims=True)


def test_sphere_nearest_point_radial():
    s1 = manifold.sphere(k=2)
    assert np.allclose(s1.nearest_point(np.array([2.0, 0.0])), [1.0, 0.0])
    # 2.0 is outside the default reach 0.5; widen
    s1w = manifold.sphere(k=2, reach=0.99)
    np.testing.assert_allclose(s1w.nearest_point(np.array([1.5, 0.0])), [1.0, 0.0])


def test_sphere_center_outside_reach():
    s = manifold.sphere(k=3)
    with pytest.raises(OutsideTubularNeighborhood):
        s.nearest_point(np.zeros(3))


def test_nearest_point_idempotent():
    s = manifold.sphere(k=4)
    y = random_sphere_points(4, 50) * (1 + 0.3 * RNG.uniform(-1, 1, size=(50, 1)))
    p1 = s.nearest_point(y)
    p2 = s.nearest_point(p1)
    assert np.abs(p1 - p2).max() < 1e-12


def test_ellipsoid_nearest_point_axis():
    e = manifold.ellipsoid([2.0, 1.0, 1.0], reach=1.5)
    x = e.nearest_point(np.array([3.0, 0.0, 0.0]))
    # Newton oracle on the Lagrange conditions: x = y a^2/(a^2+t) on the level set
    np.testing.assert_allclose(x, [2.0, 0.0, 0.0], atol=1e-10)


def test_ellipsoid_nearest_point_against_brute_force():
    e = manifold.ellipsoid([2.0, 1.0, 1.0], reach=0.2)
    y = np.array([1.3, 0.6, -0.4])
    y = e.nearest_point(y) + 0.05 * RNG.normal(size=3)
    x = e.nearest_point(y)
    # oracle: dense parametric sweep of the ellipsoid surface
    th = np.linspace(0, np.pi, 400)
    ph = np.linspace(0, 2 * np.pi, 800)
    T, P = np.meshgrid(th, ph, indexing="ij")
    pts = np.stack([2.0 * np.cos(T), np.sin(T) * np.cos(P), np.sin(T) * np.sin(P)], axis=-1)
    d = np.linalg.norm(pts - y, axis=-1)
    brute = pts.reshape(-1, 3)[d.argmin()]
    assert np.linalg.norm(x - y) <= d.min() + 1e-6
    assert np.linalg.norm(x - brute) < 2e-2  # sweep resolution
    assert abs(e._level(x) - 1.0) < 1e-12


def test_sphere_projectors_at_basis_point():
    s = manifold.sphere(k=4)
    e1 = np.eye(4)[0]
    P, Pp = s.projectors(e1)
    np.testing.assert_allclose(P, np.diag([0.0, 1, 1, 1]), atol=1e-14)
    np.testing.assert_allclose(P + Pp, np.eye(4), atol=0)


def test_projector_idempotent_and_complement():
    for m in (manifold.sphere(k=5), manifold.ellipsoid([2.0, 1.0, 1.0])):
        if m.kind == "sphere":
            y = random_sphere_points(5, 200)
        else:
            y = m.nearest_point(random_sphere_points(3, 200) * np.array([2.0, 1.0, 1.0]) * 1.01)
        P, Pp = m.projectors(y)
        assert np.abs(np.einsum("nab,nbc->nac", P, P) - P).max() < 1e-12
        assert np.abs(P + Pp - np.eye(m.k)).max() == 0.0
        assert np.abs(P - np.swapaxes(P, 1, 2)).max() < 1e-14


def test_ellipsoid_projector_at_pole():
    e = manifold.ellipsoid([2.0, 1.0, 1.0])
    P, _ = e.projectors(np.array([2.0, 0.0, 0.0]))
    # gradient of the level function at (2,0,0) is along e1
    np.testing.assert_allclose(P, np.diag([0.0, 1.0, 1.0]), atol=1e-14)


def test_projectors_require_on_manifold():
    s = manifold.sphere(k=3)
    with pytest.raises(NotOnManifold):
        s.projectors(np.array([1.1, 0.0, 0.0]))


def test_sff_sphere_closed_form_and_fd_cross_check():
    s = manifold.sphere(k=4)
    y = random_sphere_points(4, 30)
    Y = RNG.normal(size=(30, 4))
    Z = RNG.normal(size=(30, 4))
    Y = s.project_tangent(y, Y)
    Z = s.project_tangent(y, Z)
    B = s.second_fundamental_form(y, Y, Z)
    np.testing.assert_allclose(B, y * np.einsum("ni,ni->n", Y, Z)[:, None], atol=1e-12)
    # finite-difference D_Y Pperp along the manifold, applied to Z
    eps = 1e-6
    yp = s.nearest_point(y + eps * Y)
    ym = s.nearest_point(y - eps * Y)
    _, Pp_p = s.projectors(yp)
    _, Pp_m = s.projectors(ym)
    dPp = (Pp_p - Pp_m) / (2 * eps)
    B_fd = np.einsum("nab,nb->na", dPp, Z)
    assert np.abs(B - B_fd).max() < 1e-8


def test_sff_ellipsoid_fd_cross_check():
    e = manifold.ellipsoid([2.0, 1.0, 1.0], reach=0.2)
    y = e.nearest_point(random_sphere_points(3, 20) * np.array([2.0, 1.0, 1.0]))
    Y = e.project_tangent(y, RNG.normal(size=(20, 3)))
    Z = e.project_tangent(y, RNG.normal(size=(20, 3)))
    B = e.second_fundamental_form(y, Y, Z)
    eps = 1e-6
    yp = e.nearest_point(y + eps * Y)
    ym = e.nearest_point(y - eps * Y)
    _, Pp_p = e.projectors(yp)
    _, Pp_m = e.projectors(ym)
    B_fd = np.einsum("nab,nb->na", (Pp_p - Pp_m) / (2 * eps), Z)
    assert np.abs(B - B_fd).max() < 1e-6


def test_sff_normality_symmetry_tangency_errors():
    for m in (manifold.sphere(k=3), manifold.ellipsoid([2.0, 1.0, 1.0])):
        if m.kind == "sphere":
            y = random_sphere_points(3, 100)
        else:
            y = m.nearest_point(1.01 * random_sphere_points(3, 100) * m.semi_axes)
        Y = m.project_tangent(y, RNG.normal(size=(100, 3)))
        Z = m.project_tangent(y, RNG.normal(size=(100, 3)))
        B = m.second_fundamental_form(y, Y, Z)
        W = m.project_tangent(y, RNG.normal(size=(100, 3)))
        assert np.abs(np.einsum("ni,ni->n", B, W)).max() < 1e-10
        B2 = m.second_fundamental_form(y, Z, Y)
        assert np.abs(B - B2).max() < 1e-12
        PB = m.project_tangent(y, B)
        assert np.abs(PB).max() < 1e-10
        with pytest.raises(NotTangent):
            m.second_fundamental_form(y, Y + m.normal(y), Z)


def test_sff_point_derivative_matches_fd():
    for m in (manifold.sphere(k=3), manifold.ellipsoid([1.5, 1.0, 0.8])):
        y0 = m.nearest_point(np.array([0.4, 0.5, 0.3]) * m.semi_axes.max())
        Y = np.array([0.3, -0.2, 0.5])
        Z = np.array([-0.1, 0.4, 0.2])
        D = m.sff_point_derivative(y0, Y, Z)
        eps = 1e-6
        for b in range(3):
            e = np.zeros(3)
            e[b] = eps
            fd = (m._sff_raw(y0 + e, Y, Z) - m._sff_raw(y0 - e, Y, Z)) / (2 * eps)
            assert np.abs(D[:, b] - fd).max() < 1e-6
