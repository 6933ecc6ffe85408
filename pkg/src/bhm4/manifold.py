"""Target manifold geometry: nearest-point projection, tangent/normal
projectors and the second fundamental form.

Two concrete targets are supported: the unit sphere S^{k-1} and axis-aligned
ellipsoids. Projectors and the second fundamental form are evaluated from
closed forms per manifold kind (a finite-difference cross-check lives in the
tests, not here): accuracy here dominates everything downstream.

All operations are vectorized over a leading batch of points: arguments of
shape (..., k) are accepted everywhere.
"""

from __future__ import annotations

import numpy as np

from .errors import NotOnManifold, NotTangent, OutsideTubularNeighborhood

_ON_TOL = 1e-10
_TANGENT_TOL = 1e-10


class TargetManifold:
    """Closed submanifold N of R^k with projection-based geometry.

    Parameters
    ----------
    kind : "sphere" or "ellipsoid"
    ambient_dim : k >= 2 (sphere only; ellipsoids take k from semi_axes)
    semi_axes : semi-axis lengths for the ellipsoid
    reach : tubular neighborhood radius delta; defaults to 0.5 for the
        sphere and to half the minimal curvature radius for ellipsoids.
        The bound binds on the inward side only: for these convex targets
        the nearest-point map is well defined arbitrarily far outward,
        while inward it breaks down at the focal set.
    """

    def __init__(self, kind: str = "sphere", ambient_dim: int = 3,
                 semi_axes=None, reach: float | None = None):
        if kind not in ("sphere", "ellipsoid"):
            raise ValueError(f"unknown manifold kind {kind!r}")
        self.kind = kind
        if kind == "sphere":
            if ambient_dim < 2:
                raise ValueError("ambient_dim must be >= 2")
            self.k = int(ambient_dim)
            self.semi_axes = np.ones(self.k)
            default_reach = 0.5
        else:
            if semi_axes is None:
                raise ValueError("ellipsoid needs semi_axes")
            self.semi_axes = np.asarray(semi_axes, dtype=np.float64)
            if self.semi_axes.ndim != 1 or len(self.semi_axes) < 2:
                raise ValueError("semi_axes must be a vector of length >= 2")
            if np.any(self.semi_axes <= 0):
                raise ValueError("semi_axes must be positive")
            self.k = len(self.semi_axes)
            # tightest curvature radius of an ellipsoid is (min axis)^2/(max axis)
            default_reach = 0.5 * self.semi_axes.min() ** 2 / self.semi_axes.max()
        if reach is not None and not 0 < reach:
            raise ValueError("reach must be positive")
        if kind == "sphere" and reach is not None and reach >= 1:
            raise ValueError("sphere reach must be < 1")
        self.reach = float(reach) if reach is not None else default_reach
        self._inv_ax2 = 1.0 / self.semi_axes ** 2

    # -- level function -----------------------------------------------------

    def _level(self, y: np.ndarray) -> np.ndarray:
        """g(y) = sum (y_i/a_i)^2; N = {g = 1}."""
        return np.einsum("...i,i->...", y * y, self._inv_ax2)

    def contains(self, y: np.ndarray, tol: float = _ON_TOL) -> np.ndarray:
        y = np.asarray(y, dtype=np.float64)
        return np.abs(self._level(y) - 1.0) <= 2.0 * tol * np.sqrt(self._level(y) + 1.0)

    def _require_on(self, y: np.ndarray, tol: float = _ON_TOL):
        if not np.all(self.contains(y, tol)):
            raise NotOnManifold("point(s) not on the manifold within tolerance")

    # -- nearest point --------------------------------------------------------

    def nearest_point(self, y) -> np.ndarray:
        """Project points of the tubular neighborhood onto N.

        Sphere: radial projection. Ellipsoid: damped Newton iteration on the
        scalar normal-alignment equation, residual 1e-13, 50 iterations.
        """
        y = np.asarray(y, dtype=np.float64)
        if self.kind == "sphere":
            r = np.linalg.norm(y, axis=-1)
            if np.any(r < 1.0 - self.reach):
                raise OutsideTubularNeighborhood(
                    "inward distance to the sphere exceeds the configured reach")
            return y / r[..., None]
        return self._ellipsoid_nearest(y)

    def _ellipsoid_nearest(self, y: np.ndarray) -> np.ndarray:
        a2 = self.semi_axes ** 2
        ya = np.abs(y)
        # x_i = y_i a_i^2/(a_i^2+t); solve f(t) = sum (y_i a_i/(a_i^2+t))^2 - 1 = 0
        t = np.zeros(y.shape[:-1])
        lo = np.full_like(t, -a2.min() * (1 - 1e-9))
        hi = np.maximum(np.linalg.norm(ya, axis=-1) * self.semi_axes.max(), 1.0)
        # make sure the bracket contains the root
        for _ in range(200):
            f_hi = (np.square(ya * self.semi_axes / (a2 + hi[..., None]))).sum(-1) - 1.0
            if np.all(f_hi < 0):
                break
            hi = np.where(f_hi >= 0, hi * 2 + 1.0, hi)
        t = 0.5 * (lo + hi)
        converged = np.zeros(t.shape, dtype=bool)
        for _ in range(50):
            denom = a2 + t[..., None]
            q = ya * self.semi_axes / denom
            f = np.square(q).sum(-1) - 1.0
            lo = np.where(f > 0, t, lo)
            hi = np.where(f < 0, t, hi)
            df = -2.0 * (np.square(q) / denom).sum(-1)
            step = f / df
            t_new = t - step
            bad = (t_new <= lo) | (t_new >= hi)  # damp: fall back to bisection
            t = np.where(bad, 0.5 * (lo + hi), t_new)
            converged = np.abs(f) <= 1e-13
            if converged.all():
                break
        x = y * a2 / (a2 + t[..., None])
        dist = np.linalg.norm(x - y, axis=-1)
        inside = self._level(y) < 1.0
        if np.any(inside & (dist > self.reach + 1e-12)):
            raise OutsideTubularNeighborhood(
                "inward distance to the ellipsoid exceeds the configured reach")
        return x

    # -- projectors -----------------------------------------------------------

    def normal(self, y) -> np.ndarray:
        """Unit normal of N at on-manifold points."""
        y = np.asarray(y, dtype=np.float64)
        n = y * self._inv_ax2
        return n / np.linalg.norm(n, axis=-1, keepdims=True)

    def projectors(self, y, check: bool = True):
        """(P, Pperp) at y, the tangent and normal projector matrices."""
        y = np.asarray(y, dtype=np.float64)
        if check:
            self._require_on(y)
        nh = self.normal(y)
        pperp = nh[..., :, None] * nh[..., None, :]
        p = np.broadcast_to(np.eye(self.k), y.shape[:-1] + (self.k, self.k)).copy()
        p -= pperp
        return p, pperp

    def project_tangent(self, y, v) -> np.ndarray:
        """P(y) v without materializing the matrix."""
        nh = self.normal(y)
        v = np.asarray(v, dtype=np.float64)
        return v - nh * np.einsum("...i,...i->...", nh, v)[..., None]

    def project_normal(self, y, v) -> np.ndarray:
        nh = self.normal(y)
        v = np.asarray(v, dtype=np.float64)
        return nh * np.einsum("...i,...i->...", nh, v)[..., None]

    # -- second fundamental form ----------------------------------------------

    def second_fundamental_form(self, y, Y, Z, check: bool = True) -> np.ndarray:
        """B(y)(Y, Z): normal-valued, symmetric, bilinear in (Y, Z).

        Closed form n_hat * <S Y, Z>/|n| with S = diag(1/a_i^2); on the unit
        sphere this reduces to <Y, Z> y.
        """
        y = np.asarray(y, dtype=np.float64)
        Y = np.asarray(Y, dtype=np.float64)
        Z = np.asarray(Z, dtype=np.float64)
        if check:
            self._require_on(y)
            nh = self.normal(y)
            for v in (Y, Z):
                proj = np.abs(np.einsum("...i,...i->...", nh, v))
                scale = np.linalg.norm(v, axis=-1) + 1e-300
                if np.any(proj > _TANGENT_TOL * np.maximum(scale, 1.0)):
                    raise NotTangent("argument is not tangent within tolerance")
        return self._sff_raw(y, Y, Z)

    def _sff_raw(self, y, Y, Z) -> np.ndarray:
        """B extended bilinearly to arbitrary (Y, Z); no tangency checks."""
        if self.kind == "sphere":
            return y * np.einsum("...i,...i->...", Y, Z)[..., None]
        n = y * self._inv_ax2
        nn = np.linalg.norm(n, axis=-1)
        syz = np.einsum("...i,i,...i->...", Y, self._inv_ax2, Z)
        return n * (syz / nn ** 2)[..., None]

    def sff_point_derivative(self, y, Y, Z) -> np.ndarray:
        """d/dy^b of the closed form B(y)(Y, Z) with Y, Z held fixed.

        Returns shape (..., k, k): [..., a, b] = d B^a / d y^b.
        """
        y = np.asarray(y, dtype=np.float64)
        Y = np.asarray(Y, dtype=np.float64)
        Z = np.asarray(Z, dtype=np.float64)
        if self.kind == "sphere":
            dot = np.einsum("...i,...i->...", Y, Z)
            eye = np.eye(self.k)
            return dot[..., None, None] * eye
        # B(y) = n <SY, Z>/|n|^2 with n = S y, S = diag(1/a^2)
        S = np.diag(self._inv_ax2)
        n = y * self._inv_ax2
        nn2 = np.einsum("...i,...i->...", n, n)
        syz = np.einsum("...i,i,...i->...", Y, self._inv_ax2, Z)
        # dB^a/dy^b = S_ab syz/nn2 - n^a syz * 2 (S n)^b / nn2^2
        term1 = S * (syz / nn2)[..., None, None]
        sn = n * self._inv_ax2
        term2 = (2.0 * syz / nn2 ** 2)[..., None, None] * n[..., :, None] * sn[..., None, :]
        return term1 - term2

    def __repr__(self):
        if self.kind == "sphere":
            return f"TargetManifold(sphere, k={self.k}, reach={self.reach})"
        return f"TargetManifold(ellipsoid, axes={tuple(self.semi_axes)}, reach={self.reach})"


def sphere(k: int = 3, reach: float = 0.5) -> TargetManifold:
    return TargetManifold("sphere", ambient_dim=k, reach=reach)


def ellipsoid(semi_axes, reach: float | None = None) -> TargetManifold:
    return TargetManifold("ellipsoid", semi_axes=semi_axes, reach=reach)
