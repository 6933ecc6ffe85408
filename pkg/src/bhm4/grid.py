"""Uniform Cartesian discretization of the unit ball in R^4.

A :class:`BallGrid4` is the lattice of spacing ``h`` on the bounding box
[-1, 1]^4; a :class:`Field` stores per-node values together with a validity
mask. Differential operators use centered second-order stencils and shrink
the validity mask by one stencil width, so nodes within the margin of the
boundary sphere never contribute (interior estimates only; integrals over
regions touching the excluded margin carry an O(h) boundary error).

The polar side (:class:`AnnulusGrid`, :func:`polar_resample`,
:func:`radial_angular_split`) supports the annulus analysis: product
quadrature radii x S^3, quadrilinear resampling off the Cartesian lattice
and a radial/angular splitting of the Laplacian.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np
from scipy import ndimage

from . import kernels
from .errors import (
    EmptyRegion,
    GridTooCoarse,
    OutOfSupport,
    TooFewShells,
)

_CROSS4 = ndimage.generate_binary_structure(4, 1)


# ---------------------------------------------------------------------------
# Cartesian grid and fields
# ---------------------------------------------------------------------------

class BallGrid4:
    """Lattice of spacing h on [-1,1]^4 with ball/interior masks.

    ``h`` must be 1/m for an integer m >= 4 so the origin and the box faces
    are lattice points. The margin (in units of h, default 2) is the width of
    the boundary collar excluded from differential-operator output.
    """

    def __init__(self, h: float, margin: int = 2):
        m = round(1.0 / h)
        if m < 4 or abs(m * h - 1.0) > 1e-12:
            raise GridTooCoarse(f"h must be 1/m with integer m >= 4, got h={h}")
        self.h = 1.0 / m
        self.margin = int(margin)
        self.n = 2 * m + 1
        self.axis = (np.arange(self.n) - m) * self.h
        self.cell_volume = self.h ** 4
        self.shape = (self.n,) * 4
        self._r2 = None
        self._ball = None

    # cached |x|^2 over the box
    @property
    def r2(self) -> np.ndarray:
        if self._r2 is None:
            ax = self.axis
            self._r2 = (ax[:, None, None, None] ** 2 + ax[None, :, None, None] ** 2
                        + ax[None, None, :, None] ** 2 + ax[None, None, None, :] ** 2)
        return self._r2

    @property
    def ball_mask(self) -> np.ndarray:
        """Nodes strictly inside the unit ball."""
        if self._ball is None:
            self._ball = self.r2 < 1.0
        return self._ball

    def inner_mask(self, width: float) -> np.ndarray:
        """Nodes with |x| < 1 - width."""
        if width <= 0:
            return self.ball_mask
        return self.r2 < (1.0 - width) ** 2

    @property
    def interior_mask(self) -> np.ndarray:
        """Nodes clear of the margin collar: |x| < 1 - margin*h."""
        return self.inner_mask(self.margin * self.h)

    def points(self) -> np.ndarray:
        """All node coordinates, shape (n,n,n,n,4)."""
        ax = self.axis
        out = np.empty(self.shape + (4,))
        out[..., 0] = ax[:, None, None, None]
        out[..., 1] = ax[None, :, None, None]
        out[..., 2] = ax[None, None, :, None]
        out[..., 3] = ax[None, None, None, :]
        return out

    def dist2(self, center) -> np.ndarray:
        """Squared distance from each node to ``center``."""
        c = np.asarray(center, dtype=float)
        if np.all(c == 0.0):
            return self.r2
        ax = self.axis
        return ((ax[:, None, None, None] - c[0]) ** 2 + (ax[None, :, None, None] - c[1]) ** 2
                + (ax[None, None, :, None] - c[2]) ** 2 + (ax[None, None, None, :] - c[3]) ** 2)

    def __eq__(self, other):
        return (isinstance(other, BallGrid4) and other.n == self.n
                and other.margin == self.margin)

    def __repr__(self):
        return f"BallGrid4(h=1/{round(1/self.h)}, margin={self.margin})"


@dataclass
class Field:
    """Grid function with values in R^m and a per-node validity mask.

    ``values`` has shape grid.shape + comp_shape (the component shape may be
    multi-axis, e.g. (k, k, 4) for matrix-valued 1-forms). Values at invalid
    nodes are kept but carry no meaning; operators and integrals never read
    them.
    """

    grid: BallGrid4
    values: np.ndarray
    valid: np.ndarray

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=np.float64)
        if self.values.shape[:4] != self.grid.shape:
            raise ValueError("values shape does not match grid")
        if self.valid.shape != self.grid.shape:
            raise ValueError("valid mask shape does not match grid")

    @property
    def comp_shape(self) -> tuple:
        return self.values.shape[4:]

    @property
    def m(self) -> int:
        return int(np.prod(self.comp_shape, dtype=int)) if self.comp_shape else 1

    @classmethod
    def from_function(cls, grid: BallGrid4, fn: Callable[[np.ndarray], np.ndarray],
                      valid: Optional[np.ndarray] = None) -> "Field":
        """Sample ``fn`` (mapping (N,4) points to (N, *comp) values) on all nodes."""
        pts = grid.points().reshape(-1, 4)
        vals = np.asarray(fn(pts), dtype=np.float64)
        comp = vals.shape[1:]
        vals = vals.reshape(grid.shape + comp)
        v = grid.ball_mask.copy() if valid is None else valid.copy()
        return cls(grid, vals, v)

    @classmethod
    def constant(cls, grid: BallGrid4, vec) -> "Field":
        vec = np.atleast_1d(np.asarray(vec, dtype=np.float64))
        vals = np.broadcast_to(vec, grid.shape + vec.shape).copy()
        return cls(grid, vals, grid.ball_mask.copy())

    def copy(self) -> "Field":
        return Field(self.grid, self.values.copy(), self.valid.copy())

    def flat2(self) -> np.ndarray:
        """View of values as (N, m)."""
        return self.values.reshape(-1, self.m)


def _erode(valid: np.ndarray, width: int) -> np.ndarray:
    out = valid
    for _ in range(width):
        out = ndimage.binary_erosion(out, structure=_CROSS4, border_value=0)
    return out


def _finalize(grid: BallGrid4, raw: np.ndarray, valid_in: np.ndarray, width: int) -> Field:
    valid = _erode(valid_in, width)
    if not valid.any():
        raise GridTooCoarse("no interior node has a full stencil")
    raw[~valid] = 0.0
    return Field(grid, raw, valid)


def gradient(u: Field) -> Field:
    """Centered gradient; component shape grows by a trailing direction axis."""
    g = u.grid
    v = u.values.reshape(g.shape + (u.m,))
    out = np.empty(g.shape + (u.m, 4))
    kernels.grad4(v, out, 1.0 / (2 * g.h))
    out = out.reshape(g.shape + u.comp_shape + (4,))
    return _finalize(g, out, u.valid, 1)


def laplacian(u: Field) -> Field:
    g = u.grid
    v = u.values.reshape(g.shape + (u.m,))
    out = np.empty_like(v)
    kernels.lap4(v, out, 1.0 / g.h ** 2)
    out = out.reshape(g.shape + u.comp_shape)
    return _finalize(g, out, u.valid, 1)


def bilaplacian(u: Field) -> Field:
    """Composition of the discrete Laplacian with itself (13 points per plane)."""
    return laplacian(laplacian(u))


def hessian(u: Field) -> Field:
    """All centered second derivatives; trailing component axes (4, 4)."""
    g = u.grid
    v = u.values.reshape(g.shape + (u.m,))
    out = np.empty(g.shape + (u.m, 4, 4))
    kernels.hess4(v, out, 1.0 / g.h ** 2, 1.0 / (4 * g.h ** 2))
    out = out.reshape(g.shape + u.comp_shape + (4, 4))
    return _finalize(g, out, u.valid, 1)


def divergence(u: Field) -> Field:
    """Contract the trailing direction axis with the centered gradient."""
    if not u.comp_shape or u.comp_shape[-1] != 4:
        raise ValueError("divergence needs a trailing direction axis of length 4")
    g = u.grid
    inner = u.comp_shape[:-1]
    mi = int(np.prod(inner, dtype=int)) if inner else 1
    v = u.values.reshape(g.shape + (mi, 4))
    out = np.empty(g.shape + (mi,))
    kernels.div4(v, out, 1.0 / (2 * g.h))
    out = out.reshape(g.shape + inner)
    return _finalize(g, out, u.valid, 1)


# ---------------------------------------------------------------------------
# Regions and integration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Ball:
    center: tuple
    radius: float


@dataclass(frozen=True)
class Shell:
    """Annular region r_in <= |x - center| < r_out."""
    center: tuple
    r_in: float
    r_out: float


Region = Optional[object]  # Ball | Shell | None (whole ball)


def region_mask(grid: BallGrid4, region: Region) -> np.ndarray:
    if region is None:
        return grid.ball_mask
    if isinstance(region, Ball):
        return grid.dist2(region.center) < region.radius ** 2
    if isinstance(region, Shell):
        d2 = grid.dist2(region.center)
        return (d2 >= region.r_in ** 2) & (d2 < region.r_out ** 2)
    raise ValueError(f"unknown region {region!r}")


def integrate(u, region: Region = None):
    """Quadrature of a Field (cell volumes) or AnnulusField (product weights).

    Returns an array of shape comp_shape (a scalar for 1-component fields).
    """
    if isinstance(u, AnnulusField):
        if region is not None:
            raise ValueError("AnnulusField integrates over its own annulus")
        w = u.grid.weights
        vals = u.values.reshape(w.shape + (-1,))
        out = np.einsum("rs,rsc->c", w, vals)
        return out.reshape(u.comp_shape) if u.comp_shape else float(out[0])
    mask = region_mask(u.grid, region) & u.valid
    if not mask.any():
        raise EmptyRegion(f"region {region!r} contains no valid node")
    flat = u.values.reshape((-1, u.m))[mask.reshape(-1)]
    out = flat.sum(axis=0) * u.grid.cell_volume
    return out.reshape(u.comp_shape) if u.comp_shape else float(out[0])


# ---------------------------------------------------------------------------
# S^3 quadrature and annulus grids
# ---------------------------------------------------------------------------

class SphereQuad:
    """Product quadrature on S^3 in hyperspherical angles (psi, theta, phi).

    x = (cos psi, sin psi cos theta, sin psi sin theta cos phi,
         sin psi sin theta sin phi), measure sin^2(psi) sin(theta).
    Gauss-Legendre in psi and theta, uniform periodic rule in phi.
    """

    def __init__(self, n_psi: int = 16, n_theta: int = 16, n_phi: int = 32):
        xp, wp = np.polynomial.legendre.leggauss(n_psi)
        psi = (xp + 1.0) * (np.pi / 2)
        wpsi = wp * (np.pi / 2)
        xt, wt = np.polynomial.legendre.leggauss(n_theta)
        theta = (xt + 1.0) * (np.pi / 2)
        wtheta = wt * (np.pi / 2)
        phi = np.arange(n_phi) * (2 * np.pi / n_phi)
        P, T, F = np.meshgrid(psi, theta, phi, indexing="ij")
        WP, WT = np.meshgrid(wpsi, wtheta, indexing="ij")
        sp, st = np.sin(P), np.sin(T)
        nodes = np.stack([np.cos(P), sp * np.cos(T), sp * st * np.cos(F),
                          sp * st * np.sin(F)], axis=-1)
        self.nodes = nodes.reshape(-1, 4)
        w = (WP * WT)[..., None] * (2 * np.pi / n_phi) * (sp * sp * st)
        self.weights = w.reshape(-1)
        self.sizes = (n_psi, n_theta, n_phi)
        assert abs(self.weights.sum() - 2 * np.pi ** 2) < 1e-8

    @property
    def n(self) -> int:
        return self.nodes.shape[0]

    def integrate(self, vals: np.ndarray) -> np.ndarray:
        """Integrate per-node values (leading axis = nodes) over S^3."""
        return np.tensordot(self.weights, vals, axes=(0, 0))


_DEFAULT_SPHERE: dict = {}


def default_sphere_quad() -> SphereQuad:
    if "q" not in _DEFAULT_SPHERE:
        _DEFAULT_SPHERE["q"] = SphereQuad()
    return _DEFAULT_SPHERE["q"]


def geometric_radii(r_in: float, r_out: float, max_ratio: float = 1.2,
                    min_count: int = 9) -> np.ndarray:
    """Geometrically spaced radii spanning [r_in, r_out], ratio <= max_ratio."""
    if not (0 < r_in < r_out):
        raise ValueError("need 0 < r_in < r_out")
    count = max(min_count, int(np.ceil(np.log(r_out / r_in) / np.log(max_ratio))) + 1)
    return np.geomspace(r_in, r_out, count)


class AnnulusGrid:
    """Product grid radii x S^3 around ``center`` with quadrature weights.

    weights[i, s] = w_r[i] * w_sphere[s] * r_i^3 integrates over the annulus
    {r_in <= |x - center| <= r_out}; w_r is the trapezoid rule on the radii.
    """

    def __init__(self, radii: Sequence[float], sphere: Optional[SphereQuad] = None,
                 center=(0.0, 0.0, 0.0, 0.0)):
        self.radii = np.asarray(radii, dtype=np.float64)
        if self.radii.ndim != 1 or len(self.radii) < 2:
            raise TooFewShells("need at least 2 radii")
        if np.any(np.diff(self.radii) <= 0) or self.radii[0] <= 0:
            raise ValueError("radii must be positive and strictly increasing")
        self.sphere = sphere if sphere is not None else default_sphere_quad()
        self.center = np.asarray(center, dtype=np.float64)
        wr = np.empty_like(self.radii)
        dr = np.diff(self.radii)
        wr[0] = dr[0] / 2
        wr[-1] = dr[-1] / 2
        wr[1:-1] = (dr[:-1] + dr[1:]) / 2
        self.weights_r = wr
        self.weights = wr[:, None] * self.sphere.weights[None, :] * self.radii[:, None] ** 3

    @property
    def n_r(self) -> int:
        return len(self.radii)

    def points(self) -> np.ndarray:
        """Node coordinates, shape (n_r, n_sphere, 4)."""
        return self.center + self.radii[:, None, None] * self.sphere.nodes[None, :, :]

    def __repr__(self):
        return (f"AnnulusGrid(r=[{self.radii[0]:.4g},{self.radii[-1]:.4g}]x{self.n_r}, "
                f"sphere={self.sphere.sizes}, center={tuple(self.center)})")


@dataclass
class AnnulusField:
    """Values on an AnnulusGrid, shape (n_r, n_sphere) + comp_shape."""

    grid: AnnulusGrid
    values: np.ndarray

    @property
    def comp_shape(self) -> tuple:
        return self.values.shape[2:]

    @property
    def m(self) -> int:
        return int(np.prod(self.comp_shape, dtype=int)) if self.comp_shape else 1

    @classmethod
    def from_function(cls, annulus: AnnulusGrid,
                      fn: Callable[[np.ndarray], np.ndarray]) -> "AnnulusField":
        """Sample fn (mapping (N,4) points to (N, *comp)) exactly on the nodes."""
        pts = annulus.points()
        vals = np.asarray(fn(pts.reshape(-1, 4)), dtype=np.float64)
        return cls(annulus, vals.reshape(pts.shape[:2] + vals.shape[1:]))


def polar_resample(u: Field, annulus: AnnulusGrid) -> AnnulusField:
    """Quadrilinear interpolation of ``u`` onto the annulus nodes.

    Exact for (multi)linear fields. Raises OutOfSupport when any of the 16
    surrounding lattice nodes of a target point is invalid.
    """
    g = u.grid
    pts = annulus.points()
    t = (pts - g.axis[0]) / g.h
    if t.min() < 0 or t.max() > g.n - 1:
        raise OutOfSupport("annulus exceeds the bounding box")
    i0 = np.floor(t).astype(np.int64)
    np.clip(i0, 0, g.n - 2, out=i0)
    frac = t - i0
    vals = u.values.reshape(-1, u.m)
    valid = u.valid.reshape(-1)
    out = np.zeros(pts.shape[:-1] + (u.m,))
    ok = np.ones(pts.shape[:-1], dtype=bool)
    n = g.n
    for corner in range(16):
        d = [(corner >> b) & 1 for b in range(4)]
        idx = ((i0[..., 0] + d[0]) * n + (i0[..., 1] + d[1]))
        idx = (idx * n + (i0[..., 2] + d[2])) * n + (i0[..., 3] + d[3])
        w = np.ones(pts.shape[:-1])
        for b in range(4):
            w = w * (frac[..., b] if d[b] else 1.0 - frac[..., b])
        ok &= valid[idx]
        out += w[..., None] * vals[idx]
    if not ok.all():
        raise OutOfSupport("annulus touches invalid nodes of the source field")
    return AnnulusField(annulus, out.reshape(pts.shape[:-1] + u.comp_shape))


# ---------------------------------------------------------------------------
# Radial / angular splitting on an annulus
# ---------------------------------------------------------------------------

class RadialAngularSplit(NamedTuple):
    du_dr: np.ndarray          # (n_r, n_s, *comp)
    d2u_dr2: np.ndarray        # (n_r, n_s, *comp)
    lapS3_u: np.ndarray        # (n_r, n_s, *comp)  angular Laplacian on each shell
    angular_grad: np.ndarray   # (n_r, n_s, *comp, 4)  tangential gradient
    projection_residual: float  # rel. L2 remainder of the angular band-limit


def fd_weights(x: np.ndarray, x0: float, der: int) -> np.ndarray:
    """Finite-difference weights for d^der/dx^der at x0 from nodes x
    (Fornberg's recursion)."""
    n = len(x)
    c = np.zeros((n, der + 1))
    c[0, 0] = 1.0
    c1, c4 = 1.0, x[0] - x0
    for i in range(1, n):
        mn = min(i, der)
        c2, c5 = 1.0, c4
        c4 = x[i] - x0
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            for k in range(mn, 0, -1):
                c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
            c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, der]


def radial_diff_matrix(radii: np.ndarray, order: int) -> np.ndarray:
    """Dense differentiation matrix on a non-uniform radii array.

    Interior rows use 3-point centered stencils; the end rows use 4-point
    one-sided stencils so the boundary shells keep second-order accuracy.
    """
    r = np.asarray(radii, dtype=np.float64)
    n = len(r)
    if n < 4:
        raise TooFewShells("need at least 4 shells for radial derivatives")
    D = np.zeros((n, n))
    for i in range(n):
        if i == 0:
            sten = slice(0, 4)
        elif i == n - 1:
            sten = slice(n - 4, n)
        else:
            sten = slice(i - 1, i + 2)
        D[i, sten] = fd_weights(r[sten], r[i], order)
    return D


def radial_derivative(values: np.ndarray, radii: np.ndarray, order: int = 1) -> np.ndarray:
    """Derivative in r along axis 0 on a non-uniform radii array."""
    D = radial_diff_matrix(radii, order)
    flat = values.reshape(len(radii), -1)
    return (D @ flat).reshape(values.shape)


def radial_angular_split(u: AnnulusField, l_max: int = 8) -> RadialAngularSplit:
    """Split u on the annulus into radial derivatives and angular pieces.

    Radial derivatives by centered differences on the radii array; angular
    Laplacian and tangential gradient per shell through the spherical
    harmonic basis of degree <= l_max (the projection remainder is reported,
    not silently dropped). The Laplacian of u is recovered as
    d2u_dr2 + (3/r) du_dr + lapS3_u / r^2.
    """
    if u.grid.n_r < 5:
        raise TooFewShells("radial_angular_split needs at least 5 shells")
    from .s3harmonics import build_basis  # deferred: s3harmonics sits above grid

    basis = build_basis(l_max, sphere=u.grid.sphere)
    vals = u.values.reshape(u.grid.n_r, u.grid.sphere.n, u.m)
    du = radial_derivative(vals, u.grid.radii, order=1)
    d2u = radial_derivative(vals, u.grid.radii, order=2)

    phi = basis.node_values          # (n_s, K)
    wphi = phi * u.grid.sphere.weights[:, None]
    coeff = np.einsum("sk,rsc->rkc", wphi, vals)
    recon = np.einsum("sk,rkc->rsc", phi, coeff)
    lapS3 = np.einsum("sk,k,rkc->rsc", phi, -basis.eigenvalues_per_function, coeff)
    tgrad = np.einsum("skd,rkc->rscd", basis.node_tangential_gradients, coeff)

    num = np.sqrt(np.einsum("rs,rsc->", u.grid.weights, (vals - recon) ** 2))
    den = np.sqrt(np.einsum("rs,rsc->", u.grid.weights, vals ** 2))
    resid = float(num / den) if den > 0 else 0.0

    cs = u.comp_shape
    rs = (u.grid.n_r, u.grid.sphere.n)
    return RadialAngularSplit(
        du_dr=du.reshape(rs + cs),
        d2u_dr2=d2u.reshape(rs + cs),
        lapS3_u=lapS3.reshape(rs + cs),
        angular_grad=tgrad.reshape(rs + cs + (4,)),
        projection_residual=resid,
    )
