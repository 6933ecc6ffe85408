"""Spherical harmonics on S^3 built from harmonic polynomials on R^4.

Degree-l harmonics are the restrictions of degree-l harmonic homogeneous
polynomials; their coefficient vectors are computed exactly (integer
nullspace of the Laplacian constraint map) and then orthonormalized under
the quadrature inner product, so harmonicity is exact and the eigenstructure
(eigenvalue -l(l+2), multiplicity (l+1)^2) is inherited, not fitted.

On an annulus, a shell-harmonic function decomposes into growing r^l and
decaying r^{-l-2} amplitudes per mode; :func:`annulus_expand` fits both by
least squares over the shells. :func:`power_norms` and
:func:`lemma_l2_ratio` quantify the L^2 / L^{2,1} interplay that controls
angular energy on annuli of arbitrary conformal class.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from .errors import BadRadius, DegreeTooHigh, IllConditionedFit, MeanNotZero, TooFewShells
from .grid import AnnulusField, AnnulusGrid, SphereQuad, default_sphere_quad
from .lorentz import MeasuredSample, lorentz_norm

MAX_DEGREE = 12

_KERNEL_CACHE: Dict[int, Tuple[np.ndarray, np.ndarray]] = {}


def _monomial_exponents(l: int) -> np.ndarray:
    mons = [a for a in itertools.product(range(l + 1), repeat=4) if sum(a) == l]
    return np.array(mons, dtype=np.int64).reshape(-1, 4)


def harmonic_coefficients(l: int) -> Tuple[np.ndarray, np.ndarray]:
    """Exponents (n_mon, 4) and kernel matrix (n_mon, (l+1)^2) of degree-l
    harmonic homogeneous polynomials; the kernel is exact (rational nullspace).
    """
    if l in _KERNEL_CACHE:
        return _KERNEL_CACHE[l]
    E = _monomial_exponents(l)
    if l < 2:
        K = np.eye(len(E))
    else:
        import sympy

        lower = _monomial_exponents(l - 2)
        lower_ix = {tuple(m): i for i, m in enumerate(lower)}
        M = sympy.zeros(len(lower), len(E))
        for j, a in enumerate(E):
            for i in range(4):
                if a[i] >= 2:
                    b = list(a)
                    b[i] -= 2
                    M[lower_ix[tuple(b)], j] += int(a[i] * (a[i] - 1))
        vecs = M.nullspace()
        K = np.array([[float(v) for v in vec] for vec in vecs], dtype=float).T
    assert K.shape[1] == (l + 1) ** 2
    _KERNEL_CACHE[l] = (E, K)
    return E, K


def _eval_monomials(E: np.ndarray, pts: np.ndarray) -> np.ndarray:
    return np.prod(pts[:, None, :] ** E[None, :, :], axis=2)


def _eval_monomial_gradients(E: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """(n_pts, n_mon, 4) partial derivatives of the monomials."""
    out = np.zeros((len(pts), len(E), 4))
    for d in range(4):
        a = E[:, d]
        live = a > 0
        if not live.any():
            continue
        Ed = E[live].copy()
        Ed[:, d] -= 1
        out[:, live, d] = a[live] * np.prod(pts[:, None, :] ** Ed[None, :, :], axis=2)
    return out


def _quad_for(l_max: int) -> SphereQuad:
    """Quadrature dense enough for 1e-10 orthonormality at degree l_max."""
    if l_max <= 4:
        return default_sphere_quad()
    if l_max <= 6:
        return SphereQuad(24, 24, 48)
    if l_max <= 8:
        return SphereQuad(32, 32, 64)
    return SphereQuad(48, 48, 96)


class SphericalHarmonicBasis:
    """Orthonormal spherical harmonics up to degree l_max on a quadrature.

    Attributes
    ----------
    node_values : (n_nodes, K) basis functions at the quadrature nodes
    node_tangential_gradients : (n_nodes, K, 4) exact tangential gradients
    degrees : (K,) degree of each function
    eigenvalues_per_function : (K,) the positive numbers l(l+2)
    """

    def __init__(self, l_max: int, sphere: SphereQuad):
        if l_max > MAX_DEGREE:
            raise DegreeTooHigh(f"l_max is capped at {MAX_DEGREE}")
        self.l_max = int(l_max)
        self.sphere = sphere
        coeffs = []
        degrees = []
        w = sphere.weights
        for l in range(l_max + 1):
            E, K = harmonic_coefficients(l)
            V = _eval_monomials(E, sphere.nodes) @ K
            G = (V * w[:, None]).T @ V
            L = np.linalg.cholesky(G)
            C = K @ np.linalg.inv(L).T  # orthonormal columns under quadrature
            coeffs.append((E, C))
            degrees += [l] * C.shape[1]
        self._coeffs = coeffs
        self.degrees = np.array(degrees)
        self.eigenvalues_per_function = self.degrees * (self.degrees + 2.0)
        self.node_values = self.evaluate(sphere.nodes)
        self.node_tangential_gradients = self.tangential_gradients(sphere.nodes)

    @property
    def size(self) -> int:
        return len(self.degrees)

    def degree_slice(self, l: int) -> slice:
        start = sum((d + 1) ** 2 for d in range(l))
        return slice(start, start + (l + 1) ** 2)

    def eigenvalue(self, l: int) -> float:
        return -float(l * (l + 2))

    def multiplicity(self, l: int) -> int:
        return (l + 1) ** 2

    def evaluate(self, pts: np.ndarray) -> np.ndarray:
        """Values of all basis polynomials at points (n, 4)."""
        cols = [_eval_monomials(E, pts) @ C for E, C in self._coeffs]
        return np.concatenate(cols, axis=1)

    def ambient_gradients(self, pts: np.ndarray) -> np.ndarray:
        cols = []
        for E, C in self._coeffs:
            g = _eval_monomial_gradients(E, pts)  # (n, mon, 4)
            cols.append(np.einsum("nmd,mk->nkd", g, C))
        return np.concatenate(cols, axis=1)

    def tangential_gradients(self, pts: np.ndarray) -> np.ndarray:
        """grad^T phi = grad p - l p x on |x| = 1 (Euler's relation)."""
        vals = self.evaluate(pts)
        grads = self.ambient_gradients(pts)
        l = self.degrees[None, :, None]
        return grads - l * vals[:, :, None] * pts[:, None, :]

    def rayleigh_eigenvalues(self) -> np.ndarray:
        """Quadrature Rayleigh quotients -<grad^T phi, grad^T phi>; exact
        values are -l(l+2)."""
        w = self.sphere.weights
        tg = self.node_tangential_gradients
        num = np.einsum("s,skd,skd->k", w, tg, tg)
        den = np.einsum("s,sk,sk->k", w, self.node_values, self.node_values)
        return -num / den

    def sup_norms(self) -> np.ndarray:
        """Per-degree max |phi| over the quadrature nodes."""
        out = np.empty(self.l_max + 1)
        for l in range(self.l_max + 1):
            out[l] = np.abs(self.node_values[:, self.degree_slice(l)]).max()
        return out


_BASIS_CACHE: Dict[Tuple[int, int], SphericalHarmonicBasis] = {}


def build_basis(l_max: int, sphere: Optional[SphereQuad] = None) -> SphericalHarmonicBasis:
    """Basis up to degree l_max; picks an adequate quadrature when none given."""
    if l_max > MAX_DEGREE:
        raise DegreeTooHigh(f"l_max is capped at {MAX_DEGREE}")
    if sphere is None:
        sphere = _quad_for(l_max)
    key = (l_max, id(sphere))
    if key not in _BASIS_CACHE:
        _BASIS_CACHE[key] = SphericalHarmonicBasis(l_max, sphere)
    return _BASIS_CACHE[key]


def ambient_fd_laplacian(basis: SphericalHarmonicBasis, delta: float = 1e-3) -> np.ndarray:
    """Angular Laplacian of each basis function at the nodes, evaluated
    independently of the eigen-claim: Richardson-extrapolated ambient finite
    differences of the degree-zero homogeneous extension p(x)/|x|^l.
    """
    pts = basis.sphere.nodes

    def ext(x):
        r = np.linalg.norm(x, axis=-1)
        vals = basis.evaluate(x)
        return vals / r[:, None] ** basis.degrees[None, :]

    def second_diff(d):
        acc = -8.0 * ext(pts)
        for i in range(4):
            e = np.zeros(4)
            e[i] = d
            acc += ext(pts + e) + ext(pts - e)
        return acc / d ** 2

    d1 = second_diff(delta)
    d2 = second_diff(delta / 2)
    return (4.0 * d2 - d1) / 3.0


def eigenvalue_residuals(basis: SphericalHarmonicBasis) -> np.ndarray:
    """L2 norms of lap_{S^3} phi + l(l+2) phi per function (should be ~0)."""
    lap = ambient_fd_laplacian(basis)
    resid = lap + basis.eigenvalues_per_function[None, :] * basis.node_values
    w = basis.sphere.weights
    return np.sqrt(np.einsum("s,sk,sk->k", w, resid, resid))


# ---------------------------------------------------------------------------
# Expansion on annuli
# ---------------------------------------------------------------------------

@dataclass
class AnnulusExpansion:
    """Per-mode growing/decaying amplitudes of a shell-wise expansion.

    For mode (l, k): u ~ sum (grow * r^l + decay * r^{-l-2}) phi_k^l. The
    degree-0 pair is (constant, r^{-2}).
    """

    basis: SphericalHarmonicBasis
    radii: np.ndarray
    grow: np.ndarray     # (K,)
    decay: np.ndarray    # (K,)
    shell_coefficients: np.ndarray  # (n_r, K) raw projections
    fit_residual: float  # relative L2 over the annulus

    def reconstruct(self, annulus: AnnulusGrid) -> AnnulusField:
        r = annulus.radii[:, None]
        l = self.basis.degrees[None, :]
        radial = self.grow[None, :] * r ** l + self.decay[None, :] * r ** (-l - 2.0)
        phi = self.basis.evaluate(annulus.sphere.nodes)
        return AnnulusField(annulus, np.einsum("rk,sk->rs", radial, phi))

    def amplitude(self, l: int, k: int) -> Tuple[float, float]:
        sl = self.basis.degree_slice(l)
        return float(self.grow[sl][k]), float(self.decay[sl][k])


def annulus_expand(u: AnnulusField, basis: SphericalHarmonicBasis) -> AnnulusExpansion:
    """Fit growing/decaying amplitudes per mode to the shell projections.

    The input need not be exactly harmonic; the relative fit residual is
    reported. Raises IllConditionedFit when the annulus is thinner than a
    ratio of 1.5 (the two radial powers become collinear).
    """
    g = u.grid
    if g.n_r < 5:
        raise TooFewShells("need at least 5 shells")
    if g.radii[-1] / g.radii[0] < 1.5:
        raise IllConditionedFit("annulus ratio below 1.5")
    if u.m != 1:
        raise ValueError("annulus_expand expects a scalar field")
    if g.sphere is not basis.sphere:
        raise ValueError("basis must be built on the annulus sphere quadrature")
    vals = u.values.reshape(g.n_r, g.sphere.n)
    wphi = basis.node_values * g.sphere.weights[:, None]
    coeff = vals @ wphi  # (n_r, K)

    r = g.radii
    grow = np.empty(basis.size)
    decay = np.empty(basis.size)
    wr = np.sqrt(g.weights_r * r ** 3)
    for l in range(basis.l_max + 1):
        sl = basis.degree_slice(l)
        a1 = r ** l
        a2 = r ** (-l - 2.0)
        s1, s2 = np.abs(a1).max(), np.abs(a2).max()
        A = np.stack([a1 / s1, a2 / s2], axis=1) * wr[:, None]
        sol, *_ = np.linalg.lstsq(A, coeff[:, sl] * wr[:, None], rcond=None)
        grow[sl] = sol[0] / s1
        decay[sl] = sol[1] / s2

    exp = AnnulusExpansion(basis, r.copy(), grow, decay, coeff, 0.0)
    recon = exp.reconstruct(g)
    num = np.sqrt(np.einsum("rs,rs->", g.weights, (vals - recon.values) ** 2))
    den = np.sqrt(np.einsum("rs,rs->", g.weights, vals ** 2))
    exp.fit_residual = float(num / den) if den > 0 else 0.0
    return exp


# ---------------------------------------------------------------------------
# Power-profile norms and the annulus L^{2,1} / L^2 ratio
# ---------------------------------------------------------------------------

def power_norms(j: float, r: float, p_q: Tuple[float, float],
                n_samples: int = 200_000) -> float:
    """Norms of f_j(x) = |x|^j for the annulus estimates.

    (2, 2): L^2 over B_1 \\ B_r, by the exact radial integral.
    (2, 1): L^{2,1} over B_{1/2} \\ B_{2r}, by decreasing rearrangement of a
    finely sampled radial profile (the rearrangement is exact for monotone
    radial profiles up to the 1D sampling).
    """
    if not 0 < r < 0.125:
        raise BadRadius("need 0 < r < 1/8")
    if p_q == (2, 2):
        a = 2.0 * j + 4.0
        if abs(a) < 1e-14:
            val = 2 * np.pi ** 2 * np.log(1.0 / r)
        else:
            val = 2 * np.pi ** 2 * (1.0 - r ** a) / a
        return float(np.sqrt(val))
    if p_q == (2, 1):
        lo, hi = 2.0 * r, 0.5
        edges = np.geomspace(lo, hi, n_samples + 1)
        mid = np.sqrt(edges[:-1] * edges[1:])
        weights = 2 * np.pi ** 2 * (edges[1:] ** 4 - edges[:-1] ** 4) / 4.0
        sample = MeasuredSample(mid ** j, weights)
        return lorentz_norm(sample, 2, 1)
    raise ValueError("p_q must be (2, 2) or (2, 1)")


def annulus_radii_through(r: float, points=(0.5,), r_out: float = 1.0,
                          max_ratio: float = 1.1) -> np.ndarray:
    """Geometric-ish radii from r to r_out passing exactly through the given
    intermediate radii (so subrange norms use exact breakpoints)."""
    knots = sorted({r, r_out, *points, 2 * r})
    segs = []
    for lo, hi in zip(knots[:-1], knots[1:]):
        count = max(4, int(np.ceil(np.log(hi / lo) / np.log(max_ratio))) + 1)
        segs.append(np.geomspace(lo, hi, count)[:-1])
    segs.append(np.array([knots[-1]]))
    return np.concatenate(segs)


def _subrange_sample(u: AnnulusField, lo: float, hi: float) -> MeasuredSample:
    g = u.grid
    sel = (g.radii >= lo - 1e-12) & (g.radii <= hi + 1e-12)
    if sel.sum() < 2:
        raise TooFewShells("subrange contains fewer than 2 shells")
    radii = g.radii[sel]
    wr = np.empty_like(radii)
    dr = np.diff(radii)
    wr[0] = dr[0] / 2
    wr[-1] = dr[-1] / 2
    wr[1:-1] = (dr[:-1] + dr[1:]) / 2
    w = wr[:, None] * g.sphere.weights[None, :] * radii[:, None] ** 3
    vals = np.abs(u.values.reshape(g.n_r, g.sphere.n)[sel])
    return MeasuredSample(vals.ravel(), w.ravel())


def lemma_l2_ratio(u: AnnulusField, mean_tol: float = 1e-8):
    """(||u||_{L^{2,1}(B_{1/2} \\ B_{2r})}, ||u||_{L^2(B_1 \\ B_r)}, ratio)
    for a function on an annulus grid spanning [r, 1] whose means over both
    boundary spheres vanish.
    """
    g = u.grid
    vals = u.values.reshape(g.n_r, g.sphere.n)
    scale = np.abs(vals).max()
    area = g.sphere.weights.sum()
    for shell in (0, -1):
        mean = float(np.dot(g.sphere.weights, vals[shell]) / area)
        if abs(mean) > mean_tol * max(1.0, scale):
            raise MeanNotZero(f"boundary sphere mean {mean:g} exceeds tolerance")
    r = g.radii[0]
    l2_full = float(np.sqrt(np.einsum("rs,rs->", g.weights, vals ** 2)))
    if scale == 0.0:
        return 0.0, 0.0, 0.0
    l21_half = lorentz_norm(_subrange_sample(u, 2 * r, 0.5), 2, 1)
    return l21_half, l2_full, l21_half / l2_full
