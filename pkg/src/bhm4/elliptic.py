"""Poisson solves on the ball lattice and the Hodge-type splitting of
matrix-valued 1-forms.

The solver is matrix-free preconditioned conjugate gradient (diagonal
preconditioner, 1e-10 relative tolerance, 10 000 iteration cap) acting on
vectors compressed to the interior node set; Dirichlet data enters through
the right-hand side. The Hodge splitting omega = d alpha + d* beta +
harmonic remainder solves

    lap alpha    = div omega           (zero Dirichlet)
    lap beta_ij  = d_i omega_j - d_j omega_i   (zero Dirichlet, 6 pairs)

with (d* beta)_i = sum_j d_j beta_{ji}; the remainder is reported, never
assumed to vanish.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels
from .errors import SolverDiverged
from .grid import BallGrid4, Field, gradient

PAIRS = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))


def ddiff(values: np.ndarray, axis: int, h: float) -> np.ndarray:
    """Centered difference along a grid axis; garbage on the wrap-around ring
    (callers mask it)."""
    return (np.roll(values, -1, axis=axis) - np.roll(values, 1, axis=axis)) / (2 * h)


class PoissonSolver:
    """CG for -lap x = b on a fixed node set with zero exterior values."""

    def __init__(self, grid: BallGrid4, domain: Optional[np.ndarray] = None):
        self.grid = grid
        self.domain = grid.interior_mask if domain is None else domain
        self.idx = np.flatnonzero(np.ascontiguousarray(self.domain).reshape(-1))
        self.n_nodes = len(self.idx)
        self.stats: dict = {}

    def _neg_lap(self, x: np.ndarray, box: np.ndarray, lap_box: np.ndarray) -> np.ndarray:
        kernels.scatter(x, self.idx, box.reshape(-1, box.shape[-1]))
        kernels.lap4(box, lap_box, 1.0 / self.grid.h ** 2)
        out = np.empty_like(x)
        kernels.gather(lap_box.reshape(-1, box.shape[-1]), self.idx, out)
        return -out

    def solve(self, b: np.ndarray, tol: float = 1e-10, maxiter: int = 10_000) -> np.ndarray:
        """Solve for each trailing component of b, shape (n_nodes, m)."""
        b = np.ascontiguousarray(b, dtype=np.float64)
        if b.ndim == 1:
            b = b[:, None]
        m = b.shape[1]
        box = np.zeros(self.grid.shape + (m,))
        lap_box = np.empty_like(box)
        # diagonal preconditioner: constant 8/h^2 (uniform lattice)
        minv = self.grid.h ** 2 / 8.0
        x = np.zeros_like(b)
        r = b.copy()
        z = r * minv
        p = z.copy()
        rz = np.einsum("nm,nm->m", r, z)
        bnorm = np.sqrt(np.einsum("nm,nm->m", b, b))
        target = tol * np.where(bnorm > 0, bnorm, np.inf)
        iterations = 0
        for it in range(maxiter):
            rn = np.sqrt(np.einsum("nm,nm->m", r, r))
            if np.all(rn <= target):
                break
            ap = self._neg_lap(p, box, lap_box)
            pap = np.einsum("nm,nm->m", p, ap)
            alpha = np.where(pap > 0, rz / np.where(pap > 0, pap, 1.0), 0.0)
            x += alpha * p
            r -= alpha * ap
            z = r * minv
            rz_new = np.einsum("nm,nm->m", r, z)
            beta = np.where(rz > 0, rz_new / np.where(rz > 0, rz, 1.0), 0.0)
            p = z + beta * p
            rz = rz_new
            iterations = it + 1
        else:
            raise SolverDiverged(
                f"CG did not reach tol={tol:g} in {maxiter} iterations "
                f"(residual {float((rn / np.where(bnorm > 0, bnorm, 1.0)).max()):.3e})")
        self.stats = {"iterations": iterations,
                      "rel_residual": float(np.max(np.where(
                          bnorm > 0, rn / np.where(bnorm > 0, bnorm, 1.0), 0.0)))}
        return x if m > 1 else x[:, 0]


def poisson_dirichlet(rhs: Field, boundary_value: Optional[Field] = None,
                      tol: float = 1e-10, maxiter: int = 10_000) -> Field:
    """Solve lap u = rhs on the interior node set, u = boundary_value off it.

    The discrete Laplacian of the result matches rhs on the interior nodes to
    the solver tolerance; off the interior the result equals the boundary
    field exactly.
    """
    g = rhs.grid
    solver = PoissonSolver(g)
    D = solver.domain
    m = rhs.m
    if boundary_value is None:
        gval = np.zeros(g.shape + (m,))
    else:
        if boundary_value.comp_shape != rhs.comp_shape:
            raise ValueError("boundary_value component shape mismatch")
        gval = boundary_value.values.reshape(g.shape + (m,)).copy()
    gmask = gval.copy()
    gmask[D] = 0.0
    lap_g = np.empty_like(gmask)
    kernels.lap4(gmask, lap_g, 1.0 / g.h ** 2)
    b = -(rhs.values.reshape(g.shape + (m,))[D]) + lap_g[D]
    x = solver.solve(b.reshape(-1, m), tol=tol, maxiter=maxiter)
    u = gmask
    u[D] = x.reshape(-1, m)
    out = Field(g, u.reshape(g.shape + rhs.comp_shape), g.ball_mask.copy())
    return out


def _is_antisymmetric_matrix_valued(omega: Field) -> bool:
    """True when the inner component shape is (k, k, ...) with values
    antisymmetric under the matrix transpose, pointwise."""
    comp = omega.comp_shape
    if len(comp) < 3 or comp[0] != comp[1]:
        return False
    v = omega.values
    scale = np.abs(v).max()
    return bool(scale == 0.0
                or np.abs(v + np.swapaxes(v, 4, 5)).max() <= 1e-10 * scale)


@dataclass
class HodgeParts:
    """Splitting omega = d alpha + d* beta + remainder.

    alpha is antisymmetric-matrix valued whenever div omega is (enforced by
    antisymmetrizing the right-hand side and the solution); beta is stored on
    the 6 independent index pairs of PAIRS.
    """

    alpha: Field
    beta: Optional[Field]
    d_alpha: Field
    dstar_beta: Field
    remainder: Field
    remainder_rel: float
    solver_stats: dict


def hodge_decompose(omega: Field, store_beta: bool = True,
                    tol: float = 1e-10, maxiter: int = 10_000) -> HodgeParts:
    """Split a 1-form field (component shape inner + (4,)) as d alpha + d* beta.

    Both potentials take zero Dirichlet data on the margin collar; the
    discrete-harmonic remainder over the interior is returned with its
    relative norm.
    """
    comp = omega.comp_shape
    if not comp or comp[-1] != 4:
        raise ValueError("hodge_decompose expects a trailing 1-form axis")
    inner = comp[:-1]
    mi = int(np.prod(inner, dtype=int)) if inner else 1
    g = omega.grid
    h = g.h
    solver = PoissonSolver(g)
    D = solver.domain
    vals = omega.values.reshape(g.shape + (mi, 4))
    antisym = _is_antisymmetric_matrix_valued(omega)

    # alpha: lap alpha = div omega
    div = np.zeros(g.shape + (mi,))
    for i in range(4):
        div += ddiff(vals[..., i], i, h)
    if antisym:
        dm = div.reshape(g.shape + inner)
        div = (0.5 * (dm - np.swapaxes(dm, 4, 5))).reshape(g.shape + (mi,))
    stats = {}
    alpha_flat = solver.solve(-div[D].reshape(-1, mi), tol=tol, maxiter=maxiter)
    stats["alpha"] = dict(solver.stats)
    alpha_vals = np.zeros(g.shape + (mi,))
    alpha_vals[D] = alpha_flat.reshape(-1, mi)
    if antisym:
        am = alpha_vals.reshape(g.shape + inner)
        alpha_vals = (0.5 * (am - np.swapaxes(am, 4, 5))).reshape(g.shape + (mi,))
    alpha = Field(g, alpha_vals.reshape(g.shape + inner), np.ones(g.shape, dtype=bool))

    # beta pairs: lap beta_ij = d_i omega_j - d_j omega_i
    dstar = np.zeros(g.shape + (mi, 4))
    beta_store = np.zeros(g.shape + (mi, 6)) if store_beta else None
    for p, (i, j) in enumerate(PAIRS):
        rhs = ddiff(vals[..., j], i, h) - ddiff(vals[..., i], j, h)
        bp = solver.solve(-rhs[D].reshape(-1, mi), tol=tol, maxiter=maxiter)
        stats[f"beta_{i}{j}"] = dict(solver.stats)
        bfull = np.zeros(g.shape + (mi,))
        bfull[D] = bp.reshape(-1, mi)
        if beta_store is not None:
            beta_store[..., p] = bfull
        # (d* beta)_i = sum_j d_j beta_{ji}
        dstar[..., j] += ddiff(bfull, i, h)
        dstar[..., i] -= ddiff(bfull, j, h)

    d_alpha = gradient(alpha)
    dstar_field = Field(g, dstar.reshape(g.shape + comp), d_alpha.valid.copy())
    rem_vals = (omega.values - d_alpha.values.reshape(g.shape + comp)
                - dstar_field.values)
    rem_valid = omega.valid & d_alpha.valid & g.interior_mask
    rem_vals[~rem_valid] = 0.0
    remainder = Field(g, rem_vals, rem_valid)
    num = np.sqrt(np.sum(rem_vals[rem_valid] ** 2))
    den = np.sqrt(np.sum(omega.values.reshape(g.shape + comp)[rem_valid] ** 2))
    beta_field = None
    if beta_store is not None:
        beta_field = Field(g, beta_store.reshape(g.shape + inner + (6,)),
                           np.ones(g.shape, dtype=bool))
    return HodgeParts(
        alpha=alpha,
        beta=beta_field,
        d_alpha=d_alpha,
        dstar_beta=dstar_field,
        remainder=remainder,
        remainder_rel=float(num / den) if den > 0 else 0.0,
        solver_stats=stats,
    )
