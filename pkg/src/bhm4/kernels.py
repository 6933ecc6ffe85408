"""Numba stencil kernels for the 4D box lattice.

All kernels operate on arrays of shape (n0, n1, n2, n3, m) with the component
axis last. They write the raw centered-difference stencil on the index
interior (one or two layers skipped at the box edge) and zero elsewhere;
validity masking is the caller's job. Arrays must be C-contiguous float64.
"""

import numpy as np
from numba import njit, prange


@njit(parallel=True, cache=True)
def lap4(v, out, inv_h2):
    """Centered 9-point Laplacian. Writes zeros on the outermost index layer."""
    n0, n1, n2, n3, m = v.shape
    for i0 in prange(n0):
        on0 = 1 <= i0 < n0 - 1
        for i1 in range(n1):
            for i2 in range(n2):
                for i3 in range(n3):
                    ok = (on0 and 1 <= i1 < n1 - 1
                          and 1 <= i2 < n2 - 1 and 1 <= i3 < n3 - 1)
                    for c in range(m):
                        if ok:
                            s = (v[i0 + 1, i1, i2, i3, c] + v[i0 - 1, i1, i2, i3, c]
                                 + v[i0, i1 + 1, i2, i3, c] + v[i0, i1 - 1, i2, i3, c]
                                 + v[i0, i1, i2 + 1, i3, c] + v[i0, i1, i2 - 1, i3, c]
                                 + v[i0, i1, i2, i3 + 1, c] + v[i0, i1, i2, i3 - 1, c]
                                 - 8.0 * v[i0, i1, i2, i3, c])
                            out[i0, i1, i2, i3, c] = s * inv_h2
                        else:
                            out[i0, i1, i2, i3, c] = 0.0


@njit(parallel=True, cache=True)
def grad4(v, out, inv_2h):
    """Centered gradient; out has shape (n0, n1, n2, n3, m, 4)."""
    n0, n1, n2, n3, m = v.shape
    for i0 in prange(n0):
        on0 = 1 <= i0 < n0 - 1
        for i1 in range(n1):
            for i2 in range(n2):
                for i3 in range(n3):
                    ok = (on0 and 1 <= i1 < n1 - 1
                          and 1 <= i2 < n2 - 1 and 1 <= i3 < n3 - 1)
                    for c in range(m):
                        if ok:
                            out[i0, i1, i2, i3, c, 0] = (v[i0 + 1, i1, i2, i3, c]
                                                         - v[i0 - 1, i1, i2, i3, c]) * inv_2h
                            out[i0, i1, i2, i3, c, 1] = (v[i0, i1 + 1, i2, i3, c]
                                                         - v[i0, i1 - 1, i2, i3, c]) * inv_2h
                            out[i0, i1, i2, i3, c, 2] = (v[i0, i1, i2 + 1, i3, c]
                                                         - v[i0, i1, i2 - 1, i3, c]) * inv_2h
                            out[i0, i1, i2, i3, c, 3] = (v[i0, i1, i2, i3 + 1, c]
                                                         - v[i0, i1, i2, i3 - 1, c]) * inv_2h
                        else:
                            for d in range(4):
                                out[i0, i1, i2, i3, c, d] = 0.0


@njit(parallel=True, cache=True)
def div4(v, out, inv_2h):
    """Centered divergence over the trailing direction axis.

    v has shape (n0, n1, n2, n3, m, 4); out has shape (n0, n1, n2, n3, m).
    """
    n0, n1, n2, n3, m, _ = v.shape
    for i0 in prange(n0):
        on0 = 1 <= i0 < n0 - 1
        for i1 in range(n1):
            for i2 in range(n2):
                for i3 in range(n3):
                    ok = (on0 and 1 <= i1 < n1 - 1
                          and 1 <= i2 < n2 - 1 and 1 <= i3 < n3 - 1)
                    for c in range(m):
                        if ok:
                            s = (v[i0 + 1, i1, i2, i3, c, 0] - v[i0 - 1, i1, i2, i3, c, 0]
                                 + v[i0, i1 + 1, i2, i3, c, 1] - v[i0, i1 - 1, i2, i3, c, 1]
                                 + v[i0, i1, i2 + 1, i3, c, 2] - v[i0, i1, i2 - 1, i3, c, 2]
                                 + v[i0, i1, i2, i3 + 1, c, 3] - v[i0, i1, i2, i3 - 1, c, 3])
                            out[i0, i1, i2, i3, c] = s * inv_2h
                        else:
                            out[i0, i1, i2, i3, c] = 0.0


@njit(parallel=True, cache=True)
def hess4(v, out, inv_h2, inv_4h2):
    """Centered second derivatives; out shape (n0, n1, n2, n3, m, 4, 4)."""
    n0, n1, n2, n3, m = v.shape
    for i0 in prange(n0):
        on0 = 1 <= i0 < n0 - 1
        for i1 in range(n1):
            for i2 in range(n2):
                for i3 in range(n3):
                    ok = (on0 and 1 <= i1 < n1 - 1
                          and 1 <= i2 < n2 - 1 and 1 <= i3 < n3 - 1)
                    for c in range(m):
                        if not ok:
                            for a in range(4):
                                for b in range(4):
                                    out[i0, i1, i2, i3, c, a, b] = 0.0
                            continue
                        vc = v[i0, i1, i2, i3, c]
                        out[i0, i1, i2, i3, c, 0, 0] = (v[i0 + 1, i1, i2, i3, c]
                                                        - 2.0 * vc + v[i0 - 1, i1, i2, i3, c]) * inv_h2
                        out[i0, i1, i2, i3, c, 1, 1] = (v[i0, i1 + 1, i2, i3, c]
                                                        - 2.0 * vc + v[i0, i1 - 1, i2, i3, c]) * inv_h2
                        out[i0, i1, i2, i3, c, 2, 2] = (v[i0, i1, i2 + 1, i3, c]
                                                        - 2.0 * vc + v[i0, i1, i2 - 1, i3, c]) * inv_h2
                        out[i0, i1, i2, i3, c, 3, 3] = (v[i0, i1, i2, i3 + 1, c]
                                                        - 2.0 * vc + v[i0, i1, i2, i3 - 1, c]) * inv_h2
                        d01 = (v[i0 + 1, i1 + 1, i2, i3, c] - v[i0 + 1, i1 - 1, i2, i3, c]
                               - v[i0 - 1, i1 + 1, i2, i3, c] + v[i0 - 1, i1 - 1, i2, i3, c]) * inv_4h2
                        d02 = (v[i0 + 1, i1, i2 + 1, i3, c] - v[i0 + 1, i1, i2 - 1, i3, c]
                               - v[i0 - 1, i1, i2 + 1, i3, c] + v[i0 - 1, i1, i2 - 1, i3, c]) * inv_4h2
                        d03 = (v[i0 + 1, i1, i2, i3 + 1, c] - v[i0 + 1, i1, i2, i3 - 1, c]
                               - v[i0 - 1, i1, i2, i3 + 1, c] + v[i0 - 1, i1, i2, i3 - 1, c]) * inv_4h2
                        d12 = (v[i0, i1 + 1, i2 + 1, i3, c] - v[i0, i1 + 1, i2 - 1, i3, c]
                               - v[i0, i1 - 1, i2 + 1, i3, c] + v[i0, i1 - 1, i2 - 1, i3, c]) * inv_4h2
                        d13 = (v[i0, i1 + 1, i2, i3 + 1, c] - v[i0, i1 + 1, i2, i3 - 1, c]
                               - v[i0, i1 - 1, i2, i3 + 1, c] + v[i0, i1 - 1, i2, i3 - 1, c]) * inv_4h2
                        d23 = (v[i0, i1, i2 + 1, i3 + 1, c] - v[i0, i1, i2 + 1, i3 - 1, c]
                               - v[i0, i1, i2 - 1, i3 + 1, c] + v[i0, i1, i2 - 1, i3 - 1, c]) * inv_4h2
                        out[i0, i1, i2, i3, c, 0, 1] = d01
                        out[i0, i1, i2, i3, c, 1, 0] = d01
                        out[i0, i1, i2, i3, c, 0, 2] = d02
                        out[i0, i1, i2, i3, c, 2, 0] = d02
                        out[i0, i1, i2, i3, c, 0, 3] = d03
                        out[i0, i1, i2, i3, c, 3, 0] = d03
                        out[i0, i1, i2, i3, c, 1, 2] = d12
                        out[i0, i1, i2, i3, c, 2, 1] = d12
                        out[i0, i1, i2, i3, c, 1, 3] = d13
                        out[i0, i1, i2, i3, c, 3, 1] = d13
                        out[i0, i1, i2, i3, c, 2, 3] = d23
                        out[i0, i1, i2, i3, c, 3, 2] = d23


@njit(parallel=True, cache=True)
def gather(v, idx, out):
    """out[j, c] = v_flat[idx[j], c] where v is viewed as (N, m)."""
    nj = idx.shape[0]
    m = v.shape[1]
    for j in prange(nj):
        for c in range(m):
            out[j, c] = v[idx[j], c]


@njit(parallel=True, cache=True)
def scatter(x, idx, v):
    """v_flat[idx[j], c] = x[j, c]; v must be pre-zeroed elsewhere."""
    nj = idx.shape[0]
    m = x.shape[1]
    for j in prange(nj):
        for c in range(m):
            v[idx[j], c] = x[j, c]
