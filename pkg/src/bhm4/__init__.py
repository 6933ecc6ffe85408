"""bhm4: a desk-scale numerical laboratory for fourth-order geometric
variational problems (biharmonic-type maps) on the unit ball of R^4.

Subpackages cover target-manifold geometry, 4D finite differences and polar
annulus quadrature, Poisson/Hodge solves, tension fields and their normal
form, a constrained heat flow, Lorentz rearrangement norms, spherical
harmonics on S^3, integral identities on annuli and a concentration /
bubble-decomposition pipeline.
"""

__version__ = "0.1.0"

from . import (  # noqa: F401
    elliptic,
    grid,
    lorentz,
    manifold,
    s3harmonics,
)
