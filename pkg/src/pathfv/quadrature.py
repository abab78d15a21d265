"""Adaptive composite Gauss-Legendre quadrature for vector-valued integrands."""

from functools import lru_cache

import numpy as np

from .errors import QuadratureError


@lru_cache(maxsize=8)
def _gl_nodes(npts):
    x, w = np.polynomial.legendre.leggauss(npts)
    return x, w


def composite_gl(f, a, b, panels, npts=8):
    """Composite Gauss-Legendre estimate of int_a^b f(s) ds.

    ``f`` maps an array of points (m,) to values (m, ...); the integral is
    taken componentwise.
    """
    x, w = _gl_nodes(npts)
    edges = np.linspace(a, b, panels + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1] - edges[0])
    pts = (mid[:, None] + half * x[None, :]).ravel()
    vals = f(pts)
    vals = vals.reshape((panels, len(x)) + vals.shape[1:])
    return half * np.einsum("j,pj...->...", w, vals)


def adaptive_gl(f, a, b, atol=1e-12, rtol=1e-10, npts=8, max_depth=12):
    """Dyadically refined composite Gauss-Legendre integral.

    Refines until two successive estimates differ by less than
    ``max(atol, rtol * |I|)`` in the max norm, else raises
    ``QuadratureError`` with the achieved difference attached.
    """
    prev = composite_gl(f, a, b, 1, npts)
    for depth in range(1, max_depth + 1):
        cur = composite_gl(f, a, b, 2**depth, npts)
        diff = np.max(np.abs(cur - prev))
        if diff < max(atol, rtol * np.max(np.abs(cur))):
            return cur
        prev = cur
    raise QuadratureError(
        f"quadrature did not converge within {max_depth} refinements",
        achieved=float(diff),
    )
