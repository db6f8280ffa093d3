"""Adaptive Gauss-Legendre quadrature on straight segments and circles.

All period and residue integrals in this package run through here.  The
core routine doubles the node count until two successive approximations
agree; when doubling stalls (integrand with nearby singularities off the
ends of a long segment) it bisects the segment and recurses, which restores
geometric convergence.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .errors import QuadratureFailure

GL_SIZES = (24, 48, 96, 192, 384, 768, 1536)


@lru_cache(maxsize=32)
def _gl_nodes(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def integrate_segment(f, z0, z1, tol=1e-12, max_depth=10, _depth=0):
    """Integral of vector-valued f(lambda) along the segment [z0, z1].

    f maps an array of points to an array whose last axis indexes the
    points.  Doubles Gauss-Legendre size until converged, bisecting on
    stall.
    """
    z0, z1 = complex(z0), complex(z1)
    h = 0.5 * (z1 - z0)
    mid = 0.5 * (z0 + z1)
    prev = None
    for n in GL_SIZES:
        x, w = _gl_nodes(n)
        vals = f(mid + h * x)
        cur = h * np.tensordot(vals, w, axes=([-1], [0]))
        if prev is not None:
            err = np.max(np.abs(cur - prev))
            scale = max(np.max(np.abs(cur)), 1.0)
            if err <= tol * scale:
                return cur
        prev = cur
    if _depth >= max_depth:
        raise QuadratureFailure(
            f"segment integral fails to converge near [{z0:.4g}, {z1:.4g}]")
    left = integrate_segment(f, z0, mid, tol, max_depth, _depth + 1)
    right = integrate_segment(f, mid, z1, tol, max_depth, _depth + 1)
    return left + right


def integrate_pieces(f, pieces, tol=1e-12):
    """Sum of signed segment integrals over sheet-tracked pieces.

    Each piece is (z_start, z_end, sign); f(points, sign) returns the
    integrand sampled on the indicated sheet.
    """
    total = None
    for z0, z1, sign in pieces:
        part = integrate_segment(lambda z: f(z, sign), z0, z1, tol=tol)
        total = part if total is None else total + part
    return total


def integrate_substituted(f, tol=1e-12):
    """Integral of f over t in [-pi/2, pi/2] by adaptive Gauss-Legendre.

    Used with the sine substitution that removes inverse square-root
    endpoint singularities of cut-collapsed period integrals.
    """
    return integrate_segment(f, -np.pi / 2, np.pi / 2, tol=tol)


def integrate_circle(f, center, radius, n_start=64, tol=1e-11, max_n=16384,
                     phase=0.0):
    """Counterclockwise contour integral of f around a circle.

    Trapezoid rule, doubled until converged; spectrally accurate for
    integrands analytic in an annulus around the contour.  A nonzero phase
    rotates the nodes, which keeps them off straight singular lines
    through the center.
    """
    center = complex(center)
    n = n_start
    prev = None
    while n <= max_n:
        th = phase + 2.0 * np.pi * np.arange(n) / n
        z = center + radius * np.exp(1j * th)
        dz = 1j * radius * np.exp(1j * th) * (2.0 * np.pi / n)
        cur = np.tensordot(f(z), dz, axes=([-1], [0]))
        if prev is not None:
            err = np.max(np.abs(cur - prev))
            scale = max(np.max(np.abs(cur)), 1.0)
            if err <= tol * scale:
                return cur
        prev = cur
        n *= 2
    raise QuadratureFailure(
        f"circle integral at {center:.4g} (radius {radius:.3g}) stalled")
