"""Families of paths joining pairs of states, and the path integral of A.

A path family Phi(s; u_l, u_r), s in [0, 1], fixes the meaning of the
nonconservative product across a discontinuity: the jump condition for a
shock of speed xi is

    xi (u_r - u_l) = int_0^1 A(Phi(s; u_l, u_r)) dPhi/ds (s; u_l, u_r) ds.

Every family satisfies Phi(0) = u_l, Phi(1) = u_r and Phi(s; u, u) = u.
Families declare whether they follow integral curves of the linearly
degenerate field (``follows_equilibria``) and whether the topography
component stays frozen when it is continuous (``preserves_flat_sigma``);
the flags are metadata asserted by tests, never trusted blindly.

``path_integral`` evaluates the integral above, preferring a closed form
when the (path, system) pair provides one and falling back to adaptive
Gauss-Legendre quadrature applied per leg (piecewise paths have a tangent
jump between legs, so each leg is integrated separately).
"""

from functools import lru_cache

import numpy as np

from .errors import DomainError, PathConstructionError
from .quadrature import adaptive_gl
from .systems import ShallowWaterSystem, SimplifiedSystem, TwoLayerSystem


class PathFamily:
    """Base class; subclasses implement ``evaluate`` and ``tangent``.

    ``breakpoints`` lists the leg boundaries in s (smooth pieces between
    them), ``epsilon`` is the shape parameter for families that have one.
    """

    name = "path"
    breakpoints = (0.0, 1.0)
    follows_equilibria = False
    preserves_flat_sigma = True
    epsilon = None

    def evaluate(self, s, u_l, u_r):
        raise NotImplementedError

    def tangent(self, s, u_l, u_r):
        raise NotImplementedError

    def closed_form_integral(self, system, u_l, u_r):
        """Closed form of int A(Phi) Phi_s ds, or None if unavailable."""
        return None

    def __repr__(self):
        eps = "" if self.epsilon is None else f"(epsilon={self.epsilon})"
        return f"<{type(self).__name__}{eps}>"


def _sdim(s, u):
    """Broadcast path parameter against a single state pair."""
    s = np.asarray(s, dtype=float)
    return s[..., None], s.shape


class SegmentsPath(PathFamily):
    """Straight segments Phi = u_l + s (u_r - u_l); works for every system."""

    name = "segments"

    def evaluate(self, s, u_l, u_r):
        u_l = np.asarray(u_l, dtype=float)
        u_r = np.asarray(u_r, dtype=float)
        sb, _ = _sdim(s, u_l)
        return u_l + sb * (u_r - u_l)

    def tangent(self, s, u_l, u_r):
        u_l = np.asarray(u_l, dtype=float)
        u_r = np.asarray(u_r, dtype=float)
        sb, sshape = _sdim(s, u_l)
        return np.broadcast_to(u_r - u_l, sshape + u_l.shape).copy()

    def closed_form_integral(self, system, u_l, u_r):
        u_l = np.asarray(u_l, dtype=float)
        u_r = np.asarray(u_r, dtype=float)
        d = u_r - u_l
        if isinstance(system, SimplifiedSystem):
            h_l, q_l = u_l[..., 0], u_l[..., 1]
            h_r, q_r = u_r[..., 0], u_r[..., 1]
            dh, dq = d[..., 0], d[..., 1]
            # mean of q(s) h(s) along the segment (quadratic in s)
            qh_mean = q_l * h_l + 0.5 * (q_l * dh + h_l * dq) + dq * dh / 3.0
            out = np.empty_like(u_l)
            out[..., 0] = dq
            out[..., 1] = q_r**2 / h_r - q_l**2 / h_l + qh_mean * dh
            return out
        if isinstance(system, ShallowWaterSystem):
            hbar = 0.5 * (u_l[..., 0] + u_r[..., 0])
            F = system.flux(u_r) - system.flux(u_l)
            out = np.zeros_like(u_l)
            out[..., 0] = F[..., 0]
            out[..., 1] = F[..., 1] - system.g * hbar * d[..., 2]
            return out
        if isinstance(system, TwoLayerSystem):
            return _two_layer_integral(system, u_l, u_r, 0.5 * (u_l[..., 0] + u_r[..., 0]),
                                       0.5 * (u_l[..., 2] + u_r[..., 2]))
        return None


def _two_layer_integral(system, u_l, u_r, c1_coeff, c2_coeff):
    """Two-layer path integral given the coupling coefficients.

    The per-layer parts are exact flux differences (they do not depend on
    the path); the coupling terms are g * c1_coeff * dh2 and
    r * g * c2_coeff * dh1 where the coefficients encode
    int Phi_h1 dPhi_h2 and int Phi_h2 dPhi_h1.
    """
    F = system.conservative_flux(u_r) - system.conservative_flux(u_l)
    dh1 = u_r[..., 0] - u_l[..., 0]
    dh2 = u_r[..., 2] - u_l[..., 2]
    out = np.empty_like(np.asarray(u_l, dtype=float))
    out[..., 0] = F[..., 0]
    out[..., 1] = F[..., 1] + system.g * c1_coeff * dh2
    out[..., 2] = F[..., 2]
    out[..., 3] = F[..., 3] + system.r * system.g * c2_coeff * dh1
    return out


class TwoSegmentPath(PathFamily):
    """L-shaped path for 2-component states: first the thickness, then the flow.

    For s in [0, 1/2] the path moves h from h_l to h_r at frozen q = q_l;
    for s in [1/2, 1] it moves q at frozen h = h_r.  The induced jump
    conditions for the simplified system are

        xi [h] = [q],      xi [q] = [q^2/h] + q_l [h^2/2].
    """

    name = "two_segment"
    breakpoints = (0.0, 0.5, 1.0)

    def evaluate(self, s, u_l, u_r):
        u_l = np.asarray(u_l, dtype=float)
        u_r = np.asarray(u_r, dtype=float)
        s = np.asarray(s, dtype=float)
        h = np.where(s <= 0.5, u_l[..., 0] + 2.0 * s * (u_r[..., 0] - u_l[..., 0]),
                     u_r[..., 0])
        q = np.where(s <= 0.5, u_l[..., 1],
                     u_l[..., 1] + (2.0 * s - 1.0) * (u_r[..., 1] - u_l[..., 1]))
        return np.stack([h, q], axis=-1)

    def tangent(self, s, u_l, u_r):
        u_l = np.asarray(u_l, dtype=float)
        u_r = np.asarray(u_r, dtype=float)
        s = np.asarray(s, dtype=float)
        th = np.where(s <= 0.5, 2.0 * (u_r[..., 0] - u_l[..., 0]), 0.0)
        tq = np.where(s <= 0.5, 0.0, 2.0 * (u_r[..., 1] - u_l[..., 1]))
        return np.stack([th, tq], axis=-1)

    def closed_form_integral(self, system, u_l, u_r):
        if not isinstance(system, SimplifiedSystem):
            return None
        u_l = np.asarray(u_l, dtype=float)
        u_r = np.asarray(u_r, dtype=float)
        h_l, q_l = u_l[..., 0], u_l[..., 1]
        h_r, q_r = u_r[..., 0], u_r[..., 1]
        out = np.empty_like(u_l)
        out[..., 0] = q_r - q_l
        out[..., 1] = q_r**2 / h_r - q_l**2 / h_l + q_l * 0.5 * (h_r**2 - h_l**2)
        return out


class SkewedSegmentsPath(PathFamily):
    """One-parameter deformation of segments for the two-layer system.

    The thickness pair (h1, h2) follows the curve

        h2 = h2_l + ( t + eps * (h1^2 - h1_l^2)/(h1_r^2 - h1_l^2) )
                    * (h2_r - h2_l) / (1 + eps),
        t  = (h1 - h1_l)/(h1_r - h1_l),

    traversed with h1 linear in s, which blends linear and quadratic
    interpolation with weight eps >= 0.  The flow components q1, q2 are
    straight segments (the jump conditions do not depend on them).  At
    eps = 0 the family reduces exactly to plain segments.

    The coupling integrals have the closed forms

        int Phi_h1 dPhi_h2 = C1 * (h2_r - h2_l),
        int Phi_h2 dPhi_h1 = C2 * (h1_r - h1_l),

        C1 = ((3+4e)(h1_l^2 + h1_r^2) + 2(3+2e) h1_l h1_r)
             / (6 (1+e) (h1_l + h1_r)),
        C2 = (h1_r ((3+4e) h2_l + (3+2e) h2_r)
              + h1_l ((3+2e) h2_l + (3+4e) h2_r)) / (6 (1+e) (h1_l + h1_r)),

    which satisfy the integration-by-parts identity
    C1 dh2 + C2 dh1 = h1_r h2_r - h1_l h2_l.
    """

    name = "skewed_segments"

    def __init__(self, epsilon=0.0):
        if epsilon < 0:
            raise DomainError("skew parameter must be >= 0")
        self.epsilon = float(epsilon)

    def _eta(self, s, h1_l, h1_r):
        e = self.epsilon
        # smooth through coincident thicknesses: (h1^2-h1_l^2)/(h1_r^2-h1_l^2)
        # equals s(2 h1_l + s dh1)/(h1_l + h1_r) with h1 linear in s
        dh1 = h1_r - h1_l
        quad = s * (2.0 * h1_l + s * dh1) / (h1_l + h1_r)
        return (s + e * quad) / (1.0 + e)

    def _eta_ds(self, s, h1_l, h1_r):
        e = self.epsilon
        dh1 = h1_r - h1_l
        h1 = h1_l + s * dh1
        return (1.0 + 2.0 * e * h1 / (h1_l + h1_r)) / (1.0 + e)

    def evaluate(self, s, u_l, u_r):
        u_l = np.asarray(u_l, dtype=float)
        u_r = np.asarray(u_r, dtype=float)
        s = np.asarray(s, dtype=float)
        d = u_r - u_l
        eta = self._eta(s, u_l[..., 0], u_r[..., 0])
        return np.stack(
            [
                u_l[..., 0] + s * d[..., 0],
                u_l[..., 1] + s * d[..., 1],
                u_l[..., 2] + eta * d[..., 2],
                u_l[..., 3] + s * d[..., 3],
            ],
            axis=-1,
        )

    def tangent(self, s, u_l, u_r):
        u_l = np.asarray(u_l, dtype=float)
        u_r = np.asarray(u_r, dtype=float)
        s = np.asarray(s, dtype=float)
        d = u_r - u_l
        deta = self._eta_ds(s, u_l[..., 0], u_r[..., 0])
        one = np.ones_like(s)
        return np.stack(
            [one * d[..., 0], one * d[..., 1], deta * d[..., 2], one * d[..., 3]],
            axis=-1,
        )

    def coupling_coefficients(self, h1_l, h1_r, h2_l, h2_r):
        e = self.epsilon
        den = 6.0 * (1.0 + e) * (h1_l + h1_r)
        c1 = ((3 + 4 * e) * (h1_l**2 + h1_r**2) + 2 * (3 + 2 * e) * h1_l * h1_r) / den
        c2 = (
            h1_r * ((3 + 4 * e) * h2_l + (3 + 2 * e) * h2_r)
            + h1_l * ((3 + 2 * e) * h2_l + (3 + 4 * e) * h2_r)
        ) / den
        return c1, c2

    def closed_form_integral(self, system, u_l, u_r):
        if not isinstance(system, TwoLayerSystem):
            return None
        u_l = np.asarray(u_l, dtype=float)
        u_r = np.asarray(u_r, dtype=float)
        c1, c2 = self.coupling_coefficients(
            u_l[..., 0], u_r[..., 0], u_l[..., 2], u_r[..., 2]
        )
        return _two_layer_integral(system, u_l, u_r, c1, c2)


@lru_cache(maxsize=4096)
def _equilibrium_h_cached(h_l, q, delta_sigma, g):
    return _equilibrium_h(h_l, q, delta_sigma, g)


def _equilibrium_h(h_l, q, delta_sigma, g):
    """Thickness on the equilibrium curve through (h_l, q) after a sigma jump.

    Solves E(h) = E(h_l) + delta_sigma with E(h) = h + q^2/(2 g h^2) on the
    branch (sub- or supercritical) containing h_l.
    """
    if h_l <= 0:
        raise DomainError("equilibrium solve requires h > 0")
    if q == 0.0:
        h = h_l + delta_sigma
        if h <= 0:
            raise PathConstructionError(
                "equilibrium curve leaves h > 0 for this sigma jump"
            )
        return h
    a = q * q / (2.0 * g)
    target = h_l + a / h_l**2 + delta_sigma
    h_c = (q * q / g) ** (1.0 / 3.0)  # critical point, E'(h_c) = 0
    e_min = h_c + a / h_c**2
    if target < e_min - 1e-14 * max(1.0, abs(target)):
        raise PathConstructionError(
            "equilibrium curve does not reach the requested sigma"
        )
    subcritical = h_l >= h_c
    # bracketed Newton on the monotone branch; E increases on the
    # subcritical branch and decreases on the supercritical one
    if subcritical:
        lo, hi = h_c, max(target, h_c) + 1.0
        h = max(h_l + delta_sigma, h_c)
    else:
        lo, hi = 1e-12 * h_c, h_c
        h = min(h_l, h_c)
    h = min(max(h, lo), hi)
    increasing = subcritical
    for _ in range(100):
        f = h + a / h**2 - target
        if (f > 0) == increasing:
            hi = min(hi, h)
        else:
            lo = max(lo, h)
        df = 1.0 - 2.0 * a / h**3
        if df != 0.0:
            step = f / df
            h_new = h - step
        else:
            h_new = 0.5 * (lo + hi)
        if not (lo <= h_new <= hi):
            h_new = 0.5 * (lo + hi)
        if abs(h_new - h) < 1e-15 * max(1.0, abs(h)) and abs(f) < 1e-13 * max(
            1.0, abs(target)
        ):
            return h_new
        h = h_new
    if abs(h + a / h**2 - target) < 1e-10 * max(1.0, abs(target)):
        return h
    raise PathConstructionError("equilibrium solve did not converge")


class EquilibriumPath(PathFamily):
    """Path for shallow water that follows a smooth-steady-state curve first.

    Leg one runs from W_l along the curve q = const,
    h + q^2/(2 g h^2) - sigma = const to the intermediate state at
    sigma = sigma_r;  leg two is a straight segment at frozen sigma.  Along
    the first leg A(Phi) Phi_s vanishes identically (the curve is an
    integral curve of the standing wave field), so the whole integral
    reduces to the flux difference of the second leg.

    When sigma_l = sigma_r the first leg is trivial and the path is a plain
    segment in (h, q) at frozen sigma.
    """

    name = "equilibrium"
    breakpoints = (0.0, 0.5, 1.0)
    follows_equilibria = True

    def __init__(self, g=9.81):
        self.g = float(g)

    def intermediate_state(self, u_l, u_r):
        u_l = np.asarray(u_l, dtype=float)
        u_r = np.asarray(u_r, dtype=float)
        h = _equilibrium_h_cached(
            float(u_l[0]), float(u_l[1]), float(u_r[2] - u_l[2]), self.g
        )
        return np.array([h, u_l[1], u_r[2]])

    def _energy(self, h, q):
        return h + q * q / (2.0 * self.g * h * h)

    def evaluate(self, s, u_l, u_r):
        u_l = np.asarray(u_l, dtype=float)
        u_r = np.asarray(u_r, dtype=float)
        s = np.asarray(s, dtype=float)
        w_star = self.intermediate_state(u_l, u_r)
        e_l = self._energy(u_l[0], u_l[1])
        h1 = u_l[0] + 2.0 * np.minimum(s, 0.5) * (w_star[0] - u_l[0])
        sig1 = u_l[2] + self._energy(h1, u_l[1]) - e_l
        t2 = np.clip(2.0 * s - 1.0, 0.0, 1.0)
        h = np.where(s <= 0.5, h1, w_star[0] + t2 * (u_r[0] - w_star[0]))
        q = np.where(s <= 0.5, u_l[1], u_l[1] + t2 * (u_r[1] - u_l[1]))
        sig = np.where(s <= 0.5, sig1, u_r[2])
        return np.stack([h, q, sig], axis=-1)

    def tangent(self, s, u_l, u_r):
        u_l = np.asarray(u_l, dtype=float)
        u_r = np.asarray(u_r, dtype=float)
        s = np.asarray(s, dtype=float)
        w_star = self.intermediate_state(u_l, u_r)
        dh1 = 2.0 * (w_star[0] - u_l[0])
        h1 = u_l[0] + 2.0 * np.minimum(s, 0.5) * (w_star[0] - u_l[0])
        # dE/dh along the curve gives the sigma rate on leg one
        dsig1 = (1.0 - u_l[1] ** 2 / (self.g * h1**3)) * dh1
        th = np.where(s <= 0.5, dh1, 2.0 * (u_r[0] - w_star[0]))
        tq = np.where(s <= 0.5, 0.0, 2.0 * (u_r[1] - u_l[1]))
        tsig = np.where(s <= 0.5, dsig1, 0.0)
        return np.stack([th, tq, tsig], axis=-1)

    def closed_form_integral(self, system, u_l, u_r):
        if not isinstance(system, ShallowWaterSystem):
            return None
        u_l = np.asarray(u_l, dtype=float)
        u_r = np.asarray(u_r, dtype=float)
        if u_l.ndim == 1:
            w_star = self.intermediate_state(u_l, u_r)
            out = np.zeros(3)
            out[0] = u_r[1] - u_l[1]
            out[1] = system.flux(u_r)[1] - system.flux(w_star)[1]
            return out
        return np.stack(
            [self.closed_form_integral(system, a, b) for a, b in zip(u_l, u_r)]
        )


def path_integral(path, system, u_l, u_r, method="auto", atol=1e-12, rtol=1e-10):
    """int_0^1 A(Phi(s; u_l, u_r)) dPhi/ds ds for a single pair of states.

    ``method`` is "auto" (closed form when available), "closed" (fail if
    none) or "quadrature".  Components of A that are exact derivatives
    integrate to flux differences no matter the path; this is what the
    closed forms exploit.
    """
    u_l = np.asarray(u_l, dtype=float)
    u_r = np.asarray(u_r, dtype=float)
    if method in ("auto", "closed"):
        closed = path.closed_form_integral(system, u_l, u_r)
        if closed is not None:
            return closed
        if method == "closed":
            raise PathConstructionError(
                f"no closed-form integral for {path!r} on {system.name}"
            )
    if np.allclose(u_l, u_r, rtol=0.0, atol=0.0):
        return np.zeros_like(u_l)

    def integrand(svals):
        states = path.evaluate(svals, u_l, u_r)
        tangents = path.tangent(svals, u_l, u_r)
        A = system.matrix(states)
        return np.einsum("...ij,...j->...i", A, tangents)

    total = np.zeros_like(u_l)
    pts = path.breakpoints
    for a, b in zip(pts[:-1], pts[1:]):
        total = total + adaptive_gl(integrand, a, b, atol=atol, rtol=rtol)
    return total


def path_from_id(path_id, system=None, epsilon=0.0, g=9.81):
    """Factory used by the experiment layer."""
    if path_id == "segments":
        return SegmentsPath()
    if path_id == "two_segment":
        return TwoSegmentPath()
    if path_id == "skewed_segments":
        return SkewedSegmentsPath(epsilon=epsilon)
    if path_id == "equilibrium":
        if isinstance(system, ShallowWaterSystem):
            g = system.g
        return EquilibriumPath(g=g)
    raise DomainError(f"unknown path id {path_id!r}")
