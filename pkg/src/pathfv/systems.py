"""Model systems of the form u_t + A(u) u_x = 0.

Three quasilinear systems are provided:

``SimplifiedSystem``
    A 2x2 model with state w = (h, q),

        h_t + q_x = 0,
        q_t + (q^2/h)_x + q h h_x = 0,

    strictly hyperbolic on the region 0 < q, 0 < h < (16 q)^(1/3) with
    eigenvalues u -+ h*sqrt(u), u = q/h.  The second equation is genuinely
    nonconservative: the coefficient matrix is not a Jacobian of any flux.

``ShallowWaterSystem``
    Shallow water over bottom topography written as a 3x3 quasilinear
    system.  The state is W = (h, q, sigma) where sigma is the bottom
    depth below a reference level, appended as an unknown with
    sigma_t = 0.  The matrix has block form [[J(w), -S(w)], [0, 0]] with
    J the Jacobian of the flux (q, q^2/h + g h^2/2) and S = (0, g h);
    eigenvalues are u - c, u + c and 0 with c = sqrt(g h).

``TwoLayerSystem``
    Two superposed immiscible shallow-water layers over a flat bottom,
    state w = (h1, q1, h2, q2), layer 1 on top.  The layers couple through
    nonconservative pressure terms;  the characteristic polynomial is the
    quartic

        ((lam - u1)^2 - c1^2) ((lam - u2)^2 - c2^2) = r c1^2 c2^2,

    r = rho1/rho2 in [0, 1).  Internal eigenvalues turn complex when the
    interfacial shear is too large, and such states are rejected.

All state arrays have shape (..., N) and matrix evaluations broadcast over
leading axes.  Instances are immutable and safe to share between workers.
"""

import numpy as np

from .errors import DomainError, EigenDecompositionError, HyperbolicityLossError

# Relative gap under which eigenvalues count as coincident (Roe-type splits
# need strictly distinct eigenvalues).
DISTINCTNESS_RTOL = 1e-8
# Relative imaginary part above which quartic roots count as complex.
COMPLEX_RTOL = 1e-9


def _as_states(w, n):
    w = np.asarray(w, dtype=float)
    if w.shape[-1] != n:
        raise DomainError(f"state must have {n} components, got shape {w.shape}")
    return w


def _min_gap(lam):
    """Smallest gap between consecutive sorted eigenvalues, batched."""
    return np.diff(np.sort(lam, axis=-1), axis=-1).min(axis=-1)


def normalize_eigenvectors(K):
    """Unit Euclidean columns with the first nonzero component positive."""
    K = np.array(K, dtype=float)
    norms = np.linalg.norm(K, axis=-2, keepdims=True)
    K = K / norms
    n = K.shape[-1]
    flat = K.reshape(-1, n, n)
    for M in flat:
        for j in range(n):
            col = M[:, j]
            nz = np.nonzero(np.abs(col) > 1e-14)[0]
            if nz.size and col[nz[0]] < 0:
                M[:, j] = -col
    return flat.reshape(K.shape)


class SimplifiedSystem:
    """2x2 nonconservative model system, state w = (h, q)."""

    n = 2
    name = "simplified"
    # Only the first equation is a conservation law (flux q).
    conservative_mask = np.array([True, False])

    def matrix(self, w):
        """Coefficient matrix A(w) = [[0, 1], [q h - u^2, 2 u]], u = q/h.

        The (2,1) entry q h - u^2 is the one consistent with the quasilinear
        expansion of the momentum equation and with the stated eigenvalues
        u -+ h sqrt(u); see tests for a finite-difference cross-check.
        """
        w = _as_states(w, 2)
        h, q = w[..., 0], w[..., 1]
        if np.any(h <= 0):
            raise DomainError("simplified system requires h > 0")
        u = q / h
        A = np.zeros(w.shape[:-1] + (2, 2))
        A[..., 0, 1] = 1.0
        A[..., 1, 0] = q * h - u * u
        A[..., 1, 1] = 2.0 * u
        return A

    def eigenvalues(self, w):
        """lam = (u - h sqrt(u), u + h sqrt(u)), sorted ascending."""
        w = _as_states(w, 2)
        h, q = w[..., 0], w[..., 1]
        if np.any(h <= 0):
            raise DomainError("simplified system requires h > 0")
        u = q / h
        if np.any(u < 0):
            raise HyperbolicityLossError("simplified system requires u = q/h >= 0")
        s = h * np.sqrt(u)
        return np.stack([u - s, u + s], axis=-1)

    def eigensystem(self, w):
        lam = self.eigenvalues(w)
        K = np.zeros(lam.shape + (2,))
        K[..., 0, :] = 1.0
        K[..., 1, :] = lam
        return lam, normalize_eigenvectors(K)

    def max_abs_speed(self, w):
        return np.abs(self.eigenvalues(w)).max()

    def is_admissible(self, w):
        """Region 0 < q and 0 < h < (16 q)^(1/3), plus distinct eigenvalues."""
        w = np.asarray(w, dtype=float)
        h, q = w[..., 0], w[..., 1]
        ok = (q > 0) & (h > 0)
        with np.errstate(invalid="ignore"):
            ok &= h < np.cbrt(16.0 * np.where(q > 0, q, np.nan))
            u = np.where(ok, q / np.where(h > 0, h, 1.0), 1.0)
            ok &= h * np.sqrt(np.abs(u)) > 0.5 * DISTINCTNESS_RTOL * (
                np.abs(u) + h * np.sqrt(np.abs(u))
            )
        return ok

    def conservative_flux(self, w):
        w = _as_states(w, 2)
        F = np.zeros_like(w)
        F[..., 0] = w[..., 1]
        return F


class ShallowWaterSystem:
    """Shallow water over topography as a 3x3 system, W = (h, q, sigma)."""

    n = 3
    name = "shallow_water"
    conservative_mask = np.array([True, True, False])

    def __init__(self, g=9.81):
        self.g = float(g)

    def flux(self, w):
        """Flux of the conservative pair (h, q) at frozen topography."""
        w = np.asarray(w, dtype=float)
        h, q = w[..., 0], w[..., 1]
        return np.stack([q, q * q / h + 0.5 * self.g * h * h], axis=-1)

    def matrix(self, w):
        w = _as_states(w, 3)
        h, q = w[..., 0], w[..., 1]
        if np.any(h <= 0):
            raise DomainError("shallow water requires h > 0")
        u = q / h
        g = self.g
        A = np.zeros(w.shape[:-1] + (3, 3))
        A[..., 0, 1] = 1.0
        A[..., 1, 0] = g * h - u * u
        A[..., 1, 1] = 2.0 * u
        A[..., 1, 2] = -g * h
        # last row identically zero: sigma_t = 0
        return A

    def eigenvalues(self, w):
        w = _as_states(w, 3)
        h, q = w[..., 0], w[..., 1]
        if np.any(h <= 0):
            raise DomainError("shallow water requires h > 0")
        u = q / h
        c = np.sqrt(self.g * h)
        lam = np.stack([u - c, u + c, np.zeros_like(u)], axis=-1)
        return np.sort(lam, axis=-1)

    def eigensystem(self, w):
        w = _as_states(w, 3)
        h, q = w[..., 0], w[..., 1]
        u = q / h
        c = np.sqrt(self.g * h)
        gh = self.g * h
        lam = np.stack([u - c, u + c, np.zeros_like(u)], axis=-1)
        K = np.zeros(w.shape[:-1] + (3, 3))
        K[..., 0, 0] = 1.0
        K[..., 1, 0] = lam[..., 0]
        K[..., 0, 1] = 1.0
        K[..., 1, 1] = lam[..., 1]
        # kernel vector of [[J, -S],[0,0]]: (g h/(g h - u^2), 0, 1)
        K[..., 0, 2] = gh / (gh - u * u)
        K[..., 2, 2] = 1.0
        order = np.argsort(lam, axis=-1)
        lam = np.take_along_axis(lam, order, axis=-1)
        K = np.take_along_axis(K, order[..., None, :], axis=-1)
        return lam, normalize_eigenvectors(K)

    def max_abs_speed(self, w):
        return np.abs(self.eigenvalues(w)).max()

    def is_admissible(self, w):
        """h > 0 away from resonance (u != +-c, so no eigenvalue collides with 0)."""
        w = np.asarray(w, dtype=float)
        h, q = w[..., 0], w[..., 1]
        ok = h > 0
        u = np.where(ok, q / np.where(h > 0, h, 1.0), 0.0)
        c = np.sqrt(self.g * np.abs(h))
        scale = np.abs(u) + c
        gap = np.minimum(np.abs(u - c), np.abs(u + c))
        return ok & (gap > DISTINCTNESS_RTOL * scale)

    def froude(self, w):
        w = np.asarray(w, dtype=float)
        h, q = w[..., 0], w[..., 1]
        return np.abs(q / h) / np.sqrt(self.g * h)

    def conservative_flux(self, w):
        w = _as_states(w, 3)
        F = np.zeros_like(w)
        F[..., :2] = self.flux(w)
        return F


def solve_characteristic_quartic(u1, u2, a1, a2, k, imag_rtol=COMPLEX_RTOL):
    """Real roots of ((lam-u1)^2 - a1)((lam-u2)^2 - a2) = k, batched.

    Roots come from the companion matrix of the monic quartic followed by one
    Newton polish.  Imaginary parts below ``imag_rtol`` (relative to the root
    magnitude) are truncated; anything larger raises
    ``HyperbolicityLossError`` carrying the discriminant.
    """
    u1, u2, a1, a2, k = np.broadcast_arrays(
        *[np.asarray(x, dtype=float) for x in (u1, u2, a1, a2, k)]
    )
    p1 = u1 * u1 - a1
    p2 = u2 * u2 - a2
    c3 = -2.0 * (u1 + u2)
    c2 = p1 + p2 + 4.0 * u1 * u2
    c1 = -2.0 * (u1 * p2 + u2 * p1)
    c0 = p1 * p2 - k

    shape = c0.shape
    comp = np.zeros(shape + (4, 4))
    comp[..., 1, 0] = 1.0
    comp[..., 2, 1] = 1.0
    comp[..., 3, 2] = 1.0
    comp[..., 0, 3] = -c0
    comp[..., 1, 3] = -c1
    comp[..., 2, 3] = -c2
    comp[..., 3, 3] = -c3
    lam = np.linalg.eigvals(comp)

    # one Newton polish per root (complex arithmetic, Horner evaluation)
    c3e, c2e, c1e, c0e = (np.asarray(c)[..., None] for c in (c3, c2, c1, c0))
    p = (((lam + c3e) * lam + c2e) * lam + c1e) * lam + c0e
    dp = ((4.0 * lam + 3.0 * c3e) * lam + 2.0 * c2e) * lam + c1e
    safe = np.abs(dp) > 1e-300
    lam = np.where(safe, lam - p / np.where(safe, dp, 1.0), lam)

    scale = np.maximum(1.0, np.abs(lam).max(axis=-1, keepdims=True))
    bad = np.abs(lam.imag) > imag_rtol * scale
    if np.any(bad):
        # discriminant from the roots of the monic quartic
        diff = lam[..., :, None] - lam[..., None, :]
        iu = np.triu_indices(4, k=1)
        disc = np.prod(diff[..., iu[0], iu[1]] ** 2, axis=-1)
        worst = np.abs(lam.imag).max()
        raise HyperbolicityLossError(
            "complex characteristic roots: system is not hyperbolic here",
            discriminant=float(np.real(disc[bad.any(axis=-1)].flat[0])),
            max_imag=float(worst),
        )
    return np.sort(lam.real, axis=-1)


class TwoLayerSystem:
    """Two-layer shallow water over a flat bottom, w = (h1, q1, h2, q2)."""

    n = 4
    name = "two_layer"
    conservative_mask = np.array([True, False, True, False])

    def __init__(self, g=9.81, r=0.95):
        if not 0.0 <= r < 1.0:
            raise DomainError("density ratio must satisfy 0 <= r < 1")
        self.g = float(g)
        self.r = float(r)

    def _split(self, w):
        w = _as_states(w, 4)
        h1, q1, h2, q2 = (w[..., i] for i in range(4))
        if np.any(h1 <= 0) or np.any(h2 <= 0):
            raise DomainError("two-layer system requires h1, h2 > 0")
        return h1, q1, h2, q2

    def matrix(self, w):
        h1, q1, h2, q2 = self._split(w)
        u1, u2 = q1 / h1, q2 / h2
        c1sq, c2sq = self.g * h1, self.g * h2
        A = np.zeros(np.broadcast(h1, q1).shape + (4, 4))
        A[..., 0, 1] = 1.0
        A[..., 1, 0] = c1sq - u1 * u1
        A[..., 1, 1] = 2.0 * u1
        A[..., 1, 2] = c1sq
        A[..., 2, 3] = 1.0
        A[..., 3, 0] = self.r * c2sq
        A[..., 3, 2] = c2sq - u2 * u2
        A[..., 3, 3] = 2.0 * u2
        return A

    def eigenvalues(self, w):
        h1, q1, h2, q2 = self._split(w)
        u1, u2 = q1 / h1, q2 / h2
        c1sq, c2sq = self.g * h1, self.g * h2
        return solve_characteristic_quartic(u1, u2, c1sq, c2sq, self.r * c1sq * c2sq)

    def eigensystem(self, w):
        """Sorted eigenvalues and unit right eigenvectors.

        For a root lam the eigenvector is (1, lam, kappa, lam*kappa) with
        kappa = ((lam - u1)^2 - c1^2)/c1^2, which follows from the first two
        block rows of A.
        """
        h1, q1, h2, q2 = self._split(w)
        u1 = q1 / h1
        c1sq = self.g * h1
        lam = self.eigenvalues(w)
        gap = _min_gap(lam)
        scale = np.abs(lam).max(axis=-1)
        if np.any(gap < DISTINCTNESS_RTOL * np.maximum(scale, 1e-300)):
            raise EigenDecompositionError(
                "two-layer eigenvalues are not distinct at this state"
            )
        kappa = ((lam - u1[..., None]) ** 2 - c1sq[..., None]) / c1sq[..., None]
        K = np.zeros(lam.shape + (4,))  # (..., 4 rows, 4 columns)
        K[..., 0, :] = 1.0
        K[..., 1, :] = lam
        K[..., 2, :] = kappa
        K[..., 3, :] = lam * kappa
        return lam, normalize_eigenvectors(K)

    def max_abs_speed(self, w):
        return np.abs(self.eigenvalues(w)).max()

    def hyperbolicity_indicator(self, w):
        """Interfacial shear measure (u1-u2)^2 / (g' (h1+h2)), g' = (1-r) g.

        Values above ~1 signal loss of hyperbolicity of the internal fields.
        This is an a-priori indicator only; the eigenvalue solver is the
        actual decision rule.
        """
        if self.r >= 1.0:
            raise DomainError("indicator undefined for r = 1 (zero reduced gravity)")
        h1, q1, h2, q2 = self._split(w)
        u1, u2 = q1 / h1, q2 / h2
        gprime = (1.0 - self.r) * self.g
        return (u1 - u2) ** 2 / (gprime * (h1 + h2))

    def is_admissible(self, w):
        w = np.asarray(w, dtype=float)
        scalar = w.ndim == 1
        batch = w.reshape(-1, 4)
        ok = (batch[:, 0] > 0) & (batch[:, 2] > 0)
        idx = np.nonzero(ok)[0]
        if idx.size:
            try:
                lam = self.eigenvalues(batch[idx])
            except HyperbolicityLossError:
                # localize failures state by state
                for i in idx:
                    try:
                        lam_i = self.eigenvalues(batch[i])
                    except HyperbolicityLossError:
                        ok[i] = False
                        continue
                    scale = max(np.abs(lam_i).max(), 1e-300)
                    ok[i] = _min_gap(lam_i) > DISTINCTNESS_RTOL * scale
            else:
                scale = np.maximum(np.abs(lam).max(axis=-1), 1e-300)
                ok[idx] = _min_gap(lam) > DISTINCTNESS_RTOL * scale
        return bool(ok[0]) if scalar else ok.reshape(w.shape[:-1])

    def conservative_flux(self, w):
        h1, q1, h2, q2 = self._split(w)
        F = np.zeros(np.broadcast(h1, q1).shape + (4,))
        F[..., 0] = q1
        F[..., 1] = q1 * q1 / h1 + 0.5 * self.g * h1 * h1
        F[..., 2] = q2
        F[..., 3] = q2 * q2 / h2 + 0.5 * self.g * h2 * h2
        return F


def system_from_id(system_id, **kwargs):
    """Factory used by the experiment layer."""
    if system_id == "simplified":
        return SimplifiedSystem()
    if system_id == "shallow_water":
        return ShallowWaterSystem(g=kwargs.get("g", 9.81))
    if system_id == "two_layer":
        return TwoLayerSystem(g=kwargs.get("g", 9.81), r=kwargs.get("r", 0.95))
    raise DomainError(f"unknown system id {system_id!r}")
