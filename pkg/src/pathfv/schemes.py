"""Fluctuation-form finite-volume schemes.

All schemes advance cell averages by

    u_i^{n+1} = u_i^n - dt/dx * (Mp_{i-1/2} + Mm_{i+1/2}),

where the interface fluctuations (Mm, Mp) satisfy Mm(u, u) = Mp(u, u) = 0
and

    Mm + Mp = int_0^1 A(Phi(s; u_i, u_{i+1})) dPhi/ds ds

for the scheme's path family, so constant states are preserved and the
interface terms sum to the path integral of A.  Realizations:

* ``RoeScheme``           -- upwind split of a path-exact linearization,
* ``LaxFriedrichsScheme`` -- Ahat_pm = (+-(dx/dt) Id + A)/2 under the path,
* ``ModifiedLaxFriedrichsScheme`` -- Lax-Friedrichs with the identity
  replaced by the projection that drops the standing (zero-eigenvalue)
  mode, which keeps the topography component frozen and makes still-water
  equilibria exact,
* ``GodunovScheme``       -- exact-Riemann fluctuations (2x2 system only),
* ``GlimmScheme``         -- random/equidistributed sampling of exact
  Riemann solutions (no fluctuation form; conservation holds only
  statistically).

Fluctuation functions are vectorized over a leading interface axis.
"""

import logging
from dataclasses import dataclass

import numpy as np

from .errors import (
    BlowUpError,
    CFLViolationError,
    DomainError,
    EigenDecompositionError,
    HyperbolicityLossError,
    RoeConstructionError,
)
from .paths import SegmentsPath, SkewedSegmentsPath, TwoSegmentPath, path_integral
from .riemann import fan_split_integrals, solve_riemann
from .systems import (
    ShallowWaterSystem,
    SimplifiedSystem,
    TwoLayerSystem,
    solve_characteristic_quartic,
)

log = logging.getLogger(__name__)

ZERO_EIG_RTOL = 1e-10  # |lam| below this (relative) counts as a standing mode


@dataclass(frozen=True)
class Grid:
    """Uniform 1-D grid of M cells on [x_min, x_max]."""

    x_min: float
    x_max: float
    m: int

    def __post_init__(self):
        if self.m < 3:
            raise DomainError("grid needs at least 3 cells")
        if not self.x_max > self.x_min:
            raise DomainError("grid needs x_max > x_min")

    @property
    def dx(self):
        return (self.x_max - self.x_min) / self.m

    @property
    def centers(self):
        return self.x_min + (np.arange(self.m) + 0.5) * self.dx

    @property
    def interfaces(self):
        return self.x_min + np.arange(self.m + 1) * self.dx


@dataclass(frozen=True)
class Solution:
    """Cell averages at one time level.  Never mutated; steps return new ones."""

    grid: Grid
    t: float
    states: np.ndarray
    n: int = 0

    def __post_init__(self):
        states = np.asarray(self.states, dtype=float)
        if states.shape[0] != self.grid.m:
            raise DomainError("states shape does not match the grid")
        if not np.all(np.isfinite(states)):
            raise BlowUpError(
                "non-finite state in solution",
                cell=int(np.argwhere(~np.isfinite(states))[0][0]),
            )
        object.__setattr__(self, "states", states)


class FreeBoundary:
    """Zero-order extrapolation: ghost cells copy the nearest interior cell."""

    def extend(self, states):
        return np.concatenate([states[:1], states, states[-1:]], axis=0)


class DirichletBoundary:
    """Fixed ghost state on one or both sides; free extrapolation otherwise."""

    def __init__(self, left=None, right=None):
        self.left = None if left is None else np.asarray(left, dtype=float)
        self.right = None if right is None else np.asarray(right, dtype=float)

    def extend(self, states):
        lo = states[:1] if self.left is None else self.left[None, :]
        hi = states[-1:] if self.right is None else self.right[None, :]
        return np.concatenate([lo, states, hi], axis=0)


def cfl_dt(system, sol, cfl, max_cfl=1.0):
    """Stable step dt = min(cfl, max_cfl) * dx / max |lambda| over all cells."""
    if not 0.0 < cfl <= 1.0:
        raise DomainError("cfl must lie in (0, 1]")
    try:
        speed = float(system.max_abs_speed(sol.states))
    except HyperbolicityLossError as exc:
        bad = _first_nonhyperbolic_cell(system, sol.states)
        raise HyperbolicityLossError(
            f"hyperbolicity lost at cell {bad} while sizing the time step",
            discriminant=exc.discriminant,
            max_imag=exc.max_imag,
        ) from exc
    if speed <= 0.0:
        raise DomainError("zero wave speed; cannot size a time step")
    return min(cfl, max_cfl) * sol.grid.dx / speed


def _first_nonhyperbolic_cell(system, states):
    for i, w in enumerate(states):
        try:
            system.eigenvalues(w)
        except HyperbolicityLossError:
            return i
    return None


def step(scheme, sol, dt, bc=None, lambda_max=None):
    """One explicit update of ``sol`` by ``dt``; refuses unstable steps."""
    if dt <= 0.0:
        raise DomainError("dt must be positive")
    bc = bc or FreeBoundary()
    grid = sol.grid
    if lambda_max is None:
        lambda_max = float(scheme.system.max_abs_speed(sol.states))
    dt_max = scheme.max_cfl * grid.dx / lambda_max
    if dt > dt_max * (1.0 + 1e-12):
        raise CFLViolationError(
            f"dt = {dt:.3e} violates the CFL bound", required_dt=dt_max
        )
    ext = bc.extend(sol.states)
    mm, mp = scheme.fluctuations(ext[:-1], ext[1:], grid.dx, dt)
    new = sol.states - (dt / grid.dx) * (mp[:-1] + mm[1:])
    if not np.all(np.isfinite(new)):
        cell = int(np.argwhere(~np.isfinite(new))[0][0])
        raise BlowUpError(f"scheme blew up at cell {cell}", cell=cell)
    _warn_inadmissible(scheme.system, new, sol.n + 1)
    return Solution(grid, sol.t + dt, new, sol.n + 1)


def _warn_inadmissible(system, states, n):
    try:
        ok = system.is_admissible(states)
    except Exception:
        return
    if not np.all(ok):
        idx = np.nonzero(~np.asarray(ok))[0]
        log.warning(
            "step %d: %d cells left the admissible region (first at cell %d)",
            n, idx.size, int(idx[0]),
        )


# ---------------------------------------------------------------------------
# Roe linearizations


def _roe_velocity(h_l, u_l, h_r, u_r):
    sl, sr = np.sqrt(h_l), np.sqrt(h_r)
    return (sl * u_l + sr * u_r) / (sl + sr)


def _roe_eigendata(system, path, UL, UR):
    """Sorted eigenvalues and eigenvector matrices of the Roe matrix, batched.

    Returns (lam, K, integral) where ``integral`` is the closed-form path
    integral used for the property-3 safety check.
    """
    UL = np.asarray(UL, dtype=float)
    UR = np.asarray(UR, dtype=float)
    if isinstance(system, SimplifiedSystem):
        if not isinstance(path, TwoSegmentPath):
            raise RoeConstructionError(
                "no Roe linearization for the simplified system with this path"
            )
        h_l, q_l = UL[..., 0], UL[..., 1]
        h_r, q_r = UR[..., 0], UR[..., 1]
        if np.any(h_l <= 0) or np.any(h_r <= 0):
            raise DomainError("Roe average requires positive thickness")
        u = _roe_velocity(h_l, q_l / h_l, h_r, q_r / h_r)
        hbar = 0.5 * (h_l + h_r)
        rad = q_l * hbar
        if np.any(rad <= 0):
            raise RoeConstructionError("Roe matrix loses real eigenvalues (q_l <= 0)")
        s = np.sqrt(rad)
        lam = np.stack([u - s, u + s], axis=-1)
        K = np.zeros(lam.shape + (2,))
        K[..., 0, :] = 1.0
        K[..., 1, :] = lam
    elif isinstance(system, ShallowWaterSystem):
        h_l, q_l = UL[..., 0], UL[..., 1]
        h_r, q_r = UR[..., 0], UR[..., 1]
        if np.any(h_l <= 0) or np.any(h_r <= 0):
            raise DomainError("Roe average requires positive thickness")
        u = _roe_velocity(h_l, q_l / h_l, h_r, q_r / h_r)
        hbar = 0.5 * (h_l + h_r)
        cbar = np.sqrt(system.g * hbar)
        a21 = system.g * hbar - u * u
        ctop = _sw_topography_entry(system, path, UL, UR, hbar)
        lam = np.stack([u - cbar, u + cbar, np.zeros_like(u)], axis=-1)
        K = np.zeros(lam.shape + (3,))
        K[..., 0, 0] = 1.0
        K[..., 1, 0] = lam[..., 0]
        K[..., 0, 1] = 1.0
        K[..., 1, 1] = lam[..., 1]
        K[..., 0, 2] = -ctop / a21
        K[..., 2, 2] = 1.0
        order = np.argsort(lam, axis=-1)
        lam = np.take_along_axis(lam, order, axis=-1)
        K = np.take_along_axis(K, order[..., None, :], axis=-1)
    elif isinstance(system, TwoLayerSystem):
        if isinstance(path, SkewedSegmentsPath):
            c1, c2 = path.coupling_coefficients(
                UL[..., 0], UR[..., 0], UL[..., 2], UR[..., 2]
            )
        elif isinstance(path, SegmentsPath):
            c1 = 0.5 * (UL[..., 0] + UR[..., 0])
            c2 = 0.5 * (UL[..., 2] + UR[..., 2])
        else:
            raise RoeConstructionError(
                "no Roe linearization for the two-layer system with this path"
            )
        h1l, q1l, h2l, q2l = (UL[..., i] for i in range(4))
        h1r, q1r, h2r, q2r = (UR[..., i] for i in range(4))
        if np.any(np.minimum(h1l, h2l) <= 0) or np.any(np.minimum(h1r, h2r) <= 0):
            raise DomainError("Roe average requires positive thickness")
        u1 = _roe_velocity(h1l, q1l / h1l, h1r, q1r / h1r)
        u2 = _roe_velocity(h2l, q2l / h2l, h2r, q2r / h2r)
        g = system.g
        c1sq = g * 0.5 * (h1l + h1r)
        c2sq = g * 0.5 * (h2l + h2r)
        bcoup = g * c1
        ccoup = system.r * g * c2
        lam = solve_characteristic_quartic(u1, u2, c1sq, c2sq, bcoup * ccoup)
        kappa = ((lam - u1[..., None]) ** 2 - c1sq[..., None]) / bcoup[..., None]
        K = _rows_to_matrix(lam, kappa)
    else:
        raise RoeConstructionError(f"no Roe linearization for {system!r}")

    _check_distinct(lam)
    integral = path.closed_form_integral(system, UL, UR)
    if integral is None:
        if UL.ndim == 1:
            integral = path_integral(path, system, UL, UR)
        else:
            integral = np.stack(
                [path_integral(path, system, a, b) for a, b in zip(UL, UR)]
            )
    # property 3 safety net: K (lam . K^-1 du) must equal the path integral
    du = UR - UL
    coeff = np.linalg.solve(K, du[..., None])[..., 0]
    adu = np.einsum("...ij,...j->...i", K, lam * coeff)
    resid = np.abs(adu - integral).max()
    scale = max(1.0, float(np.abs(integral).max()))
    if resid > 1e-9 * scale:
        raise RoeConstructionError(
            "Roe linearization violates the jump identity", residual=float(resid)
        )
    return lam, K, integral


def _rows_to_matrix(lam, kappa):
    K = np.zeros(lam.shape + (4,))
    K[..., 0, :] = 1.0
    K[..., 1, :] = lam
    K[..., 2, :] = kappa
    K[..., 3, :] = lam * kappa
    return K


def _sw_topography_entry(system, path, UL, UR, hbar):
    """Row-2 topography coefficient of the shallow-water Roe matrix.

    Segments give -g hbar.  The equilibrium path gives
    (F2(w_l) - F2(w_star)) / dsigma, the exact factor that makes the jump
    identity hold; it tends to -g h as the states coincide.
    """
    from .paths import EquilibriumPath, _equilibrium_h_cached

    g = system.g
    if isinstance(path, SegmentsPath):
        return -g * hbar
    if isinstance(path, EquilibriumPath):
        ULb = UL.reshape(-1, 3)
        URb = UR.reshape(-1, 3)
        out = np.empty(ULb.shape[0])
        for i, (wl, wr) in enumerate(zip(ULb, URb)):
            dsig = wr[2] - wl[2]
            if abs(dsig) < 1e-10 * max(1.0, abs(wl[2]), abs(wr[2])):
                out[i] = -g * 0.5 * (wl[0] + wr[0])
                continue
            hstar = _equilibrium_h_cached(float(wl[0]), float(wl[1]), float(dsig), g)
            f2 = lambda h, q: q * q / h + 0.5 * g * h * h
            out[i] = (f2(wl[0], wl[1]) - f2(hstar, wl[1])) / dsig
        return out.reshape(UL.shape[:-1])
    raise RoeConstructionError(
        "no Roe linearization for shallow water with this path"
    )


def _check_distinct(lam):
    gaps = np.diff(lam, axis=-1).min(axis=-1)
    scale = np.maximum(np.abs(lam).max(axis=-1), 1e-300)
    if np.any(gaps < 1e-8 * scale):
        raise EigenDecompositionError(
            "Roe matrix eigenvalues are not distinct at some interface"
        )


def roe_matrix(system, path, u_l, u_r):
    """Explicit Roe matrix for one pair of states (checked properties 1-3)."""
    u_l = np.asarray(u_l, dtype=float)
    u_r = np.asarray(u_r, dtype=float)
    lam, K, _ = _roe_eigendata(system, path, u_l, u_r)
    if np.linalg.cond(K) > 1e12:
        raise EigenDecompositionError("Roe eigenvector matrix is ill-conditioned")
    return K @ np.diag(lam) @ np.linalg.inv(K)


def roe_fluctuations(a_roe, u_l, u_r):
    """Upwind split of a given linearization: M-+ = A-+ (u_r - u_l).

    A-+ = K diag(lam-+) K^-1 built from a dense eigendecomposition of
    ``a_roe``; requires distinct real eigenvalues and a well-conditioned
    eigenvector matrix (condition number <= 1e12).
    """
    a_roe = np.asarray(a_roe, dtype=float)
    lam, K = np.linalg.eig(a_roe)
    if np.abs(lam.imag).max() > 1e-10 * max(1.0, np.abs(lam).max()):
        raise EigenDecompositionError("linearization has complex eigenvalues")
    lam = lam.real
    K = K.real
    order = np.argsort(lam)
    lam, K = lam[order], K[:, order]
    _check_distinct(lam)
    if np.linalg.cond(K) > 1e12:
        raise EigenDecompositionError("eigenvector matrix is ill-conditioned")
    du = np.asarray(u_r, dtype=float) - np.asarray(u_l, dtype=float)
    coeff = np.linalg.solve(K, du)
    mm = K @ (np.minimum(lam, 0.0) * coeff)
    mp = K @ (np.maximum(lam, 0.0) * coeff)
    return mm, mp


# ---------------------------------------------------------------------------
# Scheme classes


class FluctuationScheme:
    """Base: subclasses provide vectorized ``fluctuations(UL, UR, dx, dt)``."""

    max_cfl = 1.0
    stencil = (1, 1)

    def __init__(self, system, path):
        self.system = system
        self.path = path

    @property
    def name(self):
        return type(self).__name__

    def fluctuations(self, UL, UR, dx, dt):
        raise NotImplementedError

    def advance(self, sol, dt, bc=None, lambda_max=None):
        return step(self, sol, dt, bc=bc, lambda_max=lambda_max)


class RoeScheme(FluctuationScheme):
    """Path-exact linearization with upwind splitting."""

    name = "roe"

    def fluctuations(self, UL, UR, dx, dt):
        UL = np.asarray(UL, dtype=float)
        UR = np.asarray(UR, dtype=float)
        du = UR - UL
        trivial = np.abs(du).max(axis=-1) == 0.0
        if np.all(trivial):
            return np.zeros_like(UL), np.zeros_like(UL)
        lam, K, _ = _roe_eigendata(self.system, self.path, UL, UR)
        coeff = np.linalg.solve(K, du[..., None])[..., 0]
        mm = np.einsum("...ij,...j->...i", K, np.minimum(lam, 0.0) * coeff)
        mp = np.einsum("...ij,...j->...i", K, np.maximum(lam, 0.0) * coeff)
        mm[trivial] = 0.0
        mp[trivial] = 0.0
        return mm, mp


class LaxFriedrichsScheme(FluctuationScheme):
    """M-+ = -+ dx/(2 dt) (u_r - u_l) + (1/2) int A(Phi) Phi_s ds.

    The identity part is integrated exactly; only the A part needs the
    path integral (closed form where available, quadrature otherwise).
    """

    name = "lax_friedrichs"

    def _integral(self, UL, UR):
        I = self.path.closed_form_integral(self.system, UL, UR)
        if I is not None:
            return I
        if UL.ndim == 1:
            return path_integral(self.path, self.system, UL, UR)
        return np.stack(
            [path_integral(self.path, self.system, a, b) for a, b in zip(UL, UR)]
        )

    def fluctuations(self, UL, UR, dx, dt):
        UL = np.asarray(UL, dtype=float)
        UR = np.asarray(UR, dtype=float)
        du = UR - UL
        I = self._integral(UL, UR)
        visc = (0.5 * dx / dt) * du
        return 0.5 * I - visc, 0.5 * I + visc


class ModifiedLaxFriedrichsScheme(FluctuationScheme):
    """Lax-Friedrichs on a Roe linearization with the standing mode removed.

    M-+ = (1/2)(-+ (dx/dt) Ihat + A_roe) (u_r - u_l), where Ihat agrees with
    the identity on every eigenvector with lam != 0 and annihilates the
    lam = 0 one.  The topography component of both fluctuations is then
    exactly zero, so sigma stays bit-identical across steps.
    """

    name = "modified_lax_friedrichs"

    def __init__(self, system, path):
        if not isinstance(system, ShallowWaterSystem):
            raise DomainError(
                "the modified Lax-Friedrichs scheme needs a balance-law system"
            )
        super().__init__(system, path)

    def fluctuations(self, UL, UR, dx, dt):
        UL = np.asarray(UL, dtype=float)
        UR = np.asarray(UR, dtype=float)
        du = UR - UL
        lam, K, _ = _roe_eigendata(self.system, self.path, UL, UR)
        coeff = np.linalg.solve(K, du[..., None])[..., 0]
        scale = np.abs(lam).max(axis=-1, keepdims=True)
        moving = np.abs(lam) >= ZERO_EIG_RTOL * scale
        ident = np.where(moving, 1.0, 0.0)
        wm = 0.5 * (-(dx / dt) * ident + lam)
        wp = 0.5 * (+(dx / dt) * ident + lam)
        mm = np.einsum("...ij,...j->...i", K, wm * coeff)
        mp = np.einsum("...ij,...j->...i", K, wp * coeff)
        # kill roundoff in the frozen component outright
        mm[..., 2] = 0.0
        mp[..., 2] = 0.0
        return mm, mp


class GodunovScheme(FluctuationScheme):
    """Exact-Riemann fluctuations for the 2x2 system (needs CFL <= 1/2).

    Mm collects the wave arcs with negative speed, Mp those with positive
    speed; a fan straddling x/t = 0 is split at its sonic state.  Their sum
    is the path integral along the wave-curve path of the pair.
    """

    name = "godunov"
    max_cfl = 0.5

    def __init__(self, system, path=None):
        if not isinstance(system, SimplifiedSystem):
            raise DomainError("the Godunov scheme is implemented for the 2x2 system")
        super().__init__(system, path or TwoSegmentPath())

    def fluctuations(self, UL, UR, dx, dt):
        UL = np.asarray(UL, dtype=float)
        UR = np.asarray(UR, dtype=float)
        single = UL.ndim == 1
        ULb = UL.reshape(-1, 2)
        URb = UR.reshape(-1, 2)
        mm = np.zeros_like(ULb)
        mp = np.zeros_like(ULb)
        for i in range(ULb.shape[0]):
            if (ULb[i] == URb[i]).all():
                continue
            fan = solve_riemann(ULb[i], URb[i])
            mm[i], mp[i] = fan_split_integrals(fan)
        if single:
            return mm[0], mp[0]
        return mm.reshape(UL.shape), mp.reshape(UR.shape)


class VanDerCorputSampler:
    """Binary van der Corput sequence theta_n, with a seedable start index."""

    def __init__(self, offset=0):
        self._n = int(offset)

    def take(self):
        self._n += 1
        n, theta, f = self._n, 0.0, 0.5
        while n:
            theta += f * (n & 1)
            n >>= 1
            f *= 0.5
        return theta


def glimm_step(riemann_solver, sol, dt, sampler, bc=None, lambda_max=None,
               system=None):
    """Random-choice update: each cell takes one sampled exact Riemann value.

    The value of cell i is the exact solution at x_{i-1/2} + theta dx, which
    lies in the left interface fan for theta < 1/2 and in the right one
    otherwise (CFL <= 1/2 keeps neighbouring fans from interacting).
    """
    bc = bc or FreeBoundary()
    grid = sol.grid
    if lambda_max is not None and dt > 0.5 * grid.dx / lambda_max * (1 + 1e-12):
        raise CFLViolationError(
            "Glimm step needs CFL <= 1/2", required_dt=0.5 * grid.dx / lambda_max
        )
    ext = bc.extend(sol.states)
    theta = sampler.take()
    fans = {}

    def fan_at(j):  # interface between ext[j] and ext[j+1]
        if j not in fans:
            fans[j] = solve_riemann(ext[j], ext[j + 1])
        return fans[j]

    new = np.empty_like(sol.states)
    from .riemann import sample as fan_sample

    for i in range(grid.m):
        if theta < 0.5:
            j = i  # left interface of cell i in extended indexing
            if (ext[j] == ext[j + 1]).all():
                new[i] = ext[j]
            else:
                new[i] = fan_sample(fan_at(j), theta * grid.dx / dt)
        else:
            j = i + 1
            if (ext[j] == ext[j + 1]).all():
                new[i] = ext[j]
            else:
                new[i] = fan_sample(fan_at(j), (theta - 1.0) * grid.dx / dt)
    return Solution(grid, sol.t + dt, new, sol.n + 1)


class GlimmScheme:
    """Driver-compatible wrapper around ``glimm_step``."""

    name = "glimm"
    max_cfl = 0.5

    def __init__(self, system, seed=0):
        if not isinstance(system, SimplifiedSystem):
            raise DomainError("the Glimm scheme is implemented for the 2x2 system")
        self.system = system
        self.path = TwoSegmentPath()
        self.sampler = VanDerCorputSampler(offset=seed)

    def advance(self, sol, dt, bc=None, lambda_max=None):
        return glimm_step(solve_riemann, sol, dt, self.sampler, bc=bc,
                          lambda_max=lambda_max)


def evolve(scheme, sol, t_end, cfl, bc=None, snapshot_times=(), on_step=None):
    """March ``sol`` to ``t_end``; returns the snapshots plus the final state.

    The step size is recomputed from the current data every step and clipped
    so snapshot times and t_end are hit exactly.
    """
    bc = bc or FreeBoundary()
    marks = sorted(t for t in set(snapshot_times) if sol.t < t <= t_end)
    snaps = []
    guard = 0
    while sol.t < t_end - 1e-13:
        lam_max = float(scheme.system.max_abs_speed(sol.states))
        dt = cfl * sol.grid.dx / lam_max
        dt = min(dt, t_end - sol.t)
        if marks:
            dt = min(dt, marks[0] - sol.t)
        sol = scheme.advance(sol, dt, bc=bc, lambda_max=lam_max)
        if marks and sol.t >= marks[0] - 1e-13:
            snaps.append(sol)
            marks.pop(0)
        if on_step is not None:
            on_step(sol)
        guard += 1
        if guard > 10_000_000:
            raise RuntimeError("evolve exceeded the step guard")
    if not snaps or snaps[-1].t < sol.t - 1e-13:
        snaps.append(sol)
    return snaps


def scheme_from_id(scheme_id, system, path, seed=0):
    """Factory used by the experiment layer."""
    if scheme_id == "roe":
        return RoeScheme(system, path)
    if scheme_id == "lax_friedrichs":
        return LaxFriedrichsScheme(system, path)
    if scheme_id == "modified_lax_friedrichs":
        return ModifiedLaxFriedrichsScheme(system, path)
    if scheme_id == "godunov":
        return GodunovScheme(system, path)
    if scheme_id == "glimm":
        return GlimmScheme(system, seed=seed)
    raise DomainError(f"unknown scheme id {scheme_id!r}")
