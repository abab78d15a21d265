"""Independent reference implementations used to freeze expected values.

Everything here is deliberately written against the package's public
surface only (path evaluation, matrix evaluation), using brute-force
numerics (dense trapezoid quadrature, plain finite differences), so each
oracle stays independent of the code path it checks.
"""

import numpy as np


def dense_path_integral(path, system, u_l, u_r, n=160_000):
    """Midpoint-rule integration of A(Phi) Phi_s over a fine s grid, per leg.

    Midpoints never coincide with the leg boundaries, where piecewise paths
    have ambiguous tangents.
    """
    u_l = np.asarray(u_l, dtype=float)
    u_r = np.asarray(u_r, dtype=float)
    total = np.zeros_like(u_l)
    pts = path.breakpoints
    for a, b in zip(pts[:-1], pts[1:]):
        step = (b - a) / n
        s = a + (np.arange(n) + 0.5) * step
        states = path.evaluate(s, u_l, u_r)
        tangents = path.tangent(s, u_l, u_r)
        A = system.matrix(states)
        integrand = np.einsum("sij,sj->si", A, tangents)
        total = total + integrand.sum(axis=0) * step
    return total


def lf_single_interface_update(u_lm, u_m, u_rp, system, path, dt_over_dx):
    """Hand-rolled Lax-Friedrichs cell update from the three-point formula.

    u_new = (u_{i-1} + u_{i+1})/2 - (dt/2dx) (I(u_{i-1}, u_i) + I(u_i, u_{i+1}))
    with I the dense path integral above.
    """
    u_lm = np.asarray(u_lm, dtype=float)
    u_m = np.asarray(u_m, dtype=float)
    u_rp = np.asarray(u_rp, dtype=float)
    I = dense_path_integral(path, system, u_lm, u_m) + dense_path_integral(
        path, system, u_m, u_rp
    )
    return 0.5 * (u_lm + u_rp) - 0.5 * dt_over_dx * I


def quasilinear_momentum_row(w, flux, noncons_coeff, step=1e-7):
    """Row of A for an equation  q_t + flux(w)_x + noncons_coeff(w) h_x = 0.

    The flux gradient is taken by central differences; the nonconservative
    term adds to the h column.  Used to cross-check hand-written matrices.
    """
    w = np.asarray(w, dtype=float)
    row = np.empty(2)
    for k in range(2):
        h = step * max(1.0, abs(w[k]))
        wp = w.copy()
        wp[k] += h
        wm = w.copy()
        wm[k] -= h
        row[k] = (flux(wp) - flux(wm)) / (2.0 * h)
    row[0] += noncons_coeff(w)
    return row


def i2_dense(system, path, v, v_x, npts=10_001, rel_step=1e-3):
    """Dense-quadrature evaluation of the path-dependent modified-equation term.

    Trapezoid over ``npts`` points per leg with Richardson-extrapolated
    central differences for the endpoint-derivative matrices; independent of
    the package's Gauss-Legendre implementation.
    """
    v = np.asarray(v, dtype=float)
    v_x = np.asarray(v_x, dtype=float)
    n = v.size

    dA = np.empty((n, n, n))
    for k in range(n):
        h = 1e-6 * max(1.0, abs(v[k]))
        vp = v.copy()
        vp[k] += h
        vm = v.copy()
        vm[k] -= h
        dA[k] = (system.matrix(vp) - system.matrix(vm)) / (2.0 * h)

    def dmat(fun, s, which):
        cols = []
        for k in range(n):
            h = rel_step * max(1.0, abs(v[k]))

            def fd(hh):
                vp = v.copy()
                vp[k] += hh
                vm = v.copy()
                vm[k] -= hh
                if which == "l":
                    return (fun(s, vp, v) - fun(s, vm, v)) / (2.0 * hh)
                return (fun(s, v, vp) - fun(s, v, vm)) / (2.0 * hh)

            cols.append((4.0 * fd(h / 2) - fd(h)) / 3.0)
        return np.stack(cols, axis=-1)

    total = np.zeros(n)
    for a, b in zip(path.breakpoints[:-1], path.breakpoints[1:]):
        # midpoints avoid the ambiguous tangent at interior breakpoints
        step = (b - a) / npts
        s = a + (np.arange(npts) + 0.5) * step
        acc = np.zeros((npts, n))
        for which in ("l", "r"):
            dphi = dmat(path.evaluate, s, which)
            dphis = dmat(path.tangent, s, which)
            p = dphi @ v_x
            w = dphis @ v_x
            mats = np.einsum("sk,kij->sij", p, dA)
            acc += np.einsum("sij,sj->si", mats, w)
        total += acc.sum(axis=0) * step
    return total


def i2_second_difference(system, path, v, v_x, t=1e-4):
    """I2 as half the second difference of the two one-sided jump integrals.

    Expanding the interface sums of the three-point scheme around a smooth
    state shows that the path-dependent second-order term equals
    (1/2) d^2/dt^2 [ g(v + t w, v) + g(v, v + t w) ] at t = 0, where g is
    the path integral of A between its two arguments.  Entirely independent
    of the endpoint-derivative formula.
    """
    v = np.asarray(v, dtype=float)
    w = np.asarray(v_x, dtype=float)

    def g(a, b):
        return dense_path_integral(path, system, a, b, n=20_001)

    second = (
        g(v + t * w, v) + g(v - t * w, v) + g(v, v + t * w) + g(v, v - t * w)
    ) / (t * t)
    return 0.5 * second


def hugoniot_q_from_unit_left(h_r):
    """Closed-form flow rate on the slow-family shock locus through (1, 1)."""
    return h_r * (1.0 - np.sqrt((h_r + 1.0) / (2.0 * h_r)) * (h_r - 1.0))


def synthetic_step_history(grid_factory, w_left, w_right, xi, times, x0=0.0):
    """Exact traveling-step profiles sampled on a grid (for extractor tests)."""
    out = []
    for t in times:
        sol = grid_factory(t)
        x = sol.grid.centers
        states = np.where(x[:, None] < x0 + xi * t, w_left, w_right)
        out.append(type(sol)(sol.grid, t, states, sol.n))
    return out
