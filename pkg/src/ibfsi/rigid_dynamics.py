"""Hydrodynamic loads from Lagrange multipliers, free-body updates and diagnostics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from skimage import measure

from .body import cross2, rotation
from .errors import ConfigError
from .grid import FaceField


@dataclass(frozen=True)
class MomentumSample:
    """Fluid momentum inside one body at time ``t`` (already times rho_f)."""

    t: float
    P: np.ndarray
    L: float


def body_momentum(u_markers, body, rho_f):
    """Linear and angular fluid momentum over the body from marker values.

    Volume markers give the quadrature ``sum rho u dV``; surface markers fall
    back on the rigid-body estimate from the current velocities.
    """
    m = body.markers
    if m.role == "volume":
        arms = body.arms()
        P = rho_f * (u_markers * m.dV[:, None]).sum(0)
        L = rho_f * float(np.sum(cross2(arms, u_markers) * m.dV))
        return P, L
    if body.shape.kind == "fiber":
        return np.zeros(2), 0.0
    return rho_f * body.shape.area() * body.state.U, rho_f * body.shape.polar_moment() * body.state.omega


def net_force_torque(lam, history):
    """Net hydrodynamic force and torque on a body.

    ``F = d/dt(int rho u dV) - sum lambda dV`` with a first-order backward
    difference over the last two :class:`MomentumSample` entries; the torque
    follows the same rule with moments about the body centre.
    """
    if len(history) < 2:
        raise ConfigError("net force needs at least two momentum samples")
    a, b = history[-2], history[-1]
    dt = b.t - a.t
    if dt <= 0:
        raise ConfigError("momentum samples must be strictly increasing in time")
    F = (np.asarray(b.P) - np.asarray(a.P)) / dt - lam.total()
    T = (b.L - a.L) / dt - lam.torque()
    return F, float(T)


def update_free_body(b, F_hydro, T_hydro, F_ext=(0.0, 0.0), T_ext=0.0, gravity=(0.0, 0.0), dt=1.0, rho_f=None,
                     previous=None):
    """Explicit update of the rigid velocities; returns ``(state, rates)``.

    ``M dU/dt = F_hydro + F_ext + dM g`` and ``I domega/dt = T_hydro + T_ext``
    with ``dM = M (1 - rho_f / rho_s)`` the buoyancy-corrected mass.  Passing
    the ``rates`` of the previous step as ``previous`` switches to AB2.
    """
    out = b.copy()
    rho_f = b.rho_s if rho_f is None else rho_f
    dM = b.M * (1.0 - rho_f / b.rho_s)
    aU = (np.asarray(F_hydro, float) + np.asarray(F_ext, float) + dM * np.asarray(gravity, float)) / b.M
    aw = (float(T_hydro) + float(T_ext)) / b.I
    if previous is None:
        out.U = b.U + dt * aU
        out.omega = b.omega + dt * aw
    else:
        pU, pw = previous
        out.U = b.U + dt * (1.5 * aU - 0.5 * np.asarray(pU))
        out.omega = b.omega + dt * (1.5 * aw - 0.5 * pw)
    return out, (aU, aw)


def moving_average(series, window):
    """Centred moving mean; the window shrinks symmetrically near the ends."""
    x = np.asarray(series, dtype=float)
    if window < 1 or window % 2 == 0:
        raise ConfigError("moving-average window must be a positive odd integer")
    n = len(x)
    if n == 0 or window == 1:
        return x.copy()
    half = window // 2
    i = np.arange(n)
    k = np.minimum(np.minimum(i, n - 1 - i), half)
    c = np.concatenate([np.zeros((1,) + x.shape[1:]), np.cumsum(x, axis=0)])
    lo, hi = i - k, i + k + 1
    shape = (-1,) + (1,) * (x.ndim - 1)
    return (c[hi] - c[lo]) / (2 * k + 1).reshape(shape)


def _cell_values(field, g):
    if isinstance(field, FaceField):
        return np.stack([0.5 * (field.u[1:] + field.u[:-1]), 0.5 * (field.v[:, 1:] + field.v[:, :-1])], -1)
    return np.asarray(field, float)


def contour_points(phi, g, level):
    """Marching-squares contours of a cell field at ``level`` in lab coordinates."""
    out = []
    for c in measure.find_contours(np.asarray(phi, float), level):
        x = g.origin[0] + (c[:, 0] + 0.5) * g.dx
        y = g.origin[1] + (c[:, 1] + 0.5) * g.dy
        out.append(np.stack([x, y], 1))
    return out


def sample_cell_field(field, g, pts):
    """Bilinear interpolation of a cell field (or face field, averaged) at points."""
    vals = _cell_values(field, g)
    fi = (pts[:, 0] - g.origin[0]) / g.dx - 0.5
    fj = (pts[:, 1] - g.origin[1]) / g.dy - 0.5
    coords = np.vstack([fi, fj])
    if vals.ndim == 2:
        return ndimage.map_coordinates(vals, coords, order=1, mode="nearest")
    return np.stack([ndimage.map_coordinates(vals[..., k], coords, order=1, mode="nearest")
                     for k in range(vals.shape[-1])], -1)


def lifted_surface_sample(field, ls, g, offset=None, nsamples=128, half_width=2.0):
    """Sample ``field`` on the level-set contour ``phi = offset * h``.

    ``offset`` is measured in grid cells and defaults to the kernel
    half-width.  Returns ``(points, values)`` with ``nsamples`` points spaced
    evenly in arc length along the longest contour.
    """
    offset = half_width if offset is None else offset
    if offset < 0:
        raise ConfigError("lifted-surface offset must be non-negative")
    curves = contour_points(ls.phi, g, offset * g.h)
    if not curves:
        raise ConfigError(f"no level-set contour at offset {offset} h")
    c = max(curves, key=len)
    seg = np.linalg.norm(np.diff(c, axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    closed = np.allclose(c[0], c[-1])
    sk = np.linspace(0, s[-1], nsamples, endpoint=not closed)
    pts = np.stack([np.interp(sk, s, c[:, 0]), np.interp(sk, s, c[:, 1])], 1)
    return pts, sample_cell_field(field, g, pts)


def jump_values(Lam, n, t, mu, tol=1e-10):
    """Pressure jump and velocity-gradient jump carried by a surface force.

    ``[[p]] = Lam . n`` and ``[[grad u]] = -(Lam . t / mu) t n^T`` (rows are
    velocity components, columns derivative directions), which annihilates
    ``t`` and is trace free.
    """
    Lam, n, t = (np.asarray(a, float) for a in (Lam, n, t))
    if abs(np.linalg.norm(n) - 1) > tol or abs(np.linalg.norm(t) - 1) > tol or abs(n @ t) > tol:
        raise ConfigError("jump diagnostics need orthonormal normal and tangent vectors")
    # use the exact perpendicular so the structural zeros hold bit-for-bit
    tt = np.sign(t @ np.array([-n[1], n[0]])) * np.array([-n[1], n[0]])
    tau = Lam @ tt
    if mu == 0:
        if tau != 0:
            raise ZeroDivisionError("tangential surface force with zero viscosity has no finite velocity-gradient jump")
        return float(Lam @ n), np.zeros((2, 2))
    return float(Lam @ n), -(tau / mu) * np.outer(tt, n)


def control_surface_force(u, p, g, mu, rho, box):
    """Force on the contents of a grid-aligned box from the surrounding fluid.

    ``F = oint (sigma . n - rho u (u . n)) dS`` over the box with corners
    ``box = (x0, x1, y0, y1)``, snapped to cell faces.  Steady flows only.
    """
    x0, x1, y0, y1 = box
    i0 = int(round((x0 - g.origin[0]) / g.dx))
    i1 = int(round((x1 - g.origin[0]) / g.dx))
    j0 = int(round((y0 - g.origin[1]) / g.dy))
    j1 = int(round((y1 - g.origin[1]) / g.dy))
    if not (1 <= i0 < i1 <= g.nx - 1 and 1 <= j0 < j1 <= g.ny - 1):
        raise ConfigError("control box must lie strictly inside the grid")
    uu, vv = u.u, u.v
    dx, dy = g.dx, g.dy
    F = np.zeros(2)
    # vertical faces x = i * dx, cells j0..j1-1: outward normal -e_x at i0, +e_x at i1
    for i, sgn in ((i0, -1.0), (i1, 1.0)):
        js = np.arange(j0, j1)
        un = uu[i, js]
        pf = 0.5 * (p[i - 1, js] + p[i, js])
        dudx = 0.5 * ((uu[i + 1, js] - uu[i, js]) + (uu[i, js] - uu[i - 1, js])) / dx
        # v at the x-face: average of four v faces around it, dv/dx and du/dy at the face
        vbar = 0.25 * (vv[i - 1, js] + vv[i, js] + vv[i - 1, js + 1] + vv[i, js + 1])
        dvdx = 0.5 * ((vv[i, js] - vv[i - 1, js]) + (vv[i, js + 1] - vv[i - 1, js + 1])) / dx
        dudy = (uu[i, js + 1] - uu[i, js - 1]) / (2 * dy)
        sxx = -pf + 2 * mu * dudx
        sxy = mu * (dudy + dvdx)
        F[0] += sgn * np.sum(sxx - rho * un * un) * dy
        F[1] += sgn * np.sum(sxy - rho * vbar * un) * dy
    for j, sgn in ((j0, -1.0), (j1, 1.0)):
        is_ = np.arange(i0, i1)
        vn = vv[is_, j]
        pf = 0.5 * (p[is_, j - 1] + p[is_, j])
        dvdy = 0.5 * ((vv[is_, j + 1] - vv[is_, j]) + (vv[is_, j] - vv[is_, j - 1])) / dy
        ubar = 0.25 * (uu[is_, j - 1] + uu[is_ + 1, j - 1] + uu[is_, j] + uu[is_ + 1, j])
        dudy = 0.5 * ((uu[is_, j] - uu[is_, j - 1]) + (uu[is_ + 1, j] - uu[is_ + 1, j - 1])) / dy
        dvdx = (vv[is_ + 1, j] - vv[is_ - 1, j]) / (2 * dx)
        syy = -pf + 2 * mu * dvdy
        sxy = mu * (dudy + dvdx)
        F[0] += sgn * np.sum(sxy - rho * ubar * vn) * dx
        F[1] += sgn * np.sum(syy - rho * vn * vn) * dx
    return F


def rigid_arms(body):
    return body.markers.r @ rotation(body.state.theta).T
