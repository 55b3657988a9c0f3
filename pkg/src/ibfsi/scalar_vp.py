"""Volume-penalized scalar transport and Poisson problems with immersed BCs.

Conventions: ``phi`` is a signed distance that is negative in the solid, the
unit normal ``n = grad(phi)/|grad(phi)|`` points from the solid into the
fluid, and the fluid equation is ``-div(D grad q) = f``.  Boundary data on
the interface follow ``a q + b dq/dn = g``:

* Dirichlet ``(a, b) = (1, 0)`` through the penalty ``-(chi/eta)(a q + b dq/dn - g)``;
* Neumann ``D dq/dn = g`` through the flux forcing ``beta`` with ``n . beta = g``;
* Robin ``zeta q + D dq/dn = g`` through the surface reaction term
  ``zeta [div(chi n) - chi div(n)] q`` plus the same flux forcing.

Face values of ``chi`` are averages of the two adjacent cells, and the
diffusion coefficient, ``div(chi beta)`` and ``div(chi n)`` all use them, so
the three terms share one stencil.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .body import LevelSet, characteristic
from .errors import CFLError, ConfigError, DegenerateError, SolverError
from .grid import FaceField, GridSpec, _solve_cell_system, poisson_solve, scalar_bc_tags, scalar_diffusion


class _NoCache:
    def factor(self, key, build):
        return spla.splu(build().tocsc())


@dataclass
class VPConfig:
    """Penalization data for one scalar problem on ``grid``.

    ``g`` and ``outer_values`` are callables ``(x, y) -> value`` (constants
    are accepted for ``g``).  ``outer_bc`` maps box sides to
    ``'dirichlet' | 'neumann' | 'periodic'``.
    """

    grid: GridSpec
    ls: LevelSet
    eta: Optional[float] = None
    a: float = 1.0
    b: float = 0.0
    g: Union[float, Callable] = 0.0
    D: float = 1.0
    f: Optional[np.ndarray] = None
    beta: Optional[FaceField] = None
    zeta: float = 0.0
    outer_bc: Optional[dict] = None
    outer_values: Optional[Callable] = None
    smooth_chi: bool = False
    chi_override: Optional[np.ndarray] = field(default=None, repr=False)
    implicit_penalty: bool = True

    def __post_init__(self):
        if self.eta is None:
            self.eta = 1e-8 * self.grid.h**2 / self.D if self.D > 0 else 1e-8
        if not self.eta > 0:
            raise ConfigError("penalization parameter eta must be positive")
        if self.a == 0 and self.b == 0:
            raise ConfigError("Robin coefficients (a, b) must not both vanish")
        if self.zeta < 0:
            raise ConfigError("Robin reaction coefficient zeta must be non-negative")
        if self.D <= 0:
            raise ConfigError("diffusivity must be positive")
        if self.ls.phi.shape != (self.grid.nx, self.grid.ny):
            raise ConfigError("level set does not match the grid")

    def gfun(self):
        if callable(self.g):
            return self.g
        c = float(self.g)
        return lambda x, y: np.full(np.broadcast(np.asarray(x), np.asarray(y)).shape, c)


# ---------------------------------------------------------------------------
# geometry on the grid


def face_values(cell, g):
    """Average a cell array to both face sets (edge faces copy the edge cell)."""
    c = np.asarray(cell, float)
    pu = np.concatenate([c[:1], c, c[-1:]], 0)
    pv = np.concatenate([c[:, :1], c, c[:, -1:]], 1)
    if g.periodic_x:
        pu[0], pu[-1] = c[-1], c[0]
    if g.periodic_y:
        pv[:, 0], pv[:, -1] = c[:, -1], c[:, 0]
    return FaceField(0.5 * (pu[1:] + pu[:-1]), 0.5 * (pv[:, 1:] + pv[:, :-1]))


def _phi_faces(ls, g):
    if ls.shape is not None:
        return FaceField(ls.shape.signed_distance(*g.u_faces()), ls.shape.signed_distance(*g.v_faces()))
    return face_values(ls.phi, g)


def normals(ls, g, where="faces", band=3.0):
    """Unit normals ``grad(phi)/|grad(phi)|`` at faces (FaceField of both components
    per face set) or cells; raises if ``|grad phi| < 0.5`` within ``band`` cells
    of the interface.
    """
    gx, gy = np.gradient(ls.phi, g.dx, g.dy)
    if where == "cells":
        nrm = np.hypot(gx, gy)
        near = np.abs(ls.phi) < band * g.h
        if np.any(nrm[near] < 0.5):
            raise DegenerateError("level-set gradient below 0.5 near the interface")
        nrm = np.where(nrm > 0, nrm, 1.0)
        return gx / nrm, gy / nrm
    fx, fy = face_values(gx, g), face_values(gy, g)
    phif = _phi_faces(ls, g)
    out = []
    for c in (0, 1):
        ax, ay = fx.comp(c), fy.comp(c)
        nrm = np.hypot(ax, ay)
        near = np.abs(phif.comp(c)) < band * g.h
        if np.any(nrm[near] < 0.5):
            raise DegenerateError("level-set gradient below 0.5 near the interface")
        nrm = np.where(nrm > 0, nrm, 1.0)
        out.append((ax / nrm, ay / nrm))
    return out  # [(nx, ny) on u faces, (nx, ny) on v faces]


def construct_beta(ls, gdata, grid):
    """Flux forcing ``beta = g~ n`` with ``g~`` the closest-point extension of ``g``.

    ``gdata`` is a callable ``(x, y) -> g`` evaluated at ``x - phi n``.
    Only the face-normal component of ``beta`` is stored on each face set.
    """
    if not callable(gdata):
        const = float(gdata)
        gdata = lambda x, y: np.full(np.shape(x), const)  # noqa: E731
    nf = normals(ls, grid, "faces")
    phif = _phi_faces(ls, grid)
    comps = []
    for c, (x, y) in enumerate((grid.u_faces(), grid.v_faces())):
        nx_, ny_ = nf[c]
        ph = phif.comp(c)
        gt = np.asarray(gdata(x - ph * nx_, y - ph * ny_), float)
        comps.append(gt * (nx_ if c == 0 else ny_))
    return FaceField(*comps)


def _face_div(F, g):
    """Cell divergence of a face flux field (full face arrays)."""
    return (F.u[1:] - F.u[:-1]) / g.dx + (F.v[:, 1:] - F.v[:, :-1]) / g.dy


def vp_fields(cfg):
    """``(chi_cell, chi_face)`` for a configuration."""
    g = cfg.grid
    if cfg.chi_override is not None:
        chi_c = np.asarray(cfg.chi_override, float)
    else:
        chi_c = characteristic(cfg.ls.phi, g.h, cfg.smooth_chi)
    return chi_c, face_values(chi_c, g)


def _robin_surface(chi_f, cfg):
    """``div(chi n) - chi div(n)`` at cells (approximates ``n . grad chi``)."""
    g = cfg.grid
    nf = normals(cfg.ls, g, "faces")
    nn = FaceField(nf[0][0], nf[1][1])
    chi_c = vp_fields(cfg)[0]
    return _face_div(FaceField(chi_f.u * nn.u, chi_f.v * nn.v), g) - chi_c * _face_div(nn, g)


# ---------------------------------------------------------------------------
# steady penalized Poisson problems


def _source(cfg):
    g = cfg.grid
    return np.zeros((g.nx, g.ny)) if cfg.f is None else np.asarray(cfg.f, float)


def _penalized_solve(cfg, zeta):
    g = cfg.grid
    chi_c, chi_f = vp_fields(cfg)
    f = _source(cfg)
    if not chi_c.any() and not chi_f.u.any() and not chi_f.v.any():
        # no body: the unpenalized Poisson problem
        return poisson_solve(-f / cfg.D, g, cfg.outer_bc or None, cfg.outer_values)
    coef = FaceField(cfg.D * (1 - chi_f.u) + cfg.eta * chi_f.u, cfg.D * (1 - chi_f.v) + cfg.eta * chi_f.v)
    A, bvec, tags = scalar_diffusion(g, cfg.outer_bc, coef, cfg.outer_values)
    rhs = ((1 - chi_c) * f).ravel()
    if cfg.beta is not None:
        beta = cfg.beta
        rhs = rhs + (_face_div(FaceField(chi_f.u * beta.u, chi_f.v * beta.v), g) - chi_c * _face_div(beta, g)).ravel()
    # -(A q + b) + zeta s q = rhs
    M = -A
    if zeta:
        s = _robin_surface(chi_f, cfg)
        M = M + sp.diags(zeta * s.ravel())
    rhs = rhs + bvec
    singular = "dirichlet" not in tags.values() and not zeta
    if singular:
        defect = abs(rhs.sum())
        if defect > 1e-8 * max(np.abs(rhs).sum(), 1.0):
            raise ConfigError(f"incompatible all-Neumann data: net source {defect * g.dx * g.dy:.3e}")
    q, _info = _solve_cell_system(_NoCache(), "vp", lambda: M.tocsc(), rhs, singular, tol=1e-9)
    return q.reshape(g.nx, g.ny)


def vp_poisson_neumann(cfg):
    """Penalized Poisson problem with flux data ``D dq/dn = n . beta`` on the body."""
    return _penalized_solve(cfg, 0.0)


def vp_poisson_robin(cfg):
    """Penalized Poisson problem with Robin data ``zeta q + D dq/dn = n . beta``."""
    return _penalized_solve(cfg, cfg.zeta)


def vp_poisson_dirichlet(cfg):
    """Steady Dirichlet-penalized problem ``-div(D grad q) + (chi/eta)(q - g) = (1 - chi) f``."""
    g = cfg.grid
    chi_c, _ = vp_fields(cfg)
    f = _source(cfg)
    if not chi_c.any():
        return poisson_solve(-f / cfg.D, g, cfg.outer_bc or None, cfg.outer_values)
    A, bvec, tags = scalar_diffusion(g, cfg.outer_bc, None, cfg.outer_values)
    xc, yc = g.cell_centers()
    gv = np.asarray(cfg.gfun()(xc, yc), float)
    M = -cfg.D * A + sp.diags((chi_c / cfg.eta).ravel())
    rhs = ((1 - chi_c) * f + chi_c * gv / cfg.eta).ravel() + cfg.D * bvec
    q, _ = _solve_cell_system(_NoCache(), "vp", lambda: M.tocsc(), rhs, False, tol=1e-9)
    return q.reshape(g.nx, g.ny)


# ---------------------------------------------------------------------------
# transport


def _advective_term(q, u, g, tags):
    """Centred ``u . grad q`` at cells (velocity averaged from faces)."""
    uc = 0.5 * (u.u[1:] + u.u[:-1])
    vc = 0.5 * (u.v[:, 1:] + u.v[:, :-1])
    P = np.pad(q, 1, mode="edge")
    if tags["left"] == "periodic":
        P[0, 1:-1], P[-1, 1:-1] = q[-1], q[0]
    if tags["bottom"] == "periodic":
        P[1:-1, 0], P[1:-1, -1] = q[:, -1], q[:, 0]
    dqx = (P[2:, 1:-1] - P[:-2, 1:-1]) / (2 * g.dx)
    dqy = (P[1:-1, 2:] - P[1:-1, :-2]) / (2 * g.dy)
    return uc * dqx + vc * dqy


def _upwind_normal_derivative(g, nc):
    """Sparse ``n . grad`` at cells using one-sided differences taken from the
    solid interior (against ``n``)."""
    nx, ny = g.nx, g.ny
    I, J = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
    idx = I * ny + J
    rows, cols, vals = [], [], []
    for axis, comp, h in ((0, nc[0], g.dx), (1, nc[1], g.dy)):
        pos = I if axis == 0 else J
        n = nx if axis == 0 else ny
        step = np.where(comp >= 0, -1, 1)
        nb = np.clip(pos + step, 0, n - 1)
        ok = nb != pos
        nbI, nbJ = (nb, J) if axis == 0 else (I, nb)
        c = np.abs(comp) / h
        rows += [idx[ok], idx[ok]]
        cols += [idx[ok], (nbI * ny + nbJ)[ok]]
        vals += [c[ok], -c[ok]]
    return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(nx * ny, nx * ny))


def transport_step(q, u, g, D, dt, f=None, bc=None, values=None, cfl=1.0):
    """Unpenalized advection-diffusion step: explicit advection, implicit diffusion."""
    tags = scalar_bc_tags(g, bc)
    _check_cfl(u, g, dt, cfl)
    A, bvec, _ = scalar_diffusion(g, bc, None, values)
    rhs = q / dt
    if u is not None:
        rhs = rhs - _advective_term(q, u, g, tags)
    if f is not None:
        rhs = rhs + f
    M = sp.identity(g.nx * g.ny, format="csr") / dt - D * A
    out = spla.spsolve(M.tocsc(), rhs.ravel() + D * bvec)
    return out.reshape(g.nx, g.ny)


def _check_cfl(u, g, dt, cfl):
    if u is None:
        return
    umax = u.max_abs()
    if umax > 0 and dt * umax / g.h > cfl:
        raise CFLError(f"advective CFL {dt * umax / g.h:.3g} exceeds {cfl}", suggested_dt=cfl * g.h / umax)


def vp_transport_step(q, u, cfg, dt, cfl=1.0):
    """One step of penalized advection-diffusion.

    ``dq/dt + (1 - chi) u . grad q = div(D grad q) + (1 - chi) f - (chi/eta)(a q + b dq/dn - g)``
    with advection explicit and diffusion plus penalty implicit, so steps far
    larger than ``eta`` stay stable.  ``cfg.implicit_penalty = False`` moves
    the penalty to the right-hand side (needs ``dt < eta``).  With ``chi = 0``
    this is exactly :func:`transport_step`.
    """
    g = cfg.grid
    chi_c, _ = vp_fields(cfg)
    if not chi_c.any():
        return transport_step(q, u, g, cfg.D, dt, cfg.f, cfg.outer_bc, cfg.outer_values, cfl)
    tags = scalar_bc_tags(g, cfg.outer_bc)
    _check_cfl(u, g, dt, cfl)
    A, bvec, _ = scalar_diffusion(g, cfg.outer_bc, None, cfg.outer_values)
    rhs = q / dt
    if u is not None:
        rhs = rhs - (1 - chi_c) * _advective_term(q, u, g, tags)
    if cfg.f is not None:
        rhs = rhs + (1 - chi_c) * cfg.f
    xc, yc = g.cell_centers()
    rhs = rhs + chi_c * np.asarray(cfg.gfun()(xc, yc), float) / cfg.eta
    P = sp.diags((chi_c * cfg.a / cfg.eta).ravel())
    if cfg.b:
        Dn = _upwind_normal_derivative(g, normals(cfg.ls, g, "cells"))
        P = P + sp.diags((chi_c * cfg.b / cfg.eta).ravel()) @ Dn
    M = sp.identity(g.nx * g.ny, format="csr") / dt - cfg.D * A
    if cfg.implicit_penalty:
        M = M + P
    else:
        if dt >= cfg.eta:
            raise CFLError(f"explicit penalty needs dt < eta = {cfg.eta:.3g}", suggested_dt=0.5 * cfg.eta)
        rhs = rhs - (P @ q.ravel()).reshape(q.shape)
    out = spla.spsolve(M.tocsc(), rhs.ravel() + cfg.D * bvec)
    if not np.all(np.isfinite(out)):
        raise SolverError("penalized transport solve produced non-finite values")
    return out.reshape(g.nx, g.ny)
