"""Fractional-step incompressible Navier-Stokes core on the MAC grid.

One step of the plain solver is

1. predictor: ``rho (u_hat - u^n)/dt + rho div(u^n u^n) = mu lap(u) - grad p^n + f``
   with ``lap`` applied to ``u_hat`` (implicit diffusion) or ``u^n`` (explicit),
   plus an optional pointwise penalty ``K (u_s - u_hat)`` treated implicitly;
2. projection: ``lap(phi) = (rho/dt) div(u_hat)``, ``u = u_hat - (dt/rho) grad(phi)``,
   ``p^{n+1} = p^n + phi``.

Constraint schemes (see :mod:`ibfsi.coupling`) reuse these building blocks
and insert their own substeps between them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import CFLError, ConfigError, SolverError
from .grid import FaceField, GridSpec, check_face, convect, divergence, face_inner, operators, sync_periodic


@dataclass(frozen=True)
class FluidConfig:
    """Physical and numerical parameters of the fluid solver."""

    rho: float = 1.0
    mu: float = 0.01
    implicit_diffusion: bool = True
    upwind: float = 0.0
    cfl: float = 0.5
    viscous_safety: float = 0.25
    check_cfl: bool = True

    def __post_init__(self):
        if self.rho <= 0 or self.mu < 0:
            raise ConfigError("fluid density must be positive and viscosity non-negative")
        if not 0.0 <= self.upwind <= 1.0:
            raise ConfigError("upwind blending must lie in [0, 1]")

    @property
    def nu(self):
        return self.mu / self.rho


@dataclass
class FluidState:
    """Velocity, pressure and clock of one simulation."""

    grid: GridSpec
    u: FaceField
    p: np.ndarray
    cfg: FluidConfig = field(default_factory=FluidConfig)
    t: float = 0.0
    nstep: int = 0
    trace: list = field(default_factory=list)

    @classmethod
    def zeros(cls, g, cfg=None):
        ops = operators(g)
        return cls(g, ops.unpack(np.zeros(ops.n_dof)), g.zeros_cell(), cfg or FluidConfig())

    def copy(self):
        return FluidState(self.grid, self.u.copy(), self.p.copy(), self.cfg, self.t, self.nstep, [])


@dataclass
class Penalty:
    """Pointwise implicit penalty ``K (target - u_hat)`` on faces."""

    K: FaceField
    target: FaceField


# ---------------------------------------------------------------------------
# diagnostics


def kinetic_energy(state):
    """``1/2 rho sum |u|^2 dV`` over unique faces."""
    return 0.5 * state.cfg.rho * face_inner(state.u, state.u, state.grid)


def momentum(state):
    """Total ``rho sum u dV`` over unique faces (both components)."""
    g = state.grid
    nu_x, _ = g.n_unique(0)
    _, nv_y = g.n_unique(1)
    dA = g.dx * g.dy
    return state.cfg.rho * dA * np.array([state.u.u[:nu_x].sum(), state.u.v[:, :nv_y].sum()])


def max_divergence(u, g):
    return float(np.abs(divergence(u, g)).max())


def stable_dt(state):
    """Largest step allowed by the advective and (explicit) viscous limits."""
    g, cfg = state.grid, state.cfg
    umax = max(state.u.max_abs(), _boundary_speed(g))
    dt = np.inf if umax == 0 else cfg.cfl * g.h / umax
    if not cfg.implicit_diffusion and cfg.mu > 0:
        dt = min(dt, cfg.viscous_safety * g.h**2 * cfg.rho / cfg.mu)
    return dt


def _boundary_speed(g):
    return max(np.abs(g.side(s).velocity).max() for s in ("left", "right", "bottom", "top"))


def check_cfl(state, dt):
    if not state.cfg.check_cfl:
        return
    lim = stable_dt(state)
    if dt > lim * (1 + 1e-12):
        raise CFLError(f"time step {dt:.4g} exceeds the stability limit {lim:.4g}", suggested_dt=lim)


# ---------------------------------------------------------------------------
# substeps


def _momentum_matrix(ops, coef, mu, kdiag, implicit):
    d = coef + kdiag
    if implicit and mu > 0:
        return sp.diags(d) - mu * ops.lap
    return sp.diags(d)


def predictor(state, extra_force=None, dt=None, penalty=None, convection=None):
    """Intermediate velocity ``u_hat`` from the momentum equation.

    ``extra_force`` is a face field of force density.  ``penalty`` adds the
    implicit pointwise term ``K (target - u_hat)``.  ``convection`` overrides
    the explicit convective term (used by the Picard option).
    """
    if dt is None or dt <= 0:
        raise ConfigError("time step must be positive")
    g, cfg = state.grid, state.cfg
    check_cfl(state, dt)
    ops = operators(g)
    x = ops.pack(state.u)
    c = ops.pack(convect(state.u, g, cfg.upwind)) if convection is None else ops.pack(convection)
    rhs = cfg.rho / dt * x - cfg.rho * c - ops.grad @ state.p.ravel()
    if extra_force is not None:
        check_face(extra_force, g)
        rhs += ops.pack(extra_force)
    if cfg.mu > 0:
        if cfg.implicit_diffusion:
            rhs += cfg.mu * ops.lap_bc
        else:
            rhs += cfg.mu * (ops.lap @ x + ops.lap_bc)
    kdiag = np.zeros(ops.n_dof)
    if penalty is not None:
        kdiag = ops.pack(penalty.K)
        rhs += kdiag * ops.pack(penalty.target)
    coef = cfg.rho / dt
    if cfg.implicit_diffusion and cfg.mu > 0:
        A = _momentum_matrix(ops, np.full(ops.n_dof, coef), cfg.mu, kdiag, True)
        if penalty is None:
            lu = ops.factor(("momentum", dt, cfg.rho, cfg.mu), lambda: A)
        else:
            lu = spla.splu(A.tocsc())
        y = lu.solve(rhs)
        res = np.abs(A @ y - rhs).max()
        if not np.isfinite(res) or res > 1e-8 * max(1.0, np.abs(rhs).max()):
            raise SolverError(f"implicit momentum solve did not converge (residual {res:.3e})")
    else:
        y = rhs / (coef + kdiag)
    state.trace.append("predictor")
    return ops.unpack(y)


def project(u_hat, state, dt):
    """Pressure projection; returns ``(u^{n+1}, p^{n+1}, phi)``."""
    g, cfg = state.grid, state.cfg
    ops = operators(g)
    x = ops.pack(u_hat)
    rhs = cfg.rho / dt * (ops.div @ x + ops.div_bc)
    phi, _info = ops.solve_pressure(rhs)
    y = x - dt / cfg.rho * (ops.grad @ phi)
    state.trace.append("pressure_projection")
    return ops.unpack(y), state.p + phi.reshape(g.nx, g.ny), phi.reshape(g.nx, g.ny)


def step(state, dt, bodies=(), scheme=None, force=None):
    """Advance ``state`` (in place) by one step; returns a diagnostics dict.

    Without a scheme this is the plain projection step; otherwise the
    scheme's own ordering of substeps runs.
    """
    state.trace = []
    if scheme is not None:
        diag = scheme.step(state, bodies, dt)
    else:
        u_hat = predictor(state, force, dt)
        state.u, state.p, _ = project(u_hat, state, dt)
        diag = {}
    state.t += dt
    state.nstep += 1
    diag.setdefault("t", state.t)
    diag["ke"] = kinetic_energy(state)
    diag["max_div"] = max_divergence(state.u, state.grid)
    if not state.u.isfinite():
        raise SolverError(f"non-finite velocity at step {state.nstep}")
    return diag


def sample_face_field(fn, g, t=0.0):
    """Face field sampled from ``fn(x, y, t) -> (u, v)`` at the face centres."""
    xu, yu = g.u_faces()
    xv, yv = g.v_faces()
    u = np.broadcast_to(np.asarray(fn(xu, yu, t)[0], float), xu.shape).copy()
    v = np.broadcast_to(np.asarray(fn(xv, yv, t)[1], float), xv.shape).copy()
    return sync_periodic(FaceField(u, v), g)
