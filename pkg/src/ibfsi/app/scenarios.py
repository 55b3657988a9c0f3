"""Built-in scenarios: default configurations plus the code that runs them.

Every runner takes a validated :class:`RunConfig` and a :class:`RunContext`
and returns a :class:`ScenarioResult`.  ``error`` is set when an analytic
oracle exists; otherwise ``observable`` feeds the finest-grid oracle of the
convergence harness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .. import io
from ..body import Body, Shape, level_set, normalize_deformation
from ..coupling import ConstraintConfig, FiberElasticity, make_scheme
from ..errors import ConfigError
from ..grid import FaceField
from ..implicit_dlm import assemble_stokes_dlm, solve_dlm
from ..kernels import DeltaKernel, MLSConfig
from ..ns_solver import FluidConfig, FluidState, kinetic_energy, sample_face_field, stable_dt, step
from ..rigid_dynamics import control_surface_force, moving_average, net_force_torque
from ..scalar_vp import VPConfig, construct_beta, vp_poisson_neumann, vp_poisson_robin, vp_transport_step
from .expr import compile_expr

TWO_PI = 2 * math.pi
BOX_SIDES = ("left", "right", "bottom", "top")


@dataclass
class ScenarioResult:
    metrics: dict = field(default_factory=dict)
    error: Optional[float] = None
    observable: Optional[float] = None
    series: Optional[io.TimeSeries] = None


@dataclass
class RunContext:
    """Where artifacts go (``out_dir=None`` disables writing)."""

    out_dir: Optional[Path] = None
    files: list = field(default_factory=list)

    def path(self, name):
        return None if self.out_dir is None else Path(self.out_dir) / name

    def write(self, name, writer, *args, **kw):
        p = self.path(name)
        if p is not None:
            writer(p, *args, **kw)
            self.files.append(name)


@dataclass(frozen=True)
class Scenario:
    name: str
    description: str
    defaults: dict
    runner: Callable
    has_velocity: bool = True


# ---------------------------------------------------------------------------
# builders


def fluid_config(cfg):
    f = cfg.fluid
    return FluidConfig(rho=f.rho, mu=f.mu, implicit_diffusion=f.implicit_diffusion, upwind=f.upwind, cfl=f.cfl,
                       check_cfl=f.check_cfl)


def make_kernel(cc):
    if cc.kernel == "mls":
        return MLSConfig(degree=cc.mls_degree, radius=cc.mls_radius)
    return DeltaKernel(cc.kernel)


def constraint_config(cfg):
    cc = cfg.constraint
    return ConstraintConfig(cc.scheme, cc.locus, make_kernel(cc), cc.kappa, cc.k, cc.c, cc.forcing_iterations,
                            cc.smooth_chi, cc.picard)


def make_shape(bc):
    if bc.shape == "disc":
        return Shape.disc(bc.radius, bc.center)
    if bc.shape == "ellipse":
        return Shape.ellipse(bc.a, bc.b, bc.center, bc.angle)
    if bc.shape == "rectangle":
        return Shape.rectangle(bc.width, bc.height, bc.center, bc.angle)
    half = 0.5 * bc.length
    return Shape.fiber([[-half, 0.0], [0.0, 0.0], [half, 0.0]], False, bc.center, bc.angle)


def make_bodies(cfg, g, role=None, **kw):
    role = role or cfg.constraint.locus
    out = []
    for name in sorted(cfg.body, key=lambda k: (len(k), k)):
        bc = cfg.body[name]
        b = Body.from_shape(make_shape(bc), bc.spacing * g.h, role, bc.rho_s, bc.motion, name=f"body{name}", **kw)
        b.state.U = np.array(bc.U, float)
        b.state.omega = float(bc.omega)
        out.append(b)
    return out


class _Totals:
    def __init__(self, rec):
        self.rec = rec

    def total(self):
        return self.rec["lam_force"]

    def torque(self):
        return self.rec["lam_torque"]


def net_load(body, rec):
    """Net hydrodynamic force and torque for a step record."""
    if "force" in rec:
        return np.asarray(rec["force"], float), float(rec["torque"])
    if len(body.history) >= 2:
        return net_force_torque(_Totals(rec), body.history)
    return -np.asarray(rec["lam_force"], float), -float(rec["lam_torque"])


def march(cfg, ctx, state, bodies=(), scheme=None, dt_rule=None, row_hook=None, force=None):
    """Time loop to ``t_end`` or ``max_steps``; returns the time series."""
    if cfg.t_end is None and cfg.max_steps is None:
        raise ConfigError("set t_end or max_steps")
    series = io.TimeSeries()
    n = 0
    every = cfg.output.snapshot_every
    while True:
        if cfg.max_steps is not None and n >= cfg.max_steps:
            break
        if cfg.t_end is not None and state.t >= cfg.t_end * (1 - 1e-12):
            break
        dt = cfg.dt if cfg.dt is not None else dt_rule(state)
        if cfg.t_end is not None:
            # spread the remainder evenly instead of ending on a sliver step
            # (penalty strengths scale like 1/dt)
            left = cfg.t_end - state.t
            dt = left / math.ceil(left / dt * (1 - 1e-12))
        diag = step(state, dt, bodies, scheme, force)
        n += 1
        row = {"step": n, "t": diag["t"], "ke": diag["ke"], "max_div": diag["max_div"]}
        for i, (b, rec) in enumerate(zip(bodies, diag.get("bodies", []))):
            F, T = net_load(b, rec)
            rec["net_force"], rec["net_torque"] = F, T
            row.update(io.flatten_record(f"b{i}_", {k: v for k, v in rec.items() if k not in ("P", "L")}))
        if row_hook is not None:
            row_hook(row, state, diag)
        series.append(row)
        if every and n % every == 0 and cfg.output.vtk:
            ctx.write(f"snapshot_{n:06d}.vtk", io.write_vtk, state.grid, {"p": state.p}, {"velocity": state.u})
    return series


def finish_fluid(cfg, ctx, state, series, bodies=()):
    ctx.write("timeseries.csv", series.write)
    if cfg.output.vtk:
        ctx.write("final.vtk", io.write_vtk, state.grid, {"p": state.p}, {"velocity": state.u})
    if cfg.output.markers:
        for i, b in enumerate(bodies):
            ctx.write(f"markers_b{i}.csv", io.write_markers, b.markers)
    if bodies and series.rows:
        w = int(cfg.params.get("filter_window", 5))
        w = w if w % 2 else w + 1
        rows = []
        cols = []
        for i in range(len(bodies)):
            F = np.stack([series.column(f"b{i}_net_force_x"), series.column(f"b{i}_net_force_y"),
                          series.column(f"b{i}_net_torque")], 1)
            cols.append((F, moving_average(F, w), series.column(f"b{i}_lam_max")))
        t = series.column("t")
        for k in range(len(t)):
            r = [t[k]]
            for F, Ff, lm in cols:
                r += list(F[k]) + list(Ff[k]) + [lm[k]]
            rows.append(r)
        header = ["t"]
        for i in range(len(bodies)):
            header += [f"b{i}_{c}" for c in ("Fx", "Fy", "T", "Fx_filtered", "Fy_filtered", "T_filtered", "lam_max")]
        ctx.write("forces.csv", io.write_csv, header, rows)


def max_div_metric(series):
    return float(np.max(series.column("max_div"))) if series.rows else 0.0


# ---------------------------------------------------------------------------
# fluid-only


def _tg_velocity(nu):
    def fn(x, y, t):
        e = np.exp(-2 * nu * t)
        return np.sin(x) * np.cos(y) * e, -np.cos(x) * np.sin(y) * e

    return fn


def run_taylor_green(cfg, ctx):
    g = cfg.grid.build()
    fc = fluid_config(cfg)
    nu = fc.nu
    fn = _tg_velocity(nu)
    xc, yc = g.cell_centers()
    p0 = 0.25 * fc.rho * (np.cos(2 * xc) + np.cos(2 * yc))
    state = FluidState(g, sample_face_field(fn, g), p0, fc)
    ke0 = kinetic_energy(state)
    # dt proportional to h^2 so the first-order time error falls at the spatial rate
    factor = cfg.params["dt_factor"]
    t_end = cfg.t_end
    # (capped by the advective limit, which binds on coarse grids)
    dt0 = min(factor * g.h**2 / nu, stable_dt(state))
    nsteps = max(1, int(math.ceil(t_end / dt0))) if cfg.dt is None else None

    def rule(st):
        return t_end / nsteps

    def hook(row, st, diag):
        row["ke_exact"] = ke0 * math.exp(-4 * nu * st.t)

    series = march(cfg, ctx, state, dt_rule=rule, row_hook=hook)
    ex = sample_face_field(fn, g, state.t)
    err = math.sqrt(float(np.mean((state.u.u - ex.u) ** 2) + np.mean((state.u.v - ex.v) ** 2)))
    ke_rel = kinetic_energy(state) / (ke0 * math.exp(-4 * nu * state.t)) - 1.0
    finish_fluid(cfg, ctx, state, series)
    return ScenarioResult({"l2_velocity_error": err, "ke_relative_error": ke_rel, "max_div": max_div_metric(series),
                           "steps": len(series.rows)}, error=err, series=series)


def poiseuille_exact(y, a, G, mu):
    return np.where((y > a) & (y < 1 - a), G / (2 * mu) * (y - a) * (1 - a - y), 0.0)


def run_poiseuille_brinkman(cfg, ctx):
    """Channel between two penalized slabs; ``grid.nx`` is the cross-channel resolution."""
    N = cfg.grid.nx
    P = cfg.params
    a = (round(P["wall_fraction"] * N) + P["wall_offset"]) / N
    from ..grid import BC, GridSpec

    h = 1.0 / N
    g = GridSpec(4, N, h, origin=(0.0, 0.0), left=BC("periodic"), right=BC("periodic"), bottom=BC("wall"),
                 top=BC("wall"))
    fc = fluid_config(cfg)
    state = FluidState.zeros(g, fc)
    slabs = []
    for yc in (0.0, 1.0):
        sh = Shape.rectangle(g.lx + 8 * h, 2 * a, (0.5 * g.lx, yc))
        slabs.append(Body.from_shape(sh, sh.feature_size(), "surface", name=f"slab{int(yc)}"))
    eta = P["eta"]
    cc = constraint_config(cfg)
    cc = ConstraintConfig("brinkman", cc.locus, cc.kernel, 1.0 / eta, smooth_chi=cc.smooth_chi)
    f = g.zeros_face()
    f.u[:] = P["G"]
    scheme = make_scheme(cc, body_force=f)
    series = march(cfg, ctx, state, slabs, scheme, dt_rule=lambda st: P["dt"])
    x, y = g.u_faces()
    err = float(np.abs(state.u.u - poiseuille_exact(y, a, P["G"], fc.mu)).max())
    finish_fluid(cfg, ctx, state, series)
    return ScenarioResult({"linf_velocity_error": err, "wall_position": a, "h": h, "eta": eta,
                           "max_div": max_div_metric(series)}, error=err, series=series)


# ---------------------------------------------------------------------------
# bodies in flow


def _adaptive_dt(cfg, h, cap):
    fc = fluid_config(cfg)

    def rule(st):
        dt = min(cap * h, 0.8 * stable_dt(st))
        if not fc.implicit_diffusion and fc.mu > 0:
            dt = min(dt, 0.24 * h * h / fc.nu)
        return dt

    return rule


def run_cylinder(cfg, ctx):
    g = cfg.grid.build()
    fc = fluid_config(cfg)
    Uinf = cfg.grid.inflow[0]
    state = FluidState(g, sample_face_field(lambda x, y, t: (Uinf + 0 * x, 0 * y), g), g.zeros_cell(), fc)
    bodies = make_bodies(cfg, g)
    scheme = make_scheme(constraint_config(cfg))
    series = march(cfg, ctx, state, bodies, scheme, _adaptive_dt(cfg, g.h, cfg.params["dt_cap"]))
    D = 2 * cfg.body[sorted(cfg.body)[0]].radius
    q = 0.5 * fc.rho * Uinf**2 * D
    nav = max(1, int(cfg.params["average_steps"]))
    Fx = series.column("b0_net_force_x")[-nav:].mean()
    Fy = series.column("b0_net_force_y")[-nav:].mean()
    c = bodies[0].state.X_c
    half = cfg.params["control_half_width"]
    box = (c[0] - half, c[0] + 2 * half, c[1] - half, c[1] + half)
    Fcs = control_surface_force(state.u, state.p, g, fc.mu, fc.rho, box)
    finish_fluid(cfg, ctx, state, series, bodies)
    metrics = {"cd": Fx / q, "cl": Fy / q, "force_x": Fx, "force_y": Fy, "control_surface_force_x": Fcs[0],
               "control_surface_force_y": Fcs[1], "slip": float(series.column("b0_slip")[-1]),
               "max_div": max_div_metric(series), "steps": len(series.rows)}
    if "b0_slip_constraint" in series.header:
        metrics["slip_constraint"] = float(series.column("b0_slip_constraint")[-1])
    return ScenarioResult(metrics, observable=Fx / q, series=series)


def run_free_falling_disc(cfg, ctx):
    g = cfg.grid.build()
    fc = fluid_config(cfg)
    state = FluidState.zeros(g, fc)
    bodies = make_bodies(cfg, g)
    scheme = make_scheme(constraint_config(cfg), gravity=(0.0, cfg.params["gravity"]))
    series = march(cfg, ctx, state, bodies, scheme, _adaptive_dt(cfg, g.h, cfg.params["dt_cap"]))
    finish_fluid(cfg, ctx, state, series, bodies)
    V = float(bodies[0].state.U[1])
    return ScenarioResult({"velocity_y": V, "position_y": float(bodies[0].state.X_c[1]),
                           "max_div": max_div_metric(series)}, observable=V, series=series)


def _identity_hook(nbodies, rho):
    """Per-step residual of ``sum lambda dV = F_ext`` relative to ``sum |lambda| dV``."""

    def hook(row, st, diag):
        worst = 0.0
        for i, rec in enumerate(diag["bodies"]):
            Fe = np.asarray(rec.get("F_ext", np.zeros(2)), float)
            scale = max(rec["lam_abs"], float(np.linalg.norm(Fe)), 1e-300)
            r = float(np.linalg.norm(np.asarray(rec["lam_force"]) - Fe)) / scale
            row[f"b{i}_identity"] = r
            worst = max(worst, r)
        row["identity_residual"] = worst

    return hook


def run_two_disc_spring_swimmer(cfg, ctx):
    g = cfg.grid.build()
    fc = fluid_config(cfg)
    state = FluidState.zeros(g, fc)
    bodies = make_bodies(cfg, g)
    if len(bodies) != 2:
        raise ConfigError("the spring swimmer needs exactly two bodies")
    P = cfg.params
    L0 = float(np.linalg.norm(bodies[1].state.X_c - bodies[0].state.X_c))

    def springs(bs, t):
        d = bs[1].state.X_c - bs[0].state.X_c
        L = float(np.linalg.norm(d))
        rest = L0 * (1 + P["amplitude"] * math.sin(TWO_PI * P["frequency"] * t))
        F = P["stiffness"] * (L - rest) * d / L
        return [(F, 0.0), (-F, 0.0)]

    scheme = make_scheme(constraint_config(cfg), external=springs)
    series = march(cfg, ctx, state, bodies, scheme, _adaptive_dt(cfg, g.h, P["dt_cap"]),
                   _identity_hook(2, fc.rho))
    finish_fluid(cfg, ctx, state, series, bodies)
    xc = 0.5 * (bodies[0].state.X_c + bodies[1].state.X_c)
    return ScenarioResult({"identity_residual": float(series.column("identity_residual").max()),
                           "centroid_x": float(xc[0]), "max_div": max_div_metric(series)},
                          observable=float(xc[0]), series=series)


def run_traveling_wave_swimmer_fdm(cfg, ctx):
    g = cfg.grid.build()
    fc = fluid_config(cfg)
    state = FluidState.zeros(g, fc)
    bodies = make_bodies(cfg, g)
    P = cfg.params
    b = bodies[0]
    half = cfg.body[sorted(cfg.body)[0]].a
    k, w, A = TWO_PI / P["wavelength"], TWO_PI * P["frequency"], P["amplitude"]

    def wave(r, t):
        env = 0.5 * (1 + r[:, 0] / half)
        return np.stack([np.zeros(len(r)), A * w * env * np.cos(k * r[:, 0] - w * t)], 1)

    from ..body import DeformationKinematics

    b.deformation = normalize_deformation(DeformationKinematics(wave), b.markers)
    scheme = make_scheme(constraint_config(cfg))
    series = march(cfg, ctx, state, bodies, scheme, _adaptive_dt(cfg, g.h, P["dt_cap"]), _identity_hook(1, fc.rho))
    finish_fluid(cfg, ctx, state, series, bodies)
    return ScenarioResult({"identity_residual": float(series.column("identity_residual").max()),
                           "centroid_x": float(b.state.X_c[0]), "max_div": max_div_metric(series)},
                          observable=float(b.state.X_c[0]), series=series)


def run_traveling_wave_fiber_ibm(cfg, ctx):
    g = cfg.grid.build()
    fc = fluid_config(cfg)
    state = FluidState.zeros(g, fc)
    bodies = make_bodies(cfg, g, role="surface")
    b = bodies[0]
    b.motion = "elastic"
    P = cfg.params
    n = len(b.markers)
    s = np.linspace(0, 1, n)[1:-1]
    ds = float(np.mean(np.linalg.norm(np.diff(b.markers.X, axis=0), axis=1)))
    k, w = TWO_PI / P["wavelength"], TWO_PI * P["frequency"]

    def rest_angle(t):
        return P["amplitude"] * ds * np.sin(k * s - w * t)

    el = FiberElasticity.from_markers(b.markers, P["stretch"], P["bend"], rest_angle)
    scheme = make_scheme(constraint_config(cfg), elasticity=el)
    x0 = float(b.markers.X[:, 0].mean())
    series = march(cfg, ctx, state, bodies, scheme, _adaptive_dt(cfg, g.h, P["dt_cap"]))
    finish_fluid(cfg, ctx, state, series, bodies)
    dx = float(b.markers.X[:, 0].mean()) - x0
    return ScenarioResult({"centroid_displacement": dx, "max_div": max_div_metric(series)}, observable=dx,
                          series=series)


def run_quiescent_disc(cfg, ctx):
    g = cfg.grid.build()
    state = FluidState.zeros(g, fluid_config(cfg))
    bodies = make_bodies(cfg, g)
    scheme = make_scheme(constraint_config(cfg))
    series = march(cfg, ctx, state, bodies, scheme, dt_rule=lambda st: cfg.params["dt"])
    finish_fluid(cfg, ctx, state, series, bodies)
    err = max(state.u.max_abs(), float(np.abs(state.p).max()))
    return ScenarioResult({"max_velocity": err, "max_div": max_div_metric(series)}, error=err, series=series)


# ---------------------------------------------------------------------------
# steady Stokes with the implicit multiplier


def couette_exact(r, R1, R2, omega):
    A = -omega * R1**2 / (R2**2 - R1**2)
    B = omega * R1**2 * R2**2 / (R2**2 - R1**2)
    return A * r + B / np.where(r > 0, r, 1.0)


def run_couette_annulus(cfg, ctx):
    g = cfg.grid.build()
    P = cfg.params
    R1, R2, om = P["inner_radius"], P["outer_radius"], P["omega"]
    mu = cfg.fluid.mu
    bodies = []
    for R, w in ((R1, om), (R2, 0.0)):
        L = TWO_PI * R
        n = int(math.floor(L / g.h))  # marker spacing at least h
        b = Body.from_shape(Shape.disc(R), L / n, "surface", name=f"cylinder_{R:g}")
        b.state.omega = w
        bodies.append(b)
    system = assemble_stokes_dlm(g, mu, bodies, kernel=make_kernel(cfg.constraint))
    sol = solve_dlm(system)
    err = 0.0
    for c, (x, y) in enumerate((g.u_faces(), g.v_faces())):
        r, th = np.hypot(x, y), np.arctan2(y, x)
        ex = (-np.sin(th) if c == 0 else np.cos(th)) * couette_exact(r, R1, R2, om)
        m = (r > R1) & (r < R2)
        err = max(err, float(np.abs(sol.u.comp(c) - ex)[m].max()))
    torque = float(sol.forces(system)[0][1])
    exact = -2 * TWO_PI * mu * om * R1**2 * R2**2 / (R2**2 - R1**2)
    from ..grid import divergence

    div = float(np.abs(divergence(sol.u, g)).max())
    stats = dict(sol.stats)
    ctx.write("dlm_stats.csv", io.write_csv, list(stats), [list(stats.values())])
    if cfg.output.vtk:
        ctx.write("final.vtk", io.write_vtk, g, {"p": sol.p}, {"velocity": sol.u})
    if cfg.output.markers:
        for i, b in enumerate(bodies):
            ctx.write(f"markers_b{i}.csv", io.write_markers, b.markers)
    metrics = {"linf_velocity_error": err, "slip": max(sol.slip(system)), "torque_inner": torque,
               "torque_exact": exact, "max_div": div}
    metrics.update({f"solver_{k}": v for k, v in stats.items() if np.isscalar(v)})
    return ScenarioResult(metrics, error=err)


# ---------------------------------------------------------------------------
# volume-penalized scalar problems


def _vp_setup(cfg):
    g = cfg.grid.build()
    R = cfg.params["radius"]
    ls = level_set(Shape.disc(R), g)
    return g, R, ls, {s: "dirichlet" for s in BOX_SIDES}


def _exterior_error(q, exact, g, R, exclusion):
    x, y = g.cell_centers()
    m = np.hypot(x, y) >= R + exclusion
    return float(np.abs(q - exact(x, y))[m].max())


def _finish_scalar(cfg, ctx, g, q):
    if cfg.output.vtk:
        ctx.write("q.vtk", io.write_vtk, g, {"q": q})
    ctx.write("q.csv", io.write_field_csv, g, q, "q")


def run_vp_flux(cfg, ctx):
    """Neumann or Robin data on a disc with a manufactured exterior solution."""
    g, R, ls, outer = _vp_setup(cfg)
    sc = cfg.scalar
    A, D = cfg.params["amplitude"], sc.D
    if sc.mode == "neumann":
        # q = -A R^2 cos(theta)/r has D dq/dn = A D cos(theta) on r = R
        def exact(x, y):
            return -A * R**2 * x / (x * x + y * y)

        gauto = lambda x, y: A * D * x / np.hypot(x, y)  # noqa: E731
    elif sc.mode == "robin":
        # q = A cos(theta)/r has zeta q + D dq/dn = A (zeta/R - D/R^2) cos(theta)
        def exact(x, y):
            return A * x / (x * x + y * y)

        gauto = lambda x, y: A * (sc.zeta / R - D / R**2) * x / np.hypot(x, y)  # noqa: E731
    else:
        raise ConfigError("this scenario needs scalar.mode = 'neumann' or 'robin'")
    gfun = compile_expr(sc.g) if sc.g else gauto
    beta = construct_beta(ls, gfun, g)
    vp = VPConfig(g, ls, eta=sc.eta, D=D, beta=beta, zeta=sc.zeta if sc.mode == "robin" else 0.0, outer_bc=outer,
                  outer_values=exact, smooth_chi=sc.smooth_chi)
    q = vp_poisson_robin(vp) if sc.mode == "robin" else vp_poisson_neumann(vp)
    _finish_scalar(cfg, ctx, g, q)
    metrics = {"eta": vp.eta, "h": g.h}
    err = None
    if not sc.g:
        err = _exterior_error(q, exact, g, R, cfg.params["exclusion"])
        metrics["linf_exterior_error"] = err
    return ScenarioResult(metrics, error=err, observable=float(q[g.nx // 2, g.ny - 1]))


def run_vp_dirichlet(cfg, ctx):
    """Penalized transport driven to steady state; optional eta sweep."""
    g, R, ls, outer = _vp_setup(cfg)
    sc = cfg.scalar
    gval = cfg.params["boundary_value"]
    slope = cfg.params["slope"]

    def exact(x, y):
        return gval + slope * np.log(np.hypot(x, y) / R)

    gfun = compile_expr(sc.g) if sc.g else (lambda x, y: np.full(np.shape(x), gval))
    analytic = not sc.g and sc.a == 1 and sc.b == 0
    x, y = g.cell_centers()
    inside = np.hypot(x, y) <= R

    def solve(eta):
        vp = VPConfig(g, ls, eta=eta, a=sc.a, b=sc.b, g=gfun, D=sc.D, outer_bc=outer, outer_values=exact,
                      smooth_chi=sc.smooth_chi)
        q = np.asarray(gfun(x, y), float) * np.ones_like(x)
        for _ in range(int(cfg.params["steps"])):
            q = vp_transport_step(q, None, vp, cfg.params["dt"])
        return vp, q

    vp, q = solve(sc.eta)
    metrics = {"eta": vp.eta, "h": g.h}
    err = None
    if analytic:
        err = _exterior_error(q, exact, g, R, 0.0)
        metrics["linf_exterior_error"] = err
        metrics["interior_residual"] = float(np.abs(q - gval)[inside].max())
    if sc.eta_sweep:
        _, qref = solve(min(sc.eta_sweep) * 1e-6)
        rows = []
        for eta in sc.eta_sweep:
            _, qe = solve(eta)
            ext = _exterior_error(qe, exact, g, R, 0.0) if analytic else float("nan")
            rows.append((eta, ext, float(np.abs(qe - np.asarray(gfun(x, y)))[inside].max()),
                         float(np.abs(qe - qref)[~inside].max())))
        ctx.write("eta_sweep.csv", io.write_csv, ["eta", "linf_exterior_error", "interior_residual",
                                                   "linf_vs_limit"], rows)
        metrics["eta_sweep"] = rows
    _finish_scalar(cfg, ctx, g, q)
    return ScenarioResult(metrics, error=err, observable=float(q[0, g.ny // 2]))


# ---------------------------------------------------------------------------
# registry


def _box(nx, lx, origin, bc="wall", ly=None, **sides):
    d = {"nx": nx, "lx": lx, "origin": list(origin), **{s: bc for s in BOX_SIDES}}
    if ly is not None:
        d["ly"] = ly
    d.update(sides)
    return d


_CYL = {
    "t_end": 1.0,
    "grid": _box(90, 9.0, (-2.5, -3.0), "periodic", ly=6.0, left="inflow", right="outflow", inflow=[1.0, 0.0]),
    "fluid": {"mu": 1 / 40, "implicit_diffusion": False},
    "body": {"0": {"shape": "disc", "radius": 0.5}},
    "params": {"dt_cap": 0.3, "average_steps": 20, "control_half_width": 1.5, "filter_window": 5},
}

SCENARIOS = {}


def _register(name, description, defaults, runner, has_velocity=True):
    d = {"scenario": name, **defaults}
    SCENARIOS[name] = Scenario(name, description, d, runner, has_velocity)


_register("taylor_green", "Decaying Taylor-Green vortex in a periodic box (analytic error).",
          {"t_end": 0.5, "grid": _box(32, TWO_PI, (0, 0), "periodic"), "fluid": {"mu": 0.1},
           "params": {"dt_factor": 0.25}}, run_taylor_green)
_register("poiseuille_brinkman", "Channel flow between Brinkman-penalized walls (grid.nx = cross-channel cells).",
          {"max_steps": 3, "grid": {"nx": 64}, "fluid": {"mu": 1.0, "check_cfl": False},
           "constraint": {"scheme": "brinkman"},
           "params": {"G": 1.0, "eta": 1e-8, "wall_fraction": 0.2, "wall_offset": 0.3, "dt": 1e8}},
          run_poiseuille_brinkman)
_register("cylinder_fdm", "Flow past a fixed cylinder, fictitious-domain fractional steps.",
          {**_CYL, "constraint": {"scheme": "fdm_fts"}}, run_cylinder)
_register("cylinder_direct_forcing", "Flow past a fixed cylinder, direct velocity forcing.",
          {**_CYL, "constraint": {"scheme": "direct_forcing"}}, run_cylinder)
_register("cylinder_brinkman", "Flow past a fixed cylinder, Brinkman penalization.",
          {**_CYL, "constraint": {"scheme": "brinkman"}}, run_cylinder)
_register("free_falling_disc", "Heavy disc settling under gravity in a closed box.",
          {"t_end": 0.1, "grid": _box(32, 2.0, (-1.0, -1.0), ly=4.0),
           "body": {"0": {"radius": 0.125, "center": [0.0, 2.0], "rho_s": 1.5, "motion": "free"}},
           "params": {"gravity": -9.81, "dt_cap": 0.25}}, run_free_falling_disc)
_register("two_disc_spring_swimmer", "Two neutrally buoyant discs joined by an actuated spring.",
          {"t_end": 0.1, "grid": _box(64, 4.0, (-2.0, -1.0), "periodic", ly=2.0), "fluid": {"mu": 0.05},
           "body": {"0": {"radius": 0.2, "center": [-0.35, 0.0], "motion": "free"},
                    "1": {"radius": 0.12, "center": [0.35, 0.0], "motion": "free"}},
           "params": {"stiffness": 20.0, "amplitude": 0.25, "frequency": 2.0, "dt_cap": 0.25}},
          run_two_disc_spring_swimmer)
_register("traveling_wave_swimmer_fdm", "Ellipse swimming by a normalized traveling-wave deformation.",
          {"t_end": 0.05, "grid": _box(96, 3.0, (-1.5, -0.75), "periodic", ly=1.5), "fluid": {"mu": 0.01},
           "body": {"0": {"shape": "ellipse", "a": 0.4, "b": 0.08, "motion": "free"}},
           "params": {"wavelength": 0.8, "frequency": 2.0, "amplitude": 0.02, "dt_cap": 0.25}},
          run_traveling_wave_swimmer_fdm)
_register("traveling_wave_fiber_ibm", "Elastic fiber driven by a traveling preferred curvature (explicit IBM).",
          {"t_end": 0.05, "grid": _box(64, 2.0, (-1.0, -0.5), "periodic", ly=1.0), "fluid": {"mu": 0.01},
           "body": {"0": {"shape": "fiber", "length": 0.8, "spacing": 0.5, "motion": "elastic"}},
           "constraint": {"scheme": "ibm_elastic", "locus": "surface"},
           "params": {"stretch": 50.0, "bend": 5e-2, "wavelength": 0.8, "frequency": 2.0, "amplitude": 8.0,
                      "dt_cap": 0.25}},
          run_traveling_wave_fiber_ibm)
_register("couette_annulus_implicit_dlm", "Steady Stokes flow between a spinning and a fixed cylinder (implicit DLM).",
          {"grid": _box(48, 2.0, (-1.0, -1.0)), "fluid": {"mu": 1.0}, "constraint": {"kernel": "linear2"},
           "params": {"inner_radius": 0.25, "outer_radius": 0.75, "omega": 1.0}},
          run_couette_annulus)
_VP = {"grid": _box(64, 2.0, (-1.0, -1.0)), "params": {"radius": 0.4637, "amplitude": 1.0, "exclusion": 0.1}}
_register("vp_neumann_disc", "Penalized Poisson problem with flux data on a disc (manufactured solution).",
          {**_VP, "scalar": {"mode": "neumann"}}, run_vp_flux, has_velocity=False)
_register("vp_robin_disc", "Penalized Poisson problem with Robin data on a disc (manufactured solution).",
          {**_VP, "scalar": {"mode": "robin", "zeta": 2.0}}, run_vp_flux, has_velocity=False)
_register("vp_dirichlet_disc", "Penalized transport to steady state with Dirichlet data on a disc; eta sweep.",
          {"grid": _box(64, 2.0, (-1.0, -1.0)), "scalar": {"mode": "dirichlet", "eta": 1e-8,
                                                         "eta_sweep": [1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8]},
           "params": {"radius": 0.4637, "boundary_value": 1.0, "slope": 1.0, "steps": 2, "dt": 1e8}},
          run_vp_dirichlet, has_velocity=False)
_register("quiescent_disc", "Fixed disc in fluid at rest: the flow must stay exactly at rest.",
          {"max_steps": 5, "grid": _box(32, 2.0, (-1.0, -1.0), "periodic"), "body": {"0": {"radius": 0.3}},
           "params": {"dt": 0.01}}, run_quiescent_disc)
