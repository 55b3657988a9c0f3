"""Constraint schemes coupling immersed bodies to the fluid core.

Every scheme produces a Lagrange-multiplier force density ``lambda`` that
acts on the fluid and a constrained velocity field.  The schemes are:

``ibm_elastic``
    explicit immersed boundary: elastic fiber forces spread to the grid, the
    flow is advanced and the markers move with the interpolated velocity.
``fdm_fts``
    fictitious domain, fractional steps: predictor, rigid solve for
    ``(U, omega, lambda)`` from the multiplier moment conditions, constraint
    projection ``u = u_hat + dt lambda / rho``, pressure projection.
``direct_forcing``
    velocity forcing with ``lambda = kappa (u_s - u_hat)`` applied after the
    predictor (``theta = 0``).
``brinkman``
    the same multiplier applied implicitly inside the predictor on the
    ``chi``-masked Eulerian field (``theta = 1``).
``penalty``
    surface spring/damper force ``k (x_s - X) + c (u_s - u_f)``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .body import advance_body, characteristic, cross2, omega_cross, rotation, wrap_periodic
from .errors import ConfigError, DegenerateError
from .grid import FaceField, convect
from .kernels import DeltaKernel, MLSConfig, Transfer
from .ns_solver import Penalty, predictor, project
from .rigid_dynamics import MomentumSample, body_momentum, net_force_torque, update_free_body

SCHEMES = ("ibm_elastic", "fdm_fts", "direct_forcing", "brinkman", "penalty")
LOCI = ("surface", "volume")


@dataclass(frozen=True)
class ConstraintConfig:
    """Which constraint scheme to run and its parameters.

    ``kappa=None`` means ``rho_f / dt``.  ``theta`` is derived from the scheme
    (1 for ``brinkman``, 0 otherwise).
    """

    scheme: str
    locus: str = "volume"
    kernel: Union[DeltaKernel, MLSConfig] = field(default_factory=DeltaKernel)
    kappa: Optional[float] = None
    k: float = 0.0
    c: float = 0.0
    forcing_iterations: int = 1
    smooth_chi: bool = True
    picard: int = 0

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ConfigError(f"unknown constraint scheme {self.scheme!r}; expected one of {SCHEMES}")
        if self.locus not in LOCI:
            raise ConfigError(f"unknown constraint locus {self.locus!r}")
        if self.scheme == "fdm_fts" and self.locus != "volume":
            raise ConfigError("the fictitious-domain scheme constrains the body volume; use locus = 'volume'")
        if self.scheme in ("penalty", "ibm_elastic") and self.locus != "surface":
            raise ConfigError(f"the {self.scheme} scheme acts on surface markers; use locus = 'surface'")
        if self.kappa is not None and self.kappa <= 0:
            raise ConfigError("kappa must be positive")
        if self.k < 0 or self.c < 0:
            raise ConfigError("penalty stiffness and damping must be non-negative")
        if self.forcing_iterations < 1:
            raise ConfigError("forcing_iterations must be at least 1")
        if self.scheme == "penalty" and self.k == 0 and self.c == 0:
            warnings.warn("penalty scheme with k = c = 0 leaves the constraint unenforced", stacklevel=2)

    @property
    def theta(self):
        return 1 if self.scheme == "brinkman" else 0

    def kappa_for(self, rho, dt):
        return rho / dt if self.kappa is None else self.kappa


@dataclass
class LambdaField:
    """Multiplier force density at markers plus its spread grid image.

    For Eulerian (Brinkman) multipliers ``values`` is ``None`` and the moments
    are taken from the face field about ``center``.
    """

    values: Optional[np.ndarray]
    dV: Optional[np.ndarray] = None
    arms: Optional[np.ndarray] = None
    eulerian: Optional[FaceField] = None
    grid: object = None
    center: Optional[np.ndarray] = None

    def total(self):
        if self.values is not None:
            return (self.values * self.dV[:, None]).sum(0)
        return eulerian_moments(self.eulerian, self.grid, self.center)[0]

    def torque(self):
        if self.values is not None:
            return float(np.sum(cross2(self.arms, self.values) * self.dV))
        return eulerian_moments(self.eulerian, self.grid, self.center)[1]

    def max_abs(self):
        if self.values is not None:
            return float(np.abs(self.values).max(initial=0.0))
        return self.eulerian.max_abs()


def eulerian_moments(f, g, center):
    """``(sum f dV, sum (x - c) x f dV)`` over the unique faces of a face field."""
    nux = g.n_unique(0)
    nvy = g.n_unique(1)
    fu, fv = f.u[: nux[0], : nux[1]], f.v[: nvy[0], : nvy[1]]
    xu, yu = (a[: nux[0], : nux[1]] for a in g.u_faces())
    xv, yv = (a[: nvy[0], : nvy[1]] for a in g.v_faces())
    dA = g.dx * g.dy
    F = dA * np.array([fu.sum(), fv.sum()])
    c = np.zeros(2) if center is None else center
    T = dA * (np.sum((xv - c[0]) * fv) - np.sum((yu - c[1]) * fu))
    return F, float(T)


# ---------------------------------------------------------------------------
# multiplier formulas


@dataclass(frozen=True)
class FiberElasticity:
    """Hookean links and a turning-angle bending energy for a marker chain.

    ``rest_length`` holds one value per link.  ``rest_angle(t)`` returns the
    preferred turning angle at every interior node (closed chains: every
    node); ``None`` means straight.
    """

    stretch: float
    rest_length: np.ndarray
    bend: float = 0.0
    rest_angle: Optional[Callable] = None

    def __post_init__(self):
        if np.any(np.asarray(self.rest_length) <= 0):
            raise ConfigError("fiber links need positive reference lengths")

    @classmethod
    def from_markers(cls, m, stretch, bend=0.0, rest_angle=None):
        X = m.X
        d = (np.roll(X, -1, 0) - X) if m.closed else np.diff(X, axis=0)
        return cls(stretch, np.linalg.norm(d, axis=1), bend, rest_angle)


def _perp(a):
    return np.stack([-a[..., 1], a[..., 0]], -1)


def fiber_forces(X, closed, el, t=0.0):
    """Nodal elastic forces (minus the energy gradient) of a marker chain."""
    X = np.asarray(X, float)
    n = len(X)
    F = np.zeros_like(X)
    i0 = np.arange(n) if closed else np.arange(n - 1)
    i1 = (i0 + 1) % n
    d = X[i1] - X[i0]
    L = np.linalg.norm(d, axis=1)
    L0 = np.asarray(el.rest_length, float)
    if len(L0) != len(i0):
        raise ConfigError(f"fiber has {len(i0)} links but {len(L0)} reference lengths")
    if np.any(L == 0):
        raise DegenerateError("coincident fiber markers")
    T = (el.stretch * (L - L0) / L)[:, None] * d
    np.add.at(F, i0, T)
    np.add.at(F, i1, -T)
    if el.bend:
        j = np.arange(n) if closed else np.arange(1, n - 1)
        a = X[j] - X[(j - 1) % n]
        b = X[(j + 1) % n] - X[j]
        ang = np.arctan2(cross2(a, b), np.sum(a * b, 1))
        th0 = np.zeros(len(j)) if el.rest_angle is None else np.asarray(el.rest_angle(t), float)
        if th0.shape != ang.shape:
            raise ConfigError("rest-angle profile does not match the fiber nodes")
        coef = -el.bend * (ang - th0)
        ga = _perp(a) / np.sum(a * a, 1)[:, None]
        gb = _perp(b) / np.sum(b * b, 1)[:, None]
        np.add.at(F, (j - 1) % n, (coef[:, None] * ga))
        np.add.at(F, j, coef[:, None] * (-ga - gb))
        np.add.at(F, (j + 1) % n, coef[:, None] * gb)
    return F


def ibm_elastic_lambda(m, elasticity, t=0.0):
    """Elastic force density at fiber markers (fluid stress inside neglected)."""
    F = fiber_forces(m.X, m.closed, elasticity, t)
    center = (m.X * m.dV[:, None]).sum(0) / m.dV.sum()
    return LambdaField(F / m.dV[:, None], m.dV.copy(), m.X - center)


def fdm_rigid_solve(u_hat_m, body, dt, rho_f, t=0.0, F_ext=(0.0, 0.0), T_ext=0.0, gravity=(0.0, 0.0)):
    """Rigid velocities and multiplier from the integrated solid momentum.

    Solves for ``(U, omega)`` such that ``lambda_i = rho_f (U + omega x r_i
    + u_def_i - u_hat_i)/dt`` satisfies ``sum lambda dV = F_ext + dM g - dM
    (U - U^n)/dt`` and the matching moment condition, where ``dM`` and
    ``dI`` are the density-difference mass and inertia (zero when neutrally
    buoyant).  Returns ``(U, omega, LambdaField)``.
    """
    m, st = body.markers, body.state
    if m.role != "volume":
        raise ConfigError("the rigid solve needs volume markers")
    arms = body.arms()
    dV = m.dV
    w = np.asarray(u_hat_m, float)
    if body.deformation is not None:
        w = w - body.deformation(m.r, t) @ rotation(st.theta).T
    V = dV.sum()
    S = (arms * dV[:, None]).sum(0)
    J = float(np.sum(np.sum(arms * arms, 1) * dV))
    drho = (st.rho_s - rho_f) if st.rho_s != rho_f else 0.0
    dM, dI = drho * V, drho * J
    if J <= 1e-14 * V * max(np.abs(arms).max(initial=0.0), 1e-300) ** 2:
        raise DegenerateError("vanishing discrete inertia in the rigid solve")
    A = np.array(
        [
            [V + dM / rho_f, 0.0, -S[1]],
            [0.0, V + dM / rho_f, S[0]],
            [-S[1], S[0], J + dI / rho_f],
        ]
    )
    g = np.asarray(gravity, float)
    Fe = np.asarray(F_ext, float)
    rhs = np.concatenate(
        [
            (w * dV[:, None]).sum(0) + dt / rho_f * (Fe + dM * g) + dM / rho_f * st.U,
            [np.sum(cross2(arms, w) * dV) + dt / rho_f * float(T_ext) + dI / rho_f * st.omega],
        ]
    )
    if abs(np.linalg.det(A)) <= 1e-14 * abs(A[0, 0] * A[1, 1] * A[2, 2]):
        raise DegenerateError("singular rigid-body system (degenerate marker cloud)")
    x = np.linalg.solve(A, rhs)
    U, om = x[:2], float(x[2])
    lam = rho_f / dt * (U[None, :] + omega_cross(om, arms) - w)
    return U, om, LambdaField(lam, dV.copy(), arms)


def constraint_project(u_hat, lam, rho_f, dt):
    """``u = u_hat + (dt/rho_f) spread(lambda)``."""
    f = lam.eulerian if isinstance(lam, LambdaField) else lam
    if f is None:
        raise ConfigError("the multiplier has no spread grid image yet")
    return u_hat + f * (dt / rho_f)


def direct_forcing_lambda(u_hat_m, u_s_m, kappa):
    return kappa * (np.asarray(u_s_m, float) - np.asarray(u_hat_m, float))


def penalty_lambda(X, X_ref, u_f_m, u_s_m, k, c):
    """Spring/damper surface force ``k (x_s - X) + c (u_s - u_f)``."""
    if k == 0 and c == 0:
        warnings.warn("penalty force with k = c = 0 leaves the constraint unenforced", stacklevel=2)
    return k * (np.asarray(X_ref, float) - np.asarray(X, float)) + c * (
        np.asarray(u_s_m, float) - np.asarray(u_f_m, float)
    )


# ---------------------------------------------------------------------------
# schemes


def _transfer(cfg, X, g):
    return Transfer(cfg.kernel, wrap_periodic(np.asarray(X, float), g), g)


def _spread(T, lam):
    lam.eulerian = T.spread(lam.values, lam.dV)
    lam.grid = T.grid
    return lam


def _body_record(body, lam, slip, P, L):
    return {
        "name": body.name,
        "lam_force": np.asarray(lam.total(), float),
        "lam_torque": float(lam.torque()),
        "lam_max": lam.max_abs(),
        "lam_abs": _abs_total(lam),
        "slip": float(slip),
        "U": body.state.U.copy(),
        "omega": float(body.state.omega),
        "X_c": body.state.X_c.copy(),
        "theta": float(body.state.theta),
        "P": P,
        "L": L,
    }


def _abs_total(lam):
    """``sum |lambda| dV``: the natural scale of the multiplier moments."""
    if lam.values is not None:
        return float(np.sum(np.linalg.norm(lam.values, axis=1) * lam.dV))
    g = lam.grid
    return float(g.dx * g.dy * (np.abs(lam.eulerian.u).sum() + np.abs(lam.eulerian.v).sum()))


class Scheme:
    """Common machinery: external loads, gravity, pose updates, diagnostics."""

    def __init__(self, cfg, external=None, gravity=(0.0, 0.0), elasticity=None, body_force=None):
        self.cfg = cfg
        self.external = external
        self.gravity = np.asarray(gravity, float)
        self.elasticity = elasticity
        self.body_force = body_force  # background force density on the fluid (FaceField)

    def external_loads(self, bodies, t):
        if self.external is None:
            return [(np.zeros(2), 0.0) for _ in bodies]
        loads = self.external(bodies, t)
        if len(loads) != len(bodies):
            raise ConfigError("external load callable must return one (F, T) pair per body")
        return [(np.asarray(F, float), float(T)) for F, T in loads]

    def _finish(self, state, bodies, lams, dt, t_new, trace_name="advance_bodies"):
        """Momentum samples, slip and pose updates after the projection."""
        g, rho = state.grid, state.cfg.rho
        records = []
        for b, lam in zip(bodies, lams):
            T = _transfer(self.cfg, b.markers.X if b.lagrangian_X is None else b.lagrangian_X, g)
            um = T.interpolate(state.u)
            slip = np.abs(um - b.velocity(t_new)).max(initial=0.0) if b.motion != "elastic" else 0.0
            P, L = body_momentum(um, b, rho)
            b.history.append(MomentumSample(t_new, P, L))
            del b.history[:-3]
            records.append(_body_record(b, lam, slip, P, L))
        for b in bodies:
            if b.motion in ("prescribed", "free") or b.deformation is not None:
                b.state, b.markers = advance_body(b.state, b.markers, dt, b.deformation, t_new - dt)
        state.trace.append(trace_name)
        return records

    def _predict(self, state, dt, force=None, penalty=None):
        if self.body_force is not None:
            force = self.body_force if force is None else force + self.body_force
        u_hat = predictor(state, force, dt, penalty)
        for _ in range(self.cfg.picard):
            # re-evaluate the convective term with the latest iterate
            half = (state.u + u_hat) * 0.5
            u_hat = predictor(state, force, dt, penalty, convection=convect(half, state.grid, state.cfg.upwind))
            state.trace.pop()
        return u_hat


class FDMScheme(Scheme):
    """Fictitious-domain fractional steps for rigid and self-propelled bodies."""

    def step(self, state, bodies, dt):
        g, rho = state.grid, state.cfg.rho
        t_new = state.t + dt
        u_hat = self._predict(state, dt)
        loads = self.external_loads(bodies, t_new)
        total = g.zeros_face()
        lams = []
        for b, (Fe, Te) in zip(bodies, loads):
            T = _transfer(self.cfg, b.markers.X, g)
            um = T.interpolate(u_hat)
            if b.motion == "free":
                U, om, lam = fdm_rigid_solve(um, b, dt, rho, t_new, Fe, Te, self.gravity)
                b.state.U, b.state.omega = U, om
            else:
                b.apply_kinematics(t_new)
                lam = LambdaField(rho / dt * (b.velocity(t_new) - um), b.markers.dV.copy(), b.arms())
            lams.append(_spread(T, lam))
            total = total + lam.eulerian
        state.trace.append("rigid_solve")
        u_star = constraint_project(u_hat, total, rho, dt)
        state.trace.append("constraint_projection")
        # slip right after the constraint projection (before the pressure step)
        slips = [
            float(np.abs(_transfer(self.cfg, b.markers.X, g).interpolate(u_star) - b.velocity(t_new)).max(initial=0.0))
            for b in bodies
        ]
        state.u, state.p, _ = project(u_star, state, dt)
        records = self._finish(state, bodies, lams, dt, t_new)
        for r, s, (Fe, Te) in zip(records, slips, loads):
            r["slip_constraint"] = s
            r["F_ext"], r["T_ext"] = Fe, Te
        return {"bodies": records}


class DirectForcingScheme(Scheme):
    """Velocity forcing applied after the predictor (FTS, theta = 0)."""

    def step(self, state, bodies, dt):
        g, rho = state.grid, state.cfg.rho
        t_new = state.t + dt
        kappa = self.cfg.kappa_for(rho, dt)
        for b in bodies:
            b.apply_kinematics(t_new)
        u_hat = self._predict(state, dt)
        lams = []
        transfers = [_transfer(self.cfg, b.markers.X, g) for b in bodies]
        acc = [np.zeros((len(b.markers), 2)) for b in bodies]
        for _ in range(self.cfg.forcing_iterations):
            total = g.zeros_face()
            for i, (b, T) in enumerate(zip(bodies, transfers)):
                lam_i = direct_forcing_lambda(T.interpolate(u_hat), b.velocity(t_new), kappa)
                acc[i] += lam_i
                total = total + T.spread(lam_i, b.markers.dV)
            u_hat = constraint_project(u_hat, total, rho, dt)
        for b, T, a in zip(bodies, transfers, acc):
            lams.append(_spread(T, LambdaField(a, b.markers.dV.copy(), b.arms())))
        state.trace.append("direct_forcing")
        state.u, state.p, _ = project(u_hat, state, dt)
        records = self._finish(state, bodies, lams, dt, t_new, "advance_bodies")
        _free_updates(self, state, bodies, lams, records, dt, t_new)
        return {"bodies": records}


def _free_updates(scheme, state, bodies, lams, records, dt, t_new):
    loads = scheme.external_loads(bodies, t_new)
    for b, lam, rec, (Fe, Te) in zip(bodies, lams, records, loads):
        if len(b.history) >= 2:
            F, T = net_force_torque(lam, b.history)
        else:
            F, T = -lam.total(), -lam.torque()
        rec["force"], rec["torque"] = F, T
        if b.motion == "free":
            b.state, _ = update_free_body(b.state, F, T, Fe, Te, scheme.gravity, dt, state.cfg.rho)
    state.trace.append("update_body_velocity")


class BrinkmanScheme(Scheme):
    """Brinkman penalization: implicit ``kappa chi (u_s - u_hat)`` in the predictor."""

    def step(self, state, bodies, dt):
        g, rho = state.grid, state.cfg.rho
        t_new = state.t + dt
        kappa = self.cfg.kappa_for(rho, dt)
        for b in bodies:
            b.apply_kinematics(t_new)
            if b.deformation is not None:
                raise ConfigError("the Brinkman scheme supports rigid bodies only")
        chis, targets = [], []
        K = g.zeros_face()
        target = g.zeros_face()
        for b in bodies:
            chi, tgt = self.body_fields(b, g)
            K = FaceField(np.maximum(K.u, kappa * chi.u), np.maximum(K.v, kappa * chi.v))
            target = FaceField(np.where(chi.u > 0, tgt.u, target.u), np.where(chi.v > 0, tgt.v, target.v))
            chis.append(chi)
            targets.append(tgt)
        u_hat = self._predict(state, dt, penalty=Penalty(K, target))
        state.trace[-1] = "penalized_predictor"
        lams = []
        for b, chi, tgt in zip(bodies, chis, targets):
            f = FaceField(kappa * chi.u * (tgt.u - u_hat.u), kappa * chi.v * (tgt.v - u_hat.v))
            lams.append(LambdaField(None, eulerian=f, grid=g, center=b.state.X_c.copy()))
        state.u, state.p, _ = project(u_hat, state, dt)
        records = self._finish_eulerian(state, bodies, lams, chis, dt, t_new)
        _free_updates(self, state, bodies, lams, records, dt, t_new)
        return {"bodies": records}

    def body_fields(self, b, g):
        """``chi`` and rigid target velocity on the faces for one body."""
        shape = b.posed_shape()
        xs = [g.u_faces(), g.v_faces()]
        chi = [characteristic(shape.signed_distance(x, y), g.h, self.cfg.smooth_chi) for x, y in xs]
        tg = []
        for c, (x, y) in enumerate(xs):
            arm = np.stack([x - b.state.X_c[0], y - b.state.X_c[1]], -1)
            tg.append(b.state.U[c] + omega_cross(b.state.omega, arm)[..., c])
        return FaceField(*chi), FaceField(*tg)

    def _finish_eulerian(self, state, bodies, lams, chis, dt, t_new):
        g, rho = state.grid, state.cfg.rho
        records = []
        for b, lam, chi in zip(bodies, lams, chis):
            wu = FaceField(chi.u * state.u.u, chi.v * state.u.v)
            P, L = eulerian_moments(wu, g, b.state.X_c)
            P, L = rho * P, rho * L
            tgt = self.body_fields(b, g)[1]
            inside = FaceField((chi.u >= 1.0) * 1.0, (chi.v >= 1.0) * 1.0)
            slip = max(np.abs(inside.u * (state.u.u - tgt.u)).max(), np.abs(inside.v * (state.u.v - tgt.v)).max())
            b.history.append(MomentumSample(t_new, P, L))
            del b.history[:-3]
            records.append(_body_record(b, lam, slip, P, L))
        for b in bodies:
            if b.motion in ("prescribed", "free"):
                b.state, b.markers = advance_body(b.state, b.markers, dt, None, t_new - dt)
        state.trace.append("advance_bodies")
        return records


class IBMScheme(Scheme):
    """Explicit immersed boundary method for elastic fibers."""

    def step(self, state, bodies, dt):
        g = state.grid
        t_new = state.t + dt
        force = g.zeros_face()
        lams = []
        for i, b in enumerate(bodies):
            el = self._elasticity(i)
            lam = ibm_elastic_lambda(b.markers, el, state.t)
            T = _transfer(self.cfg, b.markers.X, g)
            lams.append(_spread(T, lam))
            force = force + lam.eulerian
        state.trace.append("spread_lambda")
        u_hat = self._predict(state, dt, force=force)
        state.u, state.p, _ = project(u_hat, state, dt)
        records = []
        for b, lam in zip(bodies, lams):
            T = _transfer(self.cfg, b.markers.X, g)
            um = T.interpolate(state.u)
            m = b.markers.copy()
            m.X = m.X + dt * um
            b.markers = m
            records.append(_body_record(b, lam, 0.0, np.zeros(2), 0.0))
        state.trace.append("impose_constraint")
        state.trace.append("update_lambda")
        return {"bodies": records}

    def _elasticity(self, i):
        el = self.elasticity
        if el is None:
            raise ConfigError("the IBM scheme needs fiber elasticity parameters")
        return el[i] if isinstance(el, (list, tuple)) else el


class PenaltyScheme(Scheme):
    """Surface penalty with markers carried by the fluid velocity."""

    def step(self, state, bodies, dt):
        g = state.grid
        t_new = state.t + dt
        c = self.cfg
        force = g.zeros_face()
        lams = []
        for b in bodies:
            if b.lagrangian_X is None:
                b.lagrangian_X = b.markers.X.copy()
            T = _transfer(c, b.lagrangian_X, g)
            uf = T.interpolate(state.u)
            vals = penalty_lambda(b.lagrangian_X, b.markers.X, uf, b.velocity(state.t), c.k, c.c)
            lam = LambdaField(vals, b.markers.dV.copy(), b.lagrangian_X - b.state.X_c)
            lams.append(_spread(T, lam))
            force = force + lam.eulerian
        state.trace.append("penalty_force")
        u_hat = self._predict(state, dt, force=force)
        state.u, state.p, _ = project(u_hat, state, dt)
        for b in bodies:
            b.apply_kinematics(t_new)
            T = _transfer(c, b.lagrangian_X, g)
            b.lagrangian_X = b.lagrangian_X + dt * T.interpolate(state.u)
        state.trace.append("advect_markers")
        records = self._finish(state, bodies, lams, dt, t_new)
        for r, b in zip(records, bodies):
            r["marker_offset"] = float(np.abs(b.lagrangian_X - b.markers.X).max())
        return {"bodies": records}


_SCHEME_CLASSES = {
    "fdm_fts": FDMScheme,
    "direct_forcing": DirectForcingScheme,
    "brinkman": BrinkmanScheme,
    "ibm_elastic": IBMScheme,
    "penalty": PenaltyScheme,
}


def make_scheme(cfg, **kw):
    """Scheme object for a :class:`ConstraintConfig`."""
    return _SCHEME_CLASSES[cfg.scheme](cfg, **kw)


def spread_total(f, g):
    """Total force of a spread face field (sum over unique faces times dV)."""
    return eulerian_moments(f, g, None)[0]


__all__ = [
    "ConstraintConfig",
    "LambdaField",
    "FiberElasticity",
    "fiber_forces",
    "ibm_elastic_lambda",
    "fdm_rigid_solve",
    "constraint_project",
    "direct_forcing_lambda",
    "penalty_lambda",
    "make_scheme",
    "FDMScheme",
    "DirectForcingScheme",
    "BrinkmanScheme",
    "IBMScheme",
    "PenaltyScheme",
    "eulerian_moments",
    "spread_total",
]
