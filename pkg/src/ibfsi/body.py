"""Immersed-body geometry, marker generation, rigid kinematics and level sets."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
from scipy.spatial import cKDTree

from .errors import ConfigError, DegenerateError, OutOfSupportError
from .kernels import MarkerSet

SHAPE_KINDS = ("disc", "ellipse", "rectangle", "fiber")


def rotation(theta):
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def cross2(a, b):
    """z-component of a x b for arrays of 2-vectors."""
    a, b = np.asarray(a), np.asarray(b)
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def omega_cross(omega, r):
    """omega e_z x r for arrays of 2-vectors."""
    r = np.asarray(r)
    return omega * np.stack([-r[..., 1], r[..., 0]], axis=-1)


@dataclass
class Shape:
    """Analytic 2D shape with a pose (centre and orientation angle).

    ``params``: ``radius`` (disc), ``a``/``b`` semi-axes (ellipse),
    ``width``/``height`` (rectangle) or ``points`` body-frame polyline and
    ``closed`` flag (fiber).
    """

    kind: str
    params: dict
    center: tuple = (0.0, 0.0)
    angle: float = 0.0

    def __post_init__(self):
        if self.kind not in SHAPE_KINDS:
            raise ConfigError(f"unknown shape {self.kind!r}; expected one of {SHAPE_KINDS}")
        p = self.params
        need = {"disc": ("radius",), "ellipse": ("a", "b"), "rectangle": ("width", "height"), "fiber": ("points",)}
        for k in need[self.kind]:
            if k not in p:
                raise ConfigError(f"{self.kind} shape needs parameter {k!r}")
        if self.kind == "fiber":
            pts = np.asarray(p["points"], dtype=float)
            if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 3:
                raise ConfigError("fiber needs at least 3 polyline points")
        elif any(float(p[k]) <= 0 for k in need[self.kind]):
            raise ConfigError(f"{self.kind} dimensions must be positive")
        self.center = np.asarray(self.center, dtype=float)

    @classmethod
    def disc(cls, radius, center=(0.0, 0.0)):
        return cls("disc", {"radius": float(radius)}, center)

    @classmethod
    def ellipse(cls, a, b, center=(0.0, 0.0), angle=0.0):
        return cls("ellipse", {"a": float(a), "b": float(b)}, center, angle)

    @classmethod
    def rectangle(cls, width, height, center=(0.0, 0.0), angle=0.0):
        return cls("rectangle", {"width": float(width), "height": float(height)}, center, angle)

    @classmethod
    def fiber(cls, points, closed=False, center=(0.0, 0.0), angle=0.0):
        return cls("fiber", {"points": np.asarray(points, float), "closed": bool(closed)}, center, angle)

    # -- measures -----------------------------------------------------------
    def area(self):
        p = self.params
        if self.kind == "disc":
            return np.pi * p["radius"] ** 2
        if self.kind == "ellipse":
            return np.pi * p["a"] * p["b"]
        if self.kind == "rectangle":
            return p["width"] * p["height"]
        raise ConfigError("a fiber has no area")

    def perimeter(self):
        p = self.params
        if self.kind == "disc":
            return 2 * np.pi * p["radius"]
        if self.kind == "rectangle":
            return 2 * (p["width"] + p["height"])
        if self.kind == "ellipse":
            t = np.linspace(0, 2 * np.pi, 20001)
            x, y = p["a"] * np.cos(t), p["b"] * np.sin(t)
            return float(np.sum(np.hypot(np.diff(x), np.diff(y))))
        pts = self._fiber_points()
        return float(np.sum(np.linalg.norm(np.diff(pts, axis=0), axis=1)))

    def polar_moment(self):
        """Second moment of area about the centre (I / rho)."""
        p = self.params
        if self.kind == "disc":
            return np.pi * p["radius"] ** 4 / 2
        if self.kind == "ellipse":
            return np.pi * p["a"] * p["b"] * (p["a"] ** 2 + p["b"] ** 2) / 4
        if self.kind == "rectangle":
            w, h = p["width"], p["height"]
            return w * h * (w * w + h * h) / 12
        raise ConfigError("a fiber has no polar moment")

    def feature_size(self):
        p = self.params
        if self.kind == "disc":
            return p["radius"]
        if self.kind == "ellipse":
            return min(p["a"], p["b"])
        if self.kind == "rectangle":
            return 0.5 * min(p["width"], p["height"])
        return 0.5 * self.perimeter()

    def _fiber_points(self):
        pts = np.asarray(self.params["points"], float)
        if self.params.get("closed", False):
            pts = np.vstack([pts, pts[:1]])
        return pts

    # -- geometry -----------------------------------------------------------
    def to_body(self, x, y):
        R = rotation(self.angle)
        dx, dy = np.asarray(x) - self.center[0], np.asarray(y) - self.center[1]
        return R[0, 0] * dx + R[1, 0] * dy, R[0, 1] * dx + R[1, 1] * dy

    def signed_distance(self, x, y):
        """Signed distance in the lab frame, negative inside."""
        bx, by = self.to_body(x, y)
        p = self.params
        if self.kind == "disc":
            return np.hypot(bx, by) - p["radius"]
        if self.kind == "rectangle":
            qx = np.abs(bx) - 0.5 * p["width"]
            qy = np.abs(by) - 0.5 * p["height"]
            outside = np.hypot(np.maximum(qx, 0), np.maximum(qy, 0))
            return outside + np.minimum(np.maximum(qx, qy), 0.0)
        if self.kind == "ellipse":
            return ellipse_signed_distance(bx, by, p["a"], p["b"])
        raise ConfigError("level sets need an analytic closed shape (disc, ellipse, rectangle)")


def ellipse_signed_distance(x, y, a, b, tol=1e-14):
    """Signed distance to the ellipse x^2/a^2 + y^2/b^2 = 1 (negative inside).

    Closest point by bisection on the Lagrange parameter, after reflecting to
    the first quadrant.
    """
    x = np.abs(np.asarray(x, dtype=float))
    y = np.abs(np.asarray(y, dtype=float))
    swap = b > a
    if swap:
        x, y, a, b = y, x, b, a
    x, y = np.broadcast_arrays(x, y)
    x, y = x.astype(float).copy(), y.astype(float).copy()
    # closest point parameterised by s: X = a^2 x / (s + a^2), Y = b^2 y / (s + b^2)
    # F(s) = (a x / (s + a^2))^2 + (b y / (s + b^2))^2 - 1, monotone for s > -b^2
    lo = np.full(x.shape, -b * b)
    hi = np.maximum(a * np.hypot(x, y), b * b) + a * a
    # near the minor axis with y == 0 the root may sit at the singular end
    ymask = y > 0
    # for y == 0 and x < (a^2 - b^2)/a the closest point leaves the x-axis
    special = (~ymask) & (x < (a * a - b * b) / a)
    lo = np.where(ymask, lo, -a * a + 1e-300)
    lo = np.where(ymask, lo, np.maximum(lo, -b * b))
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        with np.errstate(divide="ignore", invalid="ignore"):
            F = (a * x / (mid + a * a)) ** 2 + (b * y / (mid + b * b)) ** 2 - 1.0
        up = F > 0
        lo = np.where(up, mid, lo)
        hi = np.where(up, hi, mid)
        if np.all(hi - lo <= tol * (a * a)):
            break
    s = 0.5 * (lo + hi)
    with np.errstate(divide="ignore", invalid="ignore"):
        X = a * a * x / (s + a * a)
        Y = b * b * y / (s + b * b)
    # y == 0 branches
    X0 = a * a * x / (a * a - b * b) if a != b else x
    Y0 = b * np.sqrt(np.clip(1 - (X0 / a) ** 2, 0, None))
    X = np.where(special, X0, X)
    Y = np.where(special, Y0, Y)
    plain = (~ymask) & ~special
    X = np.where(plain, a, X)
    Y = np.where(plain, 0.0, Y)
    d = np.hypot(x - X, y - Y)
    inside = (x / a) ** 2 + (y / b) ** 2 < 1.0
    return np.where(inside, -d, d)


# ---------------------------------------------------------------------------
# marker generation


def discretize(shape, spacing, role="volume", supersample=8):
    """Quasi-uniform markers for ``shape`` at the given spacing.

    Surface markers carry arc-length weights.  Volume markers sit on a lattice
    of the given spacing (in the body frame) and carry the area of their
    lattice cell clipped to the shape, so the weights tile the body.
    """
    if spacing <= 0:
        raise ConfigError("marker spacing must be positive")
    if spacing > shape.feature_size():
        raise ConfigError(
            f"marker spacing {spacing:g} exceeds the feature size {shape.feature_size():g} of the {shape.kind}"
        )
    if role == "surface":
        r, dV, closed = _surface_points(shape, spacing)
    elif role == "volume":
        if shape.kind == "fiber":
            raise ConfigError("a fiber only supports surface markers")
        r, dV = _volume_points(shape, spacing, supersample)
        closed = False
    else:
        raise ConfigError(f"unknown marker role {role!r}")
    X = shape.center + r @ rotation(shape.angle).T
    return MarkerSet(X, r, dV, role, closed)


def _surface_points(shape, s):
    p = shape.params
    if shape.kind == "disc":
        R = p["radius"]
        n = max(int(round(2 * np.pi * R / s)), 3)
        t = 2 * np.pi * np.arange(n) / n
        return R * np.stack([np.cos(t), np.sin(t)], 1), np.full(n, 2 * np.pi * R / n), True
    if shape.kind == "ellipse":
        t = np.linspace(0, 2 * np.pi, 40001)
        x, y = p["a"] * np.cos(t), p["b"] * np.sin(t)
        arc = np.concatenate([[0], np.cumsum(np.hypot(np.diff(x), np.diff(y)))])
        L = arc[-1]
        n = max(int(round(L / s)), 3)
        tk = np.interp(L * np.arange(n) / n, arc, t)
        return np.stack([p["a"] * np.cos(tk), p["b"] * np.sin(tk)], 1), np.full(n, L / n), True
    if shape.kind == "rectangle":
        w, h = p["width"], p["height"]
        corners = np.array([[-w / 2, -h / 2], [w / 2, -h / 2], [w / 2, h / 2], [-w / 2, h / 2]])
        pts, wts = [], []
        for k in range(4):
            a, b = corners[k], corners[(k + 1) % 4]
            L = np.linalg.norm(b - a)
            n = max(int(round(L / s)), 1)
            f = (np.arange(n) + 0.5) / n
            pts.append(a + f[:, None] * (b - a))
            wts.append(np.full(n, L / n))
        return np.vstack(pts), np.concatenate(wts), True
    pts = shape._fiber_points()
    closed = bool(p.get("closed", False))
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    arc = np.concatenate([[0], np.cumsum(seg)])
    L = arc[-1]
    if closed:
        n = max(int(round(L / s)), 3)
        sk = L * np.arange(n) / n
        dV = np.full(n, L / n)
    else:
        n = max(int(round(L / s)), 2) + 1
        sk = np.linspace(0, L, n)
        ds = L / (n - 1)
        dV = np.full(n, ds)
        dV[[0, -1]] = ds / 2
    r = np.stack([np.interp(sk, arc, pts[:, 0]), np.interp(sk, arc, pts[:, 1])], 1)
    return r, dV, closed


def _volume_points(shape, s, supersample):
    body = Shape(shape.kind, shape.params)  # centred, unrotated copy
    p = shape.params
    if shape.kind == "disc":
        ext = (p["radius"], p["radius"])
    elif shape.kind == "ellipse":
        ext = (p["a"], p["b"])
    else:
        ext = (p["width"] / 2, p["height"] / 2)
    if shape.kind == "rectangle":
        # cell-centred lattice tiles the rectangle exactly when commensurate
        nxs = max(int(round(2 * ext[0] / s)), 1)
        nys = max(int(round(2 * ext[1] / s)), 1)
        sx, sy = 2 * ext[0] / nxs, 2 * ext[1] / nys
        gx = -ext[0] + (np.arange(nxs) + 0.5) * sx
        gy = -ext[1] + (np.arange(nys) + 0.5) * sy
        X, Y = np.meshgrid(gx, gy, indexing="ij")
        r = np.stack([X.ravel(), Y.ravel()], 1)
        return r, np.full(len(r), sx * sy)
    kx, ky = int(np.ceil(ext[0] / s)) + 1, int(np.ceil(ext[1] / s)) + 1
    X, Y = np.meshgrid(np.arange(-kx, kx + 1) * s, np.arange(-ky, ky + 1) * s, indexing="ij")
    X, Y = X.ravel(), Y.ravel()
    inside = body.signed_distance(X, Y) < 0
    r = np.stack([X[inside], Y[inside]], 1)
    if len(r) == 0:
        raise ConfigError("no volume markers fit inside the shape; reduce the spacing")
    # clip lattice cells to the shape by supersampling; every inside subsample
    # is credited to the nearest marker
    fs = s / supersample
    nsx, nsy = int(np.ceil(ext[0] / fs)) + 1, int(np.ceil(ext[1] / fs)) + 1
    SX, SY = np.meshgrid((np.arange(-nsx, nsx) + 0.5) * fs, (np.arange(-nsy, nsy) + 0.5) * fs, indexing="ij")
    SX, SY = SX.ravel(), SY.ravel()
    sub_in = body.signed_distance(SX, SY) < 0
    _, owner = cKDTree(r).query(np.stack([SX[sub_in], SY[sub_in]], 1))
    dV = np.bincount(owner, minlength=len(r)) * fs * fs
    keep = dV > 0
    return r[keep], dV[keep]


# ---------------------------------------------------------------------------
# rigid state and kinematics


@dataclass
class RigidState:
    X_c: np.ndarray
    theta: float = 0.0
    U: np.ndarray = field(default_factory=lambda: np.zeros(2))
    omega: float = 0.0
    M: float = 1.0
    I: float = 1.0
    rho_s: float = 1.0

    def __post_init__(self):
        self.X_c = np.asarray(self.X_c, dtype=float).copy()
        self.U = np.asarray(self.U, dtype=float).copy()
        if self.I <= 0 or self.M <= 0:
            raise ConfigError("rigid body mass and inertia must be positive")

    @classmethod
    def for_shape(cls, shape, rho_s, U=(0.0, 0.0), omega=0.0):
        return cls(
            X_c=np.array(shape.center, float),
            theta=float(shape.angle),
            U=np.asarray(U, float),
            omega=float(omega),
            M=rho_s * shape.area(),
            I=rho_s * shape.polar_moment(),
            rho_s=rho_s,
        )

    def copy(self):
        return replace(self, X_c=self.X_c.copy(), U=self.U.copy())


@dataclass
class DeformationKinematics:
    """Body-frame deformation velocity ``func(r, t) -> (n, 2)``."""

    func: Callable
    zero_mean_linear: bool = False
    zero_mean_angular: bool = False

    def __call__(self, r, t):
        return np.asarray(self.func(np.asarray(r, float), t), dtype=float).reshape(-1, 2)


def no_deformation():
    return DeformationKinematics(lambda r, t: np.zeros_like(r), True, True)


def normalize_deformation(d, m):
    """Remove the discrete mean velocity and mean rotation of ``d`` over ``m``.

    The returned kinematics carry no discrete linear or angular momentum about
    the marker centroid for any ``r`` with the weights of ``m``.
    """
    if m.role != "volume":
        raise ConfigError("deformation normalization needs volume markers")
    dV = m.dV.copy()
    Vt = dV.sum()
    rc = m.r - (m.r * dV[:, None]).sum(0) / Vt
    inertia = np.sum(np.sum(rc * rc, 1) * dV)
    scale = np.max(np.abs(rc)) if len(rc) else 0.0
    if inertia <= 1e-14 * Vt * max(scale, 1e-300) ** 2 or scale == 0.0:
        raise DegenerateError("degenerate marker inertia: cannot remove the mean rotation")

    def func(r, t):
        r = np.asarray(r, float)
        if len(r) != len(dV):
            raise ConfigError("normalized deformation evaluated on a different marker count")
        raw = d(r, t)
        c = r - (r * dV[:, None]).sum(0) / Vt
        I = np.sum(np.sum(c * c, 1) * dV)
        mean = (raw * dV[:, None]).sum(0) / Vt
        w = raw - mean
        om = np.sum(cross2(c, w) * dV) / I
        return w - omega_cross(om, c)

    return DeformationKinematics(func, True, True)


def solid_velocity(b, d, m, t):
    """Lab-frame solid velocity ``U + omega x R r + R u_def(r, t)`` at markers."""
    R = rotation(b.theta)
    arm = m.r @ R.T
    u = b.U[None, :] + omega_cross(b.omega, arm)
    if d is not None:
        u = u + d(m.r, t) @ R.T
    return u


def place_markers(b, m):
    """Reconstruct lab positions from the pose and body-frame coordinates."""
    m.X = b.X_c[None, :] + m.r @ rotation(b.theta).T
    return m


def advance_body(b, m, dt, d=None, t=0.0, scheme="euler", grid=None, inset=0.0):
    """Advance pose and deformation coordinates by ``dt``; returns (state, markers).

    Marker positions are always rebuilt from the pose (no drift accumulation).
    With ``grid`` the body must stay ``inset`` (length) inside the domain on
    non-periodic axes.
    """
    b, m = b.copy(), m.copy()
    b.X_c = b.X_c + dt * b.U
    b.theta = b.theta + dt * b.omega
    if d is not None:
        if scheme == "euler":
            m.r = m.r + dt * d(m.r, t)
        elif scheme == "rk2":
            k1 = d(m.r, t)
            m.r = m.r + dt * d(m.r + 0.5 * dt * k1, t + 0.5 * dt)
        else:
            raise ConfigError(f"unknown integrator {scheme!r}")
    place_markers(b, m)
    if grid is not None:
        check_in_domain(m.X, grid, inset)
    return b, m


def check_in_domain(X, g, inset):
    x0, y0 = g.origin
    for axis, lo, L, periodic in ((0, x0, g.lx, g.periodic_x), (1, y0, g.ly, g.periodic_y)):
        if periodic:
            continue
        c = X[:, axis]
        if np.any(c < lo + inset) or np.any(c > lo + L - inset):
            raise OutOfSupportError("body left the domain interior (inset by the kernel half-width)")


def wrap_periodic(X, g):
    X = X.copy()
    if g.periodic_x:
        X[:, 0] = g.origin[0] + np.mod(X[:, 0] - g.origin[0], g.lx)
    if g.periodic_y:
        X[:, 1] = g.origin[1] + np.mod(X[:, 1] - g.origin[1], g.ly)
    return X


# ---------------------------------------------------------------------------
# level sets


@dataclass
class LevelSet:
    """Cell-centred signed distance (negative inside the solid)."""

    phi: np.ndarray
    h: float
    shape: Optional[Shape] = None

    def chi(self, smooth=False):
        return characteristic(self.phi, self.h, smooth)

    def grad(self):
        """Centred gradient of phi at cell centres (one-sided at edges)."""
        gx, gy = np.gradient(self.phi, self.h, self.h)
        return gx, gy


def characteristic(phi, h, smooth=False):
    """chi = 1 where phi <= 0; the smoothed form ramps linearly over one cell."""
    phi = np.asarray(phi, float)
    if smooth:
        return np.clip(0.5 - phi / h, 0.0, 1.0)
    return (phi <= 0.0).astype(float)


def level_set(shape, g):
    xc, yc = g.cell_centers()
    return LevelSet(shape.signed_distance(xc, yc), g.h, shape)


def union_distance(shapes, x, y):
    """Signed distance of a union of shapes (min of the individual ones)."""
    d = np.full(np.broadcast(np.asarray(x), np.asarray(y)).shape, np.inf)
    for s in shapes:
        d = np.minimum(d, s.signed_distance(x, y))
    return d


MOTIONS = ("fixed", "prescribed", "free", "elastic")


@dataclass
class Body:
    """An immersed body: geometry, rigid state, markers and motion mode.

    ``motion`` is ``fixed`` (at rest), ``prescribed`` (``kinematics(t) ->
    (U, omega)``), ``free`` (rigid velocities solved from the dynamics) or
    ``elastic`` (fiber markers carried by the flow).
    """

    shape: Shape
    state: RigidState
    markers: MarkerSet
    deformation: Optional[DeformationKinematics] = None
    motion: str = "fixed"
    kinematics: Optional[Callable] = None
    name: str = "body"
    lagrangian_X: Optional[np.ndarray] = None
    history: list = field(default_factory=list)

    def __post_init__(self):
        if self.motion not in MOTIONS:
            raise ConfigError(f"unknown body motion {self.motion!r}; expected one of {MOTIONS}")
        if self.motion == "prescribed" and self.kinematics is None:
            raise ConfigError("prescribed motion needs a kinematics callable")

    @classmethod
    def from_shape(cls, shape, spacing, role="volume", rho_s=1.0, motion="fixed", **kw):
        markers = discretize(shape, spacing, role)
        state = RigidState.for_shape(shape, rho_s) if shape.kind != "fiber" else RigidState(shape.center, rho_s=rho_s)
        return cls(shape, state, markers, motion=motion, **kw)

    def arms(self):
        """Lab-frame lever arms ``R(theta) r`` of the markers."""
        return self.markers.r @ rotation(self.state.theta).T

    def velocity(self, t):
        """Solid velocity at the markers for the current rigid state."""
        return solid_velocity(self.state, self.deformation, self.markers, t)

    def apply_kinematics(self, t):
        if self.motion == "prescribed":
            U, om = self.kinematics(t)
            self.state.U = np.asarray(U, float).copy()
            self.state.omega = float(om)
        elif self.motion == "fixed":
            self.state.U = np.zeros(2)
            self.state.omega = 0.0

    def posed_shape(self):
        """The analytic shape placed at the current pose."""
        return Shape(self.shape.kind, self.shape.params, tuple(self.state.X_c), self.state.theta)
