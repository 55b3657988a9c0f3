"""Staggered (MAC) Cartesian grid, discrete fields and shared operators.

Layout on an ``nx x ny`` grid of square cells with lower-left corner ``origin``:

* cell scalars ``p[i, j]`` at ``(x0 + (i + 1/2) h, y0 + (j + 1/2) h)``, shape ``(nx, ny)``
* x-face velocity ``u[i, j]`` at ``(x0 + i h, y0 + (j + 1/2) h)``, shape ``(nx + 1, ny)``
* y-face velocity ``v[i, j]`` at ``(x0 + (i + 1/2) h, y0 + j h)``, shape ``(nx, ny + 1)``

On a periodic axis the last face duplicates the first one.  Velocity unknowns
("dofs") are the faces that are neither prescribed by a Dirichlet side
(wall / inflow) nor periodic duplicates; implicit solves and the monolithic
Stokes system work on the dof vector, explicit code on full arrays.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ConfigError, SolverError

SIDES = ("left", "right", "bottom", "top")
BC_KINDS = ("wall", "inflow", "periodic", "outflow")

TOL_POISSON = 1e-10


@dataclass(frozen=True)
class BC:
    """Velocity boundary condition of one domain side.

    ``velocity`` is the prescribed velocity for ``inflow``; for ``wall`` only
    its tangential component is used (moving lid), the normal one is zero.
    """

    kind: str = "wall"
    velocity: tuple = (0.0, 0.0)

    def __post_init__(self):
        if self.kind not in BC_KINDS:
            raise ConfigError(f"unknown boundary kind {self.kind!r}; expected one of {BC_KINDS}")
        object.__setattr__(self, "velocity", tuple(float(c) for c in self.velocity))


@dataclass(frozen=True)
class GridSpec:
    nx: int
    ny: int
    dx: float
    dy: float = None
    origin: tuple = (0.0, 0.0)
    left: BC = field(default_factory=BC)
    right: BC = field(default_factory=BC)
    bottom: BC = field(default_factory=BC)
    top: BC = field(default_factory=BC)

    def __post_init__(self):
        if self.dy is None:
            object.__setattr__(self, "dy", self.dx)
        object.__setattr__(self, "origin", tuple(float(c) for c in self.origin))
        if self.nx < 4 or self.ny < 4:
            raise ConfigError(f"grid needs at least 4x4 cells, got {self.nx}x{self.ny}")
        if not (self.dx > 0 and self.dy > 0):
            raise ConfigError("grid spacing must be positive")
        if abs(self.dx - self.dy) > 1e-12 * self.dx:
            raise ConfigError(f"anisotropic cells are not supported (dx={self.dx}, dy={self.dy})")
        for a, b in (("left", "right"), ("bottom", "top")):
            pa, pb = getattr(self, a).kind == "periodic", getattr(self, b).kind == "periodic"
            if pa != pb:
                raise ConfigError(f"periodic boundary on {a}/{b} must be paired")

    @classmethod
    def box(cls, nx, ny, lx, ly=None, origin=(0.0, 0.0), bc=None, **sides):
        """Grid covering ``[x0, x0 + lx] x [y0, y0 + ly]``.

        ``bc`` may be a single kind applied to all sides; keyword sides
        (``left=BC(...)`` or ``left="outflow"``) override it.
        """
        ly = lx * ny / nx if ly is None else ly
        dx, dy = lx / nx, ly / ny
        default = bc if bc is not None else "wall"
        kw = {}
        for s in SIDES:
            b = sides.get(s, default)
            kw[s] = b if isinstance(b, BC) else BC(b)
        return cls(nx, ny, dx, dy, origin, **kw)

    @property
    def h(self):
        return self.dx

    @property
    def lx(self):
        return self.nx * self.dx

    @property
    def ly(self):
        return self.ny * self.dy

    def side(self, name):
        return getattr(self, name)

    @property
    def periodic_x(self):
        return self.left.kind == "periodic"

    @property
    def periodic_y(self):
        return self.bottom.kind == "periodic"

    def cell_centers(self):
        x0, y0 = self.origin
        x = x0 + (np.arange(self.nx) + 0.5) * self.dx
        y = y0 + (np.arange(self.ny) + 0.5) * self.dy
        return np.meshgrid(x, y, indexing="ij")

    def u_faces(self):
        x0, y0 = self.origin
        x = x0 + np.arange(self.nx + 1) * self.dx
        y = y0 + (np.arange(self.ny) + 0.5) * self.dy
        return np.meshgrid(x, y, indexing="ij")

    def v_faces(self):
        x0, y0 = self.origin
        x = x0 + (np.arange(self.nx) + 0.5) * self.dx
        y = y0 + np.arange(self.ny + 1) * self.dy
        return np.meshgrid(x, y, indexing="ij")

    def face_coords(self, comp):
        return self.u_faces() if comp == 0 else self.v_faces()

    def n_unique(self, comp):
        """Shape of the non-duplicated face block of component ``comp``."""
        if comp == 0:
            return (self.nx if self.periodic_x else self.nx + 1, self.ny)
        return (self.nx, self.ny if self.periodic_y else self.ny + 1)

    def pressure_bc(self):
        """Pressure BC tags implied by the velocity BCs."""
        out = {}
        for s in SIDES:
            k = self.side(s).kind
            out[s] = {"periodic": "periodic", "outflow": "dirichlet"}.get(k, "neumann")
        return out

    def zeros_cell(self):
        return np.zeros((self.nx, self.ny))

    def zeros_face(self):
        return FaceField(np.zeros((self.nx + 1, self.ny)), np.zeros((self.nx, self.ny + 1)))


@dataclass
class FaceField:
    """x- and y-face components of a staggered vector field."""

    u: np.ndarray
    v: np.ndarray

    def copy(self):
        return FaceField(self.u.copy(), self.v.copy())

    def __add__(self, other):
        return FaceField(self.u + other.u, self.v + other.v)

    def __sub__(self, other):
        return FaceField(self.u - other.u, self.v - other.v)

    def __mul__(self, c):
        return FaceField(self.u * c, self.v * c)

    __rmul__ = __mul__

    def comp(self, c):
        return self.u if c == 0 else self.v

    def max_abs(self):
        return max(np.abs(self.u).max(initial=0.0), np.abs(self.v).max(initial=0.0))

    def isfinite(self):
        return bool(np.isfinite(self.u).all() and np.isfinite(self.v).all())


def check_face(f, g):
    if f.u.shape != (g.nx + 1, g.ny) or f.v.shape != (g.nx, g.ny + 1):
        raise ConfigError(
            f"face field shapes {f.u.shape}/{f.v.shape} do not match grid {g.nx}x{g.ny}"
        )


def check_cell(p, g):
    if np.shape(p) != (g.nx, g.ny):
        raise ConfigError(f"cell field shape {np.shape(p)} does not match grid {g.nx}x{g.ny}")


def face_inner(a, b, g):
    """Discrete L2 inner product over non-duplicated faces."""
    su, sv = g.n_unique(0), g.n_unique(1)
    return g.dx * g.dy * (
        np.sum(a.u[: su[0], : su[1]] * b.u[: su[0], : su[1]])
        + np.sum(a.v[: sv[0], : sv[1]] * b.v[: sv[0], : sv[1]])
    )


def sync_periodic(f, g):
    """Copy first-face values onto duplicated last faces, in place."""
    if g.periodic_x:
        f.u[-1, :] = f.u[0, :]
    if g.periodic_y:
        f.v[:, -1] = f.v[:, 0]
    return f


# ---------------------------------------------------------------------------
# component assembly in "normal-major" layout: array (n + 1, m) where axis 0 is
# the component's own (staggered) axis.  v is handled through its transpose.


def _component_layout(g, comp):
    if comp == 0:
        return g.nx, g.ny, g.dx, g.dy, g.left, g.right, g.bottom, g.top
    return g.ny, g.nx, g.dy, g.dx, g.bottom, g.top, g.left, g.right


def _normal_value(bc, comp):
    return bc.velocity[comp] if bc.kind == "inflow" else 0.0


def _tangent_value(bc, comp):
    return bc.velocity[comp] if bc.kind in ("wall", "inflow") else 0.0


def _component_dofs(g, comp, offset):
    n, m, *_ , lo, hi, _tlo, _thi = _component_layout(g, comp)
    dof = np.full((n + 1, m), -1, dtype=np.int64)
    fixed = np.zeros((n + 1, m))
    owner = np.ones(n + 1, dtype=bool)
    if lo.kind not in ("periodic", "outflow"):
        owner[0] = False
        fixed[0, :] = _normal_value(lo, comp)
    if hi.kind == "periodic":
        owner[n] = False
    elif hi.kind != "outflow":
        owner[n] = False
        fixed[n, :] = _normal_value(hi, comp)
    rows = np.flatnonzero(owner)
    count = rows.size * m
    dof[rows, :] = offset + np.arange(count).reshape(rows.size, m)
    if hi.kind == "periodic":
        dof[n, :] = dof[0, :]
    return dof, fixed, owner


def _component_laplacian(g, comp, dof, fixed, owner):
    n, m, hn, ht, lo, hi, tlo, thi = _component_layout(g, comp)
    A, B = np.meshgrid(np.flatnonzero(owner), np.arange(m), indexing="ij")
    A, B = A.ravel(), B.ravel()
    k = dof[A, B]
    rows, cols, vals = [k], [k], [np.full(k.size, -2.0 / hn**2 - 2.0 / ht**2)]
    bc = np.zeros(k.size)
    selfc = np.zeros(k.size)

    # normal direction
    cn = 1.0 / hn**2
    for da in (-1, 1):
        A2 = A + da
        if lo.kind == "periodic":
            A2 = np.where(A2 == -1, n - 1, A2)
        else:
            A2 = np.where(A2 == -1, 1, A2)  # outflow mirror
        A2 = np.where(A2 == n + 1, n - 1, A2)
        d2 = dof[A2, B]
        ok = d2 >= 0
        rows.append(k[ok]), cols.append(d2[ok]), vals.append(np.full(ok.sum(), cn))
        bc[~ok] += cn * fixed[A2[~ok], B[~ok]]

    # tangential direction, ghost closure at the ends
    ct = 1.0 / ht**2
    for db, side, edge in ((-1, tlo, -1), (1, thi, m)):
        B2 = B + db
        at_edge = B2 == edge
        inner = ~at_edge
        if side.kind == "periodic":
            B2 = np.where(at_edge, B2 % m, B2)
            inner = np.ones_like(inner)
        elif side.kind == "outflow":
            selfc[at_edge] += ct
        else:
            val = _tangent_value(side, comp)
            selfc[at_edge] -= ct
            bc[at_edge] += 2.0 * ct * val
        d2 = dof[A[inner], B2[inner]]
        rows.append(k[inner]), cols.append(d2), vals.append(np.full(d2.size, ct))
    rows.append(k), cols.append(k), vals.append(selfc)
    return np.concatenate(rows), np.concatenate(cols), np.concatenate(vals), k, bc


class MACOperators:
    """Sparse discrete operators on the velocity dof vector of one grid.

    ``lap @ x + lap_bc`` is the BC-aware vector Laplacian, ``div @ x + div_bc``
    the cell divergence and ``grad @ p`` the face pressure gradient at dofs.
    ``poisson = div @ grad`` is the projection operator.
    """

    def __init__(self, g):
        self.grid = g
        du, fu, ou = _component_dofs(g, 0, 0)
        nu = int(du.max()) + 1
        dvt, fvt, ovt = _component_dofs(g, 1, nu)
        self.u_dof, self.v_dof = du, dvt.T.copy()
        self.fixed = FaceField(fu, fvt.T.copy())
        self.n_u = nu
        self.n_dof = int(dvt.max()) + 1
        self.n_cell = g.nx * g.ny

        r1, c1, v1, k1, b1 = _component_laplacian(g, 0, du, fu, ou)
        r2, c2, v2, k2, b2 = _component_laplacian(g, 1, dvt, fvt, ovt)
        n = self.n_dof
        self.lap = sp.csr_matrix(
            (np.concatenate([v1, v2]), (np.concatenate([r1, r2]), np.concatenate([c1, c2]))),
            shape=(n, n),
        )
        self.lap_bc = np.zeros(n)
        self.lap_bc[k1] = b1
        self.lap_bc[k2] = b2
        self._build_div_grad()
        self.pressure_singular = not any(
            g.side(s).kind == "outflow" for s in SIDES
        )
        self._lu = {}

    # -- packing ------------------------------------------------------------
    def pack(self, f):
        """Dof vector of a full face field (periodic owner faces are used)."""
        x = np.empty(self.n_dof)
        m = self.u_dof >= 0
        x[self.u_dof[m]] = f.u[m]
        m = self.v_dof >= 0
        x[self.v_dof[m]] = f.v[m]
        return x

    def unpack(self, x, fill_fixed=True):
        """Full face field from a dof vector; fixed faces get the BC values or 0."""
        f = self.fixed.copy() if fill_fixed else self.grid.zeros_face()
        m = self.u_dof >= 0
        f.u[m] = x[self.u_dof[m]]
        m = self.v_dof >= 0
        f.v[m] = x[self.v_dof[m]]
        return f

    def enforce_bc(self, f):
        """Return a copy of ``f`` with Dirichlet faces and duplicates reset."""
        return self.unpack(self.pack(f))

    # -- divergence / gradient ------------------------------------------------
    def _build_div_grad(self):
        g = self.grid
        nx, ny = g.nx, g.ny
        I, J = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
        cell = (I * ny + J).ravel()
        rows, cols, vals = [], [], []
        dbc = np.zeros(nx * ny)
        for dof, fixed, fi, sign, hh in (
            (self.u_dof, self.fixed.u, (I + 1, J), 1.0, g.dx),
            (self.u_dof, self.fixed.u, (I, J), -1.0, g.dx),
            (self.v_dof, self.fixed.v, (I, J + 1), 1.0, g.dy),
            (self.v_dof, self.fixed.v, (I, J), -1.0, g.dy),
        ):
            d = dof[fi].ravel()
            ok = d >= 0
            rows.append(cell[ok]), cols.append(d[ok]), vals.append(np.full(ok.sum(), sign / hh))
            dbc[cell[~ok]] += sign / hh * fixed[fi].ravel()[~ok]
        self.div = sp.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(nx * ny, self.n_dof),
        )
        self.div_bc = dbc

        # gradient at owner dofs
        rows, cols, vals = [], [], []
        for comp in (0, 1):
            n, m, hn, _ht, lo, hi, _tl, _th = _component_layout(g, comp)
            dof = self.u_dof if comp == 0 else self.v_dof.T
            A, B = np.meshgrid(np.arange(n + 1), np.arange(m), indexing="ij")
            own = (dof >= 0) & ~((A == n) & (hi.kind == "periodic"))
            A, B = A[own], B[own]
            k = dof[A, B]

            def cidx(a, b):
                return a * ny + b if comp == 0 else b * ny + a

            right = A <= n - 1  # cell on the + side exists
            left = A >= 1
            # interior: (p[a] - p[a-1]) / hn
            both = right & left
            rows += [k[both], k[both]]
            cols += [cidx(A[both], B[both]), cidx(A[both] - 1, B[both])]
            vals += [np.full(both.sum(), 1.0 / hn), np.full(both.sum(), -1.0 / hn)]
            first = A == 0
            if first.any():
                if lo.kind == "periodic":
                    rows += [k[first], k[first]]
                    cols += [cidx(A[first], B[first]), cidx(np.full(first.sum(), n - 1), B[first])]
                    vals += [np.full(first.sum(), 1.0 / hn), np.full(first.sum(), -1.0 / hn)]
                else:  # outflow: p = 0 on the boundary
                    rows.append(k[first]), cols.append(cidx(A[first], B[first]))
                    vals.append(np.full(first.sum(), 2.0 / hn))
            last = A == n
            if last.any():
                rows.append(k[last]), cols.append(cidx(A[last] - 1, B[last]))
                vals.append(np.full(last.sum(), -2.0 / hn))
        self.grad = sp.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(self.n_dof, nx * ny),
        )
        self.poisson = (self.div @ self.grad).tocsc()

    # -- factorizations -----------------------------------------------------
    def factor(self, key, build):
        lu = self._lu.get(key)
        if lu is None:
            lu = spla.splu(build().tocsc())
            self._lu[key] = lu
        return lu

    def solve_pressure(self, rhs):
        """Solve ``poisson @ p = rhs``; returns (p, info)."""
        return _solve_cell_system(self, "poisson", lambda: self.poisson, rhs, self.pressure_singular)


@functools.lru_cache(maxsize=32)
def operators(g):
    """Cached :class:`MACOperators` for a grid."""
    return MACOperators(g)


def _augment(A):
    n = A.shape[0]
    one = sp.csr_matrix(np.ones((n, 1)))
    return sp.bmat([[A, one], [one.T, None]])


def _solve_cell_system(cache, key, build, rhs, singular, tol=TOL_POISSON, refine=2):
    rhs = np.asarray(rhs, dtype=float).ravel()
    info = {"compat_adjusted": False, "mean_removed": 0.0}
    if singular:
        mean = rhs.mean()
        if abs(mean) > 1e-14 * max(1.0, np.abs(rhs).max()):
            info["compat_adjusted"] = True
        info["mean_removed"] = mean
        rhs = rhs - mean
        lu = cache.factor(key + ":aug", lambda: _augment(build()))
        A = build()

        def solve(b):
            return lu.solve(np.append(b, 0.0))[:-1]
    else:
        lu = cache.factor(key, build)
        A = build()
        solve = lu.solve
    x = solve(rhs)
    scale = max(1.0, np.abs(rhs).max())
    for _ in range(refine):
        r = rhs - A @ x
        if np.abs(r).max() <= 1e-3 * tol * scale:
            break
        x = x + solve(r)
    if singular:
        x -= x.mean()
    res = np.abs(A @ x - rhs).max()
    info["residual"] = res
    if not np.isfinite(res) or res > tol * scale:
        raise SolverError(f"Poisson solve did not converge: residual {res:.3e} (tol {tol * scale:.3e})")
    return x, info


# ---------------------------------------------------------------------------
# public field operators


def divergence(vel, g):
    """Cell-centred MAC divergence of a full face field."""
    check_face(vel, g)
    return (vel.u[1:, :] - vel.u[:-1, :]) / g.dx + (vel.v[:, 1:] - vel.v[:, :-1]) / g.dy


def gradient(p, g):
    """Face gradient of a cell field, consistent with the pressure BCs.

    Faces on Neumann (wall/inflow) sides carry zero; outflow sides use the
    ``p = 0`` ghost; periodic duplicates are synchronised.
    """
    check_cell(p, g)
    ops = operators(g)
    return ops.unpack(ops.grad @ np.asarray(p, float).ravel(), fill_fixed=False)


def laplacian(vel, g):
    """Vector Laplacian at velocity dofs with BC ghost closure (0 at fixed faces)."""
    check_face(vel, g)
    ops = operators(g)
    return ops.unpack(ops.lap @ ops.pack(vel) + ops.lap_bc, fill_fixed=False)


def pad_faces(vel, g):
    """Ghost-padded copies ``(U, V)`` of a face field with one ghost layer.

    ``U[i + 1, j + 1] = u[i, j]``; tangential ghosts follow the side BCs
    (periodic wrap, linear extrapolation to the wall/inflow value, mirror at
    outflow) and normal ghosts wrap, mirror (outflow) or extrapolate.
    """
    U = _pad_component(vel.u, g, 0)
    V = _pad_component(vel.v.T, g, 1).T
    return U, V


def _pad_component(a, g, comp):
    n, m, _hn, _ht, lo, hi, tlo, thi = _component_layout(g, comp)
    P = np.zeros((n + 3, m + 2))
    P[1:-1, 1:-1] = a
    # normal ghosts
    if lo.kind == "periodic":
        P[0, 1:-1] = a[n - 1]
        P[-1, 1:-1] = a[1]
    else:
        P[0, 1:-1] = a[1] if lo.kind == "outflow" else 2 * a[0] - a[1]
        P[-1, 1:-1] = a[n - 1] if hi.kind == "outflow" else 2 * a[n] - a[n - 1]
    # tangential ghosts (including the corner columns)
    for side, ghost, inner, wrap in ((tlo, 0, 1, -2), (thi, -1, -2, 1)):
        if side.kind == "periodic":
            P[:, ghost] = P[:, wrap]
        elif side.kind == "outflow":
            P[:, ghost] = P[:, inner]
        else:
            P[:, ghost] = 2.0 * _tangent_value(side, comp) - P[:, inner]
    return P


def convect(vel, g, upwind=0.0):
    """Convective term ``div(u u)`` at face dofs, explicit in ``vel``.

    Second-order centred flux form, which telescopes so that total momentum is
    conserved on periodic grids.  ``upwind`` in [0, 1] blends in first-order
    upwinded advective differences for rough flows.
    """
    check_face(vel, g)
    U, V = pad_faces(vel, g)
    ops = operators(g)
    cu = _flux_form(U, V, g.dx, g.dy)
    cv = _flux_form(V.T, U.T, g.dy, g.dx).T
    if upwind:
        vbar = 0.25 * (V[:-1, 1:-2] + V[1:, 1:-2] + V[:-1, 2:-1] + V[1:, 2:-1])
        ubar = 0.25 * (U[1:-2, :-1] + U[2:-1, :-1] + U[1:-2, 1:] + U[2:-1, 1:])
        cu = (1 - upwind) * cu + upwind * _advect(U[1:-1, 1:-1], vbar, U, g.dx, g.dy, 1.0)
        cv = (1 - upwind) * cv + upwind * _advect(ubar, V[1:-1, 1:-1], V, g.dx, g.dy, 1.0)
    out = FaceField(cu, cv)
    return ops.unpack(ops.pack(out), fill_fixed=False)


def _flux_form(A, B, dn, dt):
    """d(a a)/dn + d(b a)/dt at the normal faces of padded component ``A``."""
    ac = 0.5 * (A[:-1, 1:-1] + A[1:, 1:-1])
    fn = ac * ac
    bk = 0.5 * (B[:-1, 1:-1] + B[1:, 1:-1])
    ak = 0.5 * (A[1:-1, :-1] + A[1:-1, 1:])
    ft = bk * ak
    return (fn[1:] - fn[:-1]) / dn + (ft[:, 1:] - ft[:, :-1]) / dt


def _advect(a, b, P, dx, dy, upwind):
    """a * dP/dx + b * dP/dy at the interior of padded array P."""
    c = P[1:-1, 1:-1]
    dxc = (P[2:, 1:-1] - P[:-2, 1:-1]) / (2 * dx)
    dyc = (P[1:-1, 2:] - P[1:-1, :-2]) / (2 * dy)
    out = a * dxc + b * dyc
    if upwind:
        dxu = np.where(a > 0, (c - P[:-2, 1:-1]) / dx, (P[2:, 1:-1] - c) / dx)
        dyu = np.where(b > 0, (c - P[1:-1, :-2]) / dy, (P[1:-1, 2:] - c) / dy)
        out = (1 - upwind) * out + upwind * (a * dxu + b * dyu)
    return out


# ---------------------------------------------------------------------------
# scalar (cell-centred) elliptic operators


def scalar_bc_tags(g, bc=None):
    """Complete a side -> {'dirichlet', 'neumann', 'periodic'} mapping."""
    tags = g.pressure_bc()
    if bc:
        for s, t in bc.items():
            if s not in SIDES:
                raise ConfigError(f"unknown side {s!r}")
            if t not in ("dirichlet", "neumann", "periodic"):
                raise ConfigError(f"unknown scalar BC {t!r} on {s}")
            tags[s] = t
    for a, b in (("left", "right"), ("bottom", "top")):
        if (tags[a] == "periodic") != (tags[b] == "periodic"):
            raise ConfigError(f"periodic scalar BC on {a}/{b} must be paired")
    return tags


def scalar_diffusion(g, bc=None, coef=None, values=None):
    """Matrix ``A`` and vector ``b`` with ``A q + b = div(k grad q)`` at cells.

    ``coef`` is an optional face field of diffusivities (default 1).  Dirichlet
    sides use the ghost ``q_g = 2 q_b - q``, Neumann sides zero flux.
    ``values(x, y)`` gives boundary data for Dirichlet sides.
    """
    tags = scalar_bc_tags(g, bc)
    nx, ny = g.nx, g.ny
    if coef is None:
        coef = FaceField(np.ones((nx + 1, ny)), np.ones((nx, ny + 1)))
    I, J = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
    idx = I * ny + J
    rows, cols, vals = [], [], []
    b = np.zeros((nx, ny))
    xf, yf = g.u_faces()
    xg, yg = g.v_faces()
    for axis in (0, 1):
        h2 = (g.dx if axis == 0 else g.dy) ** 2
        k = coef.u if axis == 0 else coef.v
        n = nx if axis == 0 else ny
        lo, hi = ("left", "right") if axis == 0 else ("bottom", "top")
        fx, fy = (xf, yf) if axis == 0 else (xg, yg)
        for sgn in (-1, 1):
            pos = (I if axis == 0 else J)
            face = pos + (1 if sgn > 0 else 0)  # face between cell and neighbour
            kf = k[face, J] if axis == 0 else k[I, face]
            nb = pos + sgn
            inside = (nb >= 0) & (nb < n)
            side = hi if sgn > 0 else lo
            if tags[side] == "periodic":
                nb = nb % n
                inside = np.ones_like(inside)
            nbI, nbJ = (nb, J) if axis == 0 else (I, nb)
            m = inside
            rows += [idx[m], idx[m]]
            cols += [(nbI * ny + nbJ)[m], idx[m]]
            vals += [kf[m] / h2, -kf[m] / h2]
            edge = ~inside
            if edge.any() and tags[side] == "dirichlet":
                rows.append(idx[edge]), cols.append(idx[edge]), vals.append(-2 * kf[edge] / h2)
                if values is not None:
                    if axis == 0:
                        qb = values(fx[face[edge], J[edge]], fy[face[edge], J[edge]])
                    else:
                        qb = values(fx[I[edge], face[edge]], fy[I[edge], face[edge]])
                    b[I[edge], J[edge]] += 2 * kf[edge] / h2 * qb
    A = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(nx * ny, nx * ny)
    )
    return A, b.ravel(), tags


class _Cache:
    def __init__(self):
        self._lu = {}

    def factor(self, key, build):
        lu = self._lu.get(key)
        if lu is None:
            lu = spla.splu(build().tocsc())
            self._lu[key] = lu
        return lu


def poisson_solve(rhs, g, bc=None, values=None, tol=TOL_POISSON, return_info=False):
    """Solve the cell Laplace equation ``lap(p) = rhs``.

    With ``bc=None`` and no boundary values the projection operator
    ``div(grad(.))`` of the grid is used (walls/inflow Neumann, outflow
    Dirichlet ``p = 0``, periodic wrap).  Otherwise ``bc`` maps sides to
    ``'dirichlet' | 'neumann' | 'periodic'`` and ``values(x, y)`` supplies
    Dirichlet data.  Singular (all-Neumann/periodic) problems get the
    compatibility mean removed and a zero-mean solution; ``info`` records it.
    """
    check_cell(rhs, g)
    if bc is None and values is None:
        p, info = operators(g).solve_pressure(rhs)
    else:
        A, b, tags = scalar_diffusion(g, bc, values=values)
        singular = "dirichlet" not in tags.values()
        p, info = _solve_cell_system(_Cache(), "scalar", lambda: A, np.ravel(rhs) - b, singular, tol=tol)
    p = p.reshape(g.nx, g.ny)
    return (p, info) if return_info else p
