"""Monolithic steady-Stokes solver with distributed Lagrange multipliers.

Unknowns are the velocity dofs ``u``, cell pressures ``p``, marker forces
``lambda`` and, for freely moving bodies, ``(U, omega)``.  The rows are

* momentum ``-mu lap(u) + grad(p) - S lambda = f``
* continuity ``div(u) = 0``
* constraint ``W u = U + omega x r + u_def`` at every marker
* (free) force and torque balance ``sum lambda dV = F_ext``, ``sum r x lambda dV = T_ext``

with ``S = W^T diag(dV) / (dx dy)`` so spreading is the adjoint of
interpolation.  The sparse system is factorized directly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .body import characteristic, cross2, omega_cross, rotation
from .errors import ConfigError, SolverError
from .grid import FaceField, operators
from .kernels import DeltaKernel, Transfer, _target_shape

MAX_CELLS = 96 * 96


@dataclass
class DLMSystem:
    grid: object
    A: sp.csc_matrix
    b: np.ndarray
    mu: float
    bodies: list
    mode: str
    blocks: dict
    transfers: list
    regularization: float = 0.0
    pinned: bool = False


@dataclass
class DLMSolution:
    u: FaceField
    p: np.ndarray
    lam: list
    U: list = field(default_factory=list)
    omega: list = field(default_factory=list)
    stats: dict = field(default_factory=dict)

    def slip(self, system):
        """Max marker slip ``|W u - u_s|`` per body."""
        out = []
        for k, (body, T) in enumerate(zip(system.bodies, system.transfers)):
            um = T.interpolate(self.u)
            U = self.U[k] if system.mode == "free" else body.state.U
            om = self.omega[k] if system.mode == "free" else body.state.omega
            us = U[None, :] + omega_cross(om, body.arms())
            if body.deformation is not None:
                us = us + body.deformation(body.markers.r, 0.0) @ rotation(body.state.theta).T
            out.append(float(np.abs(um - us).max()))
        return out

    def forces(self, system):
        """Hydrodynamic force and torque on each body, ``-(sum lambda dV, sum r x lambda dV)``."""
        out = []
        for body, lam in zip(system.bodies, self.lam):
            dV = body.markers.dV
            F = -(lam * dV[:, None]).sum(0)
            T = -float(np.sum(cross2(body.arms(), lam) * dV))
            out.append((F, T))
        return out


def _marker_blocks(T, ops, g):
    """Interpolation rows split into dof columns and a fixed-face contribution."""
    n = len(T.X)
    blocks, fixed_part = [], np.zeros((n, 2))
    for c in (0, 1):
        W = T.matrix(c).tocoo()
        su = _target_shape(g, c)
        a, bidx = np.unravel_index(W.col, su)
        dof = (ops.u_dof if c == 0 else ops.v_dof)[a, bidx]
        ok = dof >= 0
        blocks.append(sp.csr_matrix((W.data[ok], (W.row[ok], dof[ok])), shape=(n, ops.n_dof)))
        fv = ops.fixed.comp(c)[a[~ok], bidx[~ok]]
        fixed_part[:, c] = np.bincount(W.row[~ok], weights=W.data[~ok] * fv, minlength=n)
    return blocks, fixed_part


def _check_spacing(body, h):
    X = body.markers.X
    if len(X) < 2:
        return
    from scipy.spatial import cKDTree

    d, _ = cKDTree(X).query(X, k=2)
    if d[:, 1].min() < (1.0 - 1e-9) * h:
        raise ConfigError(
            f"marker spacing {d[:, 1].min():.4g} is below the grid spacing {h:.4g}; "
            "the constraint block would be rank deficient, use a larger marker spacing"
        )


def assemble_stokes_dlm(g, mu, bodies, mode="prescribed", kernel=None, force=None, external=None,
                        regularization=0.0, max_cells=MAX_CELLS):
    """Assemble the steady Stokes saddle-point system with body constraints."""
    if mode not in ("prescribed", "free"):
        raise ConfigError("mode must be 'prescribed' or 'free'")
    if g.nx * g.ny > max_cells:
        raise ConfigError(f"grid {g.nx}x{g.ny} exceeds the direct-solve guard of {max_cells} cells")
    if mu <= 0:
        raise ConfigError("steady Stokes needs a positive viscosity")
    kernel = kernel or DeltaKernel()
    ops = operators(g)
    nu_, nc = ops.n_dof, g.nx * g.ny
    for b in bodies:
        _check_spacing(b, g.h)
    transfers = [Transfer(kernel, b.markers.X, g) for b in bodies]
    nm = [len(b.markers) for b in bodies]
    nl = 2 * sum(nm)
    nr = 3 * len(bodies) if mode == "free" else 0
    dA = g.dx * g.dy

    Jrows, Srows, Rrows, Qrows = [], [], [], []
    rhs_c = []
    for k, (b, T) in enumerate(zip(bodies, transfers)):
        (Wu, Wv), fixed_part = _marker_blocks(T, ops, g)
        n = nm[k]
        # interleave lambda as [lx_0..lx_n, ly_0..ly_n] per body
        Jrows.append(sp.vstack([Wu, Wv]))
        D = sp.diags(b.markers.dV / dA)
        Srows.append(sp.hstack([Wu.T @ D, Wv.T @ D]))
        arms = b.arms()
        us_def = np.zeros((n, 2))
        if b.deformation is not None:
            us_def = b.deformation(b.markers.r, 0.0) @ rotation(b.state.theta).T
        if mode == "prescribed":
            us = b.state.U[None, :] + omega_cross(b.state.omega, arms) + us_def
            rhs_c.append(np.concatenate([us[:, 0] - fixed_part[:, 0], us[:, 1] - fixed_part[:, 1]]))
        else:
            rhs_c.append(np.concatenate([us_def[:, 0] - fixed_part[:, 0], us_def[:, 1] - fixed_part[:, 1]]))
            R = np.zeros((2 * n, 3 * len(bodies)))
            R[:n, 3 * k] = 1.0
            R[n:, 3 * k + 1] = 1.0
            R[:n, 3 * k + 2] = -arms[:, 1]
            R[n:, 3 * k + 2] = arms[:, 0]
            Rrows.append(sp.csr_matrix(R))
            dV = b.markers.dV
            Q = np.zeros((3, 2 * n))
            Q[0, :n] = dV
            Q[1, n:] = dV
            Q[2, :n] = -arms[:, 1] * dV
            Q[2, n:] = arms[:, 0] * dV
            Qrows.append(Q)

    S = sp.hstack(Srows).tocsr() if bodies else sp.csr_matrix((nu_, 0))
    J = sp.vstack(Jrows).tocsr() if bodies else sp.csr_matrix((0, nu_))
    Dm = ops.div.tocsr().copy()
    b_cont = -ops.div_bc.copy()
    pinned = ops.pressure_singular
    if pinned:
        Dm = Dm.tolil()
        Dm[0, :] = 0
        Dm = Dm.tocsr()
        b_cont[0] = 0.0
    P = sp.csr_matrix(([1.0], ([0], [0])), shape=(nc, nc)) if pinned else None

    blocks = [
        [-mu * ops.lap, ops.grad, -S, None],
        [Dm, P, None, None],
        [J, None, (-regularization * sp.eye(nl)) if regularization else None, None],
    ]
    if mode == "free":
        blocks[2][3] = -sp.vstack(Rrows)
        Qm = sp.block_diag([sp.csr_matrix(q) for q in Qrows])
        blocks.append([None, None, Qm, None])
        for row in blocks[:2]:
            row[3] = None
    else:
        for row in blocks:
            row.pop()
    # sparse.bmat needs a shape hint for empty rows/cols
    shapes_r = [nu_, nc, nl] + ([nr] if mode == "free" else [])
    shapes_c = [nu_, nc, nl] + ([nr] if mode == "free" else [])
    grid_blocks = []
    for i, row in enumerate(blocks):
        out = []
        for j, blk in enumerate(row):
            out.append(blk if blk is not None else sp.csr_matrix((shapes_r[i], shapes_c[j])))
        grid_blocks.append(out)
    A = sp.bmat(grid_blocks).tocsc()

    f = np.zeros(nu_) if force is None else ops.pack(force)
    rhs = [f + mu * ops.lap_bc, b_cont, np.concatenate(rhs_c) if rhs_c else np.zeros(0)]
    if mode == "free":
        loads = external(bodies) if external is not None else [((0.0, 0.0), 0.0)] * len(bodies)
        rhs.append(np.concatenate([[F[0], F[1], T] for F, T in loads]).astype(float))
    b = np.concatenate(rhs)
    return DLMSystem(g, A, b, mu, list(bodies), mode,
                     {"n_u": nu_, "n_p": nc, "n_lambda": nl, "n_rigid": nr, "n_markers": nm},
                     transfers, regularization, pinned)


def solve_dlm(system, tol=1e-10, refine=3):
    """Direct sparse solve with iterative refinement; returns :class:`DLMSolution`."""
    A, b = system.A, system.b
    try:
        lu = spla.splu(A)
    except RuntimeError as exc:
        raise SolverError(
            f"DLM factorization failed ({exc}); the constraint block is likely rank deficient "
            "(increase the marker spacing or enable regularization)"
        ) from exc
    x = lu.solve(b)
    scale = max(np.abs(b).max(), 1e-300)
    for _ in range(refine):
        r = b - A @ x
        if np.abs(r).max() <= 1e-14 * scale:
            break
        x = x + lu.solve(r)
    res = float(np.abs(b - A @ x).max() / scale)
    cond = _condition_estimate(A, lu)
    if not np.isfinite(res) or res > tol:
        raise SolverError(f"DLM solve residual {res:.3e} exceeds {tol:.1e} (1-norm condition estimate {cond:.3e})")
    bl = system.blocks
    g = system.grid
    ops = operators(g)
    nu_, nc, nl = bl["n_u"], bl["n_p"], bl["n_lambda"]
    u = ops.unpack(x[:nu_])
    p = x[nu_: nu_ + nc].reshape(g.nx, g.ny)
    lam_all = x[nu_ + nc: nu_ + nc + nl]
    lams, off = [], 0
    for n in bl["n_markers"]:
        seg = lam_all[off: off + 2 * n]
        lams.append(np.stack([seg[:n], seg[n:]], 1))
        off += 2 * n
    sol = DLMSolution(u, p, lams)
    if system.mode == "free":
        rig = x[nu_ + nc + nl:]
        for k in range(len(system.bodies)):
            sol.U.append(rig[3 * k: 3 * k + 2].copy())
            sol.omega.append(float(rig[3 * k + 2]))
    sol.stats = {
        "size": A.shape[0],
        "nnz": int(A.nnz),
        "residual": res,
        "condition_estimate": cond,
        "regularization": system.regularization,
        "pressure_pinned": system.pinned,
    }
    return sol


def _condition_estimate(A, lu):
    try:
        inv = spla.LinearOperator(A.shape, matvec=lu.solve, rmatvec=lambda y: lu.solve(y, trans="T"))
        return float(spla.onenormest(A) * spla.onenormest(inv))
    except Exception:  # the estimate is diagnostic only
        return float("nan")


def solve_brinkman_stokes(g, mu, chi, target, kappa, force=None):
    """Steady penalized Stokes ``-mu lap u + kappa chi (u - u_t) + grad p = f``.

    Returns ``(u, p, lambda_field)`` with ``lambda = kappa chi (u_t - u)``.
    """
    ops = operators(g)
    nu_, nc = ops.n_dof, g.nx * g.ny
    K = ops.pack(chi) * kappa
    Dm = ops.div.tocsr().copy()
    b_cont = -ops.div_bc.copy()
    P = None
    if ops.pressure_singular:
        Dm = Dm.tolil()
        Dm[0, :] = 0
        Dm = Dm.tocsr()
        b_cont[0] = 0.0
        P = sp.csr_matrix(([1.0], ([0], [0])), shape=(nc, nc))
    A = sp.bmat([[sp.diags(K) - mu * ops.lap, ops.grad], [Dm, P if P is not None else sp.csr_matrix((nc, nc))]]).tocsc()
    f = np.zeros(nu_) if force is None else ops.pack(force)
    b = np.concatenate([f + mu * ops.lap_bc + K * ops.pack(target), b_cont])
    lu = spla.splu(A)
    x = lu.solve(b)
    for _ in range(2):
        x = x + lu.solve(b - A @ x)
    u = ops.unpack(x[:nu_])
    p = x[nu_:].reshape(g.nx, g.ny)
    lam = FaceField(kappa * chi.u * (target.u - u.u), kappa * chi.v * (target.v - u.v))
    return u, p, lam


def penalized_fields(g, shapes_targets, smooth=True):
    """``chi`` and target velocity faces for ``[(signed_distance_fn, velocity_fn)]``.

    ``velocity_fn(x, y) -> (u, v)``; later entries win where regions overlap.
    """
    xs = [g.u_faces(), g.v_faces()]
    chi = [np.zeros_like(xs[0][0]), np.zeros_like(xs[1][0])]
    tgt = [np.zeros_like(xs[0][0]), np.zeros_like(xs[1][0])]
    for sd, vel in shapes_targets:
        for c, (x, y) in enumerate(xs):
            ch = characteristic(sd(x, y), g.h, smooth)
            v = np.asarray(vel(x, y)[c], float) * np.ones_like(x)
            tgt[c] = np.where(ch > 0, v, tgt[c])
            chi[c] = np.maximum(chi[c], ch)
    return FaceField(*chi), FaceField(*tgt)


def statistics_row(sol):
    """Flat dict of solve statistics for CSV export."""
    return dict(sol.stats)
