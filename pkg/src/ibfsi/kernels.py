"""Lagrangian-Eulerian transfer: regularized delta kernels and one-sided MLS.

Both kernel types are realised as a sparse transfer matrix ``W`` per velocity
component (rows: markers, columns: non-duplicated faces), so interpolation is
``W @ f`` and spreading is ``W.T @ (F dV) / (dx dy)``; the two are adjoint by
construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError, DegenerateError, OutOfSupportError
from .grid import FaceField, check_cell, check_face, sync_periodic

# ---------------------------------------------------------------------------
# 1D kernel profiles, argument in grid units


def _linear2(r):
    a = np.abs(r)
    return np.where(a < 1.0, 1.0 - a, 0.0)


def _cosine3(r):
    a = np.abs(r)
    return np.where(a < 1.5, (1.0 + np.cos(2.0 * np.pi * r / 3.0)) / 3.0, 0.0)


def _peskin4(r):
    a = np.abs(r)
    inner = (3.0 - 2.0 * a + np.sqrt(np.clip(1.0 + 4.0 * a - 4.0 * a * a, 0.0, None))) / 8.0
    outer = (5.0 - 2.0 * a - np.sqrt(np.clip(-7.0 + 12.0 * a - 4.0 * a * a, 0.0, None))) / 8.0
    return np.where(a <= 1.0, inner, np.where(a < 2.0, outer, 0.0))


_FAMILIES = {
    "linear2": (_linear2, 1.0),
    "cosine3": (_cosine3, 1.5),
    "peskin4": (_peskin4, 2.0),
}


@dataclass(frozen=True)
class DeltaKernel:
    family: str = "peskin4"

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise ConfigError(f"unknown kernel family {self.family!r}; expected {sorted(_FAMILIES)}")

    @property
    def half_width(self):
        return _FAMILIES[self.family][1]

    @property
    def npoints(self):
        return int(round(2 * self.half_width))

    def phi(self, r):
        return _FAMILIES[self.family][0](np.asarray(r, dtype=float))


@dataclass
class MarkerSet:
    """Lagrangian markers: lab positions, body-frame coordinates and weights.

    ``dV`` is an area for volume markers and an arc length (times unit depth)
    for surface markers.  ``closed`` marks a closed polyline for fiber
    connectivity.
    """

    X: np.ndarray
    r: np.ndarray
    dV: np.ndarray
    role: str = "volume"
    closed: bool = False

    def __post_init__(self):
        self.X = np.atleast_2d(np.asarray(self.X, dtype=float))
        self.r = np.atleast_2d(np.asarray(self.r, dtype=float))
        self.dV = np.atleast_1d(np.asarray(self.dV, dtype=float))
        if self.role not in ("surface", "volume"):
            raise ConfigError(f"marker role must be 'surface' or 'volume', got {self.role!r}")
        n = len(self.X)
        if self.r.shape != (n, 2) or self.dV.shape != (n,):
            raise ConfigError("marker arrays have inconsistent shapes")
        if np.any(self.dV <= 0):
            raise ConfigError("marker quadrature weights must be positive")

    def __len__(self):
        return len(self.X)

    def copy(self):
        return MarkerSet(self.X.copy(), self.r.copy(), self.dV.copy(), self.role, self.closed)


# ---------------------------------------------------------------------------
# node layouts


def _axis_nodes(g, comp, axis):
    """(shift, node count, periodic, unique count) for one axis of a target."""
    if comp == "cell":
        stag = False
    else:
        stag = (comp == 0 and axis == 0) or (comp == 1 and axis == 1)
    n = g.nx if axis == 0 else g.ny
    periodic = g.periodic_x if axis == 0 else g.periodic_y
    shift = 0.0 if stag else 0.5
    count = n + 1 if stag else n
    unique = n if periodic else count
    return shift, count, periodic, unique


def _target_shape(g, comp):
    return tuple(_axis_nodes(g, comp, a)[3] for a in (0, 1))


def _stencil_1d(kernel, t, count, periodic, unique, what):
    S = kernel.npoints
    if S % 2 == 0:
        i0 = np.floor(t).astype(np.int64) - S // 2 + 1
    else:
        i0 = np.floor(t + 0.5).astype(np.int64) - (S - 1) // 2
    idx = i0[:, None] + np.arange(S)[None, :]
    w = kernel.phi(t[:, None] - idx)
    if periodic:
        idx = idx % unique
    else:
        bad = (idx[:, 0] < 0) | (idx[:, -1] > count - 1)
        if bad.any():
            k = int(np.flatnonzero(bad)[0])
            raise OutOfSupportError(
                f"marker {k} kernel stencil leaves the grid along {what}; "
                "keep markers at least one kernel half-width inside the domain"
            )
    return idx, w


def delta_stencil(kernel, X, g, comp):
    """Tensor-product stencil for markers ``X`` on target ``comp`` (0, 1, 'cell').

    Returns flat indices into the non-duplicated target array and weights,
    both of shape ``(n_markers, S*S)``.  Weights sum to one per marker.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    shape = _target_shape(g, comp)
    parts = []
    for axis, h in ((0, g.dx), (1, g.dy)):
        shift, count, periodic, unique = _axis_nodes(g, comp, axis)
        t = (X[:, axis] - g.origin[axis]) / h - shift
        parts.append(_stencil_1d(kernel, t, count, periodic, unique, "xy"[axis]))
    (ix, wx), (iy, wy) = parts
    flat = (ix[:, :, None] * shape[1] + iy[:, None, :]).reshape(len(X), -1)
    w = (wx[:, :, None] * wy[:, None, :]).reshape(len(X), -1)
    return flat, w


def delta_weights(kernel, X, g, target):
    """Sparse stencil ``(indices, weights)`` of a single point.

    ``target`` is ``'u'``, ``'v'`` or ``'cell'``; indices are ``(i, j)``
    pairs into the (non-duplicated) target array.
    """
    comp = {"u": 0, "v": 1, "cell": "cell"}[target]
    flat, w = delta_stencil(kernel, np.asarray(X, float)[None, :], g, comp)
    ny = _target_shape(g, comp)[1]
    return np.stack([flat[0] // ny, flat[0] % ny], axis=1), w[0]


# ---------------------------------------------------------------------------
# moving least squares


def wendland_c2(q):
    q = np.asarray(q, dtype=float)
    return np.where(q < 1.0, (1.0 - q) ** 4 * (4.0 * q + 1.0), 0.0)


def gaussian(q):
    q = np.asarray(q, dtype=float)
    return np.where(q < 1.0, np.exp(-9.0 * q * q), 0.0)


_WEIGHTS = {"wendland": wendland_c2, "gaussian": gaussian}


@dataclass
class MLSConfig:
    """Moving-least-squares kernel settings.

    ``radius`` is the weight support in cells.  ``heaviside(x, y)`` returns a
    boolean mask of admissible points (``None``: all points admissible).
    """

    degree: int = 1
    weight: str = "wendland"
    radius: float = 2.6
    heaviside: Optional[Callable] = field(default=None, repr=False)
    max_condition: float = 1e12

    def __post_init__(self):
        if self.degree not in (0, 1, 2):
            raise ConfigError("MLS degree must be 0, 1 or 2")
        if self.weight not in _WEIGHTS:
            raise ConfigError(f"unknown MLS weight {self.weight!r}")
        if self.radius <= 0:
            raise ConfigError("MLS radius must be positive")

    @property
    def basis_size(self):
        d = self.degree
        return (d + 1) * (d + 2) // 2


def mls_basis(xi, degree):
    """Monomials of total degree <= ``degree`` at scaled points ``xi`` (N, 2)."""
    x, y = xi[:, 0], xi[:, 1]
    cols = [np.ones_like(x)]
    if degree >= 1:
        cols += [x, y]
    if degree >= 2:
        cols += [x * x, x * y, y * y]
    return np.stack(cols)  # (m, N)


def mls_generating_functions(points, mask, X, cfg, h=1.0):
    """Generating functions ``psi_i(X)`` for data ``points`` (N, 2).

    Solves the Gram system ``G Upsilon = P(X)`` with restricted weights
    ``W * H`` and returns ``psi_i = W_i H_i sum_j Upsilon_j p_j(x_i)``.
    Masked points (``H = 0``) receive exactly zero.  The basis is centred at
    ``X`` and scaled by the support radius.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    X = np.asarray(X, dtype=float)
    R = cfg.radius * h
    xi = (points - X) / R
    W = _WEIGHTS[cfg.weight](np.hypot(xi[:, 0], xi[:, 1]))
    if mask is not None:
        W = np.where(np.asarray(mask, dtype=bool), W, 0.0)
    m = cfg.basis_size
    if np.count_nonzero(W) < m:
        raise DegenerateError(
            f"MLS neighbourhood of X=({X[0]:.6g}, {X[1]:.6g}) has {np.count_nonzero(W)} "
            f"admissible points, need {m}"
        )
    A = mls_basis(xi, cfg.degree)
    G = (A * W) @ A.T
    cond = np.linalg.cond(G)
    if not np.isfinite(cond) or cond > cfg.max_condition:
        raise DegenerateError(
            f"MLS Gram matrix singular at X=({X[0]:.6g}, {X[1]:.6g}) (condition {cond:.3e})"
        )
    P = np.zeros(m)
    P[0] = 1.0
    ups = np.linalg.solve(G, P)
    return W * (A.T @ ups)


def _mls_rows(X, g, comp, cfg):
    """Sparse rows of MLS generating functions over target nodes."""
    shape = _target_shape(g, comp)
    R = cfg.radius * g.h
    reach = int(math.ceil(cfg.radius)) + 1
    rows, cols, vals = [], [], []
    axes = [_axis_nodes(g, comp, a) for a in (0, 1)]
    for k, Xk in enumerate(X):
        idx, pos = [], []
        for axis, (shift, count, periodic, unique) in enumerate(axes):
            h = g.dx if axis == 0 else g.dy
            t = (Xk[axis] - g.origin[axis]) / h - shift
            i = np.arange(int(np.floor(t)) - reach, int(np.floor(t)) + reach + 2)
            x = g.origin[axis] + (i + shift) * h
            if periodic:
                i = i % unique
            else:
                keep = (i >= 0) & (i < count)
                i, x = i[keep], x[keep]
            idx.append(i)
            pos.append(x)
        IX, IY = np.meshgrid(idx[0], idx[1], indexing="ij")
        PX, PY = np.meshgrid(pos[0], pos[1], indexing="ij")
        pts = np.stack([PX.ravel(), PY.ravel()], axis=1)
        near = np.hypot(pts[:, 0] - Xk[0], pts[:, 1] - Xk[1]) < R
        pts = pts[near]
        flat = (IX.ravel() * shape[1] + IY.ravel())[near]
        mask = None if cfg.heaviside is None else cfg.heaviside(pts[:, 0], pts[:, 1])
        psi = mls_generating_functions(pts, mask, Xk, cfg, g.h)
        nz = psi != 0.0
        rows.append(np.full(nz.sum(), k))
        cols.append(flat[nz])
        vals.append(psi[nz])
    return np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)


# ---------------------------------------------------------------------------
# transfer operators


class Transfer:
    """Interpolation/spreading between markers and one grid.

    ``W[c]`` is the (markers x unique faces) matrix of velocity component
    ``c``; ``W['cell']`` is built on demand for cell-centred fields.
    """

    def __init__(self, kernel, X, g):
        self.kernel = kernel
        self.X = np.atleast_2d(np.asarray(X, dtype=float))
        self.grid = g
        self.W = {}

    def matrix(self, comp):
        W = self.W.get(comp)
        if W is None:
            g, n = self.grid, len(self.X)
            shape = _target_shape(g, comp)
            ncol = shape[0] * shape[1]
            if isinstance(self.kernel, MLSConfig):
                r, c, v = _mls_rows(self.X, g, comp, self.kernel)
            else:
                flat, w = delta_stencil(self.kernel, self.X, g, comp)
                r = np.repeat(np.arange(n), flat.shape[1])
                c, v = flat.ravel(), w.ravel()
            W = sp.csr_matrix((v, (r, c)), shape=(n, ncol))
            W.sum_duplicates()
            self.W[comp] = W
        return W

    def interpolate(self, f):
        g = self.grid
        if isinstance(f, FaceField):
            check_face(f, g)
            out = np.empty((len(self.X), 2))
            for c in (0, 1):
                su = _target_shape(g, c)
                out[:, c] = self.matrix(c) @ f.comp(c)[: su[0], : su[1]].ravel()
            return out
        check_cell(f, g)
        return self.matrix("cell") @ np.asarray(f, float).ravel()

    def spread(self, F, dV):
        """Face field ``sum_i F_i dV_i w(x - X_i) / (dx dy)``."""
        g = self.grid
        F = np.atleast_2d(np.asarray(F, dtype=float))
        q = F * np.asarray(dV, float)[:, None] / (g.dx * g.dy)
        out = g.zeros_face()
        for c in (0, 1):
            su = _target_shape(g, c)
            vals = (self.matrix(c).T @ q[:, c]).reshape(su)
            out.comp(c)[: su[0], : su[1]] = vals
        return sync_periodic(out, g)

    def spread_cell(self, Q, dV):
        g = self.grid
        q = np.asarray(Q, float) * np.asarray(dV, float) / (g.dx * g.dy)
        return (self.matrix("cell").T @ q).reshape(g.nx, g.ny)


def interpolate(f, m, k, g):
    """Values of a face or cell field at the markers of ``m``."""
    return Transfer(k, m.X, g).interpolate(f)


def spread(F, m, k, g):
    """Spread per-marker force densities ``F`` (n, 2) with weights ``m.dV``."""
    return Transfer(k, m.X, g).spread(F, m.dV)


def mls_interpolate(f, m, cfg, g):
    return Transfer(cfg, m.X, g).interpolate(f)


def mls_spread(F, m, cfg, g):
    return Transfer(cfg, m.X, g).spread(F, m.dV)


def levelset_heaviside(signed_distance, side="exterior"):
    """Heaviside mask from a signed-distance callable (negative inside).

    ``'exterior'`` admits points with phi >= 0 (fluid side of the surface),
    ``'interior'`` points with phi <= 0 (body interior, dense-particle mode).
    """
    if side == "exterior":
        return lambda x, y: signed_distance(x, y) >= 0.0
    if side == "interior":
        return lambda x, y: signed_distance(x, y) <= 0.0
    raise ConfigError(f"heaviside side must be 'exterior' or 'interior', got {side!r}")


def kernel_table(kernel, offsets):
    """Rows ``(offset, node, weight)`` of 1D kernel weights for inspection."""
    out = []
    for t in np.atleast_1d(offsets):
        idx, w = _stencil_1d(kernel, np.array([float(t) + 16.0]), 64, False, 64, "x")
        for i, wi in zip(idx[0], w[0]):
            out.append((float(t), int(i) - 16, float(wi)))
    return out
