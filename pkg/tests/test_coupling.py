import warnings

import numpy as np
import pytest

from ibfsi.body import Body, DeformationKinematics, Shape, normalize_deformation
from ibfsi.coupling import (
    ConstraintConfig,
    FiberElasticity,
    LambdaField,
    constraint_project,
    direct_forcing_lambda,
    fdm_rigid_solve,
    fiber_forces,
    make_scheme,
    penalty_lambda,
    spread_total,
)
from ibfsi.errors import ConfigError
from ibfsi.grid import BC, GridSpec
from ibfsi.kernels import DeltaKernel, MarkerSet, Transfer
from ibfsi.ns_solver import FluidConfig, FluidState, sample_face_field, step


def disc_body(radius=0.2, spacing=0.04, center=(0.0, 0.0), **kw):
    return Body.from_shape(Shape.disc(radius, center), spacing, "volume", **kw)


def rigid_lstsq(arms, w, dV):
    """Weighted least-squares fit of ``U + omega x r`` to ``w``."""
    n = len(arms)
    A = np.zeros((2 * n, 3))
    A[:n, 0] = 1.0
    A[n:, 1] = 1.0
    A[:n, 2] = -arms[:, 1]
    A[n:, 2] = arms[:, 0]
    s = np.sqrt(np.concatenate([dV, dV]))
    x, *_ = np.linalg.lstsq(A * s[:, None], np.concatenate([w[:, 0], w[:, 1]]) * s, rcond=None)
    return x[:2], x[2]


# ---------------------------------------------------------------------------
# multiplier formulas


def test_fiber_at_rest_has_no_force():
    X = np.stack([np.linspace(0, 1, 6), np.zeros(6)], 1)
    el = FiberElasticity(10.0, np.full(5, 0.2), bend=1.0)
    assert np.abs(fiber_forces(X, False, el)).max() < 1e-13


def test_stretched_link_obeys_hooke():
    X = np.array([[0.0, 0.0], [1.3, 0.0]])
    F = fiber_forces(X, False, FiberElasticity(4.0, np.array([1.0])))
    np.testing.assert_allclose(F, [[1.2, 0.0], [-1.2, 0.0]], atol=1e-14)


def test_closed_ring_forces_cancel():
    rng = np.random.default_rng(6)
    th = np.linspace(0, 2 * np.pi, 24, endpoint=False)
    X = np.stack([np.cos(th), 0.6 * np.sin(th)], 1) + 0.05 * rng.standard_normal((24, 2))
    el = FiberElasticity(7.0, np.full(24, 0.2), bend=0.3, rest_angle=lambda t: np.full(24, 0.1))
    F = fiber_forces(X, True, el)
    assert np.abs(F.sum(0)).max() < 1e-12


def test_rigid_solve_trivial_cases():
    b = disc_body(motion="free")
    arms = b.arms()
    U0 = np.array([0.3, -0.7])
    U, om, lam = fdm_rigid_solve(np.tile(U0, (len(arms), 1)), b, 0.01, 1.0)
    np.testing.assert_allclose(U, U0, atol=1e-13)
    assert abs(om) < 1e-13 and np.abs(lam.values).max() < 1e-9
    w = 1.7 * np.stack([-arms[:, 1], arms[:, 0]], 1)
    U, om, lam = fdm_rigid_solve(w, b, 0.01, 1.0)
    assert np.abs(U).max() < 1e-13 and om == pytest.approx(1.7, abs=1e-12)
    assert np.abs(lam.values).max() < 1e-9


def test_rigid_solve_is_a_least_squares_projection():
    rng = np.random.default_rng(7)
    b = disc_body(motion="free")
    w = rng.standard_normal((len(b.markers), 2))
    U, om, _ = fdm_rigid_solve(w, b, 0.01, 1.0)
    U2, om2 = rigid_lstsq(b.arms(), w, b.markers.dV)
    np.testing.assert_allclose(U, U2, atol=1e-12)
    assert om == pytest.approx(om2, abs=1e-12)


def test_rigid_solve_needs_volume_markers():
    b = Body.from_shape(Shape.disc(0.2), 0.04, "surface", motion="free")
    with pytest.raises(ConfigError):
        fdm_rigid_solve(np.zeros((len(b.markers), 2)), b, 0.01, 1.0)


def test_constraint_projection_identity_and_self_interaction():
    g = GridSpec.box(16, 16, 1.0, bc="periodic")
    u = sample_face_field(lambda x, y, t: (np.sin(x), np.cos(y)), g)
    assert (constraint_project(u, g.zeros_face(), 1.0, 0.1) - u).max_abs() == 0.0
    X = np.array([[0.43, 0.61]])
    T = Transfer(DeltaKernel("peskin4"), X, g)
    lam = np.array([[2.0, -1.0]])
    dV, dt, rho = 0.01, 0.1, 1.3
    du = T.interpolate(constraint_project(g.zeros_face(), T.spread(lam, [dV]), rho, dt))
    for c in (0, 1):
        w2 = T.matrix(c).multiply(T.matrix(c)).sum()
        assert du[0, c] == pytest.approx(dt / rho * lam[0, c] * dV / (g.dx * g.dy) * w2, rel=1e-12)


def test_direct_forcing_lambda():
    us = np.array([[0.2, 0.1]])
    assert np.all(direct_forcing_lambda(us, us, 10.0) == 0.0)
    assert np.all(direct_forcing_lambda(np.zeros((3, 2)), np.zeros((3, 2)), 10.0) == 0.0)
    rho, dt = 1.0, 0.05
    np.testing.assert_allclose(direct_forcing_lambda(np.tile([1.0, 0.0], (3, 1)), np.zeros((3, 2)), rho / dt),
                               np.tile([-rho / dt, 0.0], (3, 1)))


def test_penalty_lambda():
    X = np.array([[0.1, 0.2]])
    assert np.all(penalty_lambda(X, X, X, X, 3.0, 2.0) == 0.0)
    du = np.array([[0.5, -0.25]])
    np.testing.assert_allclose(penalty_lambda(X, X, np.zeros((1, 2)), du, 0.0, 4.0), 4.0 * du)
    with pytest.warns(UserWarning):
        penalty_lambda(X, X, X, X, 0.0, 0.0)


def test_scheme_configuration_is_validated():
    with pytest.raises(ConfigError):
        ConstraintConfig("magic")
    with pytest.raises(ConfigError):
        ConstraintConfig("fdm_fts", "surface")
    with pytest.raises(ConfigError):
        ConstraintConfig("brinkman", kappa=-1.0)
    with pytest.warns(UserWarning):
        ConstraintConfig("penalty", "surface")


# ---------------------------------------------------------------------------
# schemes


def channel():
    return GridSpec.box(48, 24, 2.0, ly=1.0, origin=(-0.5, -0.5), left=BC("inflow", (1.0, 0.0)),
                        right=BC("outflow"), bottom=BC("wall"), top=BC("wall"))


@pytest.mark.parametrize("scheme", ["fdm_fts", "direct_forcing", "brinkman"])
def test_disc_in_quiescent_fluid_stays_at_rest(scheme):
    g = GridSpec.box(24, 24, 2.0, origin=(-1, -1), bc="periodic")
    st = FluidState.zeros(g)
    b = disc_body(0.3, g.h)
    sc = make_scheme(ConstraintConfig(scheme, "volume"))
    for _ in range(3):
        d = step(st, 0.01, [b], sc)
        assert d["bodies"][0]["lam_max"] == 0.0
    assert st.u.max_abs() == 0.0 and np.abs(st.p).max() == 0.0


@pytest.mark.parametrize("scheme", ["fdm_fts", "direct_forcing"])
def test_galilean_disc_generates_no_multiplier(scheme):
    g = GridSpec.box(24, 24, 2.0, origin=(-1, -1), bc="periodic")
    U = np.array([0.8, -0.3])
    st = FluidState(g, sample_face_field(lambda x, y, t: (U[0] + 0 * x, U[1] + 0 * y), g), g.zeros_cell())
    b = disc_body(0.3, g.h, motion="prescribed", kinematics=lambda t: (U, 0.0))
    sc = make_scheme(ConstraintConfig(scheme, "volume"))
    dt = 0.02
    for _ in range(5):
        d = step(st, dt, [b], sc)
        assert d["bodies"][0]["lam_max"] <= 1e-10 * st.cfg.rho * np.linalg.norm(U) / dt


def test_fdm_slip_away_from_the_surface_is_small_at_grid_spacing():
    # markers whose kernel straddles the surface carry the smearing error; the
    # bound applies one kernel half-width inside
    g = channel()
    st = FluidState(g, sample_face_field(lambda x, y, t: (1.0 + 0 * x, 0 * y), g), g.zeros_cell(),
                    FluidConfig(mu=0.05))
    b = disc_body(0.15, g.h)
    sc = make_scheme(ConstraintConfig("fdm_fts", "volume"))
    for _ in range(10):
        step(st, 0.2 * g.h, [b], sc)
    speed = np.linalg.norm(Transfer(DeltaKernel(), b.markers.X, g).interpolate(st.u), axis=1)
    deep = np.linalg.norm(b.markers.r, axis=1) < 0.15 - 2 * g.h
    assert speed[deep].max() < 0.05


def test_penalty_slip_falls_as_damping_grows():
    slips = []
    for c in (2.0, 4.0, 8.0, 16.0, 32.0):
        g = channel()
        st = FluidState(g, sample_face_field(lambda x, y, t: (1.0 + 0 * x, 0 * y), g), g.zeros_cell(),
                        FluidConfig(mu=0.05))
        b = Body.from_shape(Shape.disc(0.15), g.h, "surface")
        sc = make_scheme(ConstraintConfig("penalty", "surface", k=0.0, c=c))
        for _ in range(60):
            d = step(st, 0.005, [b], sc)
        slips.append(d["bodies"][0]["slip"])
    assert all(a > b for a, b in zip(slips, slips[1:]))


def test_free_disc_fdm_moment_identity_without_external_load():
    g = GridSpec.box(32, 32, 2.0, origin=(-1, -1), bc="periodic")
    st = FluidState(g, sample_face_field(lambda x, y, t: (np.sin(np.pi * y), 0.3 * np.cos(np.pi * x)), g),
                    g.zeros_cell(), FluidConfig(mu=0.02))
    b = disc_body(0.25, g.h, motion="free")
    m = b.markers
    b.deformation = normalize_deformation(
        DeformationKinematics(lambda r, t: 0.1 * np.stack([np.sin(5 * r[:, 1] - t), np.cos(4 * r[:, 0])], 1)), m)
    sc = make_scheme(ConstraintConfig("fdm_fts", "volume"))
    for _ in range(3):
        rec = step(st, 0.01, [b], sc)["bodies"][0]
        assert np.linalg.norm(rec["lam_force"]) <= 1e-11 * rec["lam_abs"]
        assert abs(rec["lam_torque"]) <= 1e-11 * rec["lam_abs"]


def test_ibm_fiber_moves_with_the_flow():
    g = GridSpec.box(32, 32, 1.0, bc="periodic")
    st = FluidState(g, sample_face_field(lambda x, y, t: (0.5 + 0 * x, 0 * y), g), g.zeros_cell())
    b = Body.from_shape(Shape.fiber([[-0.2, 0.0], [0.0, 0.0], [0.2, 0.0]], center=(0.5, 0.5)), 0.5 * g.h, "surface",
                        motion="elastic")
    el = FiberElasticity.from_markers(b.markers, 10.0, 0.01)
    sc = make_scheme(ConstraintConfig("ibm_elastic", "surface"), elasticity=el)
    X0 = b.markers.X.copy()
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        for _ in range(4):
            step(st, 0.01, [b], sc)
    np.testing.assert_allclose(b.markers.X - X0, np.tile([0.02, 0.0], (len(X0), 1)), atol=1e-12)


def test_lambda_field_moments():
    lam = LambdaField(np.array([[1.0, 0.0], [0.0, 2.0]]), np.array([0.5, 0.25]), np.array([[0.0, 1.0], [1.0, 0.0]]))
    np.testing.assert_allclose(lam.total(), [0.5, 0.5])
    assert lam.torque() == pytest.approx(-0.5 + 0.5)
    g = GridSpec.box(16, 16, 1.0, bc="periodic")
    T = Transfer(DeltaKernel("peskin4"), np.array([[0.3, 0.6]]), g)
    assert np.allclose(spread_total(T.spread(np.array([[1.0, -2.0]]), [0.1]), g), [0.1, -0.2])


def test_marker_set_validation():
    with pytest.raises(ConfigError):
        MarkerSet([[0.0, 0.0]], [[0.0, 0.0]], [0.0])
