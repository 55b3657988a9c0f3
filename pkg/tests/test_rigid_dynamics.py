import numpy as np
import pytest

from ibfsi.body import RigidState, Shape, level_set
from ibfsi.coupling import LambdaField
from ibfsi.errors import ConfigError
from ibfsi.grid import GridSpec
from ibfsi.ns_solver import sample_face_field
from ibfsi.rigid_dynamics import (
    MomentumSample,
    control_surface_force,
    jump_values,
    lifted_surface_sample,
    moving_average,
    net_force_torque,
    update_free_body,
)


def lam_field(values, dV, arms):
    return LambdaField(np.asarray(values, float), np.asarray(dV, float), np.asarray(arms, float))


def test_steady_momentum_gives_minus_the_multiplier():
    lam = lam_field([[1.0, 2.0], [3.0, -1.0]], [0.1, 0.2], [[0.0, 1.0], [1.0, 0.0]])
    hist = [MomentumSample(0.0, np.array([0.5, 0.5]), 0.2), MomentumSample(0.1, np.array([0.5, 0.5]), 0.2)]
    F, T = net_force_torque(lam, hist)
    np.testing.assert_allclose(F, -lam.total())
    assert T == pytest.approx(-lam.torque())


def test_accelerating_interior_gives_mass_times_acceleration():
    rho, V, a = 1.2, 0.3, np.array([0.4, -2.0])
    lam = lam_field(np.zeros((1, 2)), [1.0], [[0.0, 0.0]])
    hist = [MomentumSample(t, rho * V * a * t, 0.0) for t in (0.5, 0.6)]
    F, _ = net_force_torque(lam, hist)
    np.testing.assert_allclose(F, rho * V * a, rtol=1e-12)


def test_net_force_needs_history():
    lam = lam_field(np.zeros((1, 2)), [1.0], [[0.0, 0.0]])
    with pytest.raises(ConfigError):
        net_force_torque(lam, [MomentumSample(0.0, np.zeros(2), 0.0)])


def test_free_body_updates():
    b = RigidState([0.0, 0.0], U=(0.1, 0.2), omega=0.3, M=2.0, I=0.5, rho_s=2.0)
    out, _ = update_free_body(b, (0.0, 0.0), 0.0, dt=0.1, rho_f=2.0)
    np.testing.assert_array_equal(out.U, b.U)
    assert out.omega == b.omega
    g = np.array([0.0, -9.81])
    out, _ = update_free_body(b, (0.0, 0.0), 0.0, gravity=g, dt=0.1, rho_f=1.0)
    np.testing.assert_allclose((out.U - b.U) / 0.1, (1 - 1.0 / 2.0) * g)


@pytest.mark.parametrize("ab2,expected_order", [(False, 1), (True, 2)])
def test_sinusoidal_force_history_is_integrated(ab2, expected_order):
    errs = []
    for n in (100, 200):
        b = RigidState([0.0, 0.0], M=1.0, I=1.0, rho_s=1.0)
        dt = 1.0 / n
        prev = None
        for k in range(n):
            b, rates = update_free_body(b, (np.cos(k * dt), 0.0), 0.0, dt=dt, rho_f=0.5, previous=prev)
            prev = rates if ab2 else None
        errs.append(abs(b.U[0] - np.sin(1.0)))
    assert np.log2(errs[0] / errs[1]) == pytest.approx(expected_order, abs=0.25)


def test_moving_average():
    x = np.arange(7.0)
    np.testing.assert_allclose(moving_average(x, 3), x)
    y = np.array([0.0, 3.0, 0.0, 3.0, 0.0])
    np.testing.assert_allclose(moving_average(y, 3), [0.0, 1.0, 2.0, 1.0, 0.0])
    with pytest.raises(ConfigError):
        moving_average(x, 4)


def test_jump_trivial_cases():
    n = np.array([np.cos(0.3), np.sin(0.3)])
    t = np.array([-n[1], n[0]])
    p, J = jump_values(2.5 * n, n, t, 0.7)
    assert p == pytest.approx(2.5) and np.abs(J).max() < 1e-15
    p, J = jump_values(1.5 * t, n, t, 0.5)
    assert abs(p) < 1e-15
    assert t @ J @ n == pytest.approx(-1.5 / 0.5)
    with pytest.raises(ConfigError):
        jump_values(t, n, n, 1.0)


def test_control_surface_force_vanishes_for_uniform_flow():
    g = GridSpec.box(20, 20, 2.0, origin=(-1, -1), bc="periodic")
    u = sample_face_field(lambda x, y, t: (1.0 + 0 * x, 0.5 + 0 * y), g)
    F = control_surface_force(u, np.full((20, 20), 3.0), g, 0.1, 1.0, (-0.5, 0.5, -0.5, 0.5))
    assert np.abs(F).max() < 1e-12
    with pytest.raises(ConfigError):
        control_surface_force(u, g.zeros_cell(), g, 0.1, 1.0, (-2.0, 0.5, -0.5, 0.5))


def test_control_surface_pressure_gradient():
    # p = -x gives a net force (box area) in +x on the box contents
    g = GridSpec.box(40, 40, 2.0, origin=(-1, -1), bc="periodic")
    x, _ = g.cell_centers()
    F = control_surface_force(g.zeros_face(), -x, g, 0.0, 1.0, (-0.5, 0.5, -0.25, 0.25))
    np.testing.assert_allclose(F, [0.5, 0.0], atol=1e-12)


def test_lifted_surface_samples_sit_on_the_offset_contour():
    g = GridSpec.box(64, 64, 2.0, origin=(-1, -1))
    ls = level_set(Shape.disc(0.4), g)
    pts, vals = lifted_surface_sample(ls.phi, ls, g, offset=2.0, nsamples=64)
    r = np.hypot(pts[:, 0], pts[:, 1])
    assert np.abs(r - (0.4 + 2 * g.h)).max() < 0.1 * g.h
    assert np.abs(vals - 2 * g.h).max() < 0.1 * g.h
    with pytest.raises(ConfigError):
        lifted_surface_sample(ls.phi, ls, g, offset=-1.0)
