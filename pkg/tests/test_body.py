import numpy as np
import pytest

from ibfsi.body import (
    Body,
    DeformationKinematics,
    RigidState,
    Shape,
    advance_body,
    discretize,
    level_set,
    no_deformation,
    normalize_deformation,
    omega_cross,
    solid_velocity,
)
from ibfsi.errors import ConfigError, DegenerateError, OutOfSupportError
from ibfsi.grid import GridSpec


def test_disc_surface_and_volume_weights():
    s = Shape.disc(0.5)
    surf = discretize(s, 0.02, "surface")
    vol = discretize(s, 0.02, "volume")
    assert abs(surf.dV.sum() / np.pi - 1) < 0.01
    assert abs(vol.dV.sum() / (np.pi / 4) - 1) < 0.01


def test_ellipse_volume_weights():
    m = discretize(Shape.ellipse(0.3, 0.15), 0.01, "volume")
    assert abs(m.dV.sum() / (np.pi * 0.3 * 0.15) - 1) < 0.01


def test_rigid_velocities():
    m = discretize(Shape.disc(0.5), 0.1, "surface")
    b = RigidState([0.0, 0.0], U=(1.0, 0.0))
    np.testing.assert_array_equal(solid_velocity(b, None, m, 0.0), np.tile([1.0, 0.0], (len(m), 1)))
    assert np.allclose(omega_cross(1.0, np.array([[0.0, 0.5]])), [[-0.5, 0.0]])


def test_deformation_velocity_matches_per_marker_formula():
    m = discretize(Shape.ellipse(0.4, 0.1), 0.02, "volume")
    b = RigidState([0.1, -0.2], theta=0.3, U=(0.2, -0.1), omega=0.7)
    wave = DeformationKinematics(lambda r, t: np.stack([0 * r[:, 0], 0.1 * np.sin(5 * r[:, 0] - t)], 1))
    out = solid_velocity(b, wave, m, 0.4)
    c, s = np.cos(0.3), np.sin(0.3)
    R = np.array([[c, -s], [s, c]])
    for i in (0, len(m) // 2, len(m) - 1):
        arm = R @ m.r[i]
        ud = R @ np.array([0.0, 0.1 * np.sin(5 * m.r[i, 0] - 0.4)])
        ex = b.U + 0.7 * np.array([-arm[1], arm[0]]) + ud
        np.testing.assert_allclose(out[i], ex, atol=1e-14)


def test_normalization():
    m = discretize(Shape.ellipse(0.4, 0.1), 0.02, "volume")
    z = normalize_deformation(no_deformation(), m)
    assert np.all(z(m.r, 0.0) == 0.0)
    uni = normalize_deformation(DeformationKinematics(lambda r, t: np.tile([1.0, 0.0], (len(r), 1))), m)
    assert np.abs(uni(m.r, 0.0)).max() < 1e-14
    wave = normalize_deformation(
        DeformationKinematics(lambda r, t: np.stack([0 * r[:, 0], np.cos(8 * r[:, 0] - 3 * t) * (1 + r[:, 0])], 1)), m)
    u = wave(m.r, 0.37)
    c = m.r - (m.r * m.dV[:, None]).sum(0) / m.dV.sum()
    assert np.abs((u * m.dV[:, None]).sum(0)).max() < 1e-12
    assert abs(np.sum((c[:, 0] * u[:, 1] - c[:, 1] * u[:, 0]) * m.dV)) < 1e-12


def test_normalization_needs_volume_markers():
    with pytest.raises(ConfigError):
        normalize_deformation(no_deformation(), discretize(Shape.disc(0.3), 0.05, "surface"))
    one = discretize(Shape.disc(0.3), 0.05, "volume")
    one.r[:] = 0.0
    with pytest.raises(DegenerateError):
        normalize_deformation(no_deformation(), one)


def test_pose_updates():
    m = discretize(Shape.disc(0.3), 0.05, "surface")
    b = RigidState([0.0, 0.0])
    b2, m2 = advance_body(b, m, 0.1)
    np.testing.assert_array_equal(m2.X, m.X)
    b = RigidState([0.0, 0.0], U=(0.5, -0.25))
    b2, m2 = advance_body(b, m, 0.2)
    np.testing.assert_allclose(m2.X - m.X, np.tile([0.1, -0.05], (len(m), 1)), atol=1e-15)


@pytest.mark.parametrize("scheme,order", [("euler", 1), ("rk2", 2)])
def test_full_revolution_closure(scheme, order):
    """A deformation field that rotates body coordinates returns them to the start."""
    spin = DeformationKinematics(lambda r, t: 2 * np.pi * np.stack([-r[:, 1], r[:, 0]], 1))
    errs = []
    for n in (50, 100):
        m = discretize(Shape.disc(0.3), 0.05, "surface")
        b, mm = RigidState([0.0, 0.0]), m
        for k in range(n):
            b, mm = advance_body(b, mm, 1.0 / n, spin, k / n, scheme)
        errs.append(np.abs(mm.r - m.r).max())
    assert np.log2(errs[0] / errs[1]) == pytest.approx(order, abs=0.2)


def test_leaving_the_domain_is_reported():
    g = GridSpec.box(16, 16, 1.0)
    m = discretize(Shape.disc(0.1, (0.5, 0.5)), 0.05, "surface")
    with pytest.raises(OutOfSupportError):
        advance_body(RigidState([0.5, 0.5], U=(4.0, 0.0)), m, 0.1, grid=g, inset=2 * g.h)


def test_signed_distance():
    s = Shape.disc(0.5)
    assert s.signed_distance(1.0, 0.0) == pytest.approx(0.5)
    assert s.signed_distance(0.0, 0.0) == pytest.approx(-0.5)


def test_ellipse_distance_against_dense_sampling():
    e = Shape.ellipse(0.5, 0.2, (0.1, -0.1), 0.4)
    t = np.linspace(0, 2 * np.pi, 400001)
    c, s = np.cos(0.4), np.sin(0.4)
    bx, by = 0.5 * np.cos(t), 0.2 * np.sin(t)
    px, py = 0.1 + c * bx - s * by, -0.1 + s * bx + c * by
    rng = np.random.default_rng(4)
    for x, y in rng.uniform(-0.8, 0.8, (25, 2)):
        d = np.hypot(px - x, py - y).min()
        assert abs(abs(e.signed_distance(x, y)) - d) < 1e-6


def test_level_set_on_grid():
    g = GridSpec.box(20, 20, 2.0, origin=(-1, -1))
    ls = level_set(Shape.disc(0.5), g)
    assert ls.chi().sum() * g.h**2 == pytest.approx(np.pi / 4, rel=0.05)
    smooth = ls.chi(smooth=True)
    assert smooth.min() == 0.0 and smooth.max() == 1.0
    assert np.any((smooth > 0) & (smooth < 1))


def test_invalid_bodies():
    with pytest.raises(ConfigError):
        Shape.disc(-1.0)
    with pytest.raises(ConfigError):
        Shape("blob", {})
    with pytest.raises(ConfigError):
        Body.from_shape(Shape.disc(0.3), 0.05, motion="prescribed")
    with pytest.raises(ConfigError):
        Body.from_shape(Shape.disc(0.3), 0.05, motion="hovering")
