import numpy as np
import pytest

from ibfsi.body import Body, Shape
from ibfsi.errors import ConfigError
from ibfsi.grid import BC, GridSpec, divergence
from ibfsi.implicit_dlm import assemble_stokes_dlm, solve_dlm, statistics_row
from ibfsi.kernels import DeltaKernel
from ibfsi.ns_solver import FluidConfig, FluidState, step


def ring(R, h, omega=0.0):
    n = int(np.floor(2 * np.pi * R / h))
    b = Body.from_shape(Shape.disc(R), 2 * np.pi * R / n, "surface")
    b.state.omega = omega
    return b


def test_lid_driven_cavity_matches_the_time_stepper_at_steady_state():
    # a slow lid keeps the time-stepped flow creeping (Re = 1e-3)
    lid = 1e-3
    g = GridSpec.box(16, 16, 1.0, top=BC("wall", (lid, 0.0)))
    sol = solve_dlm(assemble_stokes_dlm(g, 1.0, []))
    st = FluidState.zeros(g, FluidConfig(rho=1.0, mu=1.0))
    for _ in range(300):
        step(st, 0.02)
    assert (st.u - sol.u).max_abs() < 1e-4 * lid
    assert np.abs(divergence(sol.u, g)).max() < 1e-10


def test_free_body_without_forcing_is_the_null_solution():
    g = GridSpec.box(24, 24, 2.0, origin=(-1, -1))
    b = ring(0.4, g.h)
    sol = solve_dlm(assemble_stokes_dlm(g, 1.0, [b], mode="free"))
    assert sol.u.max_abs() < 1e-12 and np.abs(sol.lam[0]).max() < 1e-10
    assert np.abs(sol.U[0]).max() < 1e-12 and abs(sol.omega[0]) < 1e-12


def test_annulus_markers_have_no_slip():
    g = GridSpec.box(32, 32, 2.0, origin=(-1, -1))
    bodies = [ring(0.25, g.h, 1.0), ring(0.75, g.h)]
    system = assemble_stokes_dlm(g, 1.0, bodies, kernel=DeltaKernel("linear2"))
    sol = solve_dlm(system)
    assert max(sol.slip(system)) < 1e-9
    row = statistics_row(sol)
    assert row["residual"] < 1e-10 and row["size"] == system.A.shape[0]


def test_dense_markers_are_rejected():
    g = GridSpec.box(24, 24, 2.0, origin=(-1, -1))
    b = Body.from_shape(Shape.disc(0.4), 0.3 * g.h, "surface")
    with pytest.raises(ConfigError):
        assemble_stokes_dlm(g, 1.0, [b])


def test_guards():
    g = GridSpec.box(24, 24, 2.0, origin=(-1, -1))
    with pytest.raises(ConfigError):
        assemble_stokes_dlm(g, 1.0, [], max_cells=100)
    with pytest.raises(ConfigError):
        assemble_stokes_dlm(g, 0.0, [])
    with pytest.raises(ConfigError):
        assemble_stokes_dlm(g, 1.0, [], mode="floating")
