import numpy as np
import pytest

from layerflow.layers import LayerConfig, State, energy, total_mass, vertical_velocity
from layerflow.mesh import build_dual
from layerflow import casegen


def make_state(mesh, fractions, h):
    lc = LayerConfig(np.asarray(fractions))
    st = State.zeros(mesh, lc)
    st.h[:] = h
    return st


def test_layer_config_invariants():
    with pytest.raises(ValueError):
        LayerConfig([0.5, 0.6])
    with pytest.raises(ValueError):
        LayerConfig([1.0, 0.0])
    lc = LayerConfig([0.2, 0.3, 0.5])
    assert lc.n == 3
    assert lc.cumulative[-1] == pytest.approx(1.0, abs=1e-15)


def test_layer_heights(small_mesh):
    st = make_state(small_mesh, [0.5, 0.5], 2.0)
    hl = st.layer_heights()
    assert np.all(hl == 1.0)
    st2 = make_state(small_mesh, [0.2, 0.3, 0.5], 1.0)
    assert np.allclose(st2.layer_heights()[:, 0], [0.2, 0.3, 0.5], rtol=0)
    st3 = make_state(small_mesh, [0.2, 0.8], 0.0)
    assert np.all(st3.layer_heights() == 0.0)
    # partition property
    h = np.linspace(0.1, 3.0, small_mesh.n_nodes)
    st4 = make_state(small_mesh, [0.1, 0.4, 0.5], 0.0)
    st4.h[:] = h
    assert np.allclose(st4.layer_heights().sum(axis=0), h, rtol=1e-14)


def test_velocities_dry_rule(small_mesh):
    st = make_state(small_mesh, [1.0], 1.0)
    st.qx[0, :] = 2.0
    u, v = st.velocities()
    assert np.allclose(u, 2.0, rtol=0)
    st.h[:] = 1e-12  # below h_dry
    u, v = st.velocities()
    assert np.all(u == 0.0) and np.all(v == 0.0)

    st2 = make_state(small_mesh, [0.25, 0.75], 4.0)
    st2.qx[0, :] = 1.0
    st2.qx[1, :] = 3.0
    u2, _ = st2.velocities()
    assert np.allclose(u2, 1.0, rtol=1e-14)


def test_velocity_roundtrip(small_mesh):
    rng = np.random.default_rng(5)
    st = make_state(small_mesh, [0.3, 0.7], 0.0)
    st.h[:] = rng.uniform(0.1, 4.0, small_mesh.n_nodes)
    u_in = rng.uniform(-3, 3, (2, small_mesh.n_nodes))
    v_in = rng.uniform(-3, 3, (2, small_mesh.n_nodes))
    hl = st.layer_heights()
    st.qx[:] = hl * u_in
    st.qy[:] = hl * v_in
    u, v = st.velocities()
    assert np.allclose(u, u_in, rtol=1e-13)
    assert np.allclose(v, v_in, rtol=1e-13)


def test_interface_elevations(small_mesh):
    st = make_state(small_mesh, [0.25, 0.25, 0.5], 2.0)
    z = st.interface_elevations()
    assert np.allclose(z[0], small_mesh.zb, rtol=0)
    assert np.allclose(z[-1], small_mesh.zb + 2.0, rtol=0)


def test_energy_values(single_triangle):
    g = 9.81
    st = make_state(single_triangle, [1.0], 0.0)
    E, tot = energy(st, g)
    assert np.all(E == 0.0) and tot == 0.0

    st.h[:] = 1.0
    E, _ = energy(st, g)
    assert np.allclose(E, g / 2.0, rtol=1e-14)

    st.qx[0, :] = 3.0  # u = 3
    st.qy[0, :] = 4.0  # v = 4
    E, _ = energy(st, g)
    assert np.allclose(E, 12.5 + 4.905, rtol=1e-13)


def test_energy_rotation_invariance(bumpy_mesh):
    rng = np.random.default_rng(11)
    st = make_state(bumpy_mesh, [0.4, 0.6], 0.0)
    st.h[:] = rng.uniform(0.5, 2.0, bumpy_mesh.n_nodes)
    hl = st.layer_heights()
    u = rng.uniform(-2, 2, hl.shape)
    v = rng.uniform(-2, 2, hl.shape)
    st.qx[:] = hl * u
    st.qy[:] = hl * v
    _, e1 = energy(st)
    th = 0.83
    st.qx[:] = hl * (np.cos(th) * u - np.sin(th) * v)
    st.qy[:] = hl * (np.sin(th) * u + np.cos(th) * v)
    _, e2 = energy(st)
    assert e2 == pytest.approx(e1, rel=1e-13)


def test_total_mass(small_mesh):
    st = make_state(small_mesh, [1.0], 1.0)
    assert total_mass(st) == pytest.approx(np.sum(small_mesh.area), rel=1e-14)
    st.h[:] = 0.0
    assert total_mass(st) == 0.0
    st.h[0] = 2.0
    assert total_mass(st) == pytest.approx(2.0 * small_mesh.area[0], rel=1e-14)


def test_vertical_velocity_uniform_flow_flat_bed(small_mesh):
    st = make_state(small_mesh, [0.5, 0.5], 1.5)
    hl = st.layer_heights()
    st.qx[:] = hl * 1.2
    st.qy[:] = hl * -0.4
    w = vertical_velocity(st)
    assert np.all(np.abs(w) < 1e-11)


def test_vertical_velocity_linear_shear():
    # N=1, zb=0, u = a*x: w_1 = -(h/2) a on interior cells
    tri = casegen.rectangle_mesh(0.0, 1.0, 0.0, 1.0, 17, 17, jitter=0.0, seed=0)
    mesh = build_dual(tri)
    a = 0.7
    st = make_state(mesh, [1.0], 2.0)
    st.qx[0] = st.h * a * mesh.xy[:, 0]
    w = vertical_velocity(st)
    interior = np.setdiff1d(np.arange(mesh.n_nodes), mesh.bnd_nodes)
    assert np.allclose(w[0, interior], -(2.0 / 2.0) * a, rtol=1e-6)


def test_vertical_velocity_sloped_bed_uniform_u():
    # N=1, u = U const, zb = b*x: w_1 = U*b (k_1 term only)
    tri = casegen.rectangle_mesh(0.0, 1.0, 0.0, 1.0, 17, 17, jitter=0.0, seed=0,
                                 zb_fn=lambda x, y: 0.3 * x)
    mesh = build_dual(tri)
    st = make_state(mesh, [1.0], 1.0)
    U = 1.1
    st.qx[0] = st.h * U
    w = vertical_velocity(st)
    interior = np.setdiff1d(np.arange(mesh.n_nodes), mesh.bnd_nodes)
    assert np.allclose(w[0, interior], U * 0.3, rtol=1e-6)
