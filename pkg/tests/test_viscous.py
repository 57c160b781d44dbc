import numpy as np
import pytest

from layerflow.layers import LayerConfig, State
from layerflow.viscous import RheologyParams, ViscousOperator, gamma_coeff


def make_state(mesh, fractions, h=1.0):
    lc = LayerConfig(np.asarray(fractions))
    st = State.zeros(mesh, lc)
    st.h[:] = h
    return st


def test_gamma_coeff_values():
    assert gamma_coeff(0.01, [0.0, 0.0], 0.5, 0.5) == pytest.approx(2.0 * 0.01, rel=1e-14)
    assert gamma_coeff(0.0, [1.0, 2.0], 0.5, 0.5) == 0.0
    assert gamma_coeff(0.01, [1.0, 0.0], 0.4, 0.6) == pytest.approx(4.0 * 0.01, rel=1e-14)
    assert gamma_coeff(0.01, [0.3, 0.4], 0.0, 0.0) == 0.0  # both layers dry


def test_inactive_rheology_is_identity(small_mesh):
    st = make_state(small_mesh, [0.5, 0.5])
    st.qx[:] = 1.3
    op = ViscousOperator(small_mesh)
    dqx, dqy = op.assemble_update(st, RheologyParams(), dt=0.1)
    assert np.all(dqx == 0.0) and np.all(dqy == 0.0)


def test_uniform_velocity_no_horizontal_diffusion(small_mesh):
    st = make_state(small_mesh, [0.5, 0.5], h=2.0)
    hl = st.layer_heights()
    st.qx[:] = hl * 0.7
    st.qy[:] = hl * -0.3
    params = RheologyParams(nu=1e-3)
    op = ViscousOperator(small_mesh)
    dt = 0.5 * op.stable_dt(st, params)
    dqx, dqy = op.assemble_update(st, params, dt)
    assert np.all(np.abs(dqx) < 1e-14)
    assert np.all(np.abs(dqy) < 1e-14)


def test_friction_decelerates_bottom_layer_only(small_mesh):
    st = make_state(small_mesh, [0.5, 0.5], h=2.0)
    hl = st.layer_heights()
    st.qx[:] = hl * 1.0
    params = RheologyParams(kappa=0.02)
    op = ViscousOperator(small_mesh)
    dt = 0.5 * op.stable_dt(st, params)
    dqx, dqy = op.assemble_update(st, params, dt)
    assert np.allclose(dqx[0], -dt * 0.02 * 1.0, rtol=1e-14)
    assert np.all(dqx[1] == 0.0)
    assert np.all(dqy == 0.0)


def test_friction_dissipates_h_weighted_energy(small_mesh):
    rng = np.random.default_rng(3)
    st = make_state(small_mesh, [1.0], h=0.5)
    st.qx[0] = st.h * rng.uniform(-2, 2, small_mesh.n_nodes)
    params = RheologyParams(kappa=0.05)
    op = ViscousOperator(small_mesh)
    dt = op.stable_dt(st, params)
    u0, _ = st.velocities()
    e0 = np.dot(small_mesh.area, (st.h * u0[0] ** 2))
    dqx, dqy = op.assemble_update(st, params, dt)
    st.qx += dqx
    u1, _ = st.velocities()
    e1 = np.dot(small_mesh.area, (st.h * u1[0] ** 2))
    assert e1 <= e0


def test_wind_total_momentum_input(small_mesh):
    st = make_state(small_mesh, [0.25, 0.75], h=1.0)
    w = 0.003
    ts = (0.6, 0.8)
    params = RheologyParams(wind=w, t_s=ts)
    op = ViscousOperator(small_mesh)
    dt = 0.2
    dqx, dqy = op.assemble_update(st, params, dt)
    assert np.all(dqx[0] == 0.0)  # wind acts on the top layer only
    area = np.sum(small_mesh.area)
    assert np.dot(small_mesh.area, dqx[1]) == pytest.approx(dt * w * ts[0] * area, rel=1e-13)
    assert np.dot(small_mesh.area, dqy[1]) == pytest.approx(dt * w * ts[1] * area, rel=1e-13)


def test_vertical_coupling_conserves_column_momentum(small_mesh):
    rng = np.random.default_rng(9)
    st = make_state(small_mesh, [0.3, 0.3, 0.4], h=1.5)
    hl = st.layer_heights()
    st.qx[:] = hl * rng.uniform(-1, 1, hl.shape)
    st.qy[:] = hl * rng.uniform(-1, 1, hl.shape)
    params = RheologyParams(nu=2e-3)
    op = ViscousOperator(small_mesh)
    dt = 0.5 * op.stable_dt(st, params)
    dqx, dqy = op.assemble_update(st, params, dt)
    # horizontal diffusion conserves area-weighted momentum per layer sum;
    # the vertical coupling cancels per node over the column. Together the
    # column-summed area-weighted increment must vanish.
    assert abs(np.dot(small_mesh.area, dqx.sum(axis=0))) < 1e-13
    assert abs(np.dot(small_mesh.area, dqy.sum(axis=0))) < 1e-13


def test_vertical_coupling_pointwise_cancellation(small_mesh):
    # with spatially uniform but layer-distinct velocities the horizontal
    # stiffness term vanishes and the remaining coupling telescopes to
    # zero per node
    st = make_state(small_mesh, [0.5, 0.5], h=1.0)
    hl = st.layer_heights()
    st.qx[0] = hl[0] * 1.0
    st.qx[1] = hl[1] * -1.0
    params = RheologyParams(nu=1e-3)
    op = ViscousOperator(small_mesh)
    dt = 0.5 * op.stable_dt(st, params)
    dqx, _ = op.assemble_update(st, params, dt)
    assert np.all(np.abs(dqx.sum(axis=0)) < 1e-15)
    assert np.all(dqx[0] < 0.0)  # fast bottom layer decelerates
    assert np.all(dqx[1] > 0.0)  # slow top layer accelerates


def test_stiffness_symmetric_psd_annihilates_constants(small_mesh):
    op = ViscousOperator(small_mesh)
    n = small_mesh.n_nodes
    coeff = np.linspace(0.5, 1.5, n)
    K = np.zeros((n, n))
    eye = np.eye(n)
    for j in range(n):
        K[:, j] = op.apply_stiffness(coeff, eye[:, j])
    assert np.allclose(K, K.T, atol=1e-13)
    assert np.all(np.abs(K.sum(axis=1)) < 1e-12)
    w = np.linalg.eigvalsh(K)
    assert w.min() >= -1e-10


def test_time_step_guard(small_mesh):
    st = make_state(small_mesh, [0.5, 0.5], h=1.0)
    hl = st.layer_heights()
    st.qx[:] = hl * np.linspace(0, 1, small_mesh.n_nodes)
    params = RheologyParams(nu=0.05)
    op = ViscousOperator(small_mesh)
    bound = op.stable_dt(st, params)
    with pytest.raises(ValueError, match="stability bound"):
        op.assemble_update(st, params, dt=2.0 * bound)
