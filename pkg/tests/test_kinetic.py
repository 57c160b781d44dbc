import numpy as np
import pytest

from layerflow import kinetic as K

G = 9.81


def rand_states(n, seed=0, hmin=1e-6):
    rng = np.random.default_rng(seed)
    h = rng.uniform(hmin, 10.0, n)
    u = rng.uniform(-10.0, 10.0, n)
    v = rng.uniform(-10.0, 10.0, n)
    th = rng.uniform(0.0, 2.0 * np.pi, n)
    return h, u, v, np.cos(th), np.sin(th)


def test_chi_marginal():
    assert K.chi_marginal(0.0) == pytest.approx(1.0 / np.pi, rel=1e-14)
    assert K.chi_marginal(2.0) == 0.0
    assert K.chi_marginal(-2.0) == 0.0
    assert K.chi_marginal(3.0) == 0.0
    w = np.linspace(-2.5, 2.5, 7)
    vals = K.chi_marginal(w)
    assert np.all(vals >= 0.0)
    assert np.allclose(vals, K.chi_marginal(-w), rtol=0)
    # unit mass, by quadrature with the regularizing substitution
    t = np.linspace(-np.pi / 2, np.pi / 2, 20001)
    y = 2.0 * np.sin(t)
    integ = np.trapezoid(K.chi_marginal(y) * 2.0 * np.cos(t), t)
    assert integ == pytest.approx(1.0, abs=1e-10)


def test_half_flux_still_water_values():
    c = np.sqrt(G / 2.0)
    fh, fhu, fhv = K.half_flux_plus(1.0, 0.0, 0.0, 1.0, 0.0, G)
    assert fh == pytest.approx(4.0 * c / (3.0 * np.pi), rel=1e-12)   # ~0.94000
    assert fhu == pytest.approx(G / 4.0, rel=1e-14)                  # c^2/2 = 2.4525
    assert fhv == 0.0
    mh, mhu, mhv = K.half_flux_minus(1.0, 0.0, 0.0, 1.0, 0.0, G)
    assert mh == pytest.approx(-4.0 * c / (3.0 * np.pi), rel=1e-12)
    assert mhu == pytest.approx(G / 4.0, rel=1e-12)


def test_half_flux_supercritical_branches():
    # ut <= -2c: no outgoing support
    assert all(float(x) == 0.0 for x in K.half_flux_plus(1.0, -10.0, 0.0, 1.0, 0.0, G))
    # ut >= 2c: full support; mass component is h*ut
    fh, fhu, fhv = K.half_flux_plus(1.0, 10.0, 0.0, 1.0, 0.0, G)
    assert fh == pytest.approx(10.0, rel=1e-14)
    assert fhu == pytest.approx(104.905, rel=1e-12)
    assert fhv == 0.0
    # mirrored for F-
    assert all(float(x) == 0.0 for x in K.half_flux_minus(1.0, 10.0, 0.0, 1.0, 0.0, G))


def test_half_flux_negative_depth_rejected():
    with pytest.raises(ValueError):
        K.half_flux_plus(-0.1, 0.0, 0.0, 1.0, 0.0, G)


def test_closed_forms_match_quadrature():
    h, u, v, nx, ny = rand_states(1000, seed=3)
    worst = 0.0
    for k in range(h.size):
        ft = np.array([float(x) for x in K.flux_total(h[k], u[k], v[k], nx[k], ny[k], G)])
        scale = max(1.0, np.abs(ft).max())
        fp = np.array([float(x) for x in K.half_flux_plus(h[k], u[k], v[k], nx[k], ny[k], G)])
        fq = K.half_flux_quadrature(h[k], u[k], v[k], nx[k], ny[k], G, +1)
        worst = max(worst, np.abs(fp - fq).max() / scale)
        fm = np.array([float(x) for x in K.half_flux_minus(h[k], u[k], v[k], nx[k], ny[k], G)])
        fqm = K.half_flux_quadrature(h[k], u[k], v[k], nx[k], ny[k], G, -1)
        worst = max(worst, np.abs(fm - fqm).max() / scale)
    assert worst <= 1e-8


def test_branch_continuity():
    for h in (0.3, 1.0, 4.7):
        c = np.sqrt(0.5 * G * h)
        for s in (+1.0, -1.0):
            lo = K.half_flux_plus(h, s * 2 * c * (1 - 1e-13), 0.0, 1.0, 0.0, G)
            hi = K.half_flux_plus(h, s * 2 * c * (1 + 1e-13), 0.0, 1.0, 0.0, G)
            for a, b in zip(lo, hi):
                assert abs(float(a) - float(b)) <= 1e-10 * max(1.0, abs(float(a)))


def test_splitting_identity_and_mirror():
    h, u, v, nx, ny = rand_states(300, seed=9)
    fp = K.half_flux_plus(h, u, v, nx, ny, G)
    fm = K.half_flux_minus(h, u, v, nx, ny, G)
    ft = K.flux_total(h, u, v, nx, ny, G)
    for a, b, c in zip(fp, fm, ft):
        assert np.allclose(a + b, c, rtol=0, atol=1e-12 * np.maximum(1.0, np.abs(c)))
    # mirror identity F-(U, n) = -F+(U, -n), same state
    fp_m = K.half_flux_plus(h, u, v, -nx, -ny, G)
    for a, b in zip(fm, fp_m):
        assert np.allclose(a, -b, rtol=0, atol=1e-11 * np.maximum(1.0, np.abs(a)))


def test_rotation_equivariance():
    rng = np.random.default_rng(4)
    for _ in range(50):
        h = rng.uniform(0.1, 5.0)
        u, v = rng.uniform(-6, 6, 2)
        tn = rng.uniform(0, 2 * np.pi)
        nx, ny = np.cos(tn), np.sin(tn)
        al = rng.uniform(0, 2 * np.pi)
        ca, sa = np.cos(al), np.sin(al)
        f0 = [float(x) for x in K.half_flux_plus(h, u, v, nx, ny, G)]
        f1 = [float(x) for x in K.half_flux_plus(h, ca * u - sa * v, sa * u + ca * v,
                                                 ca * nx - sa * ny, sa * nx + ca * ny, G)]
        assert f1[0] == pytest.approx(f0[0], abs=1e-12 * max(1.0, abs(f0[0])))
        assert f1[1] == pytest.approx(ca * f0[1] - sa * f0[2], abs=1e-12 * max(1.0, abs(f0[1]) + abs(f0[2])))
        assert f1[2] == pytest.approx(sa * f0[1] + ca * f0[2], abs=1e-12 * max(1.0, abs(f0[1]) + abs(f0[2])))


def test_galilean_mass_component():
    h, u, v, nx, ny = rand_states(200, seed=12)
    ft = K.flux_total(h, u, v, nx, ny, G)
    assert np.array_equal(ft[0], h * (u * nx + v * ny))


def test_hr_states():
    # equal beds
    zs, hij, hji = K.hr_states(2.0, 1.5, 0.3, 0.3)
    assert zs == 0.3
    assert hij == pytest.approx(2.0, rel=1e-15)
    assert hji == pytest.approx(1.5, rel=1e-15)
    # lake at rest across a step
    zs, hij, hji = K.hr_states(2.0, 1.0, 0.0, 1.0)
    assert (zs, hij, hji) == (1.0, 1.0, 1.0)
    # dry uphill
    zs, hij, hji = K.hr_states(0.5, 0.0, 0.0, 1.0)
    assert hij == 0.0 and hji == 0.0


def test_maxwellian_moments_identities():
    rng = np.random.default_rng(7)
    for _ in range(25):
        h = rng.uniform(0.05, 8.0)
        u, v = rng.uniform(-5, 5, 2)
        l = rng.uniform(0.1, 1.0)
        m = K.maxwellian_moments(h, u, v, G, l_alpha=l)
        ha = l * h
        exp = np.array([ha, ha * u, ha * v,
                        ha * u * u + 0.5 * G * ha * h, ha * u * v, ha * v * v + 0.5 * G * ha * h])
        assert np.all(np.abs(m - exp) <= 1e-10 * np.maximum(1.0, np.abs(exp)))
    assert np.all(K.maxwellian_moments(0.0, 3.0, -2.0, G) == 0.0)


def test_hr_moment_identities_quadrature():
    rng = np.random.default_rng(15)
    for _ in range(20):
        h_i = rng.uniform(0.2, 4.0)
        h_s = rng.uniform(0.0, 1.0) * h_i  # reconstructed depth <= h_i
        u, v = rng.uniform(-4, 4, 2)
        th = rng.uniform(0, 2 * np.pi)
        nx, ny = np.cos(th), np.sin(th)
        l = rng.uniform(0.2, 1.0)
        m0, m1x, m1y = K.hr_moment_identities(h_i, u, v, h_s, nx, ny, G, l_alpha=l)
        # zeroth moment vanishes; first moments give the pressure
        # correction (g/2) l (h_i^2 - h*^2) n that enters the update with
        # a positive sign
        assert abs(m0) <= 1e-8
        exp = 0.5 * G * l * (h_i ** 2 - h_s ** 2)
        assert m1x == pytest.approx(exp * nx, abs=1e-8 * max(1.0, abs(exp)))
        assert m1y == pytest.approx(exp * ny, abs=1e-8 * max(1.0, abs(exp)))


def test_edge_flux_mass_antisymmetry():
    rng = np.random.default_rng(21)
    E = 64
    l = np.array([0.3, 0.7])
    h_i = rng.uniform(0.0, 3.0, E)
    h_j = rng.uniform(0.0, 3.0, E)
    zb_i = rng.uniform(0.0, 1.0, E)
    zb_j = rng.uniform(0.0, 1.0, E)
    u_i = rng.uniform(-3, 3, (2, E))
    v_i = rng.uniform(-3, 3, (2, E))
    u_j = rng.uniform(-3, 3, (2, E))
    v_j = rng.uniform(-3, 3, (2, E))
    th = rng.uniform(0, 2 * np.pi, E)
    nx, ny = np.cos(th), np.sin(th)
    f = K.edge_flux(h_i, h_j, zb_i, zb_j, u_i, v_i, u_j, v_j, nx, ny, l, G)
    f_rev = K.edge_flux(h_j, h_i, zb_j, zb_i, u_j, v_j, u_i, v_i, -nx, -ny, l, G)
    assert np.allclose(f[0], -f_rev[0], rtol=0, atol=1e-12 * np.maximum(1.0, np.abs(f[0])))


def test_edge_flux_flat_bottom_reduces_to_plain_splitting():
    l = np.array([1.0])
    f = K.edge_flux(np.array([2.0]), np.array([1.0]), np.zeros(1), np.zeros(1),
                    np.array([[0.5]]), np.array([[0.1]]), np.array([[-0.2]]), np.array([[0.3]]),
                    np.array([1.0]), np.array([0.0]), l, G)
    assert np.all(f[3] == 0.0) and np.all(f[4] == 0.0)  # zero pressure corrections
    fp = K.half_flux_plus(2.0, 0.5, 0.1, 1.0, 0.0, G)
    fm = K.half_flux_minus(1.0, -0.2, 0.3, 1.0, 0.0, G)
    assert f[0][0, 0] == pytest.approx(float(fp[0]) + float(fm[0]), rel=1e-14)
    assert f[1][0, 0] == pytest.approx(float(fp[1]) + float(fm[1]), rel=1e-14)
