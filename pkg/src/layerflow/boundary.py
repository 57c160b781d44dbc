"""Ghost states and boundary fluxes.

Every boundary flux is assembled as F+(interior) + F-(ghost) with the
same splitting the interior scheme uses, a flat bed across the boundary
(zb_ghost = zb_interior), and first-order interior values even in
second-order runs.

The under-determined fluvial cases close the ghost state with the
Riemann invariant carried along the outgoing characteristic (speed
u.n + c for the outward normal n), u.n + 2 sqrt(g h); prescribing a
flux then reduces to one scalar equation per layer in
m = u_e.n / sqrt(g h_e), solved with a safeguarded Newton iteration on

    m + 2 - (a2 / K) phi(m)^(1/3) = 0,     K = (sqrt(2) g a1)^(1/3),

where phi is the incoming-flux shape integral

    phi(m) = (1/pi) int_{z <= -sqrt(2) m} (sqrt(2) m + z) sqrt(1 - z^2/4) dz,

evaluated in closed form (phi = 0 for m >= sqrt(2), phi = sqrt(2) m for
m <= -sqrt(2)). Cube roots are real and signed: a1 < 0 makes both K and
phi^(1/3) negative, a2 > 0 in the fluvial regime, and the ghost inflow
capacity grows without bound as m approaches -2, so the scalar problem
has exactly one root.

Per-layer scaling: the layer flux is l_alpha times the single-layer
closed forms, so the scalar problems run on the prescribed layer flux
divided by l_alpha; each layer computes its own ghost depth h_e, used
only to realize the prescribed flux.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import kinetic

log = logging.getLogger(__name__)

SQRT2 = np.sqrt(2.0)
NEWTON_TOL = 1e-10
NEWTON_MAXIT = 50


class NewtonError(RuntimeError):
    """Raised when a boundary Newton solve fails to converge."""

    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual


def phi(m):
    """Closed-form incoming-flux shape integral; nonpositive, zero for
    m >= sqrt(2), linear sqrt(2)*m below m = -sqrt(2)."""
    m = np.asarray(m, dtype=float)
    mm = np.clip(m, -SQRT2, SQRT2)
    s = np.sqrt(np.maximum(1.0 - 0.5 * mm * mm, 0.0))
    zu = np.clip(-SQRT2 * mm, -2.0, 2.0)  # upper integration limit
    anti = (-(4.0 / 3.0) * s ** 3
            + SQRT2 * mm * (0.5 * zu * s + np.arcsin(0.5 * zu))
            + SQRT2 * mm * 0.5 * np.pi)
    out = anti / np.pi
    out = np.where(m >= SQRT2, 0.0, out)
    out = np.where(m <= -SQRT2, SQRT2 * m, out)
    return out


def phi_prime(m):
    """d phi / dm = sqrt(2)/pi * int_{z <= -sqrt(2) m} sqrt(1 - z^2/4) dz."""
    m = np.asarray(m, dtype=float)
    mm = np.clip(m, -SQRT2, SQRT2)
    s = np.sqrt(np.maximum(1.0 - 0.5 * mm * mm, 0.0))
    zu = np.clip(-SQRT2 * mm, -2.0, 2.0)
    val = (SQRT2 / np.pi) * (0.5 * zu * s + np.arcsin(0.5 * zu) + 0.5 * np.pi)
    val = np.where(m >= SQRT2, 0.0, val)
    val = np.where(m <= -SQRT2, SQRT2, val)
    return val


def _cbrt(x):
    return np.cbrt(x)


def _build_boundary_jit():
    """Compiled scalar kernels for the per-step boundary path; the numpy
    implementations below stay as the tested reference (identical
    algorithms and tolerances)."""
    try:
        from numba import njit
    except ImportError:  # pragma: no cover
        return None

    @njit(cache=True, fastmath=False)
    def phi_s(m):
        if m >= SQRT2:
            return 0.0
        if m <= -SQRT2:
            return SQRT2 * m
        s = np.sqrt(max(1.0 - 0.5 * m * m, 0.0))
        zu = -SQRT2 * m
        if zu > 2.0:
            zu = 2.0
        elif zu < -2.0:
            zu = -2.0
        anti = (-(4.0 / 3.0) * s ** 3
                + SQRT2 * m * (0.5 * zu * s + np.arcsin(0.5 * zu))
                + SQRT2 * m * 0.5 * np.pi)
        return anti / np.pi

    @njit(cache=True, fastmath=False)
    def phi_prime_s(m):
        if m >= SQRT2:
            return 0.0
        if m <= -SQRT2:
            return SQRT2
        s = np.sqrt(max(1.0 - 0.5 * m * m, 0.0))
        zu = -SQRT2 * m
        if zu > 2.0:
            zu = 2.0
        elif zu < -2.0:
            zu = -2.0
        return (SQRT2 / np.pi) * (0.5 * zu * s + np.arcsin(0.5 * zu) + 0.5 * np.pi)

    @njit(cache=True, fastmath=False)
    def flux_invariant(a1, a2, m0, g, tol, maxit, out):
        B = a1.size
        fail = 0.0
        for k in range(B):
            K = np.cbrt(SQRT2 * g * a1[k])
            ratio = a2[k] / K
            rhs = SQRT2 * g * a1[k] / (a2[k] ** 3)
            lo = -2.0 + 1e-14
            hi = SQRT2
            m = m0[k]
            if m < -2.0 + 1e-9:
                m = -2.0 + 1e-9
            elif m > SQRT2 - 1e-9:
                m = SQRT2 - 1e-9
            r = m + 2.0 - ratio * np.cbrt(phi_s(m))
            it = 0
            while abs(r) > tol and it < maxit:
                gval = phi_s(m) - rhs * (m + 2.0) ** 3
                if gval > 0.0:
                    hi = m
                else:
                    lo = m
                gp = phi_prime_s(m) - 3.0 * rhs * (m + 2.0) ** 2
                if gp > 1e-300:
                    newton = m - gval / gp
                else:
                    newton = 0.5 * (lo + hi)
                if newton > lo and newton < hi:
                    m = newton
                else:
                    m = 0.5 * (lo + hi)
                r = m + 2.0 - ratio * np.cbrt(phi_s(m))
                it += 1
            if abs(r) > fail:
                fail = abs(r)
            sq = a2[k] / (m + 2.0)
            out[0, k] = m
            out[1, k] = sq * sq / g
            out[2, k] = a2[k] * m / (m + 2.0)
        return fail

    @njit(cache=True, fastmath=False)
    def torrential(a1, h_g, g, tol, maxit, out):
        B = a1.size
        fail = 0.0
        for k in range(B):
            rhs = np.sqrt(2.0 / g) * a1[k] / h_g[k] ** 1.5
            lo = min(rhs / SQRT2, 0.0) - 1.0
            hi = SQRT2
            m = 0.0
            r = phi_s(m) - rhs
            it = 0
            while abs(r) > tol and it < maxit:
                if r > 0.0:
                    hi = m
                else:
                    lo = m
                dp = phi_prime_s(m)
                if dp > 1e-14:
                    newton = m - r / dp
                else:
                    newton = 0.5 * (lo + hi)
                if newton > lo and newton < hi:
                    m = newton
                else:
                    m = 0.5 * (lo + hi)
                r = phi_s(m) - rhs
                it += 1
            if abs(r) > fail:
                fail = abs(r)
            out[k] = m
        return fail

    @njit(cache=True, fastmath=False)
    def split_pair(h_i, u_i, v_i, h_e, u_e, v_e, nx, ny, l, g, out):
        """out[0..2, a, k] = l_a * (F+(interior) + F-(ghost))."""
        N, B = u_i.shape
        inv_pi = 1.0 / np.pi
        for k in range(B):
            nxe = nx[k]
            nye = ny[k]
            hi = h_i[k]
            c2i = 0.5 * g * hi
            ci = np.sqrt(c2i)
            for a in range(N):
                fph = 0.0
                fpu = 0.0
                fpv = 0.0
                if hi > 0.0:
                    ui = u_i[a, k]
                    vi = v_i[a, k]
                    ut = ui * nxe + vi * nye
                    w = ut / ci
                    if w >= 2.0:
                        fph = hi * ut
                        fpu = hi * ui * ut + c2i * hi * nxe
                        fpv = hi * vi * ut + c2i * hi * nye
                    elif w > -2.0:
                        asn = np.arcsin(0.5 * w)
                        chi = inv_pi * np.sqrt(1.0 - 0.25 * w * w)
                        fph = inv_pi * hi * ut * asn + 0.5 * hi * ut \
                            + (hi / ci) * (ut * ut / 6.0 + (4.0 / 3.0) * c2i) * chi
                        fpu = inv_pi * hi * (c2i * nxe + ui * ut) * asn + 0.5 * hi * (c2i * nxe + ui * ut) \
                            + (hi / (12.0 * ci)) * (2.0 * ui * ut * ut - nxe * ut ** 3
                                                    + 16.0 * c2i * ui + 10.0 * c2i * ut * nxe) * chi
                        fpv = inv_pi * hi * (c2i * nye + vi * ut) * asn + 0.5 * hi * (c2i * nye + vi * ut) \
                            + (hi / (12.0 * ci)) * (2.0 * vi * ut * ut - nye * ut ** 3
                                                    + 16.0 * c2i * vi + 10.0 * c2i * ut * nye) * chi
                fmh = 0.0
                fmu = 0.0
                fmv = 0.0
                he = h_e[a, k]
                if he > 0.0:
                    ue = u_e[a, k]
                    ve = v_e[a, k]
                    c2e = 0.5 * g * he
                    ce = np.sqrt(c2e)
                    ute = ue * nxe + ve * nye
                    c2h = c2e * he
                    th = he * ute
                    thu = he * ue * ute + c2h * nxe
                    thv = he * ve * ute + c2h * nye
                    w = ute / ce
                    if w >= 2.0:
                        gph = he * ute
                        gpu = he * ue * ute + c2e * he * nxe
                        gpv = he * ve * ute + c2e * he * nye
                    elif w <= -2.0:
                        gph = 0.0
                        gpu = 0.0
                        gpv = 0.0
                    else:
                        asn = np.arcsin(0.5 * w)
                        chi = inv_pi * np.sqrt(1.0 - 0.25 * w * w)
                        gph = inv_pi * he * ute * asn + 0.5 * he * ute \
                            + (he / ce) * (ute * ute / 6.0 + (4.0 / 3.0) * c2e) * chi
                        gpu = inv_pi * he * (c2e * nxe + ue * ute) * asn + 0.5 * he * (c2e * nxe + ue * ute) \
                            + (he / (12.0 * ce)) * (2.0 * ue * ute * ute - nxe * ute ** 3
                                                    + 16.0 * c2e * ue + 10.0 * c2e * ute * nxe) * chi
                        gpv = inv_pi * he * (c2e * nye + ve * ute) * asn + 0.5 * he * (c2e * nye + ve * ute) \
                            + (he / (12.0 * ce)) * (2.0 * ve * ute * ute - nye * ute ** 3
                                                    + 16.0 * c2e * ve + 10.0 * c2e * ute * nye) * chi
                    fmh = th - gph
                    fmu = thu - gpu
                    fmv = thv - gpv
                out[0, a, k] = l[a] * (fph + fmh)
                out[1, a, k] = l[a] * (fpu + fmu)
                out[2, a, k] = l[a] * (fpv + fmv)

    @njit(cache=True, fastmath=False)
    def fplus_mass(h, u, v, nx, ny, g, out):
        N, B = u.shape
        inv_pi = 1.0 / np.pi
        for k in range(B):
            hi = h[k]
            if hi <= 0.0:
                for a in range(N):
                    out[a, k] = 0.0
                continue
            c2 = 0.5 * g * hi
            c = np.sqrt(c2)
            for a in range(N):
                ut = u[a, k] * nx[k] + v[a, k] * ny[k]
                w = ut / c
                if w >= 2.0:
                    out[a, k] = hi * ut
                elif w <= -2.0:
                    out[a, k] = 0.0
                else:
                    asn = np.arcsin(0.5 * w)
                    chi = inv_pi * np.sqrt(1.0 - 0.25 * w * w)
                    out[a, k] = inv_pi * hi * ut * asn + 0.5 * hi * ut \
                        + (hi / c) * (ut * ut / 6.0 + (4.0 / 3.0) * c2) * chi
        return 0

    return {"flux_invariant": flux_invariant, "torrential": torrential,
            "split_pair": split_pair, "fplus_mass": fplus_mass}


_JIT = _build_boundary_jit()


def solve_flux_invariant(a1, a2, g, m0=0.0):
    """Solve the flux-given fluvial ghost problem.

    a1 < 0 is the inflow deficit the ghost must supply through its
    incoming half-flux, a2 = u.n + 2 sqrt(g h) > 0 the Riemann invariant
    carried out of the domain along the outgoing characteristic (n is
    the outward normal). Eliminating h_e through the invariant,
    sqrt(g h_e) (m + 2) = a2 with m = u_e.n / sqrt(g h_e), turns the
    mass condition h_e c_e phi(m) = a1 into the scalar equation

        m + 2 - (a2 / K) phi(m)^(1/3) = 0,   K = (sqrt(2) g a1)^(1/3),

    whose left side is strictly monotone on the physical branch
    m in (-2, sqrt(2)): the supplied inflow |h_e c_e phi| grows without
    bound as m -> -2 and vanishes at m = sqrt(2), so a unique root
    exists for every a1 < 0. Solved by Newton (seeded at m0, the
    interior Froude number) inside a bisection safeguard. Vectorized;
    returns (m, h_e, un_e).
    """
    a1 = np.atleast_1d(np.asarray(a1, dtype=float))
    a2 = np.broadcast_to(np.atleast_1d(np.asarray(a2, dtype=float)), a1.shape).copy()
    if np.any(a1 >= 0.0):
        raise ValueError("solve_flux_invariant expects a1 < 0")
    if np.any(a2 <= 0.0):
        raise ValueError("solve_flux_invariant expects a2 > 0 (fluvial interior)")
    if _JIT is not None:
        out = np.empty((3, a1.size))
        m0a = np.broadcast_to(np.asarray(m0, dtype=float), a1.shape)
        worst = _JIT["flux_invariant"](np.ascontiguousarray(a1), np.ascontiguousarray(a2),
                                       np.ascontiguousarray(m0a), g, NEWTON_TOL, NEWTON_MAXIT, out)
        if worst > NEWTON_TOL:
            raise NewtonError(f"fluvial flux-given Newton did not converge (residual {worst:.3e})", worst)
        return out[0], out[1], out[2]
    K = _cbrt(SQRT2 * g * a1)
    ratio = a2 / K  # negative

    def residual(m):
        return m + 2.0 - ratio * _cbrt(phi(m))

    # polynomial form g(m) = phi(m) - rhs (m+2)^3 shares the root and is
    # monotone increasing; used for the Newton updates
    rhs = SQRT2 * g * a1 / (a2 ** 3)

    lo = np.full_like(a1, -2.0 + 1e-14)
    hi = np.full_like(a1, SQRT2)
    m = np.clip(np.broadcast_to(np.asarray(m0, dtype=float), a1.shape).copy(),
                -2.0 + 1e-9, SQRT2 - 1e-9)
    for _ in range(NEWTON_MAXIT):
        r = residual(m)
        if np.all(np.abs(r) <= NEWTON_TOL):
            break
        gval = phi(m) - rhs * (m + 2.0) ** 3
        hi = np.where(gval > 0.0, m, hi)
        lo = np.where(gval <= 0.0, m, lo)
        gp = phi_prime(m) - 3.0 * rhs * (m + 2.0) ** 2
        newton = m - gval / np.where(gp > 1e-300, gp, 1.0)
        inside = (newton > lo) & (newton < hi)
        m = np.where(inside, newton, 0.5 * (lo + hi))
    r = residual(m)
    if np.any(np.abs(r) > NEWTON_TOL):
        worst = float(np.max(np.abs(r)))
        raise NewtonError(f"fluvial flux-given Newton did not converge (residual {worst:.3e})", worst)
    sq = a2 / (m + 2.0)
    h_e = sq * sq / g
    un_e = a2 * m / (m + 2.0)
    return m, h_e, un_e


def solve_torrential_inflow(a1, h_g, g):
    """Solve phi(m) = sqrt(2/g) a1 / h_g^(3/2) for torrential inflow
    (a1 < 0); phi is monotone, so Newton with a bisection safeguard on
    [rhs/sqrt(2) - 1, sqrt(2)] always lands. Returns m (< sqrt(2))."""
    a1 = np.atleast_1d(np.asarray(a1, dtype=float))
    h_g = np.broadcast_to(np.asarray(h_g, dtype=float), a1.shape)
    if _JIT is not None:
        out = np.empty(a1.size)
        worst = _JIT["torrential"](np.ascontiguousarray(a1), np.ascontiguousarray(h_g),
                                   g, NEWTON_TOL, NEWTON_MAXIT, out)
        if worst > NEWTON_TOL:
            raise NewtonError(f"torrential inflow Newton did not converge (residual {worst:.3e})", worst)
        return out
    rhs = np.sqrt(2.0 / g) * a1 / h_g ** 1.5
    lo = np.minimum(rhs / SQRT2, 0.0) - 1.0
    hi = np.full_like(lo, SQRT2)
    m = np.zeros_like(lo)
    r = phi(m) - rhs
    for _ in range(NEWTON_MAXIT):
        if np.all(np.abs(r) <= NEWTON_TOL):
            break
        hi = np.where(r > 0.0, m, hi)
        lo = np.where(r <= 0.0, m, lo)
        dp = phi_prime(m)
        newton = m - r / np.where(dp > 1e-14, dp, 1e-14)
        inside = (newton > lo) & (newton < hi)
        m = np.where(inside, newton, 0.5 * (lo + hi))
        r = phi(m) - rhs
    if np.any(np.abs(r) > NEWTON_TOL):
        worst = float(np.max(np.abs(r)))
        raise NewtonError(f"torrential inflow Newton did not converge (residual {worst:.3e})", worst)
    return m


# ---------------------------------------------------------------------------
# per-kind ghost builders. Interfaces are array-based: one call handles all
# boundary nodes of one tag for one layer-stack.
# ---------------------------------------------------------------------------

@dataclass
class BoundaryData:
    """Prescribed data for one tagged boundary piece.

    kind: 'wall' | 'fluvial_flux' | 'fluvial_depth' | 'torrential_in' |
          'torrential_out' | 'analytic'.
    h, q: constants, per-layer vectors, or time series ((t, value) pairs,
    linearly interpolated). profile: 'uniform' distributes a total q by
    the layer fractions. case: analytic-case object for kind='analytic'.
    """

    kind: str
    h: object = None
    q: object = None
    profile: str = "uniform"
    case: object = None

    def depth(self, t: float) -> float:
        return _eval_series(self.h, t)

    def flux(self, t: float, l: np.ndarray) -> np.ndarray:
        """Per-layer inflow flux (positive into the domain), shape (N,)."""
        q = _eval_series(self.q, t)
        q = np.atleast_1d(np.asarray(q, dtype=float))
        if q.size == 1 and self.profile == "uniform":
            return l * q[0]
        if q.size != l.size:
            raise ValueError(f"boundary flux needs 1 or {l.size} entries, got {q.size}")
        return q


def _eval_series(v, t: float):
    if v is None:
        raise ValueError("boundary condition is missing prescribed data")
    arr = np.asarray(v, dtype=float)
    if arr.ndim == 2:  # (k, 2) series of (t, value)
        return float(np.interp(t, arr[:, 0], arr[:, 1]))
    return arr if arr.ndim else float(arr)


def wall_flux(h_i, l, nx, ny, g):
    """Per-layer wall flux: zero mass, normal momentum (g/2) l h^2."""
    p = (0.5 * g * h_i) * h_i
    zeros = np.zeros((l.size,) + np.shape(h_i))
    return zeros, l[:, None] * p[None, :] * nx[None, :], l[:, None] * p[None, :] * ny[None, :]


class BoundaryResolver:
    """Computes per-layer boundary fluxes on the boundary half-segments.

    Fluxes are assembled segment-wise: every boundary half-segment
    carries the exact outward normal and tag of its own boundary edge,
    so a corner cell whose two segments carry different conditions (a
    wall meeting an inflow, say) gets each condition on its own segment
    instead of a blended state on an averaged diagonal normal.
    """

    def __init__(self, mesh, specs: dict, g: float, h_dry: float = 1e-8):
        self.mesh = mesh
        self.g = g
        self.h_dry = h_dry
        tags = set(mesh.bseg_tag)
        missing = tags - set(specs)
        if missing:
            raise KeyError(f"no boundary condition for tag(s) {sorted(missing)}")
        tag_arr = np.asarray(mesh.bseg_tag)
        self.groups = []
        for tag in sorted(tags):
            sel = np.nonzero(tag_arr == tag)[0]
            self.groups.append((tag, specs[tag], sel))
        self._warned = set()

    def _warn_once(self, key, msg):
        if key not in self._warned:
            self._warned.add(key)
            log.warning(msg)

    def fluxes(self, state, t: float):
        """Per-layer boundary flux triples on all boundary half-segments.

        Returns (f_h, f_hu, f_hv) with shape (N, S) in the order of
        mesh.bseg_node, oriented outward.
        """
        mesh, g = self.mesh, self.g
        l = state.layers.l
        N = l.size
        S = mesh.bseg_node.size
        out_h = np.zeros((N, S))
        out_hu = np.zeros((N, S))
        out_hv = np.zeros((N, S))
        u, v = state.velocities()
        for tag, data, sel in self.groups:
            nodes = mesh.bseg_node[sel]
            nx = mesh.bseg_normal[sel, 0]
            ny = mesh.bseg_normal[sel, 1]
            h_i = state.h[nodes]
            u_i = u[:, nodes]
            v_i = v[:, nodes]
            if data.kind == "wall":
                fh, fhu, fhv = wall_flux(h_i, l, nx, ny, g)
            elif data.kind == "torrential_out":
                fh, fhu, fhv = kinetic.flux_total(h_i[None, :], u_i, v_i, nx[None, :], ny[None, :], g)
                fh = l[:, None] * fh
                fhu = l[:, None] * fhu
                fhv = l[:, None] * fhv
            else:
                h_e, u_e, v_e = self._ghost(data, t, nodes, nx, ny, h_i, u_i, v_i, l)
                if _JIT is not None:
                    out = np.empty((3, l.size, nodes.size))
                    _JIT["split_pair"](np.ascontiguousarray(h_i), np.ascontiguousarray(u_i),
                                       np.ascontiguousarray(v_i),
                                       np.ascontiguousarray(np.broadcast_to(h_e, u_i.shape)),
                                       np.ascontiguousarray(np.broadcast_to(u_e, u_i.shape)),
                                       np.ascontiguousarray(np.broadcast_to(v_e, u_i.shape)),
                                       np.ascontiguousarray(nx), np.ascontiguousarray(ny),
                                       l, g, out)
                    fh, fhu, fhv = out[0], out[1], out[2]
                else:
                    fp = kinetic.half_flux_plus(h_i[None, :], u_i, v_i, nx[None, :], ny[None, :], g)
                    fm = kinetic.half_flux_minus(h_e, u_e, v_e, nx[None, :], ny[None, :], g)
                    fh = l[:, None] * (fp[0] + fm[0])
                    fhu = l[:, None] * (fp[1] + fm[1])
                    fhv = l[:, None] * (fp[2] + fm[2])
            out_h[:, sel] = fh
            out_hu[:, sel] = fhu
            out_hv[:, sel] = fhv
        return out_h, out_hu, out_hv

    def _fplus_mass(self, h_i, u_i, v_i, nx, ny):
        """Unscaled outgoing mass half-flux per layer, shape (N, B)."""
        if _JIT is not None:
            out = np.empty(u_i.shape)
            _JIT["fplus_mass"](np.ascontiguousarray(h_i), np.ascontiguousarray(u_i),
                               np.ascontiguousarray(v_i), np.ascontiguousarray(nx),
                               np.ascontiguousarray(ny), self.g, out)
            return out
        return kinetic.half_flux_plus(h_i[None, :], u_i, v_i, nx[None, :], ny[None, :], self.g)[0]

    # -- ghost construction ------------------------------------------------

    def _ghost(self, data, t, nodes, nx, ny, h_i, u_i, v_i, l):
        g = self.g
        N = l.size
        B = nodes.size
        if data.kind == "analytic":
            case = data.case
            x = self.mesh.xy[nodes, 0]
            y = self.mesh.xy[nodes, 1]
            h_e = np.broadcast_to(np.atleast_1d(case.depth(t, x, y)), (B,))
            ue, ve = case.layer_velocities(t, x, y, l)
            return np.broadcast_to(h_e, (N, B)), ue, ve

        tx, ty = -ny, nx  # unit tangent
        un_i = u_i * nx[None, :] + v_i * ny[None, :]
        ut_i = u_i * tx[None, :] + v_i * ty[None, :]
        c_i = np.sqrt(g * np.maximum(h_i, 0.0))[None, :]

        if data.kind == "fluvial_depth":
            h_g = float(data.depth(t))
            if h_g < 0.0:
                raise ValueError(f"boundary '{data.kind}': negative prescribed depth {h_g}")
            h_e = np.full((N, B), h_g)
            un_e = un_i + 2.0 * np.sqrt(g) * (np.sqrt(np.maximum(h_i, 0.0))[None, :] - np.sqrt(h_g))
            fluvial = (un_i - c_i) * (un_i + c_i) <= 0.0
            if not np.all(fluvial):
                out_fast = ~fluvial & (un_i > 0.0)
                in_fast = ~fluvial & (un_i <= 0.0)
                if np.any(out_fast):
                    self._warn_once(("hg_out", id(data)),
                                    "depth-given boundary saw torrential outflow; depth cannot be imposed there, "
                                    "falling back to torrential outflow")
                    h_e = np.where(out_fast, h_i[None, :], h_e)
                    un_e = np.where(out_fast, un_i, un_e)
                if np.any(in_fast):
                    self._warn_once(("hg_in", id(data)),
                                    "depth-given boundary saw torrential inflow; prescribing u_e.n = u_i.n")
                    un_e = np.where(in_fast, un_i, un_e)
            with np.errstate(divide="ignore", invalid="ignore"):
                ut_e = np.where(h_e > 0.0, ut_i * h_i[None, :] / np.where(h_e > 0.0, h_e, 1.0), 0.0)
            return h_e, un_e * nx[None, :] + ut_e * tx[None, :], un_e * ny[None, :] + ut_e * ty[None, :]

        if data.kind == "fluvial_flux":
            q_l = data.flux(t, l)  # per layer, positive inflow
            qn = -np.asarray(q_l)[:, None] / l[:, None]  # outward normal flux, layer-rescaled
            a1 = qn - self._fplus_mass(h_i, u_i, v_i, nx, ny)
            fluvial = np.abs(un_i) < c_i
            if not np.all(fluvial):
                self._warn_once(("flux_reg", id(data)),
                                "flux-given boundary saw non-fluvial interior state; continuing with the weak form")
            h_e = np.zeros((N, B))
            un_e = np.zeros((N, B))
            need = a1 < 0.0
            if np.any(need):
                sq = np.sqrt(g * np.maximum(h_i, self.h_dry))[None, :]
                a2 = (un_i + 2.0 * sq)[need]
                m_i = (un_i / sq)[need]  # seed at the interior Froude number
                sonic = a2 <= 1e-12
                if np.any(~sonic):
                    _, he, une = solve_flux_invariant(a1[need][~sonic], a2[~sonic], g,
                                                      m0=m_i[~sonic])
                    tmp_h = np.zeros(a2.shape)
                    tmp_u = np.zeros(a2.shape)
                    tmp_h[~sonic] = he
                    tmp_u[~sonic] = une
                else:
                    tmp_h = np.zeros(a2.shape)
                    tmp_u = np.zeros(a2.shape)
                if np.any(sonic):
                    # supercritical-incoming interior (dry or torrential-in):
                    # the invariant degenerates; supply the deficit at the
                    # sonic point u_e.n = -2 sqrt(g h_e)
                    hs = (np.abs(a1[need][sonic]) / (2.0 * np.sqrt(g))) ** (2.0 / 3.0)
                    tmp_h[sonic] = hs
                    tmp_u[sonic] = -2.0 * np.sqrt(g * hs)
                h_e[need] = tmp_h
                un_e[need] = tmp_u
            # tangential prescribed flux is zero in all supported configs
            return h_e, un_e * nx[None, :], un_e * ny[None, :]

        if data.kind == "torrential_in":
            h_g = float(data.depth(t))
            q_l = data.flux(t, l)
            qn = -np.asarray(q_l)[:, None] / l[:, None]
            a1 = qn - self._fplus_mass(h_i, u_i, v_i, nx, ny)
            h_e = np.full((N, B), h_g)
            un_e = np.zeros((N, B))
            need = a1 < 0.0
            if not np.all(need):
                self._warn_once(("tin", id(data)),
                                "torrential inflow boundary saw a1 >= 0; using a zero-flux ghost there")
                h_e = np.where(need, h_e, 0.0)
            if np.any(need):
                m = solve_torrential_inflow(a1[need], h_g, g)
                un_e[need] = m * np.sqrt(g * h_g)
            return h_e, un_e * nx[None, :], un_e * ny[None, :]

        raise ValueError(f"unknown boundary kind '{data.kind}'")
