"""Time integration: CFL control, the first-order step pipeline, MUSCL
reconstruction, and the variable-step (modified Heun) second-order scheme.

One Euler step runs, in order:

1. explicit HR kinetic fluxes and pressure corrections over interior
   edges and boundary nodes (second order reconstructs the edge states,
   boundaries stay first order),
2. continuity update h -> h^{n+1} from the summed per-layer mass fluxes,
3. interface exchange rates from the same per-layer mass-flux
   divergences and the implicit tridiagonal momentum-exchange solve with
   the new-time layer depths,
4. explicit viscous / friction / wind increments,
5. dry-cell momentum zeroing and the positivity check.

The second-order time scheme evaluates two Euler stages with their own
CFL steps dt1, dt2 and combines them convexly:

    dt = 2 dt1 dt2 / (dt1 + dt2),  gamma = dt^2 / (2 dt1 dt2) <= 1/2,
    y^{n+1} = (1 - gamma) y^n + gamma y~^{n+2},

which reduces to classical Heun for dt1 = dt2 and preserves positivity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kinetic
from .exchange import exchange_rates, tridiagonal_exchange, thomas_solve
from .layers import State
from .mesh import Mesh, LeastSquaresGradient
from .viscous import RheologyParams, ViscousOperator


class SolverError(RuntimeError):
    """Hard numerical failure (negative depth, singular solve)."""


def _build_step_kernels():
    """Jitted inner loops: limited reconstruction and residual scatter.

    Both run strictly sequentially over fixed mesh orderings, so results
    are bitwise reproducible; the numpy fallbacks implement the same
    operations (used when numba is unavailable, and as the parity
    reference in the tests)."""
    try:
        from numba import njit
    except ImportError:  # pragma: no cover
        return None, None

    @njit(cache=True, fastmath=False)
    def muscl(fields, ls_owner, ls_idx, wx, wy, owner, dmid, frozen, out):
        F, n = fields.shape
        H = owner.size
        grad = np.zeros((F, n, 2))
        fmin = fields.copy()
        fmax = fields.copy()
        for k in range(ls_owner.size):
            o = ls_owner[k]
            j = ls_idx[k]
            for f in range(F):
                df = fields[f, j] - fields[f, o]
                grad[f, o, 0] += wx[k] * df
                grad[f, o, 1] += wy[k] * df
                v = fields[f, j]
                if v < fmin[f, o]:
                    fmin[f, o] = v
                if v > fmax[f, o]:
                    fmax[f, o] = v
        theta = np.ones((F, n))
        d = np.empty((F, H))
        for k in range(H):
            o = owner[k]
            for f in range(F):
                dd = grad[f, o, 0] * dmid[k, 0] + grad[f, o, 1] * dmid[k, 1]
                d[f, k] = dd
                if dd > 0.0:
                    r = (fmax[f, o] - fields[f, o]) / dd
                elif dd < 0.0:
                    r = (fmin[f, o] - fields[f, o]) / dd
                else:
                    r = 2.0
                if r < theta[f, o]:
                    theta[f, o] = r
        for f in range(F):
            for i in range(n):
                if frozen[i]:
                    theta[f, i] = 0.0
                elif theta[f, i] > 1.0:
                    theta[f, i] = 1.0
        for k in range(H):
            o = owner[k]
            for f in range(F):
                out[f, k] = fields[f, o] + theta[f, o] * d[f, k]

    @njit(cache=True, fastmath=False)
    def residuals(ei, ej, L, nx, ny, f_h, f_hu, f_hv, s_i, s_j,
                  cen_i, cen_j, l, r_h, r_qx, r_qy):
        N, E = f_h.shape
        for e in range(E):
            i = ei[e]
            j = ej[e]
            Le = L[e]
            nxe = nx[e]
            nye = ny[e]
            for a in range(N):
                fh = Le * f_h[a, e]
                r_h[a, i] += fh
                r_h[a, j] -= fh
                cl = l[a] * cen_i[e]
                cr = l[a] * cen_j[e]
                r_qx[a, i] += Le * (f_hu[a, e] - s_i[a, e] * nxe) + cl * nxe
                r_qx[a, j] -= Le * (f_hu[a, e] - s_j[a, e] * nxe) + cr * nxe
                r_qy[a, i] += Le * (f_hv[a, e] - s_i[a, e] * nye) + cl * nye
                r_qy[a, j] -= Le * (f_hv[a, e] - s_j[a, e] * nye) + cr * nye

    return muscl, residuals


_muscl_jit, _residuals_jit = _build_step_kernels()


@dataclass
class StepControl:
    """CFL constant (0 < beta < 1/2), step cap, horizon, and space/time order."""

    beta: float = 0.45
    dt_max: float = np.inf
    t_end: float = np.inf
    order: int = 1

    def __post_init__(self):
        if not 0.0 < self.beta < 0.5:
            raise ValueError("CFL constant beta must lie in (0, 1/2)")
        if self.order not in (1, 2):
            raise ValueError("order must be 1 or 2")


def compute_dt(state: State, control: StepControl, g: float, perimeter=None, extra_bound=np.inf) -> float:
    """Largest admissible step: beta * min_i |C_i| / (P_i v_m,i), capped
    by dt_max and any extra (viscous) bound. All-dry states return the cap."""
    mesh = state.mesh
    if perimeter is None:
        perimeter = mesh.perimeter()
    u, v = state.velocities()
    vm = (np.abs(u) + np.abs(v)).max(axis=0) + np.sqrt(2.0 * g * np.maximum(state.h, 0.0))
    live = vm > 0.0
    dt = min(control.dt_max, extra_bound)
    if np.any(live):
        dt = min(dt, control.beta * float(np.min(mesh.area[live] / (perimeter[live] * vm[live]))))
    if not dt > 0.0:
        raise SolverError("nonpositive time step")
    return dt


class Solver:
    """Owns the per-mesh precomputed structures and advances states."""

    def __init__(self, mesh: Mesh, layers, g: float = 9.81, control: StepControl | None = None,
                 rheology: RheologyParams | None = None, boundary=None, h_dry: float = 1e-8):
        self.mesh = mesh
        self.layers = layers
        self.g = g
        self.control = control or StepControl()
        self.rheology = rheology or RheologyParams()
        self.boundary = boundary  # BoundaryResolver or None (all-wall meshes still need one)
        self.h_dry = h_dry

        self.perimeter = mesh.perimeter()
        self._ls = LeastSquaresGradient(mesh)
        self._visc = ViscousOperator(mesh) if self.rheology.active else None

        n = mesh.n_nodes
        N = layers.n
        ei, ej = mesh.edges[:, 0], mesh.edges[:, 1]
        self._flat_i = (np.arange(N)[:, None] * n + ei[None, :]).ravel()
        self._flat_j = (np.arange(N)[:, None] * n + ej[None, :]).ravel()
        if mesh.bseg_node.size:
            self._flat_b = (np.arange(N)[:, None] * n + mesh.bseg_node[None, :]).ravel()
        else:
            self._flat_b = np.zeros(0, dtype=np.int64)
        # half-edge structure for the limiter
        self._owner = np.concatenate([ei, ej])
        self._other = np.concatenate([ej, ei])
        mid = 0.5 * (mesh.xy[ei] + mesh.xy[ej])
        self._dmid = np.concatenate([mid - mesh.xy[ei], mid - mesh.xy[ej]])

    # -- time step ---------------------------------------------------------

    def dt_bound(self, state: State) -> float:
        extra = np.inf
        if self._visc is not None and self.rheology.active:
            extra = self._visc.stable_dt(state, self.rheology)
        return compute_dt(state, self.control, self.g, self.perimeter, extra)

    # -- MUSCL reconstruction ---------------------------------------------

    def muscl_reconstruct(self, state: State):
        """Limited linear edge-midpoint values of (h, h+zb, u_a, v_a).

        Returns (hL, hR, zbL, zbR, uL, uR, vL, vR): depth/bed arrays of
        shape (E,), velocities (N, E). Cells that are nearly dry or touch
        a dry cell fall back to their cell values (first order), which
        keeps the reconstruction positive and the fronts well-balanced.
        """
        mesh = self.mesh
        ei, ej = mesh.edges[:, 0], mesh.edges[:, 1]
        u, v = state.velocities()
        eta = state.zb + state.h
        N = self.layers.n
        fields = np.concatenate([state.h[None, :], eta[None, :], u, v], axis=0)

        dry = state.h <= state.h_dry
        frozen = state.h <= 1e3 * state.h_dry
        near_dry = dry.copy()
        np.logical_or.at(near_dry, ei, dry[ej])
        np.logical_or.at(near_dry, ej, dry[ei])
        frozen = frozen | near_dry

        owner, dmid = self._owner, self._dmid
        recon = np.empty((fields.shape[0], owner.size))
        if _muscl_jit is not None:
            _muscl_jit(np.ascontiguousarray(fields), self._ls.owner, self._ls.idx,
                       self._ls.wx, self._ls.wy, owner, dmid, frozen, recon)
        else:
            self._muscl_numpy(fields, frozen, recon)
        E = mesh.n_edges
        hL = np.maximum(recon[0][:E], 0.0)
        hR = np.maximum(recon[0][E:], 0.0)
        zbL = recon[1][:E] - hL
        zbR = recon[1][E:] - hR
        uL = np.ascontiguousarray(recon[2:2 + N, :E])
        uR = np.ascontiguousarray(recon[2:2 + N, E:])
        vL = np.ascontiguousarray(recon[2 + N:, :E])
        vR = np.ascontiguousarray(recon[2 + N:, E:])
        return hL, hR, zbL, zbR, uL, uR, vL, vR

    def _muscl_numpy(self, fields, frozen, recon):
        """Numpy fallback mirror of the jitted reconstruction kernel."""
        n = self.mesh.n_nodes
        owner, other, dmid = self._owner, self._other, self._dmid
        for fi in range(fields.shape[0]):
            f = fields[fi]
            gcell = self._ls.gradient(f)
            fmin = f.copy()
            fmax = f.copy()
            np.minimum.at(fmin, owner, f[other])
            np.maximum.at(fmax, owner, f[other])
            d = gcell[owner, 0] * dmid[:, 0] + gcell[owner, 1] * dmid[:, 1]
            up = d > 0.0
            dn = d < 0.0
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio = np.where(up, (fmax[owner] - f[owner]) / np.where(up, d, 1.0),
                                 np.where(dn, (fmin[owner] - f[owner]) / np.where(dn, d, 1.0), np.inf))
            theta = np.ones(n)
            np.minimum.at(theta, owner, np.minimum(ratio, 1.0))
            theta[frozen] = 0.0
            recon[fi] = f[owner] + theta[owner] * d

    # -- one explicit step ---------------------------------------------------

    def euler_step(self, state: State, dt: float) -> State:
        """Advance one explicit step of size dt (caller guarantees the CFL)."""
        mesh, g, N = self.mesh, self.g, self.layers.n
        n = mesh.n_nodes
        l = self.layers.l
        ei, ej = mesh.edges[:, 0], mesh.edges[:, 1]
        nx, ny = mesh.edge_normal[:, 0], mesh.edge_normal[:, 1]
        L = mesh.edge_len

        if self.control.order == 2:
            hL, hR, zbL, zbR, uL, uR, vL, vR = self.muscl_reconstruct(state)
        else:
            u, v = state.velocities()
            hL, hR = state.h[ei], state.h[ej]
            zbL, zbR = state.zb[ei], state.zb[ej]
            uL, uR = u[:, ei], u[:, ej]
            vL, vR = v[:, ei], v[:, ej]

        f_h, f_hu, f_hv, s_i, s_j = kinetic.edge_flux(hL, hR, zbL, zbR, uL, vL, uR, vR, nx, ny, l, g)

        if self.control.order == 2:
            # centered within-cell topography source -g l h (zb_edge - zb_cell) n
            cen_i = g * L * (0.5 * (state.h[ei] + hL)) * (zbL - state.zb[ei])
            cen_j = g * L * (0.5 * (state.h[ej] + hR)) * (zbR - state.zb[ej])
        else:
            cen_i = cen_j = np.zeros(mesh.n_edges)

        # per-layer residuals: mass and momentum, accumulated in flux units
        r_h = np.zeros((N, n))
        r_qx = np.zeros((N, n))
        r_qy = np.zeros((N, n))
        if _residuals_jit is not None:
            _residuals_jit(ei, ej, L, nx, ny, f_h, f_hu, f_hv, s_i, s_j,
                           cen_i, cen_j, l, r_h, r_qx, r_qy)
        else:
            Lf = L[None, :]
            for arr, i_w, j_w in (
                (r_h, Lf * f_h, Lf * f_h),
                (r_qx, Lf * (f_hu - s_i * nx[None, :]) + (cen_i * nx)[None, :] * l[:, None],
                 Lf * (f_hu - s_j * nx[None, :]) + (cen_j * nx)[None, :] * l[:, None]),
                (r_qy, Lf * (f_hv - s_i * ny[None, :]) + (cen_i * ny)[None, :] * l[:, None],
                 Lf * (f_hv - s_j * ny[None, :]) + (cen_j * ny)[None, :] * l[:, None]),
            ):
                arr += (np.bincount(self._flat_i, weights=i_w.ravel(), minlength=N * n)
                        - np.bincount(self._flat_j, weights=j_w.ravel(), minlength=N * n)).reshape(N, n)

        if self.boundary is not None and mesh.bseg_node.size:
            b_h, b_hu, b_hv = self.boundary.fluxes(state, state.t)
            Lb = mesh.bseg_len[None, :]
            r_h += np.bincount(self._flat_b, weights=(Lb * b_h).ravel(), minlength=N * n).reshape(N, n)
            r_qx += np.bincount(self._flat_b, weights=(Lb * b_hu).ravel(), minlength=N * n).reshape(N, n)
            r_qy += np.bincount(self._flat_b, weights=(Lb * b_hv).ravel(), minlength=N * n).reshape(N, n)

        inv_area = dt / mesh.area
        h_new = state.h - inv_area * r_h.sum(axis=0)
        neg = h_new < -1e-12 * max(1.0, float(np.max(state.h, initial=0.0)))
        if np.any(neg):
            cell = int(np.argmin(h_new))
            raise SolverError(
                f"negative depth {h_new[cell]:.3e} at cell {cell} (t={state.t:.6g}, dt={dt:.3e}): CFL violation")
        np.maximum(h_new, 0.0, out=h_new)

        qx = state.qx - inv_area[None, :] * r_qx
        qy = state.qy - inv_area[None, :] * r_qy

        # implicit inter-layer momentum exchange with new-time depths
        if N > 1:
            D = r_h / mesh.area[None, :]  # per-layer mass-flux divergence, m/s
            G = exchange_rates(D, l)
            wet = h_new > self.h_dry
            if np.any(wet) and np.any(G[1:-1] != 0.0):
                hl_new = l[:, None] * h_new[None, wet]
                try:
                    bands = tridiagonal_exchange(G[:, wet], hl_new, dt)
                    qx[:, wet] = thomas_solve(*bands, qx[:, wet])
                    qy[:, wet] = thomas_solve(*bands, qy[:, wet])
                except np.linalg.LinAlgError as e:
                    raise SolverError(f"exchange solve failed on a wet cell: {e}")

        out = State(mesh, self.layers, h_new, qx, qy, state.t + dt, self.h_dry, state.zb)

        if self.rheology.active and self._visc is not None:
            dqx, dqy = self._visc.assemble_update(out, self.rheology, dt)
            out.qx += dqx
            out.qy += dqy

        dry = out.h <= self.h_dry
        if np.any(dry):
            out.qx[:, dry] = 0.0
            out.qy[:, dry] = 0.0
        return out

    # -- modified Heun -------------------------------------------------------

    def heun_step(self, state: State, remaining: float = np.inf):
        """One second-order step; returns (new_state, effective_dt)."""
        dt1 = min(self.dt_bound(state), remaining)
        s1 = self.euler_step(state, dt1)
        dt2 = self.dt_bound(s1)
        dt_eff = 2.0 * dt1 * dt2 / (dt1 + dt2)
        if dt_eff > remaining:
            # shrink the second stage so the convex combination lands exactly
            dt2 = remaining * dt1 / (2.0 * dt1 - remaining)
            dt_eff = remaining
        s2 = self.euler_step(s1, dt2)
        gamma = dt_eff * dt_eff / (2.0 * dt1 * dt2)
        out = State(self.mesh, self.layers,
                    (1.0 - gamma) * state.h + gamma * s2.h,
                    (1.0 - gamma) * state.qx + gamma * s2.qx,
                    (1.0 - gamma) * state.qy + gamma * s2.qy,
                    state.t + dt_eff, self.h_dry, state.zb)
        dry = out.h <= self.h_dry
        if np.any(dry):
            out.qx[:, dry] = 0.0
            out.qy[:, dry] = 0.0
        return out, dt_eff

    def step(self, state: State, remaining: float = np.inf):
        """Advance by one step of the configured order; returns (state, dt)."""
        if self.control.order == 2:
            return self.heun_step(state, remaining)
        dt = min(self.dt_bound(state), remaining)
        return self.euler_step(state, dt), dt


def heun_combination(dt1: float, dt2: float):
    """Effective step and convex weight of the modified Heun scheme."""
    dt = 2.0 * dt1 * dt2 / (dt1 + dt2)
    gamma = dt * dt / (2.0 * dt1 * dt2)
    return dt, gamma


def simulate(solver: Solver, state: State, t_end: float, on_step=None,
             steady_tol: float = 0.0, steady_min_t: float = 0.0, max_steps: int = 10 ** 9):
    """March to t_end (exact landing). on_step(state, dt) runs after every
    step. A positive steady_tol enables early exit once max|dh|/dt over a
    512-step window drops below it (only after steady_min_t).
    """
    check = 512
    href = state.h.copy()
    tref = state.t
    for _ in range(max_steps):
        remaining = t_end - state.t
        if remaining <= 1e-14 * max(1.0, abs(t_end)):
            break
        state, dt = solver.step(state, remaining)
        if on_step is not None:
            on_step(state, dt)
        if steady_tol > 0.0 and state.t >= steady_min_t:
            check -= 1
            if check == 0:
                rate = float(np.max(np.abs(state.h - href))) / max(state.t - tref, 1e-300)
                if rate < steady_tol:
                    break
                href = state.h.copy()
                tref = state.t
                check = 512
    return state
