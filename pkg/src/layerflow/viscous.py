"""Simplified-rheology source terms: horizontal stress, vertical
coupling, Navier bed friction and wind stress.

Horizontal diffusion is assembled with P1 finite elements on the primal
triangulation and lumped masses (the dual-cell areas). The layer-coupling
stiffness entries carry depth-ratio coefficients frozen per triangle, so
every matrix is symmetric positive semidefinite and annihilates constant
fields. Vertical coupling and friction are pointwise (lumped) updates:

    gamma_{a+1/2} = 2 nu (1 + |grad z_{a+1/2}|^2) / (h_{a+1} + h_a),

friction -kappa u_1 acts on the bottom layer only, wind +W t_s on the
top layer only. Everything is explicit; :meth:`ViscousOperator.stable_dt`
returns the admissible step.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .mesh import Mesh
from .layers import State


@dataclass
class RheologyParams:
    """Viscosity, bed friction, and wind forcing."""

    nu: float = 0.0            # kinematic viscosity, m^2/s
    kappa: float = 0.0         # Navier friction coefficient, m/s
    wind: float = 0.0          # wind stress magnitude, m^2/s^2 (signed)
    t_s: tuple = (1.0, 0.0)    # unit horizontal wind direction
    kappa_field: object = None  # optional callable kappa(t, x, y, h) -> array

    def __post_init__(self):
        if self.nu < 0.0 or self.kappa < 0.0:
            raise ValueError("nu and kappa must be nonnegative")
        if self.wind != 0.0:
            norm = float(np.hypot(*self.t_s))
            if abs(norm - 1.0) > 1e-12:
                raise ValueError("wind direction t_s must be a unit vector")

    @property
    def active(self) -> bool:
        return self.nu != 0.0 or self.kappa != 0.0 or self.wind != 0.0 or self.kappa_field is not None


def gamma_coeff(nu, grad_z, h_a, h_ap1):
    """Vertical coupling coefficient 2 nu (1 + |grad z|^2) / (h_{a+1} + h_a).

    grad_z is an (..., 2) array of interface-elevation gradients. Returns
    0 where both layers are dry (coupling vanishes with the fluid).
    """
    h_a = np.asarray(h_a, dtype=float)
    h_ap1 = np.asarray(h_ap1, dtype=float)
    gz2 = np.sum(np.square(np.asarray(grad_z, dtype=float)), axis=-1)
    tot = h_a + h_ap1
    safe = np.where(tot > 0.0, tot, 1.0)
    out = 2.0 * nu * (1.0 + gz2) / safe
    return np.where(tot > 0.0, out, 0.0)


class ViscousOperator:
    """Precomputed P1 machinery for one mesh."""

    def __init__(self, mesh: Mesh):
        self.mesh = mesh
        tri = mesh.triangles
        p = mesh.xy
        a, b, c = tri[:, 0], tri[:, 1], tri[:, 2]
        self.tri = tri
        self.t_area = mesh.tri_area
        two_a = 2.0 * self.t_area
        # P1 basis gradients per triangle, shape (n_tri, 3, 2)
        gx = np.stack([p[b, 1] - p[c, 1], p[c, 1] - p[a, 1], p[a, 1] - p[b, 1]], axis=1) / two_a[:, None]
        gy = np.stack([p[c, 0] - p[b, 0], p[a, 0] - p[c, 0], p[b, 0] - p[a, 0]], axis=1) / two_a[:, None]
        self.grad = np.stack([gx, gy], axis=2)
        # local stiffness integrals |T| grad_i . grad_j, shape (n_tri, 3, 3)
        self.s_loc = self.t_area[:, None, None] * np.einsum("tid,tjd->tij", self.grad, self.grad)
        self.lumped = mesh.area

    def apply_stiffness(self, coeff: np.ndarray, f: np.ndarray) -> np.ndarray:
        """(K f)_i = sum_T cbar_T sum_j S_loc[i,j] f_j with cbar_T the
        triangle mean of the nodal coefficient field."""
        cbar = coeff[self.tri].mean(axis=1)
        loc = np.einsum("tij,tj->ti", self.s_loc, f[self.tri]) * cbar[:, None]
        out = np.zeros_like(f)
        np.add.at(out, self.tri.reshape(-1), loc.reshape(-1))
        return out

    def nodal_gradient(self, f: np.ndarray) -> np.ndarray:
        """Area-weighted average of the P1 triangle gradients per node."""
        gt = np.einsum("tid,ti->td", self.grad, f[self.tri])
        acc = np.zeros((f.shape[0], 2))
        w = np.zeros(f.shape[0])
        contrib = np.repeat(gt * (self.t_area[:, None] / 3.0), 3, axis=0)
        np.add.at(acc, self.tri.reshape(-1), contrib)
        np.add.at(w, self.tri.reshape(-1), np.repeat(self.t_area / 3.0, 3))
        return acc / w[:, None]

    # -- assembled update -------------------------------------------------

    def _coefficients(self, state: State, params: RheologyParams):
        """Per-layer stiffness coefficient fields and vertical couplings."""
        N = state.layers.n
        hl = state.layer_heights()
        nu_int = np.zeros(N + 1)  # nu_{a+1/2}; zero at bed and surface
        nu_int[1:N] = params.nu

        c_same = []
        c_up = []
        c_dn = []
        for a in range(N):
            up = hl[a + 1] + hl[a] if a + 1 < N else np.ones_like(hl[a])
            dn = hl[a] + hl[a - 1] if a - 1 >= 0 else np.ones_like(hl[a])
            up_s = np.where(up > 0.0, up, 1.0)
            dn_s = np.where(dn > 0.0, dn, 1.0)
            same = 0.5 * (nu_int[a + 1] * hl[a] / up_s + nu_int[a] * hl[a] / dn_s)
            c_same.append(same)
            c_up.append(0.5 * nu_int[a + 1] * (hl[a + 1] / up_s) if a + 1 < N else None)
            c_dn.append(0.5 * nu_int[a] * (hl[a - 1] / dn_s) if a - 1 >= 0 else None)
        return c_same, c_up, c_dn

    def assemble_update(self, state: State, params: RheologyParams, dt: float):
        """Momentum increments (dqx, dqy), shape (N, n): U^{n+1} = U~ + increment.

        Raises ValueError when dt exceeds the explicit stability bound.
        """
        N = state.layers.n
        n = state.h.shape[0]
        dqx = np.zeros((N, n))
        dqy = np.zeros((N, n))
        if not params.active or dt == 0.0:
            return dqx, dqy
        bound = self.stable_dt(state, params)
        if dt > bound * (1.0 + 1e-12):
            raise ValueError(f"viscous step dt={dt:.6g} exceeds the stability bound {bound:.6g}")

        u, v = state.velocities()
        hl = state.layer_heights()
        wet = state.h > state.h_dry

        if params.nu > 0.0:
            c_same, c_up, c_dn = self._coefficients(state, params)
            for a in range(N):
                kx = self.apply_stiffness(c_same[a], u[a])
                ky = self.apply_stiffness(c_same[a], v[a])
                if c_up[a] is not None:
                    kx += self.apply_stiffness(c_up[a], u[a + 1])
                    ky += self.apply_stiffness(c_up[a], v[a + 1])
                if c_dn[a] is not None:
                    kx += self.apply_stiffness(c_dn[a], u[a - 1])
                    ky += self.apply_stiffness(c_dn[a], v[a - 1])
                dqx[a] -= dt * kx / self.lumped
                dqy[a] -= dt * ky / self.lumped

            # vertical momentum diffusion between adjacent layers (lumped)
            zint = state.interface_elevations()
            for k in range(1, N):  # interior interfaces a+1/2, a = k-1
                gz = self.nodal_gradient(zint[k])
                gam = gamma_coeff(params.nu, gz, hl[k - 1], hl[k])
                gam = np.where(wet, gam, 0.0)
                fx = dt * gam * (u[k] - u[k - 1])
                fy = dt * gam * (v[k] - v[k - 1])
                dqx[k - 1] += fx
                dqy[k - 1] += fy
                dqx[k] -= fx
                dqy[k] -= fy

        kap = self._kappa(state, params)
        if kap is not None:
            dqx[0] -= dt * kap * u[0]
            dqy[0] -= dt * kap * v[0]

        if params.wind != 0.0:
            dqx[N - 1] += np.where(wet, dt * params.wind * params.t_s[0], 0.0)
            dqy[N - 1] += np.where(wet, dt * params.wind * params.t_s[1], 0.0)
        return dqx, dqy

    def _kappa(self, state: State, params: RheologyParams):
        if params.kappa_field is not None:
            kap = params.kappa_field(state.t, self.mesh.xy[:, 0], self.mesh.xy[:, 1], state.h)
            return np.where(state.h > state.h_dry, kap, 0.0)
        if params.kappa > 0.0:
            return np.where(state.h > state.h_dry, params.kappa, 0.0)
        return None

    def stable_dt(self, state: State, params: RheologyParams) -> float:
        """Admissible explicit step: min over wet layers of
        |C_i| h_{a,i} / (4 * row_sum) for the stiffness part, h_1/(2 kappa)
        for friction, and the analogous bound for the vertical coupling."""
        if not params.active:
            return np.inf
        bound = np.inf
        hl = state.layer_heights()
        wet = state.h > state.h_dry
        if not np.any(wet):
            return np.inf
        if params.nu > 0.0:
            u_ones = np.ones(state.h.shape[0])
            c_same, c_up, c_dn = self._coefficients(state, params)
            for a in range(state.layers.n):
                row = np.abs(self.apply_stiffness(c_same[a], u_ones))
                row += sum(
                    np.abs(self.apply_stiffness(c, u_ones))
                    for c in (c_up[a], c_dn[a]) if c is not None
                )
                # row-sum of |K| acting on velocities; scale by lumped mass
                # and the layer depth that converts momentum to velocity
                denom = row[wet]
                hwet = hl[a][wet]
                ok = denom > 0.0
                if np.any(ok):
                    bound = min(bound, float(np.min(self.lumped[wet][ok] * hwet[ok] / (4.0 * denom[ok]))))
            zint = state.interface_elevations()
            for k in range(1, state.layers.n):
                gz = self.nodal_gradient(zint[k])
                gam = gamma_coeff(params.nu, gz, hl[k - 1], hl[k])[wet]
                hmin = np.minimum(hl[k - 1], hl[k])[wet]
                ok = gam > 0.0
                if np.any(ok):
                    bound = min(bound, float(np.min(hmin[ok] / (4.0 * gam[ok]))))
        kap = self._kappa(state, params)
        if kap is not None:
            kw = np.abs(kap[wet])  # per-case hooks may prescribe signed coefficients
            h1 = hl[0][wet]
            ok = kw > 0.0
            if np.any(ok):
                bound = min(bound, float(np.min(h1[ok] / (2.0 * kw[ok]))))
        return bound
