"""Layer configuration, conservative state, and layer diagnostics.

The fluid column over every cell is split into N layers whose thicknesses
are fixed fractions l_alpha of the total depth h, so h_alpha = l_alpha*h.
The conservative unknowns are h and the per-layer discharges
q_{x,alpha} = h_alpha u_alpha, q_{y,alpha} = h_alpha v_alpha. Vertical
velocities are not evolved; they are reconstructed from the horizontal
field as a pure post-processing step.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import Mesh, GreenGaussGradient

G_DEFAULT = 9.81
H_DRY = 1e-8  # depths below this are dry: velocities defined as zero


@dataclass(frozen=True)
class LayerConfig:
    """Number of layers and their fixed thickness fractions."""

    l: np.ndarray

    def __post_init__(self):
        l = np.atleast_1d(np.asarray(self.l, dtype=float))
        if l.ndim != 1 or l.size < 1:
            raise ValueError("layer fractions must be a 1D sequence with at least one entry")
        if np.any(l <= 0.0):
            raise ValueError("layer fractions must be positive")
        if abs(l.sum() - 1.0) > 1e-14:
            raise ValueError(f"layer fractions must sum to 1 (got {l.sum():.17g})")
        object.__setattr__(self, "l", l)

    @classmethod
    def uniform(cls, n: int) -> "LayerConfig":
        return cls(np.full(n, 1.0 / n))

    @property
    def n(self) -> int:
        return self.l.size

    @property
    def cumulative(self) -> np.ndarray:
        """Partial sums sum_{p<=alpha} l_p, length N (last entry 1)."""
        return np.cumsum(self.l)


@dataclass
class State:
    """Conservative unknowns on the dual cells at a given time.

    h has shape (n_cells,); qx, qy have shape (N, n_cells). The cell
    topography zb defaults to the mesh values; it is stored on the state
    so bed-displacement sources can offset it without mutating the mesh.
    """

    mesh: Mesh
    layers: LayerConfig
    h: np.ndarray
    qx: np.ndarray
    qy: np.ndarray
    t: float = 0.0
    h_dry: float = H_DRY
    zb: np.ndarray = None

    def __post_init__(self):
        if self.zb is None:
            self.zb = self.mesh.zb

    @classmethod
    def zeros(cls, mesh: Mesh, layers: LayerConfig, t: float = 0.0) -> "State":
        n = mesh.n_nodes
        return cls(mesh, layers, np.zeros(n), np.zeros((layers.n, n)), np.zeros((layers.n, n)), t)

    def copy(self) -> "State":
        return State(self.mesh, self.layers, self.h.copy(), self.qx.copy(), self.qy.copy(),
                     self.t, self.h_dry, self.zb)

    def layer_heights(self) -> np.ndarray:
        """h_alpha = l_alpha * h, shape (N, n)."""
        return self.layers.l[:, None] * self.h[None, :]

    def velocities(self):
        """Per-layer velocities with the dry rule: u = q/h_alpha when
        h_alpha exceeds l_alpha*h_dry, else 0."""
        hl = self.layer_heights()
        wet = hl > self.layers.l[:, None] * self.h_dry
        with np.errstate(divide="ignore", invalid="ignore"):
            u = np.where(wet, self.qx / hl, 0.0)
            v = np.where(wet, self.qy / hl, 0.0)
        return u, v

    def interface_elevations(self) -> np.ndarray:
        """z_{alpha+1/2} for alpha = 0..N, shape (N+1, n); row 0 is the bed,
        row N the free surface."""
        z = np.empty((self.layers.n + 1, self.h.shape[0]))
        z[0] = self.zb
        np.cumsum(self.layer_heights(), axis=0, out=z[1:])
        z[1:] += self.zb
        return z

    def midlayer_elevations(self) -> np.ndarray:
        z = self.interface_elevations()
        return 0.5 * (z[:-1] + z[1:])

    def surface(self) -> np.ndarray:
        return self.zb + self.h


def total_mass(state: State) -> float:
    """Water volume sum_i |C_i| h_i."""
    return float(np.dot(state.mesh.area, state.h))


def energy(state: State, g: float = G_DEFAULT):
    """Per-cell per-layer energy density and its domain integral.

    E_alpha = h_alpha |u_alpha|^2 / 2 + (g/2) h_alpha h + g h_alpha z_b.
    Returns (E, total) with E of shape (N, n).
    """
    hl = state.layer_heights()
    u, v = state.velocities()
    E = 0.5 * hl * (u * u + v * v) + 0.5 * g * hl * state.h[None, :] + g * hl * state.zb[None, :]
    total = float(np.dot(state.mesh.area, E.sum(axis=0)))
    return E, total


def vertical_velocity(state: State, gg: GreenGaussGradient | None = None) -> np.ndarray:
    """Reconstruct per-layer vertical velocities, shape (N, n).

    w_alpha = k_alpha - z_alpha div(u_alpha) with the recursion
    k_1 = div(z_b u_1), k_{alpha+1} = k_alpha + div(z_{alpha+1/2}
    (u_{alpha+1} - u_alpha)). All divergences are Green-Gauss over the
    dual cells; dry cells report 0.
    """
    if gg is None:
        gg = GreenGaussGradient(state.mesh)
    u, v = state.velocities()
    zint = state.interface_elevations()
    zmid = 0.5 * (zint[:-1] + zint[1:])
    N = state.layers.n
    w = np.empty_like(u)
    k = gg.divergence(state.zb * u[0], state.zb * v[0])
    w[0] = k - zmid[0] * gg.divergence(u[0], v[0])
    for a in range(1, N):
        k = k + gg.divergence(zint[a] * (u[a] - u[a - 1]), zint[a] * (v[a] - v[a - 1]))
        w[a] = k - zmid[a] * gg.divergence(u[a], v[a])
    w[:, state.h <= state.h_dry] = 0.0
    return w
