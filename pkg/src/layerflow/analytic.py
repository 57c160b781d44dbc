"""Closed-form reference solutions, error norms, and convergence fitting.

Three families are provided: a stationary channel flow with a
depth-varying velocity profile, the radially symmetric oscillation in a
parabolic bowl with moving wet/dry fronts, and the draining tank whose
free surface stays flat while the velocity grows along the outflow
direction. All evaluators are pure functions of (t, x, y[, z]).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .layers import LayerConfig, State


class ParameterError(ValueError):
    """Raised when analytic-case parameters violate their constraints."""


class AnalyticCase:
    """Common interface: bed, depth, velocities, layer initialization."""

    name = "case"
    g = 9.81

    def zb(self, x, y):
        raise NotImplementedError

    def depth(self, t, x, y):
        raise NotImplementedError

    def velocity(self, t, x, y, z):
        """Pointwise horizontal velocity (u, v) inside the fluid."""
        raise NotImplementedError

    def vertical_velocity(self, t, x, y, z):
        raise NotImplementedError

    def layer_velocities(self, t, x, y, l):
        """Layer-averaged velocities, shape (N, npts).

        The default samples the mid-layer elevation, exact whenever the
        profile is linear in z; cases with curved profiles override it.
        """
        x = np.atleast_1d(np.asarray(x, float))
        y = np.atleast_1d(np.asarray(y, float))
        l = np.asarray(l, float)
        h = np.atleast_1d(self.depth(t, x, y))
        zb = np.atleast_1d(self.zb(x, y))
        cum = np.concatenate([[0.0], np.cumsum(l)])
        zmid = zb[None, :] + h[None, :] * 0.5 * (cum[:-1] + cum[1:])[:, None]
        u = np.empty_like(zmid)
        v = np.empty_like(zmid)
        for a in range(l.size):
            ua, va = self.velocity(t, x, y, zmid[a])
            u[a] = ua
            v[a] = va
        drym = h <= 0.0
        u[:, drym] = 0.0
        v[:, drym] = 0.0
        return u, v

    def init_state(self, mesh, layers: LayerConfig, t: float = 0.0, h_dry: float = 1e-8) -> State:
        x, y = mesh.xy[:, 0], mesh.xy[:, 1]
        h = np.maximum(np.atleast_1d(self.depth(t, x, y)), 0.0)
        u, v = self.layer_velocities(t, x, y, layers.l)
        hl = layers.l[:, None] * h[None, :]
        qx = hl * u
        qy = hl * v
        dry = h <= h_dry
        qx[:, dry] = 0.0
        qy[:, dry] = 0.0
        return State(mesh, layers, h, qx, qy, t, h_dry)


@dataclass
class StationaryChannel(AnalyticCase):
    """Steady channel flow with a cosine vertical velocity profile.

    The depth profile h0(x) is prescribed; the bed is shaped so that the
    column with u = a*b*cos(b (z - zb))/sin(b*h0), v = 0 is an exact
    steady solution. Total horizontal flux per unit width is the
    constant a.
    """

    a: float = 1.0
    b: float = 1.0
    zbar: float = 0.0
    x_max: float = 20.0
    g: float = 9.81
    name = "channel"

    def h0(self, x):
        x = np.asarray(x, float)
        return (0.5 + 1.5 / (1.0 + (x - 0.5 * self.x_max) ** 2)
                - 0.5 / (2.0 + (x - 2.0 * self.x_max / 3.0) ** 2))

    def h0_prime(self, x):
        x = np.asarray(x, float)
        d1 = x - 0.5 * self.x_max
        d2 = x - 2.0 * self.x_max / 3.0
        return -3.0 * d1 / (1.0 + d1 * d1) ** 2 + d2 / (2.0 + d2 * d2) ** 2

    def _check(self, x):
        s = np.sin(self.b * self.h0(x))
        if np.any(np.abs(s) < 1e-12):
            raise ParameterError("sin(b*h0) vanishes on the domain; channel parameters rejected")
        return s

    def zb(self, x, y=None):
        x = np.asarray(x, float)
        s = self._check(x)
        return self.zbar - self.h0(x) - (self.a * self.b) ** 2 / (2.0 * self.g * s * s)

    def zb_prime(self, x):
        s = self._check(x)
        hp = self.h0_prime(x)
        return -hp + (self.a ** 2 * self.b ** 3 / self.g) * np.cos(self.b * self.h0(x)) / s ** 3 * hp

    def depth(self, t, x, y):
        return self.h0(x)

    def velocity(self, t, x, y, z):
        x = np.asarray(x, float)
        s = self._check(x)
        u = self.a * self.b * np.cos(self.b * (np.asarray(z, float) - self.zb(x))) / s
        return u, np.zeros_like(u)

    def vertical_velocity(self, t, x, y, z):
        x = np.asarray(x, float)
        s = self._check(x)
        h0 = self.h0(x)
        zeta = np.asarray(z, float) - self.zb(x)
        return self.a * self.b * (self.zb_prime(x) * np.cos(self.b * zeta) / s
                                  + self.h0_prime(x) * np.sin(self.b * zeta) * np.cos(self.b * h0) / (s * s))

    def layer_velocities(self, t, x, y, l):
        """Exact layer averages of the cosine profile."""
        x = np.atleast_1d(np.asarray(x, float))
        l = np.asarray(l, float)
        h0 = self.h0(x)
        s = self._check(x)
        cum = np.concatenate([[0.0], np.cumsum(l)])
        sin_up = np.sin(self.b * cum[1:, None] * h0[None, :])
        sin_lo = np.sin(self.b * cum[:-1, None] * h0[None, :])
        u = self.a * (sin_up - sin_lo) / (s[None, :] * l[:, None] * h0[None, :])
        return u, np.zeros_like(u)

    def layer_flux(self, x, l):
        """Per-layer discharge q_alpha = h_alpha * mean(u), shape (N,)."""
        x = np.atleast_1d(np.asarray(x, float))
        u, _ = self.layer_velocities(0.0, x, np.zeros_like(x), l)
        return np.asarray(l)[:, None] * self.h0(x)[None, :] * u


@dataclass
class ThackerBowl(AnalyticCase):
    """Periodic oscillation in the parabolic bowl zb = a r^2 / 2 with a
    z-dependent horizontal velocity; period T = 2 pi / sqrt(4 a g)."""

    a: float = 2.0
    b: float = 1.0
    gam: float = 0.3
    c: float = -1.0
    g: float = 9.81
    name = "thacker"

    def __post_init__(self):
        if not 0.0 < self.gam < 1.0:
            raise ParameterError("thacker: gamma must lie in (0, 1)")
        # admissibility of the square root in f: c negative and not so
        # large that c (gamma - 1) exceeds 4 g^2
        if self.c >= 0.0 or self.c * (self.gam - 1.0) > 4.0 * self.g ** 2:
            raise ParameterError("thacker: c must be negative with c*(gamma-1) <= 4 g^2")
        if self.a <= 0.0 or self.b <= 0.0:
            raise ParameterError("thacker: a and b must be positive")

    @property
    def omega(self):
        return np.sqrt(4.0 * self.a * self.g)

    @property
    def period(self):
        return 2.0 * np.pi / self.omega

    def zb(self, x, y):
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        return 0.5 * self.a * (x * x + y * y)

    def _f(self, z):
        g, b = self.g, self.b
        return (-4.0 * g / (b * b)
                + (2.0 / (b * b)) * np.sqrt(4.0 * g * g + self.c * z + b * b * self.a * g * (self.gam ** 2 - 1.0) * z * z))

    def _fprime(self, z):
        g, b = self.g, self.b
        root = np.sqrt(4.0 * g * g + self.c * z + b * b * self.a * g * (self.gam ** 2 - 1.0) * z * z)
        return (self.c + 2.0 * b * b * self.a * g * (self.gam ** 2 - 1.0) * z) / (b * b * root)

    def depth(self, t, x, y):
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        r2 = x * x + y * y
        den = self.gam * np.cos(self.omega * t) - 1.0  # negative
        small = r2 < 1e-8
        r2s = np.where(small, 1.0, r2)
        h = self._f(r2s / den) / r2s
        h_center = self._fprime(0.0) / den
        return np.maximum(np.where(small, h_center, h), 0.0)

    def _shear(self, t):
        den = 1.0 - self.gam * np.cos(self.omega * t)
        return 0.5 * self.omega * self.gam * np.sin(self.omega * t) / den

    def velocity(self, t, x, y, z):
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        h = self.depth(t, x, y)
        zb = self.zb(x, y)
        fac = self.b * (np.asarray(z, float) - zb - 0.5 * h) + self._shear(t)
        return x * fac, y * fac

    def depth_gradient(self, t, x, y):
        """(dh/dx, dh/dy) inside the wet region; zero where dry."""
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        den = self.gam * np.cos(self.omega * t) - 1.0
        r2 = x * x + y * y
        small = r2 < 1e-8
        r2s = np.where(small, 1.0, r2)
        zeta = r2s / den
        wet = self.depth(t, x, y) > 0.0
        core = np.where(small, 0.0, 2.0 * (self._fprime(zeta) / den - self._f(zeta) / r2s) / r2s)
        core = np.where(wet, core, 0.0)
        return x * core, y * core

    def vertical_velocity(self, t, x, y, z):
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        z = np.asarray(z, float)
        h = self.depth(t, x, y)
        zb = self.zb(x, y)
        zeta = z - zb
        s = self._shear(t)
        hx, hy = self.depth_gradient(t, x, y)
        bracket = self.b * (0.5 * zeta * zeta - 0.5 * h * zeta) + s * zeta
        ddx = bracket + x * (self.b * (zeta * (-self.a * x) - 0.5 * (hx * zeta + h * (-self.a * x))) + s * (-self.a * x))
        ddy = bracket + y * (self.b * (zeta * (-self.a * y) - 0.5 * (hy * zeta + h * (-self.a * y))) + s * (-self.a * y))
        return -(ddx + ddy)


@dataclass
class DrainingTank(AnalyticCase):
    """Flat free surface h = a/(t - t0 + t1) draining over a flat bed,
    with a z-linear velocity profile; exact for the inviscid model and,
    with the bed-friction and wind closures below, for the viscous one."""

    a: float = 1.0
    b: float = 2.5
    L: float = 2.0
    theta: float = 0.0
    t0: float = 0.0
    t1: float = 0.5
    nu: float = 0.0
    zb0: float = 0.0
    g: float = 9.81
    name = "draining"

    def __post_init__(self):
        if self.t1 <= 0.0:
            raise ParameterError("draining: t1 must be positive")
        if self.a * self.b <= self.L:
            raise ParameterError("draining: requires a*b > L")

    def f(self, t):
        return 1.0 / (t - self.t0 + self.t1)

    def zb(self, x, y):
        return np.full_like(np.asarray(x, float), self.zb0)

    def depth(self, t, x, y):
        return np.full_like(np.asarray(x, float), self.a * self.f(t))

    def _plane(self, x, y):
        ct2 = np.cos(self.theta) ** 2
        st2 = np.sin(self.theta) ** 2
        return np.asarray(x, float) * ct2 + np.asarray(y, float) * st2

    def velocity(self, t, x, y, z):
        f = self.f(t)
        zeta = np.asarray(z, float) - self.zb0
        val = self.b * (zeta - 0.5 * self.a * f) + f * self._plane(x, y)
        return val, val.copy() if isinstance(val, np.ndarray) else val

    def vertical_velocity(self, t, x, y, z):
        return self.f(t) * (self.zb0 - np.asarray(z, float))

    def kappa_field(self, t, x, y, h):
        """Navier coefficient of the viscous variant (per-case hook)."""
        denom = np.asarray(h, float) * (self.a * self.b - 2.0 * self._plane(x, y))
        safe = np.where(np.abs(denom) > 1e-300, denom, 1e-300)
        return 2.0 * self.nu * self.a * self.b / safe

    @property
    def wind(self):
        return self.nu * self.b / 2.0

    @property
    def wind_direction(self):
        return (1.0 / np.sqrt(2.0), 1.0 / np.sqrt(2.0))


# ---------------------------------------------------------------------------
# error norms and convergence orders
# ---------------------------------------------------------------------------

def l2_error(state: State, case: AnalyticCase, t: float, field: str = "h") -> float:
    """sqrt(sum_i |C_i| (field_i - field_analytic(x_i, y_i))^2)."""
    mesh = state.mesh
    x, y = mesh.xy[:, 0], mesh.xy[:, 1]
    if field == "h":
        diff = state.h - np.maximum(case.depth(t, x, y), 0.0)
        return float(np.sqrt(np.dot(mesh.area, diff * diff)))
    raise ValueError(f"unsupported error field '{field}'")


def layer_velocity_error(state: State, case: AnalyticCase, t: float, node: int) -> float:
    """Depth-weighted rms mismatch of the horizontal velocity profile at
    one cell, sampling the analytic profile at the simulated mid-layer
    elevations."""
    x = state.mesh.xy[node, 0:1]
    y = state.mesh.xy[node, 1:2]
    zmid = state.midlayer_elevations()[:, node]
    u, v = state.velocities()
    du = np.empty(state.layers.n)
    dv = np.empty(state.layers.n)
    for a in range(state.layers.n):
        ua, va = case.velocity(t, x, y, np.array([zmid[a]]))
        du[a] = u[a, node] - ua[0]
        dv[a] = v[a, node] - va[0]
    w = state.layers.l
    return float(np.sqrt(np.sum(w * (du * du + dv * dv))))


def convergence_order(errors, sizes) -> float:
    """Least-squares slope of log(error) against log(size).

    sizes must be strictly monotone; at least two pairs are required
    (convergence studies normally supply three or more).
    """
    e = np.asarray(errors, dtype=float)
    s = np.asarray(sizes, dtype=float)
    if e.shape != s.shape or e.size < 2:
        raise ValueError("need matching error/size sequences of length >= 2")
    d = np.diff(s)
    if not (np.all(d > 0.0) or np.all(d < 0.0)):
        raise ValueError("mesh sizes must be strictly monotone")
    if np.any(e <= 0.0) or np.any(s <= 0.0):
        raise ValueError("errors and sizes must be positive")
    ls = np.log(s)
    le = np.log(e)
    slope = np.polyfit(ls, le, 1)[0]
    return float(slope)
