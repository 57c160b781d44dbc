"""Mesh and configuration generators for the built-in test cases.

Rectangular domains are meshed by Delaunay triangulation of a jittered
structured point set (boundary points stay exactly on the rectangle);
the fully symmetric variant splits every grid cell into four triangles
around its center and is used where mirror symmetry of the discrete
operator matters.
"""

from __future__ import annotations

import numpy as np
from scipy.spatial import Delaunay

from .mesh import Triangulation
from .analytic import StationaryChannel, ThackerBowl, DrainingTank


def _side_tag(p, q, x0, x1, y0, y1, tol):
    if abs(p[0] - x0) < tol and abs(q[0] - x0) < tol:
        return "left"
    if abs(p[0] - x1) < tol and abs(q[0] - x1) < tol:
        return "right"
    if abs(p[1] - y0) < tol and abs(q[1] - y0) < tol:
        return "bottom"
    if abs(p[1] - y1) < tol and abs(q[1] - y1) < tol:
        return "top"
    raise ValueError("boundary edge not on a rectangle side")


def rectangle_mesh(x0, x1, y0, y1, nx, ny, jitter=0.25, seed=0, zb_fn=None) -> Triangulation:
    """Jittered structured triangulation of [x0,x1] x [y0,y1].

    nx, ny are point counts per side (>= 2); interior points move by a
    deterministic uniform jitter of amplitude jitter*spacing.
    """
    xs = np.linspace(x0, x1, nx)
    ys = np.linspace(y0, y1, ny)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    pts = np.stack([X.ravel(), Y.ravel()], axis=1)
    dx = (x1 - x0) / (nx - 1)
    dy = (y1 - y0) / (ny - 1)
    interior = ((pts[:, 0] > x0 + 0.5 * dx) & (pts[:, 0] < x1 - 0.5 * dx)
                & (pts[:, 1] > y0 + 0.5 * dy) & (pts[:, 1] < y1 - 0.5 * dy))
    rng = np.random.default_rng(seed)
    shift = rng.uniform(-jitter, jitter, size=(pts.shape[0], 2)) * np.array([dx, dy])
    pts[interior] += shift[interior]

    tri = Delaunay(pts)
    simplices = tri.simplices.copy()
    p0 = pts[simplices[:, 0]]
    p1 = pts[simplices[:, 1]]
    p2 = pts[simplices[:, 2]]
    flip = (p1 - p0)[:, 0] * (p2 - p0)[:, 1] - (p1 - p0)[:, 1] * (p2 - p0)[:, 0] < 0.0
    simplices[flip, 1], simplices[flip, 2] = simplices[flip, 2].copy(), simplices[flip, 1].copy()

    # boundary edges = triangle edges used once
    n = pts.shape[0]
    e = np.concatenate([simplices[:, [0, 1]], simplices[:, [1, 2]], simplices[:, [2, 0]]])
    key = np.minimum(e[:, 0], e[:, 1]) * n + np.maximum(e[:, 0], e[:, 1])
    uniq, counts = np.unique(key, return_counts=True)
    bkeys = uniq[counts == 1]
    bedges = np.stack([bkeys // n, bkeys % n], axis=1)
    tol = 1e-9 * max(x1 - x0, y1 - y0)
    tags = [_side_tag(pts[a], pts[b], x0, x1, y0, y1, tol) for a, b in bedges]

    zb = zb_fn(pts[:, 0], pts[:, 1]) if zb_fn is not None else np.zeros(n)
    return Triangulation(xy=pts, zb=np.asarray(zb, float), triangles=simplices,
                         boundary_edges=bedges, boundary_tags=tags)


def symmetric_mesh(x0, x1, y0, y1, nx, ny, zb_fn=None) -> Triangulation:
    """Union-jack mesh: grid nodes plus cell centers, four triangles per
    cell. Symmetric under both axis reflections of a symmetric domain."""
    xs = np.linspace(x0, x1, nx)
    ys = np.linspace(y0, y1, ny)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    grid = np.stack([X.ravel(), Y.ravel()], axis=1)

    cx = 0.5 * (xs[:-1] + xs[1:])
    cy = 0.5 * (ys[:-1] + ys[1:])
    CX, CY = np.meshgrid(cx, cy, indexing="ij")
    centers = np.stack([CX.ravel(), CY.ravel()], axis=1)
    pts = np.concatenate([grid, centers])

    def gid(i, j):
        return i * ny + j

    def cid(i, j):
        return nx * ny + i * (ny - 1) + j

    tris = []
    for i in range(nx - 1):
        for j in range(ny - 1):
            a, b = gid(i, j), gid(i + 1, j)
            c, d = gid(i + 1, j + 1), gid(i, j + 1)
            m = cid(i, j)
            tris += [(a, b, m), (b, c, m), (c, d, m), (d, a, m)]
    tris = np.asarray(tris, dtype=np.int64)

    bedges = []
    tags = []
    for i in range(nx - 1):
        bedges.append((gid(i, 0), gid(i + 1, 0)))
        tags.append("bottom")
        bedges.append((gid(i, ny - 1), gid(i + 1, ny - 1)))
        tags.append("top")
    for j in range(ny - 1):
        bedges.append((gid(0, j), gid(0, j + 1)))
        tags.append("left")
        bedges.append((gid(nx - 1, j), gid(nx - 1, j + 1)))
        tags.append("right")
    zb = zb_fn(pts[:, 0], pts[:, 1]) if zb_fn is not None else np.zeros(pts.shape[0])
    return Triangulation(xy=pts, zb=np.asarray(zb, float), triangles=tris,
                         boundary_edges=np.asarray(bedges, dtype=np.int64), boundary_tags=tags)


def _grid_counts(target_nodes: int, width: float, height: float):
    aspect = width / height
    ny = max(2, int(round(np.sqrt(target_nodes / aspect))))
    nx = max(2, int(round(target_nodes / ny)))
    return nx, ny


def channel_mesh(target_nodes: int, case: StationaryChannel | None = None, seed: int = 0) -> Triangulation:
    case = case or StationaryChannel()
    nx, ny = _grid_counts(target_nodes, case.x_max, 2.0)
    return rectangle_mesh(0.0, case.x_max, 0.0, 2.0, nx, ny, jitter=0.22, seed=seed,
                          zb_fn=lambda x, y: case.zb(x, y))


def thacker_mesh(target_nodes: int, case: ThackerBowl | None = None, half_width: float = 0.5,
                 seed: int = 1) -> Triangulation:
    """Radially graded square mesh for the parabolic bowl: fine inside the
    maximal wet disc, coarsening outward where the bowl stays dry."""
    case = case or ThackerBowl()
    r_wet = np.sqrt((1.0 + case.gam) * abs(case.c)
                    / (case.b ** 2 * case.a * case.g * (1.0 - case.gam ** 2)))
    r_fine = min(1.12 * r_wet, 0.9 * half_width)
    coarsen = 3.4
    # node budget: pi r^2 / s^2 inside + (4 hw^2 - pi r^2) / (c s)^2 outside
    area_in = np.pi * r_fine ** 2
    area_out = 4.0 * half_width ** 2 - area_in
    s = np.sqrt((area_in + area_out / coarsen ** 2) / target_nodes)

    def hex_grid(spacing, bound):
        cols = int(np.ceil(2 * bound / spacing))
        rows = int(np.ceil(2 * bound / (spacing * np.sqrt(3) / 2)))
        pts = []
        for r in range(rows + 1):
            yy = -bound + r * spacing * np.sqrt(3) / 2
            off = 0.5 * spacing if r % 2 else 0.0
            for c in range(cols + 1):
                xx = -bound + c * spacing + off
                if -bound <= xx <= bound:
                    pts.append((xx, yy))
        return np.array(pts)

    inner = hex_grid(s, r_fine)
    inner = inner[np.hypot(inner[:, 0], inner[:, 1]) <= r_fine]
    outer = hex_grid(coarsen * s, half_width)
    keep = (np.hypot(outer[:, 0], outer[:, 1]) > r_fine + 0.55 * coarsen * s) \
        & (np.abs(outer[:, 0]) < half_width - 0.45 * coarsen * s) \
        & (np.abs(outer[:, 1]) < half_width - 0.45 * coarsen * s)
    outer = outer[keep]
    nb = max(4, int(np.ceil(2 * half_width / (coarsen * s))))
    side = np.linspace(-half_width, half_width, nb + 1)
    ring = [(x, -half_width) for x in side[:-1]] + [(half_width, y) for y in side[:-1]] \
        + [(-x, half_width) for x in side[:-1]] + [(-half_width, -y) for y in side[:-1]]
    ring = np.array(ring)

    rng = np.random.default_rng(seed)
    inner = inner + rng.uniform(-0.2, 0.2, inner.shape) * s
    inner = inner[np.hypot(inner[:, 0], inner[:, 1]) <= half_width - 0.6 * coarsen * s]
    outer = outer + rng.uniform(-0.2, 0.2, outer.shape) * coarsen * s
    pts = np.concatenate([ring, inner, outer])

    tri = Delaunay(pts)
    simplices = tri.simplices.copy()
    p0, p1, p2 = pts[simplices[:, 0]], pts[simplices[:, 1]], pts[simplices[:, 2]]
    flip = (p1 - p0)[:, 0] * (p2 - p0)[:, 1] - (p1 - p0)[:, 1] * (p2 - p0)[:, 0] < 0.0
    simplices[flip, 1], simplices[flip, 2] = simplices[flip, 2].copy(), simplices[flip, 1].copy()

    n = pts.shape[0]
    e = np.concatenate([simplices[:, [0, 1]], simplices[:, [1, 2]], simplices[:, [2, 0]]])
    key = np.minimum(e[:, 0], e[:, 1]) * n + np.maximum(e[:, 0], e[:, 1])
    uniq, counts = np.unique(key, return_counts=True)
    bkeys = uniq[counts == 1]
    bedges = np.stack([bkeys // n, bkeys % n], axis=1)
    tol = 1e-9 * half_width
    tags = [_side_tag(pts[a], pts[b], -half_width, half_width, -half_width, half_width, tol)
            for a, b in bedges]
    zb = case.zb(pts[:, 0], pts[:, 1])
    return Triangulation(xy=pts, zb=np.asarray(zb, float), triangles=simplices,
                         boundary_edges=bedges, boundary_tags=tags)


def draining_mesh(target_nodes: int, case: DrainingTank | None = None, seed: int = 2) -> Triangulation:
    case = case or DrainingTank()
    nx, ny = _grid_counts(target_nodes, 5.0, 1.0)
    return rectangle_mesh(0.0, 5.0, 0.0, 1.0, nx, ny, jitter=0.22, seed=seed,
                          zb_fn=lambda x, y: case.zb(x, y))


def random_topography_mesh(target_nodes: int, eta0: float = 1.0, seed: int = 3,
                           hill_amplitude: float = 1.6) -> Triangulation:
    """Square basin with smooth random bumps, some rising above eta0 so a
    lake-at-rest state has dry hilltops."""
    nx, ny = _grid_counts(target_nodes, 1.0, 1.0)
    rng = np.random.default_rng(seed)
    modes = rng.normal(size=(4, 4, 2))

    def zb_fn(x, y):
        z = np.zeros_like(np.asarray(x, float))
        for p in range(4):
            for q in range(4):
                z += (modes[p, q, 0] * np.cos(np.pi * (p * x + q * y))
                      + modes[p, q, 1] * np.sin(np.pi * (p * x - q * y))) / (1.0 + p + q)
        z -= z.min()
        return hill_amplitude * z / max(z.max(), 1e-12)

    return rectangle_mesh(0.0, 1.0, 0.0, 1.0, nx, ny, jitter=0.2, seed=seed + 100, zb_fn=zb_fn)
