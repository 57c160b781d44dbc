"""Vertex-centered dual mesh built from an unstructured triangulation.

Control volumes (dual cells) surround each triangulation vertex. Inside a
triangle the cell boundary joins the edge midpoints to the centroid, so
each triangle contributes exactly a third of its area to each of its
vertices. Along the domain boundary the cell is closed by the two
half-edges running from the vertex to the midpoints of its boundary
edges.

Interior dual interfaces are stored in aggregated form: one length and
one unit normal per primal edge, with ``L_ij * n_ij`` equal to the exact
resultant of the (two) polyline segments. This makes the closed-polygon
identity ``sum_j L_ij n_ij + L_i n_i = 0`` hold to rounding per cell,
which the well-balanced property of the flow solver relies on.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class MeshError(Exception):
    """Raised when a triangulation or mesh fails a structural check."""


@dataclass(frozen=True)
class Triangulation:
    """Raw triangulation: nodes with bed elevation, triangles, tagged boundary.

    Attributes:
        xy: node coordinates, shape (n_nodes, 2), meters.
        zb: bed elevation per node, shape (n_nodes,), meters.
        triangles: node indices, shape (n_tri, 3), counter-clockwise.
        boundary_edges: node index pairs, shape (n_bedge, 2).
        boundary_tags: tag string per boundary edge, length n_bedge.
    """

    xy: np.ndarray
    zb: np.ndarray
    triangles: np.ndarray
    boundary_edges: np.ndarray
    boundary_tags: list

    def __post_init__(self):
        object.__setattr__(self, "xy", np.asarray(self.xy, dtype=float))
        object.__setattr__(self, "zb", np.asarray(self.zb, dtype=float))
        object.__setattr__(self, "triangles", np.asarray(self.triangles, dtype=np.int64))
        object.__setattr__(self, "boundary_edges", np.asarray(self.boundary_edges, dtype=np.int64).reshape(-1, 2))


@dataclass(frozen=True)
class Mesh:
    """Immutable vertex-centered dual mesh.

    Per vertex i the dual cell C_i has area ``area[i]``; per interior
    primal edge e = (i, j) with i < j the aggregated dual interface has
    length ``edge_len[e]`` and unit normal ``edge_normal[e]`` outward
    from C_i. Boundary vertices carry the resultant boundary segment
    (length ``bnd_len``, unit outward normal ``bnd_normal``) and the tag
    of their boundary edges. ``bnd_len`` is zero-length (vertex absent)
    for interior vertices.
    """

    xy: np.ndarray
    zb: np.ndarray
    triangles: np.ndarray
    area: np.ndarray            # (n,) dual cell areas
    edges: np.ndarray           # (E, 2) node pairs, edges[:,0] < edges[:,1]
    edge_len: np.ndarray        # (E,)
    edge_normal: np.ndarray     # (E, 2) unit, outward from edges[:,0]
    bnd_nodes: np.ndarray       # (B,) vertex indices on the boundary
    bnd_len: np.ndarray         # (B,)
    bnd_normal: np.ndarray      # (B, 2) unit outward
    bnd_tag: list               # length B, primary (lexically first) tag
    bnd_tags_all: list          # length B, all tags meeting at the vertex
    bseg_node: np.ndarray       # (S,) owning cell of each boundary half-segment
    bseg_len: np.ndarray        # (S,) half-segment length
    bseg_normal: np.ndarray     # (S, 2) exact outward normal of the segment
    bseg_tag: list              # length S
    tri_area: np.ndarray = field(repr=False, default=None)   # (n_tri,)
    avg_edge_length: float = 0.0

    @property
    def n_nodes(self) -> int:
        return self.xy.shape[0]

    @property
    def n_edges(self) -> int:
        return self.edges.shape[0]

    def perimeter(self) -> np.ndarray:
        """Total interface length of each dual cell (interior edges plus
        the true boundary-segment lengths)."""
        per = np.zeros(self.n_nodes)
        np.add.at(per, self.edges[:, 0], self.edge_len)
        np.add.at(per, self.edges[:, 1], self.edge_len)
        np.add.at(per, self.bseg_node, self.bseg_len)
        return per

    def neighbor_csr(self):
        """Neighbor sets K_i as CSR arrays (ptr, idx)."""
        n = self.n_nodes
        counts = np.zeros(n, dtype=np.int64)
        np.add.at(counts, self.edges[:, 0], 1)
        np.add.at(counts, self.edges[:, 1], 1)
        ptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(counts, out=ptr[1:])
        idx = np.empty(ptr[-1], dtype=np.int64)
        fill = ptr[:-1].copy()
        for a, b in self.edges:
            idx[fill[a]] = b
            fill[a] += 1
            idx[fill[b]] = a
            fill[b] += 1
        return ptr, idx


def _triangle_signed_areas(xy: np.ndarray, tri: np.ndarray) -> np.ndarray:
    p0 = xy[tri[:, 0]]
    p1 = xy[tri[:, 1]]
    p2 = xy[tri[:, 2]]
    d1 = p1 - p0
    d2 = p2 - p0
    return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])


def build_dual(tri: Triangulation) -> Mesh:
    """Construct the dual mesh from a validated triangulation.

    Raises MeshError for degenerate triangles (signed area <= 0),
    non-manifold edges, boundary lists inconsistent with the triangle
    incidence, or degenerate boundary corners (antiparallel adjacent
    boundary segments).
    """
    xy = tri.xy
    tris = tri.triangles
    n = xy.shape[0]

    s_area = _triangle_signed_areas(xy, tris)
    bad = np.nonzero(s_area <= 0.0)[0]
    if bad.size:
        raise MeshError(f"degenerate or misoriented triangle (area <= 0) at index {bad[0]}")

    # Dual areas: each triangle gives |T|/3 to each of its vertices
    # (median property of the centroid/edge-midpoint construction).
    area = np.zeros(n)
    for k in range(3):
        np.add.at(area, tris[:, k], s_area / 3.0)

    # Edge incidence over triangle edges; detect boundary / non-manifold.
    # Local edges of triangle (a, b, c): (a,b), (b,c), (c,a) in CCW order.
    ta, tb, tc = tris[:, 0], tris[:, 1], tris[:, 2]
    e_from = np.concatenate([ta, tb, tc])
    e_to = np.concatenate([tb, tc, ta])
    e_tri = np.tile(np.arange(tris.shape[0]), 3)

    lo = np.minimum(e_from, e_to)
    hi = np.maximum(e_from, e_to)
    key = lo * n + hi
    order = np.argsort(key, kind="stable")
    key_s = key[order]
    uniq, start, counts = np.unique(key_s, return_index=True, return_counts=True)
    if np.any(counts > 2):
        k = uniq[np.argmax(counts > 2)]
        raise MeshError(f"non-manifold edge ({k // n}, {k % n}) shared by more than two triangles")

    edges_lo = (uniq // n).astype(np.int64)
    edges_hi = (uniq % n).astype(np.int64)

    centroids = (xy[ta] + xy[tb] + xy[tc]) / 3.0
    # Aggregated dual-interface vector per half-edge: inside triangle t the
    # interface between cells a and b of primal edge (a, b) is the segment
    # [midpoint(a,b), centroid(t)]; its normal vector (length-scaled),
    # oriented from a toward b, is rot90 applied to (centroid - midpoint)
    # with the sign fixed by the direction a -> b.
    mid = 0.5 * (xy[e_from] + xy[e_to])
    seg = centroids[e_tri] - mid
    nvec = np.stack([seg[:, 1], -seg[:, 0]], axis=1)
    d = xy[e_to] - xy[e_from]
    flip = np.sign(np.einsum("ij,ij->i", nvec, d))
    if np.any(flip == 0.0):
        raise MeshError("degenerate triangle: centroid lies on an edge midpoint")
    nvec *= flip[:, None]
    # Re-orient to the canonical lo -> hi direction of the undirected edge.
    nvec *= np.where(e_from <= e_to, 1.0, -1.0)[:, None]

    evec = np.zeros((uniq.size, 2))
    inv = np.searchsorted(uniq, key)
    np.add.at(evec, inv, nvec)

    edge_len = np.hypot(evec[:, 0], evec[:, 1])
    if np.any(edge_len <= 0.0):
        raise MeshError("zero-length dual interface (degenerate geometry)")
    edge_normal = evec / edge_len[:, None]

    # Boundary handling: triangle edges seen once are boundary edges.
    is_bnd_edge = counts == 1
    bnd_pairs = {
        (int(a), int(b))
        for a, b in zip(edges_lo[is_bnd_edge], edges_hi[is_bnd_edge])
    }
    given = {}
    for (a, b), tag in zip(tri.boundary_edges, tri.boundary_tags):
        k = (int(min(a, b)), int(max(a, b)))
        if k in given:
            raise MeshError(f"boundary edge {k} listed twice")
        given[k] = tag
    if set(given) != bnd_pairs:
        missing = bnd_pairs - set(given)
        extra = set(given) - bnd_pairs
        raise MeshError(
            f"boundary edge list inconsistent with triangulation: missing={sorted(missing)[:4]} extra={sorted(extra)[:4]}"
        )

    # The boundary part of cell i along boundary edge (a, b) -- taken in the
    # CCW orientation the owning triangle induces -- is the half segment from
    # the vertex to the edge midpoint; its outward normal vector is
    # rot-90(b - a)/2 for both half segments. Segments are kept individually
    # (own normal and tag) for flux assembly; the per-vertex resultant
    # L_i n_i closes the dual polygon exactly.
    once = np.nonzero(counts == 1)[0]
    bvec = np.zeros((n, 2))
    bcount = np.zeros(n, dtype=np.int64)
    btag: dict = {}
    bseg_node = []
    bseg_len = []
    bseg_normal = []
    bseg_tag = []
    for u_idx in once:
        pos = order[start[u_idx]]
        a, b = int(e_from[pos]), int(e_to[pos])  # CCW within owning triangle
        half = 0.5 * (xy[b] - xy[a])
        outward = np.array([half[1], -half[0]])
        seg_l = float(np.hypot(*outward))
        tag = given[(min(a, b), max(a, b))]
        for v in (a, b):
            bvec[v] += outward
            bcount[v] += 1
            btag.setdefault(v, set()).add(tag)
            bseg_node.append(v)
            bseg_len.append(seg_l)
            bseg_normal.append(outward / seg_l)
            bseg_tag.append(tag)

    bnd_nodes = np.nonzero(bcount > 0)[0]
    odd = bnd_nodes[(bcount[bnd_nodes] % 2) != 0]
    if odd.size:
        raise MeshError(f"boundary does not form closed loops (open at node {odd[0]})")

    blen = np.hypot(bvec[bnd_nodes, 0], bvec[bnd_nodes, 1])
    seg_len = np.zeros(n)
    for u_idx in once:
        pos = order[start[u_idx]]
        a, b = int(e_from[pos]), int(e_to[pos])
        s = 0.5 * np.hypot(*(xy[b] - xy[a]))
        seg_len[a] += s
        seg_len[b] += s
    if np.any(blen < 1e-12 * np.maximum(seg_len[bnd_nodes], 1e-300)):
        v = bnd_nodes[np.argmin(blen / np.maximum(seg_len[bnd_nodes], 1e-300))]
        raise MeshError(f"degenerate boundary corner at node {v}: adjacent segments are antiparallel")
    bnd_normal = bvec[bnd_nodes] / blen[:, None]

    tag_per_node = []
    tags_all = []
    for v in bnd_nodes:
        tags = sorted(btag[int(v)])
        # Corner vertices carry every adjacent side's tag; the resolver
        # picks which condition applies. The primary tag is lexical.
        tag_per_node.append(tags[0])
        tags_all.append(tuple(tags))

    d_primal = xy[edges_hi] - xy[edges_lo]
    avg_len = float(np.mean(np.hypot(d_primal[:, 0], d_primal[:, 1])))

    return Mesh(
        xy=xy,
        zb=tri.zb.copy(),
        triangles=tris.copy(),
        area=area,
        edges=np.stack([edges_lo, edges_hi], axis=1),
        edge_len=edge_len,
        edge_normal=edge_normal,
        bnd_nodes=bnd_nodes,
        bnd_len=blen,
        bnd_normal=bnd_normal,
        bnd_tag=tag_per_node,
        bnd_tags_all=tags_all,
        bseg_node=np.asarray(bseg_node, dtype=np.int64),
        bseg_len=np.asarray(bseg_len),
        bseg_normal=(np.asarray(bseg_normal).reshape(-1, 2)
                     if bseg_normal else np.zeros((0, 2))),
        bseg_tag=bseg_tag,
        tri_area=s_area,
        avg_edge_length=avg_len,
    )


def validate(mesh: Mesh) -> list:
    """Check the mesh invariants; return a list of violation messages.

    Never mutates the mesh. An empty list means all checks passed.
    """
    out = []
    if np.any(mesh.area <= 0.0):
        out.append(f"nonpositive dual cell area at node {int(np.argmin(mesh.area))}")

    nn = np.hypot(mesh.edge_normal[:, 0], mesh.edge_normal[:, 1])
    if np.any(np.abs(nn - 1.0) > 1e-14):
        out.append("edge normal not unit length within 1e-14")

    dom = float(np.sum(mesh.tri_area)) if mesh.tri_area is not None else float(np.sum(mesh.area))
    tot = float(np.sum(mesh.area))
    if abs(tot - dom) > 1e-12 * max(abs(dom), 1.0):
        out.append(f"dual areas sum {tot:.15g} != domain area {dom:.15g}")

    # Closed-polygon identity per cell, boundary segment included.
    closure = np.zeros((mesh.n_nodes, 2))
    v = mesh.edge_len[:, None] * mesh.edge_normal
    np.add.at(closure, mesh.edges[:, 0], v)
    np.add.at(closure, mesh.edges[:, 1], -v)
    closure[mesh.bnd_nodes] += mesh.bnd_len[:, None] * mesh.bnd_normal
    per = mesh.perimeter()
    res = np.hypot(closure[:, 0], closure[:, 1])
    bad = np.nonzero(res > 1e-12 * np.maximum(per, 1e-300))[0]
    if bad.size:
        out.append(f"closed-polygon identity violated at node {int(bad[0])} (residual {res[bad[0]]:.3e})")

    interior = np.ones(mesh.n_nodes, dtype=bool)
    interior[mesh.bnd_nodes] = False
    if np.any(mesh.bnd_len <= 0.0):
        out.append("boundary vertex with nonpositive boundary length")
    return out


# ---------------------------------------------------------------------------
# gradient utilities on the dual mesh
# ---------------------------------------------------------------------------

class GreenGaussGradient:
    """Green-Gauss gradient/divergence over dual cells.

    Edge values are the arithmetic average of the two cell values; the
    boundary segment uses the cell's own value.
    """

    def __init__(self, mesh: Mesh):
        self.mesh = mesh
        self._wi = mesh.edge_len[:, None] * mesh.edge_normal / 2.0

    def gradient(self, f: np.ndarray) -> np.ndarray:
        """Cell gradient of a scalar field, shape (n, 2)."""
        m = self.mesh
        i, j = m.edges[:, 0], m.edges[:, 1]
        avg = (f[i] + f[j])[:, None] * self._wi
        g = np.zeros((m.n_nodes, 2))
        np.add.at(g, i, avg)
        np.add.at(g, j, -avg)
        g[m.bnd_nodes] += (m.bnd_len * f[m.bnd_nodes])[:, None] * m.bnd_normal
        g /= m.area[:, None]
        return g

    def divergence(self, fx: np.ndarray, fy: np.ndarray) -> np.ndarray:
        """Cell divergence of a vector field, shape (n,)."""
        m = self.mesh
        i, j = m.edges[:, 0], m.edges[:, 1]
        flux = ((fx[i] + fx[j]) * self._wi[:, 0] + (fy[i] + fy[j]) * self._wi[:, 1])
        d = np.zeros(m.n_nodes)
        np.add.at(d, i, flux)
        np.add.at(d, j, -flux)
        b = m.bnd_nodes
        d[b] += m.bnd_len * (fx[b] * m.bnd_normal[:, 0] + fy[b] * m.bnd_normal[:, 1])
        return d / m.area


class LeastSquaresGradient:
    """Weighted least-squares cell gradients over the neighbor set K_i.

    Exact for globally linear fields, used by the MUSCL reconstruction.
    """

    def __init__(self, mesh: Mesh):
        ptr, idx = mesh.neighbor_csr()
        self.ptr = ptr
        self.idx = idx
        n = mesh.n_nodes
        owner = np.repeat(np.arange(n), np.diff(ptr))
        dx = mesh.xy[idx] - mesh.xy[owner]
        # Normal equations per cell, solved in closed form (2x2).
        a11 = np.zeros(n)
        a12 = np.zeros(n)
        a22 = np.zeros(n)
        np.add.at(a11, owner, dx[:, 0] * dx[:, 0])
        np.add.at(a12, owner, dx[:, 0] * dx[:, 1])
        np.add.at(a22, owner, dx[:, 1] * dx[:, 1])
        det = a11 * a22 - a12 * a12
        if np.any(det <= 0.0):
            raise MeshError("degenerate least-squares stencil (collinear neighbors)")
        # Weights such that grad = sum_k w_k (f_j - f_i).
        self.wx = (a22[owner] * dx[:, 0] - a12[owner] * dx[:, 1]) / det[owner]
        self.wy = (a11[owner] * dx[:, 1] - a12[owner] * dx[:, 0]) / det[owner]
        self.owner = owner

    def gradient(self, f: np.ndarray) -> np.ndarray:
        df = f[self.idx] - f[self.owner]
        n = f.shape[0]
        return np.stack([
            np.bincount(self.owner, weights=self.wx * df, minlength=n),
            np.bincount(self.owner, weights=self.wy * df, minlength=n),
        ], axis=1)


# ---------------------------------------------------------------------------
# mesh file format (ASCII)
# ---------------------------------------------------------------------------

_MAGIC = "layerflow-mesh 1"


def write_mesh(path, tri: Triangulation) -> None:
    """Write a triangulation in the ASCII mesh format (17 sig. digits)."""
    with open(path, "w") as f:
        f.write(_MAGIC + "\n")
        f.write(f"nodes {tri.xy.shape[0]}\n")
        for (x, y), zb in zip(tri.xy, tri.zb):
            f.write(f"{x:.17g} {y:.17g} {zb:.17g}\n")
        f.write(f"triangles {tri.triangles.shape[0]}\n")
        for a, b, c in tri.triangles:
            f.write(f"{a} {b} {c}\n")
        f.write(f"boundary {tri.boundary_edges.shape[0]}\n")
        for (a, b), tag in zip(tri.boundary_edges, tri.boundary_tags):
            f.write(f"{a} {b} {tag}\n")


def read_mesh(path) -> Triangulation:
    """Read the ASCII mesh format written by :func:`write_mesh`."""
    with open(path) as f:
        lines = [ln.strip() for ln in f if ln.strip()]
    if not lines or lines[0] != _MAGIC:
        raise MeshError(f"{path}: not a '{_MAGIC}' file")
    k = 1

    def expect(word):
        nonlocal k
        parts = lines[k].split()
        if parts[0] != word:
            raise MeshError(f"{path}: line {k + 1}: expected '{word}', got '{parts[0]}'")
        k += 1
        return int(parts[1])

    n = expect("nodes")
    xy = np.empty((n, 2))
    zb = np.empty(n)
    for i in range(n):
        x, y, z = lines[k].split()
        xy[i] = (float(x), float(y))
        zb[i] = float(z)
        k += 1
    m = expect("triangles")
    tris = np.empty((m, 3), dtype=np.int64)
    for i in range(m):
        tris[i] = [int(v) for v in lines[k].split()]
        k += 1
    b = expect("boundary")
    bedges = np.empty((b, 2), dtype=np.int64)
    btags = []
    for i in range(b):
        a, c, tag = lines[k].split()
        bedges[i] = (int(a), int(c))
        btags.append(tag)
        k += 1
    return Triangulation(xy=xy, zb=zb, triangles=tris, boundary_edges=bedges, boundary_tags=btags)
