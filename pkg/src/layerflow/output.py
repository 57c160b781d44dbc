"""Field snapshots (legacy VTK ASCII), gauge series, and run summaries."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .layers import LayerConfig, State, vertical_velocity
from .mesh import Mesh, GreenGaussGradient


def write_vtk(path, state: State, gg: GreenGaussGradient | None = None) -> None:
    """Point data: h, eta, zb, and per-layer u_a, v_a, w_a (w from the
    post-processing reconstruction). 17 significant digits so a reload
    reproduces the state to rounding."""
    mesh = state.mesh
    u, v = state.velocities()
    w = vertical_velocity(state, gg)
    n = mesh.n_nodes
    m = mesh.triangles.shape[0]
    with open(path, "w") as f:
        f.write("# vtk DataFile Version 3.0\n")
        f.write(f"layerflow fields t={state.t:.17g} layers={state.layers.n}\n")
        f.write("ASCII\nDATASET UNSTRUCTURED_GRID\n")
        f.write(f"POINTS {n} double\n")
        for (x, y), zb in zip(mesh.xy, state.zb):
            f.write(f"{x:.17g} {y:.17g} {zb:.17g}\n")
        f.write(f"CELLS {m} {4 * m}\n")
        for a, b, c in mesh.triangles:
            f.write(f"3 {a} {b} {c}\n")
        f.write(f"CELL_TYPES {m}\n")
        f.write("\n".join(["5"] * m) + "\n")
        f.write(f"POINT_DATA {n}\n")

        def scalars(name, vals):
            f.write(f"SCALARS {name} double\nLOOKUP_TABLE default\n")
            f.write("\n".join(f"{x:.17g}" for x in vals) + "\n")

        scalars("h", state.h)
        scalars("eta", state.surface())
        scalars("zb", state.zb)
        for a in range(state.layers.n):
            scalars(f"u_{a + 1}", u[a])
            scalars(f"v_{a + 1}", v[a])
            scalars(f"w_{a + 1}", w[a])


def read_vtk_state(path, mesh: Mesh, layers: LayerConfig, h_dry: float = 1e-8) -> State:
    """Reload a snapshot written by :func:`write_vtk` as an initial state."""
    with open(path) as f:
        lines = f.read().splitlines()
    title = lines[1]
    t = 0.0
    for tok in title.split():
        if tok.startswith("t="):
            t = float(tok[2:])
    fields = {}
    k = 0
    npts = None
    while k < len(lines):
        parts = lines[k].split()
        if parts[:1] == ["POINTS"]:
            npts = int(parts[1])
            if npts != mesh.n_nodes:
                raise ValueError(f"{path}: snapshot has {npts} points, mesh has {mesh.n_nodes}")
        if parts[:1] == ["SCALARS"]:
            name = parts[1]
            vals = np.array([float(v) for v in lines[k + 2:k + 2 + npts]])
            fields[name] = vals
            k += 2 + npts
            continue
        k += 1
    h = fields["h"]
    st = State.zeros(mesh, layers, t)
    st.h[:] = h
    st.h_dry = h_dry
    if "zb" in fields:
        st.zb = fields["zb"]
    hl = st.layer_heights()
    for a in range(layers.n):
        st.qx[a] = hl[a] * fields.get(f"u_{a + 1}", np.zeros_like(h))
        st.qy[a] = hl[a] * fields.get(f"v_{a + 1}", np.zeros_like(h))
    dry = st.h <= h_dry
    st.qx[:, dry] = 0.0
    st.qy[:, dry] = 0.0
    return st


class GaugeWriter:
    """CSV rows `t, h, eta, u_1..u_N, v_1..v_N` per probe point; probes
    map to the nearest dual cell (piecewise-constant sampling). Dry cells
    emit h = 0 rows."""

    def __init__(self, outdir, mesh: Mesh, layers: LayerConfig, points: np.ndarray, stride: int = 1):
        self.stride = max(1, stride)
        self._count = 0
        self.nodes = []
        self.files = []
        self.writers = []
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        for k, (x, y) in enumerate(np.atleast_2d(points)):
            d2 = (mesh.xy[:, 0] - x) ** 2 + (mesh.xy[:, 1] - y) ** 2
            node = int(np.argmin(d2))
            if np.sqrt(d2[node]) > 2.0 * mesh.avg_edge_length:
                raise ValueError(f"gauge point ({x}, {y}) lies outside the meshed domain")
            self.nodes.append(node)
            fh = open(outdir / f"gauge_{k}.csv", "w", newline="")
            wr = csv.writer(fh)
            wr.writerow(["t", "h", "eta"] + [f"u_{a + 1}" for a in range(layers.n)]
                        + [f"v_{a + 1}" for a in range(layers.n)])
            self.files.append(fh)
            self.writers.append(wr)

    def record(self, state: State, force: bool = False):
        if not force and self._count % self.stride:
            self._count += 1
            return
        self._count += 1
        u, v = state.velocities()
        for node, wr in zip(self.nodes, self.writers):
            h = state.h[node]
            row = [state.t, h if h > state.h_dry else 0.0, state.zb[node] + h]
            row += [u[a, node] for a in range(state.layers.n)]
            row += [v[a, node] for a in range(state.layers.n)]
            wr.writerow([f"{x:.12g}" for x in row])

    def close(self):
        for fh in self.files:
            fh.close()


class SummaryWriter:
    """Per-step mass/energy/min-depth/dt history plus final aggregates."""

    def __init__(self, path):
        self.path = Path(path)
        self.rows = []

    def record(self, state: State, dt: float, g: float):
        from .layers import total_mass, energy
        _, etot = energy(state, g)
        self.rows.append((state.t, dt, total_mass(state), etot,
                          float(state.h.min()), float(np.abs(state.qx).max() + np.abs(state.qy).max())))

    def write(self):
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with open(self.path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["t", "dt", "mass", "energy", "min_h", "max_momentum"])
            for row in self.rows:
                wr.writerow([f"{x:.12g}" for x in row])

    def as_arrays(self):
        a = np.asarray(self.rows)
        return {k: a[:, i] for i, k in enumerate(["t", "dt", "mass", "energy", "min_h", "max_momentum"])}


def write_convergence_csv(path, rows):
    """rows: (label, size, nodes, layers, order, error)."""
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["mesh", "avg_edge_length", "nodes", "layers", "order", "l2_error"])
        for row in rows:
            wr.writerow(row)
