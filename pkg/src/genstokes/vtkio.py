"""Legacy ASCII VTK output of discrete solutions.

Writes an unstructured grid of quadratic tetrahedra over the full quadratic
nodal set (vertices plus edge midpoints).  Velocity is a point vector
array; the vertex-based pressure is extended to midpoints by averaging the
edge endpoints; the per-cell positivity samples go out as cell data.
"""

from __future__ import annotations

import numpy as np

__all__ = ["write_vtk"]

# quadratic-tet midside order expected by VTK: (0,1),(1,2),(0,2),(0,3),(1,3),(2,3);
# local storage order is (0,1),(0,2),(0,3),(1,2),(1,3),(2,3)
_VTK_NODE_ORDER = [0, 1, 2, 3, 4 + 0, 4 + 3, 4 + 1, 4 + 2, 4 + 4, 4 + 5]


def _fmt(v: float) -> str:
    return f"{v:.12g}"


def write_vtk(path, space, velocity: np.ndarray, pressure: np.ndarray,
              alpha_cells=None, title: str = "genstokes solution") -> None:
    mesh = space.mesh
    pts = space.scalar_nodes
    n_pts = pts.shape[0]
    vel = np.asarray(velocity, dtype=float).reshape(n_pts, 3)

    p_nodes = np.empty(n_pts)
    p_nodes[: mesh.n_vertices] = pressure
    p_nodes[mesh.n_vertices:] = 0.5 * (
        pressure[mesh.edges[:, 0]] + pressure[mesh.edges[:, 1]]
    )

    cells = space.tet_nodes[:, _VTK_NODE_ORDER]
    nt = cells.shape[0]

    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# vtk DataFile Version 3.0\n")
        fh.write(title + "\n")
        fh.write("ASCII\n")
        fh.write("DATASET UNSTRUCTURED_GRID\n")
        fh.write(f"POINTS {n_pts} double\n")
        for p in pts:
            fh.write(f"{_fmt(p[0])} {_fmt(p[1])} {_fmt(p[2])}\n")
        fh.write(f"CELLS {nt} {nt * 11}\n")
        for row in cells:
            fh.write("10 " + " ".join(str(int(i)) for i in row) + "\n")
        fh.write(f"CELL_TYPES {nt}\n")
        for _ in range(nt):
            fh.write("24\n")
        if alpha_cells is not None:
            fh.write(f"CELL_DATA {nt}\n")
            fh.write("SCALARS alpha double 1\nLOOKUP_TABLE default\n")
            for a in np.asarray(alpha_cells, dtype=float):
                fh.write(_fmt(a) + "\n")
        fh.write(f"POINT_DATA {n_pts}\n")
        fh.write("VECTORS velocity double\n")
        for v in vel:
            fh.write(f"{_fmt(v[0])} {_fmt(v[1])} {_fmt(v[2])}\n")
        fh.write("SCALARS pressure double 1\nLOOKUP_TABLE default\n")
        for p in p_nodes:
            fh.write(_fmt(p) + "\n")
