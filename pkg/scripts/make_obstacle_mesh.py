"""Generate the channel-with-obstacle mesh fixture (needs the `triangle` package).

The unit square with a circular hole of radius 0.1 at (0.5, 0.5) is meshed
with 64 boundary segments per side and 88 on the circle, a 31 degree minimum
angle and a fixed maximum cell area.  The defaults give 6531 vertices and
12718 cells.  ``--cells N`` instead searches the area bound for N cells.

    python scripts/make_obstacle_mesh.py --out src/egstokes/data/obstacle.msh
"""
import argparse

import numpy as np
import triangle

from egstokes.mesh import BoundarySpec, Mesh, write_mesh_file


def geometry(n_side: int, n_circle: int, radius: float = 0.1):
    t = np.linspace(0.0, 1.0, n_side + 1)[:-1]
    outer = np.concatenate([
        np.column_stack([t, np.zeros_like(t)]),
        np.column_stack([np.ones_like(t), t]),
        np.column_stack([1.0 - t, np.ones_like(t)]),
        np.column_stack([np.zeros_like(t), 1.0 - t]),
    ])
    phi = 2.0 * np.pi * np.arange(n_circle) / n_circle
    circle = 0.5 + radius * np.column_stack([np.cos(phi), np.sin(phi)])
    n_out = len(outer)
    seg_out = np.column_stack([np.arange(n_out), (np.arange(n_out) + 1) % n_out])
    seg_c = n_out + np.column_stack([np.arange(n_circle), (np.arange(n_circle) + 1) % n_circle])
    return {
        "vertices": np.vstack([outer, circle]),
        "segments": np.vstack([seg_out, seg_c]),
        "holes": np.array([[0.5, 0.5]]),
    }


def build(max_area: float, n_side: int, n_circle: int, min_angle: float = 31.0):
    out = triangle.triangulate(geometry(n_side, n_circle), f"pq{min_angle:g}Qa{max_area:.10f}Y")
    return out["vertices"], out["triangles"]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--cells", type=int, default=None)
    ap.add_argument("--max-area", type=float, default=1.229073e-4)
    ap.add_argument("--min-angle", type=float, default=31.0)
    ap.add_argument("--n-side", type=int, default=64)
    ap.add_argument("--n-circle", type=int, default=88)
    ap.add_argument("--out", default="obstacle.msh")
    args = ap.parse_args()

    best = build(args.max_area, args.n_side, args.n_circle, args.min_angle)
    lo, hi = 1e-5, 1e-3
    for _ in range(60 if args.cells else 0):
        mid = np.sqrt(lo * hi)
        v, c = build(mid, args.n_side, args.n_circle, args.min_angle)
        if abs(len(c) - args.cells) < abs(len(best[1]) - args.cells):
            best = (v, c)
        if len(c) == args.cells:
            break
        if len(c) > args.cells:
            lo = mid
        else:
            hi = mid
    v, c = best
    mesh = Mesh(v, c, BoundarySpec.all_dirichlet())
    area = 1.0 - float(mesh.cell_areas.sum())
    write_mesh_file(args.out, mesh, area=float(mesh.cell_areas.sum()))
    print(f"{mesh.n_vertices} vertices, {mesh.n_cells} cells, hole area deficit {area:.6f}; "
          f"velocity DoFs {2 * mesh.n_vertices + mesh.n_cells}, pressure DoFs {mesh.n_cells}")


if __name__ == "__main__":
    main()
