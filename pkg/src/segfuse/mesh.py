"""Triangle mesh container and ASCII PLY/OBJ export."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class TriangleMesh:
    vertices: np.ndarray  # (n, 3) float, meters
    triangles: np.ndarray  # (m, 3) int vertex indices
    normals: np.ndarray | None = None  # (n, 3) unit vectors

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float).reshape(-1, 3)
        self.triangles = np.asarray(self.triangles, dtype=np.int32).reshape(-1, 3)
        if self.normals is not None:
            self.normals = np.asarray(self.normals, dtype=float).reshape(-1, 3)

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_triangles(self) -> int:
        return self.triangles.shape[0]

    def copy(self) -> "TriangleMesh":
        return TriangleMesh(
            self.vertices.copy(),
            self.triangles.copy(),
            None if self.normals is None else self.normals.copy(),
        )


def compute_vertex_normals(mesh: TriangleMesh) -> np.ndarray:
    """Area-weighted vertex normals from triangle winding."""
    v = mesh.vertices
    t = mesh.triangles
    fn = np.cross(v[t[:, 1]] - v[t[:, 0]], v[t[:, 2]] - v[t[:, 0]])
    normals = np.zeros_like(v)
    for k in range(3):
        np.add.at(normals, t[:, k], fn)
    lens = np.linalg.norm(normals, axis=1)
    lens[lens == 0] = 1.0
    return normals / lens[:, None]


def orient_triangles(mesh: TriangleMesh) -> TriangleMesh:
    """Flip triangle winding wherever it disagrees with the stored vertex normals."""
    if mesh.normals is None:
        return mesh
    v = mesh.vertices
    t = mesh.triangles.copy()
    fn = np.cross(v[t[:, 1]] - v[t[:, 0]], v[t[:, 2]] - v[t[:, 0]])
    ref = (mesh.normals[t[:, 0]] + mesh.normals[t[:, 1]] + mesh.normals[t[:, 2]]) / 3.0
    flip = np.einsum("ij,ij->i", fn, ref) < 0
    t[flip] = t[flip][:, [0, 2, 1]]
    return TriangleMesh(v, t, mesh.normals)


def save_ply(mesh: TriangleMesh, path) -> None:
    normals = mesh.normals
    if normals is None:
        normals = compute_vertex_normals(mesh)
    with open(path, "w") as f:
        f.write("ply\nformat ascii 1.0\n")
        f.write(f"element vertex {mesh.n_vertices}\n")
        f.write("property float x\nproperty float y\nproperty float z\n")
        f.write("property float nx\nproperty float ny\nproperty float nz\n")
        f.write(f"element face {mesh.n_triangles}\n")
        f.write("property list uchar int vertex_indices\n")
        f.write("end_header\n")
        for p, n in zip(mesh.vertices, normals):
            f.write(f"{p[0]:.6f} {p[1]:.6f} {p[2]:.6f} {n[0]:.6f} {n[1]:.6f} {n[2]:.6f}\n")
        for tri in mesh.triangles:
            f.write(f"3 {tri[0]} {tri[1]} {tri[2]}\n")


def save_obj(mesh: TriangleMesh, path) -> None:
    normals = mesh.normals
    if normals is None:
        normals = compute_vertex_normals(mesh)
    with open(path, "w") as f:
        for p in mesh.vertices:
            f.write(f"v {p[0]:.6f} {p[1]:.6f} {p[2]:.6f}\n")
        for n in normals:
            f.write(f"vn {n[0]:.6f} {n[1]:.6f} {n[2]:.6f}\n")
        for tri in mesh.triangles:
            a, b, c = tri + 1
            f.write(f"f {a}//{a} {b}//{b} {c}//{c}\n")


def load_ply(path) -> TriangleMesh:
    """Read back the ASCII PLY written by :func:`save_ply`."""
    with open(path) as f:
        lines = f.read().splitlines()
    n_vert = n_face = 0
    i = 0
    while lines[i] != "end_header":
        parts = lines[i].split()
        if parts[:2] == ["element", "vertex"]:
            n_vert = int(parts[2])
        elif parts[:2] == ["element", "face"]:
            n_face = int(parts[2])
        i += 1
    i += 1
    vdata = np.array([[float(x) for x in lines[i + j].split()] for j in range(n_vert)])
    fdata = np.array(
        [[int(x) for x in lines[i + n_vert + j].split()[1:4]] for j in range(n_face)],
        dtype=np.int32,
    ).reshape(-1, 3)
    return TriangleMesh(vdata[:, :3], fdata, vdata[:, 3:6] if vdata.shape[1] >= 6 else None)
