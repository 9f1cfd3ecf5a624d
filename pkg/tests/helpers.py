"""Shared fixtures: small camera models and simple analytic meshes."""

import numpy as np

from segfuse.depth import CameraIntrinsics
from segfuse.mesh import TriangleMesh, compute_vertex_normals


def small_camera(width=160, height=120, f=140.0):
    return CameraIntrinsics(fx=f, fy=f, cx=width / 2.0, cy=height / 2.0, width=width, height=height)


def make_plane(z=2.0, half=1.0, n=2, normal_toward_camera=True):
    """Fronto-parallel square plane at depth z, wound with normal -z."""
    xs = np.linspace(-half, half, n + 1)
    vv, uu = np.meshgrid(xs, xs, indexing="ij")
    verts = np.stack([uu.ravel(), vv.ravel(), np.full(uu.size, z)], axis=1)
    tris = []
    for r in range(n):
        for c in range(n):
            a = r * (n + 1) + c
            b = a + 1
            d = a + (n + 1)
            e = d + 1
            if normal_toward_camera:
                tris += [[a, d, b], [b, d, e]]
            else:
                tris += [[a, b, d], [b, e, d]]
    mesh = TriangleMesh(verts, np.array(tris))
    mesh.normals = compute_vertex_normals(mesh)
    return mesh


def make_sphere(center=(0.0, 0.0, 2.0), radius=0.5, n_lat=48, n_lon=96):
    """UV sphere with outward normals and consistent winding."""
    cx, cy, cz = center
    verts = []
    for i in range(n_lat + 1):
        theta = np.pi * i / n_lat
        for j in range(n_lon):
            phi = 2 * np.pi * j / n_lon
            verts.append(
                [
                    cx + radius * np.sin(theta) * np.cos(phi),
                    cy + radius * np.sin(theta) * np.sin(phi),
                    cz + radius * np.cos(theta),
                ]
            )
    verts = np.array(verts)
    tris = []
    for i in range(n_lat):
        for j in range(n_lon):
            a = i * n_lon + j
            b = i * n_lon + (j + 1) % n_lon
            c = (i + 1) * n_lon + j
            d = (i + 1) * n_lon + (j + 1) % n_lon
            if i > 0:
                tris.append([a, c, b])
            if i < n_lat - 1:
                tris.append([b, c, d])
    mesh = TriangleMesh(verts, np.array(tris))
    normals = (verts - np.array(center)) / radius
    mesh.normals = normals
    # enforce winding agreement with outward normals
    v = mesh.vertices
    t = mesh.triangles
    fn = np.cross(v[t[:, 1]] - v[t[:, 0]], v[t[:, 2]] - v[t[:, 0]])
    ref = normals[t].mean(axis=1)
    flip = np.einsum("ij,ij->i", fn, ref) < 0
    t[flip] = t[flip][:, [0, 2, 1]]
    return mesh
