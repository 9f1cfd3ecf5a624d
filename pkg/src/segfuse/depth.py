"""Depth frames: synthetic rendering, preprocessing, and the contour distance transform.

Camera convention: pinhole looking down +z, x right, y down, units meters.
Pixel (u, v) = (column, row); a depth image stores, at integer (u, v), the
z of the surface hit by the ray through that exact pixel coordinate, so
``back_project`` is an exact inverse of rendering.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage

from segfuse.geometry import RigidTransform
from segfuse.mesh import TriangleMesh


@dataclass
class CameraIntrinsics:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int


@dataclass
class DepthFrame:
    depth: np.ndarray  # (height, width), meters, 0 = invalid/background
    intrinsics: CameraIntrinsics
    frame_index: int = 0
    normals: np.ndarray | None = None  # (height, width, 3), filled by compute_normals


@dataclass
class DistanceTransformImage:
    """Euclidean distance (pixels) to the nearest foreground-contour pixel.

    ``nearest[v, u]`` holds the (row, col) of that contour pixel.
    """

    dt: np.ndarray
    nearest: np.ndarray


def back_project(pixel, depth: float, intrinsics: CameraIntrinsics) -> np.ndarray:
    if depth <= 0:
        raise ValueError("invalid depth")
    u, v = pixel
    return np.array(
        [
            (u - intrinsics.cx) * depth / intrinsics.fx,
            (v - intrinsics.cy) * depth / intrinsics.fy,
            depth,
        ]
    )


def back_project_grid(frame: DepthFrame) -> np.ndarray:
    """All pixels to camera space; invalid pixels map to (0, 0, 0)."""
    k = frame.intrinsics
    vv, uu = np.mgrid[0 : k.height, 0 : k.width]
    d = frame.depth
    return np.stack(
        [(uu - k.cx) * d / k.fx, (vv - k.cy) * d / k.fy, d], axis=-1
    )


def project(points: np.ndarray, intrinsics: CameraIntrinsics):
    """Camera-space points to float pixel coordinates; returns (u, v, z)."""
    p = np.asarray(points, dtype=float).reshape(-1, 3)
    z = p[:, 2]
    u = intrinsics.fx * p[:, 0] / z + intrinsics.cx
    v = intrinsics.fy * p[:, 1] / z + intrinsics.cy
    return u, v, z


_Z_NEAR = 1e-6
_BARY_TOL = 1e-9


def _raster_batch(zbuf, tri_uvz, lo, hi, pad, width):
    """Scatter-min one batch of triangles with bounding boxes <= pad pixels."""
    (ua, va, za), (ub, vb, zb), (uc, vc, zc) = tri_uvz
    n = ua.shape[0]
    du = np.arange(pad)
    uu = lo[:, 0][:, None, None] + du[None, None, :]
    vv = lo[:, 1][:, None, None] + du[None, :, None]
    valid = (uu <= hi[:, 0][:, None, None]) & (vv <= hi[:, 1][:, None, None])

    def col(x):
        return x[:, None, None]

    denom = (vb - vc) * (ua - uc) + (uc - ub) * (va - vc)
    good = np.abs(denom) > 1e-14
    denom = np.where(good, denom, 1.0)
    l0 = ((col(vb - vc)) * (uu - col(uc)) + col(uc - ub) * (vv - col(vc))) / col(denom)
    l1 = ((col(vc - va)) * (uu - col(uc)) + col(ua - uc) * (vv - col(vc))) / col(denom)
    l2 = 1.0 - l0 - l1
    inside = (
        valid
        & col(good)
        & (l0 >= -_BARY_TOL)
        & (l1 >= -_BARY_TOL)
        & (l2 >= -_BARY_TOL)
    )
    inv_z = l0 / col(za) + l1 / col(zb) + l2 / col(zc)
    inside &= inv_z > 0
    if not inside.any():
        return
    flat = (vv * width + uu)[inside]
    np.minimum.at(zbuf, flat, 1.0 / inv_z[inside])


def render_depth(
    mesh: TriangleMesh, pose: RigidTransform, intrinsics: CameraIntrinsics
) -> DepthFrame:
    """Software z-buffer rasterization of the mesh into a depth image.

    Depth is sampled at integer pixel coordinates with perspective-correct
    interpolation (equivalent to exact ray/triangle-plane intersection).
    Back-facing triangles are culled by winding, so meshes must be wound
    consistently with outward normals (see :func:`segfuse.mesh.orient_triangles`).
    """
    k = intrinsics
    zbuf = np.full(k.height * k.width, np.inf)
    verts = pose.apply(mesh.vertices)
    tris = mesh.triangles
    if tris.shape[0] > 0:
        a, b, c = verts[tris[:, 0]], verts[tris[:, 1]], verts[tris[:, 2]]
        keep = (a[:, 2] > _Z_NEAR) & (b[:, 2] > _Z_NEAR) & (c[:, 2] > _Z_NEAR)
        fn = np.cross(b - a, c - a)
        keep &= np.einsum("ij,ij->i", fn, a) < 0  # front-facing only
        if keep.any():
            a, b, c = a[keep], b[keep], c[keep]
            uvz = []
            for p in (a, b, c):
                u = k.fx * p[:, 0] / p[:, 2] + k.cx
                v = k.fy * p[:, 1] / p[:, 2] + k.cy
                uvz.append((u, v, p[:, 2]))
            us = np.stack([t[0] for t in uvz])
            vs = np.stack([t[1] for t in uvz])
            lo = np.stack(
                [
                    np.clip(np.ceil(us.min(axis=0) - _BARY_TOL), 0, k.width - 1),
                    np.clip(np.ceil(vs.min(axis=0) - _BARY_TOL), 0, k.height - 1),
                ],
                axis=1,
            ).astype(np.int64)
            hi = np.stack(
                [
                    np.clip(np.floor(us.max(axis=0) + _BARY_TOL), 0, k.width - 1),
                    np.clip(np.floor(vs.max(axis=0) + _BARY_TOL), 0, k.height - 1),
                ],
                axis=1,
            ).astype(np.int64)
            span = (hi - lo).max(axis=1) + 1
            nonempty = (hi[:, 0] >= lo[:, 0]) & (hi[:, 1] >= lo[:, 1])
            for pad in (4, 16, 64):
                lo_cut = 0 if pad == 4 else pad // 4
                sel = nonempty & (span > lo_cut) & (span <= pad)
                if sel.any():
                    batch = tuple(
                        (t[0][sel], t[1][sel], t[2][sel]) for t in uvz
                    )
                    _raster_batch(zbuf, batch, lo[sel], hi[sel], pad, k.width)
            big = nonempty & (span > 64)
            for i in np.flatnonzero(big):
                batch = tuple(
                    (t[0][i : i + 1], t[1][i : i + 1], t[2][i : i + 1]) for t in uvz
                )
                pad = int(span[i])
                _raster_batch(zbuf, batch, lo[i : i + 1], hi[i : i + 1], pad, k.width)

    depth = np.where(np.isfinite(zbuf), zbuf, 0.0).reshape(k.height, k.width)
    return DepthFrame(depth, intrinsics)


def bilateral_filter(
    frame: DepthFrame, sigma_space: float, sigma_depth: float
) -> DepthFrame:
    """Joint spatial/range Gaussian smoothing; invalid pixels stay invalid."""
    if sigma_space <= 0 or sigma_depth <= 0:
        raise ValueError("sigmas must be positive")
    d = frame.depth
    valid = d > 0
    r = max(1, int(math.ceil(2.0 * sigma_space)))
    h, w = d.shape
    num = np.zeros_like(d)
    den = np.zeros_like(d)
    for dy in range(-r, r + 1):
        for dx in range(-r, r + 1):
            ws = math.exp(-(dx * dx + dy * dy) / (2.0 * sigma_space**2))
            ys0, ys1 = max(0, -dy), min(h, h - dy)
            xs0, xs1 = max(0, -dx), min(w, w - dx)
            dst = (slice(ys0, ys1), slice(xs0, xs1))
            src = (slice(ys0 + dy, ys1 + dy), slice(xs0 + dx, xs1 + dx))
            d2 = d[src]
            wgt = (
                ws
                * np.exp(-((d2 - d[dst]) ** 2) / (2.0 * sigma_depth**2))
                * valid[src]
            )
            num[dst] += wgt * d2
            den[dst] += wgt
    out = np.zeros_like(d)
    ok = valid & (den > 0)
    out[ok] = num[ok] / den[ok]
    return DepthFrame(out, frame.intrinsics, frame.frame_index)


def compute_normals(frame: DepthFrame) -> np.ndarray:
    """Per-pixel unit normals from central differences, oriented toward the camera.

    A pixel gets a normal only if it and its four neighbors are valid;
    elsewhere the normal is (0, 0, 0).
    """
    pts = back_project_grid(frame)
    valid = frame.depth > 0
    h, w = frame.depth.shape
    n = np.zeros((h, w, 3))
    inner = (slice(1, h - 1), slice(1, w - 1))
    ok = (
        valid[inner]
        & valid[1:-1, 2:]
        & valid[1:-1, :-2]
        & valid[2:, 1:-1]
        & valid[:-2, 1:-1]
    )
    tu = pts[1:-1, 2:] - pts[1:-1, :-2]
    tv = pts[2:, 1:-1] - pts[:-2, 1:-1]
    cr = np.cross(tu, tv)
    lens = np.linalg.norm(cr, axis=-1)
    ok &= lens > 0
    cr[~ok] = 0
    lens[~ok] = 1.0
    cr /= lens[..., None]
    flip = cr[..., 2] > 0
    cr[flip] = -cr[flip]
    n[inner] = cr
    frame.normals = n
    return n


def foreground_mask(frame: DepthFrame, max_range: float = 5.0) -> np.ndarray:
    return (frame.depth > 0) & (frame.depth <= max_range)


def distance_transform(
    frame: DepthFrame, max_range: float = 5.0
) -> DistanceTransformImage:
    """Exact Euclidean DT to the foreground contour, with a nearest-pixel map.

    Contour pixels are foreground pixels 4-adjacent to background (image
    border counts as background).
    """
    fg = foreground_mask(frame, max_range)
    if not fg.any():
        raise ValueError("no foreground")
    padded = np.pad(fg, 1, constant_values=False)
    nb_bg = (
        ~padded[:-2, 1:-1] | ~padded[2:, 1:-1] | ~padded[1:-1, :-2] | ~padded[1:-1, 2:]
    )
    contour = fg & nb_bg
    dt, (ind_r, ind_c) = ndimage.distance_transform_edt(
        ~contour, return_indices=True
    )
    nearest = np.stack([ind_r, ind_c], axis=-1).astype(np.int32)
    return DistanceTransformImage(dt, nearest)


# ---------------------------------------------------------------------------
# On-disk sequence format: one 16-bit little-endian raw file per frame in
# millimeters, row-major, plus a key=value manifest.


def write_manifest(path, intrinsics: CameraIntrinsics, n_frames: int, pattern: str):
    with open(path, "w") as f:
        f.write(f"width={int(intrinsics.width)}\n")
        f.write(f"height={int(intrinsics.height)}\n")
        f.write(f"fx={float(intrinsics.fx)!r}\n")
        f.write(f"fy={float(intrinsics.fy)!r}\n")
        f.write(f"cx={float(intrinsics.cx)!r}\n")
        f.write(f"cy={float(intrinsics.cy)!r}\n")
        f.write(f"frames={n_frames}\n")
        f.write(f"pattern={pattern}\n")


def read_manifest(path) -> dict:
    out = {}
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition("=")
        out[key.strip()] = value.strip()
    return out


def quantize_depth(depth: np.ndarray) -> np.ndarray:
    """Meters to the on-disk uint16 millimeter representation."""
    return np.clip(np.round(depth * 1000.0), 0, 65535).astype("<u2")


def write_sequence(dirpath, frames, pattern="depth_%04d.raw"):
    dirpath = Path(dirpath)
    dirpath.mkdir(parents=True, exist_ok=True)
    for i, frame in enumerate(frames):
        quantize_depth(frame.depth).tofile(dirpath / (pattern % i))
    first = frames[0]
    write_manifest(dirpath / "manifest.txt", first.intrinsics, len(frames), pattern)


class DepthSequenceReader:
    """Random access to a raw depth sequence directory."""

    def __init__(self, dirpath):
        self.dir = Path(dirpath)
        m = read_manifest(self.dir / "manifest.txt")
        self.intrinsics = CameraIntrinsics(
            fx=float(m["fx"]),
            fy=float(m["fy"]),
            cx=float(m["cx"]),
            cy=float(m["cy"]),
            width=int(m["width"]),
            height=int(m["height"]),
        )
        self.n_frames = int(m["frames"])
        self.pattern = m["pattern"]

    def __len__(self):
        return self.n_frames

    def read(self, index: int) -> DepthFrame:
        if not 0 <= index < self.n_frames:
            raise IndexError(index)
        raw = np.fromfile(self.dir / (self.pattern % index), dtype="<u2")
        k = self.intrinsics
        depth = raw.reshape(k.height, k.width).astype(float) / 1000.0
        return DepthFrame(depth, k, frame_index=index)
