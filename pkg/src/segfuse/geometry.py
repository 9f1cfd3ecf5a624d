"""Rigid-motion primitives: SE(3) transforms, twists, 3x3 SVD, Procrustes.

Everything here is pure and allocation-light; the segmentation stage calls
``svd3`` tens of thousands of times per frame, so its inner loop runs on
plain Python floats instead of numpy temporaries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.transform import Rotation as _Rotation


def hat(w) -> np.ndarray:
    """Skew-symmetric cross-product matrix of a 3-vector."""
    x, y, z = w
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


@dataclass
class RigidTransform:
    """Rotation + translation, mapping points as R @ p + t."""

    rotation: np.ndarray
    translation: np.ndarray

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls(np.eye(3), np.zeros(3))

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Transform a (3,) point or (n, 3) point array."""
        p = np.asarray(points, dtype=float)
        return p @ self.rotation.T + self.translation

    def compose(self, other: "RigidTransform") -> "RigidTransform":
        """self ∘ other: apply ``other`` first, then ``self``."""
        return RigidTransform(
            self.rotation @ other.rotation,
            self.rotation @ other.translation + self.translation,
        )

    def __matmul__(self, other: "RigidTransform") -> "RigidTransform":
        return self.compose(other)

    def inverse(self) -> "RigidTransform":
        rt = self.rotation.T
        return RigidTransform(rt, -rt @ self.translation)

    def copy(self) -> "RigidTransform":
        return RigidTransform(self.rotation.copy(), self.translation.copy())


@dataclass
class Twist:
    """se(3) element: axis-angle rotation part ``omega`` and translation part ``v``."""

    omega: np.ndarray
    v: np.ndarray

    @classmethod
    def from_vector(cls, xi: np.ndarray) -> "Twist":
        xi = np.asarray(xi, dtype=float)
        return cls(xi[:3].copy(), xi[3:6].copy())

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.omega, self.v])


def twist_exp(xi: Twist) -> RigidTransform:
    """SE(3) exponential: Rodrigues rotation plus the coupled translation."""
    omega = np.asarray(xi.omega, dtype=float)
    v = np.asarray(xi.v, dtype=float)
    theta = math.sqrt(float(omega @ omega))
    w = hat(omega)
    w2 = w @ w
    if theta < 1e-8:
        # second-order series; exact to well below 1e-16 at this angle
        rot = np.eye(3) + w + 0.5 * w2
        vmat = np.eye(3) + 0.5 * w + w2 / 6.0
    else:
        s, c = math.sin(theta), math.cos(theta)
        rot = np.eye(3) + (s / theta) * w + ((1.0 - c) / theta**2) * w2
        vmat = np.eye(3) + ((1.0 - c) / theta**2) * w + ((theta - s) / theta**3) * w2
    return RigidTransform(rot, vmat @ v)


def twist_log(transform: RigidTransform) -> Twist:
    """Inverse of :func:`twist_exp` (rotation angle taken in [0, pi])."""
    omega = _Rotation.from_matrix(transform.rotation).as_rotvec()
    theta = math.sqrt(float(omega @ omega))
    w = hat(omega)
    w2 = w @ w
    if theta < 1e-8:
        vinv = np.eye(3) - 0.5 * w + w2 / 12.0
    else:
        s, c = math.sin(theta), math.cos(theta)
        coeff = (1.0 / theta**2) - (1.0 + c) / (2.0 * theta * s)
        vinv = np.eye(3) - 0.5 * w + coeff * w2
    return Twist(omega, vinv @ transform.translation)


@dataclass
class Svd3Result:
    """SVD of a 3x3 matrix: u @ diag(sigma) @ v.T reconstructs the input."""

    u: np.ndarray
    sigma: np.ndarray
    v: np.ndarray


def _orthonormal_tail(known):
    """Complete ``known`` orthonormal columns (list of 3-lists) to a basis."""
    if len(known) == 3:
        return known
    if len(known) == 0:
        return [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
    if len(known) == 1:
        a = known[0]
        # pick the axis least aligned with a
        k = min(range(3), key=lambda i: abs(a[i]))
        e = [0.0, 0.0, 0.0]
        e[k] = 1.0
        d = a[0] * e[0] + a[1] * e[1] + a[2] * e[2]
        b = [e[i] - d * a[i] for i in range(3)]
        nb = math.sqrt(b[0] ** 2 + b[1] ** 2 + b[2] ** 2)
        b = [x / nb for x in b]
        known = [a, b]
    a, b = known[0], known[1]
    c = [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
    return [a, b, c]


def svd3(a: np.ndarray) -> Svd3Result:
    """SVD of a 3x3 matrix by one-sided Jacobi rotations.

    Deterministic (fixed sweep order, fixed tie-breaking) so that cached
    cluster energies can be compared bit-for-bit against recomputation.
    Sign convention: when the input has non-negative determinant both
    ``u`` and ``v`` are proper rotations; the last columns are flipped in
    tandem, which leaves the reconstruction unchanged.
    """
    m = np.asarray(a, dtype=float)
    # columns of b = a @ v, updated in place
    b = [[m[0, j], m[1, j], m[2, j]] for j in range(3)]
    v = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]

    for _ in range(30):
        off = 0.0
        for p, q in ((0, 1), (0, 2), (1, 2)):
            bp, bq = b[p], b[q]
            app = bp[0] ** 2 + bp[1] ** 2 + bp[2] ** 2
            aqq = bq[0] ** 2 + bq[1] ** 2 + bq[2] ** 2
            apq = bp[0] * bq[0] + bp[1] * bq[1] + bp[2] * bq[2]
            if abs(apq) <= 1e-15 * math.sqrt(app * aqq) or apq == 0.0:
                continue
            off = max(off, abs(apq))
            theta = (aqq - app) / (2.0 * apq)
            t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(1.0 + theta * theta))
            c = 1.0 / math.sqrt(1.0 + t * t)
            s = c * t
            for col in (b, v):
                cp, cq = col[p], col[q]
                for i in range(3):
                    tp = c * cp[i] - s * cq[i]
                    cq[i] = s * cp[i] + c * cq[i]
                    cp[i] = tp
        if off == 0.0:
            break

    norms = [math.sqrt(b[j][0] ** 2 + b[j][1] ** 2 + b[j][2] ** 2) for j in range(3)]
    order = sorted(range(3), key=lambda j: (-norms[j], j))
    sigma = [norms[j] for j in order]
    vcols = [[v[j][i] for i in range(3)] for j in order]

    tiny = 1e-13 * max(sigma[0], 1e-300)
    ucols_known = []
    for rank, j in enumerate(order):
        if sigma[rank] > tiny:
            ucols_known.append([b[j][i] / norms[j] for i in range(3)])
        else:
            break
    ucols = _orthonormal_tail(ucols_known)

    u = np.array(ucols).T
    vm = np.array(vcols).T
    if np.linalg.det(u) < 0.0:
        # flipping the paired last columns keeps u @ diag(sigma) @ v.T intact
        u[:, 2] *= -1.0
        vm[:, 2] *= -1.0
    return Svd3Result(u, np.array(sigma), vm)


def rigid_fit_energy_terms(svd: Svd3Result) -> float:
    """Rotation-corrected nuclear sum sigma1 + sigma2 +/- sigma3.

    The minus branch applies when the best proper rotation has to give up
    the smallest singular direction (mirrored point sets); using it keeps
    the closed-form cluster energy equal to the explicit residual.
    """
    d = np.linalg.det(svd.v) * np.linalg.det(svd.u)
    sign = 1.0 if d >= 0.0 else -1.0
    return float(svd.sigma[0] + svd.sigma[1] + sign * svd.sigma[2])


def procrustes(src: np.ndarray, dst: np.ndarray) -> tuple[RigidTransform, Svd3Result]:
    """Best rigid transform mapping ``src`` onto ``dst`` (least squares).

    Returns the transform together with the SVD of the cross-covariance
    so callers can form the optimal alignment energy without a second
    decomposition.  Rank-deficient inputs (single points, collinear sets)
    are legal; the determinant correction keeps the result a rotation.
    """
    src = np.asarray(src, dtype=float).reshape(-1, 3)
    dst = np.asarray(dst, dtype=float).reshape(-1, 3)
    if src.shape[0] == 0 or src.shape != dst.shape:
        raise ValueError("empty cluster")
    c = src.mean(axis=0)
    ct = dst.mean(axis=0)
    cov = (src - c).T @ (dst - ct)
    svd = svd3(cov)
    d = np.linalg.det(svd.v @ svd.u.T)
    rot = svd.v @ np.diag([1.0, 1.0, d]) @ svd.u.T
    return RigidTransform(rot, ct - rot @ c), svd
