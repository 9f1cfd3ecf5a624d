"""Reconstruction of deforming articulated objects from depth sequences.

Fuses a depth stream into a canonical TSDF volume while solving, per frame,
a two-level rigid-transform warp field (one transform per motion cluster,
then one per deformation node) and a motion-based segmentation of the
deformation node graph.
"""

__version__ = "0.1.0"

from segfuse.geometry import RigidTransform, Twist, procrustes, svd3, twist_exp, twist_log

__all__ = [
    "RigidTransform",
    "Twist",
    "twist_exp",
    "twist_log",
    "svd3",
    "procrustes",
]
