"""The inspiration leaf and per-leaf deformation/pose mathematics.

Template convention: petiole base at the origin, blade extending along +x
in the xy plane, upper surface facing +z. All deformation happens in that
local frame; `leaf_local_to_world` then applies the rigid pose.

The bundled template is a checked-in plain-text mesh produced by
`build_leaf_template` (an ovate outline lofted over a midrib arch). It
stands in for a hand-traced leaf and is documented as replaceable: any
mesh following the convention above can be passed instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .mesh import TriangleMesh, compute_vertex_normals, load_mesh, validate_mesh


@dataclass(frozen=True)
class LeafDeformParams:
    """One leaf's sampled deformation and pose."""

    scale_x: float = 1.0
    scale_y: float = 1.0
    scale_z: float = 1.0
    bend_curl: float = 0.0        # radians of total midrib arc
    yaw: float = 0.0              # rotation about z
    pitch: float = 0.0            # rotation about y
    roll: float = 0.0             # rotation about x
    anchor: tuple[float, float, float] = (0.0, 0.0, 0.0)


def rotation_matrix_xyz(roll: float, pitch: float, yaw: float) -> np.ndarray:
    """Composition Rz(yaw) @ Ry(pitch) @ Rx(roll).

    Equivalent to applying roll, then pitch, then yaw about the fixed
    world axes; this order is part of the artifact contract.
    """
    cr, sr = math.cos(roll), math.sin(roll)
    cp, sp = math.cos(pitch), math.sin(pitch)
    cy, sy = math.cos(yaw), math.sin(yaw)
    rx = np.array([[1, 0, 0], [0, cr, -sr], [0, sr, cr]], dtype=np.float64)
    ry = np.array([[cp, 0, sp], [0, 1, 0], [-sp, 0, cp]], dtype=np.float64)
    rz = np.array([[cy, -sy, 0], [sy, cy, 0], [0, 0, 1]], dtype=np.float64)
    return rz @ ry @ rx


def blade_length(mesh: TriangleMesh) -> float:
    """Template length along the midrib (+x extent)."""
    return float(mesh.vertices[:, 0].max() - mesh.vertices[:, 0].min())


def _half_width_profile(s: np.ndarray, length: float) -> np.ndarray:
    # narrow petiole ramping into an ovate blade, widest just past midway
    petiole_end = 0.18
    petiole = 0.015 * length * np.clip(s / 0.04, 0.35, 1.0)
    q = np.clip((s - petiole_end) / (1.0 - petiole_end), 0.0, 1.0)
    blade = 0.28 * length * np.sin(math.pi * q) ** 0.7
    return np.maximum(petiole, blade)


def build_leaf_template(length: float = 1.0, rows: int = 13, cols: int = 7,
                        arch_height: float = 0.05, cup: float = 0.3) -> TriangleMesh:
    """Construct the inspiration-leaf mesh (the generator of the bundled asset).

    A single base vertex fans into `rows` cross-sections of `cols` points
    and closes with a tip vertex; z carries a gentle midrib arch plus an
    upward curl of the blade edges. u runs base-to-tip, v across the blade.
    """
    if rows < 2 or cols < 3:
        raise ValueError("need rows >= 2 and cols >= 3")
    s_rows = np.linspace(0.0, 1.0, rows + 2)[1:-1]
    tau = np.linspace(-1.0, 1.0, cols)

    verts = [(0.0, 0.0, 0.0)]
    uvs = [(0.0, 0.5)]
    for s in s_rows:
        w = _half_width_profile(np.array([s]), length)[0]
        arch = arch_height * length * math.sin(math.pi * s)
        for t in tau:
            z = arch + cup * w * t * t
            verts.append((length * s, w * t, z))
            uvs.append((s, (t + 1.0) / 2.0))
    verts.append((length, 0.0, 0.0))
    uvs.append((1.0, 0.5))
    tip = len(verts) - 1

    def rc(i: int, j: int) -> int:
        return 1 + i * cols + j

    faces = []
    for j in range(cols - 1):
        faces.append((0, rc(0, j), rc(0, j + 1)))
    for i in range(rows - 1):
        for j in range(cols - 1):
            a, b = rc(i, j), rc(i, j + 1)
            c, d = rc(i + 1, j + 1), rc(i + 1, j)
            faces.append((a, d, c))
            faces.append((a, c, b))
    for j in range(cols - 1):
        faces.append((tip, rc(rows - 1, j + 1), rc(rows - 1, j)))

    mesh = TriangleMesh(np.array(verts), np.array(faces, dtype=np.int32), np.array(uvs))
    validate_mesh(mesh)
    return mesh


def load_leaf_template(path: str | Path | None = None) -> TriangleMesh:
    """Load a leaf template mesh; None loads the bundled asset."""
    if path is not None:
        return load_mesh(path)
    ref = resources.files("rosette").joinpath("assets/leaf_template.mesh")
    with resources.as_file(ref) as asset_path:
        return load_mesh(asset_path)


def deform_leaf(template: TriangleMesh, params: LeafDeformParams) -> TriangleMesh:
    """Scale each axis independently, then bend the midrib into a circular arc.

    The bend treats x as arc length: the midrib of (scaled) length L maps
    onto an arc of radius L/bend_curl subtending bend_curl radians, and
    each vertex keeps its height offset along the rotated local normal.
    UVs are untouched, so textures stretch with the geometry.
    """
    for name in ("scale_x", "scale_y", "scale_z"):
        if getattr(params, name) <= 0:
            raise ValueError(f"{name} must be > 0, got {getattr(params, name)}")
    v = template.vertices * np.array([params.scale_x, params.scale_y, params.scale_z])
    bend = params.bend_curl
    if abs(bend) > 1e-12:
        x, y, z = v[:, 0], v[:, 1], v[:, 2]
        span = float(x.max())
        if span > 0:
            radius = span / bend
            theta = bend * np.clip(x / span, 0.0, 1.0)
            v = np.column_stack(((radius - z) * np.sin(theta),
                                 y,
                                 radius - (radius - z) * np.cos(theta)))
    return TriangleMesh(v, template.faces.copy(), template.uvs.copy(),
                        compute_vertex_normals(v, template.faces))


def leaf_local_to_world(mesh: TriangleMesh, params: LeafDeformParams) -> TriangleMesh:
    """Apply roll, pitch, yaw (in that order) and translate the base to the anchor."""
    rot = rotation_matrix_xyz(params.roll, params.pitch, params.yaw)
    v = mesh.vertices @ rot.T + np.asarray(params.anchor, dtype=np.float64)
    n = mesh.normals @ rot.T
    return TriangleMesh(v, mesh.faces.copy(), mesh.uvs.copy(), n)
