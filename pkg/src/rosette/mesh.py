"""Triangle meshes and the plain-text mesh format.

Format, one record per line, `#` starts a comment:

    v  x y z      vertex position (model units)
    vt u v        texture coordinate in [0,1]^2, one per vertex, same order
    vn x y z      optional vertex normal; recomputed from faces when absent
    f  i j k      triangle, 1-based vertex indices

Loaded meshes are validated: indices in range, no zero-area faces, one
connected component, unit normals, and winding consistent with the
vertex normals.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class MeshError(ValueError):
    pass


_DEGENERATE_REL_AREA = 1e-12


@dataclass
class TriangleMesh:
    vertices: np.ndarray          # (N, 3) float64
    faces: np.ndarray             # (M, 3) int32
    uvs: np.ndarray               # (N, 2) float64
    normals: np.ndarray = field(default=None)  # (N, 3) float64, unit

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=np.float64)
        self.faces = np.asarray(self.faces, dtype=np.int32)
        self.uvs = np.asarray(self.uvs, dtype=np.float64)
        if self.normals is None:
            self.normals = compute_vertex_normals(self.vertices, self.faces)
        else:
            self.normals = np.asarray(self.normals, dtype=np.float64)

    def copy(self) -> "TriangleMesh":
        return TriangleMesh(self.vertices.copy(), self.faces.copy(),
                            self.uvs.copy(), self.normals.copy())

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def extent(self) -> np.ndarray:
        lo, hi = self.bounds()
        return hi - lo


def face_normals_areas(vertices: np.ndarray, faces: np.ndarray):
    """Unnormalized face normals (cross products) and triangle areas."""
    a = vertices[faces[:, 0]]
    b = vertices[faces[:, 1]]
    c = vertices[faces[:, 2]]
    cross = np.cross(b - a, c - a)
    areas = 0.5 * np.linalg.norm(cross, axis=1)
    return cross, areas


def compute_vertex_normals(vertices: np.ndarray, faces: np.ndarray) -> np.ndarray:
    """Area-weighted vertex normals, normalized to unit length."""
    cross, _ = face_normals_areas(vertices, faces)
    normals = np.zeros_like(vertices)
    for k in range(3):
        np.add.at(normals, faces[:, k], cross)
    lengths = np.linalg.norm(normals, axis=1, keepdims=True)
    lengths[lengths == 0] = 1.0
    return normals / lengths


def _connected(n_vertices: int, faces: np.ndarray) -> bool:
    if n_vertices == 0:
        return False
    parent = np.arange(n_vertices)

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for f in faces:
        r = find(f[0])
        for v in f[1:]:
            parent[find(v)] = r
    roots = {find(i) for i in range(n_vertices)}
    return len(roots) == 1


def validate_mesh(mesh: TriangleMesh) -> None:
    v, f, uv, n = mesh.vertices, mesh.faces, mesh.uvs, mesh.normals
    if v.ndim != 2 or v.shape[1] != 3 or len(v) < 3:
        raise MeshError(f"bad vertex array shape {v.shape}")
    if f.ndim != 2 or f.shape[1] != 3 or len(f) < 1:
        raise MeshError(f"bad face array shape {f.shape}")
    if uv.shape != (len(v), 2):
        raise MeshError(f"uv array shape {uv.shape} does not match {len(v)} vertices")
    if n.shape != v.shape:
        raise MeshError(f"normal array shape {n.shape} does not match {len(v)} vertices")
    if f.min() < 0 or f.max() >= len(v):
        raise MeshError(f"face index out of range: valid [0, {len(v) - 1}], "
                        f"found [{f.min()}, {f.max()}]")
    if not np.isfinite(v).all() or not np.isfinite(uv).all():
        raise MeshError("non-finite vertex or uv data")

    cross, areas = face_normals_areas(v, f)
    scale = float(np.linalg.norm(mesh.extent()))
    if scale == 0:
        raise MeshError("mesh has zero spatial extent")
    if (areas <= _DEGENERATE_REL_AREA * scale * scale).any():
        bad = np.nonzero(areas <= _DEGENERATE_REL_AREA * scale * scale)[0]
        raise MeshError(f"degenerate (zero-area) faces: {bad[:8].tolist()}")

    lengths = np.linalg.norm(n, axis=1)
    if (np.abs(lengths - 1.0) > 1e-6).any():
        raise MeshError("vertex normals are not unit length")

    if not _connected(len(v), f):
        raise MeshError("mesh is not a single connected component")

    # winding consistency: each face normal must agree with its corners' normals
    corner_mean = (n[f[:, 0]] + n[f[:, 1]] + n[f[:, 2]]) / 3.0
    if (np.einsum("ij,ij->i", cross, corner_mean) <= 0).any():
        raise MeshError("inconsistent face winding (face normal opposes vertex normals)")


def parse_mesh_text(text: str, source: str = "<string>") -> TriangleMesh:
    verts, uvs, norms, faces = [], [], [], []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        parts = stripped.split()
        tag, args = parts[0], parts[1:]
        try:
            if tag == "v" and len(args) == 3:
                verts.append([float(x) for x in args])
            elif tag == "vt" and len(args) == 2:
                uvs.append([float(x) for x in args])
            elif tag == "vn" and len(args) == 3:
                norms.append([float(x) for x in args])
            elif tag == "f" and len(args) == 3:
                faces.append([int(x) - 1 for x in args])
            else:
                raise MeshError(f"{source}:{lineno}: unrecognized record {stripped!r}")
        except ValueError:
            raise MeshError(f"{source}:{lineno}: cannot parse {stripped!r}") from None
    if not verts:
        raise MeshError(f"{source}: no vertices")
    if not faces:
        raise MeshError(f"{source}: no faces")
    if len(uvs) != len(verts):
        raise MeshError(f"{source}: {len(uvs)} uv records for {len(verts)} vertices")
    if norms and len(norms) != len(verts):
        raise MeshError(f"{source}: {len(norms)} vn records for {len(verts)} vertices")
    mesh = TriangleMesh(np.array(verts), np.array(faces, dtype=np.int32),
                        np.array(uvs), np.array(norms) if norms else None)
    validate_mesh(mesh)
    return mesh


def load_mesh(path: str | Path) -> TriangleMesh:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise MeshError(f"cannot read mesh file {path}: {exc}") from None
    return parse_mesh_text(text, source=str(path))


def mesh_to_text(mesh: TriangleMesh) -> str:
    lines = []
    for v in mesh.vertices:
        lines.append(f"v {float(v[0])!r} {float(v[1])!r} {float(v[2])!r}")
    for uv in mesh.uvs:
        lines.append(f"vt {float(uv[0])!r} {float(uv[1])!r}")
    for f in mesh.faces:
        lines.append(f"f {f[0] + 1} {f[1] + 1} {f[2] + 1}")
    return "\n".join(lines) + "\n"


def save_mesh(mesh: TriangleMesh, path: str | Path) -> None:
    Path(path).write_text(mesh_to_text(mesh))
