"""Voxel surface extraction, Laplacian smoothing, and binary STL I/O.

Surfaces are closed and consistently outward-oriented: every unshared voxel
face becomes two CCW triangles, and vertices are merged only within each
6-connected shell so separate shells never share topology. Volume therefore
equals the voxel count times the cell volume (divergence theorem), which the
tests lean on as the strongest orientation check.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage, sparse

STL_HEADER_BYTES = 80
STL_TRIANGLE_BYTES = 50
MAX_STL_TRIANGLES = 2**32 - 1

# Corner offsets per face direction, ordered so (A,B,C),(A,C,D) triangles
# point outward and the A-C diagonal always joins the face's min and max
# corners (keeps opposite faces antipodally symmetric).
_FACE_CORNERS = {
    (1, 0, 0): ((1, 0, 0), (1, 1, 0), (1, 1, 1), (1, 0, 1)),
    (-1, 0, 0): ((0, 0, 0), (0, 0, 1), (0, 1, 1), (0, 1, 0)),
    (0, 1, 0): ((0, 1, 0), (0, 1, 1), (1, 1, 1), (1, 1, 0)),
    (0, -1, 0): ((0, 0, 0), (1, 0, 0), (1, 0, 1), (0, 0, 1)),
    (0, 0, 1): ((0, 0, 1), (1, 0, 1), (1, 1, 1), (0, 1, 1)),
    (0, 0, -1): ((0, 0, 0), (0, 1, 0), (1, 1, 0), (1, 0, 0)),
}


@dataclass(frozen=True)
class TriangleMesh:
    """Indexed triangle mesh; vertices in mm, triangles as CCW index triples."""

    vertices: np.ndarray  # (n, 3) float64
    triangles: np.ndarray  # (m, 3) int64

    @property
    def triangle_count(self) -> int:
        return int(self.triangles.shape[0])

    def bbox(self) -> tuple[np.ndarray, np.ndarray]:
        if self.vertices.shape[0] == 0:
            z = np.zeros(3)
            return z, z
        return self.vertices.min(axis=0), self.vertices.max(axis=0)


def _exposed(grid: np.ndarray, axis: int, sign: int) -> np.ndarray:
    neighbor = np.zeros_like(grid)
    src = [slice(None)] * 3
    dst = [slice(None)] * 3
    if sign > 0:
        src[axis], dst[axis] = slice(1, None), slice(None, -1)
    else:
        src[axis], dst[axis] = slice(None, -1), slice(1, None)
    neighbor[tuple(dst)] = grid[tuple(src)]
    return grid & ~neighbor


def extract_surface(grid: np.ndarray, cell_mm: float = 0.3) -> TriangleMesh:
    """Triangulate the boundary of a boolean voxel grid.

    Vertices land on the cell lattice scaled by cell_mm. Coincident corners
    are merged per 6-connected shell; diagonal contact between shells keeps
    them topologically separate.
    """
    grid = np.asarray(grid, dtype=bool)
    if grid.ndim != 3:
        raise ValueError("grid must be a 3d boolean array")
    if not grid.any():
        return TriangleMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64))

    labels, _ = ndimage.label(grid, structure=ndimage.generate_binary_structure(3, 1))

    corner_chunks = []
    shell_chunks = []
    for (dx, dy, dz), offsets in _FACE_CORNERS.items():
        axis = 0 if dx else (1 if dy else 2)
        sign = dx + dy + dz
        exposed = _exposed(grid, axis, sign)
        idx = np.argwhere(exposed)
        if idx.size == 0:
            continue
        corners = idx[:, None, :] + np.asarray(offsets, dtype=np.int64)[None, :, :]
        corner_chunks.append(corners)
        shell_chunks.append(labels[exposed])

    corners = np.concatenate(corner_chunks)          # (faces, 4, 3)
    shells = np.concatenate(shell_chunks)            # (faces,)

    dims = np.asarray(grid.shape, dtype=np.int64) + 1
    flat = corners.reshape(-1, 3)
    keys = np.repeat(shells, 4).astype(np.int64)
    for d in range(3):
        keys = keys * dims[d] + flat[:, d]

    _, first, inverse = np.unique(keys, return_index=True, return_inverse=True)
    vertices = flat[first].astype(np.float64) * cell_mm

    quads = inverse.reshape(-1, 4)
    triangles = np.concatenate([quads[:, [0, 1, 2]], quads[:, [0, 2, 3]]]).astype(np.int64)
    return TriangleMesh(vertices, triangles)


def mesh_volume(mesh: TriangleMesh) -> float:
    """Signed enclosed volume via the divergence theorem (mm^3)."""
    if mesh.triangle_count == 0:
        return 0.0
    v = mesh.vertices
    t = mesh.triangles
    a, b, c = v[t[:, 0]], v[t[:, 1]], v[t[:, 2]]
    return float(np.einsum("ij,ij->i", a, np.cross(b, c)).sum() / 6.0)


def _edges(triangles: np.ndarray) -> np.ndarray:
    e = np.concatenate([triangles[:, [0, 1]], triangles[:, [1, 2]], triangles[:, [2, 0]]])
    e.sort(axis=1)
    return np.unique(e, axis=0)


def laplacian_smooth(mesh: TriangleMesh, steps: int = 50) -> TriangleMesh:
    """Uniform-umbrella smoothing: each step replaces every vertex with the
    arithmetic mean of its edge-connected neighbors, all vertices updated
    synchronously (full step). Connectivity is untouched.
    """
    if steps < 0:
        raise ValueError("steps must be >= 0")
    if steps == 0 or mesh.vertices.shape[0] == 0:
        return TriangleMesh(mesh.vertices.copy(), mesh.triangles.copy())

    n = mesh.vertices.shape[0]
    edges = _edges(mesh.triangles)
    rows = np.concatenate([edges[:, 0], edges[:, 1]])
    cols = np.concatenate([edges[:, 1], edges[:, 0]])
    adj = sparse.csr_matrix((np.ones(rows.size), (rows, cols)), shape=(n, n))
    degree = np.asarray(adj.sum(axis=1)).ravel()
    # isolated vertices (none from triangles, but keep the operator total)
    inv = np.where(degree > 0, 1.0 / np.maximum(degree, 1), 0.0)
    averaging = sparse.diags(inv) @ adj
    keep = sparse.diags((degree == 0).astype(float))
    operator = averaging + keep

    v = mesh.vertices
    for _ in range(steps):
        v = operator @ v
    return TriangleMesh(np.asarray(v), mesh.triangles.copy())


_STL_DTYPE = np.dtype([
    ("normal", "<f4", (3,)),
    ("vertices", "<f4", (3, 3)),
    ("attr", "<u2"),
])


def stl_bytes(mesh: TriangleMesh, header_text: str | None = None) -> bytes:
    """Binary STL: 80-byte padded header, LE u32 count, 50 bytes per triangle."""
    if mesh.triangle_count > MAX_STL_TRIANGLES:
        raise ValueError(f"too many triangles for STL: {mesh.triangle_count}")
    if header_text is None:
        from . import __version__
        header_text = f"vawtevo {__version__} binary STL"
    header = header_text.encode("ascii", "replace")[:STL_HEADER_BYTES]
    header = header.ljust(STL_HEADER_BYTES, b" ")

    t = mesh.triangles
    tri = mesh.vertices[t] if t.size else np.zeros((0, 3, 3))
    normal = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0]) if t.size else np.zeros((0, 3))
    length = np.linalg.norm(normal, axis=1, keepdims=True) if t.size else np.zeros((0, 1))
    with np.errstate(invalid="ignore", divide="ignore"):
        unit = np.where(length > 0, normal / np.where(length > 0, length, 1.0), 0.0)

    block = np.zeros(mesh.triangle_count, dtype=_STL_DTYPE)
    block["normal"] = unit.astype("<f4")
    block["vertices"] = tri.astype("<f4")
    return header + np.uint32(mesh.triangle_count).tobytes() + block.tobytes()


def write_stl(mesh: TriangleMesh, path: str | Path, header_text: str | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = stl_bytes(mesh, header_text)
    with open(path, "wb") as fh:
        fh.write(data)
        fh.flush()
        os.fsync(fh.fileno())
    return path


@dataclass(frozen=True)
class StlData:
    header: bytes
    normals: np.ndarray    # (m, 3) float32
    vertices: np.ndarray   # (m, 3, 3) float32
    attributes: np.ndarray  # (m,) uint16


def read_stl(source: str | Path | bytes) -> StlData:
    data = source if isinstance(source, bytes) else Path(source).read_bytes()
    if len(data) < STL_HEADER_BYTES + 4:
        raise ValueError("not a binary STL: too short")
    count = int(np.frombuffer(data[STL_HEADER_BYTES:STL_HEADER_BYTES + 4], dtype="<u4")[0])
    expected = STL_HEADER_BYTES + 4 + STL_TRIANGLE_BYTES * count
    if len(data) != expected:
        raise ValueError(f"binary STL size mismatch: {len(data)} bytes, expected {expected}")
    block = np.frombuffer(data[STL_HEADER_BYTES + 4:], dtype=_STL_DTYPE)
    return StlData(
        header=data[:STL_HEADER_BYTES],
        normals=block["normal"].copy(),
        vertices=block["vertices"].copy(),
        attributes=block["attr"].copy(),
    )


def mesh_stats(mesh: TriangleMesh) -> dict:
    """Printable diagnostics; min_edge_mm flags features smoothing thinned."""
    lo, hi = mesh.bbox()
    stats = {
        "vertices": int(mesh.vertices.shape[0]),
        "triangles": mesh.triangle_count,
        "bbox_min_mm": [float(v) for v in lo],
        "bbox_max_mm": [float(v) for v in hi],
        "volume_mm3": mesh_volume(mesh),
        "min_edge_mm": None,
    }
    if mesh.triangle_count:
        edges = _edges(mesh.triangles)
        lengths = np.linalg.norm(mesh.vertices[edges[:, 0]] - mesh.vertices[edges[:, 1]], axis=1)
        stats["min_edge_mm"] = float(lengths.min())
    return stats
