"""Shared mesh factories and fixtures.

``pythagorean_mesh`` builds random triangulated meshes whose edge
lengths are all exact small integers (3-4-5 cells with integer
placement), so shortest-path sums never round and path-based results
can be compared bit-for-bit against the Floyd-Warshall oracle.
"""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from densecorr.mesh import SurfaceMesh


def strip_mesh(columns: int = 3, spacing: float = 1.0, parts=(1, 2)) -> SurfaceMesh:
    """Two-row ladder strip; bottom row labeled parts[0], top parts[1].

    The bottom-row subgraph is the unit path 0-1-...-columns-1.
    """
    cols = columns
    bottom = [(k * spacing, 0.0, 0.0) for k in range(cols)]
    top = [(k * spacing, spacing, 0.0) for k in range(cols)]
    verts = np.array(bottom + top)
    faces = []
    for k in range(cols - 1):
        b0, b1 = k, k + 1
        t0, t1 = cols + k, cols + k + 1
        faces.append([b0, t0, b1])
        faces.append([b1, t0, t1])
    labels = [parts[0]] * cols + [parts[1]] * cols
    return SurfaceMesh(verts, np.array(faces), np.array(labels))


def unit_square_mesh() -> SurfaceMesh:
    """Unit square split along the (0,0)-(1,1) diagonal, all part 1."""
    verts = np.array(
        [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 0.0]]
    )
    faces = np.array([[0, 1, 2], [0, 2, 3]])
    return SurfaceMesh(verts, faces, np.array([1, 1, 1, 1]))


def grid_mesh(
    nx: int,
    ny: int,
    spacing: float = 1.0,
    part: int = 1,
    z_fn=None,
) -> SurfaceMesh:
    """(nx+1)x(ny+1) vertex grid of right triangles, one part."""
    verts = []
    for j in range(ny + 1):
        for i in range(nx + 1):
            x, y = i * spacing, j * spacing
            z = z_fn(x, y) if z_fn else 0.0
            verts.append((x, y, z))
    faces = []
    for j in range(ny):
        for i in range(nx):
            v00 = j * (nx + 1) + i
            v10 = v00 + 1
            v01 = v00 + (nx + 1)
            v11 = v01 + 1
            faces.append([v00, v10, v11])
            faces.append([v00, v11, v01])
    verts = np.array(verts, dtype=np.float64)
    return SurfaceMesh(
        verts, np.array(faces), np.full(len(verts), part, dtype=np.int64)
    )


def pythagorean_mesh(rng: np.random.Generator) -> SurfaceMesh:
    """Random mesh with exactly representable edge lengths.

    Cells are 3k x 4k rectangles split along a random diagonal (length
    5k); a random connected subset of cells is kept, coordinates get an
    integer translation and a random signed axis permutation, and vertex
    ids are shuffled. All edge lengths are small integers, so every
    path-length sum is exact in float64.
    """
    k = int(rng.integers(1, 4))
    w = int(rng.integers(1, 6))
    h = int(rng.integers(1, 6))
    while (w + 1) * (h + 1) > 50:
        w, h = max(1, w - 1), max(1, h - 1)

    cells = [(i, j) for i in range(w) for j in range(h)]
    start = cells[int(rng.integers(len(cells)))]
    keep = {start}
    frontier = [start]
    while frontier:
        ci, cj = frontier.pop(int(rng.integers(len(frontier))))
        for ni, nj in ((ci + 1, cj), (ci - 1, cj), (ci, cj + 1), (ci, cj - 1)):
            if 0 <= ni < w and 0 <= nj < h and (ni, nj) not in keep:
                if rng.random() < 0.7:
                    keep.add((ni, nj))
                    frontier.append((ni, nj))

    grid_id = {}
    verts = []
    faces = []
    dx, dy = int(rng.integers(-50, 50)), int(rng.integers(-50, 50))

    def vid(i, j):
        if (i, j) not in grid_id:
            grid_id[(i, j)] = len(verts)
            verts.append((3 * k * i + 3 * k * dx, 4 * k * j + 4 * k * dy, 0))
        return grid_id[(i, j)]

    for ci, cj in sorted(keep):
        v00 = vid(ci, cj)
        v10 = vid(ci + 1, cj)
        v01 = vid(ci, cj + 1)
        v11 = vid(ci + 1, cj + 1)
        if rng.random() < 0.5:
            faces.append([v00, v10, v11])
            faces.append([v00, v11, v01])
        else:
            faces.append([v00, v10, v01])
            faces.append([v10, v11, v01])

    verts = np.array(verts, dtype=np.float64)
    perm = rng.permutation(3)
    signs = rng.choice([-1.0, 1.0], size=3)
    verts = verts[:, perm] * signs

    relabel = rng.permutation(len(verts))
    inverse = np.empty_like(relabel)
    inverse[relabel] = np.arange(len(verts))
    verts = verts[relabel]
    faces = inverse[np.array(faces, dtype=np.int64)]
    return SurfaceMesh(
        verts, faces, np.full(len(verts), 1, dtype=np.int64)
    )


def random_float_mesh(rng: np.random.Generator, n_points: int = 25) -> SurfaceMesh:
    """Delaunay-triangulated random planar points with a smooth height field."""
    from scipy.spatial import Delaunay

    pts = rng.random((n_points, 2)) * 4.0
    tri = Delaunay(pts)
    z = 0.3 * np.sin(pts[:, 0]) * np.cos(pts[:, 1])
    verts = np.column_stack([pts, z])
    return SurfaceMesh(
        verts,
        tri.simplices.astype(np.int64),
        np.full(len(verts), 1, dtype=np.int64),
    )


def tube_mesh(
    segments: int = 24,
    rings_per_part: int = 5,
    n_parts: int = 3,
    radius: float = 0.1,
    length: float = 0.6,
) -> SurfaceMesh:
    """Open cylinder along z split axially into ``n_parts`` bands."""
    rings = n_parts * rings_per_part + 1
    verts = []
    labels = []
    for r in range(rings):
        z = length * r / (rings - 1)
        part = min((r * n_parts) // rings, n_parts - 1) + 1
        for s in range(segments):
            a = 2.0 * np.pi * s / segments
            verts.append((radius * np.cos(a), radius * np.sin(a), z))
            labels.append(part)
    faces = []
    for r in range(rings - 1):
        for s in range(segments):
            v00 = r * segments + s
            v01 = r * segments + (s + 1) % segments
            v10 = (r + 1) * segments + s
            v11 = (r + 1) * segments + (s + 1) % segments
            faces.append([v00, v01, v11])
            faces.append([v00, v11, v10])
    return SurfaceMesh(
        np.array(verts), np.array(faces, dtype=np.int64), np.array(labels)
    )


@pytest.fixture
def square_mesh():
    return unit_square_mesh()


@pytest.fixture
def ladder():
    return strip_mesh(columns=3)


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)
