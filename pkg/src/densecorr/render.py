"""Six-view orthographic rendering of a part with surface lookup buffers.

Each part gets six cameras along the positive and negative directions of
its principal axes. Rasterization is a plain z-buffered scanline over
pixel centers, back-facing triangles culled, and fills four buffers per
view: shaded intensity (cosmetic), face id, barycentric weights, and
depth. The G-buffers are the load-bearing product: a click reads them to
land on the surface, and surface points re-project into every view to
give the annotator a global overview.
"""

from __future__ import annotations

import json
import logging
import struct
from dataclasses import dataclass

import numpy as np

from .errors import EmptyPart, FormatError, IndexOutOfRange, NoSurface
from .mesh import SurfaceMesh

log = logging.getLogger(__name__)

DCVB_MAGIC = b"DCVB"
VIEWS_PER_PART = 6
_PIXEL_DT = np.dtype(
    [("face", "<i4"), ("bary", "<f4", (3,)), ("depth", "<f4")]
)


@dataclass(frozen=True)
class ViewCamera:
    """Orthographic camera: looks along ``forward``; +x is ``right``,
    +y of the image runs against ``up`` (rows grow downward)."""

    forward: np.ndarray
    right: np.ndarray
    up: np.ndarray
    center2d: np.ndarray  # part bbox center in (right, up) coordinates
    scale: float  # world units per pixel
    resolution: int

    def project(self, points: np.ndarray) -> np.ndarray:
        """World points -> columns (x_img, y_img, depth), continuous."""
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        x = pts @ self.right
        y = pts @ self.up
        d = pts @ self.forward
        half = self.resolution / 2.0
        xi = (x - self.center2d[0]) / self.scale + half
        yi = (self.center2d[1] - y) / self.scale + half
        return np.column_stack([xi, yi, d])

    def to_json(self) -> dict:
        return {
            "forward": self.forward.tolist(),
            "right": self.right.tolist(),
            "up": self.up.tolist(),
            "center2d": self.center2d.tolist(),
            "scale": self.scale,
            "resolution": self.resolution,
        }

    @staticmethod
    def from_json(payload: dict) -> "ViewCamera":
        return ViewCamera(
            forward=np.asarray(payload["forward"], dtype=np.float64),
            right=np.asarray(payload["right"], dtype=np.float64),
            up=np.asarray(payload["up"], dtype=np.float64),
            center2d=np.asarray(payload["center2d"], dtype=np.float64),
            scale=float(payload["scale"]),
            resolution=int(payload["resolution"]),
        )


@dataclass(frozen=True)
class SurfacePoint:
    """A point on the mesh: face plus barycentric weights."""

    face: int
    bary: np.ndarray
    position: np.ndarray
    part: int


@dataclass
class ViewRender:
    """One rendered view with per-pixel surface lookup buffers."""

    part: int
    view_index: int
    camera: ViewCamera
    shade: np.ndarray  # (res, res) uint8
    face_id: np.ndarray  # (res, res) int32, -1 = background
    bary: np.ndarray  # (res, res, 3) float32
    depth: np.ndarray  # (res, res) float32, +inf on background
    depth_eps: float
    mesh: SurfaceMesh | None = None

    @property
    def resolution(self) -> int:
        return self.camera.resolution


def part_frame(mesh: SurfaceMesh, part: int) -> np.ndarray:
    """Right-handed principal-axis frame of the part, rows = axes.

    Axes sort by descending variance; signs are fixed so the largest
    component of each axis is positive, making the frame deterministic.
    """
    verts = mesh.vertices[mesh.part_vertices(part)]
    centered = verts - verts.mean(axis=0, keepdims=True)
    cov = centered.T @ centered
    evals, evecs = np.linalg.eigh(cov)
    axes = evecs[:, np.argsort(evals)[::-1]].T
    for k in range(3):
        lead = np.argmax(np.abs(axes[k]))
        if axes[k, lead] < 0:
            axes[k] = -axes[k]
    axes[2] = np.cross(axes[0], axes[1])
    return axes


def surface_point(mesh: SurfaceMesh, face: int, bary) -> SurfacePoint:
    """Build a SurfacePoint from a face index and barycentric weights."""
    if not 0 <= face < mesh.n_faces:
        raise IndexOutOfRange(f"face {face} on a {mesh.n_faces}-face mesh")
    w = np.asarray(bary, dtype=np.float64)
    w = w / w.sum()
    tri = mesh.faces[face]
    pos = w @ mesh.vertices[tri]
    return SurfacePoint(
        face=int(face),
        bary=w,
        position=pos,
        part=int(mesh.part_label[tri[0]]),
    )


def render_part_views(
    mesh: SurfaceMesh, part: int, resolution: int = 512
) -> list[ViewRender]:
    """Render the six principal-axis views of one part.

    Views 2k and 2k+1 look along +axis_k and -axis_k. Each view is
    fitted so the whole part stays visible with a 5% margin. Back-facing
    faces are culled, so a face only appears in views it actually faces;
    a warning is logged if any face of the part is covered in no view.
    """
    faces_idx = mesh.part_faces(part)
    if len(faces_idx) == 0:
        raise EmptyPart(f"part {part} has no faces")
    axes = part_frame(mesh, part)
    part_verts = mesh.vertices[mesh.part_vertices(part)]
    bbox_diag = float(
        np.linalg.norm(part_verts.max(axis=0) - part_verts.min(axis=0))
    )
    depth_eps = 1e-4 * max(bbox_diag, np.finfo(np.float64).tiny)

    views = []
    for k in range(3):
        for sign in (1.0, -1.0):
            forward = sign * axes[k]
            right = axes[(k + 1) % 3]
            up = np.cross(forward, right)
            x = part_verts @ right
            y = part_verts @ up
            span = max(x.max() - x.min(), y.max() - y.min())
            scale = max(span, 1e-12) * 1.10 / resolution
            camera = ViewCamera(
                forward=forward,
                right=right,
                up=up,
                center2d=np.array(
                    [0.5 * (x.max() + x.min()), 0.5 * (y.max() + y.min())]
                ),
                scale=scale,
                resolution=resolution,
            )
            views.append(
                _rasterize(mesh, part, faces_idx, camera, len(views), depth_eps)
            )

    covered: set[int] = set()
    for view in views:
        ids = np.unique(view.face_id)
        covered.update(int(f) for f in ids if f >= 0)
    missing = [int(f) for f in faces_idx if int(f) not in covered]
    if missing:
        log.warning(
            "part %d: %d face(s) covered in no view (first: %s)",
            part,
            len(missing),
            missing[:5],
        )
    return views


def _rasterize(
    mesh: SurfaceMesh,
    part: int,
    faces_idx: np.ndarray,
    camera: ViewCamera,
    view_index: int,
    depth_eps: float,
) -> ViewRender:
    res = camera.resolution
    face_id = np.full((res, res), -1, dtype=np.int32)
    bary = np.zeros((res, res, 3), dtype=np.float32)
    depth = np.full((res, res), np.inf, dtype=np.float32)
    shade = np.zeros((res, res), dtype=np.uint8)

    tris = mesh.faces[faces_idx]
    proj = camera.project(mesh.vertices)  # all vertices once
    normals = np.cross(
        mesh.vertices[tris[:, 1]] - mesh.vertices[tris[:, 0]],
        mesh.vertices[tris[:, 2]] - mesh.vertices[tris[:, 0]],
    )
    norm_len = np.linalg.norm(normals, axis=1)

    for tnum, fidx in enumerate(faces_idx):
        a, b, c = proj[tris[tnum]]
        area2 = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        if area2 <= 0:  # back-facing or edge-on
            continue
        x_lo = max(int(np.floor(min(a[0], b[0], c[0]) - 0.5)), 0)
        x_hi = min(int(np.ceil(max(a[0], b[0], c[0]) + 0.5)), res - 1)
        y_lo = max(int(np.floor(min(a[1], b[1], c[1]) - 0.5)), 0)
        y_hi = min(int(np.ceil(max(a[1], b[1], c[1]) + 0.5)), res - 1)
        if x_lo > x_hi or y_lo > y_hi:
            continue
        xs = np.arange(x_lo, x_hi + 1) + 0.5
        ys = np.arange(y_lo, y_hi + 1) + 0.5
        px, py = np.meshgrid(xs, ys)
        w0 = ((b[0] - px) * (c[1] - py) - (b[1] - py) * (c[0] - px)) / area2
        w1 = ((c[0] - px) * (a[1] - py) - (c[1] - py) * (a[0] - px)) / area2
        w2 = 1.0 - w0 - w1
        inside = (w0 >= 0) & (w1 >= 0) & (w2 >= 0)
        if not inside.any():
            continue
        d = w0 * a[2] + w1 * b[2] + w2 * c[2]
        window = depth[y_lo : y_hi + 1, x_lo : x_hi + 1]
        update = inside & (d < window)
        if not update.any():
            continue
        window[update] = d[update]
        face_window = face_id[y_lo : y_hi + 1, x_lo : x_hi + 1]
        face_window[update] = fidx
        bary_window = bary[y_lo : y_hi + 1, x_lo : x_hi + 1]
        bary_window[update] = np.stack(
            [w0[update], w1[update], w2[update]], axis=1
        ).astype(np.float32)
        if norm_len[tnum] > 0:
            facing = abs(
                float(normals[tnum] @ camera.forward) / norm_len[tnum]
            )
        else:
            facing = 0.0
        shade[y_lo : y_hi + 1, x_lo : x_hi + 1][update] = np.uint8(
            round(255 * (0.25 + 0.75 * facing))
        )

    return ViewRender(
        part=part,
        view_index=view_index,
        camera=camera,
        shade=shade,
        face_id=face_id,
        bary=bary,
        depth=depth,
        depth_eps=depth_eps,
        mesh=mesh,
    )


def click_to_surface(view: ViewRender, px) -> SurfacePoint:
    """Resolve a pixel of a rendered view to the surface point under it."""
    x, y = int(px[0]), int(px[1])
    res = view.resolution
    if not (0 <= x < res and 0 <= y < res):
        raise IndexOutOfRange(f"pixel ({x}, {y}) outside {res}x{res} view")
    face = int(view.face_id[y, x])
    if face < 0:
        raise NoSurface(f"pixel ({x}, {y}) is background")
    if view.mesh is None:
        raise FormatError("view bundle was loaded without its mesh")
    return surface_point(view.mesh, face, view.bary[y, x].astype(np.float64))


def project_to_views(
    views: list[ViewRender], p: SurfacePoint
) -> list[tuple[float, float, bool]]:
    """Project a surface point into each view; flag where it is visible.

    A point is visible when its own face faces the camera and nothing
    non-adjacent sits closer than ``depth_eps`` along the view ray.
    Faces sharing a vertex with the point's face never occlude it; that
    keeps the test stable against sub-pixel depth slopes at shared edges.
    """
    out = []
    for view in views:
        out.append(_project_one(view, p))
    return out


def _project_one(view: ViewRender, p: SurfacePoint) -> tuple[float, float, bool]:
    mesh = view.mesh
    cam = view.camera
    xi, yi, d = cam.project(p.position)[0]
    res = view.resolution

    tri = mesh.faces[p.face]
    n = np.cross(
        mesh.vertices[tri[1]] - mesh.vertices[tri[0]],
        mesh.vertices[tri[2]] - mesh.vertices[tri[0]],
    )
    # strictly front-facing, with a relative guard so exactly edge-on
    # faces (which rasterize nothing) read as invisible deterministically
    if float(n @ cam.forward) >= -1e-12 * float(np.linalg.norm(n)):
        return (float(xi), float(yi), False)
    px, py = int(np.floor(xi)), int(np.floor(yi))
    if not (0 <= px < res and 0 <= py < res):
        return (float(xi), float(yi), False)

    fid = int(view.face_id[py, px])
    if fid == p.face:
        return (float(xi), float(yi), True)
    own = set(int(v) for v in tri)
    if fid >= 0:
        visible = _adjacent(mesh, fid, own) or not _occludes(
            mesh, cam, fid, xi, yi, d, view.depth_eps
        )
        return (float(xi), float(yi), visible)

    # background pixel: grazing coverage; scan the 3x3 neighborhood for a
    # genuinely closer, non-adjacent face before calling it visible
    for ny in range(max(py - 1, 0), min(py + 2, res)):
        for nx in range(max(px - 1, 0), min(px + 2, res)):
            nf = int(view.face_id[ny, nx])
            if nf < 0 or nf == p.face or _adjacent(mesh, nf, own):
                continue
            if _occludes(mesh, cam, nf, xi, yi, d, view.depth_eps):
                return (float(xi), float(yi), False)
    return (float(xi), float(yi), True)


def _adjacent(mesh: SurfaceMesh, face: int, own_vertices: set[int]) -> bool:
    return any(int(v) in own_vertices for v in mesh.faces[face])


def _occludes(
    mesh: SurfaceMesh,
    cam: ViewCamera,
    face: int,
    xi: float,
    yi: float,
    d: float,
    eps: float,
) -> bool:
    """Does ``face`` cover image point (xi, yi) strictly in front of depth d?"""
    a, b, c = cam.project(mesh.vertices[mesh.faces[face]])
    area2 = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    if area2 == 0:
        return False
    w0 = ((b[0] - xi) * (c[1] - yi) - (b[1] - yi) * (c[0] - xi)) / area2
    w1 = ((c[0] - xi) * (a[1] - yi) - (c[1] - yi) * (a[0] - xi)) / area2
    w2 = 1.0 - w0 - w1
    if min(w0, w1, w2) < -1e-9:
        return False
    face_depth = w0 * a[2] + w1 * b[2] + w2 * c[2]
    return face_depth < d - eps


# -- serialization -----------------------------------------------------------


def write_gbuffer(view: ViewRender, path):
    """Binary G-buffer: DCVB magic, u32 w/h, per-pixel records, row-major."""
    res = view.resolution
    record = np.empty((res, res), dtype=_PIXEL_DT)
    record["face"] = view.face_id
    record["bary"] = view.bary
    record["depth"] = view.depth
    with open(path, "wb") as fh:
        fh.write(DCVB_MAGIC)
        fh.write(struct.pack("<II", res, res))
        fh.write(record.tobytes())


def read_gbuffer(path) -> tuple[int, int, np.ndarray]:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != DCVB_MAGIC:
            raise FormatError(f"bad magic {magic!r}, expected {DCVB_MAGIC!r}")
        header = fh.read(8)
        if len(header) != 8:
            raise FormatError("truncated DCVB header")
        w, h = struct.unpack("<II", header)
        payload = fh.read()
    expected = w * h * _PIXEL_DT.itemsize
    if len(payload) != expected:
        raise FormatError(
            f"DCVB payload is {len(payload)} bytes, expected {expected}"
        )
    record = np.frombuffer(payload, dtype=_PIXEL_DT).reshape(h, w)
    return w, h, record


def save_view_bundle(view: ViewRender, directory, stem: str | None = None):
    """Write PNG + DCVB + camera metadata for one view."""
    from pathlib import Path

    from PIL import Image

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    stem = stem or f"part{view.part:02d}_view{view.view_index}"
    Image.fromarray(view.shade, mode="L").save(directory / f"{stem}.png")
    write_gbuffer(view, directory / f"{stem}.dcvb")
    meta = {
        "part": view.part,
        "view_index": view.view_index,
        "depth_eps": view.depth_eps,
        "camera": view.camera.to_json(),
    }
    with open(directory / f"{stem}.meta.json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, sort_keys=True, indent=2)
        fh.write("\n")


def load_view_bundle(
    directory, part: int, view_index: int, mesh: SurfaceMesh | None
) -> ViewRender:
    from pathlib import Path

    from PIL import Image

    directory = Path(directory)
    stem = f"part{part:02d}_view{view_index}"
    with open(directory / f"{stem}.meta.json", "r", encoding="utf-8") as fh:
        meta = json.load(fh)
    w, h, record = read_gbuffer(directory / f"{stem}.dcvb")
    with Image.open(directory / f"{stem}.png") as im:
        shade = np.asarray(im.convert("L"))
    camera = ViewCamera.from_json(meta["camera"])
    if camera.resolution != w or w != h:
        raise FormatError("camera metadata and G-buffer size disagree")
    return ViewRender(
        part=int(meta["part"]),
        view_index=int(meta["view_index"]),
        camera=camera,
        shade=shade,
        face_id=np.ascontiguousarray(record["face"]),
        bary=np.ascontiguousarray(record["bary"]),
        depth=np.ascontiguousarray(record["depth"]),
        depth_eps=float(meta["depth_eps"]),
        mesh=mesh,
    )
