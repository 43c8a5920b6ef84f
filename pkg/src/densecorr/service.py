"""Session-oriented HTTP service for the two-stage annotation flow.

The server owns the geometry: it samples annotation targets from the
submitted part masks, serves the six pre-rendered views per part,
resolves clicks to surface points, and answers every click with the
point's projection into all views so the client can display the global
overview. State is persisted as an append-only journal of events
(newline-delimited JSON) and rebuilt by replay, so a crash loses at most
the event being written; no database is involved.

Writes to one session are serialized by a per-session lock; geometry
lookups are pure and run lock-free.
"""

from __future__ import annotations

import io as std_io
import json
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, Response

from . import errors
from .atlas import UVAtlas, face_uv
from .io import (
    DatasetAnnotation,
    DatasetFile,
    DatasetImage,
    DatasetPoint,
    canonical_dump,
)
from .mesh import SurfaceMesh
from .render import (
    VIEWS_PER_PART,
    ViewRender,
    click_to_surface,
    load_view_bundle,
    project_to_views,
    render_part_views,
)
from .sampling import (
    PartMask,
    choose_point_count,
    mask_from_rle,
    sample_points,
)

_STATUS = {
    errors.SessionNotFound: (404, "SESSION_NOT_FOUND"),
    errors.NothingToExport: (404, "NOTHING_TO_EXPORT"),
    errors.EmptyPart: (404, "EMPTY_PART"),
    errors.StaleSession: (409, "STALE_SESSION"),
    errors.NoSurface: (422, "NO_SURFACE"),
    errors.NoMasks: (422, "NO_MASKS"),
    errors.KTooLarge: (422, "K_TOO_LARGE"),
    errors.IndexOutOfRange: (422, "INDEX_OUT_OF_RANGE"),
    errors.DegenerateInput: (422, "DEGENERATE_INPUT"),
    errors.EmptyChart: (422, "EMPTY_CHART"),
}


@dataclass
class Target:
    part: int
    x: int
    y: int


@dataclass
class StoredPoint:
    target: int
    view: int
    pixel: tuple
    face: int
    bary: list
    position: list
    part: int
    u: float
    v: float
    vertex: int
    annotator: str
    timestamp: float
    projections: list

    def to_json(self) -> dict:
        return {
            "target": self.target,
            "view": self.view,
            "pixel": list(self.pixel),
            "face": self.face,
            "bary": self.bary,
            "position": self.position,
            "part": self.part,
            "u": self.u,
            "v": self.v,
            "vertex": self.vertex,
            "annotator": self.annotator,
            "timestamp": self.timestamp,
            "projections": self.projections,
        }


@dataclass
class Session:
    session_id: str
    image_id: int
    width: int
    height: int
    targets: list
    cursor: int = 0
    points: dict = field(default_factory=dict)
    lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    @property
    def total(self) -> int:
        return len(self.targets)

    @property
    def complete(self) -> bool:
        return self.cursor >= self.total

    def snapshot(self) -> dict:
        return {
            "session_id": self.session_id,
            "image_id": self.image_id,
            "state": "complete" if self.complete else "active",
            "progress": {"done": self.cursor, "total": self.total},
        }


class AnnotationService:
    """Application state shared by all requests."""

    def __init__(
        self,
        mesh: SurfaceMesh,
        atlas: UVAtlas,
        store_dir,
        views_dir=None,
        resolution: int = 512,
        default_seed: int = 0,
    ):
        self.mesh = mesh
        self.atlas = atlas
        self.resolution = resolution
        self.default_seed = default_seed
        self.store_dir = Path(store_dir)
        self.store_dir.mkdir(parents=True, exist_ok=True)
        self.journal_path = self.store_dir / "events.ndjson"
        self.views_dir = Path(views_dir) if views_dir else None
        self.sessions: dict[str, Session] = {}
        self._views: dict[int, list[ViewRender]] = {}
        self._registry_lock = threading.Lock()
        self._journal_lock = threading.Lock()
        self._views_lock = threading.Lock()
        self._counter = 0
        self._replay()

    # -- views -------------------------------------------------------------

    def views(self, part: int) -> list[ViewRender]:
        with self._views_lock:
            cached = self._views.get(part)
            if cached is not None:
                return cached
            if self.views_dir is not None:
                try:
                    rendered = [
                        load_view_bundle(self.views_dir, part, v, self.mesh)
                        for v in range(VIEWS_PER_PART)
                    ]
                except FileNotFoundError:
                    rendered = render_part_views(self.mesh, part, self.resolution)
            else:
                rendered = render_part_views(self.mesh, part, self.resolution)
            self._views[part] = rendered
            return rendered

    # -- journal -----------------------------------------------------------

    def _append_event(self, event: dict):
        line = json.dumps(event, sort_keys=True)
        with self._journal_lock:
            with open(self.journal_path, "a", encoding="utf-8") as fh:
                fh.write(line + "\n")
                fh.flush()

    def _replay(self):
        if not self.journal_path.exists():
            return
        with open(self.journal_path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                event = json.loads(line)
                if event["type"] == "session_created":
                    session = Session(
                        session_id=event["session_id"],
                        image_id=event["image_id"],
                        width=event["width"],
                        height=event["height"],
                        targets=[Target(**t) for t in event["targets"]],
                    )
                    self.sessions[session.session_id] = session
                    self._counter = max(
                        self._counter, int(session.session_id.split("-")[1])
                    )
                elif event["type"] == "click":
                    session = self.sessions[event["session_id"]]
                    point = StoredPoint(**event["point"])
                    first_time = point.target not in session.points
                    session.points[point.target] = point
                    if first_time and point.target == session.cursor:
                        session.cursor += 1

    # -- session operations --------------------------------------------------

    def create_session(
        self,
        image_id: int,
        width: int,
        height: int,
        masks: list,
        seed: int | None = None,
    ) -> Session:
        if not masks:
            raise errors.NoMasks("at least one part mask is required")
        seed = self.default_seed if seed is None else seed
        targets: list[Target] = []
        for mask in sorted(masks, key=lambda m: m.part):
            k = choose_point_count(mask)
            sampled = sample_points(mask, k, seed=seed)
            for x, y in sampled.points:
                targets.append(Target(part=mask.part, x=int(x), y=int(y)))
        with self._registry_lock:
            self._counter += 1
            session = Session(
                session_id=f"sess-{self._counter:06d}",
                image_id=image_id,
                width=width,
                height=height,
                targets=targets,
            )
            self.sessions[session.session_id] = session
        self._append_event(
            {
                "type": "session_created",
                "session_id": session.session_id,
                "image_id": image_id,
                "width": width,
                "height": height,
                "seed": seed,
                "targets": [vars(t) for t in session.targets],
            }
        )
        return session

    def get_session(self, session_id: str) -> Session:
        session = self.sessions.get(session_id)
        if session is None:
            raise errors.SessionNotFound(f"unknown session {session_id}")
        return session

    def submit_click(
        self,
        session_id: str,
        target: int,
        view: int,
        x: int,
        y: int,
        annotator: str = "anonymous",
    ) -> StoredPoint:
        session = self.get_session(session_id)
        with session.lock:
            if not 0 <= target < session.total:
                raise errors.IndexOutOfRange(
                    f"target {target} outside 0..{session.total - 1}"
                )
            if target > session.cursor:
                raise errors.StaleSession(
                    f"target {target} not yet presented (cursor {session.cursor})"
                )
            if not 0 <= view < VIEWS_PER_PART:
                raise errors.IndexOutOfRange(f"view {view} outside 0..5")
            tgt = session.targets[target]
            views = self.views(tgt.part)
            point = click_to_surface(views[view], (x, y))
            projections = [
                {"view": k, "x": px, "y": py, "visible": vis}
                for k, (px, py, vis) in enumerate(project_to_views(views, point))
            ]
            part, u, v = face_uv(self.atlas, self.mesh, point.face, point.bary)
            best = int(np.argmax(point.bary))
            vertex = int(self.mesh.faces[point.face][best])
            stored = StoredPoint(
                target=target,
                view=view,
                pixel=(tgt.x, tgt.y),
                face=point.face,
                bary=[float(w) for w in point.bary],
                position=[float(c) for c in point.position],
                part=part,
                u=u,
                v=v,
                vertex=vertex,
                annotator=annotator,
                timestamp=time.time(),
                projections=projections,
            )
            first_time = target not in session.points
            session.points[target] = stored
            if first_time and target == session.cursor:
                session.cursor += 1
            self._append_event(
                {
                    "type": "click",
                    "session_id": session_id,
                    "point": stored.to_json(),
                }
            )
            return stored

    def next_task(self, session_id: str) -> dict:
        session = self.get_session(session_id)
        with session.lock:
            last = None
            if session.points:
                latest = max(
                    session.points.values(), key=lambda p: p.timestamp
                )
                last = latest.to_json()
            target = None
            if not session.complete:
                tgt = session.targets[session.cursor]
                target = {
                    "index": session.cursor,
                    "part": tgt.part,
                    "x": tgt.x,
                    "y": tgt.y,
                }
            return {
                "done": session.complete,
                "target": target,
                "progress": {"done": session.cursor, "total": session.total},
                "last": last,
            }

    def export(self, image_id: int | None = None) -> DatasetFile:
        complete = [
            s
            for s in sorted(self.sessions.values(), key=lambda s: s.session_id)
            if s.complete and (image_id is None or s.image_id == image_id)
        ]
        if not complete:
            raise errors.NothingToExport("no complete session matches")
        images: dict[int, DatasetImage] = {}
        annotations = []
        for n, session in enumerate(complete, start=1):
            if session.image_id not in images:
                images[session.image_id] = DatasetImage(
                    id=session.image_id,
                    width=session.width,
                    height=session.height,
                )
            points = [
                DatasetPoint(
                    x=float(p.pixel[0]),
                    y=float(p.pixel[1]),
                    part=p.part,
                    u=p.u,
                    v=p.v,
                    vertex=p.vertex,
                )
                for _, p in sorted(session.points.items())
            ]
            annotations.append(
                DatasetAnnotation(
                    id=n, image_id=session.image_id, dp_points=points
                )
            )
        return DatasetFile(
            images=[images[k] for k in sorted(images)], annotations=annotations
        )


def _parse_masks(payload: list) -> list:
    masks = []
    for k, item in enumerate(payload):
        part = item.get("part")
        if not isinstance(part, int) or not 1 <= part <= 24:
            raise errors.NoMasks(f"masks[{k}]: bad part {part!r}")
        if "pixels" in item:
            masks.append(
                PartMask.from_pixels(
                    width=item["width"],
                    height=item["height"],
                    part=part,
                    pixels=item["pixels"],
                )
            )
        elif "rle" in item:
            masks.append(mask_from_rle(item["rle"], part))
        else:
            raise errors.NoMasks(f"masks[{k}]: need 'pixels' or 'rle'")
    return masks


def create_app(service: AnnotationService) -> FastAPI:
    app = FastAPI(title="densecorr annotation service")
    app.state.service = service

    @app.exception_handler(errors.DenseCorrError)
    async def handle_toolkit_error(request: Request, exc: errors.DenseCorrError):
        status, code = 422, "INVALID_INPUT"
        for klass, (st, cd) in _STATUS.items():
            if isinstance(exc, klass):
                status, code = st, cd
                break
        return JSONResponse(
            status_code=status, content={"code": code, "message": str(exc)}
        )

    @app.post("/sessions", status_code=201)
    async def post_session(payload: dict):
        masks = _parse_masks(payload.get("masks", []))
        if not masks:
            raise errors.NoMasks("at least one part mask is required")
        width = int(payload.get("width", 0)) or max(m.width for m in masks)
        height = int(payload.get("height", 0)) or max(m.height for m in masks)
        session = service.create_session(
            image_id=int(payload.get("image_id", 0)),
            width=width,
            height=height,
            masks=masks,
            seed=payload.get("seed"),
        )
        return {
            "session_id": session.session_id,
            "image_id": session.image_id,
            "total_targets": session.total,
            "targets": [vars(t) for t in session.targets],
        }

    @app.get("/sessions/{session_id}")
    async def get_session(session_id: str):
        return service.get_session(session_id).snapshot()

    @app.get("/sessions/{session_id}/next-task")
    async def get_next_task(session_id: str):
        return service.next_task(session_id)

    @app.post("/sessions/{session_id}/clicks")
    async def post_click(session_id: str, payload: dict):
        for key in ("target", "view", "x", "y"):
            if key not in payload:
                raise errors.IndexOutOfRange(f"click payload missing '{key}'")
        stored = service.submit_click(
            session_id,
            target=int(payload["target"]),
            view=int(payload["view"]),
            x=int(payload["x"]),
            y=int(payload["y"]),
            annotator=str(payload.get("annotator", "anonymous")),
        )
        return {"point": stored.to_json(), "projections": stored.projections}

    @app.get("/parts/{part}/views/{view}")
    async def get_view_image(part: int, view: int):
        if not 0 <= view < VIEWS_PER_PART:
            raise errors.IndexOutOfRange(f"view {view} outside 0..5")
        from PIL import Image

        render = service.views(part)[view]
        buf = std_io.BytesIO()
        Image.fromarray(render.shade, mode="L").save(buf, format="PNG")
        return Response(content=buf.getvalue(), media_type="image/png")

    @app.get("/parts/{part}/views/{view}/meta")
    async def get_view_meta(part: int, view: int):
        if not 0 <= view < VIEWS_PER_PART:
            raise errors.IndexOutOfRange(f"view {view} outside 0..5")
        render = service.views(part)[view]
        return {
            "part": render.part,
            "view_index": render.view_index,
            "resolution": render.resolution,
            "depth_eps": render.depth_eps,
            "camera": render.camera.to_json(),
        }

    @app.get("/export")
    async def get_export(image_id: int | None = None):
        dataset = service.export(image_id=image_id)
        return Response(
            content=canonical_dump(dataset.to_json()),
            media_type="application/json",
        )

    return app
