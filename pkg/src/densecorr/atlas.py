"""Per-part UV charts and the 24-part atlas.

Torso and limb parts are flattened by metric MDS on their pairwise
geodesic distances; head/hands/feet charts usually come from a supplied
file (externally authored UV fields) and pass through verbatim. Every
chart lives in the unit square, with orientation pinned so repeated
builds are bit-identical: the embedding's principal axis maps to U and
the chart's lowest-indexed vertex lands at U <= 0.5, V <= 0.5.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ChartConflict, EmptyChart, SchemaError
from .mds import SmacofEmbedding
from .mesh import NUM_PARTS, SurfaceMesh, part_distance_matrix


def unwrap_part(distances: np.ndarray, options: dict | None = None) -> np.ndarray:
    """Embed one part's distance matrix in the plane.

    Returns centered 2D coordinates in the canonical orientation
    (principal axis along x, signs fixed by the first vertex). Stress is
    minimized by SMACOF from a classical-MDS start; pass ``options``
    through to :class:`SmacofEmbedding` (``max_iter``, ``tol``).
    """
    est = SmacofEmbedding(n_components=2, **(options or {}))
    emb = est.fit_transform(np.asarray(distances, dtype=np.float64))
    return canonical_orientation(emb)


def canonical_orientation(emb: np.ndarray) -> np.ndarray:
    """Rotate/reflect an embedding into the deterministic chart frame."""
    X = emb - emb.mean(axis=0, keepdims=True)
    if len(X) >= 2:
        cov = X.T @ X
        evals, evecs = np.linalg.eigh(cov)
        axis = evecs[:, np.argmax(evals)]
        rot = np.column_stack([axis, [-axis[1], axis[0]]])
        X = X @ rot
        for dim in range(2):
            lo, hi = X[:, dim].min(), X[:, dim].max()
            if X[0, dim] > 0.5 * (lo + hi):
                X[:, dim] = -X[:, dim]
    return X


def normalize_chart(embedding: np.ndarray) -> np.ndarray:
    """Map 2D coordinates into [0,1]^2, aspect-preserving and centered.

    The longer bounding-box side spans [0,1] exactly; a single point (or
    a fully degenerate cloud) maps to (0.5, 0.5).
    """
    X = np.asarray(embedding, dtype=np.float64).reshape(-1, 2)
    lo = X.min(axis=0)
    hi = X.max(axis=0)
    span = float(max(hi[0] - lo[0], hi[1] - lo[1]))
    if span <= 0.0:
        return np.full_like(X, 0.5)
    center = 0.5 * (lo + hi)
    uv = (X - center) / span + 0.5
    return np.clip(uv, 0.0, 1.0)


@dataclass
class PartChart:
    """UV coordinates for the vertices of one part."""

    part: int
    vertex_ids: np.ndarray
    uv: np.ndarray
    source: str = "mds"  # "mds" | "supplied"
    _row_of: dict[int, int] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.vertex_ids = np.asarray(self.vertex_ids, dtype=np.int64)
        self.uv = np.asarray(self.uv, dtype=np.float64).reshape(-1, 2)
        if len(self.vertex_ids) != len(self.uv):
            raise ChartConflict(
                f"part {self.part}: {len(self.vertex_ids)} ids vs "
                f"{len(self.uv)} uv rows"
            )
        if len(np.unique(self.vertex_ids)) != len(self.vertex_ids):
            raise ChartConflict(f"part {self.part}: duplicate vertex ids")
        if self.uv.size and (self.uv.min() < 0.0 or self.uv.max() > 1.0):
            raise ChartConflict(f"part {self.part}: uv outside [0,1]")
        if len(self.uv) >= 2 and (self.uv == self.uv[0]).all():
            raise ChartConflict(
                f"part {self.part}: chart collapsed to a single uv position"
            )
        self._row_of = {int(v): k for k, v in enumerate(self.vertex_ids)}

    def row(self, vertex: int) -> int:
        return self._row_of[int(vertex)]

    def uv_of(self, vertex: int) -> tuple[float, float]:
        u, v = self.uv[self.row(vertex)]
        return float(u), float(v)


class UVAtlas:
    """Collection of part charts covering every labeled mesh vertex.

    A full body mesh yields exactly 24 charts; synthetic meshes carry
    charts only for the parts they actually have.
    """

    def __init__(self, charts: dict[int, PartChart]):
        self.charts = dict(sorted(charts.items()))
        for part, chart in self.charts.items():
            if not 1 <= part <= NUM_PARTS:
                raise ChartConflict(f"chart part id {part} outside 1..{NUM_PARTS}")
            if chart.part != part:
                raise ChartConflict(
                    f"chart keyed {part} but tagged part {chart.part}"
                )

    def parts(self) -> list[int]:
        return list(self.charts)

    def chart(self, part: int) -> PartChart:
        chart = self.charts.get(int(part))
        if chart is None or len(chart.vertex_ids) == 0:
            raise EmptyChart(f"no chart for part {part}")
        return chart

    def validate_against(self, mesh: SurfaceMesh):
        """Every labeled vertex appears in exactly its part's chart."""
        seen = np.zeros(mesh.n_vertices, dtype=np.int64)
        for part, chart in self.charts.items():
            if (mesh.part_label[chart.vertex_ids] != part).any():
                raise ChartConflict(
                    f"part {part} chart references vertices of another part"
                )
            seen[chart.vertex_ids] += 1
        labeled = mesh.part_label > 0
        if (seen[labeled] != 1).any() or (seen[~labeled] != 0).any():
            raise ChartConflict(
                "charts do not partition the labeled vertices"
            )


def build_atlas(
    mesh: SurfaceMesh,
    supplied_charts: dict[int, PartChart] | None = None,
    mds_options: dict | None = None,
) -> UVAtlas:
    """Unwrap every part of ``mesh``; supplied charts pass through verbatim."""
    supplied = supplied_charts or {}
    charts: dict[int, PartChart] = {}
    present = mesh.parts()
    for part in supplied:
        if part not in present:
            raise ChartConflict(f"supplied chart for absent part {part}")
    for part in present:
        vids = mesh.part_vertices(part)
        if part in supplied:
            chart = supplied[part]
            if set(chart.vertex_ids.tolist()) != set(vids.tolist()):
                raise ChartConflict(
                    f"supplied chart for part {part} does not cover exactly "
                    "the part's vertices"
                )
            charts[part] = PartChart(
                part=part,
                vertex_ids=chart.vertex_ids,
                uv=chart.uv,
                source="supplied",
            )
        else:
            D = part_distance_matrix(mesh, part)
            uv = normalize_chart(unwrap_part(D, mds_options))
            charts[part] = PartChart(part=part, vertex_ids=vids, uv=uv, source="mds")
    atlas = UVAtlas(charts)
    atlas.validate_against(mesh)
    return atlas


def uv_to_vertex(atlas: UVAtlas, part: int, u: float, v: float) -> int:
    """Chart vertex nearest to (u, v); exact ties go to the lowest id."""
    chart = atlas.chart(part)
    d2 = (chart.uv[:, 0] - u) ** 2 + (chart.uv[:, 1] - v) ** 2
    best = d2.min()
    return int(chart.vertex_ids[d2 == best].min())


def face_uv(
    atlas: UVAtlas, mesh: SurfaceMesh, face: int, bary
) -> tuple[int, float, float]:
    """Interpolate chart UV at a barycentric point of ``face``."""
    tri = mesh.faces[face]
    part = int(mesh.part_label[tri[0]])
    chart = atlas.chart(part)
    w = np.asarray(bary, dtype=np.float64)
    uv = sum(w[k] * chart.uv[chart.row(int(tri[k]))] for k in range(3))
    return part, float(uv[0]), float(uv[1])


# -- JSON persistence --------------------------------------------------------


def charts_to_json(atlas: UVAtlas) -> list[dict]:
    return [
        {
            "part_id": part,
            "source": chart.source,
            "entries": [
                [int(vid), float(u), float(v)]
                for vid, (u, v) in zip(chart.vertex_ids, chart.uv)
            ],
        }
        for part, chart in atlas.charts.items()
    ]


def charts_from_json(payload, default_source: str = "supplied") -> dict[int, PartChart]:
    if not isinstance(payload, list):
        raise SchemaError("chart file must be a JSON array", "$")
    charts: dict[int, PartChart] = {}
    for k, item in enumerate(payload):
        where = f"$[{k}]"
        if not isinstance(item, dict) or "part_id" not in item or "entries" not in item:
            raise SchemaError("expected {part_id, entries}", where)
        part = item["part_id"]
        if not isinstance(part, int) or not 1 <= part <= NUM_PARTS:
            raise SchemaError(f"part_id {part!r} outside 1..{NUM_PARTS}", f"{where}.part_id")
        if part in charts:
            raise ChartConflict(f"duplicate chart for part {part}")
        entries = item["entries"]
        try:
            vids = [int(e[0]) for e in entries]
            uv = [[float(e[1]), float(e[2])] for e in entries]
        except (TypeError, IndexError, ValueError) as exc:
            raise SchemaError(f"bad entry: {exc}", f"{where}.entries") from exc
        charts[part] = PartChart(
            part=part,
            vertex_ids=np.asarray(vids, dtype=np.int64),
            uv=np.asarray(uv, dtype=np.float64),
            source=item.get("source", default_source),
        )
    return charts


def save_atlas(atlas: UVAtlas, path):
    from .io import canonical_dump

    with open(path, "w", encoding="utf-8") as fh:
        fh.write(canonical_dump(charts_to_json(atlas)))


def load_atlas(path) -> UVAtlas:
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    charts = charts_from_json(payload, default_source="supplied")
    return UVAtlas(charts)


def load_supplied_charts(path) -> dict[int, PartChart]:
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    return charts_from_json(payload, default_source="supplied")
