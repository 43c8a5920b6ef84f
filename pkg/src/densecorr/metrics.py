"""Correspondence quality measures.

Three layers of evaluation, all driven by graph geodesics on the
reference mesh:

* pointwise: per-point geodesic errors pooled across images, summarized
  by the ratio-of-correct-points curve f(t) and its normalized area
  AUC_a = (1/a) * integral_0^a f(t) dt at a = 10 cm and 30 cm;
* per-instance: geodesic point similarity
  GPS_j = mean_p exp(-g(i_p, i_hat_p)^2 / (2 kappa^2)), kappa = 0.255,
  so a single point 30 cm off scores 0.5;
* detection-style: average precision / recall over the GPS threshold
  grid 0.50..0.95, COCO-flavored (score-ordered greedy matching,
  101-point interpolated precision, at most 100 detections per image).

Background or missing predictions count as infinitely wrong: GPS
contribution 0 and an error above every RCP threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyInput, EmptyInstance, EmptySample
from .mesh import SurfaceMesh, geodesic_from_many

RCP_GRID_POINTS = 256
GPS_THRESHOLDS = tuple(round(0.50 + 0.05 * k, 2) for k in range(10))


@dataclass(frozen=True)
class GpsConfig:
    """Similarity bandwidth and evaluation grids, in mesh length units."""

    kappa: float = 0.255
    thresholds: tuple = GPS_THRESHOLDS
    auc_radii: tuple = (0.10, 0.30)
    max_detections: int = 100

    def __post_init__(self):
        if self.kappa <= 0:
            raise ValueError("kappa must be positive")
        t = np.asarray(self.thresholds)
        if len(t) == 0 or (np.diff(t) <= 0).any() or t[0] <= 0 or t[-1] >= 1:
            raise ValueError("thresholds must ascend strictly within (0, 1)")

    def scaled(self, units_per_meter: float) -> "GpsConfig":
        """Config for meshes measured in other units (e.g. 100 for cm)."""
        return GpsConfig(
            kappa=self.kappa * units_per_meter,
            thresholds=self.thresholds,
            auc_radii=tuple(a * units_per_meter for a in self.auc_radii),
            max_detections=self.max_detections,
        )


@dataclass
class GroundTruthInstance:
    """Annotated points of one person instance: pixel -> true vertex."""

    instance_id: int
    image_id: int
    points: list  # [((x, y), vertex), ...]
    bbox: tuple | None = None

    def __post_init__(self):
        if not self.points:
            raise EmptyInstance(f"instance {self.instance_id} has no points")


@dataclass
class PredictedInstance:
    """A scored detection with a pixel -> estimated-vertex lookup.

    ``lookup`` values of ``None`` mean the model called the pixel
    background.
    """

    instance_id: int
    image_id: int
    score: float
    lookup: dict = field(default_factory=dict)

    def vertex_at(self, pixel) -> int | None:
        return self.lookup.get(tuple(pixel))


@dataclass(frozen=True)
class RcpCurve:
    thresholds: np.ndarray
    fractions: np.ndarray
    count: int


@dataclass
class EvalReport:
    auc: dict  # radius -> AUC value
    curves: dict  # radius -> RcpCurve
    ap: float
    ap_per_threshold: dict
    ar: float
    ar_per_threshold: dict
    instance_gps: list  # (image_id, pred_id, gt_id, gps)
    n_ground_truth: int
    n_predictions: int

    def summary(self) -> dict:
        radii = sorted(self.auc)
        out = {
            "AP": self.ap,
            "AP50": self.ap_per_threshold.get(0.50, 0.0),
            "AP75": self.ap_per_threshold.get(0.75, 0.0),
            "AR": self.ar,
        }
        for r in radii:
            out[f"AUC@{r:g}"] = self.auc[r]
        return out


# -- pointwise ---------------------------------------------------------------


def geodesic_error(
    mesh: SurfaceMesh, true_vertex: int, est_vertex: int | None
) -> float:
    """Geodesic between the true and estimated vertices; background -> inf."""
    from .mesh import geodesic_between

    if est_vertex is None:
        mesh._check_vertex(true_vertex)
        return math.inf
    return geodesic_between(mesh, true_vertex, est_vertex)


def rcp_auc(errors, a: float) -> tuple[RcpCurve, float]:
    """RCP curve on a uniform 256-point grid over (0, a] and its AUC.

    f(t) is the fraction of errors strictly below t. The integral uses a
    left rectangle on [0, t_1] plus trapezoids, normalized by ``a``; the
    quantization error is bounded by one grid cell (1/256).
    """
    err = np.asarray(list(errors), dtype=np.float64)
    if err.size == 0:
        raise EmptyInput("no errors to summarize")
    if a <= 0:
        raise EmptyInput(f"threshold radius must be positive, got {a}")
    grid = a * np.arange(1, RCP_GRID_POINTS + 1) / RCP_GRID_POINTS
    frac = (err[None, :] < grid[:, None]).mean(axis=1)
    step = a / RCP_GRID_POINTS
    integral = frac[0] * step + step * 0.5 * (frac[:-1] + frac[1:]).sum()
    curve = RcpCurve(thresholds=grid, fractions=frac, count=int(err.size))
    return curve, float(integral / a)


# -- per-instance ------------------------------------------------------------


def _instance_errors(
    mesh: SurfaceMesh, gt: GroundTruthInstance, pred: PredictedInstance | None
) -> np.ndarray:
    """Per-GT-point geodesic errors against one prediction (inf where
    background/missing/unmatched)."""
    n = len(gt.points)
    errors = np.full(n, np.inf)
    if pred is None:
        return errors
    true_vertices = np.array([v for _, v in gt.points], dtype=np.int64)
    est = [pred.vertex_at(px) for px, _ in gt.points]
    unique_sources = np.unique(true_vertices)
    dist = geodesic_from_many(mesh, unique_sources)
    row = {int(s): k for k, s in enumerate(unique_sources)}
    for i, e in enumerate(est):
        if e is not None:
            errors[i] = dist[row[int(true_vertices[i])], int(e)]
    return errors


def gps(
    gt: GroundTruthInstance,
    pred: PredictedInstance,
    mesh: SurfaceMesh,
    cfg: GpsConfig | None = None,
) -> float:
    """Geodesic point similarity of one (ground truth, prediction) pair."""
    cfg = cfg or GpsConfig()
    errors = _instance_errors(mesh, gt, pred)
    with np.errstate(over="ignore"):
        sim = np.exp(-(errors**2) / (2.0 * cfg.kappa**2))
    sim[~np.isfinite(errors)] = 0.0
    return float(sim.mean())


# -- detection-style AP / AR --------------------------------------------------


def _match_image(
    mesh: SurfaceMesh,
    gts: list,
    preds: list,
    cfg: GpsConfig,
) -> list:
    """Greedy matching for one image.

    Predictions in descending score order each claim the still-unmatched
    ground truth with the highest GPS. Returns
    ``[(pred, gps, gt_or_None), ...]`` in that order.
    """
    order = sorted(range(len(preds)), key=lambda i: (-preds[i].score, i))
    order = order[: cfg.max_detections]
    unmatched = list(range(len(gts)))
    results = []
    for pi in order:
        pred = preds[pi]
        if not unmatched:
            results.append((pred, 0.0, None))
            continue
        scores = [gps(gts[gi], pred, mesh, cfg) for gi in unmatched]
        best = int(np.argmax(scores))
        gi = unmatched.pop(best)
        results.append((pred, scores[best], gts[gi]))
    return results


def _interpolated_ap(tp_flags: np.ndarray, n_gt: int) -> float:
    """COCO-style 101-point interpolated average precision."""
    if n_gt == 0 or len(tp_flags) == 0:
        return 0.0
    tp = np.cumsum(tp_flags)
    fp = np.cumsum(~tp_flags)
    recall = tp / n_gt
    precision = tp / np.maximum(tp + fp, 1)
    # precision envelope: best precision at recall >= r
    for i in range(len(precision) - 2, -1, -1):
        precision[i] = max(precision[i], precision[i + 1])
    rec_grid = np.linspace(0.0, 1.0, 101)
    idx = np.searchsorted(recall, rec_grid, side="left")
    sampled = np.where(idx < len(precision), precision[np.minimum(idx, len(precision) - 1)], 0.0)
    return float(sampled.mean())


def evaluate_ap_ar(
    gts: list,
    preds: list,
    mesh: SurfaceMesh,
    cfg: GpsConfig | None = None,
) -> EvalReport:
    """Full evaluation: match, then AP/AR over the GPS grid plus RCP/AUC."""
    cfg = cfg or GpsConfig()
    images = sorted(
        {g.image_id for g in gts} | {p.image_id for p in preds}
    )
    by_image_gt = {im: [g for g in gts if g.image_id == im] for im in images}
    by_image_pred = {im: [p for p in preds if p.image_id == im] for im in images}

    matches = []  # (pred, gps, gt or None)
    pooled_errors = []
    instance_gps = []
    for im in images:
        res = _match_image(mesh, by_image_gt[im], by_image_pred[im], cfg)
        matches.extend(res)
        matched_gt_ids = set()
        for pred, value, gt in res:
            if gt is not None:
                matched_gt_ids.add(gt.instance_id)
                pooled_errors.extend(
                    _instance_errors(mesh, gt, pred).tolist()
                )
                instance_gps.append(
                    (im, pred.instance_id, gt.instance_id, value)
                )
        for gt in by_image_gt[im]:
            if gt.instance_id not in matched_gt_ids:
                pooled_errors.extend([math.inf] * len(gt.points))

    n_gt = len(gts)
    order = sorted(
        range(len(matches)),
        key=lambda i: (-matches[i][0].score, matches[i][0].image_id, i),
    )
    gps_values = np.array([matches[i][1] for i in order], dtype=np.float64)
    has_match = np.array(
        [matches[i][2] is not None for i in order], dtype=bool
    )

    ap_per, ar_per = {}, {}
    for tau in cfg.thresholds:
        tp_flags = has_match & (gps_values >= tau)
        ap_per[tau] = _interpolated_ap(tp_flags, n_gt)
        ar_per[tau] = float(tp_flags.sum() / n_gt) if n_gt else 0.0

    auc, curves = {}, {}
    if pooled_errors:
        for radius in cfg.auc_radii:
            curves[radius], auc[radius] = rcp_auc(pooled_errors, radius)
    else:
        for radius in cfg.auc_radii:
            auc[radius] = 0.0
            curves[radius] = RcpCurve(
                thresholds=radius
                * np.arange(1, RCP_GRID_POINTS + 1)
                / RCP_GRID_POINTS,
                fractions=np.zeros(RCP_GRID_POINTS),
                count=0,
            )

    return EvalReport(
        auc=auc,
        curves=curves,
        ap=float(np.mean(list(ap_per.values()))) if ap_per else 0.0,
        ap_per_threshold=ap_per,
        ar=float(np.mean(list(ar_per.values()))) if ar_per else 0.0,
        ar_per_threshold=ar_per,
        instance_gps=instance_gps,
        n_ground_truth=n_gt,
        n_predictions=len(preds),
    )


# -- annotator accuracy --------------------------------------------------------


@dataclass
class AnnotatorAccuracyRecord:
    """Sampled surface points of one test image with their geodesic errors."""

    image_id: int
    sample_vertices: np.ndarray
    errors: np.ndarray

    def __post_init__(self):
        self.sample_vertices = np.asarray(self.sample_vertices, dtype=np.int64)
        self.errors = np.asarray(self.errors, dtype=np.float64)
        if self.sample_vertices.size == 0:
            raise EmptySample(f"image {self.image_id}: empty sample set")
        if self.sample_vertices.shape != self.errors.shape:
            raise EmptySample(
                f"image {self.image_id}: {self.sample_vertices.size} vertices "
                f"vs {self.errors.size} errors"
            )
        if (self.errors < 0).any():
            raise EmptySample(f"image {self.image_id}: negative errors")


def records_from_vertex_pairs(mesh: SurfaceMesh, pairs_by_image: dict) -> list:
    """Turn per-image (true, estimated) vertex pairs into accuracy records.

    Estimated ``None`` (background) yields an infinite error.
    """
    records = []
    for image_id, pairs in sorted(pairs_by_image.items()):
        if not pairs:
            raise EmptySample(f"image {image_id}: no pairs")
        true_vs = np.array([t for t, _ in pairs], dtype=np.int64)
        sources = np.unique(true_vs)
        dist = geodesic_from_many(mesh, sources)
        row = {int(s): k for k, s in enumerate(sources)}
        errors = np.array(
            [
                math.inf if e is None else dist[row[int(t)], int(e)]
                for t, e in pairs
            ]
        )
        records.append(
            AnnotatorAccuracyRecord(
                image_id=image_id, sample_vertices=true_vs, errors=errors
            )
        )
    return records


def annotator_error_field(records: list, mesh: SurfaceMesh) -> np.ndarray:
    """Average per-vertex annotation error over K images.

    Within each image, every vertex takes the error of its geodesically
    nearest sampled point (nearest-neighbor interpolation); the K fields
    then average uniformly. Unlabeled vertices get NaN.
    """
    if not records:
        raise EmptySample("no accuracy records")
    total = np.zeros(mesh.n_vertices)
    for rec in records:
        dist = geodesic_from_many(mesh, rec.sample_vertices)
        nearest = np.argmin(dist, axis=0)
        total += rec.errors[nearest]
    field_values = total / len(records)
    field_values[mesh.part_label == 0] = np.nan
    return field_values
