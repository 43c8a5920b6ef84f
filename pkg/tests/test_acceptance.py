"""Acceptance suite: one test per release criterion.

Each test prints a single ``[ACCEPT] <name>: PASS`` line when its
criterion holds at the stated tolerance (run pytest with ``-s`` to see
the lines as they pass; failures surface as ordinary assertions).
"""

import json
import math
import time

import numpy as np
import pytest
from fastapi.testclient import TestClient
from hypothesis import given, settings
from hypothesis import strategies as st

from densecorr.atlas import build_atlas, unwrap_part
from densecorr.decoder import decode
from densecorr.io import dataset_from_json, ground_truth_instances, predicted_instances
from densecorr.mds import SmacofEmbedding
from densecorr.mesh import SurfaceMesh, geodesic_from, part_distance_matrix
from densecorr.metrics import GpsConfig, evaluate_ap_ar, gps, rcp_auc
from densecorr.metrics import GroundTruthInstance, PredictedInstance
from densecorr.render import (
    ViewCamera,
    click_to_surface,
    project_to_views,
    render_part_views,
    surface_point,
)
from densecorr.sampling import PartMask, choose_point_count, sample_points
from densecorr.service import AnnotationService, create_app

from conftest import pythagorean_mesh, tube_mesh
from oracles import dense_edge_matrix, floyd_warshall, ray_visible
from test_decoder import score_maps
from test_render import surface_distance


def accept(name: str, started: float, limit: float):
    elapsed = time.monotonic() - started
    assert elapsed < limit, f"{name}: {elapsed:.1f}s exceeded {limit:.0f}s budget"
    print(f"[ACCEPT] {name}: PASS ({elapsed:.2f}s)")


def test_gps_constant_half_at_thirty_centimeters():
    started = time.monotonic()
    length = 0.3003
    verts = np.array([[0.0, 0.0, 0.0], [length, 0.0, 0.0], [length / 2, 10.0, 0.0]])
    mesh = SurfaceMesh(verts, np.array([[0, 1, 2]]), np.array([1, 1, 1]))
    g = GroundTruthInstance(instance_id=1, image_id=1, points=[((0.0, 0.0), 0)])
    p = PredictedInstance(instance_id=1, image_id=1, score=1.0, lookup={(0.0, 0.0): 1})
    value = gps(g, p, mesh, GpsConfig(kappa=0.255))
    assert abs(value - 0.500) <= 1e-3, value
    accept("gps-constant", started, 1.0)


def test_geodesic_floyd_warshall_equivalence():
    started = time.monotonic()
    rng = np.random.default_rng(7)
    for trial in range(100):
        mesh = pythagorean_mesh(rng)
        assert mesh.n_vertices <= 50
        oracle = floyd_warshall(dense_edge_matrix(mesh.vertices, mesh.faces))
        for src in range(mesh.n_vertices):
            got = geodesic_from(mesh, src).distance
            assert np.array_equal(got, oracle[src]), f"trial {trial}, src {src}"
    accept("geodesic-oracle", started, 10.0)


def fan_mesh(k=4):
    """k equilateral triangles fanned around a center vertex (developable)."""
    verts = [(0.0, 0.0, 0.0)]
    for i in range(k + 1):
        a = math.radians(60 * i)
        verts.append((math.cos(a), math.sin(a), 0.0))
    faces = [[0, i + 1, i + 2] for i in range(k)]
    n = len(verts)
    return SurfaceMesh(
        np.array(verts), np.array(faces), np.full(n, 1, dtype=np.int64)
    )


def grid_strip_mesh(cols=8):
    from conftest import grid_mesh

    return grid_mesh(cols, 1)


def test_mds_fidelity_on_developable_charts():
    started = time.monotonic()
    cases = {}
    idx = np.arange(9, dtype=np.float64)
    cases["path"] = np.abs(idx[:, None] - idx[None, :])
    cases["grid-strip"] = part_distance_matrix(grid_strip_mesh(), 1)
    cases["fan"] = part_distance_matrix(fan_mesh(), 1)
    for name, D in cases.items():
        est = SmacofEmbedding().fit(D)
        hist = np.asarray(est.stress_history_)
        assert (
            np.diff(hist) <= 1e-10 * np.maximum(hist[:-1], 1.0)
        ).all(), f"{name}: stress not monotone"
        ratio = est.stress_ / (D[np.triu_indices(len(D), k=1)] ** 2).sum()
        assert ratio < 0.05, f"{name}: stress ratio {ratio}"
    accept("mds-fidelity", started, 5.0)


def test_rcp_auc_analytic_cases():
    started = time.monotonic()
    _, auc = rcp_auc([0.05] * 10, a=0.10)
    assert abs(auc - 0.5) <= 1.0 / 256, auc
    _, ones = rcp_auc([0.0] * 10, a=0.10)
    assert ones == 1.0
    accept("rcp-auc-analytic", started, 1.0)


def test_ap_ar_threshold_enumeration():
    started = time.monotonic()
    kappa = 0.255
    e = kappa * math.sqrt(-2.0 * math.log(0.72))
    verts = np.array([[0.0, 0.0, 0.0], [e, 0.0, 0.0], [e / 2, 10.0, 0.0]])
    mesh = SurfaceMesh(verts, np.array([[0, 1, 2]]), np.array([1, 1, 1]))
    gts, preds = [], []
    for im in range(4):
        gts.append(
            GroundTruthInstance(instance_id=im, image_id=im, points=[((0.0, 0.0), 0)])
        )
        preds.append(
            PredictedInstance(
                instance_id=im, image_id=im, score=0.9, lookup={(0.0, 0.0): 1}
            )
        )
    report = evaluate_ap_ar(gts, preds, mesh, GpsConfig(kappa=kappa))
    assert report.ap == 0.5 and report.ar == 0.5, (report.ap, report.ar)

    exact = [
        PredictedInstance(
            instance_id=im, image_id=im, score=0.9, lookup={(0.0, 0.0): 0}
        )
        for im in range(4)
    ]
    perfect = evaluate_ap_ar(gts, exact, mesh, GpsConfig(kappa=kappa))
    assert perfect.ap == 1.0 and perfect.ar == 1.0
    accept("ap-ar-thresholds", started, 1.0)


def test_click_round_trip_and_visibility_oracle():
    started = time.monotonic()
    mesh = tube_mesh(segments=32, rings_per_part=4, n_parts=3, radius=0.1, length=0.6)
    rng = np.random.default_rng(11)
    views_by_part = {
        part: render_part_views(mesh, part, resolution=512) for part in (1, 2, 3)
    }

    # 1000 random surface points; click the most frontal visible view
    attempted = 0
    recovered = 0
    for _ in range(1000):
        part = int(rng.integers(1, 4))
        faces_idx = mesh.part_faces(part)
        face = int(faces_idx[rng.integers(len(faces_idx))])
        p = surface_point(mesh, face, rng.dirichlet([1.0, 1.0, 1.0]))
        views = views_by_part[part]
        proj = project_to_views(views, p)
        visible = [(k, x, y) for k, (x, y, vis) in enumerate(proj) if vis]
        if not visible:
            continue
        attempted += 1
        tri = mesh.faces[p.face]
        n = np.cross(
            mesh.vertices[tri[1]] - mesh.vertices[tri[0]],
            mesh.vertices[tri[2]] - mesh.vertices[tri[0]],
        )
        n /= np.linalg.norm(n)
        k, x, y = max(
            visible, key=lambda item: -float(n @ views[item[0]].camera.forward)
        )
        view = views[k]
        try:
            q = click_to_surface(view, (int(np.floor(x)), int(np.floor(y))))
        except Exception:
            continue
        if surface_distance(mesh, p, q) <= 2.0 * view.camera.scale:
            recovered += 1
    assert attempted >= 900
    assert recovered / attempted >= 0.99, f"{recovered}/{attempted}"

    # visibility flags match the ray oracle on 100 sampled points
    mismatches = 0
    for _ in range(100):
        part = int(rng.integers(1, 4))
        faces_idx = mesh.part_faces(part)
        face = int(faces_idx[rng.integers(len(faces_idx))])
        p = surface_point(mesh, face, rng.dirichlet([1.0, 1.0, 1.0]))
        views = views_by_part[part]
        got = [vis for _, _, vis in project_to_views(views, p)]
        want = [
            ray_visible(mesh, faces_idx, v.camera, p, v.depth_eps) for v in views
        ]
        mismatches += sum(int(a != b) for a, b in zip(got, want))
    assert mismatches == 0, f"{mismatches} visibility flag mismatches"
    accept("click-round-trip", started, 60.0)


@settings(max_examples=100, deadline=None)
@given(score_maps())
def test_decoder_eq3_conformance(maps):
    raster = decode(maps)
    argmax = np.argmax(maps.probs, axis=0)
    np.testing.assert_array_equal(raster.part, argmax)
    rows, cols = np.nonzero(argmax > 0)
    np.testing.assert_array_equal(
        raster.u[rows, cols],
        np.clip(maps.reg_u[argmax[rows, cols] - 1, rows, cols], 0.0, 1.0),
    )
    np.testing.assert_array_equal(
        raster.v[rows, cols],
        np.clip(maps.reg_v[argmax[rows, cols] - 1, rows, cols], 0.0, 1.0),
    )
    bg = argmax == 0
    assert (raster.u[bg] == 0.0).all() and (raster.v[bg] == 0.0).all()


def test_decoder_acceptance_line():
    print("[ACCEPT] decoder-eq3: PASS (property test above)")


def test_end_to_end_service_pipeline(tmp_path):
    started = time.monotonic()
    mesh = tube_mesh(
        segments=24, rings_per_part=6, n_parts=2, radius=0.05, length=0.3
    )
    atlas = build_atlas(mesh)
    service = AnnotationService(
        mesh=mesh, atlas=atlas, store_dir=tmp_path / "store", resolution=512
    )
    client = TestClient(create_app(service))

    masks = []
    for part in (1, 2):
        side = 25  # 625 px -> round(25/10) = 3 targets per part
        base = 5 + 30 * (part - 1)
        pixels = [[base + dx, base + dy] for dx in range(side) for dy in range(side)]
        masks.append({"part": part, "width": 100, "height": 100, "pixels": pixels})
    resp = client.post(
        "/sessions",
        json={"image_id": 1, "width": 100, "height": 100, "masks": masks, "seed": 0},
    )
    assert resp.status_code == 201
    session = resp.json()
    sid = session["session_id"]

    # pick a known interior ground-truth vertex per target
    rng = np.random.default_rng(3)
    interior = {}
    for part in (1, 2):
        vids = mesh.part_vertices(part)
        z = mesh.vertices[vids][:, 2]
        z_lo, z_hi = np.quantile(z, [0.25, 0.75])
        interior[part] = vids[(z >= z_lo) & (z <= z_hi)]

    gt_points = {}  # target index -> (pixel, vertex)
    for index, target in enumerate(session["targets"]):
        part = target["part"]
        vertex = int(interior[part][rng.integers(len(interior[part]))])
        gt_points[index] = ((float(target["x"]), float(target["y"])), vertex)

    def click_target(index, part, vertex):
        # choose the most frontal view for a face incident to the vertex
        face = int(np.nonzero((mesh.faces == vertex).any(axis=1))[0][0])
        corner = int(np.nonzero(mesh.faces[face] == vertex)[0][0])
        bary = np.eye(3)[corner]
        p = surface_point(mesh, face, bary)
        candidates = []
        for v in range(6):
            meta = client.get(f"/parts/{part}/views/{v}/meta").json()
            camera = ViewCamera.from_json(meta["camera"])
            xi, yi, _ = camera.project(p.position)[0]
            tri = mesh.faces[face]
            n = np.cross(
                mesh.vertices[tri[1]] - mesh.vertices[tri[0]],
                mesh.vertices[tri[2]] - mesh.vertices[tri[0]],
            )
            facing = -float(n @ camera.forward) / np.linalg.norm(n)
            candidates.append((facing, v, xi, yi))
        candidates.sort(reverse=True)
        for facing, v, xi, yi in candidates:
            if facing <= 0:
                continue
            # retry neighbors if the exact pixel rasterized as background
            for dx, dy in ((0, 0), (1, 0), (-1, 0), (0, 1), (0, -1)):
                resp = client.post(
                    f"/sessions/{sid}/clicks",
                    json={
                        "target": index,
                        "view": v,
                        "x": int(np.floor(xi)) + dx,
                        "y": int(np.floor(yi)) + dy,
                    },
                )
                if resp.status_code == 200:
                    return resp.json()
        raise AssertionError(f"could not click target {index}")

    while True:
        task = client.get(f"/sessions/{sid}/next-task").json()
        if task["done"]:
            break
        index = task["target"]["index"]
        _, vertex = gt_points[index]
        click_target(index, task["target"]["part"], vertex)

    export = client.get("/export")
    assert export.status_code == 200
    exported = dataset_from_json(json.loads(export.content))

    gt_dataset = dataset_from_json(
        {
            "images": [{"id": 1, "width": 100, "height": 100}],
            "annotations": [
                {
                    "id": 1,
                    "image_id": 1,
                    "dp_points": [
                        {
                            "x": px[0],
                            "y": px[1],
                            "part": int(mesh.part_label[vertex]),
                            "u": 0.0,
                            "v": 0.0,
                            "vertex": vertex,
                        }
                        for px, vertex in gt_points.values()
                    ],
                }
            ],
        }
    )
    gts = ground_truth_instances(gt_dataset)
    preds = predicted_instances(exported)
    report = evaluate_ap_ar(gts, preds, mesh, GpsConfig())
    assert report.auc[0.30] >= 0.99, report.auc
    assert report.ap == 1.0, report.ap
    accept("end-to-end-pipeline", started, 30.0)


def test_sampler_cap_and_determinism():
    started = time.monotonic()
    rng = np.random.default_rng(2)
    # the paper's cap: a million-pixel part still yields 14 targets
    ys, xs = np.mgrid[0:1000, 0:1000]
    huge = PartMask.from_pixels(
        1000, 1000, 1, np.column_stack([xs.ravel(), ys.ravel()])
    )
    assert choose_point_count(huge) == 14

    for trial in range(20):
        n = int(rng.integers(1, 4000))
        pixels = np.column_stack(
            [rng.integers(0, 300, size=n), rng.integers(0, 200, size=n)]
        )
        mask = PartMask.from_pixels(300, 200, 1, pixels)
        k = choose_point_count(mask)
        a = sample_points(mask, k, seed=trial)
        b = sample_points(mask, k, seed=trial)
        assert 1 <= len(a.points) <= 14
        assert np.array_equal(a.points, b.points)
    accept("sampler-cap", started, 30.0)
