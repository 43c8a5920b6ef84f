"""Umbrella command-line interface.

Exit codes are a stable scripting contract: 0 success, 2 usage error,
3 data error (anything raised as a DenseCorrError), 4 internal error.
Shared flags (--mesh, --labels, --atlas, --seed, --units) may be given
either on the group or on the subcommand; the subcommand wins.
"""

from __future__ import annotations

import csv
import json
import sys
from pathlib import Path

import click
import numpy as np

from .errors import DenseCorrError, SchemaError

UNITS_PER_METER = {"m": 1.0, "cm": 100.0, "mm": 1000.0}


def _global_options(fn):
    for opt in (
        click.option("--mesh", "mesh_path", type=click.Path(), default=None, help="Mesh file (v/f lines)."),
        click.option("--labels", "labels_path", type=click.Path(), default=None, help="JSON array of per-vertex part labels."),
        click.option("--atlas", "atlas_path", type=click.Path(), default=None, help="UV atlas JSON."),
        click.option("--seed", type=int, default=None, help="Sampling seed."),
        click.option("--units", type=click.Choice(sorted(UNITS_PER_METER)), default=None, help="Mesh length unit (default m)."),
        click.option("--subdivide", is_flag=True, default=None, help="One level of edge-midpoint subdivision."),
    ):
        fn = opt(fn)
    return fn


def _resolve(ctx, key, value, required=False, default=None):
    if value is None:
        value = (ctx.obj or {}).get(key)
    if value is None:
        value = default
    if required and value is None:
        raise click.UsageError(f"missing required option --{key.replace('_', '-')}")
    return value


def _load_mesh(ctx, mesh_path, labels_path, subdivide=None):
    from .mesh import load_mesh

    mesh_path = _resolve(ctx, "mesh", mesh_path, required=True)
    labels_path = _resolve(ctx, "labels", labels_path, required=True)
    subdivide = _resolve(ctx, "subdivide", subdivide, default=False)
    return load_mesh(mesh_path, labels_path, subdivide=bool(subdivide))


@click.group()
@click.option("--mesh", "mesh_path", type=click.Path(), default=None)
@click.option("--labels", "labels_path", type=click.Path(), default=None)
@click.option("--atlas", "atlas_path", type=click.Path(), default=None)
@click.option("--seed", type=int, default=None)
@click.option("--units", type=click.Choice(sorted(UNITS_PER_METER)), default=None)
@click.option("--subdivide", is_flag=True, default=None)
@click.pass_context
def cli(ctx, mesh_path, labels_path, atlas_path, seed, units, subdivide):
    """Dense image-to-surface correspondence toolkit."""
    ctx.obj = {
        "mesh": mesh_path,
        "labels": labels_path,
        "atlas": atlas_path,
        "seed": seed,
        "units": units,
        "subdivide": subdivide,
    }


@cli.command()
@_global_options
@click.option("--supplied", type=click.Path(), default=None, help="Charts to pass through verbatim.")
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.pass_context
def unwrap(ctx, mesh_path, labels_path, atlas_path, seed, units, subdivide, supplied, out_path):
    """Build the per-part UV atlas (MDS charts + supplied pass-through)."""
    from .atlas import build_atlas, load_supplied_charts, save_atlas

    mesh = _load_mesh(ctx, mesh_path, labels_path, subdivide=subdivide)
    supplied_charts = load_supplied_charts(supplied) if supplied else None
    atlas = build_atlas(mesh, supplied_charts)
    save_atlas(atlas, out_path)
    click.echo(f"wrote {len(atlas.parts())} charts to {out_path}")


@cli.command("render-views")
@_global_options
@click.option("--part", type=int, required=True)
@click.option("--res", type=int, default=512, show_default=True)
@click.option("--out", "out_dir", type=click.Path(), required=True)
@click.pass_context
def render_views(ctx, mesh_path, labels_path, atlas_path, seed, units, subdivide, part, res, out_dir):
    """Render the six views of one part with G-buffers."""
    from .render import render_part_views, save_view_bundle

    mesh = _load_mesh(ctx, mesh_path, labels_path, subdivide=subdivide)
    for view in render_part_views(mesh, part, resolution=res):
        save_view_bundle(view, out_dir)
    click.echo(f"wrote 6 view bundles for part {part} to {out_dir}")


@cli.command("sample-points")
@_global_options
@click.option("--mask", "mask_path", type=click.Path(), required=True, help="PNG; nonzero = member.")
@click.option("--part", type=int, required=True)
@click.option("--k", type=int, default=None, help="Override the size-based count rule.")
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.pass_context
def sample_points_cmd(ctx, mesh_path, labels_path, atlas_path, seed, units, subdivide, mask_path, part, k, out_path):
    """Sample annotation targets from a part mask."""
    from .io import canonical_dump
    from .sampling import choose_point_count, mask_from_png, sample_points

    mask = mask_from_png(mask_path, part)
    seed = _resolve(ctx, "seed", seed, default=0)
    count = k if k is not None else choose_point_count(mask)
    sampled = sample_points(mask, count, seed=seed)
    payload = {
        "part": part,
        "points": [
            {"order": int(i), "x": int(x), "y": int(y)}
            for i, (x, y) in zip(sampled.order, sampled.points)
        ],
    }
    Path(out_path).write_text(canonical_dump(payload), encoding="utf-8")
    click.echo(f"sampled {len(sampled.points)} targets for part {part}")


@cli.command()
@_global_options
@click.option("--views", "views_dir", type=click.Path(), default=None, help="Pre-rendered view bundles.")
@click.option("--store", "store_dir", type=click.Path(), envvar="DENSECORR_STORE", required=True)
@click.option("--port", type=int, default=8008, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--res", type=int, default=512, show_default=True)
@click.pass_context
def serve(ctx, mesh_path, labels_path, atlas_path, seed, units, subdivide, views_dir, store_dir, port, host, res):
    """Run the annotation session service."""
    import uvicorn

    from .atlas import load_atlas
    from .service import AnnotationService, create_app

    mesh = _load_mesh(ctx, mesh_path, labels_path, subdivide=subdivide)
    atlas_path = _resolve(ctx, "atlas", atlas_path, required=True)
    atlas = load_atlas(atlas_path)
    atlas.validate_against(mesh)
    service = AnnotationService(
        mesh=mesh,
        atlas=atlas,
        store_dir=store_dir,
        views_dir=views_dir,
        resolution=res,
        default_seed=_resolve(ctx, "seed", seed, default=0),
    )
    uvicorn.run(create_app(service), host=host, port=port)


@cli.command()
@click.option("--maps", "maps_path", type=click.Path(), required=True, help="DCSM score maps.")
@click.option("--out", "out_path", type=click.Path(), required=True, help="IUV PNG.")
def decode(maps_path, out_path):
    """Decode score maps to a per-pixel (part, U, V) raster."""
    from .decoder import decode as decode_maps
    from .decoder import read_score_maps, write_iuv_png

    raster = decode_maps(read_score_maps(maps_path))
    write_iuv_png(raster, out_path)
    fg = int((raster.part > 0).sum())
    click.echo(f"decoded {raster.part.shape[1]}x{raster.part.shape[0]} raster ({fg} foreground px)")


@cli.command()
@_global_options
@click.option("--gt", "gt_path", type=click.Path(), required=True)
@click.option("--pred", "pred_path", type=click.Path(), required=True)
@click.option("--report", "report_path", type=click.Path(), required=True)
@click.option("--kappa", type=float, default=None, help="Override the GPS bandwidth.")
@click.pass_context
def evaluate(ctx, mesh_path, labels_path, atlas_path, seed, units, subdivide, gt_path, pred_path, report_path, kappa):
    """Evaluate predictions against ground truth (AUC, AP/AR, RCP)."""
    from .atlas import load_atlas
    from .io import canonical_dump, ground_truth_instances, predicted_instances, read_dataset
    from .metrics import GpsConfig, evaluate_ap_ar

    mesh = _load_mesh(ctx, mesh_path, labels_path, subdivide=subdivide)
    atlas_path = _resolve(ctx, "atlas", atlas_path)
    atlas = load_atlas(atlas_path) if atlas_path else None
    units = _resolve(ctx, "units", units, default="m")
    cfg = GpsConfig().scaled(UNITS_PER_METER[units])
    if kappa is not None:
        cfg = GpsConfig(kappa=kappa, thresholds=cfg.thresholds, auc_radii=cfg.auc_radii)
    gts = ground_truth_instances(read_dataset(gt_path), atlas)
    preds = predicted_instances(read_dataset(pred_path), atlas)
    report = evaluate_ap_ar(gts, preds, mesh, cfg)

    summary = report.summary()
    for key, value in summary.items():
        click.echo(f"{key}: {value:.4f}")
    payload = {
        "summary": summary,
        "n_ground_truth": report.n_ground_truth,
        "n_predictions": report.n_predictions,
        "ap_per_threshold": {f"{t:.2f}": v for t, v in report.ap_per_threshold.items()},
        "ar_per_threshold": {f"{t:.2f}": v for t, v in report.ar_per_threshold.items()},
        "rcp_curves": {
            f"{radius:g}": {
                "thresholds": curve.thresholds.tolist(),
                "fractions": curve.fractions.tolist(),
                "count": curve.count,
            }
            for radius, curve in report.curves.items()
        },
        "instance_gps": [
            {"image_id": im, "pred_id": pid, "gt_id": gid, "gps": value}
            for im, pid, gid, value in report.instance_gps
        ],
    }
    Path(report_path).write_text(canonical_dump(payload), encoding="utf-8")


@cli.command("annotator-accuracy")
@_global_options
@click.option("--truth", "truth_path", type=click.Path(), required=True, help="Dataset with true vertices.")
@click.option("--estimated", "est_path", type=click.Path(), required=True, help="Dataset with annotator estimates.")
@click.option("--out-csv", "csv_path", type=click.Path(), required=True)
@click.pass_context
def annotator_accuracy(ctx, mesh_path, labels_path, atlas_path, seed, units, subdivide, truth_path, est_path, csv_path):
    """Per-vertex average annotator error field (true vs estimated vertices).

    Records are matched by image id and pixel; per image the sampled
    errors are interpolated to every vertex by geodesic nearest neighbor
    and then averaged across images.
    """
    from .atlas import load_atlas
    from .io import read_dataset
    from .metrics import annotator_error_field, records_from_vertex_pairs

    mesh = _load_mesh(ctx, mesh_path, labels_path, subdivide=subdivide)
    atlas_path = _resolve(ctx, "atlas", atlas_path)
    atlas = load_atlas(atlas_path) if atlas_path else None

    def vertex_map(dataset):
        out = {}
        for ann in dataset.annotations:
            for p in ann.dp_points:
                if p.vertex is not None:
                    vertex = p.vertex
                elif atlas is not None:
                    from .atlas import uv_to_vertex

                    vertex = uv_to_vertex(atlas, p.part, p.u, p.v)
                else:
                    raise SchemaError("points need 'vertex' or an --atlas")
                out[(ann.image_id, p.x, p.y)] = vertex
        return out

    truth = vertex_map(read_dataset(truth_path))
    estimated = vertex_map(read_dataset(est_path))
    pairs_by_image: dict = {}
    for (image_id, x, y), true_vertex in truth.items():
        est_vertex = estimated.get((image_id, x, y))
        pairs_by_image.setdefault(image_id, []).append((true_vertex, est_vertex))
    records = records_from_vertex_pairs(mesh, pairs_by_image)
    field = annotator_error_field(records, mesh)

    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["vertex", "part", "mean_error"])
        for vid in range(mesh.n_vertices):
            if mesh.part_label[vid] > 0:
                writer.writerow([vid, int(mesh.part_label[vid]), repr(float(field[vid]))])
    labeled = field[~np.isnan(field)]
    click.echo(f"images: {len(records)}")
    click.echo(f"mean error over surface: {labeled.mean():.6f}")
    for part in sorted(set(mesh.part_label.tolist()) - {0}):
        values = field[mesh.part_label == part]
        click.echo(f"part {part:2d}: {np.nanmean(values):.6f}")


@cli.command()
@click.option("--iuv", "iuv_path", type=click.Path(), required=True)
@click.option("--image", "image_path", type=click.Path(), required=True)
@click.option("--atlas", "atlas_path", type=click.Path(), required=True, help="Texture PNG (4x6 grid) or tile directory.")
@click.option("--out", "out_path", type=click.Path(), required=True)
def texture(iuv_path, image_path, atlas_path, out_path):
    """Paint an image from a 24-tile texture atlas via its IUV raster."""
    from PIL import Image

    from .decoder import read_iuv_png
    from .texture import TextureAtlas, apply_texture

    raster = read_iuv_png(iuv_path)
    with Image.open(image_path) as im:
        base = np.asarray(im.convert("RGB"))
    if Path(atlas_path).is_dir():
        tex = TextureAtlas.from_directory(atlas_path)
    else:
        tex = TextureAtlas.from_grid_image(atlas_path)
    out = apply_texture(raster, base, tex)
    Image.fromarray(out, mode="RGB").save(out_path)
    click.echo(f"wrote {out_path}")


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as exc:
        return int(exc.exit_code)
    except click.Abort:
        return 130
    except click.UsageError as exc:
        click.echo(f"usage error: {exc.format_message()}", err=True)
        return 2
    except click.ClickException as exc:
        exc.show()
        return 2
    except (DenseCorrError, OSError) as exc:
        click.echo(f"data error: {exc}", err=True)
        return 3
    except Exception as exc:  # noqa: BLE001 - contract: internal errors exit 4
        click.echo(f"internal error: {exc!r}", err=True)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
