"""densecorr: dense image-to-surface correspondence toolkit.

Subsystems:

* ``mesh`` — part-labeled triangle meshes and graph geodesics
* ``mds`` / ``atlas`` — SMACOF chart unwrapping and the 24-part UV atlas
* ``sampling`` — k-means annotation-target selection in part masks
* ``render`` — six-view orthographic G-buffer rendering, click mapping
* ``metrics`` — RCP/AUC curves, geodesic point similarity, AP/AR
* ``decoder`` — score-map decoding to (part, U, V) rasters
* ``texture`` — texture transfer through decoded rasters
* ``service`` — annotation session HTTP service with journal persistence
* ``io`` / ``cli`` — dataset files, binary formats, umbrella CLI
"""

from .atlas import PartChart, UVAtlas, build_atlas, normalize_chart, unwrap_part, uv_to_vertex
from .decoder import IuvRaster, ScoreMaps, decode, lift
from .errors import DenseCorrError
from .mds import SmacofEmbedding
from .mesh import (
    GeodesicField,
    SurfaceMesh,
    geodesic_between,
    geodesic_from,
    load_mesh,
    part_distance_matrix,
)
from .metrics import (
    AnnotatorAccuracyRecord,
    EvalReport,
    GpsConfig,
    GroundTruthInstance,
    PredictedInstance,
    RcpCurve,
    annotator_error_field,
    evaluate_ap_ar,
    geodesic_error,
    gps,
    rcp_auc,
)
from .render import (
    SurfacePoint,
    ViewRender,
    click_to_surface,
    project_to_views,
    render_part_views,
)
from .sampling import PartMask, SampledPoints, choose_point_count, sample_points
from .texture import TextureAtlas, apply_texture

__version__ = "0.1.0"

__all__ = [
    "AnnotatorAccuracyRecord",
    "DenseCorrError",
    "EvalReport",
    "GeodesicField",
    "GpsConfig",
    "GroundTruthInstance",
    "IuvRaster",
    "PartChart",
    "PartMask",
    "PredictedInstance",
    "RcpCurve",
    "SampledPoints",
    "ScoreMaps",
    "SmacofEmbedding",
    "SurfaceMesh",
    "SurfacePoint",
    "TextureAtlas",
    "UVAtlas",
    "ViewRender",
    "annotator_error_field",
    "apply_texture",
    "build_atlas",
    "choose_point_count",
    "click_to_surface",
    "decode",
    "evaluate_ap_ar",
    "geodesic_between",
    "geodesic_error",
    "geodesic_from",
    "gps",
    "lift",
    "load_mesh",
    "normalize_chart",
    "part_distance_matrix",
    "project_to_views",
    "rcp_auc",
    "render_part_views",
    "sample_points",
    "unwrap_part",
    "uv_to_vertex",
]
