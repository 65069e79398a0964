"""Corner-guided localization of electrode terminals in radiographs.

The pipeline: segment-test corner detection ranks gradient-rich points,
their cluster statistics bound a crop around the terminal band, a
heatmap predictor proposes per-terminal positions inside the crop, and a
confidence-weighted fusion with nearby corners refines them. Evaluation
reports normalized mean error plus keypoint- and sample-level accuracy
fractions.
"""

from ._kernels import BACKEND as KERNEL_BACKEND
from .config import CornerConfig, PipelineConfig, load_config
from .corners import (
    CornerPoint,
    CornerSet,
    cluster_center,
    detect_top_n,
    fast_detect,
    harris_response,
    harris_response_map,
    orientation,
)
from .correct import (
    CorrectedPole,
    CorrectionParams,
    PatchFeature,
    confidence,
    correct_all,
    fuse,
    nearest_corner_within,
    patch_feature,
    reference_feature,
)
from .heatmap import (
    Heatmap,
    PolePrediction,
    PredictorConfig,
    decode_all,
    decode_heatmap,
    mse_loss,
    predict,
    read_heatmaps,
    render_gaussian,
    write_heatmaps,
)
from .image import (
    AffineParams,
    GrayImage,
    Point2,
    affine_warp,
    extract_patch,
    load_image,
    round_half_away,
    save_image,
)
from .metrics import (
    EvalReport,
    SampleResult,
    evaluate,
    nme,
    pck,
    pcs,
    relative_gain,
)
from .roi import (
    Roi,
    RoiParams,
    RowProfile,
    estimate_roi,
    roi_from_bounds,
    row_profile,
    scan_bounds,
)
from .synth import (
    CellSpec,
    LabeledPole,
    LabeledSample,
    degrade_predictions,
    generate_dataset,
    generate_sample,
    load_manifest,
)

__version__ = "0.1.0"
