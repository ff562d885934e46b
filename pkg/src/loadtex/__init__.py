"""Regional texture descriptors with Fisher-vector image classification."""

from .classifier import LinearModel, predict, predict_batch, train
from .descriptor import (
    AcsFrame,
    LoadConfig,
    acs_theta,
    adaptive_magnitude,
    extract,
    extract_at_points,
    extract_dense,
    load_code,
    root_normalize,
)
from .encoder import (
    GmmModel,
    PcaModel,
    fisher_encode,
    gmm_fit,
    pca_fit,
    pca_project,
    posterior,
    power_l2_normalize,
)
from .image import (
    GrayImage,
    SampleGrid,
    affine_intensity,
    decode_image,
    dense_grid,
    load_image,
    rescale,
    rotate90,
    rotate90_point,
    sample_bilinear,
    save_pgm,
)
from .patterns import (
    UNIFORM_TABLE,
    PatternConfig,
    build_uniform_table,
    lbp_code,
    lbp_histogram,
    sign_threshold,
    transitions,
    uniform_index,
)
from .pipeline import (
    DatasetManifest,
    EvalReport,
    FeatureCache,
    PipelineConfig,
    SynthParams,
    desk_profile,
    invariance_bench,
    load_manifest,
    make_splits,
    paper_profile,
    run_experiment,
    save_manifest,
    synth_textures,
    throughput_bench,
)

__version__ = "0.1.0"
