"""Spectral topology augmentation and contrastive learning for heterogeneous graphs."""

from .augment import (
    AugmentConfig,
    AugmentationScheme,
    SpectralAugmenter,
    apply_scheme,
    complement_matrix,
    learn_schemes,
    materialize_views,
    objective_value,
)
from .encoder import (
    ContrastiveEncoder,
    EncoderParams,
    TrainConfig,
    contrastive_loss,
    select_positives,
    train,
)
from .evalsuite import (
    LinearProbe,
    MetricsReport,
    SplitSpec,
    compute_metrics,
    evaluate_embeddings,
    linear_probe,
    make_split,
    run_ablation,
)
from .hetgraph import (
    HeteroGraph,
    MetaPath,
    MetaPathView,
    NetworkSchema,
    Relation,
    build_all_views,
    build_metapath_view,
    load_heterograph,
    network_schema,
    normalize_view_weights,
    save_heterograph,
    validate_heterograph,
)
from .spectral import (
    SpectrumResult,
    graph_spectrum,
    laplacian_grad_wrt_entry,
    normalized_laplacian,
    spectral_distance,
    spectral_distance_grad,
    spectrum_norm,
    spectrum_norm_grad,
)
from .synthgen import SynthConfig, generate

__version__ = "0.1.0"

__all__ = [
    "AugmentConfig",
    "AugmentationScheme",
    "ContrastiveEncoder",
    "EncoderParams",
    "HeteroGraph",
    "LinearProbe",
    "MetaPath",
    "MetaPathView",
    "MetricsReport",
    "NetworkSchema",
    "Relation",
    "SpectralAugmenter",
    "SpectrumResult",
    "SplitSpec",
    "SynthConfig",
    "TrainConfig",
    "apply_scheme",
    "build_all_views",
    "build_metapath_view",
    "complement_matrix",
    "compute_metrics",
    "contrastive_loss",
    "evaluate_embeddings",
    "generate",
    "graph_spectrum",
    "laplacian_grad_wrt_entry",
    "learn_schemes",
    "linear_probe",
    "load_heterograph",
    "make_split",
    "materialize_views",
    "network_schema",
    "normalize_view_weights",
    "normalized_laplacian",
    "objective_value",
    "run_ablation",
    "save_heterograph",
    "select_positives",
    "spectral_distance",
    "spectral_distance_grad",
    "spectrum_norm",
    "spectrum_norm_grad",
    "train",
    "validate_heterograph",
]
