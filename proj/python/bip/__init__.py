"""Bi-level pruning toolbox: masked training, top-k projection, baselines
and finite-difference oracles, backed by the C++ core."""

try:
    # installed layout: the extension lives inside the package
    from ._bip import (
        ConfigError,
        Dataset,
        Network,
        NumericError,
        bip_train,
        build_group_map,
        gradcheck,
        init_scores,
        load_idx,
        magnitude_mask,
        make_blobs,
        mask_iou,
        omp_run,
        project_topk,
        train_dense,
    )
except ImportError:  # in-tree build: extension on PYTHONPATH
    from _bip import (
        ConfigError,
        Dataset,
        Network,
        NumericError,
        bip_train,
        build_group_map,
        gradcheck,
        init_scores,
        load_idx,
        magnitude_mask,
        make_blobs,
        mask_iou,
        omp_run,
        project_topk,
        train_dense,
    )

__all__ = [
    "ConfigError",
    "Dataset",
    "Network",
    "NumericError",
    "bip_train",
    "build_group_map",
    "gradcheck",
    "init_scores",
    "load_idx",
    "magnitude_mask",
    "make_blobs",
    "mask_iou",
    "omp_run",
    "project_topk",
    "train_dense",
]
