"""Hierarchical local-contour shape encoding."""

from ._core import (
    BinaryMask,
    EncoderConfig,
    Error,
    HierarchicalEncoding,
    LocalContour,
    SubspaceBasis,
    build_contour_matrix,
    choose_center,
    connected_components,
    contour_to_polygon,
    distance_transform,
    effective_rank,
    fms_basis,
    generate_synthetic,
    hierarchical_encode,
    iou,
    max_principal_angle,
    project,
    rasterize_polygon,
    reconstruct_mask,
    reconstruct_radii,
    sample_polar,
    solidity,
    svd_basis,
    with_radii,
)

__all__ = [name for name in dir() if not name.startswith("_")]
