"""Synthetic rail-track scenes, reference-comparison defect inspection, and a
small from-scratch CNN classifier.

Everything lives in the compiled extension; this package just re-exports it.
"""

from ._core import (
    __version__,
    build_dataset,
    case_defects,
    case_description,
    component_labels,
    default_config,
    evaluate,
    generate_experiment,
    inspect,
    inspect_batch,
    predict,
    render_frame,
    roc,
    train,
)

__all__ = [
    "__version__",
    "build_dataset",
    "case_defects",
    "case_description",
    "component_labels",
    "default_config",
    "evaluate",
    "generate_experiment",
    "inspect",
    "inspect_batch",
    "predict",
    "render_frame",
    "roc",
    "train",
]
