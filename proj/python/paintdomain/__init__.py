"""Style transfer, descriptors, classifiers and experiment metrics for painting-domain studies."""

from ._paintdomain import *  # noqa: F401,F403
from ._paintdomain import __doc__ as _doc

__all__ = [
    "IoError",
    "DivergenceError",
    "Model",
    "build_laplacian_pyramid",
    "reconstruct",
    "max_pyramid_levels",
    "laplacian_style_transfer",
    "neural_style_transfer",
    "phog",
    "plbp",
    "hflip",
    "rotate",
    "train_softmax",
    "train_rbf_svm",
    "topk_from_scores",
    "topk_accuracy",
    "confusion_matrix",
    "stochastic_stats",
    "added_image_ratio",
    "run_experiment",
    "cli",
]
