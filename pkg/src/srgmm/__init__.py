"""k-means on semi-random Gaussian mixtures: generation, seeding, Lloyd, evaluation."""

from .adversary import (CoreCollapse, HalfspaceCollapse, Identity, MeanShift, UniformShrink,
                        halfspace_collapse_map, perturb, spec_from_json)
from .errors import (ConstructionError, ConvergenceError, FormatError, InvalidInput,
                     InvalidParams, InvalidSpec, SplitError, SrgmmError)
from .evaluation import evaluate, match_labels, planted_clustering, misclassification_bound
from .generate import generate, make_params, sample_instance
from .linalg import spectral_norm, topk_svd
from .lloyd import LloydTrace, lloyd, run_lloyd
from .model import (Clustering, Covariance, EvalReport, Instance, MixtureParams,
                    check_monotone, separation)
from .rng import SeedTree
from .seeding import boost_transform, dsquared_seed, init_centers, strong_init, weak_init

__version__ = "0.1.0"

__all__ = [
    "Clustering", "ConstructionError", "ConvergenceError", "CoreCollapse", "Covariance",
    "EvalReport", "FormatError", "HalfspaceCollapse", "Identity", "Instance", "InvalidInput",
    "InvalidParams", "InvalidSpec", "LloydTrace", "MeanShift", "MixtureParams", "SeedTree",
    "SplitError", "SrgmmError", "UniformShrink", "boost_transform", "check_monotone",
    "dsquared_seed", "evaluate", "generate", "halfspace_collapse_map", "init_centers", "lloyd",
    "make_params", "match_labels", "perturb", "planted_clustering", "run_lloyd", "sample_instance",
    "separation", "spec_from_json", "spectral_norm", "strong_init", "misclassification_bound", "topk_svd",
    "weak_init",
]
