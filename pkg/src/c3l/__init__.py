"""Gaussian cross-entropy clustering with controlled leakage across a decision boundary."""

from .estimator import C3L, CEC, CECH
from .evaluation import bic, empirical_leakage, evaluate, nmi
from .exceptions import C3LError, DegenerateClusterError, InputError, OptimizationError
from .geometry import CanonicalTransform, Hyperplane, canonicalize, classify, embed_discriminant
from .gauss1d import constrained_mle, leakage_of, quantile_upper
from .optimizer import ClusteringResult, OptimizerConfig, run, run_cec, run_cec_h

__version__ = "0.1.0"

__all__ = [
    "C3L", "CEC", "CECH", "C3LError", "CanonicalTransform", "ClusteringResult",
    "DegenerateClusterError", "Hyperplane", "InputError", "OptimizationError",
    "OptimizerConfig", "bic", "canonicalize", "classify", "constrained_mle",
    "embed_discriminant", "empirical_leakage", "evaluate", "leakage_of", "nmi",
    "quantile_upper", "run", "run_cec", "run_cec_h",
]
