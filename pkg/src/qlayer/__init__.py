"""Discrete-spectrum certificates for quantum layers over surfaces of revolution."""

__version__ = "0.1.0"

from .certify import (Certificate, SearchBounds, certify_discrete_spectrum,  # noqa: E402
                      max_certified_width, optimal_epsilon, sigma_ess_threshold)
from .eigensolve import GridSpec, SpectralResult, solve_layer  # noqa: E402
from .geometry import HypothesisError, check_hypotheses  # noqa: E402
from .layer import LayerConfig, WidthError, build_layer_metric, validate_width  # noqa: E402
from .surfaces import REGISTRY, make_surface  # noqa: E402

__all__ = [
    "Certificate", "SearchBounds", "certify_discrete_spectrum", "max_certified_width",
    "optimal_epsilon", "sigma_ess_threshold", "GridSpec", "SpectralResult", "solve_layer",
    "HypothesisError", "check_hypotheses", "LayerConfig", "WidthError", "build_layer_metric",
    "validate_width", "REGISTRY", "make_surface",
]
