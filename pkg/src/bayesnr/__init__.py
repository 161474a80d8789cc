"""MMSE and maximum-SNR Bayesian estimation for additive non-Gaussian noise
and quantized observations."""
from bayesnr._kernels import BACKEND
from bayesnr.distributions import (
    GaussianLaw,
    GaussianMixtureLaw,
    LaplaceLaw,
    LaplaceMixtureLaw,
    ObservationModel,
    laplace_mixture_model,
    reference_model,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "GaussianLaw",
    "GaussianMixtureLaw",
    "LaplaceLaw",
    "LaplaceMixtureLaw",
    "ObservationModel",
    "laplace_mixture_model",
    "reference_model",
]
