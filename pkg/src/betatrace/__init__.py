"""Gaussian beta-ensembles with fixed or bounded trace.

Exact samplers for the unconstrained, fixed-trace and bounded-trace
Gaussian orthogonal/unitary/symplectic eigenvalue laws, sine and Airy
kernel evaluators (scalar and 2x2 quaternion-block), Monte Carlo
estimators of scaled correlation integrals, and numerical verifiers for
the exact identities tying the three ensembles together.
"""

__version__ = "0.1.0"

from .ensembles import (EnsembleSpec, RngStream, SamplingError, SpectrumSample,
                        draw, sample_batch, sample_bounded_trace,
                        sample_fixed_trace, sample_unconstrained)
from .estimators import (Bump, CorrelationEstimate, ScalingWindow, TestFunction,
                         empirical_density, estimate_correlation_integral,
                         gaussian_bump, predicted_integral, product_function,
                         semicircle_density, spline_bump)
from .kernels import (KernelKind, NumericalError, airy_kernel_tail_integral,
                      k_airy, k_sine, matrix_kernel,
                      predicted_correlation_integrand, quaternion_det_sqrt)
from .specialfn import (DomainError, airy_ai, airy_ai_prime, airy_tail_integral,
                        signum, sine_kernel_integral)

__all__ = [
    "__version__",
    "EnsembleSpec", "RngStream", "SamplingError", "SpectrumSample",
    "draw", "sample_batch", "sample_bounded_trace", "sample_fixed_trace",
    "sample_unconstrained",
    "Bump", "CorrelationEstimate", "ScalingWindow", "TestFunction",
    "empirical_density", "estimate_correlation_integral", "gaussian_bump",
    "predicted_integral", "product_function", "semicircle_density", "spline_bump",
    "KernelKind", "NumericalError", "airy_kernel_tail_integral", "k_airy",
    "k_sine", "matrix_kernel", "predicted_correlation_integrand",
    "quaternion_det_sqrt",
    "DomainError", "airy_ai", "airy_ai_prime", "airy_tail_integral", "signum",
    "sine_kernel_integral",
]
