"""Scalar special functions underlying the sine and Airy kernels.

Airy Ai and Ai' are evaluated through scipy on the documented accuracy
range [-20, 40].  The Airy tail integral is anchored to the exact constant
int_0^inf Ai = 1/3 and computed with composite Gauss-Legendre panels, so
the improper upper limit never has to be discretised.  The sine-kernel
primitive is Si(pi*s)/pi.

Everything here is pure and stateless: identical inputs give bit-identical
outputs, and concurrent use needs no coordination.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import special as _sp

#: Documented accuracy range for the Airy evaluations.
AIRY_DOMAIN = (-20.0, 40.0)

#: Exact value of int_0^inf Ai(z) dz.
AIRY_TOTAL_TAIL_AT_ZERO = 1.0 / 3.0


class DomainError(ValueError):
    """Argument outside a documented accuracy range."""


def _check_airy_domain(x: float, name: str = "x") -> float:
    x = float(x)
    lo, hi = AIRY_DOMAIN
    if math.isnan(x) or x < lo or x > hi:
        raise DomainError(f"{name}={x!r} outside Airy accuracy range [{lo}, {hi}]")
    return x


def airy_ai(x: float) -> float:
    """Airy function Ai(x) on [-20, 40], accurate to 1e-10 relative."""
    x = _check_airy_domain(x)
    return float(_sp.airy(x)[0])


def airy_ai_prime(x: float) -> float:
    """Derivative Ai'(x) on [-20, 40], accurate to 1e-10 relative."""
    x = _check_airy_domain(x)
    return float(_sp.airy(x)[1])


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(24)


def _integrate_ai(a: float, b: float) -> float:
    """int_a^b Ai(z) dz by composite 24-point Gauss-Legendre panels.

    Ai is entire, so panels of width <= 0.5 put the quadrature error far
    below the 1e-10 contract.
    """
    if b == a:
        return 0.0
    n_panels = max(1, int(math.ceil(abs(b - a) / 0.5)))
    edges = np.linspace(a, b, n_panels + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    pts = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    vals = _sp.airy(pts)[0]
    return float(np.sum(half[:, None] * _GL_WEIGHTS[None, :] * vals))


def airy_tail_integral(y: float) -> float:
    """int_y^inf Ai(z) dz for y in [-20, 40].

    Computed as 1/3 - int_0^y Ai for y >= 0 and 1/3 + int_y^0 Ai for
    y < 0, anchoring the improper integral to the exact constant 1/3.
    """
    y = _check_airy_domain(y, "y")
    if y >= 0.0:
        return AIRY_TOTAL_TAIL_AT_ZERO - _integrate_ai(0.0, y)
    return AIRY_TOTAL_TAIL_AT_ZERO + _integrate_ai(y, 0.0)


def sine_kernel_integral(s: float) -> float:
    """int_0^s sin(pi t)/(pi t) dt = Si(pi s)/pi.

    Odd in s by construction (evaluated at |s| and sign-flipped), entire,
    and tending to +-1/2 as s -> +-inf.
    """
    s = float(s)
    if s == 0.0:
        return 0.0
    val = float(_sp.sici(math.pi * abs(s))[0]) / math.pi
    return val if s > 0 else -val


def signum(s: float) -> float:
    """Sign of s with the convention sgn(0) = 0."""
    s = float(s)
    if s == 0.0:
        return 0.0
    return math.copysign(1.0, s)
