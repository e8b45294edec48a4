"""Monte Carlo estimators of correlation integrals and spectral density.

The estimators target integrals of compactly supported test functions
against the n-point correlation functions under three affine spectral
windows:

    zero:  x = (pi/(2N)) t
    bulk:  x = u + t / (N omega(u)),  omega(u) = (2/pi) sqrt(1 - u^2)
    edge:  x = 1 + t / (2 N^(2/3))   (left edge available via side = -1)

For a test function f of arity n, the per-sample statistic is the sum of f
over ordered n-tuples of distinct eigenvalue indices, evaluated in window
coordinates; its expectation is exactly
int f(t) Jacobian^n R_n(x(t)) d^n t, so means and standard errors across
samples estimate the quantities the limit theorems are about.

Test functions are products of 1-d bumps (truncated Gaussians and cubic
B-splines, both exactly compactly supported with closed-form integrals).
Eigenvalues outside the support box are dropped before tuples are formed;
after bulk/edge scaling only O(1) of them survive, keeping the tuple sum
O(1) per sample.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .kernels import KernelKind, NumericalError, one_point_prediction, two_point_prediction


def semicircle_density(x):
    """Semicircle level density (2/pi) sqrt((1 - x^2)_+)."""
    x = np.asarray(x, dtype=float)
    return (2.0 / np.pi) * np.sqrt(np.clip(1.0 - x * x, 0.0, None))


@dataclass(frozen=True)
class ScalingWindow:
    """Affine map from window coordinate t to spectral coordinate x."""

    regime: str
    n: int
    u: float = 0.0
    side: int = 1

    def __post_init__(self):
        if self.regime not in ("zero", "bulk", "edge"):
            raise ValueError(f"unknown regime {self.regime!r}")
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if self.regime == "bulk" and not abs(self.u) < 1.0:
            raise ValueError(f"bulk point u must satisfy |u| < 1, got {self.u}")
        if self.side not in (-1, 1):
            raise ValueError(f"edge side must be +-1, got {self.side}")

    @classmethod
    def zero(cls, n: int) -> "ScalingWindow":
        return cls("zero", n)

    @classmethod
    def bulk(cls, n: int, u: float) -> "ScalingWindow":
        return cls("bulk", n, u=float(u))

    @classmethod
    def edge(cls, n: int, side: int = 1) -> "ScalingWindow":
        return cls("edge", n, side=side)

    @property
    def jacobian(self) -> float:
        """dx/dt of the window map."""
        if self.regime == "zero":
            return math.pi / (2.0 * self.n)
        if self.regime == "bulk":
            return 1.0 / (self.n * float(semicircle_density(self.u)))
        return 1.0 / (2.0 * self.n ** (2.0 / 3.0))

    def scale(self, t):
        """Spectral coordinate x(t)."""
        t = np.asarray(t, dtype=float)
        if self.regime == "zero":
            return self.jacobian * t
        if self.regime == "bulk":
            return self.u + self.jacobian * t
        return self.side * (1.0 + self.jacobian * t)

    def invert(self, x):
        """Window coordinate t(x); exact affine inverse."""
        x = np.asarray(x, dtype=float)
        if self.regime == "zero":
            return x / self.jacobian
        if self.regime == "bulk":
            return (x - self.u) / self.jacobian
        return (self.side * x - 1.0) / self.jacobian


# ---------------------------------------------------------------------------
# test functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Bump:
    """Compactly supported 1-d bump with a closed-form integral.

    kinds: "gauss" (truncated, continuously clipped Gaussian), "spline"
    (cubic B-spline), "flat" (indicator; half_width may be inf, used by
    counting tests).
    """

    kind: str
    center: float = 0.0
    half_width: float = 2.0
    sigma: float | None = None
    amplitude: float = 1.0

    def __post_init__(self):
        if self.kind not in ("gauss", "spline", "flat"):
            raise ValueError(f"unknown bump kind {self.kind!r}")
        if not self.half_width > 0:
            raise ValueError("half_width must be positive")
        if self.kind != "flat" and not math.isfinite(self.half_width):
            raise ValueError("only flat bumps may have infinite support")

    @property
    def _sigma(self) -> float:
        return self.sigma if self.sigma is not None else self.half_width / 2.0

    @property
    def support(self) -> tuple[float, float]:
        return (self.center - self.half_width, self.center + self.half_width)

    @property
    def knots(self) -> tuple[float, ...]:
        """Points where the profile loses smoothness (quadrature panel edges)."""
        if self.kind == "spline":
            h = self.half_width / 2.0
            return tuple(self.center + h * k for k in (-2.0, -1.0, 0.0, 1.0, 2.0))
        return self.support

    @property
    def mass(self) -> float:
        """Closed-form integral over the real line."""
        w = self.half_width
        if self.kind == "flat":
            return self.amplitude * 2.0 * w
        if self.kind == "spline":
            return self.amplitude  # B-spline profile has unit mass by scaling
        s = self._sigma
        edge = math.exp(-0.5 * (w / s) ** 2)
        return self.amplitude * (s * math.sqrt(2.0 * math.pi) * math.erf(w / (s * math.sqrt(2.0)))
                                 - 2.0 * w * edge)

    def normalized(self) -> "Bump":
        m = self.mass / self.amplitude
        if not (math.isfinite(m) and m > 0):
            raise ValueError("cannot normalise a bump without finite positive mass")
        return Bump(self.kind, self.center, self.half_width, self.sigma,
                    amplitude=self.amplitude / m)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        d = t - self.center
        inside = np.abs(d) <= self.half_width
        if self.kind == "flat":
            return np.where(inside, self.amplitude, 0.0)
        if self.kind == "gauss":
            s = self._sigma
            edge = math.exp(-0.5 * (self.half_width / s) ** 2)
            return np.where(inside, self.amplitude * (np.exp(-0.5 * (d / s) ** 2) - edge), 0.0)
        # cubic B-spline scaled to support [-half_width, half_width], mass 1
        h = self.half_width / 2.0
        a = np.abs(d) / h
        core = (4.0 - 6.0 * a * a + 3.0 * a ** 3) / 6.0
        wing = (2.0 - a) ** 3 / 6.0
        prof = np.where(a <= 1.0, core, np.where(a <= 2.0, wing, 0.0))
        return self.amplitude * prof / h


@dataclass(frozen=True)
class TestFunction:
    """Product of 1-d bumps; arity = number of factors."""

    __test__ = False  # not a pytest class, despite the name

    bumps: tuple[Bump, ...]

    def __post_init__(self):
        if len(self.bumps) < 1:
            raise ValueError("need at least one bump")

    @property
    def arity(self) -> int:
        return len(self.bumps)

    def support(self, i: int) -> tuple[float, float]:
        return self.bumps[i].support

    def __call__(self, *coords):
        if len(coords) != self.arity:
            raise ValueError(f"expected {self.arity} coordinate arrays, got {len(coords)}")
        out = self.bumps[0](coords[0])
        for b, c in zip(self.bumps[1:], coords[1:]):
            out = out * b(c)
        return out


def gaussian_bump(center: float = 0.0, half_width: float = 2.0,
                  sigma: float | None = None) -> Bump:
    return Bump("gauss", center, half_width, sigma)


def spline_bump(center: float = 0.0, half_width: float = 2.0) -> Bump:
    return Bump("spline", center, half_width)


def product_function(bump: Bump, arity: int) -> TestFunction:
    return TestFunction(tuple([bump] * arity))


# ---------------------------------------------------------------------------
# estimation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CorrelationEstimate:
    value: float
    stderr: float
    arity: int
    samples: int
    window: ScalingWindow


def _tuple_sum(f: TestFunction, ts: np.ndarray) -> float:
    """Sum of f over ordered tuples of distinct indices of ts."""
    n = f.arity
    if ts.size < n:
        return 0.0
    if n == 1:
        return float(np.sum(f.bumps[0](ts)))
    if n == 2:
        a = f.bumps[0](ts)
        b = f.bumps[1](ts)
        return float(np.sum(a) * np.sum(b) - np.sum(a * b))
    vals = np.stack([b(ts) for b in f.bumps])
    live = np.nonzero(np.any(vals != 0.0, axis=0))[0]
    total = 0.0
    for perm in itertools.permutations(live, n):
        total += float(np.prod(vals[np.arange(n), list(perm)]))
    return total


def estimate_correlation_integral(samples, f: TestFunction,
                                  window: ScalingWindow) -> CorrelationEstimate:
    """Monte Carlo estimate of int f(t) J^n R_n(x(t)) d^n t.

    Reduction order is fixed by sample index, so permuting the input
    stream cannot change the result bit for bit.
    """
    samples = sorted(samples, key=lambda s: s.index)
    if not samples:
        raise ValueError("empty sample stream")
    spec = samples[0].spec
    for s in samples:
        if s.spec != spec:
            raise ValueError("all samples must share one ensemble spec")
    if f.arity > spec.n:
        raise ValueError(f"arity {f.arity} exceeds matrix dimension {spec.n}")
    lo = min(f.support(i)[0] for i in range(f.arity))
    hi = max(f.support(i)[1] for i in range(f.arity))
    vals = np.empty(len(samples))
    for k, s in enumerate(samples):
        t = window.invert(s.eigenvalues)
        ts = t[(t >= lo) & (t <= hi)]
        vals[k] = _tuple_sum(f, ts)
    value = float(np.mean(vals))
    stderr = float(np.std(vals, ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else 0.0
    return CorrelationEstimate(value=value, stderr=stderr, arity=f.arity,
                               samples=len(vals), window=window)


def empirical_density(samples, bins: int, range_: tuple[float, float]):
    """Binned estimate of the normalised level density (1/N) R_1.

    Returns (bin_centers, values); values are per-sample mean counts
    divided by N times the bin width.
    """
    samples = sorted(samples, key=lambda s: s.index)
    if not samples:
        raise ValueError("empty sample stream")
    if bins < 1:
        raise ValueError(f"bins must be >= 1, got {bins}")
    lo, hi = float(range_[0]), float(range_[1])
    if not hi > lo:
        raise ValueError("empty range")
    n_dim = samples[0].spec.n
    all_eigs = np.concatenate([s.eigenvalues for s in samples])
    counts, edges = np.histogram(all_eigs, bins=bins, range=(lo, hi))
    width = (hi - lo) / bins
    values = counts / (len(samples) * n_dim * width)
    centers = 0.5 * (edges[1:] + edges[:-1])
    return centers, values


# ---------------------------------------------------------------------------
# quadrature of the limit predictions
# ---------------------------------------------------------------------------

def _panel_rule(lo: float, hi: float, m: int, knots=()):
    """Gauss-Legendre nodes/weights with panels split at interior knots."""
    interior = sorted(k for k in knots if lo < k < hi)
    edges = np.array([lo, *interior, hi])
    x, w = np.polynomial.legendre.leggauss(m)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def _predicted_once(f: TestFunction, kind: KernelKind, m: int) -> float:
    if f.arity == 1:
        lo, hi = f.support(0)
        t, w = _panel_rule(lo, hi, m, f.bumps[0].knots)
        return float(np.sum(w * f.bumps[0](t) * one_point_prediction(kind, t)))
    (lo0, hi0), (lo1, hi1) = f.support(0), f.support(1)
    if kind.beta == 2:
        s, ws = _panel_rule(lo0, hi0, m, f.bumps[0].knots)
        t, wt = _panel_rule(lo1, hi1, m, f.bumps[1].knots)
        grid = two_point_prediction(kind, s[:, None], t[None, :])
        vals = f.bumps[0](s)[:, None] * f.bumps[1](t)[None, :] * grid
        return float(ws @ vals @ wt)
    # beta in {1, 4}: the block entries carry sgn(x - y), so the integrand
    # has a kink along the diagonal; integrate the two smooth triangles
    # separately to keep Gauss-Legendre convergence
    s, ws = _panel_rule(lo0, hi0, m, f.bumps[0].knots)
    fs = f.bumps[0](s)
    total = 0.0
    for si, wi, fsi in zip(s, ws, fs):
        if fsi == 0.0:
            continue
        for a, b in ((max(si, lo1), hi1), (lo1, min(si, hi1))):
            if b <= a:
                continue
            t, wt = _panel_rule(a, b, m, f.bumps[1].knots)
            vals = f.bumps[1](t) * two_point_prediction(kind, np.full_like(t, si), t)
            total += wi * fsi * float(np.sum(wt * vals))
    return total


def predicted_integral(f: TestFunction, kind: KernelKind, tol: float = 1e-6,
                       initial_nodes: int = 32, max_doublings: int = 6) -> float:
    """Tensor-grid quadrature of f times the n-point limit prediction.

    The node count doubles until successive resolutions agree within tol.
    """
    if f.arity not in (1, 2):
        raise ValueError("quadrature supports arity 1 and 2 only")
    for i in range(f.arity):
        lo, hi = f.support(i)
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise ValueError("prediction quadrature needs compact support")
    m = initial_nodes
    prev = _predicted_once(f, kind, m)
    for _ in range(max_doublings):
        m *= 2
        cur = _predicted_once(f, kind, m)
        if abs(cur - prev) <= tol:
            return cur
        prev = cur
    raise NumericalError(
        f"prediction quadrature did not converge to {tol} by {m} nodes")
