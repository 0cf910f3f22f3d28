"""Kernels supported on [-1, 1] and the rate-optimal bandwidth rules.

The estimators in this package only admit symmetric density kernels that are
bounded away from zero on their support [-1, 1].  That requirement excludes
the usual Epanechnikov choice, so the two shipped shapes are the box kernel
and a renormalized truncated Gaussian.

Bandwidths are specified only up to constants by the theory; every rule here
exposes those constants (``constant_c1``, ``constant_c2``) with default 1.0,
since rate verification needs the exponent rather than the constant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .errors import (
    InvalidSampleSize,
    MissingBeta,
    NonPositiveBandwidth,
    SmoothnessOutOfRange,
)

__all__ = [
    "KernelKind",
    "KernelSpec",
    "BandwidthPlan",
    "box_kernel",
    "truncated_gaussian_kernel",
    "kernel_eval",
    "scaled_kernel",
    "bandwidth_homoscedastic",
    "bandwidth_varfn",
    "bandwidth_multivariate",
]


class KernelKind(str, Enum):
    BOX = "box"
    TRUNCATED_GAUSSIAN = "truncated_gaussian"


# Standard normal mass on [-1, 1]; normalizes the truncated Gaussian.
_NORMAL_MASS = math.erf(1.0 / math.sqrt(2.0))
_TG_PEAK = (1.0 / math.sqrt(2.0 * math.pi)) / _NORMAL_MASS
_TG_EDGE = math.exp(-0.5) / math.sqrt(2.0 * math.pi) / _NORMAL_MASS


@dataclass(frozen=True)
class KernelSpec:
    """A symmetric density kernel on [-1, 1] with known inf/sup bounds.

    ``lower_bound`` and ``upper_bound`` are the infimum and supremum of K on
    [-1, 1].  They are carried along because the error-bound constants depend
    on them; evaluation uses only ``kind``.
    """

    kind: KernelKind = KernelKind.BOX
    lower_bound: float = 0.5
    upper_bound: float = 0.5

    def __post_init__(self):
        if not (0.0 < self.lower_bound <= self.upper_bound):
            raise ValueError("kernel bounds must satisfy 0 < lower <= upper")


def box_kernel() -> KernelSpec:
    """The box kernel: 1/2 on [-1, 1], the default everywhere."""
    return KernelSpec(KernelKind.BOX, 0.5, 0.5)


def truncated_gaussian_kernel() -> KernelSpec:
    """Standard normal density restricted to [-1, 1] and renormalized."""
    return KernelSpec(KernelKind.TRUNCATED_GAUSSIAN, _TG_EDGE, _TG_PEAK)


def kernel_eval(spec: KernelSpec, u):
    """Evaluate K(u); exactly 0 outside the closed support [-1, 1].

    Accepts scalars or arrays and evaluates elementwise.
    """
    u = np.asarray(u, dtype=float)
    inside = np.abs(u) <= 1.0
    if spec.kind is KernelKind.BOX:
        out = np.where(inside, 0.5, 0.0)
    else:
        dens = np.exp(-0.5 * u * u) / math.sqrt(2.0 * math.pi) / _NORMAL_MASS
        out = np.where(inside, dens, 0.0)
    return out if out.ndim else float(out)


def scaled_kernel(spec: KernelSpec, h: float, x):
    """K_h(x) = K(x/h)/h for bandwidth h > 0."""
    if h <= 0.0:
        raise NonPositiveBandwidth(f"bandwidth must be positive, got {h}")
    return kernel_eval(spec, np.asarray(x, dtype=float) / h) / h


@dataclass(frozen=True)
class BandwidthPlan:
    """Smoothness indices plus the tunable rate constants.

    ``alpha`` is the mean smoothness, ``beta`` the variance-function
    smoothness (only needed by :func:`bandwidth_varfn`).  ``constant_c1``
    and ``constant_c2`` scale the first and second bandwidth respectively.
    """

    alpha: float
    beta: float | None = None
    constant_c1: float = 1.0
    constant_c2: float = 1.0

    def __post_init__(self):
        if self.alpha <= 0.0:
            raise SmoothnessOutOfRange(f"alpha must be positive, got {self.alpha}")
        if self.beta is not None and self.beta <= 0.0:
            raise SmoothnessOutOfRange(f"beta must be positive, got {self.beta}")
        if self.constant_c1 <= 0.0 or self.constant_c2 <= 0.0:
            raise ValueError("bandwidth constants must be positive")


def bandwidth_homoscedastic(plan: BandwidthPlan, n: int) -> float:
    """Bandwidth for the constant-variance pairwise-difference estimator.

    c1 * n^(-2/(4a+1)) in the sub-parametric regime a < 1/4, and c1 * n^(-1)
    once a >= 1/4 (both branches have exponent -1 at a = 1/4).
    """
    if n < 2:
        raise InvalidSampleSize(f"need n >= 2, got {n}")
    a = plan.alpha
    if a < 0.25:
        return plan.constant_c1 * float(n) ** (-2.0 / (4.0 * a + 1.0))
    return plan.constant_c1 / float(n)


def bandwidth_varfn(plan: BandwidthPlan, n: int) -> tuple[float, float]:
    """Bandwidth pair (h1, h2) for local variance-function estimation.

    h1 localizes the pair gap X_i - X_j, h2 localizes the pair midpoint
    around the target point.  Below the regime boundary
    alpha < beta/(4beta+2) the exponents entangle alpha and beta; at and
    above it the pair is (c1/n, c2 * n^(-1/(2beta+1))).  The two branches
    agree at the boundary.
    """
    if plan.beta is None:
        raise MissingBeta("bandwidth_varfn needs a plan with beta set")
    if n < 2:
        raise InvalidSampleSize(f"need n >= 2, got {n}")
    a, b = plan.alpha, plan.beta
    nf = float(n)
    if a < b / (4.0 * b + 2.0):
        denom = 4.0 * a * b + b + 2.0 * a
        h1 = plan.constant_c1 * nf ** (-2.0 * b / denom)
        h2 = plan.constant_c2 * nf ** (-4.0 * a / denom)
    else:
        h1 = plan.constant_c1 / nf
        h2 = plan.constant_c2 * nf ** (-1.0 / (2.0 * b + 1.0))
    return h1, h2


def bandwidth_multivariate(alphas: Sequence[float], n: int, c: float = 1.0) -> np.ndarray:
    """Per-coordinate bandwidths for the product-kernel estimator.

    Uses the effective smoothness (harmonic mean) a_ = d / sum(1/a_k) and
    returns h_k = c * n^(-2 a_ / (a_k (4 a_ + d))).  Only a_k in (0, 1] is
    supported; the theory for larger indices is open.
    """
    alphas = np.asarray(alphas, dtype=float)
    if alphas.ndim != 1 or alphas.size == 0:
        raise SmoothnessOutOfRange("alphas must be a non-empty vector")
    if np.any(alphas <= 0.0) or np.any(alphas > 1.0):
        raise SmoothnessOutOfRange(f"every alpha_k must lie in (0, 1], got {alphas}")
    if n < 2:
        raise InvalidSampleSize(f"need n >= 2, got {n}")
    if c <= 0.0:
        raise ValueError("c must be positive")
    d = alphas.size
    a_eff = d / float(np.sum(1.0 / alphas))
    exponents = -2.0 * a_eff / (alphas * (4.0 * a_eff + d))
    return c * float(n) ** exponents
