"""Scalar variance estimators for regression with unknown mean.

The workhorse is the pairwise-difference U-statistic ratio: kernel-weighted
squared response differences over kernel mass, with the 0/0 = 0 convention.
Alongside it live the multivariate product-kernel version, fixed-design
baselines, the additive-model estimators, the Haar projection estimator for
known design CDFs, and the quadratic-functional pair.

Pair sums use a direct O(n^2) double loop (chunked, with a compensated
merge of chunk partials) up to n = 2048.  Beyond that an exact sorted-window
enumeration kicks in: every admissible kernel vanishes outside [-1, 1], so
pairs with |X_i - X_j| > h contribute exactly zero and skipping them changes
nothing but the runtime.  The dense path is practical up to about n = 2e5.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .datagen import FunctionSpec, SampleSet, eval_on_design
from .errors import (
    DimensionMismatch,
    DimensionTooSmall,
    GridNotEven,
    InvalidSampleSize,
    NegativeWeight,
    NonPositiveBandwidth,
    UnknownDesignCDF,
)
from .kernels import BandwidthPlan, KernelSpec, bandwidth_homoscedastic, box_kernel, kernel_eval

__all__ = [
    "UStatEstimate",
    "ustat_variance",
    "ustat_variance_multivariate",
    "diff_variance_equidistant",
    "sample_variance",
    "additive_gd_variance",
    "additive_mom_variance",
    "ProjectionConfig",
    "uniform_cdf",
    "haar_feature_matrix",
    "projection_variance",
    "quadratic_functional",
    "conjugate_sigma2",
    "window_pairs",
]

_DENSE_LIMIT = 2048
_CHUNK_ROWS = 256


@dataclass
class UStatEstimate:
    """Ratio estimate plus its two normalized U-statistic pieces.

    ``value`` equals numerator/denominator with 0/0 -> 0; the numerator is
    a sum of nonnegative terms for the admissible kernels, so the value is
    nonnegative whenever the denominator is positive.
    """

    value: float
    numerator: float
    denominator: float
    pairs_in_bandwidth: int


def window_pairs(x_sorted: np.ndarray, h: float) -> tuple[np.ndarray, np.ndarray]:
    """Index pairs (i < j) of a sorted vector with x[j] - x[i] <= h."""
    n = x_sorted.size
    right = np.searchsorted(x_sorted, x_sorted + h, side="right")
    counts = np.maximum(right - np.arange(n) - 1, 0)
    total = int(counts.sum())
    i_idx = np.repeat(np.arange(n), counts)
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
    offsets = np.arange(total) - np.repeat(starts, counts)
    return i_idx, i_idx + 1 + offsets.astype(np.int64)


def _resolve_method(method: str, n: int) -> str:
    if method == "auto":
        return "dense" if n <= _DENSE_LIMIT else "window"
    if method not in ("dense", "window"):
        raise ValueError(f"unknown pair method {method!r}")
    return method


def _pair_sums_dense(x: np.ndarray, y: np.ndarray, h: np.ndarray, kernel: KernelSpec):
    """Chunked upper-triangle loop over all C(n,2) pairs."""
    n = x.shape[0]
    num_parts: list[float] = []
    den_parts: list[float] = []
    pairs = 0
    cols = np.arange(n)[None, :]
    for start in range(0, n - 1, _CHUNK_ROWS):
        stop = min(start + _CHUNK_ROWS, n - 1)
        rows = slice(start, stop)
        kw = np.ones((stop - start, n))
        for k in range(x.shape[1]):
            dx = x[rows, k][:, None] - x[None, :, k]
            kw *= kernel_eval(kernel, dx / h[k]) / h[k]
        kw[cols <= np.arange(start, stop)[:, None]] = 0.0
        dy2 = (y[rows][:, None] - y[None, :]) ** 2
        num_parts.append(float(np.sum(kw * dy2)) * 0.5)
        den_parts.append(float(np.sum(kw)))
        pairs += int(np.count_nonzero(kw))
    return math.fsum(num_parts), math.fsum(den_parts), pairs


def _pair_sums_window(x: np.ndarray, y: np.ndarray, h: np.ndarray, kernel: KernelSpec):
    """Sorted-window enumeration; exact because K vanishes outside [-1, 1]."""
    order = np.argsort(x[:, 0], kind="stable")
    xs = x[order]
    ys = y[order]
    i_idx, j_idx = window_pairs(xs[:, 0], float(h[0]))
    kw = np.ones(i_idx.size)
    for k in range(x.shape[1]):
        dx = xs[i_idx, k] - xs[j_idx, k]
        kw *= kernel_eval(kernel, dx / h[k]) / h[k]
    live = kw > 0.0
    num = float(np.sum(kw * (ys[i_idx] - ys[j_idx]) ** 2)) * 0.5
    den = float(np.sum(kw))
    return num, den, int(np.count_nonzero(live))


def _ustat_from_sums(num: float, den: float, pairs: int, n: int) -> UStatEstimate:
    scale = 1.0 / math.comb(n, 2)
    value = num / den if den > 0.0 else 0.0
    return UStatEstimate(value, num * scale, den * scale, pairs)


def ustat_variance(
    sample: SampleSet,
    h: float,
    kernel: KernelSpec | None = None,
    method: str = "auto",
) -> UStatEstimate:
    """Pairwise-difference variance estimate for a univariate design.

    value = [sum_{i<j} K_h(X_i - X_j)(Y_i - Y_j)^2 / 2] / [sum_{i<j} K_h(X_i - X_j)]
    with 0/0 -> 0.  Location-invariant and scale-equivariant in Y.
    """
    if sample.dim != 1:
        raise DimensionMismatch("ustat_variance expects a univariate design")
    if sample.n < 2:
        raise InvalidSampleSize(f"need n >= 2, got {sample.n}")
    if h <= 0.0:
        raise NonPositiveBandwidth(f"bandwidth must be positive, got {h}")
    kernel = kernel or box_kernel()
    hv = np.array([h])
    if _resolve_method(method, sample.n) == "dense":
        num, den, pairs = _pair_sums_dense(sample.design, sample.response, hv, kernel)
    else:
        num, den, pairs = _pair_sums_window(sample.design, sample.response, hv, kernel)
    return _ustat_from_sums(num, den, pairs, sample.n)


def ustat_variance_multivariate(
    sample: SampleSet,
    h: Sequence[float],
    kernel: KernelSpec | None = None,
    method: str = "auto",
) -> UStatEstimate:
    """Product-kernel version: pair weight prod_k K_{h_k}(X_{i,k} - X_{j,k}).

    Reduces exactly to :func:`ustat_variance` when d = 1.
    """
    hv = np.asarray(h, dtype=float)
    if hv.ndim != 1 or hv.size != sample.dim:
        raise DimensionMismatch(
            f"bandwidth vector of length {hv.size} for design dimension {sample.dim}"
        )
    if sample.n < 2:
        raise InvalidSampleSize(f"need n >= 2, got {sample.n}")
    if np.any(hv <= 0.0):
        raise NonPositiveBandwidth("all bandwidths must be positive")
    kernel = kernel or box_kernel()
    if _resolve_method(method, sample.n) == "dense":
        num, den, pairs = _pair_sums_dense(sample.design, sample.response, hv, kernel)
    else:
        num, den, pairs = _pair_sums_window(sample.design, sample.response, hv, kernel)
    return _ustat_from_sums(num, den, pairs, sample.n)


def diff_variance_equidistant(y: Sequence[float]) -> float:
    """First-difference baseline for equidistant fixed designs.

    sum (Y_{i+1} - Y_i)^2 / (2(n-1)); unbiased for sigma^2 when the mean is
    flat relative to the grid spacing.
    """
    arr = np.asarray(y, dtype=float)
    if arr.ndim != 1 or arr.size < 2:
        raise InvalidSampleSize("need a vector with n >= 2")
    return float(np.sum(np.diff(arr) ** 2)) / (2.0 * (arr.size - 1))


def sample_variance(y: Sequence[float]) -> float:
    """Unbiased sample variance with the n-1 divisor."""
    arr = np.asarray(y, dtype=float)
    if arr.ndim != 1 or arr.size < 2:
        raise InvalidSampleSize("need a vector with n >= 2")
    return float(np.sum((arr - arr.mean()) ** 2)) / (arr.size - 1)


def additive_gd_variance(y) -> float:
    """Iterated-pairwise-difference estimator on the d-dimensional grid design.

    Differencing the response array once along every axis over the disjoint
    pairing {(1,2), (3,4), ...} annihilates every additive component exactly
    (no smoothness needed); the fully differenced array is i.i.d. with
    variance 2^d sigma^2, so its biased sample variance divided by 2^d
    estimates sigma^2 at the parametric rate.
    """
    arr = np.asarray(y, dtype=float)
    d = arr.ndim
    if d < 1:
        raise DimensionMismatch("need a d-dimensional response array")
    m = arr.shape[0]
    if any(side != m for side in arr.shape):
        raise DimensionMismatch(f"grid must be square, got shape {arr.shape}")
    if m < 2 or m % 2 != 0:
        raise GridNotEven(f"grid side must be an even integer >= 2, got {m}")
    for axis in range(d):
        even = [slice(None)] * d
        odd = [slice(None)] * d
        even[axis] = slice(0, None, 2)
        odd[axis] = slice(1, None, 2)
        arr = arr[tuple(even)] - arr[tuple(odd)]
    flat = arr.ravel()
    centered = flat - flat.mean()
    return float(np.sum(centered**2)) / (flat.size * 2**d)


def additive_mom_variance(
    sample: SampleSet,
    plans: Sequence[BandwidthPlan],
    kernel: KernelSpec | None = None,
    method: str = "auto",
) -> float:
    """Method-of-moments estimator for the additive model, d >= 2.

    Applies the univariate pairwise estimator coordinate by coordinate
    (each one targets sigma^2 plus the variance of the other components)
    and removes the overcount with the sample variance of Y:
    sum_l sigma_hat^2_(l) - (d-1) * sigma_hat^2_Y.  Requires mutually
    independent design coordinates; that assumption is documented, not
    checked.
    """
    d = sample.dim
    if d < 2:
        raise DimensionTooSmall(f"additive method-of-moments needs d >= 2, got d={d}")
    if len(plans) != d:
        raise DimensionMismatch(f"need one bandwidth plan per coordinate ({d})")
    kernel = kernel or box_kernel()
    total = 0.0
    for k in range(d):
        marginal = SampleSet(sample.design[:, k : k + 1], sample.response, sample.seed, {})
        h_k = bandwidth_homoscedastic(plans[k], sample.n)
        total += ustat_variance(marginal, h_k, kernel, method=method).value
    return total - (d - 1) * sample_variance(sample.response)


# ---------------------------------------------------------------------------
# Haar projection estimator (design CDFs known)
# ---------------------------------------------------------------------------


def uniform_cdf(a: float = 0.0, b: float = 1.0) -> Callable[[np.ndarray], np.ndarray]:
    """CDF of the uniform distribution on [a, b]."""
    if not b > a:
        raise ValueError("need b > a")

    def cdf(x):
        return np.clip((np.asarray(x, dtype=float) - a) / (b - a), 0.0, 1.0)

    return cdf


@dataclass
class ProjectionConfig:
    """Resolution levels and known design CDFs for the projection estimator.

    ``basis="additive"`` concatenates per-coordinate Haar bases (size
    sum_k 2^{J_k} - 1); ``basis="tensor"`` forms the full tensor system
    minus the constant (size prod_k 2^{J_k} - 1), the sketched multivariate
    extrapolation.
    """

    resolution_levels: tuple[int, ...]
    design_cdfs: tuple[Callable[[np.ndarray], np.ndarray], ...] | None
    basis: str = "additive"

    def __post_init__(self):
        if any(j < 0 for j in self.resolution_levels):
            raise ValueError("resolution levels must be nonnegative")
        if self.basis not in ("additive", "tensor"):
            raise ValueError("basis must be 'additive' or 'tensor'")


def _haar_level(u: np.ndarray, level: int) -> tuple[np.ndarray, np.ndarray]:
    """Active index k and sign of the level-j Haar functions at each u."""
    scaled = u * 2**level
    k = np.minimum(scaled.astype(np.int64), 2**level - 1)
    sign = np.where(scaled - k < 0.5, 1.0, -1.0)
    return k, sign


def haar_feature_matrix(u: np.ndarray, level_count: int) -> np.ndarray:
    """Dense (n, 2^J - 1) matrix of the orthonormal Haar system on [0, 1].

    Levels j = 0..J-1, each contributing 2^j functions of height 2^{j/2};
    the constant function is excluded, so every column has mean zero under
    the uniform law and the Gram matrix is the identity.
    """
    u = np.asarray(u, dtype=float)
    out = np.zeros((u.size, 2**level_count - 1))
    col = 0
    for j in range(level_count):
        k, sign = _haar_level(u, j)
        out[np.arange(u.size), col + k] = sign * 2.0 ** (j / 2.0)
        col += 2**j
    return out


def _haar_weighted_sum(u: np.ndarray, y: np.ndarray, level_count: int) -> np.ndarray:
    """S = sum_i y_i psi(u_i) accumulated level by level (sparse in i)."""
    s = np.zeros(2**level_count - 1)
    col = 0
    for j in range(level_count):
        k, sign = _haar_level(u, j)
        np.add.at(s, col + k, y * sign * 2.0 ** (j / 2.0))
        col += 2**j
    return s


def projection_variance(sample: SampleSet, cfg: ProjectionConfig) -> float:
    """Projection estimator of sigma^2 when the design CDFs are known.

    (1/(n-1)) sum (Y_i - Ybar)^2 - C(n,2)^{-1} sum_{i<j} Y_i Y_j psi(U_i)^T psi(U_j),
    with U = F(X) uniform on [0, 1] coordinatewise.  The second term is
    computed through ||sum_i Y_i psi(U_i)||^2, which is algebraically equal
    to the pair sum, so no O(n^2) loop is needed.  J = 0 reduces to the
    sample variance; the bias guarantee of the Haar system covers mean
    smoothness below 1.
    """
    n, d = sample.n, sample.dim
    if n < 2:
        raise InvalidSampleSize(f"need n >= 2, got {n}")
    if cfg.design_cdfs is None:
        raise UnknownDesignCDF("projection estimator needs the per-coordinate design CDFs")
    if len(cfg.design_cdfs) != d or len(cfg.resolution_levels) != d:
        raise UnknownDesignCDF(
            f"need {d} CDFs and resolution levels, got "
            f"{len(cfg.design_cdfs)} and {len(cfg.resolution_levels)}"
        )
    u_cols = []
    for k in range(d):
        u = np.asarray(cfg.design_cdfs[k](sample.design[:, k]), dtype=float)
        if np.any(u < 0.0) or np.any(u > 1.0):
            raise UnknownDesignCDF(f"CDF for coordinate {k} left [0, 1]")
        u_cols.append(u)
    y = sample.response
    sum_y2 = float(np.sum(y * y))

    if cfg.basis == "additive":
        pair_sum = 0.0
        for k in range(d):
            levels = cfg.resolution_levels[k]
            if levels == 0:
                continue
            s = _haar_weighted_sum(u_cols[k], y, levels)
            pair_sum += 0.5 * (float(np.dot(s, s)) - (2**levels - 1) * sum_y2)
    else:
        # Tensor system including the constant, then remove its contribution.
        feats = [
            np.concatenate(
                [np.ones((n, 1)), haar_feature_matrix(u_cols[k], cfg.resolution_levels[k])],
                axis=1,
            )
            for k in range(d)
        ]
        letters = "abc"
        operands = []
        spec_parts = []
        for k, f in enumerate(feats):
            operands.append(f)
            spec_parts.append(f"n{letters[k]}")
        einsum_spec = ",".join(spec_parts) + ",n->" + letters[:d]
        s_tensor = np.einsum(einsum_spec, *operands, y)
        full_norm = float(np.prod([2.0 ** j for j in cfg.resolution_levels]))
        pair_full = 0.5 * (float(np.sum(s_tensor**2)) - sum_y2 * full_norm)
        sum_y = float(np.sum(y))
        pair_const = 0.5 * (sum_y * sum_y - sum_y2)
        pair_sum = pair_full - pair_const

    return sample_variance(y) - pair_sum / math.comb(n, 2)


# ---------------------------------------------------------------------------
# Quadratic functional
# ---------------------------------------------------------------------------


def quadratic_functional(sample: SampleSet, w: FunctionSpec, sigma2_hat: float) -> float:
    """Plug-in estimate of the weighted quadratic functional of the mean.

    (1/n) sum Y_i^2 w(X_i) - [(1/n) sum w(X_i)] * sigma2_hat, targeting
    int f^2 p_X w.  The weight must be nonnegative and bounded.
    """
    if sample.dim != 1:
        raise DimensionMismatch("quadratic_functional expects a univariate design")
    w_vals = eval_on_design(w, sample.design)
    if np.any(w_vals < 0.0):
        raise NegativeWeight("weight function evaluated below zero at a design point")
    y2w = float(np.mean(sample.response**2 * w_vals))
    return y2w - float(np.mean(w_vals)) * sigma2_hat


def conjugate_sigma2(sample: SampleSet, w: FunctionSpec, q_hat: float) -> float:
    """Variance estimate conjugate to a quadratic-functional estimate.

    max{ [(1/n) sum Y_i^2 w(X_i) - q_hat] / [(1/n) sum w(X_i)], 0 } when the
    average weight is positive, else 0; the clipping absorbs degeneracy, so
    no error cases remain.
    """
    if sample.dim != 1:
        raise DimensionMismatch("conjugate_sigma2 expects a univariate design")
    w_vals = eval_on_design(w, sample.design)
    if np.any(w_vals < 0.0):
        raise NegativeWeight("weight function evaluated below zero at a design point")
    mean_w = float(np.mean(w_vals))
    if mean_w <= 0.0:
        return 0.0
    value = (float(np.mean(sample.response**2 * w_vals)) - q_hat) / mean_w
    return max(value, 0.0)
