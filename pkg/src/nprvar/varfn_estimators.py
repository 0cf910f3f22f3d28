"""Pointwise and integrated variance-function estimation.

The main estimator fits a degree-l polynomial to the halved squared pair
differences D_ij = (Y_i - Y_j)^2 / 2, localized both in the pair gap
(bandwidth h1) and in the pair midpoint around the target point (bandwidth
h2).  The fit is written in closed form through the adjugate of the design
moment matrix and stabilized by a small ridge added to its determinant, so
it survives nearly singular configurations instead of exploding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .datagen import DesignSpec, FunctionSpec, SampleSet, eval_function, make_rng, sample_design
from .errors import DimensionMismatch, InvalidSampleSize, NonPositiveBandwidth
from .kernels import KernelSpec, box_kernel, kernel_eval
from .var_estimators import window_pairs

__all__ = [
    "strict_floor",
    "LocalPolyConfig",
    "LPWeights",
    "adjugate",
    "det_cofactor",
    "lp_weights",
    "local_poly_varfn",
    "nw_varfn",
    "loss_pointwise",
    "loss_integrated",
]


def strict_floor(beta: float) -> int:
    """Largest integer strictly below beta (so beta = 1 maps to 0)."""
    if beta <= 0.0:
        raise ValueError("beta must be positive")
    return math.ceil(beta) - 1


@dataclass
class LocalPolyConfig:
    """Configuration of the ridge-stabilized local polynomial estimator.

    ``ell`` is derived from beta by the strict-floor convention.  ``tau_n``
    is the ridge added to the determinant; None means the default 1/n,
    resolved against the sample at call time.
    """

    beta: float
    h1: float
    h2: float
    tau_n: float | None = None
    kernel: KernelSpec = field(default_factory=box_kernel)
    ell: int = field(init=False)

    def __post_init__(self):
        if self.h1 <= 0.0 or self.h2 <= 0.0:
            raise NonPositiveBandwidth("h1 and h2 must be positive")
        if self.tau_n is not None and self.tau_n < 0.0:
            raise ValueError("tau_n must be nonnegative")
        self.ell = strict_floor(self.beta)


def det_cofactor(m: np.ndarray) -> float:
    """Determinant by cofactor expansion (sizes <= 5; exact near singularity)."""
    k = m.shape[0]
    if k == 1:
        return float(m[0, 0])
    if k == 2:
        return float(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0])
    total = 0.0
    for j in range(k):
        minor = np.delete(np.delete(m, 0, axis=0), j, axis=1)
        total += (-1.0) ** j * m[0, j] * det_cofactor(minor)
    return float(total)


def adjugate(m: np.ndarray) -> np.ndarray:
    """Adjugate matrix: m @ adj(m) = det(m) * I, valid even for singular m.

    Computed by cofactor expansion rather than LU so the identity holds to
    rounding error near singularity; the size-1 convention is adj([a]) = [1].
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise ValueError("adjugate needs a square matrix of size >= 1")
    k = m.shape[0]
    if k == 1:
        return np.array([[1.0]])
    cof = np.empty((k, k))
    for i in range(k):
        for j in range(k):
            minor = np.delete(np.delete(m, i, axis=0), j, axis=1)
            cof[i, j] = (-1.0) ** (i + j) * det_cofactor(minor)
    return cof.T


@dataclass
class LPWeights:
    """Pair weights of the local polynomial fit at one target point.

    ``weights``/``weights_ridge`` are aligned with (pair_i, pair_j); pairs
    with zero kernel mass are omitted since their weight is exactly zero.
    Pre-ridge weights sum to det_b.
    """

    pair_i: np.ndarray
    pair_j: np.ndarray
    weights: np.ndarray
    weights_ridge: np.ndarray
    det_b: float
    b_matrix: np.ndarray
    midpoints: np.ndarray
    tau_n: float

    def as_dict(self, ridge: bool = True) -> dict[tuple[int, int], float]:
        chosen = self.weights_ridge if ridge else self.weights
        return {
            (int(i), int(j)): float(w)
            for i, j, w in zip(self.pair_i, self.pair_j, chosen)
        }


def _active_pairs(x: np.ndarray, x_star: float, h1: float, h2: float):
    """Pairs with |X_i - X_j| <= h1 and |midpoint - x_star| <= h2.

    Exact pre-filter: both kernel factors vanish outside these windows.
    Indices refer to the original sample order.
    """
    order = np.argsort(x, kind="stable")
    xs = x[order]
    i_s, j_s = window_pairs(xs, h1)
    if i_s.size:
        mid = 0.5 * (xs[i_s] + xs[j_s])
        keep = np.abs(mid - x_star) <= h2
        i_s, j_s = i_s[keep], j_s[keep]
    return order[i_s], order[j_s]


def lp_weights(sample: SampleSet, x_star: float, cfg: LocalPolyConfig) -> LPWeights:
    """Local polynomial pair weights at x_star.

    Builds the (ell+1) x (ell+1) moment matrix B_n from the scaled midpoint
    monomials u^k/k!, its adjugate B*, and the weights
    w_ij = C(n,2)^{-1} q(0)^T B* q(u_ij) K_ij, then divides by det(B_n) plus
    the ridge.  The weights annihilate (X_ij - x_star)^k for k = 1..ell
    identically (reproducing property), and sum to det(B_n) before ridging.
    """
    if sample.dim != 1:
        raise DimensionMismatch("local polynomial estimator expects a univariate design")
    n = sample.n
    if n < 2:
        raise InvalidSampleSize(f"need n >= 2, got {n}")
    tau = cfg.tau_n if cfg.tau_n is not None else 1.0 / n
    x = sample.x
    i_idx, j_idx = _active_pairs(x, x_star, cfg.h1, cfg.h2)
    p = cfg.ell + 1
    scale = 1.0 / math.comb(n, 2)

    if i_idx.size == 0:
        return LPWeights(
            pair_i=i_idx,
            pair_j=j_idx,
            weights=np.zeros(0),
            weights_ridge=np.zeros(0),
            det_b=0.0,
            b_matrix=np.zeros((p, p)),
            midpoints=np.zeros(0),
            tau_n=tau,
        )

    mid = 0.5 * (x[i_idx] + x[j_idx])
    u = (mid - x_star) / cfg.h2
    k_pair = (
        kernel_eval(cfg.kernel, (x[i_idx] - x[j_idx]) / cfg.h1) / cfg.h1
        * kernel_eval(cfg.kernel, u) / cfg.h2
    )
    # q(u) = (1, u, u^2/2!, ..., u^ell/ell!)
    factorials = np.array([math.factorial(k) for k in range(p)])
    q_mat = u[:, None] ** np.arange(p)[None, :] / factorials[None, :]
    b_matrix = scale * np.einsum("pi,p,pj->ij", q_mat, k_pair, q_mat)
    b_star = adjugate(b_matrix)
    det_b = det_cofactor(b_matrix)
    w = scale * (q_mat @ b_star[0]) * k_pair
    denom = det_b + tau
    w_ridge = w / denom if denom > 0.0 else np.zeros_like(w)
    return LPWeights(
        pair_i=i_idx,
        pair_j=j_idx,
        weights=w,
        weights_ridge=w_ridge,
        det_b=det_b,
        b_matrix=b_matrix,
        midpoints=mid,
        tau_n=tau,
    )


def local_poly_varfn(sample: SampleSet, x_star: float, cfg: LocalPolyConfig) -> float:
    """Ridge-stabilized local polynomial estimate of V(x_star).

    sum_{i<j} w~_ij D_ij with D_ij = (Y_i - Y_j)^2 / 2.  Constant shifts of
    Y leave it unchanged; for the box kernel at ell = 0 all weights are
    nonnegative, so the estimate is too.  Boundary points need no special
    casing: the weights simply come from one-sided pairs.
    """
    lpw = lp_weights(sample, x_star, cfg)
    if lpw.pair_i.size == 0:
        return 0.0
    y = sample.response
    d_pair = 0.5 * (y[lpw.pair_i] - y[lpw.pair_j]) ** 2
    return float(np.sum(lpw.weights_ridge * d_pair))


def nw_varfn(
    sample: SampleSet,
    x_star: float,
    h1: float,
    h2: float,
    kernel: KernelSpec | None = None,
) -> float:
    """Ratio-form alternative: kernel-weighted average of the D_ij.

    Identical to the ell = 0 local polynomial with zero ridge whenever the
    denominator is positive; 0/0 -> 0 otherwise.
    """
    if sample.dim != 1:
        raise DimensionMismatch("nw_varfn expects a univariate design")
    if sample.n < 2:
        raise InvalidSampleSize(f"need n >= 2, got {sample.n}")
    if h1 <= 0.0 or h2 <= 0.0:
        raise NonPositiveBandwidth("h1 and h2 must be positive")
    kernel = kernel or box_kernel()
    x = sample.x
    i_idx, j_idx = _active_pairs(x, x_star, h1, h2)
    if i_idx.size == 0:
        return 0.0
    mid = 0.5 * (x[i_idx] + x[j_idx])
    k_pair = (
        kernel_eval(kernel, (x[i_idx] - x[j_idx]) / h1) / h1
        * kernel_eval(kernel, (mid - x_star) / h2) / h2
    )
    den = float(np.sum(k_pair))
    if den <= 0.0:
        return 0.0
    y = sample.response
    num = float(np.sum(k_pair * 0.5 * (y[i_idx] - y[j_idx]) ** 2))
    return num / den


def loss_pointwise(v_hat: float, v_true: float) -> float:
    """Squared pointwise loss (v_hat - v_true)^2."""
    diff = v_hat - v_true
    return diff * diff


def loss_integrated(
    v_hat_fn: Callable[[float], float],
    v_true: FunctionSpec,
    design: DesignSpec,
    m: int,
    seed: int,
) -> float:
    """Monte Carlo integrated squared loss under the design distribution.

    Averages (v_hat(x) - v_true(x))^2 over m fresh design draws;
    deterministic in the seed.
    """
    if m < 1:
        raise InvalidSampleSize(f"need m >= 1, got {m}")
    draws = sample_design(design, m, make_rng(seed))[:, 0]
    truth = eval_function(v_true, draws)
    errors = [float(v_hat_fn(float(x))) - float(t) for x, t in zip(draws, truth)]
    return float(np.mean(np.square(errors)))
