"""Constructive pieces of the minimax lower-bound machinery.

Moment-matched compactly supported distributions, probabilists' Hermite
polynomials, the Gaussian total-variation sandwich, the sparse-multinomial
occupancy law, and a quadrature oracle for the chi-square distance between
Gaussian location mixtures.  Everything here is desk-computable: these are
the lemmas one can actually run, not the concentration bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DimensionTooLarge, EvenOrder, NotPositiveDefinite

__all__ = [
    "DiscreteDistribution",
    "moment_matched_distribution",
    "dist_moment",
    "normal_moment",
    "hermite",
    "gaussian_tv_bound",
    "tv_monte_carlo",
    "multinomial_max_occupancy",
    "kolchin_lambda",
    "mixture_chi2",
    "mixture_chi2_series_bound",
]


@dataclass
class DiscreteDistribution:
    """A finitely supported distribution given by atoms and probabilities.

    Invariants checked on construction: probabilities are nonnegative and
    sum to 1 (to 1e-12), and the distribution is symmetric, i.e. the atom
    set is closed under negation with equal probabilities.
    """

    atoms: np.ndarray
    probs: np.ndarray
    range_bound: float = field(init=False)

    def __post_init__(self):
        self.atoms = np.asarray(self.atoms, dtype=float)
        self.probs = np.asarray(self.probs, dtype=float)
        if self.atoms.shape != self.probs.shape or self.atoms.ndim != 1:
            raise ValueError("atoms and probs must be 1-d arrays of equal length")
        if np.any(self.probs < 0.0):
            raise ValueError("probabilities must be nonnegative")
        if abs(math.fsum(self.probs.tolist()) - 1.0) > 1e-12:
            raise ValueError("probabilities must sum to 1")
        order = np.argsort(self.atoms)
        a, p = self.atoms[order], self.probs[order]
        if not (np.allclose(a, -a[::-1], atol=1e-12) and np.allclose(p, p[::-1], atol=1e-12)):
            raise ValueError("distribution must be symmetric about 0")
        self.atoms, self.probs = a, p
        self.range_bound = float(np.max(np.abs(a))) if a.size else 0.0


def moment_matched_distribution(q: int) -> DiscreteDistribution:
    """A symmetric compactly supported law matching normal moments 1..q.

    Realized by the m-point Gauss-Hermite rule with m = (q+1)/2: its nodes
    and normalized weights define a discrete distribution whose moments
    agree with the standard normal's exactly through order 2m-1 = q.  The
    support bound is the largest node, which grows with q but stays finite,
    so this is a concrete witness for the existence statement.
    """
    if q < 1 or q % 2 == 0:
        raise EvenOrder(f"moment matching order must be a positive odd integer, got {q}")
    m = (q + 1) // 2
    nodes, weights = np.polynomial.hermite_e.hermegauss(m)
    probs = weights / math.fsum(weights.tolist())
    # Symmetrize so the +/- pairs are bitwise exact negations.
    atoms = 0.5 * (nodes - nodes[::-1])
    probs = 0.5 * (probs + probs[::-1])
    probs = probs / math.fsum(probs.tolist())
    return DiscreteDistribution(atoms, probs)


def dist_moment(dist: DiscreteDistribution, j: int) -> float:
    """The j-th raw moment, summed with exact (fsum) accumulation.

    Odd moments of a symmetric distribution come out exactly 0.0 because
    the paired terms are exact floating negations.
    """
    if j < 0:
        raise ValueError("moment order must be nonnegative")
    if j == 0:
        return 1.0
    if j % 2 == 1 and np.array_equal(dist.atoms, -dist.atoms[::-1]) and np.array_equal(
        dist.probs, dist.probs[::-1]
    ):
        # bitwise-symmetric support: the odd sum cancels term by term
        return 0.0
    terms = dist.probs * dist.atoms**j
    return math.fsum(terms.tolist())


def normal_moment(j: int) -> float:
    """Standard normal raw moment: 0 for odd j, (j-1)!! for even j."""
    if j < 0:
        raise ValueError("moment order must be nonnegative")
    if j % 2 == 1:
        return 0.0
    return float(math.prod(range(j - 1, 0, -2))) if j else 1.0


def hermite(k: int, t):
    """Probabilists' Hermite polynomial H_k(t) via the three-term recurrence.

    H_{k+1}(t) = t H_k(t) - k H_{k-1}(t), with H_0 = 1 and H_1 = t.
    Vectorized over t.
    """
    if k < 0:
        raise ValueError("Hermite order must be nonnegative")
    t = np.asarray(t, dtype=float)
    h_prev = np.ones_like(t)
    if k == 0:
        return h_prev if h_prev.ndim else float(h_prev)
    h_cur = t.copy()
    for order in range(1, k):
        h_prev, h_cur = h_cur, t * h_cur - order * h_prev
    return h_cur if h_cur.ndim else float(h_cur)


def _check_spd(mat: np.ndarray, name: str) -> np.ndarray:
    mat = np.asarray(mat, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise NotPositiveDefinite(f"{name} must be a square matrix")
    if not np.allclose(mat, mat.T, rtol=1e-10, atol=1e-12):
        raise NotPositiveDefinite(f"{name} is not symmetric")
    try:
        np.linalg.cholesky(mat)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(f"{name} is not positive definite") from exc
    return mat


def gaussian_tv_bound(sigma1: np.ndarray, sigma2: np.ndarray) -> tuple[float, float]:
    """Two-sided bound on TV(N(m, S1), N(m, S2)) for equal means.

    With rho = min(1, ||S1^{-1} S2 - I||_F), the total variation distance is
    sandwiched in [rho/100, 3 rho/2].  Positive-definiteness failures raise
    rather than being silently regularized.
    """
    s1 = _check_spd(sigma1, "sigma1")
    s2 = _check_spd(sigma2, "sigma2")
    if s1.shape != s2.shape:
        raise NotPositiveDefinite("covariance matrices must share a dimension")
    d = s1.shape[0]
    ratio = np.linalg.solve(s1, s2) - np.eye(d)
    rho = min(1.0, float(np.linalg.norm(ratio, "fro")))
    return rho / 100.0, 1.5 * rho


def tv_monte_carlo(
    density_p: Callable[[np.ndarray], np.ndarray],
    density_q: Callable[[np.ndarray], np.ndarray],
    sampler_q: Callable[[np.random.Generator, int], np.ndarray],
    m: int,
    seed: int,
) -> float:
    """Monte Carlo total variation estimate (1/m) sum max(0, 1 - p/q), Z ~ q.

    Consistent for TV(P, Q) because TV = E_q (1 - p/q)_+; deterministic in
    the seed.  Densities must be positive on the sampler's support.
    """
    if m < 1:
        raise ValueError("m must be positive")
    rng = np.random.Generator(np.random.Philox(key=seed))
    z = sampler_q(rng, m)
    p = np.asarray(density_p(z), dtype=float)
    q = np.asarray(density_q(z), dtype=float)
    return float(np.mean(np.maximum(0.0, 1.0 - p / q)))


def multinomial_max_occupancy(
    m_balls: int, M_bins: int, trials: int, seed: int
) -> dict[int, float]:
    """Empirical law of the maximum bin count for uniform multinomial throws.

    Returns {count: relative frequency} over independent trials, each
    throwing m_balls into M_bins uniformly.  Deterministic in the seed.
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    if m_balls < 1 or M_bins < 1:
        raise ValueError("m_balls and M_bins must be positive")
    rng = np.random.Generator(np.random.Philox(key=seed))
    f_max = np.empty(trials, dtype=np.int64)
    # Chunked so trials x m_balls never exceeds ~1e7 entries at once.
    chunk = max(1, int(1e7) // max(m_balls, 1))
    done = 0
    while done < trials:
        t = min(chunk, trials - done)
        draws = rng.integers(0, M_bins, size=(t, m_balls))
        draws.sort(axis=1)
        if m_balls == 1:
            f_max[done : done + t] = 1
        else:
            eq = draws[:, 1:] == draws[:, :-1]
            streak = np.zeros(t, dtype=np.int64)
            best = np.zeros(t, dtype=np.int64)
            for col in range(m_balls - 1):
                streak = (streak + 1) * eq[:, col]
                np.maximum(best, streak, out=best)
            f_max[done : done + t] = best + 1
        done += t
    counts = np.bincount(f_max)
    return {int(k): counts[k] / trials for k in np.nonzero(counts)[0]}


def kolchin_lambda(m: int, M: int, r: int) -> float:
    """Occupancy intensity m^r / (r! M^(r-1)) for the left-hand r-domain."""
    if r < 2:
        raise ValueError("r must be at least 2")
    if M < 1:
        raise ValueError("M must be positive")
    return float(m) ** r / (math.factorial(r) * float(M) ** (r - 1))


def _mixture_density(y: np.ndarray, theta: float, dist: DiscreteDistribution, sigma: float):
    """Density of (y_1..y_d) = theta*v + sigma*eps with v ~ dist, columns of y."""
    d = y.shape[1]
    norm = (2.0 * math.pi * sigma * sigma) ** (-d / 2.0)
    total = np.zeros(y.shape[0])
    for a, p in zip(dist.atoms, dist.probs):
        sq = np.sum((y - theta * a) ** 2, axis=1)
        total += p * np.exp(-0.5 * sq / (sigma * sigma))
    return norm * total


def _gaussian_mixture_density(y: np.ndarray, theta: float, sigma: float):
    """Closed form for the v ~ N(0,1) mixture: N_d(0, sigma^2 I + theta^2 J)."""
    d = y.shape[1]
    s2 = sigma * sigma
    t2 = theta * theta
    det = s2 ** (d - 1) * (s2 + d * t2)
    row = np.sum(y, axis=1)
    quad = np.sum(y * y, axis=1) / s2 - t2 * row**2 / (s2 * (s2 + d * t2))
    return (2.0 * math.pi) ** (-d / 2.0) * det**-0.5 * np.exp(-0.5 * quad)


def mixture_chi2(
    theta: float,
    d: int,
    g: DiscreteDistribution,
    sigma: float = 1.0,
    quad_points: int = 60,
) -> float:
    """Chi-square distance between the compact and Gaussian location mixtures.

    Both laws place d i.i.d. N(theta*v, sigma^2) coordinates around a shared
    shift v; the first draws v from ``g``, the second from N(0, 1).  The
    divergence is integrated over R^d by tensor Gauss-Hermite quadrature
    with ``quad_points`` nodes per axis (d <= 3 supported).  When ``g``
    matches normal moments through q = 2p-1, the distance decays like
    theta^(4p).
    """
    if theta < 0.0:
        raise ValueError("theta must be nonnegative")
    if sigma <= 0.0:
        raise ValueError("sigma must be positive")
    if d < 1:
        raise DimensionTooLarge("d must be at least 1")
    if d > 3:
        raise DimensionTooLarge(f"tensor quadrature supports d <= 3, got {d}")
    if theta == 0.0:
        return 0.0

    nodes, weights = np.polynomial.hermite_e.hermegauss(quad_points)
    # Quadrature scale matched to the null marginal spread.
    scale = math.sqrt(sigma * sigma + theta * theta * max(1.0, dist_moment(g, 2)))
    # Transformed 1-d weights for integrating dy against no weight function.
    w1 = weights * scale * np.exp(0.5 * nodes * nodes)
    y1 = scale * nodes

    grids = np.meshgrid(*([y1] * d), indexing="ij")
    y = np.stack([grid.ravel() for grid in grids], axis=1)
    wgrids = np.meshgrid(*([w1] * d), indexing="ij")
    w = np.ones(y.shape[0])
    for wg in wgrids:
        w = w * wg.ravel()

    p1 = _mixture_density(y, theta, g, sigma)
    p1_tilde = _gaussian_mixture_density(y, theta, sigma)
    integrand = (p1 - p1_tilde) ** 2 / p1_tilde
    return float(np.sum(w * integrand))


def mixture_chi2_series_bound(
    theta: float,
    d: int,
    g: DiscreteDistribution,
    sigma: float = 1.0,
    p: int | None = None,
    k_max: int = 40,
) -> float:
    """Series upper bound sum_{k>=p} (theta sqrt(d)/sigma)^{4k} delta_{2k}^2/(2k)!.

    delta_{2k} is the 2k-th moment gap between ``g`` and the standard
    normal, with exact double factorials; the tail is truncated once the
    term ratio drops below 1e-16.  ``p`` defaults to the first order at
    which the gap is nonzero.
    """
    if p is None:
        p = 1
        while p <= k_max and abs(dist_moment(g, 2 * p) - normal_moment(2 * p)) < 1e-12:
            p += 1
    base = (theta * math.sqrt(d) / sigma) ** 4
    total = 0.0
    prev = None
    for k in range(p, k_max + 1):
        delta = dist_moment(g, 2 * k) - normal_moment(2 * k)
        term = base**k * delta * delta / math.factorial(2 * k)
        total += term
        if prev is not None and prev > 0.0 and term / prev < 1e-16:
            break
        prev = term if term > 0.0 else prev
    return total
