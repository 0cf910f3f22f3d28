"""Samplers for heteroscedastic regression data and hard-instance builders.

Declarative function specs (means, variances), design distributions, and
standardized noise laws combine into reproducible data sets via
:func:`generate`.  The module also constructs the two lower-bound hard
instances: the trapezoid comb for constant-variance estimation and the
localized trapezoid/bump pair for variance-function estimation.

RNG contract: generation is a pure function of (specs, seed) using the
counter-based Philox generator, so trial t of an experiment can use
``base_seed ^ t`` and remain an independent, reproducible stream.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from .errors import (
    AlphaOutOfRange,
    DimensionMismatch,
    InvalidSampleSize,
    NegativeVariance,
    OutOfDomain,
    SmoothnessOutOfRange,
    SmoothnessRegime,
)
from .lb_tools import DiscreteDistribution, dist_moment, moment_matched_distribution

__all__ = [
    "Constant",
    "Polynomial",
    "SmoothBump",
    "TrapezoidComb",
    "LocalTrapezoid",
    "Custom",
    "Additive",
    "FunctionSpec",
    "UniformInterval",
    "CombSupport",
    "GridGD",
    "DiagonalDD",
    "ProductOfUnivariate",
    "DesignSpec",
    "GaussianNoise",
    "MomentMatchedNoise",
    "RademacherNoise",
    "NoiseSpec",
    "SampleSet",
    "make_rng",
    "eval_function",
    "eval_on_design",
    "sample_design",
    "design_dim",
    "support_contains",
    "sample_noise",
    "noise_fourth_moment",
    "generate",
    "HomoscedasticHardInstance",
    "hard_instance_homoscedastic",
    "VarfnHardInstance",
    "hard_instance_varfn",
    "holder_seminorm",
    "smallest_admissible_q",
    "function_spec_to_dict",
    "function_spec_from_dict",
    "design_spec_to_dict",
    "design_spec_from_dict",
    "noise_spec_to_dict",
    "noise_spec_from_dict",
]

_SEED_MASK = (1 << 64) - 1


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based generator keyed by a 64-bit seed."""
    return np.random.Generator(np.random.Philox(key=int(seed) & _SEED_MASK))


# ---------------------------------------------------------------------------
# Function specifications
# ---------------------------------------------------------------------------


@dataclass
class Constant:
    value: float


@dataclass
class Polynomial:
    """c0 + c1 x + c2 x^2 + ... with ascending coefficients."""

    coefficients: tuple[float, ...]


@dataclass
class SmoothBump:
    """Mollified plateau: ``offset + height`` on [center-width, center+width].

    Infinitely differentiable, equal to ``offset`` outside
    [center-2*width, center+2*width].  The profile is the indicator of
    [-3/2, 3/2] convolved with a compactly supported mollifier, so "one
    minus a bump" variance functions are expressed with offset=1 and a
    negative height.
    """

    center: float
    width: float
    height: float
    offset: float = 0.0

    def __post_init__(self):
        if self.width <= 0.0:
            raise ValueError("bump width must be positive")


@dataclass
class TrapezoidComb:
    """Piecewise-trapezoidal comb on [0, 1].

    The unit interval splits into N = 1/(6*cell_width) cells; cell i carries
    the plateau value ``amplitude * heights[i]`` on its middle two thirds
    and decays linearly to zero at the cell endpoints.
    """

    cell_width: float
    amplitude: float
    heights: np.ndarray

    def __post_init__(self):
        self.heights = np.asarray(self.heights, dtype=float)
        if self.cell_width <= 0.0:
            raise ValueError("cell_width must be positive")
        n_cells = 1.0 / (6.0 * self.cell_width)
        if abs(n_cells - round(n_cells)) > 1e-6 or round(n_cells) < 1:
            raise ValueError("1/(6*cell_width) must be a positive integer")
        if self.heights.size != round(n_cells):
            raise ValueError("heights length must equal 1/(6*cell_width)")

    @property
    def n_cells(self) -> int:
        return int(round(1.0 / (6.0 * self.cell_width)))


@dataclass
class LocalTrapezoid:
    """Trapezoid comb confined to [x_star - h2, x_star + h2], zero outside.

    The window splits into N = h2/(2*h1) cells of width 4*h1; cell i has
    upper base of width 2*h1 at plateau value ``h1**alpha * heights[i]``.
    """

    x_star: float
    h1: float
    h2: float
    alpha: float
    heights: np.ndarray

    def __post_init__(self):
        self.heights = np.asarray(self.heights, dtype=float)
        if self.h1 <= 0.0 or self.h2 <= 0.0:
            raise ValueError("h1 and h2 must be positive")
        n_cells = self.h2 / (2.0 * self.h1)
        if abs(n_cells - round(n_cells)) > 1e-6 or round(n_cells) < 1:
            raise ValueError("h2/(2*h1) must be a positive integer")
        if self.heights.size != round(n_cells):
            raise ValueError("heights length must equal h2/(2*h1)")

    @property
    def n_cells(self) -> int:
        return int(round(self.h2 / (2.0 * self.h1)))


@dataclass
class Custom:
    """Tabulated function, linearly interpolated on its grid."""

    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.grid.ndim != 1 or self.grid.shape != self.values.shape:
            raise ValueError("grid and values must be 1-d arrays of equal length")
        if self.grid.size < 2 or np.any(np.diff(self.grid) <= 0.0):
            raise ValueError("grid must be strictly increasing with >= 2 points")


@dataclass
class Additive:
    """Sum of univariate components, one per design coordinate."""

    components: tuple


FunctionSpec = Union[Constant, Polynomial, SmoothBump, TrapezoidComb, LocalTrapezoid, Custom, Additive]


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(64)


@lru_cache(maxsize=1)
def _bump_tail_table() -> tuple[np.ndarray, np.ndarray]:
    """Normalized tail mass of the mollifier exp(-1/(1-x^2)) on [-1, 1].

    Entry k is T(s_k) = int_{s_k}^1 psi / int_{-1}^1 psi on a 4096-point
    grid, each integral by 64-point Gauss-Legendre quadrature.
    """
    s = np.linspace(-1.0, 1.0, 4096)
    half = (1.0 - s) / 2.0
    mid = (1.0 + s) / 2.0
    pts = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    dens = np.zeros_like(pts)
    inner = np.abs(pts) < 1.0
    dens[inner] = np.exp(-1.0 / (1.0 - pts[inner] ** 2))
    tail = half * (dens @ _GL_WEIGHTS)
    tail /= tail[0]
    tail[0] = 1.0
    tail[-1] = 0.0
    return s, tail


def _bump_profile(t: np.ndarray) -> np.ndarray:
    """The unit bump: 1 on [-1, 1], 0 outside [-2, 2], smooth in between."""
    s, tail = _bump_tail_table()
    return np.interp(np.clip(2.0 * np.abs(t) - 3.0, -1.0, 1.0), s, tail)


def _ramp(local: np.ndarray, rise: float, width: float) -> np.ndarray:
    """Trapezoid shape on [0, width]: linear up over [0, rise], flat, linear down."""
    up = local / rise
    down = (width - local) / rise
    return np.clip(np.minimum(np.minimum(up, down), 1.0), 0.0, 1.0)


def eval_function(spec: FunctionSpec, x):
    """Evaluate a function spec at scalar or array x (exact for trapezoids).

    Raises OutOfDomain when x leaves the spec's domain: [0, 1] for the comb,
    the tabulation range for Custom.
    """
    arr = np.asarray(x, dtype=float)
    scalar = arr.ndim == 0
    pts = np.atleast_1d(arr)

    if isinstance(spec, Constant):
        out = np.full(pts.shape, float(spec.value))
    elif isinstance(spec, Polynomial):
        out = np.polynomial.polynomial.polyval(pts, np.asarray(spec.coefficients, dtype=float))
    elif isinstance(spec, SmoothBump):
        out = spec.offset + spec.height * _bump_profile((pts - spec.center) / spec.width)
    elif isinstance(spec, TrapezoidComb):
        if np.any(pts < -1e-12) or np.any(pts > 1.0 + 1e-12):
            raise OutOfDomain("trapezoid comb is defined on [0, 1]")
        h = spec.cell_width
        cell = np.clip(np.floor(pts / (6.0 * h)).astype(int), 0, spec.n_cells - 1)
        local = pts - 6.0 * h * cell
        out = spec.amplitude * spec.heights[cell] * _ramp(local, h, 6.0 * h)
    elif isinstance(spec, LocalTrapezoid):
        xi = pts - (spec.x_star - spec.h2)
        inside = (xi >= 0.0) & (xi <= 2.0 * spec.h2)
        cell = np.clip(np.floor(xi / (4.0 * spec.h1)).astype(int), 0, spec.n_cells - 1)
        local = xi - 4.0 * spec.h1 * cell
        shape = _ramp(local, spec.h1, 4.0 * spec.h1)
        out = np.where(inside, spec.h1**spec.alpha * spec.heights[cell] * shape, 0.0)
    elif isinstance(spec, Custom):
        if np.any(pts < spec.grid[0] - 1e-12) or np.any(pts > spec.grid[-1] + 1e-12):
            raise OutOfDomain("point outside the tabulated grid")
        out = np.interp(pts, spec.grid, spec.values)
    elif isinstance(spec, Additive):
        if arr.ndim == 1 and len(spec.components) == arr.shape[0]:
            # a single d-dimensional point
            return math.fsum(
                float(eval_function(c, arr[k])) for k, c in enumerate(spec.components)
            )
        raise DimensionMismatch("additive specs evaluate through eval_on_design")
    else:
        raise TypeError(f"unknown function spec {type(spec).__name__}")
    return float(out[0]) if scalar else out.reshape(arr.shape)


def eval_on_design(spec: FunctionSpec, design_points: np.ndarray) -> np.ndarray:
    """Evaluate a mean/variance spec on an (n, d) matrix of design points."""
    pts = np.asarray(design_points, dtype=float)
    if pts.ndim != 2:
        raise DimensionMismatch("design points must form an (n, d) matrix")
    n, d = pts.shape
    if isinstance(spec, Additive):
        if len(spec.components) != d:
            raise DimensionMismatch(
                f"additive spec has {len(spec.components)} components for d={d}"
            )
        total = np.zeros(n)
        for k, comp in enumerate(spec.components):
            total += eval_function(comp, pts[:, k])
        return total
    if isinstance(spec, Constant):
        return np.full(n, float(spec.value))
    if d != 1:
        raise DimensionMismatch(f"{type(spec).__name__} is univariate but d={d}")
    return eval_function(spec, pts[:, 0])


# ---------------------------------------------------------------------------
# Design specifications
# ---------------------------------------------------------------------------


@dataclass
class UniformInterval:
    a: float
    b: float

    def __post_init__(self):
        if not self.b > self.a:
            raise ValueError("need b > a")


@dataclass
class CombSupport:
    """Uniform distribution over a union of disjoint closed intervals."""

    intervals: tuple[tuple[float, float], ...]

    def __post_init__(self):
        ivals = tuple((float(lo), float(hi)) for lo, hi in self.intervals)
        ivals = tuple(sorted(ivals))
        for lo, hi in ivals:
            if not hi > lo:
                raise ValueError(f"interval ({lo}, {hi}) has nonpositive length")
        for (_, hi), (lo, _) in zip(ivals, ivals[1:]):
            if lo < hi:
                raise ValueError("intervals must be disjoint")
        self.intervals = ivals

    @property
    def total_length(self) -> float:
        return math.fsum(hi - lo for lo, hi in self.intervals)


@dataclass
class GridGD:
    """Deterministic d-dimensional grid (i_1/m, ..., i_d/m), m = n^(1/d)."""

    dim: int

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be positive")


@dataclass
class DiagonalDD:
    """Deterministic diagonal design (i/n, ..., i/n) in d dimensions."""

    dim: int

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be positive")


@dataclass
class ProductOfUnivariate:
    """Independent coordinates, each with its own univariate design."""

    factors: tuple

    def __post_init__(self):
        if not self.factors:
            raise ValueError("need at least one factor")
        for f in self.factors:
            if not isinstance(f, (UniformInterval, CombSupport)):
                raise ValueError("factors must be univariate random designs")


DesignSpec = Union[UniformInterval, CombSupport, GridGD, DiagonalDD, ProductOfUnivariate]


def design_dim(design: DesignSpec) -> int:
    if isinstance(design, (UniformInterval, CombSupport)):
        return 1
    if isinstance(design, (GridGD, DiagonalDD)):
        return design.dim
    return len(design.factors)


def _sample_univariate(design, n: int, rng: np.random.Generator) -> np.ndarray:
    if isinstance(design, UniformInterval):
        return design.a + (design.b - design.a) * rng.random(n)
    lengths = np.array([hi - lo for lo, hi in design.intervals])
    lows = np.array([lo for lo, _ in design.intervals])
    cum = np.concatenate([[0.0], np.cumsum(lengths)])
    u = rng.random(n) * cum[-1]
    k = np.clip(np.searchsorted(cum, u, side="right") - 1, 0, len(lengths) - 1)
    return lows[k] + (u - cum[k])


def sample_design(design: DesignSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw n design points as an (n, d) matrix (grid designs ignore rng)."""
    if n < 1:
        raise InvalidSampleSize(f"need n >= 1, got {n}")
    if isinstance(design, (UniformInterval, CombSupport)):
        return _sample_univariate(design, n, rng)[:, None]
    if isinstance(design, GridGD):
        m = round(n ** (1.0 / design.dim))
        if m**design.dim != n:
            raise DimensionMismatch(f"grid design needs n^(1/d) integer, got n={n}, d={design.dim}")
        axes = [np.arange(1, m + 1) / m] * design.dim
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([g.ravel() for g in mesh], axis=1)
    if isinstance(design, DiagonalDD):
        line = np.arange(1, n + 1) / n
        return np.tile(line[:, None], (1, design.dim))
    cols = [_sample_univariate(f, n, rng) for f in design.factors]
    return np.stack(cols, axis=1)


def support_contains(design: DesignSpec, points: np.ndarray) -> np.ndarray:
    """Exact closed-interval membership test, per point."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if isinstance(design, UniformInterval):
        x = pts[:, 0]
        return (x >= design.a) & (x <= design.b)
    if isinstance(design, CombSupport):
        x = pts[:, 0]
        ok = np.zeros(x.shape, dtype=bool)
        for lo, hi in design.intervals:
            ok |= (x >= lo) & (x <= hi)
        return ok
    if isinstance(design, (GridGD, DiagonalDD)):
        return np.all((pts >= 0.0) & (pts <= 1.0), axis=1)
    ok = np.ones(pts.shape[0], dtype=bool)
    for k, f in enumerate(design.factors):
        ok &= support_contains(f, pts[:, k : k + 1])
    return ok


# ---------------------------------------------------------------------------
# Noise specifications
# ---------------------------------------------------------------------------


@dataclass
class GaussianNoise:
    pass


@dataclass
class RademacherNoise:
    pass


@dataclass
class MomentMatchedNoise:
    dist: DiscreteDistribution

    def __post_init__(self):
        if abs(dist_moment(self.dist, 1)) > 1e-9 or abs(dist_moment(self.dist, 2) - 1.0) > 1e-9:
            raise ValueError("moment-matched noise must have mean 0 and variance 1")


NoiseSpec = Union[GaussianNoise, RademacherNoise, MomentMatchedNoise]


def sample_noise(noise: NoiseSpec, rng: np.random.Generator, n: int) -> np.ndarray:
    if isinstance(noise, GaussianNoise):
        return rng.standard_normal(n)
    if isinstance(noise, RademacherNoise):
        return rng.integers(0, 2, size=n) * 2.0 - 1.0
    return rng.choice(noise.dist.atoms, p=noise.dist.probs, size=n)


def noise_fourth_moment(noise: NoiseSpec) -> float:
    """Reported fourth moment of the standardized noise."""
    if isinstance(noise, GaussianNoise):
        return 3.0
    if isinstance(noise, RademacherNoise):
        return 1.0
    return dist_moment(noise.dist, 4)


# ---------------------------------------------------------------------------
# Sample sets
# ---------------------------------------------------------------------------


@dataclass
class SampleSet:
    """Observed design points and responses plus generation metadata."""

    design: np.ndarray
    response: np.ndarray
    seed: int | None
    meta: dict

    def __post_init__(self):
        self.design = np.asarray(self.design, dtype=float)
        self.response = np.asarray(self.response, dtype=float)
        if self.design.ndim == 1:
            self.design = self.design[:, None]
        if self.design.ndim != 2 or self.design.shape[0] != self.response.shape[0]:
            raise DimensionMismatch("design row count must equal response length")
        if self.design.shape[0] < 1:
            raise InvalidSampleSize("need at least one observation")

    @property
    def n(self) -> int:
        return self.design.shape[0]

    @property
    def dim(self) -> int:
        return self.design.shape[1]

    @property
    def x(self) -> np.ndarray:
        if self.dim != 1:
            raise DimensionMismatch("x is only defined for univariate designs")
        return self.design[:, 0]

    def save(self, path) -> tuple[Path, Path]:
        """Write `x_1,...,x_d,y` CSV plus the JSON sidecar; returns both paths."""
        csv_path = Path(path)
        sidecar = csv_path.with_suffix(".json")
        with open(csv_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow([f"x_{k + 1}" for k in range(self.dim)] + ["y"])
            for row, y in zip(self.design, self.response):
                writer.writerow([repr(float(v)) for v in row] + [repr(float(y))])
        with open(sidecar, "w") as fh:
            json.dump(self.meta_record(), fh, indent=2)
            fh.write("\n")
        return csv_path, sidecar

    def meta_record(self) -> dict:
        rec = {"seed": self.seed, "n": self.n}
        rec.update(self.meta)
        return rec

    @staticmethod
    def load(path) -> "SampleSet":
        csv_path = Path(path)
        with open(csv_path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            rows = [[float(v) for v in row] for row in reader if row]
        if not header or header[-1] != "y":
            raise ValueError(f"{csv_path} is not a sample CSV (missing y column)")
        data = np.asarray(rows, dtype=float)
        if data.size == 0:
            raise InvalidSampleSize(f"{csv_path} holds no observations")
        meta: dict = {}
        seed = None
        sidecar = csv_path.with_suffix(".json")
        if sidecar.exists() and sidecar != csv_path:
            with open(sidecar) as fh:
                meta = json.load(fh)
            seed = meta.pop("seed", None)
        return SampleSet(data[:, :-1], data[:, -1], seed, meta)


def generate(
    design: DesignSpec,
    mean: FunctionSpec,
    variance: FunctionSpec,
    noise: NoiseSpec,
    n: int,
    seed: int,
) -> SampleSet:
    """Draw a SampleSet from Y = f(X) + V(X)^(1/2) * eps, deterministically in seed."""
    if n < 1:
        raise InvalidSampleSize(f"need n >= 1, got {n}")
    rng = make_rng(seed)
    pts = sample_design(design, n, rng)
    f_vals = eval_on_design(mean, pts)
    v_vals = eval_on_design(variance, pts)
    if np.any(v_vals < 0.0):
        worst = float(np.min(v_vals))
        raise NegativeVariance(f"variance spec dipped to {worst} at a design point")
    eps = sample_noise(noise, rng, n)
    y = f_vals + np.sqrt(v_vals) * eps
    meta = {
        "design": design_spec_to_dict(design),
        "mean": function_spec_to_dict(mean),
        "variance": function_spec_to_dict(variance),
        "noise": noise_spec_to_dict(noise),
        "n": n,
    }
    return SampleSet(pts, y, seed, meta)


# ---------------------------------------------------------------------------
# Hard instances
# ---------------------------------------------------------------------------


def smallest_admissible_q(threshold: float) -> int:
    """Smallest odd integer strictly greater than the given threshold."""
    q = math.floor(threshold) + 1
    if q % 2 == 0:
        q += 1
    return q


@dataclass
class HomoscedasticHardInstance:
    """Null/alternative pair for the constant-variance lower bound.

    The alternative carries the trapezoid-comb mean with sigma^2 = 1; the
    null is f = 0 with sigma^2 = 1 + theta^2.  The design (shared by both)
    is uniform over the comb's upper bases.
    """

    mean: TrapezoidComb
    design: CombSupport
    sigma0_sq: float
    sigma1_sq: float
    theta_sq: float
    h_requested: float
    h_realized: float
    n_cells: int
    q: int
    heights_dist: DiscreteDistribution


def hard_instance_homoscedastic(
    alpha: float, n: int, c: float = 1.0, seed: int = 0
) -> HomoscedasticHardInstance:
    """Build the trapezoid-comb hard instance for 0 < alpha < 1/4.

    The requested cell width c * n^(-2/(4a+1)) is rounded so the number of
    cells N = 1/(6h) is a positive integer; both values are recorded.
    Plateau heights are i.i.d. draws from the moment-matched distribution
    of the smallest admissible odd order q > 1 + 1/(2a).
    """
    if not 0.0 < alpha < 0.25:
        raise AlphaOutOfRange(f"hard instance needs 0 < alpha < 1/4, got {alpha}")
    if n < 2:
        raise InvalidSampleSize(f"need n >= 2, got {n}")
    h_requested = c * float(n) ** (-2.0 / (4.0 * alpha + 1.0))
    n_cells = max(1, round(1.0 / (6.0 * h_requested)))
    h = 1.0 / (6.0 * n_cells)
    theta_sq = h ** (2.0 * alpha)
    q = smallest_admissible_q(1.0 + 1.0 / (2.0 * alpha))
    heights_dist = moment_matched_distribution(q)
    rng = make_rng(seed)
    heights = rng.choice(heights_dist.atoms, p=heights_dist.probs, size=n_cells)
    mean = TrapezoidComb(cell_width=h, amplitude=h**alpha, heights=heights)
    design = CombSupport(
        tuple(((6 * i - 5) * h, (6 * i - 1) * h) for i in range(1, n_cells + 1))
    )
    return HomoscedasticHardInstance(
        mean=mean,
        design=design,
        sigma0_sq=1.0 + theta_sq,
        sigma1_sq=1.0,
        theta_sq=theta_sq,
        h_requested=h_requested,
        h_realized=h,
        n_cells=n_cells,
        q=q,
        heights_dist=heights_dist,
    )


@dataclass
class VarfnHardInstance:
    """Null/alternative pair for the variance-function lower bound at x_star."""

    mean: LocalTrapezoid
    var_null: Constant
    var_alt: SmoothBump
    design: CombSupport
    theta_sq: float
    h1_requested: float
    h2_requested: float
    h1_realized: float
    h2_realized: float
    n_trapezoids: int
    m_half: int
    q: int
    heights_dist: DiscreteDistribution


def hard_instance_varfn(
    alpha: float,
    beta: float,
    x_star: float,
    n: int,
    c: float = 1.0,
    seed: int = 0,
) -> VarfnHardInstance:
    """Build the localized trapezoid/bump hard instance for alpha < beta/(4beta+2).

    The alternative variance dips to 1 - h2^beta on [x_star - h2, x_star + h2]
    via a smooth bump; the mean is a comb of N = h2/(2*h1) trapezoids inside
    that window.  h1 is rounded so N is an odd positive integer (making
    M = h2/(4*h1) - 1/2 integral, with x_star inside the middle upper base);
    the design is uniform over [0, x_star - 2*h2], [x_star + 2*h2, 1] and the
    upper bases, so the variance is exactly 1 at every design point outside
    the window.
    """
    if alpha <= 0.0 or beta <= 0.0:
        raise SmoothnessOutOfRange("alpha and beta must be positive")
    if alpha >= beta / (4.0 * beta + 2.0):
        raise SmoothnessRegime(
            f"construction needs alpha < beta/(4beta+2); got alpha={alpha}, beta={beta}"
        )
    if not 0.0 < x_star < 1.0:
        raise OutOfDomain(f"x_star must lie in (0, 1), got {x_star}")
    if n < 2:
        raise InvalidSampleSize(f"need n >= 2, got {n}")
    denom = 4.0 * alpha * beta + beta + 2.0 * alpha
    theta_sq = c * float(n) ** (-4.0 * alpha * beta / denom)
    h2_requested = theta_sq ** (1.0 / beta)
    h1_requested = theta_sq ** (1.0 / (2.0 * alpha))
    n_req = h2_requested / (2.0 * h1_requested)
    n_traps = max(3, 2 * round((n_req - 1.0) / 2.0) + 1)
    h2 = h2_requested
    h1 = h2 / (2.0 * n_traps)
    if x_star - 2.0 * h2 <= 0.0 or x_star + 2.0 * h2 >= 1.0:
        raise OutOfDomain(
            f"bump of width {h2} does not fit at x_star={x_star}; increase n or shrink c"
        )
    q = smallest_admissible_q(1.0 + (beta + 2.0 * alpha) / (2.0 * alpha * beta))
    heights_dist = moment_matched_distribution(q)
    rng = make_rng(seed)
    heights = rng.choice(heights_dist.atoms, p=heights_dist.probs, size=n_traps)
    mean = LocalTrapezoid(x_star=x_star, h1=h1, h2=h2, alpha=alpha, heights=heights)
    left = x_star - h2
    bases = tuple(
        (left + (4 * i - 3) * h1, left + (4 * i - 1) * h1) for i in range(1, n_traps + 1)
    )
    design = CombSupport(((0.0, x_star - 2.0 * h2),) + bases + ((x_star + 2.0 * h2, 1.0),))
    return VarfnHardInstance(
        mean=mean,
        var_null=Constant(1.0),
        var_alt=SmoothBump(center=x_star, width=h2, height=-(h2**beta), offset=1.0),
        design=design,
        theta_sq=theta_sq,
        h1_requested=h1_requested,
        h2_requested=h2_requested,
        h1_realized=h1,
        h2_realized=h2,
        n_trapezoids=n_traps,
        m_half=(n_traps - 1) // 2,
        q=q,
        heights_dist=heights_dist,
    )


# ---------------------------------------------------------------------------
# Diagnostics
# ---------------------------------------------------------------------------


def _natural_domain(spec: FunctionSpec) -> tuple[float, float]:
    if isinstance(spec, SmoothBump):
        return spec.center - 2.0 * spec.width, spec.center + 2.0 * spec.width
    if isinstance(spec, LocalTrapezoid):
        return spec.x_star - spec.h2, spec.x_star + spec.h2
    if isinstance(spec, Custom):
        return float(spec.grid[0]), float(spec.grid[-1])
    return 0.0, 1.0


def holder_seminorm(
    spec: FunctionSpec,
    alpha: float,
    grid_size: int,
    domain: tuple[float, float] | None = None,
) -> float:
    """Grid estimate of the Holder-class constant: max ratio plus sup|f|.

    Diagnostic only: evaluates max over grid pairs of |f(x)-f(y)|/|x-y|^a
    plus sup|f| on a uniform grid, a numerical upper envelope rather than a
    certification of class membership.  Restricted to a in (0, 1].
    """
    if not 0.0 < alpha <= 1.0:
        raise SmoothnessOutOfRange("holder_seminorm covers the sub-Lipschitz regime (0, 1]")
    if grid_size < 2:
        raise ValueError("grid_size must be at least 2")
    lo, hi = domain if domain is not None else _natural_domain(spec)
    xs = np.linspace(lo, hi, grid_size)
    fs = eval_function(spec, xs)
    sup = float(np.max(np.abs(fs)))
    best = 0.0
    chunk = max(1, int(2e6) // grid_size)
    for start in range(0, grid_size - 1, chunk):
        stop = min(start + chunk, grid_size - 1)
        dx = np.abs(xs[start:stop, None] - xs[None, :])
        df = np.abs(fs[start:stop, None] - fs[None, :])
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(dx > 0.0, df / dx**alpha, 0.0)
        best = max(best, float(np.max(ratio)))
    return best + sup


# ---------------------------------------------------------------------------
# Spec (de)serialization for sidecars and CLI provenance
# ---------------------------------------------------------------------------


def function_spec_to_dict(spec: FunctionSpec) -> dict:
    if isinstance(spec, Constant):
        return {"kind": "constant", "value": spec.value}
    if isinstance(spec, Polynomial):
        return {"kind": "polynomial", "coefficients": list(spec.coefficients)}
    if isinstance(spec, SmoothBump):
        return {
            "kind": "smooth_bump",
            "center": spec.center,
            "width": spec.width,
            "height": spec.height,
            "offset": spec.offset,
        }
    if isinstance(spec, TrapezoidComb):
        return {
            "kind": "trapezoid_comb",
            "cell_width": spec.cell_width,
            "amplitude": spec.amplitude,
            "heights": spec.heights.tolist(),
        }
    if isinstance(spec, LocalTrapezoid):
        return {
            "kind": "local_trapezoid",
            "x_star": spec.x_star,
            "h1": spec.h1,
            "h2": spec.h2,
            "alpha": spec.alpha,
            "heights": spec.heights.tolist(),
        }
    if isinstance(spec, Custom):
        return {"kind": "custom", "grid": spec.grid.tolist(), "values": spec.values.tolist()}
    if isinstance(spec, Additive):
        return {
            "kind": "additive",
            "components": [function_spec_to_dict(c) for c in spec.components],
        }
    raise TypeError(f"unknown function spec {type(spec).__name__}")


def function_spec_from_dict(d: dict) -> FunctionSpec:
    kind = d["kind"]
    if kind == "constant":
        return Constant(d["value"])
    if kind == "polynomial":
        return Polynomial(tuple(d["coefficients"]))
    if kind == "smooth_bump":
        return SmoothBump(d["center"], d["width"], d["height"], d.get("offset", 0.0))
    if kind == "trapezoid_comb":
        return TrapezoidComb(d["cell_width"], d["amplitude"], np.asarray(d["heights"]))
    if kind == "local_trapezoid":
        return LocalTrapezoid(
            d["x_star"], d["h1"], d["h2"], d["alpha"], np.asarray(d["heights"])
        )
    if kind == "custom":
        return Custom(np.asarray(d["grid"]), np.asarray(d["values"]))
    if kind == "additive":
        return Additive(tuple(function_spec_from_dict(c) for c in d["components"]))
    raise ValueError(f"unknown function spec kind {kind!r}")


def design_spec_to_dict(design: DesignSpec) -> dict:
    if isinstance(design, UniformInterval):
        return {"kind": "uniform", "a": design.a, "b": design.b}
    if isinstance(design, CombSupport):
        return {"kind": "comb", "intervals": [list(iv) for iv in design.intervals]}
    if isinstance(design, GridGD):
        return {"kind": "grid_gd", "dim": design.dim}
    if isinstance(design, DiagonalDD):
        return {"kind": "diagonal_dd", "dim": design.dim}
    return {"kind": "product", "factors": [design_spec_to_dict(f) for f in design.factors]}


def design_spec_from_dict(d: dict) -> DesignSpec:
    kind = d["kind"]
    if kind == "uniform":
        return UniformInterval(d["a"], d["b"])
    if kind == "comb":
        return CombSupport(tuple(tuple(iv) for iv in d["intervals"]))
    if kind == "grid_gd":
        return GridGD(d["dim"])
    if kind == "diagonal_dd":
        return DiagonalDD(d["dim"])
    if kind == "product":
        return ProductOfUnivariate(tuple(design_spec_from_dict(f) for f in d["factors"]))
    raise ValueError(f"unknown design spec kind {kind!r}")


def noise_spec_to_dict(noise: NoiseSpec) -> dict:
    if isinstance(noise, GaussianNoise):
        return {"kind": "gaussian", "fourth_moment": 3.0}
    if isinstance(noise, RademacherNoise):
        return {"kind": "rademacher", "fourth_moment": 1.0}
    return {
        "kind": "moment_matched",
        "atoms": noise.dist.atoms.tolist(),
        "probs": noise.dist.probs.tolist(),
        "fourth_moment": noise_fourth_moment(noise),
    }


def noise_spec_from_dict(d: dict) -> NoiseSpec:
    kind = d["kind"]
    if kind == "gaussian":
        return GaussianNoise()
    if kind == "rademacher":
        return RademacherNoise()
    if kind == "moment_matched":
        return MomentMatchedNoise(DiscreteDistribution(np.asarray(d["atoms"]), np.asarray(d["probs"])))
    raise ValueError(f"unknown noise spec kind {kind!r}")
