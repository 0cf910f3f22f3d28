"""Monte Carlo rate-verification engine.

Sweeps a grid of sample sizes, runs seeded independent trials of a scenario,
averages squared errors into per-n MSEs, and fits the log-log slope, which
is then compared against the theoretical rate exponent for that scenario.

Determinism: trial t at grid position i uses seed base_seed XOR (i*10^6 + t),
trials run in index order, and reductions are fixed, so identical configs
produce bit-identical results.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import datagen, var_estimators, varfn_estimators
from .datagen import (
    Additive,
    Constant,
    Custom,
    GaussianNoise,
    GridGD,
    Polynomial,
    ProductOfUnivariate,
    UniformInterval,
    generate,
    hard_instance_homoscedastic,
)
from .errors import NonPositiveValue, SchemaMismatch, TrialFailure
from .kernels import (
    BandwidthPlan,
    bandwidth_homoscedastic,
    bandwidth_multivariate,
    bandwidth_varfn,
    box_kernel,
)

__all__ = [
    "Scenario",
    "ExperimentConfig",
    "RateResult",
    "run_rate_experiment",
    "fit_loglog_slope",
    "theoretical_exponent",
    "persist",
    "load",
    "export_csv",
]

SCHEMA_VERSION = 1


class Scenario(str, Enum):
    HOMOSCEDASTIC_SMOOTH = "homoscedastic-smooth"
    HOMOSCEDASTIC_ROUGH = "homoscedastic-rough"
    VARFN_POINTWISE = "varfn-pointwise"
    VARFN_INTEGRATED = "varfn-integrated"
    MULTIVARIATE = "multivariate"
    ADDITIVE_GD = "additive-gd"
    ADDITIVE_MOM = "additive-mom"
    PROJECTION = "projection"
    # Deterministic self-test scenario: per-trial error^2 = n^fake_exponent.
    FAKE_POWER_LAW = "fake-power-law"


@dataclass
class ExperimentConfig:
    scenario: Scenario
    n_grid: tuple[int, ...]
    trials_per_n: int = 200
    alpha: float = 1.0
    beta: float = 1.0
    c1: float = 1.0
    c2: float = 1.0
    base_seed: int = 0
    x_star: float = 0.5
    dim: int = 2
    integration_points: int = 64
    fake_exponent: float = -1.0

    def __post_init__(self):
        self.scenario = Scenario(self.scenario)
        self.n_grid = tuple(int(n) for n in self.n_grid)
        if len(self.n_grid) < 2:
            raise ValueError("n_grid needs at least two sample sizes")
        if any(n < 4 for n in self.n_grid):
            raise ValueError("all sample sizes must be >= 4")
        if any(b <= a for a, b in zip(self.n_grid, self.n_grid[1:])):
            raise ValueError("n_grid must be strictly increasing")
        if self.trials_per_n < 2:
            raise ValueError("trials_per_n must be >= 2")

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario.value,
            "n_grid": list(self.n_grid),
            "trials_per_n": self.trials_per_n,
            "alpha": self.alpha,
            "beta": self.beta,
            "c1": self.c1,
            "c2": self.c2,
            "base_seed": self.base_seed,
            "x_star": self.x_star,
            "dim": self.dim,
            "integration_points": self.integration_points,
            "fake_exponent": self.fake_exponent,
        }

    @staticmethod
    def from_dict(d: dict) -> "ExperimentConfig":
        return ExperimentConfig(**d)


@dataclass
class RateResult:
    n_grid: tuple[int, ...]
    mse_per_n: np.ndarray
    se_per_n: np.ndarray
    slope: float
    slope_se: float
    theoretical_exponent: float
    config: dict = field(default_factory=dict)

    def __post_init__(self):
        self.mse_per_n = np.asarray(self.mse_per_n, dtype=float)
        self.se_per_n = np.asarray(self.se_per_n, dtype=float)
        if len(self.n_grid) != self.mse_per_n.size or len(self.n_grid) != self.se_per_n.size:
            raise ValueError("per-n vectors must match the n grid")
        if np.any(self.mse_per_n < 0.0):
            raise ValueError("MSEs must be nonnegative")


# ---------------------------------------------------------------------------
# Scenario definitions
# ---------------------------------------------------------------------------

_SINE_GRID_POINTS = 4097


def _sine_mean() -> Custom:
    """sin(2 pi x)/(2 pi) on a fine grid: sup 1/(2pi), Lipschitz constant 1."""
    grid = np.linspace(0.0, 1.0, _SINE_GRID_POINTS)
    return Custom(grid, np.sin(2.0 * math.pi * grid) / (2.0 * math.pi))


def _trial_homoscedastic_smooth(cfg: ExperimentConfig, n: int, seed: int) -> float:
    sample = generate(UniformInterval(0.0, 1.0), _sine_mean(), Constant(1.0), GaussianNoise(), n, seed)
    h = bandwidth_homoscedastic(BandwidthPlan(cfg.alpha, None, cfg.c1), n)
    est = var_estimators.ustat_variance(sample, h, box_kernel()).value
    return (est - 1.0) ** 2


def _trial_homoscedastic_rough(cfg: ExperimentConfig, n: int, seed: int) -> float:
    # Heights frozen at base_seed: the target mean is one fixed function per n;
    # the risk randomness comes from the design and noise only.
    inst = hard_instance_homoscedastic(cfg.alpha, n, cfg.c1, seed=cfg.base_seed)
    sample = generate(inst.design, inst.mean, Constant(inst.sigma1_sq), GaussianNoise(), n, seed)
    h = bandwidth_homoscedastic(BandwidthPlan(cfg.alpha, None, cfg.c1), n)
    est = var_estimators.ustat_variance(sample, h, box_kernel()).value
    return (est - inst.sigma1_sq) ** 2


_VARFN_TRUTH = Polynomial((1.0, 0.5))


def _varfn_sample_and_cfg(cfg: ExperimentConfig, n: int, seed: int):
    sample = generate(UniformInterval(0.0, 1.0), _sine_mean(), _VARFN_TRUTH, GaussianNoise(), n, seed)
    h1, h2 = bandwidth_varfn(BandwidthPlan(cfg.alpha, cfg.beta, cfg.c1, cfg.c2), n)
    lp_cfg = varfn_estimators.LocalPolyConfig(beta=cfg.beta, h1=h1, h2=h2)
    return sample, lp_cfg


def _trial_varfn_pointwise(cfg: ExperimentConfig, n: int, seed: int) -> float:
    sample, lp_cfg = _varfn_sample_and_cfg(cfg, n, seed)
    est = varfn_estimators.local_poly_varfn(sample, cfg.x_star, lp_cfg)
    truth = float(datagen.eval_function(_VARFN_TRUTH, cfg.x_star))
    return varfn_estimators.loss_pointwise(est, truth)


def _trial_varfn_integrated(cfg: ExperimentConfig, n: int, seed: int) -> float:
    sample, lp_cfg = _varfn_sample_and_cfg(cfg, n, seed)
    curve = lambda x: varfn_estimators.local_poly_varfn(sample, x, lp_cfg)
    return varfn_estimators.loss_integrated(
        curve,
        _VARFN_TRUTH,
        UniformInterval(0.0, 1.0),
        cfg.integration_points,
        seed ^ 0x5EED,
    )


def _trial_multivariate(cfg: ExperimentConfig, n: int, seed: int) -> float:
    d = cfg.dim
    design = ProductOfUnivariate(tuple(UniformInterval(0.0, 1.0) for _ in range(d)))
    mean = Additive(tuple(_sine_mean() for _ in range(d)))
    sample = generate(design, mean, Constant(1.0), GaussianNoise(), n, seed)
    h = bandwidth_multivariate([cfg.alpha] * d, n, cfg.c1)
    est = var_estimators.ustat_variance_multivariate(sample, h, box_kernel()).value
    return (est - 1.0) ** 2


def _trial_additive_gd(cfg: ExperimentConfig, n: int, seed: int) -> float:
    d = cfg.dim
    m = round(n ** (1.0 / d))
    design = GridGD(d)
    mean = Additive(tuple(_sine_mean() for _ in range(d)))
    sample = generate(design, mean, Constant(1.0), GaussianNoise(), n, seed)
    # GridGD rows are lexicographic in (i_1, ..., i_d), so a C-order reshape
    # recovers the grid array.
    est = var_estimators.additive_gd_variance(sample.response.reshape((m,) * d))
    return (est - 1.0) ** 2


def _trial_additive_mom(cfg: ExperimentConfig, n: int, seed: int) -> float:
    d = cfg.dim
    design = ProductOfUnivariate(tuple(UniformInterval(0.0, 1.0) for _ in range(d)))
    mean = Additive(tuple(_sine_mean() for _ in range(d)))
    sample = generate(design, mean, Constant(1.0), GaussianNoise(), n, seed)
    plans = [BandwidthPlan(cfg.alpha, None, cfg.c1) for _ in range(d)]
    est = var_estimators.additive_mom_variance(sample, plans, box_kernel())
    return (est - 1.0) ** 2


def _trial_projection(cfg: ExperimentConfig, n: int, seed: int) -> float:
    sample = generate(UniformInterval(0.0, 1.0), _sine_mean(), Constant(1.0), GaussianNoise(), n, seed)
    levels = max(0, round(2.0 / (4.0 * cfg.alpha + 1.0) * math.log2(n)))
    proj_cfg = var_estimators.ProjectionConfig(
        (levels,), (var_estimators.uniform_cdf(0.0, 1.0),)
    )
    est = var_estimators.projection_variance(sample, proj_cfg)
    return (est - 1.0) ** 2


def _trial_fake(cfg: ExperimentConfig, n: int, seed: int) -> float:
    return float(n) ** cfg.fake_exponent


_TRIALS: dict[Scenario, Callable[[ExperimentConfig, int, int], float]] = {
    Scenario.HOMOSCEDASTIC_SMOOTH: _trial_homoscedastic_smooth,
    Scenario.HOMOSCEDASTIC_ROUGH: _trial_homoscedastic_rough,
    Scenario.VARFN_POINTWISE: _trial_varfn_pointwise,
    Scenario.VARFN_INTEGRATED: _trial_varfn_integrated,
    Scenario.MULTIVARIATE: _trial_multivariate,
    Scenario.ADDITIVE_GD: _trial_additive_gd,
    Scenario.ADDITIVE_MOM: _trial_additive_mom,
    Scenario.PROJECTION: _trial_projection,
    Scenario.FAKE_POWER_LAW: _trial_fake,
}


def theoretical_exponent(cfg: ExperimentConfig) -> float:
    """Rate exponent the scenario's MSE should decay with."""
    a, b, d = cfg.alpha, cfg.beta, cfg.dim
    s = cfg.scenario
    if s in (Scenario.HOMOSCEDASTIC_SMOOTH, Scenario.HOMOSCEDASTIC_ROUGH, Scenario.PROJECTION):
        return -min(8.0 * a / (4.0 * a + 1.0), 1.0)
    if s in (Scenario.VARFN_POINTWISE, Scenario.VARFN_INTEGRATED):
        return -min(8.0 * a * b / (4.0 * a * b + 2.0 * a + b), 2.0 * b / (2.0 * b + 1.0))
    if s is Scenario.MULTIVARIATE:
        return -min(8.0 * a / (4.0 * a + d), 1.0)
    if s is Scenario.ADDITIVE_GD:
        return -1.0
    if s is Scenario.ADDITIVE_MOM:
        return -min(8.0 * a / (4.0 * a + 1.0), 1.0)
    return cfg.fake_exponent


def fit_loglog_slope(ns: Sequence[int], values: Sequence[float]) -> tuple[float, float]:
    """OLS slope and its standard error on (ln n, ln value)."""
    ns = np.asarray(ns, dtype=float)
    vals = np.asarray(values, dtype=float)
    if ns.size < 2 or ns.size != vals.size:
        raise ValueError("need at least two matched points")
    if np.any(vals <= 0.0):
        raise NonPositiveValue("log-log fit needs strictly positive values")
    x = np.log(ns)
    y = np.log(vals)
    xc = x - x.mean()
    sxx = float(np.sum(xc * xc))
    slope = float(np.sum(xc * (y - y.mean())) / sxx)
    intercept = float(y.mean() - slope * x.mean())
    resid = y - (intercept + slope * x)
    dof = ns.size - 2
    se = math.sqrt(float(np.sum(resid**2)) / dof / sxx) if dof > 0 else 0.0
    return slope, se


def run_rate_experiment(
    cfg: ExperimentConfig,
    trial_fn: Callable[[ExperimentConfig, int, int], float] | None = None,
) -> RateResult:
    """Run the scenario across the n grid and fit the MSE decay slope.

    ``trial_fn`` overrides the scenario's trial (used by self-tests); it
    must return one squared error given (cfg, n, seed).  Any trial error
    aborts the experiment with scenario/n/trial context attached.
    """
    trial = trial_fn if trial_fn is not None else _TRIALS[cfg.scenario]
    mse = np.empty(len(cfg.n_grid))
    se = np.empty(len(cfg.n_grid))
    for idx, n in enumerate(cfg.n_grid):
        errors = np.empty(cfg.trials_per_n)
        for t in range(cfg.trials_per_n):
            seed = cfg.base_seed ^ (idx * 10**6 + t)
            try:
                errors[t] = trial(cfg, n, seed)
            except Exception as exc:
                raise TrialFailure(
                    f"scenario {cfg.scenario.value}: trial {t} at n={n} failed: {exc}"
                ) from exc
        mse[idx] = float(np.mean(errors))
        se[idx] = float(np.std(errors, ddof=1)) / math.sqrt(cfg.trials_per_n)
    slope, slope_se = fit_loglog_slope(cfg.n_grid, mse)
    return RateResult(
        n_grid=cfg.n_grid,
        mse_per_n=mse,
        se_per_n=se,
        slope=slope,
        slope_se=slope_se,
        theoretical_exponent=theoretical_exponent(cfg),
        config=cfg.to_dict(),
    )


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------


def persist(result: RateResult, path) -> Path:
    """Write the result as schema-versioned JSON; round trips are lossless."""
    path = Path(path)
    payload = {
        "schema_version": SCHEMA_VERSION,
        "config": result.config,
        "n_grid": list(result.n_grid),
        "mse_per_n": result.mse_per_n.tolist(),
        "se_per_n": result.se_per_n.tolist(),
        "slope": result.slope,
        "slope_se": result.slope_se,
        "theoretical_exponent": result.theoretical_exponent,
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
    return path


def load(path) -> RateResult:
    with open(path) as fh:
        payload = json.load(fh)
    version = payload.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaMismatch(f"unknown schema version {version!r}, expected {SCHEMA_VERSION}")
    return RateResult(
        n_grid=tuple(payload["n_grid"]),
        mse_per_n=np.asarray(payload["mse_per_n"]),
        se_per_n=np.asarray(payload["se_per_n"]),
        slope=payload["slope"],
        slope_se=payload["slope_se"],
        theoretical_exponent=payload["theoretical_exponent"],
        config=payload.get("config", {}),
    )


def export_csv(result: RateResult, path) -> Path:
    path = Path(path)
    with open(path, "w") as fh:
        fh.write("n,mse,se\n")
        for n, m, s in zip(result.n_grid, result.mse_per_n, result.se_per_n):
            fh.write(f"{n},{float(m)!r},{float(s)!r}\n")
    return path
