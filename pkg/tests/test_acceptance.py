"""Acceptance criteria, one test per criterion.

Each test prints a PASS/FAIL line (run with ``pytest -s`` to see them all).
Slope criteria run full 200-trial Monte Carlo sweeps, so this module takes
a couple of minutes; everything is seeded and deterministic.
"""

import math
import time

import numpy as np
import pytest

from nprvar import datagen as dg
from nprvar import harness as hz
from nprvar import lb_tools as lb
from nprvar import var_estimators as ve
from nprvar import varfn_estimators as vf
from nprvar.kernels import box_kernel, kernel_eval

BASE_SEED = 20260810


def report(num: int, name: str, ok: bool, detail: str) -> None:
    print(f"criterion {num:02d} {'PASS' if ok else 'FAIL'}: {name}: {detail}")
    assert ok, f"criterion {num} failed: {detail}"


def test_criterion_01_parametric_regime_slope():
    start = time.time()
    cfg = hz.ExperimentConfig(
        scenario="homoscedastic-smooth",
        n_grid=(64, 128, 256, 512, 1024, 2048, 4096),
        trials_per_n=200,
        alpha=1.0,
        base_seed=BASE_SEED,
    )
    result = hz.run_rate_experiment(cfg)
    elapsed = time.time() - start
    ok = -1.2 <= result.slope <= -0.8 and elapsed < 120.0
    report(
        1,
        "parametric variance rate (smooth mean)",
        ok,
        f"slope={result.slope:.4f} in [-1.2, -0.8], theory={result.theoretical_exponent}, "
        f"runtime={elapsed:.1f}s < 120s",
    )


def test_criterion_02_subparametric_regime_slope():
    cfg = hz.ExperimentConfig(
        scenario="homoscedastic-rough",
        n_grid=(256, 512, 1024, 2048, 4096, 8192, 16384),
        trials_per_n=200,
        alpha=0.125,
        base_seed=BASE_SEED,
    )
    result = hz.run_rate_experiment(cfg)
    ok = -0.87 <= result.slope <= -0.47
    report(
        2,
        "sub-parametric variance rate (frozen rough mean)",
        ok,
        f"slope={result.slope:.4f} in [-0.87, -0.47], theory={result.theoretical_exponent:.4f}",
    )


def test_criterion_03_variance_function_smooth_slope():
    cfg = hz.ExperimentConfig(
        scenario="varfn-pointwise",
        n_grid=(128, 256, 512, 1024, 2048, 4096, 8192),
        trials_per_n=200,
        alpha=1.0,
        beta=1.0,
        x_star=0.5,
        base_seed=BASE_SEED,
    )
    result = hz.run_rate_experiment(cfg)
    ok = -0.87 <= result.slope <= -0.47
    report(
        3,
        "variance-function pointwise rate (smooth regime)",
        ok,
        f"slope={result.slope:.4f} in [-0.87, -0.47], theory={result.theoretical_exponent:.4f}",
    )


def test_criterion_04_reproducing_property():
    worst = 0.0
    for beta in (1.5, 2.5):  # ell = 1 and ell = 2
        cfg = vf.LocalPolyConfig(beta=beta, h1=0.05, h2=0.3)
        for rep in range(100):
            rng = np.random.default_rng(int(1000 * beta) + rep)
            x = rng.random(200)
            y = rng.standard_normal(200)
            sample = dg.SampleSet(x, y, 0, {})
            w = vf.lp_weights(sample, 0.5, cfg)
            scale_base = float(np.sum(np.abs(w.weights)))
            for k in range(1, cfg.ell + 1):
                lhs = abs(float(np.sum(w.weights * (w.midpoints - 0.5) ** k)))
                bound = 1e-8 * scale_base * cfg.h2**k
                worst = max(worst, lhs / bound if bound > 0 else 0.0)
    ok = worst <= 1.0
    report(4, "local polynomial reproducing property", ok,
           f"max |sum w (X_ij - x*)^k| over bound = {worst:.3e} <= 1")


def test_criterion_05_adjugate_identity():
    rng = np.random.default_rng(42)
    worst = 0.0
    for rep in range(1000):
        size = int(rng.integers(1, 6))
        scale = float(rng.choice([0.1, 1.0, 10.0]))
        m = scale * rng.standard_normal((size, size))
        resid = m @ vf.adjugate(m) - vf.det_cofactor(m) * np.eye(size)
        bound = 1e-10 * max(np.abs(m).max() ** size, np.finfo(float).tiny)
        worst = max(worst, float(np.abs(resid).max()) / bound)
    ok = worst <= 1.0
    report(5, "adjugate identity M adj(M) = det(M) I", ok,
           f"max residual over bound = {worst:.3e} <= 1 across 1000 matrices")


def test_criterion_06_moment_matching():
    worst = 0.0
    for q in (3, 5, 7, 9):
        dist = lb.moment_matched_distribution(q)
        for j in range(1, q + 1):
            worst = max(worst, abs(lb.dist_moment(dist, j) - lb.normal_moment(j)))
    ok = worst <= 1e-10
    report(6, "moment matching against normal moments", ok,
           f"max |moment gap| = {worst:.3e} <= 1e-10 for q in {{3,5,7,9}}")


def _mvn_density(cov):
    chol = np.linalg.cholesky(cov)
    logdet = 2.0 * np.sum(np.log(np.diag(chol)))
    d = cov.shape[0]

    def dens(z):
        sol = np.linalg.solve(chol, np.atleast_2d(z).T)
        quad = np.sum(sol**2, axis=0)
        return np.exp(-0.5 * quad - 0.5 * logdet - 0.5 * d * math.log(2.0 * math.pi))

    return dens


def _mvn_sampler(cov):
    chol = np.linalg.cholesky(cov)

    def sampler(rng, m):
        return rng.standard_normal((m, cov.shape[0])) @ chol.T

    return sampler


def test_criterion_07_gaussian_tv_sandwich():
    rng = np.random.default_rng(7)
    m = 10**6
    # conservative MC standard error: sd of a [0,1] variable is at most 1/2
    se = 0.5 / math.sqrt(m)
    failures = []
    for case in range(20):
        d = int(rng.integers(1, 4))
        a = rng.standard_normal((d, d))
        sigma1 = a @ a.T + 0.5 * np.eye(d)
        spread = float(rng.choice([0.01, 0.05, 0.2, 1.0, 5.0]))
        b = rng.standard_normal((d, d))
        sigma2 = sigma1 + spread * (b @ b.T)
        lower, upper = lb.gaussian_tv_bound(sigma1, sigma2)
        tv = lb.tv_monte_carlo(
            _mvn_density(sigma1), _mvn_density(sigma2), _mvn_sampler(sigma2), m, seed=900 + case
        )
        if not (lower - 3.0 * se <= tv <= upper + 3.0 * se):
            failures.append((case, d, lower, tv, upper))
    ok = not failures
    report(7, "Gaussian total-variation sandwich", ok,
           f"20/20 Monte Carlo TVs inside [lower-3se, upper+3se]" if ok else f"violations: {failures}")


def test_criterion_08_occupancy_two_point_law():
    occ = lb.multinomial_max_occupancy(100, 5000, 100_000, seed=BASE_SEED)
    p12 = occ.get(1, 0.0) + occ.get(2, 0.0)
    p2 = occ.get(2, 0.0)
    lam = lb.kolchin_lambda(100, 5000, 2)
    ok = abs(p12 - 1.0) <= 0.01 and abs(p2 - 0.632) <= 0.05
    report(8, "sparse multinomial maximum-count law", ok,
           f"lambda_2={lam}, P(max in {{1,2}})={p12:.4f} (within 0.01 of 1), "
           f"P(max=2)={p2:.4f} (within 0.05 of 1-1/e)")


def test_criterion_09_additive_gd():
    rng = np.random.default_rng(9)
    f, g = rng.standard_normal(64), rng.standard_normal(64)
    exact = ve.additive_gd_variance(f[:, None] + g[None, :])
    cfg = hz.ExperimentConfig(
        scenario="additive-gd",
        n_grid=(256, 1024, 4096, 16384),
        trials_per_n=200,
        dim=2,
        base_seed=BASE_SEED,
    )
    result = hz.run_rate_experiment(cfg)
    ok = exact <= 1e-12 and -1.2 <= result.slope <= -0.8
    report(9, "grid-design additive estimator", ok,
           f"noiseless value={exact:.3e} <= 1e-12, slope={result.slope:.4f} in [-1.2, -0.8]")


def test_criterion_10_projection_variance_law():
    n = 4096
    trials = 2000
    cdfs = (ve.uniform_cdf(0.0, 1.0),)
    cfg_wide = ve.ProjectionConfig((12,), cdfs)  # 2^J = 4096 = n
    cfg_narrow = ve.ProjectionConfig((6,), cdfs)  # 2^J = 64
    wide = np.empty(trials)
    narrow = np.empty(trials)
    for t in range(trials):
        sample = dg.generate(
            dg.UniformInterval(0, 1), dg.Constant(0.0), dg.Constant(1.0),
            dg.GaussianNoise(), n, BASE_SEED ^ (7_000_000 + t),
        )
        wide[t] = ve.projection_variance(sample, cfg_wide)
        narrow[t] = ve.projection_variance(sample, cfg_narrow)
    ratio = wide.var(ddof=1) / narrow.var(ddof=1)
    theory = (2**12 + n) / (2**6 + n)
    ok = 1.5 <= ratio <= 2.5
    report(10, "projection estimator variance law", ok,
           f"empirical variance ratio={ratio:.3f} in [1.5, 2.5] (theory {theory:.3f})")


def test_criterion_11_pair_oracle_equivalence():
    rng = np.random.default_rng(11)
    worst = 0.0
    for rep in range(50):
        n = int(rng.integers(2, 13))
        x = rng.random(n)
        y = rng.standard_normal(n)
        h = float(rng.uniform(0.2, 1.0))
        est = ve.ustat_variance(dg.SampleSet(x, y, 0, {}), h).value
        num = den = 0.0
        for i in range(n):
            for j in range(n):
                if i == j:
                    continue
                kw = float(kernel_eval(box_kernel(), (x[i] - x[j]) / h)) / h
                num += kw * (y[i] - y[j]) ** 2 / 2.0
                den += kw
        oracle = (num / 2.0) / (den / 2.0) if den > 0 else 0.0
        worst = max(worst, abs(est - oracle) / max(abs(oracle), 1e-300))
    ok = worst <= 1e-12
    report(11, "pairwise estimator equals brute-force oracle", ok,
           f"max relative gap = {worst:.3e} <= 1e-12 over 50 samples")


def test_criterion_12_chi_square_moment_decay():
    g = lb.moment_matched_distribution(3)  # q = 3, so p = 2 and the decay is theta^8
    thetas = np.array([0.05, 0.1, 0.2])
    values = np.array([lb.mixture_chi2(t, 1, g, 1.0, 60) for t in thetas])
    slope = float(np.polyfit(np.log(thetas), np.log(values), 1)[0])
    ok = 7.0 <= slope <= 9.0
    report(12, "chi-square mixture distance decay order", ok,
           f"log-log slope={slope:.3f} in [7, 9] (theory 8)")
