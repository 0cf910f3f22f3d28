"""Command-line front end: simulate | estimate | rate | lb-demo.

Exit codes: 0 success, 1 runtime/IO failure, 2 validation failure.  Every
subcommand that takes --seed is byte-reproducible across runs, and every
output embeds the merged effective configuration for provenance.  Floats
are serialized with Python's shortest round-trip repr, so reading a value
back recovers it bit for bit.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import datagen, harness, lb_tools, var_estimators, varfn_estimators
from .datagen import (
    Additive as dg_additive,
    CombSupport,
    Constant,
    Custom,
    DiagonalDD,
    GaussianNoise,
    GridGD,
    MomentMatchedNoise,
    Polynomial,
    ProductOfUnivariate,
    RademacherNoise,
    SampleSet,
    SmoothBump,
    UniformInterval,
)
from .errors import NprvarError, TrialFailure
from .kernels import (
    BandwidthPlan,
    bandwidth_homoscedastic,
    bandwidth_multivariate,
    bandwidth_varfn,
    box_kernel,
    truncated_gaussian_kernel,
)

ESTIMATORS = (
    "ustat",
    "ustat-mv",
    "diff",
    "additive-gd",
    "additive-mom",
    "projection",
    "lp-varfn",
    "nw-varfn",
    "qfunc",
)


class CliValidation(Exception):
    """Flag combination errors surfaced as exit code 2."""


# ---------------------------------------------------------------------------
# Mini-spec parsing
# ---------------------------------------------------------------------------


def _floats(text: str) -> list[float]:
    return [float(tok) for tok in text.split(",") if tok != ""]


def parse_design(text: str):
    kind, _, rest = text.partition(":")
    if kind == "uniform":
        a, b = _floats(rest)
        return UniformInterval(a, b)
    if kind == "comb":
        intervals = []
        for chunk in rest.split(";"):
            lo, hi = _floats(chunk)
            intervals.append((lo, hi))
        return CombSupport(tuple(intervals))
    if kind == "grid":
        return GridGD(int(rest))
    if kind == "diag":
        return DiagonalDD(int(rest))
    if kind == "product-uniform":
        return ProductOfUnivariate(tuple(UniformInterval(0.0, 1.0) for _ in range(int(rest))))
    raise CliValidation(f"unknown design spec {text!r}")


def parse_function(text: str):
    kind, _, rest = text.partition(":")
    if kind == "additive":
        # one component per design coordinate, joined with '+'
        parts = rest.split("+")
        return dg_additive(tuple(parse_function(p) for p in parts))
    if kind == "const":
        return Constant(float(rest))
    if kind == "poly":
        return Polynomial(tuple(_floats(rest)))
    if kind == "bump":
        vals = _floats(rest)
        if len(vals) == 3:
            return SmoothBump(*vals)
        if len(vals) == 4:
            return SmoothBump(vals[0], vals[1], vals[2], vals[3])
        raise CliValidation("bump spec needs center,width,height[,offset]")
    if kind == "custom":
        table = np.loadtxt(rest, delimiter=",")
        return Custom(table[:, 0], table[:, 1])
    raise CliValidation(f"unknown function spec {text!r}")


def parse_noise(text: str):
    kind, _, rest = text.partition(":")
    if kind == "gaussian":
        return GaussianNoise()
    if kind == "rademacher":
        return RademacherNoise()
    if kind == "matched":
        return MomentMatchedNoise(lb_tools.moment_matched_distribution(int(rest)))
    raise CliValidation(f"unknown noise spec {text!r}")


def parse_kernel(name: str):
    if name == "box":
        return box_kernel()
    if name == "trunc-gauss":
        return truncated_gaussian_kernel()
    raise CliValidation(f"unknown kernel {name!r}")


def _dump(payload: dict, out: str | None) -> None:
    text = json.dumps(payload, indent=2)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------


def cmd_simulate(args) -> int:
    design = parse_design(args.design)
    mean = parse_function(args.mean)
    variance = parse_function(args.var)
    noise = parse_noise(args.noise)
    if args.n < 1:
        raise CliValidation(f"--n must be positive, got {args.n}")
    sample = datagen.generate(design, mean, variance, noise, args.n, args.seed)
    try:
        csv_path, sidecar = sample.save(args.out)
    except OSError as exc:
        print(f"error: cannot write output: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {csv_path} and {sidecar} ({sample.n} rows, d={sample.dim})")
    return 0


# ---------------------------------------------------------------------------
# estimate
# ---------------------------------------------------------------------------


def _resolve_h(args, n: int) -> float:
    if args.h is not None:
        return args.h
    if args.alpha is None:
        raise CliValidation("provide --h or --alpha to derive the bandwidth")
    return bandwidth_homoscedastic(BandwidthPlan(args.alpha, None, args.c1), n)


def _resolve_h1_h2(args, n: int) -> tuple[float, float]:
    if args.h1 is not None and args.h2 is not None:
        return args.h1, args.h2
    if args.alpha is None or args.beta is None:
        raise CliValidation("provide --h1/--h2 or --alpha/--beta to derive bandwidths")
    return bandwidth_varfn(BandwidthPlan(args.alpha, args.beta, args.c1, args.c2), n)


def _estimate_record(args, sample: SampleSet, value, bandwidths, pairs) -> dict:
    return {
        "estimator": args.estimator,
        "value": value,
        "n": sample.n,
        "bandwidths": bandwidths,
        "pairs_in_bandwidth": pairs,
        "seed": sample.seed,
        "config": {
            k: v
            for k, v in vars(args).items()
            if k not in ("func", "out") and v is not None
        },
    }


def cmd_estimate(args) -> int:
    if args.estimator not in ESTIMATORS:
        raise CliValidation(f"unknown estimator {args.estimator!r}; choose from {ESTIMATORS}")
    sample = SampleSet.load(args.input)
    kernel = parse_kernel(args.kernel)
    n = sample.n

    if args.estimator == "ustat":
        h = _resolve_h(args, n)
        est = var_estimators.ustat_variance(sample, h, kernel)
        _dump(_estimate_record(args, sample, est.value, [h], est.pairs_in_bandwidth), args.out)
        return 0

    if args.estimator == "ustat-mv":
        if args.hs is not None:
            hs = _floats(args.hs)
        else:
            alphas = _floats(args.alphas) if args.alphas else [args.alpha] * sample.dim
            if any(a is None for a in alphas):
                raise CliValidation("provide --hs or --alphas/--alpha")
            hs = bandwidth_multivariate(alphas, n, args.c1).tolist()
        est = var_estimators.ustat_variance_multivariate(sample, hs, kernel)
        _dump(_estimate_record(args, sample, est.value, hs, est.pairs_in_bandwidth), args.out)
        return 0

    if args.estimator == "diff":
        value = var_estimators.diff_variance_equidistant(sample.response)
        _dump(_estimate_record(args, sample, value, None, None), args.out)
        return 0

    if args.estimator == "additive-gd":
        d = sample.dim
        m = round(n ** (1.0 / d))
        if m**d != n:
            raise CliValidation(f"additive-gd needs n = m^d, got n={n}, d={d}")
        value = var_estimators.additive_gd_variance(sample.response.reshape((m,) * d))
        _dump(_estimate_record(args, sample, value, None, None), args.out)
        return 0

    if args.estimator == "additive-mom":
        alphas = _floats(args.alphas) if args.alphas else [args.alpha] * sample.dim
        if any(a is None for a in alphas):
            raise CliValidation("additive-mom needs --alphas or --alpha")
        plans = [BandwidthPlan(a, None, args.c1) for a in alphas]
        value = var_estimators.additive_mom_variance(sample, plans, kernel)
        hs = [bandwidth_homoscedastic(p, n) for p in plans]
        _dump(_estimate_record(args, sample, value, hs, None), args.out)
        return 0

    if args.estimator == "projection":
        levels = [int(v) for v in args.levels.split(",")] if args.levels else None
        if levels is None or len(levels) != sample.dim:
            raise CliValidation("projection needs --levels with one entry per coordinate")
        cdfs = tuple(var_estimators.uniform_cdf(0.0, 1.0) for _ in range(sample.dim))
        cfg = var_estimators.ProjectionConfig(
            tuple(levels), cdfs, basis="tensor" if args.tensor else "additive"
        )
        value = var_estimators.projection_variance(sample, cfg)
        _dump(_estimate_record(args, sample, value, None, None), args.out)
        return 0

    if args.estimator in ("lp-varfn", "nw-varfn"):
        h1, h2 = _resolve_h1_h2(args, n)
        if args.x_grid is not None:
            lo, hi, count = args.x_grid.split(":")
            xs = np.linspace(float(lo), float(hi), int(count))
        elif args.x_star is not None:
            xs = None
        else:
            raise CliValidation(f"{args.estimator} needs --x-star or --x-grid")
        if args.estimator == "lp-varfn":
            if args.beta is None:
                raise CliValidation("lp-varfn needs --beta to set the polynomial degree")
            cfg = varfn_estimators.LocalPolyConfig(
                beta=args.beta, h1=h1, h2=h2, tau_n=args.tau, kernel=kernel
            )
            evaluate = lambda x: varfn_estimators.local_poly_varfn(sample, x, cfg)
            meta = {"h1": h1, "h2": h2, "ell": cfg.ell, "tau_n": cfg.tau_n if cfg.tau_n is not None else 1.0 / n}
        else:
            evaluate = lambda x: varfn_estimators.nw_varfn(sample, x, h1, h2, kernel)
            meta = {"h1": h1, "h2": h2}
        if xs is None:
            value = evaluate(args.x_star)
            _dump(_estimate_record(args, sample, value, [h1, h2], None), args.out)
            return 0
        if not args.out:
            raise CliValidation("--x-grid output needs --out for the curve CSV")
        curve_path = Path(args.out)
        with open(curve_path, "w") as fh:
            fh.write("x,v_hat\n")
            for x in xs:
                fh.write(f"{float(x)!r},{evaluate(float(x))!r}\n")
        meta_record = {"seed": sample.seed, **meta, "config": _estimate_record(args, sample, None, [h1, h2], None)["config"]}
        meta_path = curve_path.with_suffix(".json")
        meta_path.write_text(json.dumps(meta_record, indent=2) + "\n")
        print(f"wrote {curve_path} and {meta_path}")
        return 0

    # qfunc
    weight = parse_function(args.weight) if args.weight else Constant(1.0)
    if args.sigma2 is not None:
        sigma2 = args.sigma2
        bandwidths = None
    else:
        h = _resolve_h(args, n)
        sigma2 = var_estimators.ustat_variance(sample, h, kernel).value
        bandwidths = [h]
    value = var_estimators.quadratic_functional(sample, weight, sigma2)
    record = _estimate_record(args, sample, value, bandwidths, None)
    record["sigma2_hat"] = sigma2
    _dump(record, args.out)
    return 0


# ---------------------------------------------------------------------------
# rate
# ---------------------------------------------------------------------------

_RATE_KEYS = (
    "scenario",
    "n_grid",
    "trials_per_n",
    "alpha",
    "beta",
    "c1",
    "c2",
    "base_seed",
    "x_star",
    "dim",
    "integration_points",
    "fake_exponent",
)


def cmd_rate(args) -> int:
    merged: dict = {}
    if args.config:
        with open(args.config) as fh:
            file_cfg = json.load(fh)
        unknown = set(file_cfg) - set(_RATE_KEYS)
        if unknown:
            raise CliValidation(f"unknown config keys {sorted(unknown)}")
        merged.update(file_cfg)
    flag_map = {
        "scenario": args.scenario,
        "n_grid": _floats(args.n_grid) if args.n_grid else None,
        "trials_per_n": args.trials,
        "alpha": args.alpha,
        "beta": args.beta,
        "c1": args.c1,
        "c2": args.c2,
        "base_seed": args.seed,
        "x_star": args.x_star,
        "dim": args.dim,
        "fake_exponent": args.fake_exponent,
    }
    for key, val in flag_map.items():
        if val is not None:
            merged[key] = val
    if "scenario" not in merged or "n_grid" not in merged:
        raise CliValidation("rate needs --scenario and --n-grid (or a config file)")
    merged["n_grid"] = tuple(int(n) for n in merged["n_grid"])
    cfg = harness.ExperimentConfig(**merged)

    try:
        result = harness.run_rate_experiment(cfg)
    except TrialFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    out = Path(args.out) if args.out else Path(f"rate-{cfg.scenario.value}.json")
    json_path = out if out.suffix == ".json" else out.with_suffix(".json")
    harness.persist(result, json_path)
    harness.export_csv(result, json_path.with_suffix(".csv"))
    print(f"slope={result.slope!r} se={result.slope_se!r} theory={result.theoretical_exponent!r}")
    print(f"wrote {json_path} and {json_path.with_suffix('.csv')}")
    return 0


# ---------------------------------------------------------------------------
# lb-demo
# ---------------------------------------------------------------------------


def cmd_lbdemo(args) -> int:
    inst = datagen.hard_instance_homoscedastic(args.alpha, args.n, args.c, args.seed)
    moments = [
        {
            "order": j,
            "matched": lb_tools.dist_moment(inst.heights_dist, j),
            "normal": lb_tools.normal_moment(j),
        }
        for j in range(1, inst.q + 1)
    ]

    # Conditional covariance TV sandwich on one drawn design realization.
    n_tv = min(args.n, args.tv_max_points)
    rng = datagen.make_rng(args.seed ^ 1)
    x = datagen.sample_design(inst.design, n_tv, rng)[:, 0]
    cells = np.floor(x / (6.0 * inst.h_realized)).astype(int)
    same = cells[:, None] == cells[None, :]
    sigma1 = np.where(same, inst.theta_sq, 0.0) + np.eye(n_tv)
    sigma0 = (1.0 + inst.theta_sq) * np.eye(n_tv)
    lower, upper = lb_tools.gaussian_tv_bound(sigma0, sigma1)
    same_cell_pairs = int((np.count_nonzero(same) - n_tv) // 2)

    occ = lb_tools.multinomial_max_occupancy(args.n, inst.n_cells, args.occupancy_trials, args.seed ^ 2)
    lam2 = lb_tools.kolchin_lambda(args.n, inst.n_cells, 2)

    payload = {
        "config": {
            "alpha": args.alpha,
            "n": args.n,
            "c": args.c,
            "seed": args.seed,
            "occupancy_trials": args.occupancy_trials,
        },
        "moment_matched": {
            "q": inst.q,
            "atoms": inst.heights_dist.atoms.tolist(),
            "probs": inst.heights_dist.probs.tolist(),
            "range_bound": inst.heights_dist.range_bound,
            "moments": moments,
        },
        "hard_instance": {
            "h_requested": inst.h_requested,
            "h_realized": inst.h_realized,
            "n_cells": inst.n_cells,
            "theta_sq": inst.theta_sq,
            "sigma0_sq": inst.sigma0_sq,
            "sigma1_sq": inst.sigma1_sq,
            "support": [list(iv) for iv in inst.design.intervals],
            "support_length": inst.design.total_length,
        },
        "tv_sandwich": {
            "points": n_tv,
            "same_cell_pairs": same_cell_pairs,
            "lower": lower,
            "upper": upper,
        },
        "occupancy": {
            "balls": args.n,
            "bins": inst.n_cells,
            "lambda_2": lam2,
            "max_count_distribution": [
                {"param": k, "value": v} for k, v in sorted(occ.items())
            ],
        },
    }
    _dump(payload, args.out)
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nprvar",
        description="Variance estimation in nonparametric regression: simulation, "
        "estimation, rate experiments, and lower-bound demonstrations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="draw a sample set and write CSV + JSON sidecar")
    sim.add_argument("--design", required=True, help="uniform:a,b | comb:a,b;c,d | grid:d | diag:d | product-uniform:d")
    sim.add_argument(
        "--mean",
        required=True,
        help="const:v | poly:c0,c1,.. | bump:c,w,h[,off] | custom:file.csv | additive:spec+spec",
    )
    sim.add_argument("--var", required=True, help="variance spec, same grammar as --mean")
    sim.add_argument("--noise", default="gaussian", help="gaussian | rademacher | matched:q")
    sim.add_argument("--n", type=int, required=True)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out", required=True)
    sim.set_defaults(func=cmd_simulate)

    est = sub.add_parser("estimate", help="run an estimator on a sample CSV")
    est.add_argument("--input", required=True)
    est.add_argument("--estimator", required=True, help="|".join(ESTIMATORS))
    est.add_argument("--kernel", default="box", help="box | trunc-gauss")
    est.add_argument("--h", type=float, default=None)
    est.add_argument("--hs", default=None, help="comma list of per-coordinate bandwidths")
    est.add_argument("--h1", type=float, default=None)
    est.add_argument("--h2", type=float, default=None)
    est.add_argument("--alpha", type=float, default=None)
    est.add_argument("--alphas", default=None, help="comma list of per-coordinate alphas")
    est.add_argument("--beta", type=float, default=None)
    est.add_argument("--c1", type=float, default=1.0)
    est.add_argument("--c2", type=float, default=1.0)
    est.add_argument("--x-star", dest="x_star", type=float, default=None)
    est.add_argument("--x-grid", dest="x_grid", default=None, help="lo:hi:count curve grid")
    est.add_argument("--tau", type=float, default=None, help="ridge (default 1/n)")
    est.add_argument("--levels", default=None, help="comma list of projection levels J_k")
    est.add_argument("--tensor", action="store_true", help="tensor basis for projection")
    est.add_argument("--weight", default=None, help="weight spec for qfunc (default const:1)")
    est.add_argument("--sigma2", type=float, default=None, help="plug-in variance for qfunc")
    est.add_argument("--out", default=None)
    est.set_defaults(func=cmd_estimate)

    rate = sub.add_parser("rate", help="run a Monte Carlo rate experiment")
    rate.add_argument("--scenario", default=None, help="|".join(s.value for s in harness.Scenario))
    rate.add_argument("--n-grid", dest="n_grid", default=None, help="comma list, strictly increasing")
    rate.add_argument("--trials", type=int, default=None)
    rate.add_argument("--alpha", type=float, default=None)
    rate.add_argument("--beta", type=float, default=None)
    rate.add_argument("--c1", type=float, default=None)
    rate.add_argument("--c2", type=float, default=None)
    rate.add_argument("--seed", type=int, default=None, help="base seed")
    rate.add_argument("--x-star", dest="x_star", type=float, default=None)
    rate.add_argument("--dim", type=int, default=None)
    rate.add_argument("--fake-exponent", dest="fake_exponent", type=float, default=None)
    rate.add_argument("--config", default=None, help="JSON config; explicit flags win")
    rate.add_argument("--out", default=None, help="output path stem (JSON + CSV)")
    rate.set_defaults(func=cmd_rate)

    demo = sub.add_parser("lb-demo", help="emit the hard-instance pair and its diagnostics")
    demo.add_argument("--alpha", type=float, required=True, help="must lie in (0, 1/4)")
    demo.add_argument("--n", type=int, required=True)
    demo.add_argument("--c", type=float, default=1.0)
    demo.add_argument("--seed", type=int, default=0)
    demo.add_argument("--occupancy-trials", dest="occupancy_trials", type=int, default=20000)
    demo.add_argument("--tv-max-points", dest="tv_max_points", type=int, default=1000)
    demo.add_argument("--out", default=None)
    demo.set_defaults(func=cmd_lbdemo)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except TrialFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (CliValidation, NprvarError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
