"""Command-line front end: ``bernmat <subcommand> [flags]``.

Exit codes: 0 success, 2 invalid configuration, 3 a guaranteed identity or
inequality failed (InvariantViolation).
"""
from __future__ import annotations

import argparse
import math
import sys
import time
from fractions import Fraction

import numpy as np

from . import constants, distance, enumeration, halasz, sampling
from .errors import InvalidDistribution, InvariantViolation
from .linalg import SubspaceBasis
from .report import ExperimentConfig, ExperimentReport, Table, dumps, emit_csv
from .rng import RngSpec, parse_distribution

SUBCOMMANDS = ("enumerate", "mc-det", "mc-singular", "dist", "small-dist", "halasz", "lo",
               "esseen", "constants", "audit-exponent", "typicality")

EXIT_OK, EXIT_CONFIG, EXIT_INVARIANT = 0, 2, 3


class ConfigError(ValueError):
    pass


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n", type=int)
    common.add_argument("--d", type=int)
    common.add_argument("--samples", type=int, default=10000)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--mu", default="1/16", help="rational p/q")
    common.add_argument("--v", help="comma-separated coefficients")
    common.add_argument("--ones", type=int, help="use the all-ones vector of length K")
    common.add_argument("--dist", default="bernoulli",
                        help="bernoulli | lazy:p/q | discrete:v@p,... | bounded:K:v@p,...")
    common.add_argument("--grid", type=int, default=10000)
    common.add_argument("--l", type=int)
    common.add_argument("--a", default="1/10", help="distance floor scale (rational)")
    common.add_argument("--constant", type=float, default=2.0, help="Esseen constant C")
    common.add_argument("--interval", help="lo,hi for the small-ball interval")
    common.add_argument("--basis", help="rows separated by ';', entries by ','")
    common.add_argument("--method", choices=("full", "normalized"), default="normalized")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--out")
    common.add_argument("--workers", type=int, default=1)
    p = argparse.ArgumentParser(prog="bernmat", description="Random sign matrix experiments")
    sub = p.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        sub.add_parser(name, parents=[common])
    return p


def parse_config(argv) -> ExperimentConfig:
    ns = _parser().parse_args(argv)
    v = tuple(s.strip() for s in ns.v.split(",")) if ns.v else None
    interval = tuple(s.strip() for s in ns.interval.split(",")) if ns.interval else None
    if interval is not None and len(interval) != 2:
        raise ConfigError("--interval needs lo,hi")
    try:
        return ExperimentConfig(ns.subcommand, ns.n, ns.d, ns.samples, ns.seed, ns.mu, ns.dist, v,
                                ns.ones, ns.grid, ns.l, ns.a, ns.constant, interval, ns.basis,
                                ns.method, ns.format, ns.out, ns.workers)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


# --------------------------------------------------------------------------
# helpers
# --------------------------------------------------------------------------

def _need(value, flag: str):
    if value is None:
        raise ConfigError(f"{flag} is required")
    return value


def _fraction(text: str, flag: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"bad rational for {flag}: {text!r}") from exc


def _vector(cfg: ExperimentConfig, kind=int) -> list:
    if cfg.ones is not None:
        if cfg.ones < 1:
            raise ConfigError("--ones must be positive")
        return [kind(1)] * cfg.ones
    items = _need(cfg.v, "--v or --ones")
    try:
        if kind is int:
            return [int(x) for x in items]
        if kind is Fraction:
            return [Fraction(x) for x in items]
        return [float(x) for x in items]
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"bad vector entry in {','.join(items)}") from exc


def _cmp(c) -> dict:
    return c if isinstance(c, dict) else {
        "name": c.name, "formula": c.formula, "bound": c.bound, "observed": c.observed,
        "relation": c.relation, "satisfied": c.satisfied, "asserted": c.asserted}


def _comparison(name, formula, bound, observed, relation="<=", asserted=False) -> dict:
    return _cmp(sampling.BoundComparison.make(name, formula, bound, observed, relation, asserted))


# --------------------------------------------------------------------------
# subcommands: each returns (results, comparisons, table)
# --------------------------------------------------------------------------

def cmd_enumerate(cfg):
    n = _need(cfg.n, "--n")
    stats = (enumeration.enumerate_full if cfg.method == "full"
             else enumeration.enumerate_normalized)(n, workers=cfg.workers)
    stats.check()
    res = stats.to_json()
    res.update(second_moment=stats.second_moment, singular_probability=stats.singular_probability,
               n_factorial=math.factorial(n), pair_collision_count=str(stats.pair_collision_count),
               method=cfg.method)
    comps = [
        _comparison("second_moment", "E det^2 = n!", math.factorial(n),
                    float(stats.second_moment), "<=", asserted=True),
        _comparison("pair_collision_lower_bound", "P(singular) >= P(two rows/cols equal up to sign)",
                    stats.pair_collision_count / stats.total_weight,
                    float(stats.singular_probability), ">=", asserted=True),
        _comparison("conjectured_singular_mass", "n^2 * 2^(1-n)",
                    enumeration.conjectured_singular_mass(n), float(stats.singular_probability), ">="),
    ]
    table = Table(("abs_det", "count"), list(stats.det_abs_histogram.items()))
    return res, comps, table


def _rng(cfg) -> RngSpec:
    return RngSpec(cfg.seed)


def cmd_mc_det(cfg):
    n = _need(cfg.n, "--n")
    r = sampling.mc_det_log(n, cfg.samples, _rng(cfg), workers=cfg.workers)
    s = r.summary
    comps = [
        _comparison("det_floor_event_frequency", "|det| >= sqrt(n!) exp(-29 sqrt(n ln n))",
                    0.99, s["det_floor_event_frequency"], ">="),
        _comparison("chebyshev_event_frequency", "|det| <= omega(n) sqrt(n!), omega(n) = n",
                    1 - 1 / n ** 2, s["chebyshev_event_frequency"], ">="),
        _comparison("second_moment_ratio", "E det^2 / n! = 1 (3 stderr)",
                    1 + 3 * s["mean_det_sq_stderr"], s["mean_det_sq_over_factorial"], "<="),
    ]
    res = dict(s, exact_rechecks=r.exact_rechecks, n=n, samples=cfg.samples)
    table = Table(("sample_index", "log_abs_det", "is_singular"), list(r.rows()))
    return res, comps, table


def cmd_mc_singular(cfg):
    n = _need(cfg.n, "--n")
    dist = parse_distribution(cfg.dist)
    rep = sampling.mc_singular(n, cfg.samples, _rng(cfg), dist, workers=cfg.workers)
    res = rep.to_json()
    comps = [_cmp(c) for c in rep.bound_comparisons]
    res.pop("bound_comparisons")
    table = Table(("n", "samples", "count", "estimate", "stderr", "ci_lo", "ci_hi"),
                  [(n, rep.samples, rep.count, rep.estimate, rep.stderr, *rep.exact_ci)])
    return res, comps, table


def cmd_dist(cfg):
    n, d = _need(cfg.n, "--n"), _need(cfg.d, "--d")
    basis = _basis(cfg) if cfg.basis else None
    e = distance.dist_experiment(n, d, cfg.samples, _rng(cfg), basis=basis, workers=cfg.workers)
    res = {"n": n, "d": d, "samples": cfg.samples, "mean_sq": e.mean_sq,
           "mean_sq_stderr": e.mean_sq_stderr, "variant": e.table.variant,
           "basis_resamples": e.basis_resamples, "exact_resolutions": e.exact_resolutions,
           "tail": [{"t": r.t, "empirical": r.empirical, "bound": r.bound} for r in e.table.rows]}
    comps = [_comparison("mean_dist_sq", "E dist^2 = n - d (3 stderr)",
                         n - d + 3 * e.mean_sq_stderr, e.mean_sq)]
    for r, ok in zip(e.table.rows, e.table.within_3sigma()):
        event = "|dist - sqrt(n-d)| >= t+2" if e.table.variant == "deviation" else "dist >= 3+t"
        comps.append({"name": f"tail_t{r.t:g}", "formula": f"P({event}) <= 4 exp(-t^2/16)",
                      "bound": r.bound, "observed": r.empirical, "relation": "<=",
                      "satisfied": ok, "asserted": False})
    table = Table(("t", "empirical", "bound"), [(r.t, r.empirical, r.bound) for r in e.table.rows])
    return res, comps, table


def cmd_small_dist(cfg):
    n = _need(cfg.n, "--n")
    rep = distance.small_dist_frequency(n, cfg.samples, _rng(cfg), workers=cfg.workers)
    res = rep.to_json()
    comps = [_cmp(c) for c in res.pop("bound_comparisons")]
    table = Table(("n", "samples", "count", "estimate", "stderr", "ci_lo", "ci_hi"),
                  [(n, rep.samples, rep.count, rep.estimate, rep.stderr, *rep.exact_ci)])
    return res, comps, table


def cmd_halasz(cfg):
    v = _vector(cfg)
    if not any(v):
        raise ConfigError("zero vector has no hyperplane")
    mu = _fraction(cfg.mu, "--mu")
    n = cfg.n or len(v)
    ratio = halasz.halasz_ratio(v, n)
    p_mu = halasz.atom_prob_dp(v, mu)
    signed = halasz.integrate_signed(v)
    g = halasz.integrate_G(v, mu)
    f = halasz.integrate_F(v)
    g16 = halasz.integrate_G(v, halasz.MU_HALASZ)
    d1 = abs(signed.value - float(ratio.p1))
    dg = abs(g.value - float(p_mu))
    if d1 >= 1e-8 or dg >= 1e-8:
        raise InvariantViolation(f"Fourier identity off by {max(d1, dg):.3g}")
    res = {"v": v, "mu": mu, "p1": ratio.p1, "p16": ratio.p16, "p_mu": p_mu,
           "ratio": ratio.ratio, "ratio_exact": ratio.ratio_exact,
           "degenerate": ratio.degenerate, "loglog_threshold": ratio.loglog_threshold,
           "integrals": {"signed": signed.value, "G_mu": g.value, "F": f.value, "G_1_16": g16.value},
           "deltas": {"signed_vs_dp": d1, "G_vs_dp": dg,
                      "signed_refinement": signed.refinement_delta,
                      "G_refinement": g.refinement_delta, "F_refinement": f.refinement_delta},
           "grid_sizes": {"signed": signed.grid_size, "G_mu": g.grid_size, "F": f.grid_size}}
    comps = [
        _comparison("halasz_hard_ratio", "P(X in V) <= P(X^(1/16) in V)", 1.0, ratio.ratio,
                    asserted=True),
        _comparison("halasz_half", "ratio <= 1/2 + delta, delta = 1/4", 0.75, ratio.ratio),
        _comparison("F_vs_G_integral", "int F <= int G (mu = 1/16)", g16.value, f.value),
    ]
    return res, comps, None


def cmd_lo(cfg):
    a = _vector(cfg, Fraction)
    if cfg.interval:
        lo, hi = (_fraction(x, "--interval") for x in cfg.interval)
    else:
        lo, hi = Fraction(-1, 2), Fraction(1, 2)
    p = halasz.littlewood_offord(a, (lo, hi))
    sup, (slo, shi) = halasz.littlewood_offord_sup(a, hi - lo)
    mb = halasz.middle_binomial(len(a))
    res = {"a": [str(x) for x in a], "interval": [lo, hi], "probability": p,
           "sup_probability": sup, "sup_interval": [slo, shi], "middle_binomial": mb, "k": len(a)}
    comps = [_comparison("erdos_middle_binomial", "C(k, floor(k/2)) / 2^k", float(mb), float(sup),
                         asserted=True)]
    if sup > mb:
        raise InvariantViolation(f"small-ball mass {sup} exceeds the middle binomial {mb}")
    return res, comps, None


def cmd_esseen(cfg):
    a = _vector(cfg, float)
    e = halasz.esseen_bound(a, cfg.constant)
    res = {"a": a, "integral": e.integral.value, "grid_size": e.integral.grid_size,
           "refinement_delta": e.integral.refinement_delta, "constant": e.constant,
           "bound": e.bound}
    comps = []
    try:
        fa = [Fraction(x).limit_denominator(10 ** 6) for x in a]
        if all(abs(x) >= 1 for x in fa):
            sup, _ = halasz.littlewood_offord_sup(fa, 1)
            res["small_ball_sup"] = sup
            comps.append(_comparison("esseen", "sup_|I|=1 P(sum a_i eps_i in I) <= C int |phi|",
                                     e.bound, float(sup)))
    except (ValueError, MemoryError):
        pass
    return res, comps, None


def cmd_constants(cfg):
    res = constants.constants_summary()
    audit = constants.exponent_audit(cfg.grid)
    res["audit"] = audit
    comps = [
        _comparison("epsilon_printed", "|eps - 0.06191| <= 5e-6", 5e-6,
                    abs(res["epsilon"] - constants.PRINTED_EPSILON)),
        _comparison("one_minus_epsilon", "round(1 - eps, 3) = 0.939", 0.939,
                    round(res["one_minus_epsilon"], 3), ">="),
    ]
    return res, comps, None


def cmd_audit_exponent(cfg):
    audit = constants.exponent_audit(cfg.grid)
    control = constants.exponent_audit(cfg.grid, clamp=False)
    if not audit.passed:
        raise InvariantViolation(f"exponent audit failed: max {audit.max_exponent}")
    res = {"audit": audit, "negative_control": control}
    comps = [_comparison("exponent_chain", "E(d/n) <= -eps on (0, eps]", -audit.epsilon + 1e-12,
                         audit.max_exponent, asserted=True)]
    x = audit.epsilon * np.arange(1, cfg.grid + 1) / cfg.grid
    table = Table(("d_over_n", "exponent"), list(zip(x.tolist(),
                  constants.exponent_values(x, audit.epsilon).tolist())))
    return res, comps, table


def _basis(cfg) -> SubspaceBasis:
    try:
        rows = [[int(x) for x in r.split(",")] for r in cfg.basis.split(";") if r.strip()]
    except ValueError as exc:
        raise ConfigError("bad --basis") from exc
    return SubspaceBasis.of(rows)


def cmd_typicality(cfg):
    if cfg.basis:
        b = _basis(cfg)
        resamples = 0
    else:
        n = _need(cfg.n, "--n or --basis")
        rows, resamples = distance.sample_full_rank_rows(_rng(cfg), 0, n - 1, n)
        b = SubspaceBasis.of(rows.tolist(), n)
    l = cfg.l if cfg.l is not None else b.ambient_dim
    verdict = distance.typicality_check(b, l)
    res = dict(verdict.to_json(), n=b.ambient_dim, basis_resamples=resamples,
               degenerate=distance.degeneracy_check(verdict.normal, b.ambient_dim))
    return res, [], None


HANDLERS = {
    "enumerate": cmd_enumerate, "mc-det": cmd_mc_det, "mc-singular": cmd_mc_singular,
    "dist": cmd_dist, "small-dist": cmd_small_dist, "halasz": cmd_halasz, "lo": cmd_lo,
    "esseen": cmd_esseen, "constants": cmd_constants, "audit-exponent": cmd_audit_exponent,
    "typicality": cmd_typicality,
}


def execute(cfg: ExperimentConfig) -> ExperimentReport:
    t0 = time.perf_counter()
    results, comps, table = HANDLERS[cfg.subcommand](cfg)
    return ExperimentReport(cfg, results, comps, time.perf_counter() - t0, table=table)


def run(argv=None, stdout=None, stderr=None) -> int:
    """Parse, dispatch and write the report. Returns the exit code."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        cfg = parse_config(argv)
    except SystemExit as exc:  # argparse usage errors
        return EXIT_CONFIG if exc.code else EXIT_OK
    except ConfigError as exc:
        print(f"bernmat: {exc}", file=stderr)
        return EXIT_CONFIG
    try:
        report = execute(cfg)
    except InvariantViolation as exc:
        print(f"bernmat: invariant violated: {exc}", file=stderr)
        return EXIT_INVARIANT
    except (ConfigError, InvalidDistribution, ValueError, MemoryError) as exc:
        print(f"bernmat: {exc}", file=stderr)
        return EXIT_CONFIG
    if cfg.format == "csv":
        if report.table is None:
            print(f"bernmat: {cfg.subcommand} has no tabular output", file=stderr)
            return EXIT_CONFIG
        data = emit_csv(report)
        if cfg.out:
            with open(cfg.out, "wb") as f:
                f.write(data)
        else:
            stdout.write(data.decode())
    else:
        text = dumps(report)
        if cfg.out:
            with open(cfg.out, "w") as f:
                f.write(text)
        else:
            stdout.write(text)
    return EXIT_OK


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
