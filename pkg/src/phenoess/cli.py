"""Command-line entry point: ``phenoess {ess,sweep,fitness,climate,simulate}``.

Every command accepts ``--config scenario.json``; explicit flags win over the
file. Exit codes: 0 ok, 2 usage or invalid input, 3 numerical failure,
4 failed check (certification under ``--strict``, or ``--check-monotonicity``).
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from .climate import average_fitness_change, compare_profiles, dp_average_fitness
from .disturbance import Disturbance
from .errors import InvalidDomainError, InvalidRegimeError, PhenoEssError
from .ess_solver import CompetitionParams, UNBOUNDED, compute_a_M, ess_density, solve_ess
from .fitness import average_fitness, ess_certificate, max_average_fitness
from .numerics import Tolerances
from .oracle_mc import McConfig, best_response_iterate, ks_distance, mc_average_fitness, mc_phi
from .strategy import MixedStrategy
from .sweep import monotonicity_violations, sweep

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_CHECK = 0, 2, 3, 4
FMT = "{:.12g}"


class UsageError(Exception):
    pass


# -- value parsing --------------------------------------------------------------

def parse_a(text) -> float:
    """A number, or ``aM:P`` for the threshold a_M(P)."""
    if isinstance(text, (int, float)):
        return float(text)
    text = str(text).strip()
    if text.lower().startswith("am:"):
        a = compute_a_M(float(text[3:]))
        if a == UNBOUNDED:
            raise UsageError("aM:0 is unbounded")
        return a
    return float(text)


def parse_values(text, as_a=False):
    """``lo:hi:n`` (inclusive linspace), a comma list, a single value, or a JSON list."""
    conv = parse_a if as_a else float
    if isinstance(text, (list, tuple)):
        return [conv(v) for v in text]
    if isinstance(text, (int, float)):
        return [float(text)]
    text = str(text)
    parts = text.split(":")
    if len(parts) == 3 and parts[0].lower() != "am":
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
        return list(np.linspace(lo, hi, n))
    return [conv(t) for t in text.split(",") if t.strip()]


def parse_disturbance(spec) -> Disturbance:
    if isinstance(spec, dict):
        return Disturbance.from_json(spec)
    spec = str(spec)
    kind, _, rest = spec.partition(":")
    if kind == "uniform":
        try:
            lo, hi = (float(v) for v in rest.split(","))
        except ValueError:
            raise UsageError(f"bad uniform spec {spec!r}; expected uniform:LOW,HIGH")
        return Disturbance.uniform(lo, hi)
    if kind == "piecewise":
        if not rest.startswith("@"):
            raise UsageError("piecewise disturbances are read from a file: piecewise:@file.json")
        obj = json.loads(Path(rest[1:]).read_text())
        if isinstance(obj, list):
            return Disturbance.piecewise(obj)
        return Disturbance.from_json(obj)
    raise UsageError(f"unknown disturbance kind {kind!r}")


def load_strategy(path) -> MixedStrategy:
    return MixedStrategy.from_json(json.loads(Path(path).read_text()))


# -- config merging --------------------------------------------------------------

_CONFIG_KEYS = {"a", "p", "disturbance", "disturbance2", "grid", "seed", "probes", "strategy",
                "population", "replications", "iterations", "damping", "br_grid", "y", "h"}


def merge_config(args):
    """Fill flags left at None from ``--config``; flags always take precedence."""
    cfg = {}
    if getattr(args, "config", None):
        cfg = json.loads(Path(args.config).read_text())
    tol = cfg.get("tolerances", {})
    if args.abs_tol is None:
        args.abs_tol = float(tol.get("abs", 1e-10))
    if args.rel_tol is None:
        args.rel_tol = float(tol.get("rel", 1e-10))
    for key in _CONFIG_KEYS:
        if hasattr(args, key) and getattr(args, key) is None and key in cfg:
            setattr(args, key, cfg[key])
    return args


def _tol(args) -> Tolerances:
    return Tolerances(float(args.abs_tol), float(args.rel_tol))


def _params(args) -> CompetitionParams:
    if args.a is None or args.p is None:
        raise UsageError("--a and --p are required")
    return CompetitionParams(parse_a(args.a), float(args.p))


def _disturbance(args, key="disturbance", default="uniform:0,1") -> Disturbance:
    spec = getattr(args, key)
    return parse_disturbance(default if spec is None else spec)


def _out(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _json_value(v):
    if isinstance(v, float) and math.isinf(v):
        return "inf"
    if isinstance(v, dict):
        return {k: _json_value(x) for k, x in v.items()}
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    return v


def write_json(path: Path, obj):
    path.write_text(json.dumps(_json_value(obj), indent=2, sort_keys=True) + "\n")


def write_rows(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(v if isinstance(v, str) else FMT.format(v) for v in row) + "\n")


# -- commands --------------------------------------------------------------------

def cmd_ess(args) -> int:
    params, d, tol = _params(args), _disturbance(args), _tol(args)
    sol = solve_ess(params, d, int(args.grid or 2001), tol)
    out = _out(args)
    s = sol.strategy
    xs = s.xs
    if xs[0] > 0:
        xs = np.concatenate([[0.0], xs])
    rows = zip(xs, s.F_nu(xs), s.F_mu(xs), ess_density(sol, xs))
    write_rows(out / "ess.csv", ["x", "F_nu", "F_mu", "g"], rows)
    write_json(out / "summary.json", sol.summary())
    print(json.dumps(_json_value(sol.summary())))
    return EXIT_OK


def cmd_sweep(args) -> int:
    if args.a is None or args.p is None:
        raise UsageError("--a and --p grids are required")
    a_vals = parse_values(args.a, as_a=True)
    p_vals = parse_values(args.p)
    d, tol = _disturbance(args), _tol(args)
    rows = sweep(a_vals, p_vals, d, tol, jobs=args.jobs)
    out = _out(args)
    write_rows(out / "sweep.csv", ["a", "p", "a_M", "gamma", "x_c", "lambda", "regime"],
               [(r.a, r.p, "inf" if r.a_M == UNBOUNDED else r.a_M, r.gamma, r.x_c, r.lam, r.regime)
                for r in rows])
    print(f"{len(rows)} points written to {out / 'sweep.csv'}")
    if args.check_monotonicity:
        bad = monotonicity_violations(rows, args.monotone_tol)
        for line in bad:
            print(f"violation: {line}", file=sys.stderr)
        if bad:
            return EXIT_CHECK
        print("monotonicity and bounds: ok")
    return EXIT_OK


def cmd_fitness(args) -> int:
    if args.max_average:
        if args.a is None:
            raise UsageError("--max-average needs --a")
        print(FMT.format(max_average_fitness(parse_a(args.a))))
        return EXIT_OK
    params, d, tol = _params(args), _disturbance(args), _tol(args)
    if args.from_ess:
        strat = solve_ess(params, d, int(args.grid or 2001), tol).strategy
    elif args.strategy:
        strat = load_strategy(args.strategy)
    else:
        raise UsageError("give --from-ess or --strategy FILE")
    prof = ess_certificate(strat, params, d, int(args.probes or 2001), tol)
    out = _out(args)
    prof.write_csv(out / "profile.csv")
    cert = prof.certificate()
    cert["average_fitness"] = average_fitness(strat, params, d, tol)
    write_json(out / "certificate.json", cert)
    print(json.dumps(_json_value(cert)))
    if args.strict and not prof.certified:
        print("strategy is not certified as an ESS", file=sys.stderr)
        return EXIT_CHECK
    return EXIT_OK


def cmd_climate(args) -> int:
    params, tol = _params(args), _tol(args)
    d1 = _disturbance(args)
    if args.disturbance2 is None:
        raise UsageError("--disturbance2 is required")
    d2 = _disturbance(args, "disturbance2")
    grid = int(args.grid or 2001)
    if args.strategy:
        strat = load_strategy(args.strategy)
        lb1, lb2 = average_fitness(strat, params, d1, tol), average_fitness(strat, params, d2, tol)
    else:
        strat = solve_ess(params, d1, grid, tol).strategy
        lb1, lb2 = average_fitness_change(params, d1, d2, tol, grid)
    out = _out(args)
    pair = compare_profiles(strat, params, d1, d2, int(args.probes or 2001), tol=tol)
    pair.write_csv(out / "compare.csv")
    delta = {"lambda_bar_1": lb1, "lambda_bar_2": lb2, "delta": lb2 - lb1, "crossings": pair.crossings}
    write_json(out / "delta.json", delta)
    h = float(args.h or 1e-4)
    dp = {"a": params.a, "p": params.p, "h": h}
    try:
        dp["dp_lambda_bar"] = dp_average_fitness(strat, params.a, params.p, d1, h, tol)
    except InvalidDomainError as exc:
        dp["dp_lambda_bar"] = None
        dp["note"] = str(exc)
    write_json(out / "dp.json", dp)
    print(json.dumps(_json_value(delta)))
    if args.dp:
        print(json.dumps(_json_value(dp)))
    return EXIT_OK


def cmd_simulate(args) -> int:
    if args.seed is None:
        raise UsageError("--seed is required")
    params, d, tol = _params(args), _disturbance(args), _tol(args)
    grid = int(args.grid or 2001)
    ess = solve_ess(params, d, grid, tol)
    strat = load_strategy(args.strategy) if args.strategy else ess.strategy
    cfg = McConfig(int(args.population or 100_000), int(args.replications or 200), int(args.seed),
                   not args.no_atom_self_competition)
    out = _out(args)
    if args.y is not None:
        ys = np.asarray(parse_values(args.y), dtype=float)
    else:
        ys = np.linspace(0.0, d.t_high, 11)
    means, cis = mc_phi(ys, strat, params, d, cfg)
    avg, avg_ci = mc_average_fitness(strat, params, d, cfg)
    write_rows(out / "mc.csv", ["y", "mean", "ci"], zip(ys, means, cis))
    summary = {"average_fitness_mean": avg, "average_fitness_ci": avg_ci, "lambda": ess.lam,
               "within_3ci": bool(abs(avg - ess.lam) <= 3 * avg_ci)}
    if args.best_response:
        res = best_response_iterate(params, d, int(args.br_grid or 400), int(args.iterations or 3000),
                                    float(args.damping or 0.1), return_result=True)
        res.write_csv(out / "br.csv")
        res.write_history(out / "br_history.csv")
        summary["br_ks_to_ess"] = ks_distance(res.strategy, ess.strategy)
        summary["br_atom"] = res.strategy.atom
        summary["br_residual"] = res.residual
    write_json(out / "mc_summary.json", summary)
    print(json.dumps(_json_value(summary)))
    return EXIT_OK


# -- parser ------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="phenoess", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, with_ap=True):
        p.add_argument("--config", help="scenario JSON; flags override its values")
        p.add_argument("--out-dir", default=".", help="directory for output files")
        p.add_argument("--disturbance", help="uniform:LOW,HIGH or piecewise:@file.json")
        p.add_argument("--grid", type=int, help="ESS grid points (default 2001)")
        p.add_argument("--abs-tol", type=float, help="absolute tolerance (default 1e-10)")
        p.add_argument("--rel-tol", type=float, help="relative tolerance (default 1e-10)")
        if with_ap:
            p.add_argument("--a", help="competition strength, or aM:P for a_M(P)")
            p.add_argument("--p", help="disturbance survival probability")

    p = sub.add_parser("ess", help="solve the ESS and write ess.csv, summary.json")
    common(p)
    p.set_defaults(func=cmd_ess)

    p = sub.add_parser("sweep", help="tabulate a_M, gamma, x_c, lambda over an (a, p) grid")
    common(p)
    p.add_argument("--check-monotonicity", action="store_true")
    p.add_argument("--monotone-tol", type=float, default=1e-8)
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("fitness", help="fitness profile and ESS certificate")
    common(p)
    p.add_argument("--from-ess", action="store_true", help="use the solved ESS as the strategy")
    p.add_argument("--strategy", help="strategy JSON file")
    p.add_argument("--probes", type=int)
    p.add_argument("--max-average", action="store_true", help="print (1-e^-a)/a and exit")
    p.add_argument("--strict", action="store_true", help="exit 4 if not certified")
    p.set_defaults(func=cmd_fitness)

    p = sub.add_parser("climate", help="compare fitness under two disturbances")
    common(p)
    p.add_argument("--disturbance2", help="changed disturbance, same grammar as --disturbance")
    p.add_argument("--strategy", help="resident strategy JSON (default: ESS for --disturbance)")
    p.add_argument("--probes", type=int)
    p.add_argument("--dp", action="store_true", help="also print the p-derivative of the average fitness")
    p.add_argument("--h", type=float, help="finite-difference step in p (default 1e-4)")
    p.set_defaults(func=cmd_climate)

    p = sub.add_parser("simulate", help="Monte Carlo and best-response cross-checks")
    common(p)
    p.add_argument("--seed", type=int)
    p.add_argument("--strategy", help="strategy JSON (default: the solved ESS)")
    p.add_argument("--y", help="probe dates for mc.csv (list or lo:hi:n)")
    p.add_argument("--population", type=int)
    p.add_argument("--replications", type=int)
    p.add_argument("--no-atom-self-competition", action="store_true",
                   help="individuals at the same date do not count each other")
    p.add_argument("--best-response", action="store_true")
    p.add_argument("--br-grid", type=int)
    p.add_argument("--iterations", type=int)
    p.add_argument("--damping", type=float)
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        merge_config(args)
        return args.func(args)
    except (UsageError, InvalidDomainError, InvalidRegimeError, json.JSONDecodeError, OSError) as exc:
        print(f"phenoess: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PhenoEssError as exc:
        print(f"phenoess: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, TypeError) as exc:
        print(f"phenoess: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
