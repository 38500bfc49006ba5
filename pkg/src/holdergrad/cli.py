"""Command line front end.

Subcommands:
  run <config.json>          execute one experiment, write its trace CSV
  suite [--jobs N]           run the full acceptance battery
  check <config.json>        sampled smoothness characterization checks only
  rates <trace.csv> --constants <json>   verify rate claims against a trace
  plot <trace.csv> --y <col> [--log]     render one trace column as SVG

Exit codes: 0 success, 1 invalid config, 2 domain violation or numeric
failure, 3 a verified claim / criterion / inequality check failed. The
HOLDERGRAD_SEED environment variable overrides config seeds.
"""

import argparse
import inspect
import json
import sys

from .errors import ClaimError, ConfigError, DomainViolationError, EstimationError, NumericFailureError
from .harness import ExperimentConfig, build_problem, emit_plot, read_trace_csv, run_experiment, suite, summary_table
from .problems import Region
from .rates import CLAIM_NAMES, RateConstants, feasible_claims, verify_bounds
from .trace import RunStatus


def _cmd_run(args):
    cfg = ExperimentConfig.load(args.config)
    trace, csv_path, report = run_experiment(cfg)
    print(f"trace: {csv_path} ({trace.n_rows} rows, status {trace.status.value if trace.status else 'none'})")
    if trace.status in (RunStatus.DOMAIN_VIOLATION, RunStatus.NUMERIC_FAILURE):
        return 2
    if report is not None:
        print(report.to_json())
        if not report.passed:
            return 3
    return 0


def _cmd_suite(args):
    summary = suite(args.output, jobs=args.jobs, only=args.only)
    print(summary_table(summary))
    return 0 if summary["passed"] else 3


def _cmd_check(args):
    from .smoothness import (
        characterization_modulus,
        check_holder_inequalities,
        check_smooth_characterizations,
        check_strong_smooth_bound,
        lemma_compatible_mu,
        sample_pair_set,
    )

    cfg = ExperimentConfig.load(args.config)
    built = build_problem(cfg.problem)
    obj, region = built
    if region is None:
        # non-builtin problems take the check region from an x0 ball spec
        if isinstance(cfg.x0, dict) and cfg.x0.get("kind") == "ball":
            region = Region(cfg.x0["center"], cfg.x0["radius"])
        else:
            raise ConfigError("check needs a builtin problem or an x0 ball spec to define the region")
    nu = obj.truth.nu if obj.truth and obj.truth.nu is not None else 1.0
    overrides = cfg.constants or {}
    pairs = sample_pair_set(region, args.pairs, seed=cfg.seed)
    L = overrides.get("L")
    if L is None:
        L = characterization_modulus(obj, region, nu, pairs=pairs)
    reports = {"holder": check_holder_inequalities(obj, region, nu, L, pairs=pairs)}
    if nu == 1.0:
        reports["smooth"] = check_smooth_characterizations(obj, region, L, pairs=pairs)
        mu = overrides.get("mu")
        if mu is None:
            mu = lemma_compatible_mu(obj, pairs, L)
        if mu > 0:
            reports["strong_smooth"] = check_strong_smooth_bound(obj, region, mu, L, pairs=pairs)
    out = {name: rep.to_dict() for name, rep in reports.items()}
    out["L"] = L
    print(json.dumps(out, indent=2))
    return 0 if all(rep.passed for rep in reports.values()) else 3


def _cmd_rates(args):
    trace = read_trace_csv(args.trace)
    try:
        with open(args.constants) as fh:
            inputs = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot load constants {args.constants}: {exc}") from exc
    if not isinstance(inputs, dict):
        raise ConfigError("constants file must hold a JSON object")
    allowed = [p for p in inspect.signature(RateConstants.from_inputs).parameters if p != "cls"]
    unknown = sorted(set(inputs) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown constants inputs: {unknown}; have {allowed}")
    constants = RateConstants.from_inputs(**inputs)
    claims = args.claims or feasible_claims(trace, constants)
    report = verify_bounds(trace, constants, claims)
    print(report.to_json())
    return 0 if report.passed else 3


def _cmd_plot(args):
    out = emit_plot(args.trace, args.y, log_scale=args.log, out_path=args.out)
    print(out)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="holdergrad", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute one experiment config")
    p_run.add_argument("config", help="experiment config JSON path")
    p_run.set_defaults(fn=_cmd_run)

    p_suite = sub.add_parser("suite", help="run the acceptance battery")
    p_suite.add_argument("--jobs", type=int, default=1, help="criteria to run concurrently")
    p_suite.add_argument("--output", default="suite_out", help="directory for traces and summary.json")
    p_suite.add_argument("--only", nargs="*", default=None, help="restrict to these criterion names")
    p_suite.set_defaults(fn=_cmd_suite)

    p_check = sub.add_parser("check", help="sampled smoothness characterization checks")
    p_check.add_argument("config", help="experiment config JSON path")
    p_check.add_argument("--pairs", type=int, default=1000, help="base pair count to sample")
    p_check.set_defaults(fn=_cmd_check)

    p_rates = sub.add_parser("rates", help="verify rate claims against a trace CSV")
    p_rates.add_argument("trace", help="trace CSV path")
    p_rates.add_argument("--constants", required=True, help="JSON file of rate-constant inputs")
    p_rates.add_argument("--claims", nargs="*", default=None, choices=list(CLAIM_NAMES),
                         help="claims to verify (default: every feasible claim)")
    p_rates.set_defaults(fn=_cmd_rates)

    p_plot = sub.add_parser("plot", help="render one trace column as an SVG line chart")
    p_plot.add_argument("trace", help="trace CSV path")
    p_plot.add_argument("--y", required=True, help="column to plot")
    p_plot.add_argument("--log", action="store_true", help="log-scale the y axis")
    p_plot.add_argument("--out", default=None, help="output SVG path")
    p_plot.set_defaults(fn=_cmd_plot)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, ClaimError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (DomainViolationError, NumericFailureError, EstimationError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
