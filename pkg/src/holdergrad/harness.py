"""Experiment runner: JSON configs in, CSV traces and SVG plots out.

A config names a problem, a solver with its full parameter set, a start
point (explicit vector or seeded ball sample), a stop rule, and a seed.
Optionally it lists rate claims to verify against the finished trace; the
constants those claims need are derived from the problem's ground truth and
the solver parameters, with an optional `constants` override block.

Everything is deterministic for a fixed seed: same config, same bytes in the
trace CSV. The HOLDERGRAD_SEED environment variable overrides config seeds
for fuzzing runs.
"""

import csv
import json
import math
import os
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields

import numpy as np

from . import adasga as _ada
from . import sga as _sga
from .errors import ConfigError
from .problems import (
    Region,
    builtin_problems,
    make_log_sum_exp,
    make_poisson,
    make_power_norm,
    make_quadratic,
)
from .rates import RateConstants, adasga_eta, adasga_radius, feasible_claims, verify_bounds
from .sampling import env_seed_override, rng_from_seed, sample_ball
from .trace import Trace

CSV_HEADER = ["k", "f", "gap", "grad_norm", "alpha", "gamma", "theta", "L_k", "dist_opt", "lyap"]


def _check_keys(data, allowed, where):
    unknown = set(data) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown fields in {where}: {sorted(unknown)}")


@dataclass(frozen=True)
class ExperimentConfig:
    """Declarative experiment description; round-trips losslessly.

    Nested specs (problem, solver, x0, stop) are kept as the parsed JSON
    values and validated when the experiment is built, so to_dict() returns
    exactly what from_dict() consumed.
    """

    problem: dict
    solver: dict
    x0: object  # vector (list) or {"kind": "ball", ...} / {"kind": "region"}
    seed: int
    stop: dict | None = None
    output_dir: str = "."
    name: str | None = None
    claims: list | None = None
    eps: float | None = None
    constants: dict | None = None

    @classmethod
    def from_dict(cls, data):
        _check_keys(data, [f.name for f in fields(cls)], "experiment config")
        for key in ("problem", "solver", "x0", "seed"):
            if key not in data:
                raise ConfigError(f"experiment config is missing {key!r}")
        if not isinstance(data["seed"], int):
            raise ConfigError(f"seed must be an integer, got {data['seed']!r}")
        return cls(**data)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    @classmethod
    def load(cls, path):
        try:
            with open(path) as fh:
                return cls.from_json(fh.read())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot load config {path}: {exc}") from exc

    def to_dict(self):
        out = {"problem": self.problem, "solver": self.solver, "x0": self.x0, "seed": self.seed}
        if self.stop is not None:
            out["stop"] = self.stop
        if self.output_dir != ".":
            out["output_dir"] = self.output_dir
        for key in ("name", "claims", "eps", "constants"):
            val = getattr(self, key)
            if val is not None:
                out[key] = val
        return out

    def to_json(self, indent=2):
        return json.dumps(self.to_dict(), indent=indent)

    def run_name(self):
        return self.name or f"{self.problem.get('kind', 'problem')}_{self.solver.get('kind', 'solver')}"


def build_problem(spec):
    """(objective, region or None) from a problem spec dict."""
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError(f"problem spec must be a dict with a 'kind', got {spec!r}")
    kind = spec["kind"]
    if kind == "builtin":
        _check_keys(spec, ("kind", "name"), "builtin problem spec")
        problems = builtin_problems()
        name = spec.get("name")
        if name not in problems:
            raise ConfigError(f"unknown builtin problem {name!r}; have {sorted(problems)}")
        return problems[name]
    if kind == "quadratic":
        _check_keys(spec, ("kind", "A", "b"), "quadratic problem spec")
        return make_quadratic(spec["A"], spec["b"]), None
    if kind == "power_norm":
        _check_keys(spec, ("kind", "nu", "dim"), "power_norm problem spec")
        return make_power_norm(spec["nu"], spec["dim"]), None
    if kind == "log_sum_exp":
        _check_keys(spec, ("kind", "A", "b", "x_star"), "log_sum_exp problem spec")
        return make_log_sum_exp(spec["A"], spec["b"], x_star=spec.get("x_star")), None
    if kind == "poisson":
        _check_keys(spec, ("kind", "A", "b"), "poisson problem spec")
        return make_poisson(spec["A"], spec["b"]), None
    raise ConfigError(f"unknown problem kind {kind!r}")


def _build_step_policy(spec):
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError(f"step policy spec must be a dict with a 'kind', got {spec!r}")
    kind = spec["kind"]
    if kind == "constant":
        _check_keys(spec, ("kind", "alpha"), "constant step spec")
        return _sga.Constant(spec["alpha"])
    if kind == "interval":
        _check_keys(spec, ("kind", "alpha_bar", "mode"), "interval step spec")
        try:
            mode = _sga.StepMode(spec.get("mode", "function"))
        except ValueError:
            raise ConfigError(f"unknown step mode {spec.get('mode')!r}") from None
        return _sga.IntervalConstant(spec["alpha_bar"], mode)
    if kind == "diminishing":
        _check_keys(spec, ("kind", "schedule", "alpha0", "ratio"), "diminishing step spec")
        return _sga.Diminishing(spec["schedule"], spec.get("alpha0"), spec.get("ratio"))
    raise ConfigError(f"unknown step policy kind {kind!r}")


def _build_gamma_policy(spec):
    if spec is None:
        return _ada.ConstantGamma()
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError(f"gamma policy spec must be a dict with a 'kind', got {spec!r}")
    kind = spec["kind"]
    if kind == "constant":
        _check_keys(spec, ("kind", "value"), "constant gamma spec")
        return _ada.ConstantGamma(spec.get("value", 1.0))
    if kind == "bb1":
        _check_keys(spec, ("kind",), "bb1 gamma spec")
        return _ada.BB1()
    if kind == "bb2":
        _check_keys(spec, ("kind",), "bb2 gamma spec")
        return _ada.BB2()
    raise ConfigError(f"unknown gamma policy kind {kind!r}")


def build_stop(spec):
    if spec is None:
        return _sga.StopRule()
    _check_keys(spec, ("grad_tol", "max_iter", "f_tol"), "stop rule")
    return _sga.StopRule(
        grad_tol=spec.get("grad_tol", 1e-8),
        max_iter=spec.get("max_iter", 100_000),
        f_tol=spec.get("f_tol"),
    )


def build_solver(spec, stop, seed):
    """("sga", SgaConfig) or ("adasga", AdaConfig) from a solver spec dict."""
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError(f"solver spec must be a dict with a 'kind', got {spec!r}")
    kind = spec["kind"]
    if kind == "sga":
        _check_keys(spec, ("kind", "nu", "L", "policy", "snapshot_every"), "sga solver spec")
        for key in ("nu", "L", "policy"):
            if key not in spec:
                raise ConfigError(f"sga solver spec is missing {key!r}")
        cfg = _sga.SgaConfig(
            nu=spec["nu"],
            L=spec["L"],
            policy=_build_step_policy(spec["policy"]),
            stop=stop,
            snapshot_every=spec.get("snapshot_every"),
        )
        return "sga", cfg
    if kind == "adasga":
        _check_keys(
            spec,
            ("kind", "omega", "tau", "gamma", "gamma_min", "gamma_max", "alpha0", "theta0", "snapshot_every"),
            "adasga solver spec",
        )
        cfg = _ada.AdaConfig(
            omega=spec.get("omega", _ada.OMEGA_MAX),
            tau=spec.get("tau", 1.2),
            gamma=_build_gamma_policy(spec.get("gamma")),
            gamma_min=spec.get("gamma_min", 1e-6),
            gamma_max=spec.get("gamma_max", 1e6),
            alpha0=spec.get("alpha0", "auto"),
            theta0=spec.get("theta0", 1.0),
            stop=stop,
            seed=seed,
            snapshot_every=spec.get("snapshot_every"),
        )
        return "adasga", cfg
    raise ConfigError(f"unknown solver kind {kind!r}")


def resolve_x0(spec, obj, region, rng):
    if isinstance(spec, (list, tuple)):
        x0 = np.asarray(spec, dtype=float)
        if x0.shape != (obj.dim,):
            raise ConfigError(f"x0 must have {obj.dim} entries, got shape {x0.shape}")
        return x0
    if isinstance(spec, dict):
        kind = spec.get("kind")
        if kind == "ball":
            _check_keys(spec, ("kind", "center", "radius"), "x0 ball spec")
            return sample_ball(spec["center"], spec["radius"], 1, rng)[0]
        if kind == "region":
            _check_keys(spec, ("kind",), "x0 region spec")
            if region is None:
                raise ConfigError("x0 kind 'region' needs a builtin problem with a region")
            return sample_ball(region.center, region.radius, 1, rng)[0]
        raise ConfigError(f"unknown x0 kind {kind!r}")
    raise ConfigError(f"x0 must be a vector or a sampling spec, got {spec!r}")


def _format_cell(value):
    if value is None:
        return ""
    v = float(value)
    if math.isnan(v):
        return ""
    return repr(v)


def write_trace_csv(trace, path):
    """Write the trace in the fixed 10-column schema; returns the path.

    Absent quantities (columns the run did not record, and per-row undefined
    entries like L_k at k = 0) become empty fields. Floats are written with
    repr, the shortest decimal that round-trips.
    """
    cols = {
        "f": trace.f,
        "gap": trace.gap,
        "grad_norm": trace.grad_norm,
        "alpha": trace.alpha,
        "gamma": trace.gamma,
        "theta": trace.theta,
        "L_k": trace.lip,
        "dist_opt": trace.dist_opt,
        "lyap": trace.lyap,
    }
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for k in range(trace.n_rows):
            row = [str(k)]
            for name in CSV_HEADER[1:]:
                col = cols[name]
                row.append(_format_cell(col[k] if col is not None else None))
            writer.writerow(row)
    return path


def read_trace_csv(path):
    """Parse a trace CSV back into a Trace (run metadata is not recoverable).

    The header must match the schema exactly. Empty fields become nan;
    columns that are empty in every row come back as None.
    """
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            rows = list(reader)
    except OSError as exc:
        raise ConfigError(f"cannot read trace {path}: {exc}") from exc
    if not rows or rows[0] != CSV_HEADER:
        raise ConfigError(f"trace {path} does not have the expected header {CSV_HEADER}")
    body = rows[1:]
    data = {name: [] for name in CSV_HEADER[1:]}
    for i, row in enumerate(body):
        if len(row) != len(CSV_HEADER):
            raise ConfigError(f"trace {path} row {i} has {len(row)} fields, expected {len(CSV_HEADER)}")
        try:
            k = int(row[0])
        except ValueError:
            raise ConfigError(f"trace {path} row {i} has non-integer k {row[0]!r}") from None
        if k != i:
            raise ConfigError(f"trace {path} row {i} has k={k}; the k column must run 0..N")
        for name, cell in zip(CSV_HEADER[1:], row[1:]):
            try:
                data[name].append(math.nan if cell == "" else float(cell))
            except ValueError:
                raise ConfigError(f"trace {path} row {i} column {name} has non-float {cell!r}") from None
    if not body:
        raise ConfigError(f"trace {path} has no data rows")

    def col(name, required=False):
        arr = np.array(data[name])
        if not required and np.all(np.isnan(arr)):
            return None
        return arr

    return Trace(
        f=col("f", required=True),
        grad_norm=col("grad_norm", required=True),
        alpha=col("alpha", required=True),
        gamma=col("gamma"),
        theta=col("theta"),
        lip=col("L_k"),
        gap=col("gap"),
        dist_opt=col("dist_opt"),
        lyap=col("lyap"),
        meta={"source": str(path)},
    )


def derive_constants(obj, solver_kind, solver_cfg, trace, cfg):
    """RateConstants for the run, from ground truth plus solver parameters.

    Explicit entries in cfg.constants override the derived inputs.
    """
    truth = obj.truth
    inputs = {
        "mu": getattr(truth, "mu", None) if truth else None,
        "L": getattr(truth, "holder_L", None) if truth else None,
        "nu": getattr(truth, "nu", None) if truth else None,
        "theta_KL": getattr(truth, "kl_theta", None) if truth else None,
        "rho_KL": getattr(truth, "kl_rho", None) if truth else None,
        "eps": cfg.eps,
    }
    if inputs["mu"] is not None and inputs["mu"] == 0.0:
        inputs["mu"] = None  # not strongly convex; no q0/q1
    if solver_kind == "sga":
        policy = solver_cfg.policy
        if isinstance(policy, _sga.Constant):
            inputs["alpha_bar"] = policy.alpha
        elif isinstance(policy, _sga.IntervalConstant):
            inputs["alpha_bar"] = policy.alpha_bar
    else:
        inputs["omega"] = solver_cfg.omega
        inputs["tau"] = solver_cfg.tau if solver_cfg.tau > 1.0 else None
        if trace.n_rows and trace.gamma is not None:
            inputs["alpha0gamma0"] = float(trace.alpha[0] * trace.gamma[0])
        if (
            truth is not None
            and truth.x_star is not None
            and trace.dist_opt is not None
            and trace.gap is not None
            and trace.n_rows
        ):
            eta = adasga_eta(
                dist0=float(trace.dist_opt[0]),
                alpha0=float(trace.alpha[0]),
                gamma0=float(trace.gamma[0]),
                theta0=float(trace.theta[0]),
                grad0_norm=float(trace.grad_norm[0]),
                f0_gap=max(float(trace.gap[0]), 0.0),
            )
            inputs["eta"] = eta
            inputs["R"] = adasga_radius(eta, float(trace.dist_opt[0]), 0.0)
    if cfg.constants:
        _check_keys(cfg.constants, list(inputs) + ["alpha_bar", "omega", "tau", "alpha0gamma0", "R", "eta"], "constants override")
        inputs.update(cfg.constants)
    return RateConstants.from_inputs(**inputs)


def run_experiment(cfg, csv_path=None):
    """Execute one configured run. Returns (trace, csv path, report or None).

    The trace CSV lands in cfg.output_dir (created if needed). When the
    config lists claims, they are verified against the trace and the
    RateReport is returned; "auto" claims means every claim the derived
    constants and trace columns support.
    """
    seed = env_seed_override(cfg.seed)
    rng = rng_from_seed(seed)
    obj, region = build_problem(cfg.problem)
    stop = build_stop(cfg.stop)
    solver_kind, solver_cfg = build_solver(cfg.solver, stop, seed)
    x0 = resolve_x0(cfg.x0, obj, region, rng)
    if solver_kind == "sga":
        trace = _sga.run_sga(obj, x0, solver_cfg)
    else:
        trace = _ada.run_adasga(obj, x0, solver_cfg)

    if csv_path is None:
        os.makedirs(cfg.output_dir, exist_ok=True)
        csv_path = os.path.join(cfg.output_dir, cfg.run_name() + ".csv")
    write_trace_csv(trace, csv_path)

    report = None
    if cfg.claims:
        constants = derive_constants(obj, solver_kind, solver_cfg, trace, cfg)
        claims = cfg.claims
        if claims == "auto":
            claims = feasible_claims(trace, constants)
        report = verify_bounds(trace, constants, claims)
    return trace, csv_path, report


def determinism_experiments():
    """The canonical experiment set reproduced byte-for-byte by the suite."""
    return [
        ExperimentConfig(
            problem={"kind": "quadratic", "A": [[1.0, 0.0], [0.0, 10.0]], "b": [0.0, 0.0]},
            solver={
                "kind": "sga",
                "nu": 1.0,
                "L": 10.0,
                "policy": {"kind": "constant", "alpha": 0.099},
            },
            x0=[1.3, -0.7],
            stop={"grad_tol": 1e-12, "max_iter": 300},
            seed=11,
            name="quad_sga_strong",
            claims=["q_linear_f", "q_linear_x", "k0_count", "mn_count_f", "mn_count_x"],
            eps=1e-4,
        ),
        ExperimentConfig(
            problem={"kind": "power_norm", "nu": 0.5, "dim": 2},
            solver={
                "kind": "sga",
                "nu": 0.5,
                "L": 2.0**0.5,
                "policy": {"kind": "constant", "alpha": 0.5},
            },
            x0=[1.0, 1.0],
            stop={"grad_tol": 0.0, "max_iter": 40},
            seed=12,
            name="power_half_closed_form",
        ),
        ExperimentConfig(
            problem={"kind": "builtin", "name": "quadratic_well"},
            solver={"kind": "adasga", "tau": 1.2, "snapshot_every": 1},
            x0={"kind": "region"},
            stop={"grad_tol": 1e-9, "max_iter": 500},
            seed=13,
            name="quad_adasga_lyapunov",
            claims=["lyapunov_monotone", "lyapunov_hat_contraction", "step_floor", "step_ceiling"],
        ),
        ExperimentConfig(
            problem={"kind": "builtin", "name": "poisson_unit"},
            solver={"kind": "adasga", "gamma": {"kind": "bb2"}, "snapshot_every": 1},
            x0={"kind": "ball", "center": [1.0], "radius": 0.5},
            stop={"grad_tol": 1e-9, "max_iter": 500},
            seed=14,
            name="poisson_adasga_bb2",
        ),
        ExperimentConfig(
            problem={"kind": "builtin", "name": "softmax_pair"},
            solver={"kind": "adasga", "gamma": {"kind": "bb1"}, "snapshot_every": 1},
            x0={"kind": "region"},
            stop={"grad_tol": 1e-9, "max_iter": 500},
            seed=15,
            name="softmax_adasga_bb1",
            claims=["lyapunov_monotone"],
        ),
    ]


def suite(output_dir, jobs=1, inject=None, only=None):
    """Run the acceptance criteria; write summary.json; return the summary.

    inject is a test hook: a dict of wrong values threaded into specific
    criteria (negative controls). only restricts to a subset of criterion
    names. Criteria run concurrently up to `jobs`; each is independent and
    deterministic, so ordering never affects results.
    """
    from .acceptance import CRITERIA, run_criterion  # local: acceptance imports harness

    os.makedirs(output_dir, exist_ok=True)
    names = list(CRITERIA)
    if only is not None:
        unknown = [n for n in only if n not in CRITERIA]
        if unknown:
            raise ConfigError(f"unknown criteria: {unknown}; have {names}")
        names = [n for n in names if n in set(only)]
    results = []
    lock = threading.Lock()

    def _one(name):
        res = run_criterion(name, output_dir, inject=inject)
        with lock:
            results.append(res)
        return res

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            list(pool.map(_one, names))
    else:
        for name in names:
            _one(name)
    results.sort(key=lambda r: names.index(r.name))
    summary = {
        "criteria": [
            {"name": r.name, "passed": r.passed, "seconds": round(r.seconds, 3), "detail": r.detail}
            for r in results
        ],
        "passed": all(r.passed for r in results),
    }
    with open(os.path.join(output_dir, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    return summary


def summary_table(summary):
    """Human-readable pass/fail table for a suite summary."""
    lines = []
    width = max((len(c["name"]) for c in summary["criteria"]), default=4)
    for crit in summary["criteria"]:
        mark = "PASS" if crit["passed"] else "FAIL"
        lines.append(f"{crit['name']:<{width}}  {mark}  {crit['seconds']:>7.3f}s  {crit['detail']}")
    overall = "PASS" if summary["passed"] else "FAIL"
    lines.append(f"{'overall':<{width}}  {overall}")
    return "\n".join(lines)


def emit_plot(trace_csv, y, log_scale=False, out_path=None):
    """Single-series line chart of a trace column; returns the SVG path.

    Empty cells are skipped; on a log scale nonpositive values are clamped
    out of the series as well. A column with nothing left to plot is an
    error.
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    if y not in CSV_HEADER[1:]:
        raise ConfigError(f"unknown column {y!r}; have {CSV_HEADER[1:]}")
    trace = read_trace_csv(trace_csv)
    col_by_name = {
        "f": trace.f,
        "gap": trace.gap,
        "grad_norm": trace.grad_norm,
        "alpha": trace.alpha,
        "gamma": trace.gamma,
        "theta": trace.theta,
        "L_k": trace.lip,
        "dist_opt": trace.dist_opt,
        "lyap": trace.lyap,
    }
    col = col_by_name[y]
    if col is None:
        raise ConfigError(f"column {y!r} is empty in {trace_csv}")
    ks = np.arange(len(col))
    keep = np.isfinite(col)
    if log_scale:
        keep &= col > 0.0
    if not np.any(keep):
        raise ConfigError(f"column {y!r} has no plottable values in {trace_csv}")
    if out_path is None:
        base, _ = os.path.splitext(str(trace_csv))
        out_path = f"{base}.{y}.svg"
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    try:
        ax.plot(ks[keep], col[keep])
        if log_scale:
            ax.set_yscale("log")
        ax.set_xlabel("k")
        ax.set_ylabel(y)
        fig.savefig(out_path, format="svg", metadata={"Date": None})
    finally:
        plt.close(fig)
    return out_path
