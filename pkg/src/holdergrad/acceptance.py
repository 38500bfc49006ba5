"""The acceptance battery: twelve self-checking criteria over the toolkit.

Each criterion is a function that runs real solver traces or sampled
inequality checks and either returns a one-line detail string (pass) or
raises AssertionError with the measured numbers (fail). ``run_criterion``
wraps one of them with timing and a runtime budget; ``suite`` in the harness
module runs them all and writes summary.json.

The ``inject`` argument threads deliberately wrong constants into a
criterion so tests can prove the battery actually fails when it should.
"""

import dataclasses
import os
import time

import numpy as np

from .adasga import BB1, BB2, AdaConfig, ConstantGamma, run_adasga
from .errors import ConfigError
from .harness import ExperimentConfig, determinism_experiments, run_experiment
from .problems import Region, builtin_problems, finite_diff_gradient, make_power_norm, make_quadratic
from .rates import RateConstants, fit_linear_rate, noise_floor, verify_bounds
from .sampling import rng_from_seed, sample_ball
from .sga import Constant, SgaConfig, StepMode, StopRule, default_alpha, run_sga
from .smoothness import (
    characterization_modulus,
    check_holder_inequalities,
    check_smooth_characterizations,
    check_strong_smooth_bound,
    estimate_holder_modulus,
    estimate_kl,
    estimate_strong_convexity,
    lemma_compatible_mu,
    sample_pair_set,
)
from .trace import RunStatus


@dataclasses.dataclass(frozen=True)
class CriterionResult:
    name: str
    passed: bool
    detail: str
    seconds: float


def _two_testbeds():
    """The quadratic / power-norm pair used by several criteria."""
    quad = make_quadratic(np.diag([1.0, 10.0]), np.zeros(2))
    power = make_power_norm(0.5, 2)
    return [
        (quad, Region(np.zeros(2), 2.0), 1.0, 10.0),
        (power, Region(np.zeros(2), 1.0), 0.5, power.truth.holder_L),
    ]


def c01_power_closed_form(workdir, inject):
    """Half-power objective with alpha = 0.5 contracts iterates by exactly 1/2."""
    obj = make_power_norm(0.5, 2)
    cfg = SgaConfig(
        nu=0.5,
        L=obj.truth.holder_L,
        policy=Constant(0.5),
        stop=StopRule(grad_tol=0.0, max_iter=40),
        snapshot_every=1,
    )
    x0 = np.ones(2)
    trace = run_sga(obj, x0, cfg)
    assert trace.n_rows == 41, f"expected 41 rows, got {trace.n_rows}"
    worst_x = 0.0
    for k in range(trace.n_rows):
        ref = 0.5**k * x0
        xk = trace.snapshot_at(k)
        worst_x = max(worst_x, float(np.linalg.norm(xk - ref)) / float(np.linalg.norm(ref)))
    assert worst_x <= 1e-12, f"iterate deviation {worst_x:.3e} > 1e-12 from (1/2)^k x0"
    ratios = np.asarray(trace.gap[1:]) / np.asarray(trace.gap[:-1])
    worst_r = float(np.max(np.abs(ratios - 0.5**1.5)))
    assert worst_r <= 1e-10, f"gap ratio deviates {worst_r:.3e} > 1e-10 from 0.5^1.5"
    return f"40 steps: iterate err {worst_x:.1e}, gap-ratio err {worst_r:.1e}"


def c02_sufficient_decrease(workdir, inject):
    """Per-step decrease inequality holds on every iteration of every run."""
    checked = 0
    worst = np.inf
    for idx, (obj, region, nu, L) in enumerate(_two_testbeds()):
        alpha = default_alpha(nu, L, StepMode.FUNCTION_OPTIMAL)
        coef = alpha - (L / (1.0 + nu)) * alpha ** (1.0 + nu)
        rng = rng_from_seed(20 + idx)
        for x0 in sample_ball(region.center, region.radius, 10, rng):
            cfg = SgaConfig(nu=nu, L=L, policy=Constant(alpha), stop=StopRule(grad_tol=0.0, max_iter=1000))
            trace = run_sga(obj, x0, cfg)
            f = np.asarray(trace.f)
            gn = np.asarray(trace.grad_norm)
            slack = f[:-1] - coef * gn[:-1] ** ((1.0 + nu) / nu) - f[1:]
            tol = -1e-10 * (1.0 + np.abs(f[:-1]))
            bad = int(np.count_nonzero(slack < tol))
            assert bad == 0, f"{obj.name}: {bad} decrease violations, worst slack {float(np.min(slack)):.3e}"
            checked += slack.size
            worst = min(worst, float(np.min(slack - tol)))
    return f"{checked} steps over 20 runs, min slack margin {worst:.2e}"


def c03_distance_monotone(workdir, inject):
    """Distance-optimal step never increases the distance to the minimizer."""
    checked = 0
    worst = np.inf
    for idx, (obj, region, nu, L) in enumerate(_two_testbeds()):
        alpha = default_alpha(nu, L, StepMode.DISTANCE_OPTIMAL)
        rng = rng_from_seed(30 + idx)
        for x0 in sample_ball(region.center, region.radius, 10, rng):
            cfg = SgaConfig(nu=nu, L=L, policy=Constant(alpha), stop=StopRule(grad_tol=0.0, max_iter=1000))
            trace = run_sga(obj, x0, cfg)
            dist = np.asarray(trace.dist_opt)
            drop = dist[:-1] - dist[1:]
            bad = int(np.count_nonzero(drop < -1e-12))
            assert bad == 0, f"{obj.name}: distance increased at {bad} steps, worst {float(np.min(drop)):.3e}"
            checked += drop.size
            worst = min(worst, float(np.min(drop)))
    return f"{checked} steps over 20 runs, min per-step drop {worst:.2e}"


def c04_grad_complexity(workdir, inject):
    """Iterations to reach the gradient target stay below the K0 bound."""
    cfg = ExperimentConfig(
        problem={"kind": "quadratic", "A": [[1.0, 0.0], [0.0, 10.0]], "b": [0.0, 0.0]},
        solver={"kind": "sga", "nu": 1.0, "L": 10.0, "policy": {"kind": "constant", "alpha": 0.099}},
        x0=[1.0, 1.0],
        stop={"grad_tol": 1e-4, "max_iter": 100_000},
        seed=4,
        output_dir=workdir,
        name="c04_grad_complexity",
        claims=["k0_count"],
        eps=1e-4,
    )
    trace, _, report = run_experiment(cfg)
    actual, bound = report.iteration_counts["k0_count"]
    assert actual is not None, "gradient never reached 1e-4"
    assert report.passed, f"took {actual} iterations, K0 bound is {bound}"
    return f"hit 1e-4 at k={actual}, K0 bound {bound}"


def c05_strong_linear_rates(workdir, inject):
    """Gap and squared distance contract at least as fast as 1-q1 and 1-q0."""
    obj = make_quadratic(np.diag([1.0, 10.0]), np.zeros(2))
    cfg = SgaConfig(nu=1.0, L=10.0, policy=Constant(0.1), stop=StopRule(grad_tol=0.0, max_iter=100))
    trace = run_sga(obj, np.array([1.3, -0.7]), cfg)
    constants = RateConstants.from_inputs(mu=1.0, L=10.0, alpha_bar=0.1)
    if inject:
        constants = dataclasses.replace(constants, **{k: v for k, v in inject.items() if k in ("q0", "q1")})
    report = verify_bounds(trace, constants, ["q_linear_f", "q_linear_x"])
    fit_f = fit_linear_rate(np.asarray(trace.gap))
    fit_x = fit_linear_rate(np.asarray(trace.dist_opt) ** 2)
    bound_f = 1.0 - constants.q1
    bound_x = 1.0 - constants.q0
    assert fit_f <= bound_f + 1e-9, f"fitted gap rate {fit_f:.6f} > 1-q1 = {bound_f:.6f}"
    assert fit_x <= bound_x + 1e-9, f"fitted dist^2 rate {fit_x:.6f} > 1-q0 = {bound_x:.6f}"
    assert report.passed, f"per-step scans failed: {report.bound_satisfied}"
    return f"fits {fit_f:.4f} <= {bound_f:.4f} (gap), {fit_x:.4f} <= {bound_x:.4f} (dist^2), scans clean"


def c06_kl_exponent(workdir, inject):
    """Fitted KL exponents match the known values on every shipped problem."""
    theta_half = None
    min_margin = np.inf
    for i, (name, (obj, region)) in enumerate(builtin_problems().items()):
        nu = obj.truth.nu
        L = obj.truth.holder_L
        if L is None:
            L = estimate_holder_modulus(obj, region, nu, n_pairs=2000, seed=60 + i).L_hat
        alpha = 0.5 * default_alpha(nu, L, StepMode.FUNCTION_OPTIMAL)
        rng = rng_from_seed(60 + i)
        x0 = sample_ball(region.center, region.radius, 1, rng)[0]
        cfg = SgaConfig(nu=nu, L=L, policy=Constant(alpha), stop=StopRule(grad_tol=1e-12, max_iter=400))
        trace = run_sga(obj, x0, cfg)
        est = estimate_kl(np.column_stack([trace.gap, trace.grad_norm]))
        floor = nu / (1.0 + nu) - 0.05
        assert est.theta_hat >= floor, f"{name}: theta_hat {est.theta_hat:.4f} < {floor:.4f}"
        min_margin = min(min_margin, est.theta_hat - floor)
        if name == "power_half":
            theta_half = est.theta_hat
    assert theta_half is not None, "power_half missing from the shipped problems"
    err = abs(theta_half - 1.0 / 3.0)
    assert err <= 0.02, f"power_half theta_hat {theta_half:.4f} off 1/3 by {err:.4f} > 0.02"
    return f"power_half theta {theta_half:.4f} (err {err:.1e}), min floor margin {min_margin:.3f}"


def c07_lyapunov_monotone(workdir, inject):
    """Adaptive-run Lyapunov value never increases, across policies and seeds."""
    problems = builtin_problems()
    runs = 0
    steps = 0
    for pname in ("quadratic_well", "softmax_pair"):
        obj, region = problems[pname]
        starts = sample_ball(region.center, region.radius, 10, rng_from_seed(70))
        for s, x0 in enumerate(starts):
            for tau in (1.0, 1.2):
                for gamma in (ConstantGamma(1.0), BB1(), BB2()):
                    cfg = AdaConfig(tau=tau, gamma=gamma, stop=StopRule(grad_tol=1e-9, max_iter=300), seed=70 + s)
                    trace = run_adasga(obj, x0, cfg)
                    lyap = np.asarray(trace.lyap, dtype=float)
                    vals = lyap[np.isfinite(lyap)]
                    runs += 1
                    if vals.size < 2:
                        continue
                    floor = noise_floor(float(vals[0]))
                    for j in range(vals.size - 1):
                        if not (vals[j] > floor):
                            break
                        steps += 1
                        assert vals[j + 1] <= vals[j] * (1.0 + 1e-10), (
                            f"{pname} tau={tau} gamma={type(gamma).__name__} start {s}: "
                            f"lyapunov rose {vals[j]:.6e} -> {vals[j + 1]:.6e} at step {j}"
                        )
    return f"{runs} runs, {steps} monotone steps verified"


def c08_step_bounds(workdir, inject):
    """Adaptive step size obeys the floor and ceiling from sampled moduli."""
    problems = builtin_problems()
    details = []
    for i, name in enumerate(("quadratic_well", "power_one", "softmax_pair", "poisson_unit")):
        obj, region = problems[name]
        rng = rng_from_seed(80 + i)
        if name == "poisson_unit":
            x0 = sample_ball(np.array([1.0]), 0.5, 1, rng)[0]
        else:
            x0 = sample_ball(region.center, region.radius, 1, rng)[0]
        cfg = AdaConfig(stop=StopRule(grad_tol=1e-9, max_iter=300), seed=80 + i, snapshot_every=1)
        trace = run_adasga(obj, x0, cfg)
        assert trace.status in (RunStatus.CONVERGED, RunStatus.MAX_ITER), f"{name}: status {trace.status}"
        # enclose the whole trajectory so the sampled moduli cover it
        dists = np.linalg.norm(trace.snapshots - region.center, axis=1)
        enclose = Region(region.center, max(region.radius, float(np.max(dists))) + 0.1)
        pairs = sample_pair_set(enclose, 2000, seed=800 + i)
        L_hat = estimate_holder_modulus(obj, enclose, 1.0, pairs=pairs).L_hat
        mu_hat = estimate_strong_convexity(obj, enclose, pairs=pairs).mu_hat
        if trace.n_rows > 1:
            L_hat = max(L_hat, float(np.max(trace.lip[1:])))
            _, grads = obj.eval_many(trace.snapshots)
            dx = trace.snapshots[1:] - trace.snapshots[:-1]
            dg = grads[1:] - grads[:-1]
            rayleigh = np.einsum("ij,ij->i", dg, dx) / np.einsum("ij,ij->i", dx, dx)
            mu_hat = min(mu_hat, float(np.min(rayleigh)))
        assert mu_hat > 0, f"{name}: sampled strong convexity {mu_hat:.3e} not positive"
        constants = RateConstants.from_inputs(mu=mu_hat, L=L_hat, omega=cfg.omega)
        report = verify_bounds(trace, constants, ["step_floor", "step_ceiling"])
        assert report.passed, (
            f"{name}: step bounds failed {report.bound_satisfied} "
            f"(mu_hat={mu_hat:.4g}, L_hat={L_hat:.4g}, slack={report.slack})"
        )
        details.append(f"{name} ok")
    return f"floor/ceiling hold on {len(details)} problems"


def c09_lyapunov_contraction(workdir, inject):
    """Strong-convexity Lyapunov contracts by at least 1 - q_hat per step."""
    obj, region = builtin_problems()["quadratic_well"]
    x0 = sample_ball(region.center, region.radius, 1, rng_from_seed(90))[0]
    cfg = AdaConfig(tau=1.2, stop=StopRule(grad_tol=1e-9, max_iter=400), seed=90, snapshot_every=1)
    trace = run_adasga(obj, x0, cfg)
    prod0 = float(trace.alpha[0] * trace.gamma[0])
    constants = RateConstants.from_inputs(mu=1.0, L=10.0, omega=cfg.omega, tau=1.2, alpha0gamma0=prod0)
    report = verify_bounds(trace, constants, ["lyapunov_hat_contraction"])
    slack = report.slack["lyapunov_hat_contraction"]
    assert report.passed, f"contraction violated: worst ratio exceeds 1-q_hat={1 - constants.q_hat:.6f} by {-slack:.3e}"
    return f"q_hat={constants.q_hat:.5f}, worst-ratio slack {slack:.3e} over {trace.iterations} steps"


def c10_characterizations(workdir, inject):
    """Sampled inequality checks pass at fitted moduli and fail at wrong ones."""
    total_pairs = 0
    neg_hits = []
    for i, (name, (obj, region)) in enumerate(builtin_problems().items()):
        nu = obj.truth.nu
        pairs = sample_pair_set(region, 5100, seed=100 + i)
        total_pairs += len(pairs[0])
        assert len(pairs[0]) >= 10_000, f"{name}: only {len(pairs[0])} pairs sampled"
        L_hat = characterization_modulus(obj, region, nu, pairs=pairs)
        rep = check_holder_inequalities(obj, region, nu, L_hat, pairs=pairs)
        assert rep.passed, f"{name}: {len(rep.violations)} violations at fitted L={L_hat:.4g}"
        if nu == 1.0:
            rep = check_smooth_characterizations(obj, region, L_hat, pairs=pairs)
            assert rep.passed, f"{name}: {len(rep.violations)} smooth-characterization violations"
        neg = check_holder_inequalities(obj, region, nu, L_hat / 2.0, pairs=pairs)
        assert len(neg.violations) > 0, f"{name}: halved modulus produced no violations"
        neg_hits.append(len(neg.violations))
        if nu == 1.0:
            mu_hat = lemma_compatible_mu(obj, pairs, L_hat)
            if mu_hat > 0:
                rep = check_strong_smooth_bound(obj, region, mu_hat, L_hat, pairs=pairs)
                assert rep.passed, f"{name}: {len(rep.violations)} violations at fitted mu={mu_hat:.4g}"
                if 2.0 * mu_hat <= L_hat:
                    neg = check_strong_smooth_bound(obj, region, 2.0 * mu_hat, L_hat, pairs=pairs)
                    assert len(neg.violations) > 0, f"{name}: doubled mu produced no violations"
    return f"{total_pairs} pairs over 5 problems clean; negative controls hit {min(neg_hits)}+ pairs"


def c11_gradient_oracle(workdir, inject):
    """Analytic gradients agree with central finite differences everywhere."""
    worst = 0.0
    for i, (name, (obj, region)) in enumerate(builtin_problems().items()):
        rng = rng_from_seed(110 + i)
        pts = sample_ball(region.center, region.radius, 100, rng)
        for x in pts:
            g = obj.gradient(x)
            fd = finite_diff_gradient(obj, x)
            rel = float(np.linalg.norm(fd - g)) / (1.0 + float(np.linalg.norm(g)))
            assert rel <= 1e-6, f"{name}: finite-difference mismatch {rel:.3e} at x={x}"
            worst = max(worst, rel)
    return f"500 points, worst relative mismatch {worst:.2e}"


def c12_determinism(workdir, inject):
    """Re-running the canonical experiment set reproduces every CSV byte."""
    dirs = [os.path.join(workdir, "determinism_a"), os.path.join(workdir, "determinism_b")]
    paths = {d: [] for d in dirs}
    for d in dirs:
        for cfg in determinism_experiments():
            _, csv_path, _ = run_experiment(dataclasses.replace(cfg, output_dir=d))
            paths[d].append(csv_path)
    n = 0
    for pa, pb in zip(paths[dirs[0]], paths[dirs[1]]):
        with open(pa, "rb") as fa, open(pb, "rb") as fb:
            a, b = fa.read(), fb.read()
        assert a == b, f"{os.path.basename(pa)} differs between runs"
        assert len(a) > 0, f"{os.path.basename(pa)} is empty"
        n += 1
    return f"{n} trace files byte-identical across two runs"


# name -> (criterion fn, runtime budget in seconds; None = untimed)
CRITERIA = {
    "c01_power_closed_form": (c01_power_closed_form, 1.0),
    "c02_sufficient_decrease": (c02_sufficient_decrease, 5.0),
    "c03_distance_monotone": (c03_distance_monotone, 5.0),
    "c04_grad_complexity": (c04_grad_complexity, 1.0),
    "c05_strong_linear_rates": (c05_strong_linear_rates, 2.0),
    "c06_kl_exponent": (c06_kl_exponent, 5.0),
    "c07_lyapunov_monotone": (c07_lyapunov_monotone, 10.0),
    "c08_step_bounds": (c08_step_bounds, 5.0),
    "c09_lyapunov_contraction": (c09_lyapunov_contraction, 2.0),
    "c10_characterizations": (c10_characterizations, 10.0),
    "c11_gradient_oracle": (c11_gradient_oracle, 2.0),
    "c12_determinism": (c12_determinism, None),
}


def run_criterion(name, workdir, inject=None):
    """Run one criterion; never raises, failures land in the result."""
    if name not in CRITERIA:
        raise ConfigError(f"unknown criterion {name!r}; have {list(CRITERIA)}")
    fn, budget = CRITERIA[name]
    start = time.perf_counter()
    try:
        detail = fn(workdir, inject)
        passed = True
    except AssertionError as exc:
        passed, detail = False, str(exc)
    except Exception as exc:  # a crashed criterion is a failure, not a suite abort
        passed, detail = False, f"error: {exc!r}"
    seconds = time.perf_counter() - start
    if passed and budget is not None and seconds > budget:
        passed = False
        detail = f"runtime {seconds:.2f}s over the {budget:.0f}s budget; {detail}"
    return CriterionResult(name=name, passed=passed, detail=detail, seconds=seconds)
