"""Scaled gradient method for objectives with nu-Hoelder continuous gradients.

The update is

    x^{k+1} = x^k - alpha_k ||grad f(x^k)||^((1-nu)/nu) grad f(x^k),

with steps alpha_k in (0, ((1+nu)/L)^(1/nu)]. At nu = 1 the scaling is
identically one and the method reduces, bit for bit, to plain gradient descent
with the same step sequence.
"""

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import ConfigError, DomainViolationError, NumericFailureError
from .trace import RunStatus, Trace, default_snapshot_every

_CAP_SLACK = 1.0 + 1e-12


class StepMode(Enum):
    """Which one-step decrease the constant step maximizes."""

    FUNCTION_OPTIMAL = "function"
    DISTANCE_OPTIMAL = "distance"


def default_alpha(nu, L, mode):
    """Optimal constant step for the requested decrease mode.

    FUNCTION_OPTIMAL returns 1/L^(1/nu), the maximizer of the per-step function
    decrease; DISTANCE_OPTIMAL returns 2 nu / ((1+nu) L^(1/nu)), the maximizer
    of the per-step decrease of the squared distance to a minimizer.
    """
    if not (0.0 < nu <= 1.0):
        raise ValueError(f"nu must lie in (0, 1], got {nu}")
    if not (L > 0):
        raise ValueError(f"L must be positive, got {L}")
    if mode == StepMode.FUNCTION_OPTIMAL:
        return L ** (-1.0 / nu)
    if mode == StepMode.DISTANCE_OPTIMAL:
        return 2.0 * nu / ((1.0 + nu) * L ** (1.0 / nu))
    raise ValueError(f"unknown step mode {mode!r}")


def alpha_cap(nu, L):
    """Largest admissible constant step ((1+nu)/L)^(1/nu)."""
    return ((1.0 + nu) / L) ** (1.0 / nu)


@dataclass(frozen=True)
class Constant:
    alpha: float


@dataclass(frozen=True)
class IntervalConstant:
    """Run at the mode's optimal constant step; keep alpha_bar as the rate anchor.

    The convergence statements hold for any constant step in
    [alpha_bar, default_alpha(nu, L, mode)]; this policy emits the interval's
    upper end (the largest one-step decrease) while alpha_bar, the interval's
    lower end, is what the rate constants are computed from.
    """

    alpha_bar: float
    mode: StepMode


@dataclass(frozen=True)
class Diminishing:
    """Decreasing schedule alpha_k; alpha0 defaults to the admissible cap."""

    schedule: str  # "harmonic" | "sqrt" | "geometric"
    alpha0: float | None = None
    ratio: float | None = None


StepPolicy = Constant | IntervalConstant | Diminishing


def validate_policy(policy, nu, L):
    cap = alpha_cap(nu, L)
    if isinstance(policy, Constant):
        if not (0.0 < policy.alpha <= cap * _CAP_SLACK):
            raise ConfigError(f"constant step {policy.alpha} outside (0, {cap}]")
    elif isinstance(policy, IntervalConstant):
        upper = default_alpha(nu, L, policy.mode)
        if not (0.0 < policy.alpha_bar <= upper * _CAP_SLACK):
            raise ConfigError(
                f"alpha_bar {policy.alpha_bar} outside (0, {upper}] for mode {policy.mode.value}"
            )
    elif isinstance(policy, Diminishing):
        if policy.schedule not in ("harmonic", "sqrt", "geometric"):
            raise ConfigError(f"unknown diminishing schedule {policy.schedule!r}")
        a0 = cap if policy.alpha0 is None else policy.alpha0
        if not (0.0 < a0 <= cap * _CAP_SLACK):
            raise ConfigError(f"alpha0 {a0} outside (0, {cap}]")
        if policy.schedule == "geometric":
            if policy.ratio is None or not (0.0 < policy.ratio < 1.0):
                raise ConfigError(f"geometric schedule needs ratio in (0, 1), got {policy.ratio}")
    else:
        raise ConfigError(f"unknown step policy {policy!r}")


def policy_alpha(policy, k, nu, L):
    """Step size prescribed at iteration k."""
    if isinstance(policy, Constant):
        return policy.alpha
    if isinstance(policy, IntervalConstant):
        return default_alpha(nu, L, policy.mode)
    a0 = alpha_cap(nu, L) if policy.alpha0 is None else policy.alpha0
    if policy.schedule == "harmonic":
        return a0 / (k + 1.0)
    if policy.schedule == "sqrt":
        return a0 / math.sqrt(k + 1.0)
    return a0 * policy.ratio**k


@dataclass(frozen=True)
class StopRule:
    """Termination rule. f_tol (gap to f_star) needs ground truth to be known."""

    grad_tol: float = 1e-8
    max_iter: int | None = 100_000
    f_tol: float | None = None

    def __post_init__(self):
        if self.grad_tol < 0:
            raise ConfigError(f"grad_tol must be nonnegative, got {self.grad_tol}")
        if self.max_iter is not None and self.max_iter < 0:
            raise ConfigError(f"max_iter must be nonnegative, got {self.max_iter}")
        if self.f_tol is not None and self.f_tol < 0:
            raise ConfigError(f"f_tol must be nonnegative, got {self.f_tol}")
        if self.grad_tol == 0 and self.max_iter is None:
            raise ConfigError("need grad_tol > 0 or a finite max_iter")


@dataclass(frozen=True)
class SgaConfig:
    nu: float
    L: float
    policy: StepPolicy
    stop: StopRule = field(default_factory=StopRule)
    snapshot_every: int | None = None

    def __post_init__(self):
        if not (0.0 < self.nu <= 1.0):
            raise ConfigError(f"nu must lie in (0, 1], got {self.nu}")
        if not (self.L > 0):
            raise ConfigError(f"L must be positive, got {self.L}")
        if self.snapshot_every is not None and self.snapshot_every < 1:
            raise ConfigError(f"snapshot_every must be >= 1, got {self.snapshot_every}")
        validate_policy(self.policy, self.nu, self.L)


def sga_step(x, g, alpha, nu):
    """One scaled gradient step x - alpha ||g||^((1-nu)/nu) g.

    A zero gradient returns x unchanged. For gradient norms outside
    [1e-100, 1e100] the step coefficient alpha * ||g||^((1-nu)/nu) is formed in
    the log domain so an intermediate power cannot overflow when the final
    coefficient is representable.
    """
    x = np.asarray(x, dtype=float)
    g = np.asarray(g, dtype=float)
    if not (alpha > 0):
        raise ValueError(f"alpha must be positive, got {alpha}")
    if not (0.0 < nu <= 1.0):
        raise ValueError(f"nu must lie in (0, 1], got {nu}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(g))):
        raise NumericFailureError("non-finite input to sga_step")
    if nu == 1.0:
        return x - alpha * g
    gn = float(np.linalg.norm(g))
    if gn == 0.0:
        return x.copy()
    expo = (1.0 - nu) / nu
    if 1e-100 < gn < 1e100:
        coef = alpha * gn**expo
    else:
        coef = alpha * math.exp(expo * math.log(gn))
    return x - coef * g


def run_sga(obj, x0, cfg):
    """Run the scaled gradient method and collect a trace.

    Arguments:
        obj: Objective with exponent-nu Hoelder gradient on the visited set.
        x0: starting point (must lie in the domain).
        cfg: SgaConfig.

    The trace has one row per visited iterate. gap and dist_opt columns appear
    when the objective's ground truth provides f_star / x_star. Status is
    CONVERGED (a stop tolerance fired or the gradient vanished), MAX_ITER,
    DOMAIN_VIOLATION, or NUMERIC_FAILURE; on the failure statuses the trace
    covers the iterates up to the last valid one.
    """
    x = np.array(x0, dtype=float)
    if x.shape != (obj.dim,):
        raise ConfigError(f"x0 must have shape ({obj.dim},), got {x.shape}")
    if not obj.in_domain(x):
        raise DomainViolationError("x0 outside the objective domain")
    truth = obj.truth
    f_star = truth.f_star if truth is not None else None
    x_star = truth.x_star if truth is not None else None
    if cfg.stop.f_tol is not None and f_star is None:
        raise ConfigError("f_tol stop rule needs ground truth f_star")
    snap_every = cfg.snapshot_every or default_snapshot_every(obj.dim)

    fs, gns, alphas = [], [], []
    gaps = [] if f_star is not None else None
    dists = [] if x_star is not None else None
    snap_ks, snaps = [], []
    status = RunStatus.MAX_ITER
    x_ok = None  # last iterate that evaluated cleanly
    k = 0
    while True:
        if not np.all(np.isfinite(x)):
            status = RunStatus.NUMERIC_FAILURE
            break
        try:
            f, g = obj.eval(x)
        except DomainViolationError:
            status = RunStatus.DOMAIN_VIOLATION
            break
        except NumericFailureError:
            status = RunStatus.NUMERIC_FAILURE
            break
        gn = float(np.linalg.norm(g))
        a_k = policy_alpha(cfg.policy, k, cfg.nu, cfg.L)
        x_ok = x
        fs.append(f)
        gns.append(gn)
        alphas.append(a_k)
        if gaps is not None:
            gaps.append(f - f_star)
        if dists is not None:
            dists.append(float(np.linalg.norm(x - x_star)))
        if k % snap_every == 0:
            snap_ks.append(k)
            snaps.append(x.copy())
        if gn <= cfg.stop.grad_tol:
            status = RunStatus.CONVERGED
            break
        if cfg.stop.f_tol is not None and f - f_star <= cfg.stop.f_tol:
            status = RunStatus.CONVERGED
            break
        if cfg.stop.max_iter is not None and k >= cfg.stop.max_iter:
            status = RunStatus.MAX_ITER
            break
        x = sga_step(x, g, a_k, cfg.nu)
        k += 1

    last = len(fs) - 1
    if last >= 0 and snap_ks and snap_ks[-1] != last:
        snap_ks.append(last)
        snaps.append(x_ok.copy())

    return Trace(
        f=np.array(fs),
        grad_norm=np.array(gns),
        alpha=np.array(alphas),
        gap=np.array(gaps) if gaps is not None else None,
        dist_opt=np.array(dists) if dists is not None else None,
        status=status,
        f_star=f_star,
        snapshots=np.array(snaps) if snaps else None,
        snapshot_ks=np.array(snap_ks) if snap_ks else None,
        x_final=x_ok.copy() if x_ok is not None else None,
        meta={"solver": "sga", "nu": cfg.nu, "L": cfg.L},
    )
