"""Adaptive scaled gradient method (locally Lipschitz gradients, nu = 1 regime).

The update is

    x^{k+1} = x^k - alpha_k gamma_k grad f(x^k),

where gamma_k is a scaling policy (constant or Barzilai-Borwein, clamped to
[gamma_min, gamma_max]) and alpha_k follows the recurrence

    alpha_k = min{ (alpha_{k-1} gamma_{k-1} / gamma_k)
                       * sqrt(2 (1 - omega^2) + theta_{k-1} / tau),
                   omega / (gamma_k L_k) },

with L_k = ||grad f(x^k) - grad f(x^{k-1})|| / ||x^k - x^{k-1}|| the local
Lipschitz probe and theta_k = alpha_k gamma_k / (alpha_{k-1} gamma_{k-1}).
No global smoothness constant is ever supplied; the run discovers the local
one. Requires 0 < omega <= 1/sqrt(2) and tau >= 1 (tau > 1 for the linear-rate
certificates).

Lyapunov values along the run certify convergence: `lyapunov_el` is
nonincreasing for any reference minimizer, and under strong convexity
`lyapunov_hat` contracts geometrically. Both are recorded lazily, after the
step coefficients they depend on are known.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DomainViolationError, NumericFailureError
from .sampling import random_unit_vector, rng_from_seed
from .sga import StopRule
from .trace import RunStatus, Trace, default_snapshot_every

# Largest admissible omega. 2**-0.5 is the default as well: biggest steps.
OMEGA_MAX = 2.0**-0.5


@dataclass(frozen=True)
class ConstantGamma:
    value: float = 1.0


@dataclass(frozen=True)
class BB1:
    """gamma = ||y||^2 / <y, s> over the last secant pair (s, y)."""


@dataclass(frozen=True)
class BB2:
    """gamma = <y, s> / ||s||^2 over the last secant pair (s, y)."""


GammaPolicy = ConstantGamma | BB1 | BB2


def _clamp(value, lo, hi):
    return min(max(value, lo), hi)


@dataclass(frozen=True)
class AdaConfig:
    """Parameters of the adaptive run.

    alpha0 may be a positive float or "auto": probe the gradient at
    x0 + delta u for a seeded unit vector u and delta = 1e-6 (1 + ||x0||),
    then set alpha0 = omega / (gamma0 Ltilde) from the probed ratio Ltilde
    (falling back to 1/gamma0 when the probe sees a flat gradient).
    """

    omega: float = OMEGA_MAX
    tau: float = 1.2
    gamma: GammaPolicy = field(default_factory=ConstantGamma)
    gamma_min: float = 1e-6
    gamma_max: float = 1e6
    alpha0: float | str = "auto"
    theta0: float = 1.0
    stop: StopRule = field(default_factory=StopRule)
    seed: int = 0
    snapshot_every: int | None = None

    def __post_init__(self):
        if not (0.0 < self.omega <= OMEGA_MAX):
            raise ConfigError(f"omega must lie in (0, 1/sqrt(2)], got {self.omega}")
        if not (self.tau >= 1.0):
            raise ConfigError(f"tau must be >= 1, got {self.tau}")
        if not isinstance(self.gamma, (ConstantGamma, BB1, BB2)):
            raise ConfigError(f"unknown gamma policy {self.gamma!r}")
        if not (0.0 < self.gamma_min <= self.gamma_max):
            raise ConfigError(
                f"need 0 < gamma_min <= gamma_max, got {self.gamma_min}, {self.gamma_max}"
            )
        if isinstance(self.gamma, ConstantGamma) and not (self.gamma.value > 0):
            raise ConfigError(f"constant gamma must be positive, got {self.gamma.value}")
        if self.alpha0 != "auto":
            if not isinstance(self.alpha0, (int, float)) or not (self.alpha0 > 0):
                raise ConfigError(f'alpha0 must be "auto" or a positive number, got {self.alpha0!r}')
        if not (self.theta0 > 0):
            raise ConfigError(f"theta0 must be positive, got {self.theta0}")
        if self.snapshot_every is not None and self.snapshot_every < 1:
            raise ConfigError(f"snapshot_every must be >= 1, got {self.snapshot_every}")


@dataclass(frozen=True)
class AdaState:
    """Rolling two-iterate window of the recurrence.

    alpha/gamma/theta are the values of the last completed iteration;
    the *_prev slots hold the iteration before that.
    """

    k: int
    x_prev: np.ndarray
    x: np.ndarray
    g_prev: np.ndarray
    g: np.ndarray
    alpha_prev: float
    alpha: float
    gamma_prev: float
    gamma: float
    theta_prev: float
    theta: float


def local_lipschitz(x_prev, x, g_prev, g):
    """||g - g_prev|| / ||x - x_prev||; the points must differ.

    A coincident pair is a division by zero and means the iteration has
    stalled; callers treat that as convergence, so it is an error here.
    """
    dx = float(np.linalg.norm(np.asarray(x, dtype=float) - np.asarray(x_prev, dtype=float)))
    if dx == 0.0:
        raise ValueError("local_lipschitz needs two distinct points")
    dg = float(np.linalg.norm(np.asarray(g, dtype=float) - np.asarray(g_prev, dtype=float)))
    return dg / dx


def _alpha_next(prod_prev, theta_prev, gamma_k, L_k, omega, tau):
    # prod_prev = alpha_{k-1} gamma_{k-1}
    first = (prod_prev / gamma_k) * math.sqrt(2.0 * (1.0 - omega * omega) + theta_prev / tau)
    if L_k > 0.0:
        first = min(first, omega / (gamma_k * L_k))
    if not (first > 0.0 and math.isfinite(first)):
        raise NumericFailureError(f"step recurrence produced alpha={first}")
    return first


def adasga_alpha(state, gamma_k, L_k, omega, tau):
    """Next step size from the recurrence; L_k = 0 leaves the second branch out."""
    vals = (state.alpha, state.gamma, state.theta, gamma_k, L_k, omega, tau)
    if not all(math.isfinite(v) for v in vals):
        raise NumericFailureError(f"non-finite input to adasga_alpha: {vals}")
    return _alpha_next(state.alpha * state.gamma, state.theta, gamma_k, L_k, omega, tau)


def gamma_bb(x_prev, x, g_prev, g, variant, gamma_min, gamma_max):
    """Barzilai-Borwein scaling from the secant pair, clamped.

    A nonpositive <y, s> can only come from rounding on a convex problem; the
    value then falls back to the clamp endpoint (gamma_max for BB1, whose
    denominator it is; gamma_min for BB2, whose sign it sets).
    """
    x_prev = np.asarray(x_prev, dtype=float)
    x = np.asarray(x, dtype=float)
    if np.array_equal(x, x_prev):
        raise ValueError("gamma_bb needs two distinct points")
    s = x - x_prev
    y = np.asarray(g, dtype=float) - np.asarray(g_prev, dtype=float)
    ys = float(y @ s)
    if isinstance(variant, BB1):
        raw = gamma_max if ys <= 0.0 else float(y @ y) / ys
    elif isinstance(variant, BB2):
        raw = gamma_min if ys <= 0.0 else ys / float(s @ s)
    else:
        raise ValueError(f"unknown BB variant {variant!r}")
    return _clamp(raw, gamma_min, gamma_max)


def _gamma_initial(policy, gamma_min, gamma_max):
    if isinstance(policy, ConstantGamma):
        return _clamp(policy.value, gamma_min, gamma_max)
    return _clamp(1.0, gamma_min, gamma_max)


def _gamma_at(policy, x_prev, x, g_prev, g, gamma_min, gamma_max):
    if isinstance(policy, ConstantGamma):
        return _clamp(policy.value, gamma_min, gamma_max)
    return gamma_bb(x_prev, x, g_prev, g, policy, gamma_min, gamma_max)


def lyapunov_el(x_k, x_km1, f_km1, alpha_k, gamma_k, theta_k, omega, x_ref, f_ref):
    """Distance + inertia + weighted previous function gap.

        ||x_k - x_ref||^2 + omega^2/(1-omega^2) ||x_k - x_km1||^2
            + alpha_k gamma_k theta_k / (1-omega^2) (f_km1 - f_ref)

    Nonincreasing along an adaptive run for any fixed minimizer reference.
    """
    if not (0.0 < omega < 1.0):
        raise ValueError(f"omega must lie in (0, 1), got {omega}")
    x_k = np.asarray(x_k, dtype=float)
    x_km1 = np.asarray(x_km1, dtype=float)
    x_ref = np.asarray(x_ref, dtype=float)
    den = 1.0 - omega * omega
    dist2 = float(np.sum((x_k - x_ref) ** 2))
    inertia = float(np.sum((x_k - x_km1) ** 2))
    return dist2 + (omega * omega / den) * inertia + (alpha_k * gamma_k * theta_k / den) * (
        f_km1 - f_ref
    )


def lyapunov_hat(x_k1, x_k, f_k, alpha_k, gamma_k, theta_k, omega, mu_W, L_W, x_star, f_star):
    """Strong-convexity Lyapunov value at the pair (x^{k+1}, x^k).

        ||x_k1 - x_star||^2
            + (omega^2/(1-omega^2) + mu_W/(2 omega L_W)) ||x_k1 - x_k||^2
            + 2 alpha_k gamma_k (1 + theta_k/(2 (1-omega^2))) (f_k - f_star)

    Contracts by at least (1 - q_hat) per step when tau > 1; mu_W and L_W are
    the strong convexity and smoothness moduli of the working region.
    """
    if not (0.0 < omega < 1.0):
        raise ValueError(f"omega must lie in (0, 1), got {omega}")
    if not (mu_W > 0.0 and L_W > 0.0):
        raise ValueError(f"moduli must be positive, got mu_W={mu_W}, L_W={L_W}")
    if mu_W > L_W:
        raise ValueError(f"mu_W={mu_W} exceeds L_W={L_W}")
    x_k1 = np.asarray(x_k1, dtype=float)
    x_k = np.asarray(x_k, dtype=float)
    x_star = np.asarray(x_star, dtype=float)
    den = 1.0 - omega * omega
    coef_inertia = omega * omega / den + mu_W / (2.0 * omega * L_W)
    coef_gap = 2.0 * alpha_k * gamma_k * (1.0 + theta_k / (2.0 * den))
    dist2 = float(np.sum((x_k1 - x_star) ** 2))
    inertia = float(np.sum((x_k1 - x_k) ** 2))
    return dist2 + coef_inertia * inertia + coef_gap * (f_k - f_star)


def lyapunov_hat_from_trace(trace, mu_W, L_W, omega=None):
    """Sequence lyapunov_hat(x^{k+1}, x^k) for k = 0..N-1, from trace columns.

    Needs a trace with every iterate snapshotted plus dist_opt, gap, alpha,
    gamma and theta columns (an adaptive run on a problem with ground truth
    and snapshot_every=1). omega defaults to the value recorded in trace.meta.
    """
    if omega is None:
        omega = trace.meta.get("omega")
        if omega is None:
            raise ValueError("omega not in trace.meta; pass it explicitly")
    if not trace.has_every_iterate():
        raise ValueError("trace must snapshot every iterate")
    for col in ("dist_opt", "gap", "gamma", "theta"):
        if getattr(trace, col) is None:
            raise ValueError(f"trace lacks the {col} column")
    den = 1.0 - omega * omega
    coef_inertia = omega * omega / den + mu_W / (2.0 * omega * L_W)
    if not (0.0 < mu_W <= L_W):
        raise ValueError(f"need 0 < mu_W <= L_W, got {mu_W}, {L_W}")
    n = trace.n_rows
    vals = np.empty(n - 1)
    for k in range(n - 1):
        step2 = float(np.sum((trace.snapshots[k + 1] - trace.snapshots[k]) ** 2))
        prod = trace.alpha[k] * trace.gamma[k]
        coef_gap = 2.0 * prod * (1.0 + trace.theta[k] / (2.0 * den))
        vals[k] = trace.dist_opt[k + 1] ** 2 + coef_inertia * step2 + coef_gap * trace.gap[k]
    return vals


def _auto_alpha0(obj, x0, g0, gamma0, omega, seed):
    delta = 1e-6 * (1.0 + float(np.linalg.norm(x0)))
    u = random_unit_vector(obj.dim, rng_from_seed(seed))
    g_probe = None
    for direction in (u, -u):
        try:
            g_probe = obj.gradient(x0 + delta * direction)
            break
        except DomainViolationError:
            continue
    if g_probe is None:
        return 1.0 / gamma0
    lip = float(np.linalg.norm(g_probe - g0)) / delta
    if lip > 0.0:
        return omega / (gamma0 * lip)
    return 1.0 / gamma0


def run_adasga(obj, x0, cfg):
    """Run the adaptive method and collect a trace.

    Row k of the trace carries (f, ||g||, alpha_k, gamma_k, theta_k, L_k) at
    iterate x^k; L_k spans (x^{k-1}, x^k) and is nan at k = 0. The final row's
    step coefficients are recorded but never applied. When the objective has
    ground truth, gap/dist_opt columns appear and the lyap column holds
    lyapunov_el(x^k, x^{k-1}) with the row's own coefficients (nan at k = 0).
    Exactly coincident consecutive iterates terminate the run as CONVERGED.
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
    have_ref = f_star is not None and x_star is not None
    snap_every = cfg.snapshot_every or default_snapshot_every(obj.dim)

    fs, gns, alphas, gammas, thetas, lips = [], [], [], [], [], []
    gaps = [] if f_star is not None else None
    dists = [] if x_star is not None else None
    lyaps = [] if have_ref else None
    snap_ks, snaps = [], []
    status = RunStatus.MAX_ITER
    x_ok = None
    x_prev = g_prev = None
    f_prev = a_prev = c_prev = t_prev = None
    alpha0_used = None
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
        try:
            if k == 0:
                gamma_k = _gamma_initial(cfg.gamma, cfg.gamma_min, cfg.gamma_max)
                if cfg.alpha0 == "auto":
                    alpha_k = _auto_alpha0(obj, x, g, gamma_k, cfg.omega, cfg.seed)
                else:
                    alpha_k = float(cfg.alpha0)
                theta_k = cfg.theta0
                lip_k = math.nan
                alpha0_used = alpha_k
            else:
                lip_k = local_lipschitz(x_prev, x, g_prev, g)
                gamma_k = _gamma_at(cfg.gamma, x_prev, x, g_prev, g, cfg.gamma_min, cfg.gamma_max)
                alpha_k = _alpha_next(a_prev * c_prev, t_prev, gamma_k, lip_k, cfg.omega, cfg.tau)
                theta_k = (alpha_k * gamma_k) / (a_prev * c_prev)
        except NumericFailureError:
            status = RunStatus.NUMERIC_FAILURE
            break
        x_ok = x
        fs.append(f)
        gns.append(gn)
        alphas.append(alpha_k)
        gammas.append(gamma_k)
        thetas.append(theta_k)
        lips.append(lip_k)
        if gaps is not None:
            gaps.append(f - f_star)
        if dists is not None:
            dists.append(float(np.linalg.norm(x - x_star)))
        if lyaps is not None:
            if k == 0:
                lyaps.append(math.nan)
            else:
                lyaps.append(
                    lyapunov_el(x, x_prev, f_prev, alpha_k, gamma_k, theta_k, cfg.omega, x_star, f_star)
                )
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
        x_next = x - (alpha_k * gamma_k) * g
        if np.array_equal(x_next, x):
            status = RunStatus.CONVERGED
            break
        x_prev, g_prev, f_prev = x, g, f
        a_prev, c_prev, t_prev = alpha_k, gamma_k, theta_k
        x = x_next
        k += 1

    last = len(fs) - 1
    if last >= 0 and snap_ks and snap_ks[-1] != last:
        snap_ks.append(last)
        snaps.append(x_ok.copy())

    if isinstance(cfg.gamma, ConstantGamma):
        gamma_name = "constant"
    else:
        gamma_name = "bb1" if isinstance(cfg.gamma, BB1) else "bb2"
    return Trace(
        f=np.array(fs),
        grad_norm=np.array(gns),
        alpha=np.array(alphas),
        gamma=np.array(gammas),
        theta=np.array(thetas),
        lip=np.array(lips),
        gap=np.array(gaps) if gaps is not None else None,
        dist_opt=np.array(dists) if dists is not None else None,
        lyap=np.array(lyaps) if lyaps is not None else None,
        status=status,
        f_star=f_star,
        snapshots=np.array(snaps) if snaps else None,
        snapshot_ks=np.array(snap_ks) if snap_ks else None,
        x_final=x_ok.copy() if x_ok is not None else None,
        meta={
            "solver": "adasga",
            "omega": cfg.omega,
            "tau": cfg.tau,
            "gamma_policy": gamma_name,
            "alpha0": alpha0_used,
            "theta0": cfg.theta0,
        },
    )
