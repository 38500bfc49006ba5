"""Theoretical rate constants, iteration bounds, and trace-vs-bound verdicts.

Closed forms implemented here:

  q0 = 2 abar mu L / (mu + L)            squared-distance Q-linear rate term
  q1 = mu^2 abar^2 / 4                   function-gap Q-linear rate term
  q2 = (1-theta) L abar^(1/(1-theta)) rho^(-1/theta)
                                         KL function-gap rate term
  q_hat                                  adaptive-run Lyapunov contraction
  c1~, c2~, c3~                          adaptive R-linear envelope constants
  K0, K_grad, K_fun                      iteration-count ceilings
  MN(x, y) = ceil((log(1/eps) + log x)/log(1/y) + 1)

`verify_bounds` scans a trace against the bounds implied by a RateConstants
bundle and returns per-claim verdicts. Ratio scans stop once the tracked
quantity falls below 100 eps relative to its initial value; below that the
ratios are rounding noise. All per-step and fitted-rate comparisons allow the
bound to be exceeded by 1e-9.
"""

import json
import math
from dataclasses import dataclass, fields

import numpy as np

from .errors import ClaimError, ConfigError, EstimationError
from .trace import RunStatus

RATE_SLACK = 1e-9
STEP_SLACK = 1e-12
LYAP_SLACK = 1e-10
OMEGA_MAX = 2.0**-0.5


def noise_floor(reference):
    """Magnitude below which per-step ratios of a decaying quantity are noise."""
    return 100.0 * np.finfo(float).eps * (1.0 + abs(float(reference)))


def mn_bound(eps, x, y):
    """ceil((log(1/eps) + log(x)) / log(1/y) + 1), floored at 1.

    Iteration count for a quantity starting at x and shrinking by the factor
    y per step to fall below eps.
    """
    if not (eps > 0.0):
        raise ValueError(f"eps must be positive, got {eps}")
    if not (x > 0.0):
        raise ValueError(f"x must be positive, got {x}")
    if not (0.0 < y < 1.0):
        raise ValueError(f"y must lie in (0, 1), got {y}")
    value = (math.log(1.0 / eps) + math.log(x)) / math.log(1.0 / y) + 1.0
    return max(int(math.ceil(value)), 1)


def sga_grad_complexity(nu, L, alpha_bar, f0_gap, eps):
    """Iterations guaranteeing ||grad f|| <= eps for the constant-step method.

    K0 = ceil((1+nu) f0_gap / (L abar^(1+nu) eps^((1+nu)/nu)) + 1).
    alpha_bar must lie strictly below 1/L^(1/nu).
    """
    if not (0.0 < nu <= 1.0):
        raise ValueError(f"nu must lie in (0, 1], got {nu}")
    if not (L > 0.0 and eps > 0.0):
        raise ValueError(f"L and eps must be positive, got {L}, {eps}")
    if f0_gap < 0.0:
        raise ValueError(f"f0_gap must be nonnegative, got {f0_gap}")
    if not (0.0 < alpha_bar < L ** (-1.0 / nu)):
        raise ValueError(
            f"alpha_bar must lie in (0, {L ** (-1.0 / nu)}), got {alpha_bar}"
        )
    if f0_gap == 0.0:
        return 1
    value = (1.0 + nu) * f0_gap / (L * alpha_bar ** (1.0 + nu) * eps ** ((1.0 + nu) / nu)) + 1.0
    return int(math.ceil(value))


def sga_strong_constants(mu, L, alpha_bar):
    """(q0, q1) for the strongly convex constant-step rates.

    Squared distances contract by 1-q0 per step, function gaps by 1-q1.
    Requires 0 < mu < L and 0 < alpha_bar <= 1/L (the boundary step is
    admissible; the rates there are the classical 2muL/(mu+L) pair).
    """
    if not (0.0 < mu < L):
        raise ValueError(f"need 0 < mu < L, got mu={mu}, L={L}")
    if not (0.0 < alpha_bar <= (1.0 / L) * (1.0 + 1e-12)):
        raise ValueError(f"alpha_bar must lie in (0, 1/L], got {alpha_bar}")
    q0 = 2.0 * alpha_bar * mu * L / (mu + L)
    q1 = (mu * alpha_bar) ** 2 / 4.0
    return q0, q1


def kl_rate_q2(theta, rho, L, alpha_bar):
    """(1-theta) L abar^(1/(1-theta)) rho^(-1/theta).

    Function-gap contraction term under a KL inequality with exponent
    theta <= 1/2. Computation only: alpha_bar is not checked against the
    admissible step interval.
    """
    if not (0.0 < theta < 1.0):
        raise ValueError(f"theta must lie in (0, 1), got {theta}")
    if not (rho > 0.0 and L > 0.0 and alpha_bar > 0.0):
        raise ValueError(f"rho, L, alpha_bar must be positive, got {rho}, {L}, {alpha_bar}")
    return (1.0 - theta) * L * alpha_bar ** (1.0 / (1.0 - theta)) * rho ** (-1.0 / theta)


def kl_step_upper(nu, L, form="min"):
    """Upper end of the admissible constant-step interval under a KL inequality.

    The two step caps used by the KL linear-rate guarantees:
    "inverse_l" is 1/L, "inverse_l_pow" is 1/L^(1/nu); "min" (default)
    returns the smaller, safe for either guarantee.
    """
    if not (0.0 < nu <= 1.0):
        raise ValueError(f"nu must lie in (0, 1], got {nu}")
    if not (L > 0.0):
        raise ValueError(f"L must be positive, got {L}")
    caps = {"inverse_l": 1.0 / L, "inverse_l_pow": L ** (-1.0 / nu)}
    if form == "min":
        return min(caps.values())
    if form in caps:
        return caps[form]
    raise ValueError(f"form must be 'min', 'inverse_l' or 'inverse_l_pow', got {form!r}")


def adasga_qhat(mu_W, L_W, omega, tau, alpha0gamma0):
    """Per-step Lyapunov contraction constant of the adaptive method.

    q_hat = min{ (mu/2) min{a0g0, omega/L},
                 mu (1-omega^2) / (2 omega^3 L + mu (1-omega^2)),
                 (tau-1) m / (tau (2 (1-omega^2) + m)) },
    m = min{a0g0 mu / omega, mu / L}. Needs tau > 1; at tau = 1 the third
    term vanishes and no contraction is certified.
    """
    if not (0.0 < mu_W <= L_W):
        raise ValueError(f"need 0 < mu_W <= L_W, got {mu_W}, {L_W}")
    if not (0.0 < omega <= OMEGA_MAX):
        raise ValueError(f"omega must lie in (0, 1/sqrt(2)], got {omega}")
    if not (tau > 1.0):
        raise ValueError(f"tau must exceed 1 for a contraction, got {tau}")
    if not (alpha0gamma0 > 0.0):
        raise ValueError(f"alpha0gamma0 must be positive, got {alpha0gamma0}")
    w2 = omega * omega
    term1 = 0.5 * mu_W * min(alpha0gamma0, omega / L_W)
    term2 = mu_W * (1.0 - w2) / (2.0 * omega**3 * L_W + mu_W * (1.0 - w2))
    m = min(alpha0gamma0 * mu_W / omega, mu_W / L_W)
    term3 = (tau - 1.0) * m / (tau * (2.0 * (1.0 - w2) + m))
    return min(term1, term2, term3)


def adasga_eta(dist0, alpha0, gamma0, theta0, grad0_norm, f0_gap):
    """eta = dist0^2 + 2 (a0 g0)^2 ||grad f(x0)||^2 + 2 a0 g0 theta0 (f(x0) - f*).

    Diagnostic only (needs ground truth); bounds the initial Lyapunov value.
    """
    if dist0 < 0.0 or grad0_norm < 0.0 or f0_gap < 0.0:
        raise ValueError("dist0, grad0_norm, f0_gap must be nonnegative")
    if not (alpha0 > 0.0 and gamma0 > 0.0 and theta0 > 0.0):
        raise ValueError("alpha0, gamma0, theta0 must be positive")
    prod = alpha0 * gamma0
    return dist0**2 + 2.0 * prod**2 * grad0_norm**2 + 2.0 * prod * theta0 * f0_gap


def adasga_radius(eta, dist0, x0_norm):
    """Radius sqrt(eta) + dist0 + ||x0||: every adaptive iterate stays inside.

    The enclosing working region used by the analysis is built with the wider
    margin 3 sqrt(eta) + dist0 + ||x0||; this is the tight iterate bound.
    """
    if eta < 0.0 or dist0 < 0.0 or x0_norm < 0.0:
        raise ValueError("eta, dist0, x0_norm must be nonnegative")
    return math.sqrt(eta) + dist0 + x0_norm


def adasga_strong_constants(mu_W, L_W, omega, alpha0, gamma0, R, eta):
    """(c1~, c2~, c3~): R-linear envelope constants of the adaptive method.

    R already includes ||x0|| (callers pass the combined radius). Only the
    product alpha0*gamma0 enters.
    """
    if not (0.0 < mu_W <= L_W):
        raise ValueError(f"need 0 < mu_W <= L_W, got {mu_W}, {L_W}")
    if not (0.0 < omega <= OMEGA_MAX):
        raise ValueError(f"omega must lie in (0, 1/sqrt(2)], got {omega}")
    if not (alpha0 > 0.0 and gamma0 > 0.0 and R > 0.0):
        raise ValueError("alpha0, gamma0, R must be positive")
    if eta < 0.0:
        raise ValueError(f"eta must be nonnegative, got {eta}")
    prod = alpha0 * gamma0
    w2 = omega * omega
    c1 = math.sqrt(R * R + eta)
    c2 = omega * L_W**2 * c1**2 / (mu_W * min(prod**2 * L_W**2, w2))
    c3 = math.sqrt(2.0 * c1**2 * (1.0 - w2) * omega * L_W**3) / (
        math.sqrt(2.0 * w2 * L_W + (1.0 - w2) * mu_W) * min(prod * L_W, omega)
    )
    return c1, c2, c3


def adasga_complexity(L_W, alpha0, gamma0, omega, R, eta, x0_norm, eps):
    """(K_grad, K_fun): adaptive-run iteration ceilings at accuracy eps.

    K_grad = ceil(1 + L^2 eta / (eps^2 min{L a0 g0, omega}))
    K_fun  = ceil(1 + L ((R + ||x0||)^2 + eta) / (2 eps min{L a0 g0, omega}))
    """
    if not (L_W > 0.0 and alpha0 > 0.0 and gamma0 > 0.0 and eps > 0.0):
        raise ValueError("L_W, alpha0, gamma0, eps must be positive")
    if not (0.0 < omega <= OMEGA_MAX):
        raise ValueError(f"omega must lie in (0, 1/sqrt(2)], got {omega}")
    if R < 0.0 or eta < 0.0 or x0_norm < 0.0:
        raise ValueError("R, eta, x0_norm must be nonnegative")
    m = min(L_W * alpha0 * gamma0, omega)
    k_grad = int(math.ceil(1.0 + L_W**2 * eta / (eps**2 * m)))
    k_fun = int(math.ceil(1.0 + L_W * ((R + x0_norm) ** 2 + eta) / (2.0 * eps * m)))
    return k_grad, k_fun


@dataclass(frozen=True)
class RecursionClass:
    kind: str  # "finite" | "linear" | "sublinear"
    rate: float | None = None  # linear rate 1 - 1/beta, or sublinear exponent


def classify_recursion(seq, theta, beta):
    """Classify a sequence satisfying (s^k)^theta <= beta (s^k - s^{k+1}).

    Returns (RecursionClass, violations) where violations lists every index k
    at which the recursion fails. theta = 0 gives finite termination,
    theta in (0, 1] linear convergence at rate 1 - 1/beta, theta > 1
    sublinear decay s^k = O(k^(-1/(theta-1))).
    """
    if not (beta > 0.0):
        raise ValueError(f"beta must be positive, got {beta}")
    if theta < 0.0:
        raise ValueError(f"theta must be nonnegative, got {theta}")
    s = np.asarray(seq, dtype=float)
    if s.ndim != 1 or s.size < 2:
        raise ValueError("seq must be one-dimensional with at least 2 entries")
    if not np.all(s > 0.0):
        raise ValueError("seq entries must be positive")
    lhs = s[:-1] ** theta
    rhs = beta * (s[:-1] - s[1:])
    violations = [int(k) for k in np.nonzero(lhs > rhs)[0]]
    if theta == 0.0:
        kind = RecursionClass("finite")
    elif theta <= 1.0:
        kind = RecursionClass("linear", 1.0 - 1.0 / beta)
    else:
        kind = RecursionClass("sublinear", 1.0 / (theta - 1.0))
    return kind, violations


def fit_linear_rate(seq, tail_fraction=0.5):
    """Geometric mean of successive ratios over the tail window.

    The tail is the last ceil(n * tail_fraction) entries and must contain at
    least 3 positive values. Returns exp(mean log(s^{k+1}/s^k)).
    """
    if not (0.0 < tail_fraction <= 1.0):
        raise ValueError(f"tail_fraction must lie in (0, 1], got {tail_fraction}")
    s = np.asarray(seq, dtype=float)
    if s.ndim != 1:
        raise ValueError("seq must be one-dimensional")
    count = int(math.ceil(s.size * tail_fraction))
    tail = s[s.size - count :]
    if tail.size < 3:
        raise EstimationError(f"need at least 3 entries in the fit window, got {tail.size}")
    if not np.all(tail > 0.0):
        raise EstimationError("nonpositive entries in the fit window")
    return float(np.exp(np.mean(np.diff(np.log(tail)))))


_CONSTANT_FIELDS = ("q0", "q1", "q2", "q_hat", "c1_tilde", "c2_tilde", "c3_tilde")
_INPUT_FIELDS = (
    "mu",
    "L",
    "alpha_bar",
    "nu",
    "theta_KL",
    "rho_KL",
    "omega",
    "tau",
    "alpha0gamma0",
    "R",
    "eta",
    "eps",
)


@dataclass(frozen=True)
class RateConstants:
    """Bundle of theoretical constants plus the inputs they came from.

    Every field is optional; verify_bounds raises ClaimError when a claim
    needs a missing one. Present rate constants must be admissible: the q's
    in (0, 1), the c~'s positive.
    """

    q0: float | None = None
    q1: float | None = None
    q2: float | None = None
    q_hat: float | None = None
    c1_tilde: float | None = None
    c2_tilde: float | None = None
    c3_tilde: float | None = None
    mu: float | None = None
    L: float | None = None
    alpha_bar: float | None = None
    nu: float | None = None
    theta_KL: float | None = None
    rho_KL: float | None = None
    omega: float | None = None
    tau: float | None = None
    alpha0gamma0: float | None = None
    R: float | None = None
    eta: float | None = None
    eps: float | None = None

    def __post_init__(self):
        for name in ("q0", "q1", "q2", "q_hat"):
            v = getattr(self, name)
            if v is not None and not (0.0 < v < 1.0):
                raise ValueError(f"{name} must lie in (0, 1), got {v}")
        for name in ("c1_tilde", "c2_tilde", "c3_tilde"):
            v = getattr(self, name)
            if v is not None and not (v > 0.0):
                raise ValueError(f"{name} must be positive, got {v}")

    def to_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self) if getattr(self, f.name) is not None}

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown rate constant fields: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_inputs(
        cls,
        mu=None,
        L=None,
        alpha_bar=None,
        nu=None,
        theta_KL=None,
        rho_KL=None,
        omega=None,
        tau=None,
        alpha0gamma0=None,
        R=None,
        eta=None,
        eps=None,
    ):
        """Derive every constant the supplied inputs determine.

        q0/q1 need (mu, L, alpha_bar); q2 needs (theta_KL, rho_KL, L,
        alpha_bar); q_hat needs (mu, L, omega, tau, alpha0gamma0); the c~'s
        additionally need (R, eta).
        """
        q0 = q1 = q2 = q_hat = c1 = c2 = c3 = None
        if mu is not None and L is not None and alpha_bar is not None:
            q0, q1 = sga_strong_constants(mu, L, alpha_bar)
        if theta_KL is not None and rho_KL is not None and L is not None and alpha_bar is not None:
            q2 = kl_rate_q2(theta_KL, rho_KL, L, alpha_bar)
        if mu is not None and L is not None and omega is not None and tau is not None and alpha0gamma0 is not None:
            q_hat = adasga_qhat(mu, L, omega, tau, alpha0gamma0)
            if R is not None and eta is not None:
                c1, c2, c3 = adasga_strong_constants(mu, L, omega, alpha0gamma0, 1.0, R, eta)
        return cls(
            q0=q0,
            q1=q1,
            q2=q2,
            q_hat=q_hat,
            c1_tilde=c1,
            c2_tilde=c2,
            c3_tilde=c3,
            mu=mu,
            L=L,
            alpha_bar=alpha_bar,
            nu=nu,
            theta_KL=theta_KL,
            rho_KL=rho_KL,
            omega=omega,
            tau=tau,
            alpha0gamma0=alpha0gamma0,
            R=R,
            eta=eta,
            eps=eps,
        )


CLAIM_NAMES = (
    "q_linear_f",
    "q_linear_x",
    "k0_count",
    "mn_count_f",
    "mn_count_x",
    "kl_linear_f",
    "lyapunov_monotone",
    "lyapunov_hat_contraction",
    "step_floor",
    "step_ceiling",
)


@dataclass
class RateReport:
    constants: RateConstants
    empirical_rate: float
    bound_satisfied: dict
    iteration_counts: dict
    slack: dict

    @property
    def passed(self):
        return all(self.bound_satisfied.values())

    def to_dict(self):
        counts = {k: [a, b] for k, (a, b) in self.iteration_counts.items()}
        rate = self.empirical_rate if math.isfinite(self.empirical_rate) else None
        return {
            "constants": self.constants.to_dict(),
            "empirical_rate": rate,
            "bound_satisfied": dict(self.bound_satisfied),
            "iteration_counts": counts,
            "slack": dict(self.slack),
            "passed": self.passed,
        }

    def to_json(self, indent=2):
        return json.dumps(self.to_dict(), indent=indent)


def _need(value, claim, what):
    if value is None:
        raise ClaimError(f"claim {claim!r} needs {what}")
    return value


def _ratio_scan(values, bound, floor):
    """Largest consecutive ratio while values stay above floor, or None."""
    worst = None
    ok = True
    for k in range(len(values) - 1):
        if not (values[k] > floor):
            break
        ratio = values[k + 1] / values[k]
        if worst is None or ratio > worst:
            worst = ratio
        if ratio > bound + RATE_SLACK:
            ok = False
    return ok, worst


def _first_at_or_below(values, eps):
    idx = np.nonzero(np.asarray(values) <= eps)[0]
    return int(idx[0]) if idx.size else None


def _fit_above_floor(values, floor):
    """Tail-fit restricted to the above-floor prefix; None if too short."""
    vals = np.asarray(values, dtype=float)
    keep = vals.size
    for k, v in enumerate(vals):
        if not (v > floor):
            keep = k
            break
    if keep < 3:
        return None
    try:
        return fit_linear_rate(vals[:keep])
    except EstimationError:
        return None


def verify_bounds(trace, constants, claims):
    """Scan a trace against the stated claims; returns a RateReport.

    Supported claims:
      q_linear_f / q_linear_x    per-step gap / squared-distance ratio vs 1-q1 / 1-q0
      kl_linear_f                per-step gap ratio vs 1-q2
      k0_count                   iterations to ||grad|| <= eps vs K0
      mn_count_f / mn_count_x    iterations to gap / distance <= eps vs MN bound
      lyapunov_monotone          recorded Lyapunov column nonincreasing
      lyapunov_hat_contraction   strong-convexity Lyapunov vs 1-q_hat per step
      step_floor / step_ceiling  alpha*gamma against min{a0g0, omega/L} and omega/mu

    Missing ground truth or constants raise ClaimError naming the claim.
    """
    from .adasga import lyapunov_hat_from_trace  # local: avoid import cycle

    if trace.status == RunStatus.NUMERIC_FAILURE:
        raise ValueError("cannot verify bounds on a numerically failed trace")
    claims = list(claims)
    unknown = [c for c in claims if c not in CLAIM_NAMES]
    if unknown:
        raise ConfigError(f"unknown claims: {unknown}")

    satisfied, counts, slack = {}, {}, {}
    f0 = float(trace.f[0]) if trace.n_rows else 0.0
    gap_floor = noise_floor(f0)

    for claim in claims:
        if claim == "q_linear_f":
            q1 = _need(constants.q1, claim, "q1 (mu, L, alpha_bar inputs)")
            gap = _need(trace.gap, claim, "a gap column (ground truth f_star)")
            bound = 1.0 - q1
            ok, worst = _ratio_scan(gap, bound, gap_floor)
            fit = _fit_above_floor(gap, gap_floor)
            if fit is not None and fit > bound + RATE_SLACK:
                ok = False
                worst = max(worst, fit) if worst is not None else fit
            satisfied[claim] = ok
            slack[claim] = bound + RATE_SLACK - worst if worst is not None else None
        elif claim == "q_linear_x":
            q0 = _need(constants.q0, claim, "q0 (mu, L, alpha_bar inputs)")
            dist = _need(trace.dist_opt, claim, "a dist_opt column (ground truth x_star)")
            bound = 1.0 - q0
            dist2 = np.asarray(dist) ** 2
            floor = noise_floor(dist2[0]) if dist2.size else 0.0
            ok, worst = _ratio_scan(dist2, bound, floor)
            satisfied[claim] = ok
            slack[claim] = bound + RATE_SLACK - worst if worst is not None else None
        elif claim == "kl_linear_f":
            q2 = _need(constants.q2, claim, "q2 (theta_KL, rho_KL, L, alpha_bar inputs)")
            gap = _need(trace.gap, claim, "a gap column (ground truth f_star)")
            bound = 1.0 - q2
            ok, worst = _ratio_scan(gap, bound, gap_floor)
            satisfied[claim] = ok
            slack[claim] = bound + RATE_SLACK - worst if worst is not None else None
        elif claim == "k0_count":
            nu = _need(constants.nu, claim, "nu")
            L = _need(constants.L, claim, "L")
            abar = _need(constants.alpha_bar, claim, "alpha_bar")
            eps = _need(constants.eps, claim, "eps")
            gap = _need(trace.gap, claim, "a gap column (ground truth f_star)")
            bound = sga_grad_complexity(nu, L, abar, max(float(gap[0]), 0.0), eps)
            actual = _first_at_or_below(trace.grad_norm, eps)
            satisfied[claim] = actual is not None and actual <= bound
            counts[claim] = (actual, bound)
            slack[claim] = float(bound - actual) if actual is not None else None
        elif claim == "mn_count_f":
            q1 = _need(constants.q1, claim, "q1 (mu, L, alpha_bar inputs)")
            eps = _need(constants.eps, claim, "eps")
            gap = _need(trace.gap, claim, "a gap column (ground truth f_star)")
            gap0 = max(float(gap[0]), 0.0)
            bound = 1 if gap0 == 0.0 else mn_bound(eps, gap0, 1.0 - q1)
            actual = _first_at_or_below(gap, eps)
            satisfied[claim] = actual is not None and actual <= bound
            counts[claim] = (actual, bound)
            slack[claim] = float(bound - actual) if actual is not None else None
        elif claim == "mn_count_x":
            q0 = _need(constants.q0, claim, "q0 (mu, L, alpha_bar inputs)")
            eps = _need(constants.eps, claim, "eps")
            dist = _need(trace.dist_opt, claim, "a dist_opt column (ground truth x_star)")
            dist0 = float(dist[0])
            bound = 1 if dist0 == 0.0 else mn_bound(eps, dist0, math.sqrt(1.0 - q0))
            actual = _first_at_or_below(dist, eps)
            satisfied[claim] = actual is not None and actual <= bound
            counts[claim] = (actual, bound)
            slack[claim] = float(bound - actual) if actual is not None else None
        elif claim == "lyapunov_monotone":
            lyap = _need(trace.lyap, claim, "a lyap column (adaptive run with ground truth)")
            vals = np.asarray(lyap, dtype=float)
            defined = vals[np.isfinite(vals)]
            ok = True
            worst = None
            if defined.size:
                floor = noise_floor(defined[0])
                for k in range(defined.size - 1):
                    if not (defined[k] > floor):
                        break
                    excess = defined[k + 1] - defined[k] - LYAP_SLACK * (1.0 + defined[k])
                    if worst is None or excess > worst:
                        worst = excess
                    if excess > 0.0:
                        ok = False
            satisfied[claim] = ok
            slack[claim] = -worst if worst is not None else None
        elif claim == "lyapunov_hat_contraction":
            q_hat = _need(constants.q_hat, claim, "q_hat (mu, L, omega, tau, alpha0gamma0 inputs)")
            mu = _need(constants.mu, claim, "mu")
            L = _need(constants.L, claim, "L")
            if trace.dist_opt is None or trace.gap is None:
                raise ClaimError(f"claim {claim!r} needs ground truth (gap and dist_opt columns)")
            omega = constants.omega if constants.omega is not None else trace.meta.get("omega")
            vals = lyapunov_hat_from_trace(trace, mu, L, omega=omega)
            bound = 1.0 - q_hat
            floor = noise_floor(vals[0]) if vals.size else 0.0
            ok, worst = _ratio_scan(vals, bound, floor) if vals.size > 1 else (True, None)
            satisfied[claim] = ok
            slack[claim] = bound + RATE_SLACK - worst if worst is not None else None
        elif claim == "step_floor":
            omega = _need(constants.omega, claim, "omega")
            L = _need(constants.L, claim, "L (sampled smoothness modulus)")
            if trace.gamma is None:
                raise ClaimError(f"claim {claim!r} needs gamma column (adaptive run)")
            prod = np.asarray(trace.alpha) * np.asarray(trace.gamma)
            bound = min(float(prod[0]), omega / L) - STEP_SLACK
            worst = float(np.min(prod))
            satisfied[claim] = worst >= bound
            slack[claim] = worst - bound
        elif claim == "step_ceiling":
            omega = _need(constants.omega, claim, "omega")
            mu = _need(constants.mu, claim, "mu (sampled strong convexity modulus)")
            if trace.gamma is None:
                raise ClaimError(f"claim {claim!r} needs gamma column (adaptive run)")
            prod = np.asarray(trace.alpha) * np.asarray(trace.gamma)
            bound = omega / mu + STEP_SLACK
            # the ceiling holds from the first adapted step on; alpha0 is free
            worst = float(np.max(prod[1:])) if prod.size > 1 else None
            satisfied[claim] = worst is None or worst <= bound
            slack[claim] = bound - worst if worst is not None else None

    empirical = math.nan
    if trace.gap is not None:
        fit = _fit_above_floor(trace.gap, gap_floor)
        if fit is not None:
            empirical = fit
    return RateReport(
        constants=constants,
        empirical_rate=empirical,
        bound_satisfied=satisfied,
        iteration_counts=counts,
        slack=slack,
    )


def feasible_claims(trace, constants):
    """Claims whose required constants and trace columns are all present."""
    out = []
    has_gap = trace.gap is not None
    has_dist = trace.dist_opt is not None
    has_gamma = trace.gamma is not None
    every = trace.has_every_iterate()
    if constants.q1 is not None and has_gap:
        out.append("q_linear_f")
    if constants.q0 is not None and has_dist:
        out.append("q_linear_x")
    if constants.q2 is not None and has_gap:
        out.append("kl_linear_f")
    if None not in (constants.nu, constants.L, constants.alpha_bar, constants.eps) and has_gap:
        out.append("k0_count")
    if constants.q1 is not None and constants.eps is not None and has_gap:
        out.append("mn_count_f")
    if constants.q0 is not None and constants.eps is not None and has_dist:
        out.append("mn_count_x")
    if trace.lyap is not None:
        out.append("lyapunov_monotone")
    if (
        None not in (constants.q_hat, constants.mu, constants.L)
        and has_gap
        and has_dist
        and has_gamma
        and every
        and (constants.omega is not None or trace.meta.get("omega") is not None)
    ):
        out.append("lyapunov_hat_contraction")
    if constants.omega is not None and constants.L is not None and has_gamma:
        out.append("step_floor")
    if constants.omega is not None and constants.mu is not None and has_gamma:
        out.append("step_ceiling")
    return out
