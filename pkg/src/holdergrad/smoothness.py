"""Sampled smoothness / strong convexity / KL estimators and inequality checks.

Estimators draw seeded pairs from a ball (base pairs plus the antipodal
reflection of every sampled point through the ball center, which attains the
supremum for symmetric objectives) and report extremal difference ratios:

    holder ratio     ||grad f(x) - grad f(y)|| / ||x - y||^nu
    strong ratio     <grad f(y) - grad f(x), y - x> / ||y - x||^2

The sampled maximum is a lower bound on the true Hoelder modulus, the sampled
minimum an upper bound on the true strong convexity modulus. Checkers evaluate
the first-order characterizations of those moduli pairwise and report each
violation with a relative 1e-9 plus absolute 1e-12 tolerance; they never raise
on a violation.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EstimationError
from .problems import Region
from .sampling import rng_from_seed, sample_ball

CHECK_REL_TOL = 1e-9
CHECK_ABS_TOL = 1e-12


@dataclass(frozen=True)
class HolderEstimate:
    nu: float
    L_hat: float
    n_pairs: int
    region: Region
    argmax_pair: tuple


@dataclass(frozen=True)
class StrongConvexityEstimate:
    mu_hat: float
    n_pairs: int
    region: Region
    argmin_pair: tuple


@dataclass(frozen=True)
class KLEstimate:
    """Fit of (f - f_star)**theta <= rho * ||grad f|| from positive samples.

    theta_hat comes from a least-squares fit of log-gap against log-gradient
    (theta = 1/slope); rho_hat is the smallest coefficient covering every
    sample at that exponent; r_squared measures the log-log fit quality.
    """

    theta_hat: float
    rho_hat: float
    r_squared: float
    n_points: int


@dataclass(frozen=True)
class Violation:
    inequality: str
    pair_index: int
    lhs: float
    rhs: float
    slack: float  # rhs - lhs; negative means the inequality failed


@dataclass
class ViolationReport:
    """Outcome of pairwise inequality checks over one sampled pair set."""

    n_pairs: int
    checked: dict = field(default_factory=dict)
    skipped: dict = field(default_factory=dict)
    violations: list = field(default_factory=list)

    @property
    def passed(self):
        return not self.violations

    def count(self, inequality):
        return sum(1 for v in self.violations if v.inequality == inequality)

    def to_dict(self):
        return {
            "n_pairs": self.n_pairs,
            "passed": self.passed,
            "checked": dict(self.checked),
            "skipped": dict(self.skipped),
            "violations": [
                {
                    "inequality": v.inequality,
                    "pair_index": v.pair_index,
                    "lhs": v.lhs,
                    "rhs": v.rhs,
                    "slack": v.slack,
                }
                for v in self.violations
            ],
        }

    def to_json(self, indent=None):
        return json.dumps(self.to_dict(), indent=indent)


def sample_pair_set(region, n_pairs, seed):
    """Seeded pair sample: n_pairs uniform pairs plus all antipodal pairs.

    For every sampled point p the pair (p, 2c - p) with c the region center is
    appended. Coincident pairs are dropped. Returns (X, Y) arrays.
    """
    if n_pairs < 1:
        raise ValueError(f"n_pairs must be >= 1, got {n_pairs}")
    rng = rng_from_seed(seed)
    X = sample_ball(region.center, region.radius, n_pairs, rng)
    Y = sample_ball(region.center, region.radius, n_pairs, rng)
    refl_x = 2.0 * region.center - X
    refl_y = 2.0 * region.center - Y
    P = np.concatenate([X, X, Y])
    Q = np.concatenate([Y, refl_x, refl_y])
    keep = np.linalg.norm(P - Q, axis=1) > 0.0
    return P[keep], Q[keep]


def _pair_table(obj, X, Y, nu):
    """Per-pair quantities reused by every estimator and checker."""
    fx, gx = obj.eval_many(X)
    fy, gy = obj.eval_many(Y)
    dx = Y - X
    dg = gy - gx
    ndx = np.linalg.norm(dx, axis=1)
    ndg = np.linalg.norm(dg, axis=1)
    inner = np.einsum("ij,ij->i", dg, dx)
    breg_xy = fy - fx - np.einsum("ij,ij->i", gx, dx)
    breg_yx = fx - fy + np.einsum("ij,ij->i", gy, dx)
    return {
        "X": X, "Y": Y, "fx": fx, "fy": fy, "gx": gx, "gy": gy,
        "dx": dx, "dg": dg, "ndx": ndx, "ndg": ndg, "inner": inner,
        "breg_xy": breg_xy, "breg_yx": breg_yx, "nu": nu,
    }


def _membership_masks(table, region, L):
    """Membership of the shifted points required by the lower characterizations.

    With d = ||dg||^((1-nu)/nu) dg, inequality (3) at ordered pair (x, y) needs
    y - d/L^(1/nu) in the region; the reversed order needs x + d/L^(1/nu); the
    cocoercivity-type bound (4) needs both. At nu = 1 the cocoercivity bound
    holds unconditionally.
    """
    nu = table["nu"]
    dg, ndg = table["dg"], table["ndg"]
    # ||offset|| = (||dg|| / L)^(1/nu); build the vector without overflow.
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(ndg > 0.0, (ndg / L) ** (1.0 / nu) / np.where(ndg > 0.0, ndg, 1.0), 0.0)
    off = dg * scale[:, None]
    m_xy = region.contains_many(table["Y"] - off)
    m_yx = region.contains_many(table["X"] + off)
    if nu == 1.0:
        m_both = np.ones_like(m_xy, dtype=bool)
    else:
        m_both = m_xy & m_yx
    return m_xy, m_yx, m_both


def _record(report, name, lhs, rhs, mask=None):
    """Mark violations of lhs <= rhs (elementwise) under the optional mask."""
    lhs = np.broadcast_to(np.asarray(lhs, dtype=float), rhs.shape)
    if mask is None:
        mask = np.ones(rhs.shape, dtype=bool)
    else:
        report.skipped[name] = int(np.size(mask) - np.count_nonzero(mask))
    tol = CHECK_REL_TOL * np.maximum(np.abs(lhs), np.abs(rhs)) + CHECK_ABS_TOL
    bad = np.flatnonzero(mask & (lhs > rhs + tol))
    report.checked[name] = int(np.count_nonzero(mask))
    for i in bad:
        report.violations.append(
            Violation(name, int(i), float(lhs[i]), float(rhs[i]), float(rhs[i] - lhs[i]))
        )


def _resolve_pairs(obj, region, n_pairs, seed, pairs):
    if pairs is not None:
        X, Y = pairs
        return np.asarray(X, dtype=float), np.asarray(Y, dtype=float)
    return sample_pair_set(region, n_pairs, seed)


def estimate_holder_modulus(obj, region, nu, n_pairs=1000, seed=0, pairs=None):
    """Sampled Hoelder gradient modulus: the largest pairwise ratio observed.

    The result is a lower bound on the true modulus over the region. A
    constant-gradient (affine) objective yields L_hat = 0.
    """
    if not (0.0 < nu <= 1.0):
        raise ValueError(f"nu must lie in (0, 1], got {nu}")
    X, Y = _resolve_pairs(obj, region, n_pairs, seed, pairs)
    if len(X) == 0:
        raise EstimationError("no usable pairs (all coincident)")
    t = _pair_table(obj, X, Y, nu)
    ratios = t["ndg"] / t["ndx"] ** nu
    i = int(np.argmax(ratios))
    return HolderEstimate(
        nu=nu,
        L_hat=float(ratios[i]),
        n_pairs=len(X),
        region=region,
        argmax_pair=(X[i].copy(), Y[i].copy()),
    )


def estimate_strong_convexity(obj, region, n_pairs=1000, seed=0, pairs=None):
    """Sampled strong convexity modulus: the smallest pairwise ratio observed.

    The result is an upper bound on the true modulus over the region.
    """
    X, Y = _resolve_pairs(obj, region, n_pairs, seed, pairs)
    if len(X) == 0:
        raise EstimationError("no usable pairs (all coincident)")
    t = _pair_table(obj, X, Y, 1.0)
    ratios = t["inner"] / t["ndx"] ** 2
    i = int(np.argmin(ratios))
    return StrongConvexityEstimate(
        mu_hat=float(ratios[i]),
        n_pairs=len(X),
        region=region,
        argmin_pair=(X[i].copy(), Y[i].copy()),
    )


def check_smooth_characterizations(obj, region, L, n_pairs=1000, seed=0, pairs=None):
    """Check the L-smooth convex characterizations (nu = 1) pairwise.

    Inequalities: cocoercivity ||dg||^2 <= L <dg, dx>, monotonicity
    0 <= <dg, dx> <= L ||dx||^2, and the Bregman bounds
    0 <= f(y) - f(x) - <grad f(x), y - x> <= (L/2) ||dx||^2 in both orders.
    """
    if not (L > 0):
        raise ValueError(f"L must be positive, got {L}")
    X, Y = _resolve_pairs(obj, region, n_pairs, seed, pairs)
    t = _pair_table(obj, X, Y, 1.0)
    report = ViolationReport(n_pairs=len(X))
    _record(report, "cocoercivity", t["ndg"] ** 2, L * t["inner"])
    _record(report, "monotone_lower", 0.0, t["inner"])
    _record(report, "monotone_upper", t["inner"], L * t["ndx"] ** 2)
    _record(report, "bregman_lower_xy", 0.0, t["breg_xy"])
    _record(report, "bregman_lower_yx", 0.0, t["breg_yx"])
    _record(report, "bregman_upper_xy", t["breg_xy"], 0.5 * L * t["ndx"] ** 2)
    _record(report, "bregman_upper_yx", t["breg_yx"], 0.5 * L * t["ndx"] ** 2)
    return report


def check_holder_inequalities(obj, region, nu, L, n_pairs=1000, seed=0, pairs=None):
    """Check the four nu-Hoelder smoothness inequalities pairwise.

    (1)  0 <= <dg, dx> <= L ||dx||^(1+nu)
    (2)  0 <= Bregman(x, y) <= L/(1+nu) ||dx||^(1+nu)           (both orders)
    (3)  Bregman(x, y) >= nu/((1+nu) L^(1/nu)) ||dg||^((1+nu)/nu)
         when the shifted point stays in the region               (both orders)
    (4)  <dg, dx> >= 2 nu/((1+nu) L^(1/nu)) ||dg||^((1+nu)/nu)
         when both shifted points stay in the region (unconditional at nu = 1)

    Pairs skipped by the membership conditions are counted per inequality.
    """
    if not (0.0 < nu <= 1.0):
        raise ValueError(f"nu must lie in (0, 1], got {nu}")
    if not (L > 0):
        raise ValueError(f"L must be positive, got {L}")
    X, Y = _resolve_pairs(obj, region, n_pairs, seed, pairs)
    t = _pair_table(obj, X, Y, nu)
    m_xy, m_yx, m_both = _membership_masks(t, region, L)
    pow_dx = t["ndx"] ** (1.0 + nu)
    pow_dg = t["ndg"] ** ((1.0 + nu) / nu)
    c3 = nu / ((1.0 + nu) * L ** (1.0 / nu))
    report = ViolationReport(n_pairs=len(X))
    _record(report, "holder_monotone_lower", 0.0, t["inner"])
    _record(report, "holder_monotone_upper", t["inner"], L * pow_dx)
    _record(report, "holder_bregman_lower_xy", 0.0, t["breg_xy"])
    _record(report, "holder_bregman_lower_yx", 0.0, t["breg_yx"])
    _record(report, "holder_bregman_upper_xy", t["breg_xy"], (L / (1.0 + nu)) * pow_dx)
    _record(report, "holder_bregman_upper_yx", t["breg_yx"], (L / (1.0 + nu)) * pow_dx)
    _record(report, "holder_gradient_gap_xy", c3 * pow_dg, t["breg_xy"], mask=m_xy)
    _record(report, "holder_gradient_gap_yx", c3 * pow_dg, t["breg_yx"], mask=m_yx)
    _record(report, "holder_cocoercivity", 2.0 * c3 * pow_dg, t["inner"],
            mask=None if nu == 1.0 else m_both)
    return report


def check_strong_smooth_bound(obj, region, mu, L, n_pairs=1000, seed=0, pairs=None):
    """Check the joint strong convexity / smoothness lower bound pairwise.

    <dg, dx> >= mu L/(mu+L) ||dx||^2 + 1/(mu+L) ||dg||^2, requiring 0 < mu <= L.
    """
    if not (mu > 0):
        raise ValueError(f"mu must be positive, got {mu}")
    if mu > L:
        raise ValueError(f"mu={mu} exceeds L={L}")
    X, Y = _resolve_pairs(obj, region, n_pairs, seed, pairs)
    t = _pair_table(obj, X, Y, 1.0)
    report = ViolationReport(n_pairs=len(X))
    lhs = (mu * L / (mu + L)) * t["ndx"] ** 2 + t["ndg"] ** 2 / (mu + L)
    _record(report, "strong_smooth_lower", lhs, t["inner"])
    return report


def characterization_modulus(obj, region, nu, n_pairs=1000, seed=0, pairs=None):
    """Tightest L making every characterization inequality hold on the sample.

    The plain gradient-ratio supremum only certifies the gradient-difference
    inequality; each remaining characterization has its own per-pair ratio
    functional (all of them valid lower bounds on the true modulus). This
    returns their maximum, iterating the membership-gated functionals to a
    fixed point because the membership conditions themselves depend on L.
    """
    if not (0.0 < nu <= 1.0):
        raise ValueError(f"nu must lie in (0, 1], got {nu}")
    X, Y = _resolve_pairs(obj, region, n_pairs, seed, pairs)
    if len(X) == 0:
        raise EstimationError("no usable pairs (all coincident)")
    t = _pair_table(obj, X, Y, nu)
    pow_dx = t["ndx"] ** (1.0 + nu)
    pow_dg = t["ndg"] ** ((1.0 + nu) / nu)
    ungated = [
        t["inner"] / pow_dx,
        (1.0 + nu) * t["breg_xy"] / pow_dx,
        (1.0 + nu) * t["breg_yx"] / pow_dx,
    ]
    if nu == 1.0:
        with np.errstate(divide="ignore", invalid="ignore"):
            coco = np.where(t["inner"] > 0.0, t["ndg"] ** 2 / t["inner"], 0.0)
        ungated.append(coco)
    L = max(float(np.max(r)) for r in ungated)
    if not (L > 0):
        raise EstimationError(f"sample gives a nonpositive modulus ({L}); objective may be affine")

    def gated_max(L_cur):
        m_xy, m_yx, m_both = _membership_masks(t, region, L_cur)
        best = 0.0
        with np.errstate(divide="ignore", invalid="ignore"):
            for breg, mask in ((t["breg_xy"], m_xy), (t["breg_yx"], m_yx)):
                sel = mask & (breg > 0.0) & (pow_dg > 0.0)
                if np.any(sel):
                    r3 = ((nu / (1.0 + nu)) * pow_dg[sel] / breg[sel]) ** nu
                    best = max(best, float(np.max(r3)))
            sel = (t["inner"] > 0.0) & (pow_dg > 0.0)
            if nu < 1.0:
                sel &= m_both
            if np.any(sel):
                r4 = ((2.0 * nu / (1.0 + nu)) * pow_dg[sel] / t["inner"][sel]) ** nu
                best = max(best, float(np.max(r4)))
        return best

    # Larger L admits more pairs into the gated checks, so iterate upward until
    # stable; each functional stays below the true modulus, so this terminates.
    for _ in range(20):
        L_next = max(L, gated_max(L))
        if L_next == L:
            break
        L = L_next
    return L


def lemma_compatible_mu(obj, pairs, L):
    """Largest mu satisfying both strong convexity ratios and the joint bound.

    Per pair, the joint bound <dg,dx> >= mu L/(mu+L)||dx||^2 + ||dg||^2/(mu+L)
    rearranges to mu <= (<dg,dx> L - ||dg||^2) / (L ||dx||^2 - <dg,dx>); this
    returns the minimum of that critical value and of the basic ratio
    <dg,dx>/||dx||^2 over the sample. Intended to be called with the L from
    characterization_modulus, which makes every critical value nonnegative.
    """
    if not (L > 0):
        raise ValueError(f"L must be positive, got {L}")
    X, Y = np.asarray(pairs[0], dtype=float), np.asarray(pairs[1], dtype=float)
    t = _pair_table(obj, X, Y, 1.0)
    mu = float(np.min(t["inner"] / t["ndx"] ** 2))
    denom = L * t["ndx"] ** 2 - t["inner"]
    sel = denom > 1e-12 * L * t["ndx"] ** 2
    if np.any(sel):
        crit = (t["inner"][sel] * L - t["ndg"][sel] ** 2) / denom[sel]
        mu = min(mu, float(np.min(crit)))
    return mu


def estimate_kl(points, min_points=8):
    """Fit a KL exponent/coefficient pair from (f_gap, grad_norm) samples.

    points is an (n, 2) array. Rows with nonpositive or non-finite entries are
    filtered out; at least min_points must survive, and the log-gradient values
    need nonzero spread. The exponent must land in (0, 1).
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError(f"points must be an (n, 2) array, got shape {pts.shape}")
    keep = np.all(np.isfinite(pts), axis=1) & np.all(pts > 0.0, axis=1)
    gaps, grads = pts[keep, 0], pts[keep, 1]
    n = len(gaps)
    if n < min_points:
        raise EstimationError(f"need at least {min_points} positive samples, got {n}")
    lg = np.log(grads)
    lf = np.log(gaps)
    if float(np.std(lg)) < 1e-12:
        raise EstimationError("gradient norms have no spread; cannot fit an exponent")
    slope, intercept = np.polyfit(lg, lf, 1)
    resid = lf - (slope * lg + intercept)
    ss_tot = float(np.sum((lf - lf.mean()) ** 2))
    r_squared = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    if not (slope > 0) or not math.isfinite(slope):
        raise EstimationError(f"log-log slope {slope} is not positive")
    theta = 1.0 / float(slope)
    if not (0.0 < theta < 1.0):
        raise EstimationError(f"fitted exponent {theta} outside (0, 1)")
    rho = float(np.max(gaps**theta / grads))
    return KLEstimate(theta_hat=theta, rho_hat=rho, r_squared=r_squared, n_points=n)
