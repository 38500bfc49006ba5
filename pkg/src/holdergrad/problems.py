"""Convex test objectives with value/gradient oracles and known ground truth.

Every objective is a deterministic map x -> (value, gradient) on an open convex
domain, optionally annotated with what is provably known about it: minimizer,
optimal value, Hoelder gradient exponent nu and modulus L, strong convexity
modulus mu, and a Kurdyka-Lojasiewicz (KL) pair (theta, rho). Estimators and
checkers elsewhere in the package consume only this interface.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DomainViolationError, NumericFailureError

_TRUTH_REL_TOL = 1e-12


@dataclass(frozen=True)
class Region:
    """Closed Euclidean ball used as a sampling / validity region."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        if not np.all(np.isfinite(self.center)):
            raise ValueError("region center must be finite")
        if not (self.radius > 0):
            raise ValueError(f"region radius must be positive, got {self.radius}")

    @property
    def dim(self):
        return self.center.shape[0]

    def contains(self, x, rel_tol=1e-12):
        """Membership with a small relative slack on the radius."""
        x = np.asarray(x, dtype=float)
        return float(np.linalg.norm(x - self.center)) <= self.radius * (1.0 + rel_tol) + rel_tol

    def contains_many(self, xs, rel_tol=1e-12):
        """Vectorized membership over an (n, dim) array; returns a bool array."""
        xs = np.asarray(xs, dtype=float)
        dist = np.linalg.norm(xs - self.center, axis=1)
        return dist <= self.radius * (1.0 + rel_tol) + rel_tol


@dataclass(frozen=True)
class GroundTruth:
    """What is analytically known about an objective.

    All fields are optional. ``holder_L`` is the Hoelder gradient modulus for
    exponent ``nu`` on ``holder_region`` (None means it holds globally), and
    ``mu`` the strong convexity modulus on ``mu_region``. ``kl_theta`` and
    ``kl_rho`` describe the inequality (f(x) - f_star)**theta <= rho * ||grad||.
    """

    f_star: float | None = None
    x_star: np.ndarray | None = None
    nu: float | None = None
    holder_L: float | None = None
    holder_region: Region | None = None
    mu: float | None = None
    mu_region: Region | None = None
    kl_theta: float | None = None
    kl_rho: float | None = None

    def __post_init__(self):
        if self.x_star is not None:
            object.__setattr__(self, "x_star", np.asarray(self.x_star, dtype=float))
        if self.nu is not None and not (0.0 < self.nu <= 1.0):
            raise ValueError(f"nu must lie in (0, 1], got {self.nu}")
        for name in ("holder_L", "kl_rho"):
            v = getattr(self, name)
            if v is not None and not (v > 0):
                raise ValueError(f"{name} must be positive, got {v}")
        if self.mu is not None and self.mu < 0:
            raise ValueError(f"mu must be nonnegative, got {self.mu}")
        if self.kl_theta is not None and not (0.0 < self.kl_theta <= 1.0):
            raise ValueError(f"kl_theta must lie in (0, 1], got {self.kl_theta}")
        if self.mu is not None and self.holder_L is not None and self.mu > self.holder_L:
            raise ValueError(
                f"mu={self.mu} exceeds holder_L={self.holder_L}; "
                "the strong convexity modulus never exceeds the gradient modulus"
            )


class Objective:
    """Deterministic first-order oracle for a smooth convex function.

    Arguments:
        dim: ambient dimension.
        eval_fn: map from an (dim,) array to (value, gradient).
        in_domain: optional open-domain predicate; default accepts everything.
        truth: optional GroundTruth annotation. If it carries both x_star and
            f_star, consistency (relative 1e-12) is verified at construction.
        name: short identifier used in traces and reports.
        batch_eval_fn: optional vectorized map from (n, dim) arrays to
            (values (n,), gradients (n, dim)); used by the sampled estimators.
    """

    def __init__(self, dim, eval_fn, in_domain=None, truth=None, name="", batch_eval_fn=None):
        self.dim = int(dim)
        self._eval = eval_fn
        self._in_domain = in_domain
        self.truth = truth
        self.name = name
        self._batch_eval = batch_eval_fn
        if truth is not None and truth.x_star is not None and truth.f_star is not None:
            v, _ = self.eval(truth.x_star)
            if abs(v - truth.f_star) > _TRUTH_REL_TOL * (1.0 + abs(truth.f_star)):
                raise ValueError(
                    f"ground truth mismatch for {name!r}: f(x_star)={v!r} vs f_star={truth.f_star!r}"
                )

    def in_domain(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise ValueError(f"expected shape ({self.dim},), got {x.shape}")
        if not np.all(np.isfinite(x)):
            return False
        if self._in_domain is None:
            return True
        return bool(self._in_domain(x))

    def eval(self, x):
        """Return (value, gradient) at x; raise if x is outside the domain."""
        x = np.asarray(x, dtype=float)
        if not self.in_domain(x):
            raise DomainViolationError(f"{self.name or 'objective'}: point outside domain")
        value, grad = self._eval(x)
        value = float(value)
        grad = np.asarray(grad, dtype=float)
        if not np.isfinite(value) or not np.all(np.isfinite(grad)):
            raise NumericFailureError(f"{self.name or 'objective'}: non-finite oracle output")
        return value, grad

    def value(self, x):
        return self.eval(x)[0]

    def gradient(self, x):
        return self.eval(x)[1]

    def eval_many(self, xs):
        """Vectorized oracle over an (n, dim) array of in-domain points."""
        xs = np.asarray(xs, dtype=float)
        if self._batch_eval is not None:
            vals, grads = self._batch_eval(xs)
            return np.asarray(vals, dtype=float), np.asarray(grads, dtype=float)
        vals = np.empty(xs.shape[0])
        grads = np.empty_like(xs)
        for i, x in enumerate(xs):
            vals[i], grads[i] = self.eval(x)
        return vals, grads


def make_quadratic(A, b):
    """Quadratic objective f(x) = 0.5 x'Ax - b'x for symmetric positive definite A.

    Ground truth: x_star = A^-1 b, mu and L are the extreme eigenvalues, nu = 1,
    and the KL pair is (1/2, 1/sqrt(2 mu)).
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"A must be square, got shape {A.shape}")
    if b.shape != (A.shape[0],):
        raise ValueError(f"b must have shape ({A.shape[0]},), got {b.shape}")
    scale = max(1.0, float(np.max(np.abs(A))))
    if np.max(np.abs(A - A.T)) > 1e-12 * scale:
        raise ValueError("A must be symmetric")
    eigs = np.linalg.eigvalsh(A)
    if eigs[0] <= 0:
        raise ValueError(f"A must be positive definite; smallest eigenvalue {eigs[0]}")
    x_star = np.linalg.solve(A, b)

    def _eval(x):
        Ax = A @ x
        return 0.5 * float(x @ Ax) - float(b @ x), Ax - b

    def _batch(xs):
        XA = xs @ A
        vals = 0.5 * np.einsum("ij,ij->i", XA, xs) - xs @ b
        return vals, XA - b

    obj = Objective(
        dim=A.shape[0],
        eval_fn=_eval,
        truth=None,
        name="quadratic",
        batch_eval_fn=_batch,
    )
    f_star, _ = obj.eval(x_star)
    obj.truth = GroundTruth(
        f_star=f_star,
        x_star=x_star,
        nu=1.0,
        holder_L=float(eigs[-1]),
        mu=float(eigs[0]),
        kl_theta=0.5,
        kl_rho=1.0 / np.sqrt(2.0 * eigs[0]),
    )
    return obj


def make_power_norm(nu, dim):
    """Power-of-norm objective f(x) = ||x||^(1+nu) / (1+nu) with 0 < nu <= 1.

    Its gradient ||x||^(nu-1) x is globally nu-Hoelder with modulus 2**(1-nu)
    (attained by antipodal pairs), the minimizer is the origin with f_star = 0,
    and the KL inequality holds with theta = nu/(1+nu),
    rho = (1+nu)**(-nu/(1+nu)) as an identity.
    """
    nu = float(nu)
    if not (0.0 < nu <= 1.0):
        raise ValueError(f"nu must lie in (0, 1], got {nu}")
    dim = int(dim)
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")

    def _eval(x):
        n = float(np.linalg.norm(x))
        if n == 0.0:
            return 0.0, np.zeros_like(x)
        return n ** (1.0 + nu) / (1.0 + nu), n ** (nu - 1.0) * x

    def _batch(xs):
        n = np.linalg.norm(xs, axis=1)
        vals = n ** (1.0 + nu) / (1.0 + nu)
        safe = np.where(n == 0.0, 1.0, n)
        grads = (safe ** (nu - 1.0))[:, None] * xs
        grads[n == 0.0] = 0.0
        return vals, grads

    truth = GroundTruth(
        f_star=0.0,
        x_star=np.zeros(dim),
        nu=nu,
        holder_L=2.0 ** (1.0 - nu),
        mu=1.0 if nu == 1.0 else None,
        kl_theta=nu / (1.0 + nu),
        kl_rho=(1.0 + nu) ** (-nu / (1.0 + nu)),
    )
    return Objective(dim, _eval, truth=truth, name=f"power_norm_nu{nu:g}", batch_eval_fn=_batch)


def make_log_sum_exp(A, b, x_star=None):
    """Softmax objective f(x) = log sum_i exp(<a_i, x> + b_i).

    Smooth and convex but generally not strongly convex; no modulus is claimed
    in the ground truth. A known minimizer may be passed as x_star (its gradient
    must vanish to 1e-10); symmetric instances such as rows (1), (-1) with b = 0
    have x_star = 0.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    if A.ndim != 2:
        raise ValueError(f"A must be 2-d, got shape {A.shape}")
    if b.shape != (A.shape[0],):
        raise ValueError(f"b must have shape ({A.shape[0]},), got {b.shape}")

    def _eval(x):
        z = A @ x + b
        m = float(np.max(z))
        lse = m + float(np.log(np.sum(np.exp(z - m))))
        p = np.exp(z - lse)
        return lse, A.T @ p

    def _batch(xs):
        Z = xs @ A.T + b
        m = Z.max(axis=1)
        vals = m + np.log(np.exp(Z - m[:, None]).sum(axis=1))
        P = np.exp(Z - vals[:, None])
        return vals, P @ A

    obj = Objective(A.shape[1], _eval, truth=None, name="log_sum_exp", batch_eval_fn=_batch)
    truth = GroundTruth(nu=1.0)
    if x_star is not None:
        x_star = np.asarray(x_star, dtype=float)
        f_star, g_star = obj.eval(x_star)
        if np.linalg.norm(g_star) > 1e-10 * (1.0 + float(np.max(np.abs(A)))):
            raise ValueError(f"supplied x_star is not stationary; ||grad|| = {np.linalg.norm(g_star)}")
        truth = GroundTruth(f_star=f_star, x_star=x_star, nu=1.0)
    obj.truth = truth
    return obj


def make_poisson(A, b):
    """Poisson-regression objective f(x) = sum_i (<a_i, x> - b_i log <a_i, x>).

    Defined on the open domain {x : Ax > 0}; A must be entrywise nonnegative
    with no zero row and b strictly positive. When A is square and invertible
    the minimizer is x_star = A^-1 b (which makes every <a_i, x_star> = b_i > 0).
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    if A.ndim != 2:
        raise ValueError(f"A must be 2-d, got shape {A.shape}")
    if b.shape != (A.shape[0],):
        raise ValueError(f"b must have shape ({A.shape[0]},), got {b.shape}")
    if np.any(A < 0):
        raise ValueError("A must be entrywise nonnegative")
    if np.any(np.all(A == 0, axis=1)):
        raise ValueError("A must not contain a zero row")
    if np.any(b <= 0):
        raise ValueError("b must be strictly positive")

    def _in_domain(x):
        return bool(np.all(A @ x > 0))

    def _eval(x):
        y = A @ x
        return float(np.sum(y - b * np.log(y))), A.T @ (1.0 - b / y)

    def _batch(xs):
        Y = xs @ A.T
        vals = np.sum(Y - b * np.log(Y), axis=1)
        grads = (1.0 - b / Y) @ A
        return vals, grads

    obj = Objective(A.shape[1], _eval, in_domain=_in_domain, truth=None, name="poisson",
                    batch_eval_fn=_batch)
    truth = GroundTruth(nu=1.0)
    if A.shape[0] == A.shape[1]:
        try:
            x_star = np.linalg.solve(A, b)
        except np.linalg.LinAlgError:
            x_star = None
        if x_star is not None and obj.in_domain(x_star):
            f_star, _ = obj.eval(x_star)
            truth = GroundTruth(f_star=f_star, x_star=x_star, nu=1.0)
    obj.truth = truth
    return obj


def finite_diff_gradient(obj, x, h=None):
    """Central-difference gradient of obj at x.

    The default step is 1e-6 * (1 + ||x||). Probe points x +- h e_i must lie in
    the domain; a DomainViolationError from the oracle propagates unchanged.
    """
    x = np.asarray(x, dtype=float)
    if h is None:
        h = 1e-6 * (1.0 + float(np.linalg.norm(x)))
    if not (h > 0):
        raise ValueError(f"h must be positive, got {h}")
    g = np.empty_like(x)
    for i in range(x.shape[0]):
        e = np.zeros_like(x)
        e[i] = h
        fp, _ = obj.eval(x + e)
        fm, _ = obj.eval(x - e)
        g[i] = (fp - fm) / (2.0 * h)
    return g


def builtin_problems():
    """The shipped problem set: name -> (objective, sampling region).

    Regions are chosen inside each domain with enough clearance that sampled
    points, finite-difference probes, and solver trajectories started in the
    region stay strictly feasible.
    """
    quad = make_quadratic(np.diag([1.0, 10.0]), np.zeros(2))
    power_half = make_power_norm(0.5, 2)
    power_one = make_power_norm(1.0, 2)
    softmax = make_log_sum_exp([[1.0], [-1.0]], [0.0, 0.0], x_star=[0.0])
    poisson = make_poisson([[1.0]], [1.0])
    return {
        "quadratic_well": (quad, Region(np.zeros(2), 2.0)),
        "power_half": (power_half, Region(np.zeros(2), 1.0)),
        "power_one": (power_one, Region(np.zeros(2), 1.0)),
        "softmax_pair": (softmax, Region(np.zeros(1), 2.0)),
        "poisson_unit": (poisson, Region(np.array([1.5]), 1.2)),
    }
