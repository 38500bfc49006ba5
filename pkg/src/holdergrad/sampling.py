"""Seeded sampling helpers.

All randomness in the package flows through numpy's ``default_rng`` (the PCG64
bit generator, a documented 64-bit generator with a stable stream for a given
seed). Every sampling entry point takes an explicit seed or Generator, so any
run can be reproduced exactly. Points inside a ball are drawn uniformly via a
normalized Gaussian direction scaled by ``radius * U**(1/dim)``.
"""

import os

import numpy as np

from .errors import ConfigError

SEED_ENV_VAR = "HOLDERGRAD_SEED"


def rng_from_seed(seed):
    """Return the package-pinned generator (PCG64) for an integer seed."""
    return np.random.default_rng(int(seed))


def env_seed_override(default):
    """Return HOLDERGRAD_SEED if set, else the given default seed."""
    raw = os.environ.get(SEED_ENV_VAR)
    if raw is None:
        return default
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{SEED_ENV_VAR} must be an integer, got {raw!r}")


def sample_ball(center, radius, n, rng):
    """Draw n points uniformly from the closed Euclidean ball.

    Returns an (n, dim) array. Directions come from normalized Gaussians and
    radii from radius * U**(1/dim), the standard uniform-in-ball construction.
    """
    center = np.asarray(center, dtype=float)
    if radius <= 0:
        raise ValueError(f"radius must be positive, got {radius}")
    dim = center.shape[0]
    dirs = rng.standard_normal((n, dim))
    norms = np.linalg.norm(dirs, axis=1, keepdims=True)
    # A zero Gaussian vector has probability zero; guard anyway.
    norms[norms == 0.0] = 1.0
    radii = radius * rng.random(n) ** (1.0 / dim)
    return center + dirs / norms * radii[:, None]


def random_unit_vector(dim, rng):
    """One uniformly random unit vector."""
    v = rng.standard_normal(dim)
    n = np.linalg.norm(v)
    if n == 0.0:
        v[0] = 1.0
        n = 1.0
    return v / n
