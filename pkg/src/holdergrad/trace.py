"""Run traces shared by both solvers.

A trace has one row per visited iterate (row count = iterations + 1). Column
conventions: row k holds the values indexed k by the step-size recurrences, so
``alpha[k]`` (and for the adaptive solver ``gamma[k]``, ``theta[k]``) is the
step data at x^k; the final row's step is recorded but never applied.
``lip[k]`` is the local gradient-change ratio between x^k and x^{k-1} and is
undefined (nan) at k = 0, as is ``lyap[k]`` which needs two iterates.
"""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np


class RunStatus(str, Enum):
    CONVERGED = "converged"
    MAX_ITER = "max_iter"
    DOMAIN_VIOLATION = "domain_violation"
    NUMERIC_FAILURE = "numeric_failure"


@dataclass
class Trace:
    f: np.ndarray
    grad_norm: np.ndarray
    alpha: np.ndarray
    gamma: np.ndarray | None = None
    theta: np.ndarray | None = None
    lip: np.ndarray | None = None
    gap: np.ndarray | None = None
    dist_opt: np.ndarray | None = None
    lyap: np.ndarray | None = None
    status: RunStatus | None = None
    f_star: float | None = None
    snapshots: np.ndarray | None = None
    snapshot_ks: np.ndarray | None = None
    x_final: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.f)
        for name in ("grad_norm", "alpha", "gamma", "theta", "lip", "gap", "dist_opt", "lyap"):
            col = getattr(self, name)
            if col is not None and len(col) != n:
                raise ValueError(f"column {name} has {len(col)} rows, expected {n}")

    @property
    def n_rows(self):
        return len(self.f)

    @property
    def iterations(self):
        return len(self.f) - 1

    def snapshot_at(self, k):
        """The stored iterate x^k, or None if k was not snapshotted."""
        if self.snapshots is None:
            return None
        idx = np.flatnonzero(self.snapshot_ks == k)
        if idx.size == 0:
            return None
        return self.snapshots[idx[0]]

    def has_every_iterate(self):
        return (
            self.snapshots is not None
            and self.snapshot_ks is not None
            and len(self.snapshot_ks) == self.n_rows
            and np.array_equal(self.snapshot_ks, np.arange(self.n_rows))
        )


def default_snapshot_every(dim):
    """Snapshot cadence: every iterate for small problems, every 10th otherwise."""
    return 1 if dim <= 10 else 10
