"""Exception types shared across the package.

The harness maps these onto process exit codes: ConfigError -> 1,
DomainViolationError and NumericFailureError -> 2. Failing bound claims are
reported, not raised, and map to exit code 3.
"""


class HoldergradError(Exception):
    """Base class for package-specific errors."""


class ConfigError(HoldergradError):
    """Invalid or unknown configuration content."""


class DomainViolationError(HoldergradError):
    """A point left the objective's open domain."""


class NumericFailureError(HoldergradError):
    """A non-finite value appeared where a finite one is required."""


class EstimationError(HoldergradError):
    """Estimation input is degenerate (too few points, no spread, bad fit)."""


class ClaimError(HoldergradError):
    """A bound claim cannot be evaluated with the data at hand."""
