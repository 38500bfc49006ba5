"""One test per acceptance criterion, each printing a single PASS/FAIL line."""

import pytest

from holdergrad.acceptance import CRITERIA, run_criterion
from holdergrad.errors import ConfigError
from holdergrad.harness import suite


@pytest.mark.parametrize("name", list(CRITERIA))
def test_criterion(name, tmp_path):
    res = run_criterion(name, str(tmp_path))
    print(f"{'PASS' if res.passed else 'FAIL'} {name}: {res.detail}")
    assert res.passed, res.detail


def test_unknown_criterion(tmp_path):
    with pytest.raises(ConfigError):
        run_criterion("c00_everything", str(tmp_path))


def test_injected_wrong_constant_fails(tmp_path):
    # negative control: an inflated linear-rate constant must break c05
    summary = suite(str(tmp_path), only=["c05_strong_linear_rates"], inject={"q1": 0.9})
    assert summary["passed"] is False
    (entry,) = summary["criteria"]
    assert entry["name"] == "c05_strong_linear_rates"
    assert entry["passed"] is False
