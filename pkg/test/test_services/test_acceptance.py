# test/test_services/test_acceptance.py
import pytest

from app.schemas.results import Verdict
from app.services import acceptance
from app.services.errors import ReliabilityError


@pytest.mark.parametrize("number", [1, 2, 3, 10])
def test_fast_criteria_pass(number):
    verdict = acceptance.CRITERIA[number]()
    assert verdict.criterion == number
    assert verdict.passed, verdict.measured


@pytest.mark.slow
@pytest.mark.parametrize("number", [4, 5, 6, 7, 8, 9])
def test_heavy_criteria_pass(number):
    verdict = acceptance.CRITERIA[number](quick=True)
    assert verdict.passed, verdict.measured


def test_trichotomy_reports_the_two_sphere_gap():
    verdict = acceptance.exactness_trichotomy()
    assert verdict.measured["S1"] < 1e-10
    assert verdict.measured["S3"] < 1e-8
    assert all(v > 1e-3 for k, v in verdict.measured.items() if k.startswith("S2"))
    # signed_j has no real-valued wrap on S2; it is reported, not counted as a gap
    assert "S2_signed_j" not in verdict.measured
    assert verdict.measured["refused_branches"] == 1.0
    assert "signed_j" in verdict.detail
    assert verdict.passed


def test_run_suite_selects_in_order():
    verdicts = acceptance.run_suite([10, 3])
    assert [v.criterion for v in verdicts] == [3, 10]
    assert all(isinstance(v, Verdict) for v in verdicts)


def test_run_suite_turns_numerical_errors_into_failures(monkeypatch):
    def broken(quick=False):
        raise ReliabilityError("too many killed paths")

    monkeypatch.setitem(acceptance.CRITERIA, 8, broken)
    (verdict,) = acceptance.run_suite([8])
    assert verdict.passed is False
    assert verdict.criterion == 8
    assert "killed" in verdict.detail


def test_run_suite_rejects_unknown_criteria():
    with pytest.raises(KeyError):
        acceptance.run_suite([11])


@pytest.mark.slow
def test_three_dimensional_e_is_measured_from_the_densities():
    verdict = acceptance.efunction_suite(quick=True)
    assert "S3/H3 e_ratio" in verdict.threshold
    assert verdict.measured["n3_deviation"] < 1e-10
