import math

import numpy as np
import pandas as pd
import pytest

from rumorlab import experiments
from rumorlab.analytic import InitialCondition, is_violation
from rumorlab.config import Tolerances
from rumorlab.errors import ExperimentPreconditionError
from rumorlab.experiments import (
    MonteCarloReport,
    dump_standardized_samples,
    mc_clt,
    mc_fluid,
    mc_lln,
    mc_monotone,
    mc_mu_infinity,
    mc_transitions,
)
from rumorlab.stifling import Constant, Geometric, Poisson, ZetaTail


# --- Law of large numbers ---
def test_lln_passes_at_moderate_n(classical, constant1, seed):
    report = mc_lln(2000, 40, classical, constant1, seed)
    assert isinstance(report, MonteCarloReport)
    assert report.passed
    assert report.target == pytest.approx(0.2032, abs=1e-4)
    assert report.std_error >= 0


def test_lln_subcritical_start_stays_put(constant1, seed):
    ic = InitialCondition(0.4, 0.0)
    report = mc_lln(1000, 20, ic, constant1, seed)
    assert report.target == 0.4
    assert report.estimate == pytest.approx(0.4, abs=0.05)


def test_lln_rejects_infinite_mean(classical, seed):
    with pytest.raises(ExperimentPreconditionError):
        mc_lln(100, 5, classical, ZetaTail(1.5), seed)


def test_reports_are_deterministic(classical, geometric_half, seed):
    a = mc_lln(1000, 10, classical, geometric_half, seed).to_dict()
    b = mc_lln(1000, 10, classical, geometric_half, seed).to_dict()
    assert a == b
    assert a["experiment"] == "lln" and a["dist"] == "geometric:0.5"


def test_tolerances_drive_verdict(classical, constant1, seed):
    strict = Tolerances(lln_c=0.0, se_multiplier=0.0)
    report = mc_lln(500, 10, classical, constant1, seed, tolerances=strict)
    assert not report.passed


# --- CLT ---
def test_clt_report_fields(classical, constant1, seed):
    report = mc_clt(2000, 300, classical, constant1, seed)
    assert report.target == pytest.approx(0.2728, abs=1e-3)
    assert report.standardized_samples.shape == (300,)
    assert 0.0 <= report.ks_distance <= 1.0
    assert report.details["ks_critical"] == pytest.approx(1.63 / math.sqrt(300))
    # mean of the standardized samples within 4 sigma / sqrt(M) of 0
    assert abs(report.standardized_samples.mean()) < 4 * math.sqrt(report.target / 300)
    assert report.estimate == pytest.approx(report.target, rel=0.5)
    assert "empirical" in report.to_dict()["note"]


def test_clt_violation_marker(constant1, seed):
    assert is_violation(mc_clt(500, 10, InitialCondition(0.4, 0.0), constant1, seed))


def test_clt_rejects_infinite_variance(classical, seed):
    with pytest.raises(ExperimentPreconditionError):
        mc_clt(500, 10, classical, ZetaTail(2.5), seed)


def test_dump_standardized_samples(classical, constant1, seed, tmp_path):
    report = mc_clt(500, 25, classical, constant1, seed)
    target = tmp_path / "samples.csv"
    assert dump_standardized_samples(report, target)["status"] == "success"
    frame = pd.read_csv(target)
    assert list(frame.columns) == ["replica", "standardized"]
    assert len(frame) == 25

    report.standardized_samples = None
    assert dump_standardized_samples(report, target)["status"] == "error"


# --- Transitions ---
def test_transitions_per_capita(classical, constant1, seed):
    report = mc_transitions(5000, 30, classical, constant1, seed)
    assert report.target == pytest.approx(1.594, abs=2e-3)
    assert report.passed


# --- Infinite mean ---
def test_mu_infinity_goes_to_zero(classical, seed):
    reports = mc_mu_infinity([1000, 100], 10, ZetaTail(1.5), seed)
    assert [r.N for r in reports] == [100, 1000]
    assert all(r.target == 0.0 for r in reports)
    assert reports[-1].estimate < 0.05
    assert all(r.passed for r in reports)


@pytest.mark.parametrize(
    "fractions, passed",
    [({100: 0.3, 1000: 0.0, 10_000: 0.0}, True), ({100: 0.02, 1000: 0.02}, False)],
)
def test_mu_infinity_criterion_is_non_strict_at_zero(monkeypatch, seed, fractions, passed):
    def fake_counts(N, ic, dist, seed, M, threads, progress, first_replica=0):
        return [], np.full(M, fractions[N] * N)

    monkeypatch.setattr(experiments, "_final_counts", fake_counts)
    reports = mc_mu_infinity(list(fractions), 4, ZetaTail(1.5), seed)
    assert [r.passed for r in reports] == [passed] * len(fractions)
    assert "non-strict" in reports[0].criterion


def test_mu_infinity_rejects_finite_mean(geometric_half, seed):
    with pytest.raises(ExperimentPreconditionError):
        mc_mu_infinity([100, 1000], 5, geometric_half, seed)


# --- Monotonicity ---
def test_monotone_kappa(constant1, constant2, seed):
    report = mc_monotone(500, 200, constant1, constant2, seed)
    assert report.passed
    assert report.estimate < report.target


def test_monotone_truncation(geometric_half, seed):
    report = mc_monotone(300, 200, geometric_half.truncate(2), geometric_half, seed)
    assert report.passed


def test_monotone_same_law_is_within_noise(seed):
    report = mc_monotone(300, 200, Poisson(1.1), Poisson(1.1), seed)
    assert report.passed


def test_monotone_order_checked(constant1, constant2, seed):
    with pytest.raises(ExperimentPreconditionError):
        mc_monotone(100, 10, constant2, constant1, seed)


# --- Fluid limit ---
def test_fluid_path_tracks_exponential(classical, constant1, seed):
    report = mc_fluid(2000, 8, classical, constant1, seed)
    assert report.passed
    assert report.estimate < 3.0 / math.sqrt(2000)


def test_fluid_custom_grid(classical, seed):
    report = mc_fluid(1000, 4, classical, Geometric(0.5), seed, t_grid=np.linspace(0.0, 1.0, 11))
    assert report.details["t_max"] == 1.0


# --- Full-size runs ---
@pytest.mark.slow
def test_lln_full_size(classical, constant1, seed):
    report = mc_lln(100_000, 50, classical, constant1, seed)
    assert abs(report.estimate - 0.203) < 0.01


@pytest.mark.slow
@pytest.mark.parametrize("dist, sigma2", [(Constant(1), 0.273), (Poisson(1.1), 0.307)])
def test_clt_full_size(classical, seed, dist, sigma2):
    report = mc_clt(10_000, 2000, classical, dist, seed)
    assert report.target == pytest.approx(sigma2, abs=1e-3)
    assert report.passed


@pytest.mark.slow
def test_transitions_full_size(classical, constant1, seed):
    report = mc_transitions(100_000, 50, classical, constant1, seed)
    assert abs(report.estimate - 1.594) < 0.02


@pytest.mark.slow
def test_mu_infinity_full_size(classical, seed):
    reports = mc_mu_infinity([1000, 10_000, 100_000], 100, ZetaTail(1.5), seed)
    assert all(r.passed for r in reports)


@pytest.mark.slow
def test_monotone_full_size(constant1, constant2, seed):
    assert mc_monotone(1000, 10_000, constant1, constant2, seed).passed


@pytest.mark.slow
def test_lln_deviation_scales_like_inverse_sqrt_n(classical, constant1, seed):
    grid = [1000, 10_000, 100_000]
    spreads = []
    for N in grid:
        report = mc_lln(N, 200, classical, constant1, seed)
        spreads.append(report.std_error * math.sqrt(200))
    slope = np.polyfit(np.log10(grid), np.log10(spreads), 1)[0]
    assert slope == pytest.approx(-0.5, abs=0.15)
