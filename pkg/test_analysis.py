#!/usr/bin/env python3
"""
Tests for fidelity, the eta optimizer, overlap curves and the structural
checks behind the visibility argument.
"""

import logging
import math
import time

import numpy as np
import pytest

from Optics.analysis import (
    TABLE1_REFERENCE,
    coarse_scan,
    coherence_check,
    compare_with_table1,
    defining_relation_residual,
    fidelity,
    gaussian_overlap_limit,
    golden_section_maximize,
    grid_local_maxima,
    grid_peak_is_contiguous,
    n_photon_probability,
    optimize_eta,
    overlap_curve,
    perturbed_state,
    photon_number_distribution,
    table1_reference,
    OptimizationResult,
)
from Optics.states import EtaParams, InputFieldParams, eta_state
from utils.errors import ContractViolation, PhotonRangeError


# --- fidelity ---

def test_fidelity_examples():
    assert fidelity(2, 2.0) == pytest.approx(1.0, abs=1e-12)
    assert fidelity(9, 2.0) == pytest.approx(0.891, abs=1e-3)
    assert fidelity(9, 2.30) == pytest.approx(0.920, abs=1e-3)
    assert fidelity(4, 2.31) == pytest.approx(0.93301, abs=1e-4)


def test_exact_cancellations():
    """Two and three photons give a perfect NOON state."""
    assert abs(fidelity(2, 2.0) - 1.0) < 1e-12
    assert abs(fidelity(3, 3.0) - 1.0) < 1e-12


def test_fidelity_range():
    for total_n in (1, 5, 40):
        for eta in (0.0, 0.7, 2.0, 4.5):
            assert 0.0 <= fidelity(total_n, eta) <= 1.0
    with pytest.raises(PhotonRangeError):
        fidelity(0, 2.0)


def test_asymptote_is_reached_quickly():
    start = time.perf_counter()
    value = fidelity(10_000, 2.0)
    elapsed = time.perf_counter() - start
    assert abs(value - math.sqrt(8.0 / 9.0)) < 2e-3
    assert elapsed < 1.0


def test_gaussian_overlap_limit():
    assert gaussian_overlap_limit(2.0) == pytest.approx(math.sqrt(8.0 / 9.0), rel=1e-15)
    assert gaussian_overlap_limit(1.0) == 1.0
    with pytest.raises(ContractViolation):
        gaussian_overlap_limit(0.0)


# --- golden section search ---

def test_golden_section_finds_parabola_peak():
    bracket, evaluations = golden_section_maximize(lambda x: -(x - 1.3) ** 2, 0.0, 4.0, 1e-8)
    assert bracket[1] - bracket[0] <= 1e-8
    assert bracket[0] <= 1.3 <= bracket[1]
    assert evaluations > 2


def test_golden_section_accepts_reversed_interval():
    bracket, _ = golden_section_maximize(lambda x: -abs(x + 0.5), 1.0, -2.0, 1e-6)
    assert bracket[0] <= -0.5 <= bracket[1]


def test_golden_section_narrow_interval():
    bracket, evaluations = golden_section_maximize(lambda x: x, 1.0, 1.0 + 1e-9, 1e-6)
    assert bracket == (1.0, 1.0 + 1e-9)
    assert evaluations == 0


# --- optimizer ---

@pytest.mark.parametrize("total_n", sorted(TABLE1_REFERENCE))
def test_optimizer_reproduces_published_table(total_n):
    eta_ref, fidelity_ref = TABLE1_REFERENCE[total_n]
    result = optimize_eta(total_n)
    assert abs(result.eta_star - eta_ref) <= 0.05
    assert abs(result.fidelity_star - fidelity_ref) <= 1e-3 + 1e-9
    assert result.fidelity_star == pytest.approx(fidelity(total_n, result.eta_star), abs=1e-12)
    assert result.bracket[0] <= result.eta_star <= result.bracket[1]
    assert result.bracket[1] - result.bracket[0] <= 1e-6
    assert compare_with_table1(result)["agrees"]


def test_whole_table_runs_fast():
    start = time.perf_counter()
    results = [optimize_eta(n) for n in sorted(TABLE1_REFERENCE)]
    assert time.perf_counter() - start < 5.0
    assert len(results) == len(TABLE1_REFERENCE)


def test_optimizer_exact_cases():
    result = optimize_eta(3)
    assert result.eta_star == pytest.approx(3.0, abs=1e-4)
    assert result.fidelity_star == pytest.approx(1.0, abs=1e-9)


def test_optimizer_rejects_bad_interval():
    with pytest.raises(ContractViolation):
        optimize_eta(4, 3.0, 2.0)
    with pytest.raises(ContractViolation):
        optimize_eta(4, 2.0, 2.0)
    with pytest.raises(ContractViolation):
        optimize_eta(4, 1.0, 3.0, tol=0.0)


def test_best_fidelity_stays_at_92_percent():
    """The optimum rounds to 92% or more for every N up to 200 (N=10 sits near 91.96%)."""
    best = {n: optimize_eta(n, 1.5, 3.5, 1e-4).fidelity_star for n in range(2, 201)}
    worst = min(best.values())
    assert round(100 * worst) >= 92
    assert worst > 0.919


@pytest.mark.parametrize("total_n", list(range(2, 31)) + [50, 100, 200])
def test_coarse_grid_has_a_single_peak(total_n, caplog):
    grid, values = coarse_scan(total_n, 1.0, 5.0)
    assert grid[0] == pytest.approx(1.0) and grid[-1] == pytest.approx(5.0)
    assert grid_peak_is_contiguous(values)
    with caplog.at_level(logging.WARNING, logger="Optics.analysis"):
        optimize_eta(total_n, tol=1e-4)
    assert not [r for r in caplog.records if "not contiguous" in r.getMessage()]


def test_grid_helpers():
    assert grid_peak_is_contiguous(np.array([0.1, 0.5, 0.9, 0.8, 0.2]))
    twin_peaks = np.array([0.1, 0.9, 0.2, 0.3, 0.85, 0.4])
    assert not grid_peak_is_contiguous(twin_peaks)
    assert grid_local_maxima(twin_peaks) == [1, 4]


def test_table1_reference_is_a_copy():
    reference = table1_reference()
    reference[4] = (0.0, 0.0)
    assert TABLE1_REFERENCE[4] == (2.31, 0.933)
    far = OptimizationResult(n=200, eta_star=2.0, fidelity_star=0.94, evaluations=1, bracket=(2.0, 2.0))
    assert compare_with_table1(far) is None


def test_disagreement_is_flagged(caplog):
    off = OptimizationResult(n=4, eta_star=2.6, fidelity_star=0.93, evaluations=1, bracket=(2.6, 2.6))
    with caplog.at_level(logging.WARNING, logger="Optics.analysis"):
        comparison = compare_with_table1(off)
    assert comparison == {"eta_ref": 2.31, "fidelity_ref": 0.933, "agrees": False}
    assert caplog.records


# --- overlap curve ---

def test_overlap_curve_minimum_at_nine():
    curve = overlap_curve(2.0, 2, 30)
    assert [n for n, _ in curve.points] == list(range(2, 31))
    n_min, value = curve.minimum()
    assert n_min == 9
    assert value == pytest.approx(0.891, abs=1e-3)
    assert curve.points[0] == (2, pytest.approx(1.0, abs=1e-12))
    assert all(0.0 <= v <= 1.0 for _, v in curve.points)


def test_overlap_curve_validates_range():
    with pytest.raises(ContractViolation):
        overlap_curve(2.0, 0, 5)
    with pytest.raises(ContractViolation):
        overlap_curve(2.0, 6, 5)


# --- coherence and orthogonality ---

def test_coherence_example():
    report = coherence_check(4, 2.31)
    assert report.coherence == pytest.approx(report.half_fidelity, abs=1e-10)
    assert report.half_fidelity == pytest.approx(0.933 / 2, abs=1e-3)
    assert report.noon_phase == pytest.approx(0.0, abs=1e-9)


@pytest.mark.parametrize("eta", [1.5, 2.0, 2.5, 3.0])
def test_coherence_is_half_fidelity(eta):
    for total_n in range(1, 61):
        report = coherence_check(total_n, eta)
        assert abs(report.coherence - report.half_fidelity) < 1e-10
        assert report.noon_minus_overlap < 1e-12
        assert abs(abs(report.psi_n0) - abs(report.psi_0n)) < 1e-12


# --- defining relation ---

@pytest.mark.parametrize("eta", [0.5, 1.0, 2.0, 3.0])
def test_eta_state_satisfies_defining_relation(eta):
    for total_n in range(2, 41):
        assert defining_relation_residual(total_n, eta) < 1e-10


def test_perturbed_state_breaks_relation():
    assert defining_relation_residual(6, 2.0) < 1e-10
    state = perturbed_state(eta_state(EtaParams(n=6, eta=2.0)))
    assert defining_relation_residual(6, 2.0, state) > 1e-5


def test_residual_edge_cases():
    assert defining_relation_residual(2, 0.0) == 0.0
    with pytest.raises(PhotonRangeError):
        defining_relation_residual(1, 2.0)
    with pytest.raises(ContractViolation):
        defining_relation_residual(4, 2.0, eta_state(EtaParams(n=6, eta=2.0)))


# --- photon statistics of the input ---

def test_photon_number_distribution_is_normalized():
    fields = InputFieldParams(alpha=1.2, gamma=0.4)
    probabilities = photon_number_distribution(fields, 80)
    assert probabilities.size == 81
    assert probabilities.sum() == pytest.approx(1.0, abs=1e-10)
    assert np.all(probabilities >= 0.0)


def test_photon_number_distribution_limits():
    pairs_only = photon_number_distribution(InputFieldParams(alpha=0.0, gamma=0.5), 20)
    assert np.all(pairs_only[1::2] == 0.0)
    laser_only = photon_number_distribution(InputFieldParams(alpha=1.5, gamma=0.0), 20)
    n = np.arange(21)
    expected = np.exp(-2.25) * 2.25 ** n / np.array([math.factorial(k) for k in n])
    assert np.allclose(laser_only, expected, atol=1e-15)


def test_n_photon_probability_two_photons():
    fields = InputFieldParams(alpha=1.0, gamma=0.5)
    # |2;0> from the laser plus |0;2> from one pair
    expected = math.exp(-1.0) * math.sqrt(0.75) * (0.5 + 0.125)
    assert n_photon_probability(fields, 2) == pytest.approx(expected, rel=1e-12)
    with pytest.raises(PhotonRangeError):
        n_photon_probability(fields, -1)


if __name__ == "__main__":
    import sys
    sys.exit(pytest.main([__file__, "-v"]))
