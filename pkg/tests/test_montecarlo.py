import math

import numpy as np
import pytest
from scipy import stats as sps

from ifprep.amplitudes import GD157, InteractionAmplitudes, from_cross_sections
from ifprep.errors import EmptySelection
from ifprep.interferometer import NetworkSpec, outcome_distribution
from ifprep.joint_state import BeamGeometry
from ifprep.montecarlo import (
    Result,
    TrialConfig,
    iter_trials,
    run_ensemble,
    sample_trial,
    selected_histogram,
)

ABSORBER = InteractionAmplitudes(z=1)


def four_sigma(p, n):
    return 4 * math.sqrt(p * (1 - p) / n)


def test_trial_config_validation():
    with pytest.raises(ValueError):
        TrialConfig(n_trials=0)
    with pytest.raises(ValueError):
        TrialConfig(seed=-1)


def test_sample_trial_matches_ensemble_arrays():
    cfg = TrialConfig(BeamGeometry(100, 1000), ABSORBER, n_trials=5000, seed=7)
    atom_y, in_window, result = iter_trials(cfg, block_size=333)
    for i in (0, 1, 332, 333, 4999):
        t = sample_trial(cfg, i)
        assert t.atom_y == atom_y[i]
        assert t.in_window == in_window[i]
        assert t.result == result[i]
    with pytest.raises(IndexError):
        sample_trial(cfg, 5000)


def test_seed_beyond_counter_word():
    cfg = TrialConfig(n_trials=3, seed=2**64 - 1)
    assert sample_trial(cfg, 2).trial_index == 2


def test_elitzur_vaidman_frequencies():
    n = 10**6
    cfg = TrialConfig(BeamGeometry(10, 10), ABSORBER, n_trials=n, seed=42)
    counts = run_ensemble(cfg).counts
    for name, p in (("D1", 0.25), ("D2", 0.25), ("Absorbed", 0.5)):
        assert abs(counts[name] / n - p) < four_sigma(p, n)
    assert counts["Scattered"] == 0


def test_no_interaction_always_d1():
    cfg = TrialConfig(BeamGeometry(100, 1000), InteractionAmplitudes(), n_trials=20000, seed=1)
    stats = run_ensemble(cfg)
    assert stats.counts["D1"] == 20000
    assert stats.analytic_p_d2 == 0.0


@pytest.mark.parametrize("n", [10**4, 10**6])
def test_window_fraction_success_rate(n):
    cfg = TrialConfig(BeamGeometry(100, 1000), ABSORBER, n_trials=n, seed=42)
    stats = run_ensemble(cfg)
    assert stats.analytic_p_d2 == pytest.approx(0.025, abs=1e-15)
    assert abs(stats.empirical_p_d2 - 0.025) < four_sigma(0.025, n)
    assert stats.std_error == pytest.approx(math.sqrt(0.025 * 0.975 / n))


def test_frequencies_follow_distribution_with_scattering():
    amps = InteractionAmplitudes(s0=0.2j, s_inel=(0.3,), z=0.6)
    n = 10**6
    cfg = TrialConfig(BeamGeometry(500, 1000), amps, n_trials=n, seed=3)
    stats = run_ensemble(cfg)
    dist = outcome_distribution(NetworkSpec(), amps, atom_present=True)
    for r, p in zip(Result, dist.as_tuple()):
        p_total = 0.5 * p + (0.5 if r is Result.D1 else 0.0)
        assert abs(stats.counts[r.name] / n - p_total) < four_sigma(p_total, n)


def test_selected_atoms_inside_window_and_uniform():
    cfg = TrialConfig(BeamGeometry(100, 1000), ABSORBER, n_trials=10**6, seed=42)
    stats = run_ensemble(cfg)
    assert stats.n_selected >= 1000
    assert np.all(np.abs(stats.selected_positions) <= 50)
    assert stats.ks_statistic < stats.ks_critical_1pct
    assert stats.ks_critical_1pct == pytest.approx(sps.kstwo.ppf(0.99, stats.n_selected))


def test_absorbed_and_scattered_only_in_window():
    amps = InteractionAmplitudes(s_inel=(0.5,), z=0.7)
    cfg = TrialConfig(BeamGeometry(50, 1000), amps, n_trials=200000, seed=9)
    _, in_window, result = iter_trials(cfg)
    assert np.all(in_window[result >= Result.Absorbed])


def test_counts_sum():
    cfg = TrialConfig(BeamGeometry(100, 1000), from_cross_sections(GD157, 0.5, 1.0), n_trials=12345, seed=5)
    stats = run_ensemble(cfg)
    assert sum(stats.counts.values()) == 12345


@pytest.mark.parametrize("workers, block", [(1, 1 << 16), (4, 1000), (3, 777), (8, 1 << 16)])
def test_worker_independence(workers, block):
    cfg = TrialConfig(BeamGeometry(100, 1000), from_cross_sections(GD157, 0.5, 0.5), n_trials=100_003, seed=11)
    ref = run_ensemble(cfg)
    got = run_ensemble(cfg, workers=workers, block_size=block)
    assert got.to_json_dict() == ref.to_json_dict()
    assert np.array_equal(got.selected_positions, ref.selected_positions)


def test_different_seeds_differ():
    a = run_ensemble(TrialConfig(BeamGeometry(100, 1000), ABSORBER, n_trials=10000, seed=1))
    b = run_ensemble(TrialConfig(BeamGeometry(100, 1000), ABSORBER, n_trials=10000, seed=2))
    assert not np.array_equal(a.selected_positions, b.selected_positions)


class TestHistogram:
    def test_empty(self):
        stats = run_ensemble(TrialConfig(BeamGeometry(100, 1000), InteractionAmplitudes(), n_trials=100))
        with pytest.raises(EmptySelection):
            selected_histogram(stats, 10)

    def test_bins_validated(self):
        stats = run_ensemble(TrialConfig(BeamGeometry(100, 1000), ABSORBER, n_trials=1000))
        with pytest.raises(ValueError):
            selected_histogram(stats, 1)

    def test_flat(self):
        stats = run_ensemble(TrialConfig(BeamGeometry(100, 1000), ABSORBER, n_trials=10**6, seed=42))
        counts, edges = selected_histogram(stats, 20)
        assert counts.sum() == stats.n_selected
        assert edges[0] == -50 and edges[-1] == 50
        assert sps.chisquare(counts).pvalue > 0.01

    def test_full_beam_window(self):
        stats = run_ensemble(TrialConfig(BeamGeometry(1000, 1000), ABSORBER, n_trials=100000, seed=4))
        counts, edges = selected_histogram(stats, 10)
        assert edges[0] == -500 and edges[-1] == 500
        assert np.all(counts > 0)
