import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qdelay import bell
from qdelay import counting as ct
from qdelay import delayed_choice as dc
from qdelay import qstate as qs
from qdelay.delayed_choice import ExperimentParams

TARGET_STATE = dc.global_state(ExperimentParams(np.pi / 4, np.pi / 2))
V_REPORTED = 2.45 / (2 * np.sqrt(2))


def test_outcomes_of_product_eigenstate():
    p = ct.outcome_distribution(np.kron(qs.KET0, qs.KET0), qs.Z, qs.Z)
    assert np.allclose(p, [1, 0, 0, 0], atol=1e-15)


def test_fully_mixed_gives_uniform_outcomes():
    rng = np.random.default_rng(0)
    rho = ct.NoiseModel(0.0).apply(TARGET_STATE)
    for _ in range(5):
        a, b = qs.random_observable(rng), qs.random_observable(rng)
        assert np.allclose(ct.outcome_distribution(rho, a, b), 0.25, atol=1e-15)


def test_correlators_match_expectation():
    st_ = bell.chsh_settings()
    probs = ct.setting_probabilities(TARGET_STATE, st_)
    for x, a in enumerate(st_.alice):
        for y, b in enumerate(st_.bob):
            assert ct.correlator(probs[x, y]) == pytest.approx(qs.expectation(TARGET_STATE, a, b), abs=1e-12)
    assert ct.chsh_from_probabilities(probs) == pytest.approx(2 * np.sqrt(2), abs=1e-12)


@given(v=st.floats(0, 1))
def test_chsh_linear_in_visibility(v):
    probs = ct.setting_probabilities(ct.NoiseModel(v).apply(TARGET_STATE))
    assert ct.chsh_from_probabilities(probs) == pytest.approx(v * 2 * np.sqrt(2), abs=1e-12)


def test_visibility_range_checked():
    with pytest.raises(ValueError):
        ct.NoiseModel(1.2)


def test_reported_visibility_inversion():
    assert ct.visibility_for(2.45) == pytest.approx(0.866206, abs=1e-6)


def test_sampling_is_deterministic():
    probs = ct.setting_probabilities(TARGET_STATE)
    assert ct.sample_counts(probs, 500, 42) == ct.sample_counts(probs, 500, 42)
    assert ct.sample_counts(probs, 500, 42) != ct.sample_counts(probs, 500, 43)


def test_delta_distribution_fills_one_cell():
    probs = np.zeros((2, 2, 4))
    probs[..., 0] = 1.0
    t = ct.sample_counts(probs, 77, 0)
    assert np.all(t.counts[..., 0] == 77) and np.all(t.counts[..., 1:] == 0)


def test_frequencies_converge():
    probs = ct.setting_probabilities(ct.NoiseModel(V_REPORTED).apply(TARGET_STATE))
    t = ct.sample_counts(probs, 10**6, 1)
    assert np.max(np.abs(t.counts / 10**6 - probs)) < 5e-3


def test_sampling_validation():
    with pytest.raises(ValueError):
        ct.sample_counts(np.full((2, 2, 4), 0.25), 0, 0)
    with pytest.raises(ValueError):
        ct.sample_counts(np.full((2, 4), 0.25), 10, 0)


def test_perfect_local_table():
    counts = np.zeros((2, 2, 4), dtype=int)
    counts[..., 0] = 100  # every pair answers (+, +)
    est = ct.estimate_s(ct.CountTable(counts, 100))
    assert est.s == 2.0 and est.stderr == 0.0


def test_degenerate_table():
    t = ct.CountTable(np.zeros((2, 2, 4), dtype=int), 0)
    with pytest.raises(ct.DegenerateTableError):
        ct.estimate_s(t)


def test_count_table_validation():
    with pytest.raises(ValueError):
        ct.CountTable(-np.ones((2, 2, 4), dtype=int), -4)
    with pytest.raises(ValueError):
        ct.CountTable(np.ones((2, 2, 4), dtype=int), 5)


def test_csv_round_trip():
    probs = ct.setting_probabilities(TARGET_STATE)
    t = ct.sample_counts(probs, 321, 9)
    text = t.to_csv()
    assert text.splitlines()[0] == ",".join(ct.CSV_COLUMNS)
    assert ct.CountTable.from_csv(text) == t


def test_csv_missing_row_rejected():
    text = ct.sample_counts(np.full((2, 2, 4), 0.25), 10, 0).to_csv()
    with pytest.raises(ValueError):
        ct.CountTable.from_csv("\n".join(text.splitlines()[:-1]))


def test_repetition_seeds_do_not_depend_on_schedule():
    probs = ct.setting_probabilities(TARGET_STATE)
    run = ct.run_repetitions(probs, 200, 5, seed=3)
    fourth = ct.estimate_s(ct.sample_counts(probs, 200, ct.repetition_seed(3, 4)))
    assert run.estimates[4] == fourth


def test_estimator_is_consistent_and_calibrated():
    probs = ct.setting_probabilities(ct.NoiseModel(V_REPORTED).apply(TARGET_STATE))
    shots = ct.shots_for_stderr(probs, 0.03)
    assert 2700 <= shots <= 2900
    run = ct.run_repetitions(probs, 2800, 1000, seed=7)
    assert abs(run.mean - 2.45) < 0.01
    assert run.std == pytest.approx(0.03, rel=0.2)
    assert np.mean(run.stderr) == pytest.approx(run.std, rel=0.1)
    assert run.violation_fraction >= 0.99


def test_large_sample_approaches_tsirelson():
    probs = ct.setting_probabilities(TARGET_STATE)
    est = ct.estimate_s(ct.sample_counts(probs, 10**6, 5))
    assert abs(est.s - 2 * np.sqrt(2)) < 0.01


def test_bootstrap_agrees_with_analytic_stderr():
    probs = ct.setting_probabilities(ct.NoiseModel(V_REPORTED).apply(TARGET_STATE))
    t = ct.sample_counts(probs, 2800, 11)
    boot = ct.bootstrap_stderr(t, n_boot=2000, seed=1)
    assert boot == pytest.approx(ct.estimate_s(t).stderr, rel=0.1)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_probabilities_are_distributions(seed):
    rng = np.random.default_rng(seed)
    probs = ct.setting_probabilities(qs.random_state(rng), bell.random_settings(rng))
    assert np.all(probs >= 0)
    assert np.allclose(probs.sum(axis=2), 1.0, atol=1e-12)
