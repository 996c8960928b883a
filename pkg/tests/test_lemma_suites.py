"""Randomized linear-algebra suites: clean runs and replayable streams."""

import numpy as np

from surro import lemmas


def test_all_suites_clean_at_reduced_trial_count():
    for result in lemmas.run_all(trials=150, seed=0):
        assert result.passed, f"{result.name}: {result.failures[:1]}"


def test_suites_are_deterministic_in_the_seed():
    a = lemmas.check_rate_identity(trials=25, seed=9)
    b = lemmas.check_rate_identity(trials=25, seed=9)
    assert a.trials == b.trials and a.failures == b.failures


def test_random_spd_is_spd():
    from surro.rng import CounterRNG

    rng = CounterRNG(5)
    for _ in range(50):
        a = lemmas.random_spd(rng, 6)
        assert np.all(np.linalg.eigvalsh(a) > 0)
        np.testing.assert_allclose(a, a.T)


def test_domination_counts_only_valid_hypotheses():
    result = lemmas.check_domination(trials=100, seed=3)
    assert result.trials == 100
    assert result.passed


def test_ratio_ascent_reaches_known_extremes():
    a = np.eye(3)
    b = np.diag([0.9, -0.2, 0.1])
    from surro.rng import CounterRNG

    rng = CounterRNG(6)
    found = lemmas._ratio_ascent(a, b, rng.gaussian(3))
    assert found <= 0.9 + 1e-12
