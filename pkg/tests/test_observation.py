import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from netavg.observation import ObservationModel, ProblemInstance, sample, uniform_means_instance


def test_zero_spread_instance():
    inst = uniform_means_instance(8, 2, b=0.0, sigma=1.0, seed=3)
    assert np.all(inst.means == 0) and np.all(inst.target == 0)
    assert inst.bias_energy == 0.0


def test_uniform_means_range_and_determinism():
    a = uniform_means_instance(100, 1, b=10.0, sigma=1.0, seed=0)
    b = uniform_means_instance(100, 1, b=10.0, sigma=1.0, seed=0)
    assert np.array_equal(a.means, b.means)
    assert a.means.min() >= 0 and a.means.max() <= 10
    assert np.all(a.model.std_devs == 1.0)
    np.testing.assert_allclose(a.target, a.means.mean(axis=0), atol=1e-12)
    assert a.bias_energy == pytest.approx(np.sum((a.means - a.means.mean()) ** 2))


def test_zero_noise_sample_is_mean():
    means = np.arange(6.0).reshape(3, 2)
    model = ObservationModel(means, np.zeros((3, 2)))
    for node in range(3):
        assert np.array_equal(sample(model, node, t=5, replication=2), means[node])


def test_law_of_large_numbers_over_replications():
    means = np.array([[1.5, -2.0], [0.0, 4.0]])
    stds = np.array([[2.0, 0.5], [1.0, 3.0]])
    model = ObservationModel(means, stds, master_seed=11)
    draws = model.draw(7, np.arange(100_000))
    emp = draws.mean(axis=0)
    assert np.all(np.abs(emp - means) <= 4 * stds / np.sqrt(100_000))
    np.testing.assert_allclose(draws.std(axis=0), stds, rtol=0.02)


def test_sample_matches_batch_draw_and_is_pure():
    model = ObservationModel(np.zeros((4, 3)), np.ones((4, 3)), master_seed=9)
    batch = model.draw(3, [0, 5])
    assert np.array_equal(sample(model, 2, 3, 5), batch[1, 2])
    assert np.array_equal(model.draw(3, [0, 5]), batch)


def test_distinct_slots_give_uncorrelated_streams():
    model = ObservationModel(np.zeros((1, 1)), np.ones((1, 1)), master_seed=1)
    reps = np.arange(20_000)
    a = model.draw(0, reps)[:, 0, 0]
    b = model.draw(1, reps)[:, 0, 0]
    assert abs(np.corrcoef(a, b)[0, 1]) < 4 / np.sqrt(reps.size)


@settings(max_examples=25, deadline=None)
@given(j=st.integers(0, 3), t=st.integers(0, 50), rep=st.integers(0, 1000))
def test_coordinate_slice_reproduces_wide_draws(j, t, rep):
    model = ObservationModel(np.ones((3, 4)), np.full((3, 4), 2.0), master_seed=4)
    wide = model.draw(t, [rep])[0, :, j]
    narrow = model.coordinate(j).draw(t, [rep])[0, :, 0]
    assert np.array_equal(wide, narrow)


def test_invalid_models_rejected():
    with pytest.raises(ValueError):
        ObservationModel(np.zeros((2, 2)), -np.ones((2, 2)))
    with pytest.raises(ValueError):
        ObservationModel(np.zeros((2, 2)), np.ones((3, 2)))
    with pytest.raises(ValueError):
        ObservationModel(np.array([[np.inf]]), np.ones((1, 1)))


def test_problem_instance_variances():
    inst = ProblemInstance(ObservationModel(np.zeros((2, 1)), np.array([[2.0], [3.0]])))
    np.testing.assert_allclose(inst.variances, [[4.0], [9.0]])
