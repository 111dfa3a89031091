import numpy as np
import pytest

from netavg.applications import (
    MrpInstance,
    PreconditionError,
    SensingInstance,
    random_mrp,
    random_sensing_instance,
    run_policy_eval,
    run_sensing,
    sample_transition,
    sensing_deterministic_bound,
    value_function,
)
from netavg.gossip import gossip_from_weights, metropolis_hastings
from netavg.topology import build


def gossip(kind, n):
    return gossip_from_weights(metropolis_hastings(build(kind, n)))


def mrp(p, r, gamma, std=0.0):
    r = np.atleast_2d(np.asarray(r, dtype=float))
    return MrpInstance(np.asarray(p, dtype=float), r, np.full(r.shape, std), gamma)


def test_value_function_closed_forms():
    np.testing.assert_allclose(value_function(mrp(np.eye(4), np.ones(4), 0.5)), 2.0)
    assert not value_function(mrp(np.eye(3), np.zeros(3), 0.9)).any()
    shift = np.roll(np.eye(3), 1, axis=1)  # 0 -> 1 -> 2 -> 0
    j = value_function(mrp(shift, [1.0, 0.0, 0.0], 0.9))
    j0 = 1 / (1 - 0.9**3)
    np.testing.assert_allclose(j, [j0, 0.81 * j0, 0.9 * j0], rtol=1e-12)


def test_value_function_residual():
    inst = random_mrp(5, 3, 0.95, seed=2)
    j = value_function(inst)
    resid = (np.eye(5) - 0.95 * inst.transition) @ j - inst.r_bar
    assert np.max(np.abs(resid)) <= 1e-10


def test_mrp_validation():
    with pytest.raises(ValueError):
        mrp([[0.5, 0.4], [0.5, 0.5]], [1.0, 1.0], 0.9)
    with pytest.raises(ValueError):
        mrp(np.eye(2), [1.0, 1.0], 1.0)
    with pytest.raises(ValueError):
        mrp([[1.2, -0.2], [0.5, 0.5]], [1.0, 1.0], 0.5)


def test_sample_transition_permutation_is_exact():
    perm = np.eye(5)[[3, 0, 4, 1, 2]]
    inst = mrp(perm, np.ones(5), 0.5)
    assert np.array_equal(sample_transition(inst, 17, seed=3).p_hat, perm)


def test_sample_transition_rows_and_lattice():
    inst = random_mrp(6, 1, 0.9, seed=1)
    t = 250
    p_hat = sample_transition(inst, t, seed=4).p_hat
    np.testing.assert_array_equal(p_hat.sum(axis=1), 1.0)
    np.testing.assert_allclose(p_hat * t, np.round(p_hat * t), atol=1e-9)


def test_sample_transition_hoeffding():
    inst = random_mrp(8, 1, 0.9, seed=5)
    t = 100_000
    p_hat = sample_transition(inst, t, seed=0).p_hat
    assert np.max(np.abs(p_hat - inst.transition)) <= 4 * np.sqrt(np.log(8) / t)


def test_sample_transition_never_hits_zero_probability_states():
    p = np.array([[0.0, 1.0, 0.0], [0.5, 0.0, 0.5], [0.0, 0.0, 1.0]])
    p_hat = sample_transition(mrp(p, np.ones(3), 0.5), 5000, seed=1).p_hat
    assert np.all(p_hat[p == 0] == 0)


def test_policy_eval_zero_bias_exact():
    p = np.roll(np.eye(4), 1, axis=1)
    r = np.tile([1.0, 2.0, 0.0, -1.0], (5, 1))
    inst = mrp(p, r, 0.9)
    res = run_policy_eval(inst, gossip("cycle", 5), 20, seed=0)
    assert res.error <= 1e-12


def test_policy_eval_discount_zero_returns_rewards():
    inst = random_mrp(4, 6, 0.0, reward_std=0.3, seed=3)
    res = run_policy_eval(inst, gossip("star", 6), 30, seed=1)
    np.testing.assert_allclose(res.j_hat, res.r_hat, atol=1e-14)


def test_policy_eval_exact_transition_recovers_value():
    inst = random_mrp(10, 10, 0.9, seed=7)
    res = run_policy_eval(inst, gossip("cycle", 10), 200, p_hat=inst.transition)
    assert res.error <= 1e-8


def test_policy_eval_decomposition_and_contraction():
    inst = random_mrp(6, 5, 0.8, reward_std=0.5, seed=9)
    res = run_policy_eval(inst, gossip("path", 5), 60, seed=2)
    noise, model = res.decomposition(inst)
    np.testing.assert_allclose(res.j_hat - value_function(inst), noise + model, atol=1e-10)
    for dev, part in zip(res.r_hat - inst.r_bar, noise):
        assert np.max(np.abs(part)) <= np.max(np.abs(dev)) / (1 - 0.8) + 1e-12


def test_sensing_instance_validation():
    with pytest.raises(ValueError):
        SensingInstance((np.array([[1.0, 0.0]]),) * 3, np.ones(2), (np.zeros(1),) * 3)


def test_sensing_identity_sensors():
    beta = np.array([1.0, -2.0, 0.5])
    inst = SensingInstance((np.eye(3),) * 4, beta, (np.zeros(3),) * 4)
    np.testing.assert_allclose(inst.a_bar, np.eye(3))
    res = run_sensing(inst, gossip("cycle", 4), t_matrix=2, t_mean=10)
    np.testing.assert_allclose(res.a_hat, np.broadcast_to(np.eye(3), (4, 3, 3)), atol=1e-14)
    np.testing.assert_allclose(res.beta_hat, res.mu_hat, atol=1e-14)
    assert res.error <= 1e-20


def test_sensing_zero_noise_below_deterministic_bound():
    inst = random_sensing_instance(10, 3, seed=0)
    g = gossip("cycle", 10)
    for t_matrix in (40, 80):
        res = run_sensing(inst, g, t_matrix, 100)
        bound = sensing_deterministic_bound(inst, g, t_matrix, 100)
        assert res.error <= bound["total"]
        assert bound["total"] == pytest.approx(bound["matrix_term"] + bound["mean_term"] + bound["cross_term"])


def test_sensing_decomposition_identity():
    inst = random_sensing_instance(8, 3, rows_per_sensor=2, noise_std=0.2, seed=4)
    res = run_sensing(inst, gossip("star", 8), 60, 80, seed=3)
    matrix_part, mean_part = res.decomposition(inst)
    np.testing.assert_allclose(res.beta_hat - inst.beta_star, matrix_part + mean_part, atol=1e-9)


def test_sensing_precondition_violation():
    inst = random_sensing_instance(10, 3, seed=0)
    with pytest.raises(PreconditionError):
        run_sensing(inst, gossip("path", 10), 1, 50)
