# %% [markdown]
# # Two uses of network averaging
#
# Distributed linear regression: each sensor sees Y = A_i beta + noise. The
# network first averages the Gram matrices A_i^T A_i (phase one, deterministic)
# and then the moments A_i^T Y (phase two, stochastic). Each sensor finally
# solves its own normal equations.
#
# Multi-agent policy evaluation: agents see private rewards and share one
# Markov chain. They average rewards over the network and plug the average
# into the Bellman equation.

# %%
import numpy as np

from netavg.applications import (
    random_mrp,
    random_sensing_instance,
    run_policy_eval,
    run_sensing,
    sensing_deterministic_bound,
    value_function,
)
from netavg.experiments import TopologySpec, network

g = network(TopologySpec("cycle", 10)).gossip

# %%
inst = random_sensing_instance(10, 3, seed=0)
print("sensing, zero noise, T_mean = 100")
for t_matrix in (20, 40, 80):
    res = run_sensing(inst, g, t_matrix, 100)
    bound = sensing_deterministic_bound(inst, g, t_matrix, 100)["total"]
    print(f"  T' = {t_matrix:>3}: error {res.error:.3e}   bound {bound:.3e}")

noisy = random_sensing_instance(10, 3, rows_per_sensor=3, noise_std=0.5, seed=0)
for t_mean in (100, 1000, 10000):
    res = run_sensing(noisy, g, 80, t_mean, seed=1)
    print(f"  noisy, T = {t_mean:>5}: error {res.error:.3e}")

# %%
mrp = random_mrp(10, 10, 0.9, reward_std=0.5, seed=0)
print("\npolicy evaluation, gamma = 0.9")
for t_total in (100, 1000, 10000):
    res = run_policy_eval(mrp, g, t_total, seed=2)
    print(f"  T = {t_total:>5}: sup-norm error {res.error:.3e}")
clean = random_mrp(10, 10, 0.9, seed=1)
exact = run_policy_eval(clean, g, 200, p_hat=clean.transition)
print(f"  exact P, noiseless rewards: {exact.error:.1e}")
print(f"  |J*|_inf = {np.max(np.abs(value_function(mrp))):.2f}")
