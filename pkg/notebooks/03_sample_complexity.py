# %% [markdown]
# # Samples per node needed to reach accuracy eps
#
# For each eps the budget T grows along a geometric schedule (ratio 1.02).
# At each T the mean error over the replications is estimated, and the first
# T whose mean error is at most eps is recorded. The eps grid sits where the
# 2 sigma^2 / T variance term dominates, so SDA should need about 1/eps
# samples, a log-log slope near -1.
#
# This takes about two minutes on one core.

# %%
from netavg.experiments import desk_config, run_sample_complexity, slopes_by_algorithm

cfg = desk_config("sample_complexity")
rows = run_sample_complexity(cfg)

# %%
print(f"{'graph':<8}{'eps':>10}{'samples':>10}{'mean mse':>12}")
for r in rows:
    print(f"{r.topology:<8}{r.x_value:>10.3g}{r.samples_per_node:>10}{r.mean_mse:>12.3e}")
for (alg, topo), fit in slopes_by_algorithm(rows, "samples_per_node").items():
    print(f"{alg} on {topo}: slope {fit.slope:.3f} +- {fit.stderr:.3f}")
