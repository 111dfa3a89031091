# %% [markdown]
# # Error at T = sqrt(kappa) on star graphs
#
# Star graphs have kappa(L) = N, so growing N sweeps the condition number.
# All means are zero and each method runs for T = ceil(sqrt(kappa)) steps.
# The error of SDA grows like sqrt(kappa) while D-MASG grows like kappa.

# %%
from netavg.experiments import desk_config, run_non_asymptotic, slopes_by_algorithm

cfg = desk_config("non_asymptotic")
rows = run_non_asymptotic(cfg)

# %%
print(f"{'N':>5}{'kappa':>9}{'T':>5}{'SDA':>12}{'D-MASG':>12}")
for n in cfg.n_grid:
    by_alg = {r.algorithm: r for r in rows if r.n_nodes == n}
    print(f"{n:>5}{by_alg['sda'].kappa:>9.1f}{by_alg['sda'].t_total:>5}"
          f"{by_alg['sda'].mean_mse:>12.4f}{by_alg['dmasg'].mean_mse:>12.4f}")
for (alg, _), fit in slopes_by_algorithm(rows).items():
    print(f"{alg}: ln(mse) vs ln(kappa) slope {fit.slope:.3f}")
