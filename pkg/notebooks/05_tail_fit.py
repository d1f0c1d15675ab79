"""
Pareto tail fit and the exceedance index
========================================

With X and eps both Pareto(1), X given Y = 0 keeps a Pareto tail with index
1 * 1 / (1 + 1) = 0.5.
"""

from tailcheck import diagnostics as dg
from tailcheck import mc_harness as mc
from tailcheck.mc_harness import DgpSpec

d = mc.generate(DgpSpec(n=1_000_000, error_dist="pareto(1)", dominating_dist="pareto(1)",
                        auxiliary=False, seed=7007))
x0 = d.x[d.y == 0]

# %% Hill across k: flat near 0.5 once k is large enough
for k in (200, 1000, 2000, 5000):
    print(k, round(dg.hill_estimator(x0, k), 4))

# %% fit above the 99.9% quantile and compare cdfs
fit = dg.pareto_tail_fit(x0, 0.001)
print("exceedances", fit.n_exceedances, "index", round(fit.hill_index, 3), "max gap", round(fit.max_gap, 4))
print(fit.to_csv().splitlines()[:4])
