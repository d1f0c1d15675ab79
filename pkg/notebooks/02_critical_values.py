"""
Simulated critical values
=========================
"""

from tailcheck import lr_test as lt

# %% one cell, with its order-statistic standard error
k, alpha = 25, 0.05
print(k, alpha, round(lt.critical_value(k, alpha), 3), "+/-", round(lt.critical_value_se(k, alpha), 3))

# %% a small table; CSV output round-trips through from_csv
table = lt.critical_value_table(ks=(10, 25, 50), alphas=(0.10, 0.05, 0.01))
print(table.to_text())
assert lt.CriticalValueTable.from_csv(table.to_csv()) == table

# %% the cell is Monte Carlo output, so other seeds move it by a few SE
for seed in (1, 2):
    print("seed", seed, round(lt.critical_value(k, alpha, seed=seed), 3))
