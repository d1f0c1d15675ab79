"""
Panels: one test per period, Bonferroni across them
===================================================
"""

from tailcheck import diagnostics as dg
from tailcheck import mc_harness as mc
from tailcheck.diagnostics import TailTestRequest
from tailcheck.mc_harness import DgpSpec, ExperimentGrid

req = TailTestRequest("both", 50)

# %%
for design in ("static_panel", "dynamic_panel"):
    d = mc.generate(DgpSpec(design=design, n=2000, T=2, error_dist="student_t(1)", seed=3))
    res = dg.run_panel_test(d, req)
    print(design, "tests:", res.n_tests, "combined p:", round(res.combined_p, 4), "reject:", res.reject)

# %% a small rejection study (the full grid takes longer)
grid = ExperimentGrid(dgps=[DgpSpec(design="static_panel", n=2000, T=2, error_dist=e)
                            for e in ("logistic", "student_t(1)")],
                      k_values=(25, 50), replications=100, tails=("both",))
print(mc.rejection_study(grid, workers=2).to_text())
