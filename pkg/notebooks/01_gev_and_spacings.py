"""
GEV laws and self-normalized spacings
=====================================

The k largest values of a sample, shifted by the k-th and scaled by the
gap between first and k-th, keep only what the tail shape tells us.
"""

import numpy as np

from tailcheck import evt_core as ev
from tailcheck import lr_test as lt
from tailcheck import rng
from tailcheck.evt_core import TopKSample

# %% GEV cdf for a few tail indices
x = np.linspace(-1.0, 4.0, 6)
for g in (0.0, 0.5, 1.0):
    print(f"gamma={g}:", np.round(ev.gev_cdf(g, x), 4))

# %% spacings from a heavy-tailed sample
gen = rng.stream(1, 1)
sample = gen.standard_t(1, 5000)
top = TopKSample(np.sort(sample)[::-1][:10])
v = ev.self_normalize(top)
print("V* =", np.round(v.vstar, 3))

# %% the spacing density under a light and a heavy index
for g in (0.0, 0.5, 1.0):
    print(f"log f(V* | {g}) = {ev.log_vstar_density(g, v):.3f}")

# %% limit draws: larger gamma pushes interior spacings towards zero
for g in (0.0, 1.0):
    V = lt.simulate_spacings_matrix(10, 2000, 3, gamma=g)
    print(f"gamma={g}: mean V*_2 = {V[:, 1].mean():.3f}")
