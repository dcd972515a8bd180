# Wavelet coherence and the phase arrows.
#
# A lagged copy of a noisy cycle is coherent at the cycle's period, and the
# phase tells which series leads.

import math

import numpy as np

from wavecoh.coherence import wtc
from wavecoh.cwt import build_scale_grid, cwt_transform
from wavecoh.render import RenderOptions, arrow_field, render_map

rng = np.random.default_rng(0)
n = 768
t = np.arange(n)
x = np.cos(2 * np.pi * t / 64) + 0.4 * rng.standard_normal(n)
y = np.cos(2 * np.pi * (t - 16) / 64) + 0.4 * rng.standard_normal(n)  # y lags x by 16 days

grid = build_scale_grid(n)
m = wtc(cwt_transform(x, grid), cwt_transform(y, grid))

j = int(np.argmin(np.abs(np.log(grid.periods / 64))))
inside = m.inside_coi()[j]
print(f"period {grid.periods[j]:.1f}: mean coherence {m.values[j, inside].mean():.3f}")
print(f"mean phase {m.phase[j, inside].mean():.3f} rad (pi/2 = {math.pi / 2:.3f})")

# Positive phase means the first series leads. Away from the cycle the pair
# is just noise.
k = int(np.argmin(np.abs(np.log(grid.periods / 8))))
print(f"period {grid.periods[k]:.1f}: mean coherence {m.values[k, m.inside_coi()[k]].mean():.3f}")

# In the default arrow convention a leading first series points down.
arrows = [a for a in arrow_field(m, RenderOptions(arrow_stride=(32, 1))) if a[1] == j]
dx, dy = np.mean([a[2] for a in arrows]), np.mean([a[3] for a in arrows])
print(f"ridge arrows: dx={dx:.2f}, dy={dy:.2f} (screen up is +dy)")

with open("coherence_example.svg", "wb") as fh:
    fh.write(render_map(m, opts=RenderOptions(title="x vs lagged x")))
print("wrote coherence_example.svg")
