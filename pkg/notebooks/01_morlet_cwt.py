# Morlet wavelet transform: scales, periods and the cone of influence.
#
# Run with:  python notebooks/01_morlet_cwt.py

import numpy as np

from wavecoh.cwt import build_scale_grid, cwt_transform, fourier_factor

# The Morlet wavelet with omega0 = 6 has a Fourier period slightly larger
# than its scale.
print("fourier factor:", round(fourier_factor(6.0), 4))

# Two bursts: a 16-day cycle in the first half, a 90-day cycle in the second.
n = 1024
t = np.arange(n)
x = np.where(t < n // 2, np.sin(2 * np.pi * t / 16), np.sin(2 * np.pi * t / 90))

grid = build_scale_grid(n)  # s0 = 2 days, 12 scales per octave
print("scales:", grid.J, "periods from", round(grid.periods[0], 2), "to", round(grid.periods[-1], 1))

w = cwt_transform(x, grid)
power = w.power

# Where does each half put its power?
for label, cols in (("first half", slice(100, 400)), ("second half", slice(624, 924))):
    j = int(np.argmax(power[:, cols].mean(axis=1)))
    print(f"{label}: peak period {grid.periods[j]:.1f} days")

# The cone of influence grows linearly from the record edges. Periods above it
# are contaminated by the zero padding.
coi = w.coi
print("COI at t=0, 100, n/2:", coi[0], round(coi[100], 1), round(coi[n // 2], 1))
print("fraction of cells inside the COI:", round(w.inside_coi().mean(), 3))

# Linearity is exact: doubling the input doubles every coefficient.
w2 = cwt_transform(2 * x, grid)
print("linear:", np.allclose(w2.coefficients, 2 * w.coefficients))
