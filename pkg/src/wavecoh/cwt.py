"""Continuous Morlet wavelet transform computed with FFTs.

Conventions follow the usual Torrence & Compo normalization: the daughter
wavelet at scale ``s`` has unit energy per sample, scales are ``s0 * 2**(j*dj)``
and ``period = fourier_factor * scale``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft
from scipy.signal import detrend as _linear_detrend

from .errors import ConfigError, GridMismatchError
from .series import TimeSeries

__all__ = [
    "WaveletSpec",
    "ScaleGrid",
    "CwtMatrix",
    "fourier_factor",
    "build_scale_grid",
    "morlet_fourier",
    "cwt_transform",
    "cone_of_influence",
]

COI_EFOLD = math.sqrt(2.0)
# Gaussian envelope half-width (in scales) kept clear of wrap-around
_PAD_SCALES = 6.0


@dataclass(frozen=True)
class WaveletSpec:
    omega0: float = 6.0

    def __post_init__(self):
        if not self.omega0 >= 5:
            raise ConfigError("omega0", f"must be >= 5 for an approximately zero-mean Morlet, got {self.omega0}")


def fourier_factor(omega0: float = 6.0) -> float:
    """Ratio of Fourier period to Morlet scale."""
    return 4 * math.pi / (omega0 + math.sqrt(2 + omega0**2))


@dataclass(frozen=True, eq=False)
class ScaleGrid:
    """Geometric ladder of scales for a record of ``n`` samples."""

    n: int
    dt: float
    s0: float
    dj: float
    J: int
    omega0: float = 6.0
    scales: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        scales = self.s0 * 2.0 ** (np.arange(self.J) * self.dj)
        scales.flags.writeable = False
        object.__setattr__(self, "scales", scales)

    @property
    def fourier_factor(self) -> float:
        return fourier_factor(self.omega0)

    @property
    def periods(self) -> np.ndarray:
        return self.fourier_factor * self.scales

    def __eq__(self, other):
        if not isinstance(other, ScaleGrid):
            return NotImplemented
        return (self.n, self.dt, self.s0, self.dj, self.J, self.omega0) == (
            other.n, other.dt, other.s0, other.dj, other.J, other.omega0
        )

    __hash__ = None

    def to_dict(self) -> dict:
        return dict(n=self.n, dt=self.dt, s0=self.s0, dj=self.dj, J=self.J, omega0=self.omega0)


def build_scale_grid(n, dt=1.0, s0=None, dj=1 / 12, max_period_fraction=1.0, omega0=6.0) -> ScaleGrid:
    """Largest geometric scale ladder whose longest period fits the record.

    ``J`` is the number of scales ``s0 * 2**(j*dj)`` whose Fourier period is
    at most ``max_period_fraction * n * dt``. ``s0`` defaults to ``2 * dt``.
    """
    if s0 is None:
        s0 = 2 * dt
    if n < 8:
        raise ConfigError("n", f"need at least 8 samples, got {n}")
    if not dt > 0:
        raise ConfigError("dt", f"must be positive, got {dt}")
    if not s0 >= dt:
        raise ConfigError("s0", f"must be >= dt ({dt}), got {s0}")
    if not 0 < dj <= 1:
        raise ConfigError("dj", f"must lie in (0, 1], got {dj}")
    if not 0 < max_period_fraction <= 1:
        raise ConfigError("max_period_fraction", f"must lie in (0, 1], got {max_period_fraction}")
    WaveletSpec(omega0)

    ff = fourier_factor(omega0)
    cap = max_period_fraction * n * dt
    if ff * s0 > cap:
        raise ConfigError("s0", f"smallest period {ff * s0:.4g} exceeds record cap {cap:.4g}; no admissible scales")
    J = int(math.floor(math.log2(cap / (ff * s0)) / dj + 1e-9)) + 1
    while J > 1 and ff * s0 * 2.0 ** ((J - 1) * dj) > cap:
        J -= 1
    return ScaleGrid(n=int(n), dt=float(dt), s0=float(s0), dj=float(dj), J=J, omega0=float(omega0))


def morlet_fourier(omega, s, spec: WaveletSpec = WaveletSpec(), dt=1.0):
    """Fourier transform of the normalized Morlet daughter wavelet at scale ``s``.

    Zero for non-positive angular frequencies (analytic wavelet).
    """
    if np.any(np.asarray(s) <= 0):
        raise ValueError("scale must be positive")
    omega = np.asarray(omega, dtype=float)
    norm = math.pi**-0.25 * np.sqrt(2 * np.pi * s / dt)
    out = norm * np.exp(-0.5 * (s * omega - spec.omega0) ** 2)
    return np.where(omega > 0, out, 0.0)


def cone_of_influence(n, dt=1.0, fourier_factor=fourier_factor(6.0)) -> np.ndarray:
    """Longest reliable period at each time index: e-folding time times the Fourier factor."""
    if n < 2:
        raise ValueError("need n >= 2")
    t = np.arange(n)
    return fourier_factor * COI_EFOLD * np.minimum(t, n - 1 - t) * dt


@dataclass(frozen=True, eq=False)
class CwtMatrix:
    """Complex (scale x time) wavelet coefficients plus their grid and COI."""

    coefficients: np.ndarray
    grid: ScaleGrid
    coi: np.ndarray
    source_names: tuple = ()
    start_date: object = None

    def __post_init__(self):
        if self.coefficients.shape != (self.grid.J, self.grid.n):
            raise GridMismatchError(
                f"coefficients shape {self.coefficients.shape} != grid {(self.grid.J, self.grid.n)}"
            )

    @property
    def power(self) -> np.ndarray:
        return np.abs(self.coefficients) ** 2

    @property
    def periods(self) -> np.ndarray:
        return self.grid.periods

    def inside_coi(self) -> np.ndarray:
        """Boolean (J, N) mask of cells whose period lies under the COI."""
        return self.grid.periods[:, None] <= self.coi[None, :]


def _pad_length(n, scales, dt):
    margin = int(math.ceil(_PAD_SCALES * scales[-1] / dt))
    return 1 << int(math.ceil(math.log2(n + margin)))


def cwt_transform(ts, grid: ScaleGrid, spec: WaveletSpec = WaveletSpec(), detrend=False) -> CwtMatrix:
    """Morlet CWT of a series on ``grid``.

    The series mean (or a linear trend with ``detrend=True``) is removed, the
    record is zero padded to a power of two long enough that the widest
    wavelet does not wrap around, and each scale row is the inverse FFT of the
    series spectrum times :func:`morlet_fourier`.
    """
    if isinstance(ts, TimeSeries):
        x = ts.values
        names = (ts.name,)
        start = ts.start_date
    else:
        x = np.asarray(ts, dtype=float)
        names = ()
        start = None
    if x.ndim != 1 or x.size != grid.n:
        raise GridMismatchError(f"series length {x.size} does not match grid n={grid.n}")
    if spec.omega0 != grid.omega0:
        raise GridMismatchError(f"wavelet omega0={spec.omega0} but grid built for omega0={grid.omega0}")

    x = _linear_detrend(x) if detrend else x - x.mean()
    L = _pad_length(grid.n, grid.scales, grid.dt)
    xhat = sfft.fft(x, n=L)
    omega = 2 * np.pi * sfft.fftfreq(L, grid.dt)
    psi_hat = morlet_fourier(omega[None, :], grid.scales[:, None], spec, grid.dt)
    W = sfft.ifft(xhat[None, :] * psi_hat, axis=1)[:, : grid.n]
    coi = cone_of_influence(grid.n, grid.dt, grid.fourier_factor)
    return CwtMatrix(np.ascontiguousarray(W), grid, coi, names, start)
