"""Cross wavelet transform, smoothed wavelet coherence and partial coherence.

The smoothing operator is the usual Morlet choice: a Gaussian in time whose
standard deviation equals the scale, followed by a boxcar in scale spanning
0.6 octaves. Both passes renormalize by the kernel mass that falls inside the
record, so constants are preserved up to the edges.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.fft as sfft

from .cwt import CwtMatrix, ScaleGrid
from .errors import GridMismatchError

__all__ = [
    "SmoothingSpec",
    "CoherenceMap",
    "smooth_tf",
    "cross_transform",
    "coherency",
    "wtc",
    "phase_difference",
    "pwc",
    "xwt_power",
]

# Cells whose smoothed power is below this fraction of the row maximum are
# inside FFT round-off and are treated as empty.
POWER_FLOOR = 1e-13
# |coherency| at or above this makes the partial coherence denominator vanish.
DEGENERATE = 1 - 1e-6
# Below this |coherency| the phase is noise and is not reported.
PHASE_FLOOR = 1e-8


@dataclass(frozen=True)
class SmoothingSpec:
    """Gaussian time kernel (std = ``time_factor * scale``) and boxcar scale kernel."""

    time_factor: float = 1.0
    scale_octaves: float = 0.6

    def __post_init__(self):
        if not self.time_factor > 0:
            raise ValueError(f"time_factor must be positive, got {self.time_factor}")
        if not self.scale_octaves > 0:
            raise ValueError(f"scale_octaves must be positive, got {self.scale_octaves}")

    def scale_width(self, dj: float) -> int:
        """Boxcar width in scale steps, rounded to the nearest odd integer."""
        steps = self.scale_octaves / dj
        return max(1, 2 * int(math.floor((steps - 1) / 2 + 0.5)) + 1)


@dataclass(frozen=True, eq=False)
class CoherenceMap:
    """Real (J, N) map with phase, COI and optional significance threshold.

    ``kind`` is one of ``"wtc"``, ``"pwc"`` or ``"xwt_power"``. Cells flagged
    in ``mask`` hold NaN in ``values`` (degenerate or empty cells).
    """

    kind: str
    values: np.ndarray
    phase: np.ndarray
    grid: ScaleGrid
    coi: np.ndarray
    mask: np.ndarray
    sig_threshold: np.ndarray | None = None
    start_date: object = None
    source_names: tuple = ()
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        shape = (self.grid.J, self.grid.n)
        for name in ("values", "phase", "mask"):
            if getattr(self, name).shape != shape:
                raise GridMismatchError(f"{name} shape {getattr(self, name).shape} != {shape}")

    @property
    def periods(self) -> np.ndarray:
        return self.grid.periods

    def inside_coi(self) -> np.ndarray:
        return self.grid.periods[:, None] <= self.coi[None, :]

    def with_threshold(self, threshold) -> "CoherenceMap":
        return dataclasses.replace(self, sig_threshold=np.asarray(threshold, dtype=float))


def _check_same(*ws: CwtMatrix):
    first = ws[0]
    for w in ws[1:]:
        if w.grid != first.grid:
            raise GridMismatchError(f"scale grids differ: {first.grid} vs {w.grid}")
        if first.start_date is not None and w.start_date is not None and w.start_date != first.start_date:
            raise GridMismatchError(f"time axes differ: {first.start_date} vs {w.start_date}")


# ---------------------------------------------------------------------------
# smoothing


@lru_cache(maxsize=32)
def _time_kernels(n, dt, scales_key, time_factor):
    """rFFT of per-row Gaussian kernels and the in-record kernel mass per cell."""
    scales = np.asarray(scales_key)
    L = sfft.next_fast_len(3 * n - 2, real=True)
    lags = np.arange(-(n - 1), n)
    sigma = time_factor * scales[:, None] / dt
    g = np.exp(-0.5 * (lags[None, :] / sigma) ** 2)
    g /= g.sum(axis=1, keepdims=True)
    # circularly place lag 0 at index 0
    kern = np.zeros((scales.size, L))
    kern[:, :n] = g[:, n - 1 :]
    kern[:, L - (n - 1) :] = g[:, : n - 1]
    khat = sfft.rfft(kern, axis=1)
    mass = sfft.irfft(khat * sfft.rfft(np.ones(n), n=L)[None, :], n=L, axis=1)[:, :n]
    return L, khat, mass


def _smooth_time(m, grid, spec):
    L, khat, mass = _time_kernels(grid.n, grid.dt, tuple(grid.scales), spec.time_factor)
    out = sfft.irfft(sfft.rfft(m, n=L, axis=1) * khat, n=L, axis=1)[:, : grid.n]
    return out / mass


def _smooth_scale(m, width):
    if width == 1:
        return m
    half = width // 2
    J = m.shape[0]
    padded = np.zeros((J + 2 * half,) + m.shape[1:])
    padded[half : half + J] = m
    acc = np.zeros_like(m)
    for k in range(width):
        acc += padded[k : k + J]
    counts = np.array([min(j + half, J - 1) - max(j - half, 0) + 1 for j in range(J)], dtype=float)
    return acc / counts[:, None]


def _smooth_real(m, grid, spec):
    return _smooth_scale(_smooth_time(m, grid, spec), spec.scale_width(grid.dj))


def smooth_tf(m, grid: ScaleGrid, spec: SmoothingSpec = SmoothingSpec()):
    """Apply the time-then-scale smoothing operator to a (J, N) grid.

    Complex grids are smoothed part by part. Nonnegative real input gives
    nonnegative output (FFT round-off below zero is clipped).
    """
    m = np.asarray(m)
    if m.shape != (grid.J, grid.n):
        raise GridMismatchError(f"grid shape {m.shape} != {(grid.J, grid.n)}")
    if np.iscomplexobj(m):
        return _smooth_real(m.real, grid, spec) + 1j * _smooth_real(m.imag, grid, spec)
    out = _smooth_real(m.astype(float, copy=False), grid, spec)
    if np.all(m >= 0):
        np.maximum(out, 0.0, out=out)
    return out


# ---------------------------------------------------------------------------
# cross spectra and coherence


def cross_transform(wx: CwtMatrix, wy: CwtMatrix) -> CwtMatrix:
    """Cell-wise ``W_x * conj(W_y)``."""
    _check_same(wx, wy)
    if wx.coefficients is wy.coefficients or np.array_equal(wx.coefficients, wy.coefficients):
        # z * conj(z) can leave round-off in the imaginary part
        xy = (np.abs(wx.coefficients) ** 2).astype(complex)
    else:
        xy = wx.coefficients * np.conj(wy.coefficients)
    return CwtMatrix(
        xy,
        wx.grid,
        wx.coi,
        tuple(wx.source_names) + tuple(wy.source_names),
        wx.start_date if wx.start_date is not None else wy.start_date,
    )


def _smoothed_parts(wx, wy, spec):
    s = wx.grid.scales[:, None]
    sx = smooth_tf(np.abs(wx.coefficients) ** 2 / s, wx.grid, spec)
    sy = smooth_tf(np.abs(wy.coefficients) ** 2 / s, wy.grid, spec)
    sxy = smooth_tf(wx.coefficients * np.conj(wy.coefficients) / s, wx.grid, spec)
    return sx, sy, sxy


def _empty(p):
    floor = POWER_FLOOR * p.max(axis=1, keepdims=True)
    return (p <= floor) | (p <= 0)


def _coherency_from_parts(sx, sy, sxy, empty_value=np.nan):
    ex, ey = _empty(sx), _empty(sy)
    bad = ex | ey
    with np.errstate(invalid="ignore", divide="ignore"):
        g = sxy / np.sqrt(sx * sy)
    g[bad] = empty_value
    return g


def coherency(wx: CwtMatrix, wy: CwtMatrix, spec: SmoothingSpec = SmoothingSpec()) -> np.ndarray:
    """Complex coherency ``S(W_xy/s) / sqrt(S(|W_x|^2/s) S(|W_y|^2/s))``.

    Cells where either smoothed power is empty are NaN.
    """
    _check_same(wx, wy)
    return _coherency_from_parts(*_smoothed_parts(wx, wy, spec))


def phase_difference(sm_wxy, return_mask=False):
    """Angle of the smoothed cross spectrum in (-pi, pi]; zero cells get phase 0."""
    sm_wxy = np.asarray(sm_wxy)
    phase = np.arctan2(sm_wxy.imag, sm_wxy.real)
    phase[phase <= -np.pi] = np.pi
    zero = sm_wxy == 0
    phase[zero] = 0.0
    if return_mask:
        return phase, zero
    return phase


def _map_phase(g):
    phase = phase_difference(np.nan_to_num(g, nan=0.0))
    phase[~(np.abs(g) >= PHASE_FLOOR)] = np.nan
    return phase


def wtc(wx: CwtMatrix, wy: CwtMatrix, spec: SmoothingSpec = SmoothingSpec()) -> CoherenceMap:
    """Squared wavelet coherence ``|coherency|**2`` with its phase."""
    _check_same(wx, wy)
    g = coherency(wx, wy, spec)
    values = np.abs(g) ** 2
    return CoherenceMap(
        kind="wtc",
        values=values,
        phase=_map_phase(g),
        grid=wx.grid,
        coi=wx.coi,
        mask=np.isnan(values),
        start_date=wx.start_date,
        source_names=tuple(wx.source_names) + tuple(wy.source_names),
        meta={"smoothing": dataclasses.asdict(spec)},
    )


def pwc(wy: CwtMatrix, wx1: CwtMatrix, wx2: CwtMatrix, spec: SmoothingSpec = SmoothingSpec()) -> CoherenceMap:
    """Partial wavelet coherence of ``y`` and ``x1`` controlling for ``x2``.

    Uses the partial coherency built from complex coherencies,
    ``(g_yx1 - g_yx2 * g_x2x1) / sqrt((1 - |g_yx2|^2)(1 - |g_x2x1|^2))``,
    which is a Schur complement of the smoothed 3x3 cross-spectral matrix and
    therefore bounded by 1. Cells where the confounder is (nearly) perfectly
    coherent with ``y`` or ``x1`` are masked.
    """
    _check_same(wy, wx1, wx2)
    s = wy.grid.scales[:, None]
    grid = wy.grid
    p = {
        k: smooth_tf(np.abs(w.coefficients) ** 2 / s, grid, spec)
        for k, w in (("y", wy), ("x1", wx1), ("x2", wx2))
    }
    c_yx1 = smooth_tf(wy.coefficients * np.conj(wx1.coefficients) / s, grid, spec)
    c_yx2 = smooth_tf(wy.coefficients * np.conj(wx2.coefficients) / s, grid, spec)
    c_x2x1 = smooth_tf(wx2.coefficients * np.conj(wx1.coefficients) / s, grid, spec)

    g_yx1 = _coherency_from_parts(p["y"], p["x1"], c_yx1)
    # an empty confounder carries no signal: its coherency is zero, not undefined
    x2_empty = _empty(p["x2"])
    g_yx2 = _coherency_from_parts(p["y"], p["x2"], c_yx2)
    g_x2x1 = _coherency_from_parts(p["x2"], p["x1"], c_x2x1)
    g_yx2[x2_empty & ~_empty(p["y"])] = 0
    g_x2x1[x2_empty & ~_empty(p["x1"])] = 0

    a2 = np.abs(g_yx2) ** 2
    b2 = np.abs(g_x2x1) ** 2
    degenerate = (np.sqrt(a2) >= DEGENERATE) | (np.sqrt(b2) >= DEGENERATE)
    mask = degenerate | np.isnan(g_yx1) | np.isnan(g_yx2) | np.isnan(g_x2x1)

    num = g_yx1 - g_yx2 * g_x2x1
    with np.errstate(invalid="ignore", divide="ignore"):
        rp2 = np.abs(num) ** 2 / ((1 - a2) * (1 - b2))
    rp2[mask] = np.nan
    clipped = int(np.count_nonzero(rp2[~mask] > 1) + np.count_nonzero(rp2[~mask] < 0))
    rp2 = np.where(mask, np.nan, np.clip(rp2, 0.0, 1.0))

    phase = _map_phase(np.where(mask, np.nan, num))
    return CoherenceMap(
        kind="pwc",
        values=rp2,
        phase=phase,
        grid=grid,
        coi=wy.coi,
        mask=mask,
        start_date=wy.start_date,
        source_names=tuple(wy.source_names) + tuple(wx1.source_names) + tuple(wx2.source_names),
        meta={
            "smoothing": dataclasses.asdict(spec),
            "clip_count": clipped,
            "masked_cells": int(mask.sum()),
        },
    )


def xwt_power(wx: CwtMatrix, wy: CwtMatrix) -> CoherenceMap:
    """Cross wavelet power ``|W_xy|`` with the unsmoothed cross phase."""
    xy = cross_transform(wx, wy)
    values = np.abs(xy.coefficients)
    return CoherenceMap(
        kind="xwt_power",
        values=values,
        phase=phase_difference(xy.coefficients),
        grid=xy.grid,
        coi=xy.coi,
        mask=np.zeros(values.shape, dtype=bool),
        start_date=xy.start_date,
        source_names=xy.source_names,
    )
