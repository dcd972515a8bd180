"""Wavelet coherence toolkit for paired daily time series.

Morlet CWT, smoothed squared wavelet coherence with phase, partial wavelet
coherence and Monte Carlo red-noise significance, plus the data preparation
steps (rank transform, block chaining, derived ratios) used for market-driver
studies.
"""

__version__ = "0.1.0"

from .coherence import CoherenceMap, SmoothingSpec, coherency, cross_transform, phase_difference, pwc, smooth_tf, wtc, xwt_power
from .config import AnalysisConfig, parse_config
from .cwt import CwtMatrix, ScaleGrid, WaveletSpec, build_scale_grid, cone_of_influence, cwt_transform, fourier_factor, morlet_fourier
from .errors import ConfigError, DataError, GridMismatchError, StageError, WavecohError
from .render import RenderOptions, export_grid, load_map_json, render_map
from .series import TimeSeries, TrendsBlock, align_intersect, chain_trends_blocks, derive_series, load_csv, quantile_transform, write_csv
from .significance import Ar1Model, SignificanceResult, fit_ar1, mc_threshold, simulate_ar1
