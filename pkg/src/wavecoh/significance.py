"""Monte Carlo significance of coherence maps against an AR(1) red-noise null.

Each replication draws from its own RNG substream, spawned from the run seed
and indexed by replication number, so results do not depend on how the
replications are scheduled.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter
from scipy.stats import rankdata

from .coherence import pwc, wtc
from .cwt import cwt_transform
from .errors import ConfigError, DataError
from .series import TimeSeries

__all__ = [
    "Ar1Model",
    "SignificanceResult",
    "fit_ar1",
    "simulate_ar1",
    "replication_stream",
    "null_map",
    "mc_threshold",
]

PHI_MAX = 0.99
_BATCH = 8


@dataclass(frozen=True)
class Ar1Model:
    phi: float
    sigma: float
    mean: float = 0.0

    def __post_init__(self):
        if not abs(self.phi) < 1:
            raise ValueError(f"AR(1) coefficient must satisfy |phi| < 1, got {self.phi}")
        if not self.sigma >= 0:
            raise ValueError(f"sigma must be nonnegative, got {self.sigma}")


def fit_ar1(ts) -> Ar1Model:
    """Lag-1 autocorrelation fit, with phi clamped to ``[0, 0.99]``."""
    x = np.asarray(ts.values if isinstance(ts, TimeSeries) else ts, dtype=float)
    if x.size < 8:
        raise DataError(f"need at least 8 observations to fit AR(1), got {x.size}")
    mean = x.mean()
    d = x - mean
    var = np.dot(d, d) / x.size
    if not var > 0:
        raise DataError("cannot fit AR(1) to a constant series")
    phi = float(np.dot(d[:-1], d[1:]) / np.dot(d, d))
    phi = min(max(phi, 0.0), PHI_MAX)
    return Ar1Model(phi=phi, sigma=float(math.sqrt(var * (1 - phi**2))), mean=float(mean))


def _ar1_path(model: Ar1Model, n: int, rng: np.random.Generator, x0=None) -> np.ndarray:
    z = rng.standard_normal(n)
    if x0 is None:
        x0 = model.mean + model.sigma / math.sqrt(1 - model.phi**2) * z[0]
    u = model.mean * (1 - model.phi) + model.sigma * z[1:]
    rest, _ = lfilter([1.0], [1.0, -model.phi], u, zi=[model.phi * x0])
    return np.concatenate([[x0], rest])


def simulate_ar1(model: Ar1Model, n: int, stream, x0=None, start_date="2000-01-01", name="ar1") -> TimeSeries:
    """Simulate ``n`` AR(1) steps.

    ``stream`` is a :class:`numpy.random.Generator`, or an int/SeedSequence
    used to build one. The first value is drawn from the stationary
    distribution unless ``x0`` is given.
    """
    if n < 2:
        raise ValueError("need n >= 2")
    rng = stream if isinstance(stream, np.random.Generator) else np.random.default_rng(stream)
    return TimeSeries(name, start_date, _ar1_path(model, n, rng, x0))


def replication_stream(seed: int, index: int) -> np.random.Generator:
    """Generator for replication ``index`` of a run seeded with ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


@dataclass(frozen=True, eq=False)
class SignificanceResult:
    """Null-quantile thresholds and, when an observed map was given, its mask."""

    threshold: np.ndarray
    mask: np.ndarray | None
    nsims: int
    seed: int
    level: float
    mode: str
    map_kind: str

    def significant_fraction(self, region=None) -> float:
        if self.mask is None:
            raise ValueError("no observed map was compared")
        m = self.mask if region is None else self.mask[region]
        return float(m.mean()) if m.size else 0.0

    def to_dict(self) -> dict:
        return {
            "map_kind": self.map_kind,
            "nsims": self.nsims,
            "seed": self.seed,
            "level": self.level,
            "mode": self.mode,
            "threshold": self.threshold.tolist(),
            "mask": None if self.mask is None else self.mask.astype(int).tolist(),
        }


def _rank_uniform(x):
    return rankdata(x, method="average") / (x.size + 1)


def null_map(map_kind, models, n, config, index) -> np.ndarray:
    """Coherence values of replication ``index`` under the red-noise null."""
    rng = replication_stream(config.seed, index)
    grid = config.scale_grid(n)
    series = [_ar1_path(m, n, rng) for m in models]
    if config.transform == "quantile":
        series = [_rank_uniform(x) for x in series]
    ws = [cwt_transform(x, grid, config.wavelet, detrend=config.detrend) for x in series]
    if map_kind == "wtc":
        return wtc(ws[0], ws[1], config.smoothing).values
    return pwc(ws[0], ws[1], ws[2], config.smoothing).values


class _TopK:
    """Exact upper order statistics of a stream, grouped by key.

    Keeps only the largest ``k`` values seen per group; enough to read off a
    high quantile of the full pooled sample.
    """

    def __init__(self, k):
        self.k = k
        self.top = np.empty(0)

    def add(self, values):
        values = values[~np.isnan(values)]
        pool = np.concatenate([self.top, values])
        if pool.size > self.k:
            pool = np.partition(pool, pool.size - self.k)[pool.size - self.k :]
        self.top = pool


def _upper_quantile(top_sorted_desc, total, q):
    """numpy 'linear' quantile of a sample of size ``total`` from its top values."""
    h = q * (total - 1)
    lo, hi = math.floor(h), math.ceil(h)
    a = top_sorted_desc[total - 1 - lo]
    b = top_sorted_desc[total - 1 - hi]
    return a + (b - a) * (h - lo)


def _need(total, q):
    return total - math.floor(q * (total - 1)) + 1


def mc_threshold(map_kind, models, config, n, observed=None) -> SignificanceResult:
    """Monte Carlo ``config.sig_level`` quantile of null coherence.

    ``models`` are the AR(1) fits of the analyzed (already transformed) series:
    two for ``wtc`` (x, y) and three for ``pwc`` (y, x1, x2). Each replication
    draws independent surrogates, applies the same transform as the data and
    runs the same coherence estimator. In ``per_scale`` mode null values are
    pooled over the COI-interior columns of each scale (all columns when a
    scale has none); ``per_cell`` mode uses each cell on its own.
    """
    if map_kind not in ("wtc", "pwc"):
        raise ConfigError("map_kind", f"must be 'wtc' or 'pwc', got {map_kind!r}")
    expected = 2 if map_kind == "wtc" else 3
    if len(models) != expected:
        raise ConfigError("models", f"{map_kind} needs {expected} AR(1) models, got {len(models)}")
    if config.nsims < 100:
        raise ConfigError("nsims", f"must be >= 100, got {config.nsims}")

    grid = config.scale_grid(n)
    nsims, q = config.nsims, config.sig_level
    inside = grid.periods[:, None] <= (
        grid.fourier_factor * math.sqrt(2) * np.minimum(np.arange(n), n - 1 - np.arange(n))
    )[None, :]
    pool_cols = [inside[j] if inside[j].any() else np.ones(n, bool) for j in range(grid.J)]

    per_cell = config.threshold_mode == "per_cell"
    if per_cell:
        k = _need(nsims, q)
        top = np.full((0, grid.J, n), np.nan)
        nan_count = np.zeros((grid.J, n), dtype=int)
    else:
        trackers = [_TopK(_need(nsims * int(c.sum()), q)) for c in pool_cols]
        counts = np.zeros(grid.J, dtype=int)

    def run(batch):
        return [null_map(map_kind, models, n, config, i) for i in batch]

    batches = [range(b, min(b + _BATCH, nsims)) for b in range(0, nsims, _BATCH)]
    if config.workers > 1:
        with ThreadPoolExecutor(config.workers) as ex:
            results = ex.map(run, batches)
            chunks = list(results)
    else:
        chunks = map(run, batches)

    for chunk in chunks:
        stack = np.stack(chunk)
        if per_cell:
            nan_count += np.isnan(stack).sum(axis=0)
            pool = np.concatenate([top, np.where(np.isnan(stack), -np.inf, stack)])
            if pool.shape[0] > k:
                pool = np.partition(pool, pool.shape[0] - k, axis=0)[pool.shape[0] - k :]
            top = pool
        else:
            for j, cols in enumerate(pool_cols):
                vals = stack[:, j, cols].ravel()
                counts[j] += int(np.count_nonzero(~np.isnan(vals)))
                trackers[j].add(vals)

    threshold = np.empty((grid.J, n))
    if per_cell:
        top = -np.sort(-top, axis=0)
        for j in range(grid.J):
            for t in range(n):
                total = nsims - nan_count[j, t]
                threshold[j, t] = _upper_quantile(top[:, j, t], total, q) if total >= 2 else 1.0
    else:
        for j, tr in enumerate(trackers):
            total = counts[j]
            if total < 2:
                threshold[j] = 1.0
                continue
            threshold[j] = _upper_quantile(np.sort(tr.top)[::-1], total, q)
    threshold = np.clip(threshold, 0.0, 1.0)

    mask = None
    if observed is not None:
        values = observed.values if hasattr(observed, "values") else np.asarray(observed)
        if values.shape != threshold.shape:
            raise ConfigError("observed", f"map shape {values.shape} != threshold {threshold.shape}")
        with np.errstate(invalid="ignore"):
            mask = np.nan_to_num(values, nan=-1.0) > threshold
    return SignificanceResult(threshold, mask, nsims, config.seed, q, config.threshold_mode, map_kind)
