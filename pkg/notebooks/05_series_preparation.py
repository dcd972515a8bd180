# Preparing daily series: ingestion, alignment, rank transform, chaining and
# derived ratios.

import datetime as dt
import tempfile
from pathlib import Path

import numpy as np

from wavecoh.series import (
    TimeSeries,
    TrendsBlock,
    align_intersect,
    chain_trends_blocks,
    derive_series,
    load_csv,
    quantile_transform,
    write_csv,
)

tmp = Path(tempfile.mkdtemp())
rng = np.random.default_rng(3)

# CSV in, CSV out. Gaps are errors unless forward fill is asked for.
path = tmp / "price.csv"
path.write_text("date,close\n2013-01-01,13.3\n2013-01-02,13.4\n2013-01-04,13.6\n")
try:
    load_csv(path, value_column="close")
except Exception as exc:
    print("strict:", exc)
print("filled:", load_csv(path, value_column="close", fill="forward").values)

# Alignment keeps the common days only.
a = TimeSeries("a", dt.date(2013, 1, 1), np.arange(10.0))
b = TimeSeries("b", dt.date(2013, 1, 6), np.arange(10.0))
a2, b2 = align_intersect(a, b)
print("aligned:", a2.start_date, "to", a2.end_date)

# The rank transform maps any marginal to a uniform one.
prices = TimeSeries("p", dt.date(2013, 1, 1), np.exp(np.cumsum(rng.standard_normal(500) * 0.05)))
q = quantile_transform(prices)
print("quantiles in (0, 1):", q.values.min() > 0, q.values.max() < 1)

# Search-interest exports come in blocks, each rescaled on its own. Chaining
# stitches them on their overlaps.
truth = 40 + 20 * np.sin(np.arange(400) / 20)
blocks = [TrendsBlock(dt.date(2012, 1, 1) + dt.timedelta(days=90 * k), c * truth[90 * k : 90 * k + 130])
          for k, c in enumerate([1.0, 0.4, 2.5, 0.8])]
chained = chain_trends_blocks(blocks)
ratio = chained.values / truth[: chained.n]
print("chained length:", chained.n, " ratio spread:", float(ratio.max() - ratio.min()))

# Derived series: the ratio of two aligned series.
vol = TimeSeries("trade", dt.date(2013, 1, 1), rng.uniform(1, 2, 10))
exch = TimeSeries("exchange", dt.date(2013, 1, 1), rng.uniform(2, 4, 10))
ratio = derive_series("ratio", vol, exch)
print(ratio.name, ratio.values.round(3)[:4])
write_csv(tmp / "ratio.csv", ratio)
print("wrote", tmp / "ratio.csv")
