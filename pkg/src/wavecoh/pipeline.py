"""End-to-end runs: load, align, transform, transform to wavelets, compare, test, export.

A run writes one bundle directory::

    <label>/map.csv  map.json  map.svg  significance.json  run.json

Nothing in a bundle depends on wall-clock time, so identical inputs, config
and seed reproduce every file byte for byte.
"""

from __future__ import annotations

import glob
import hashlib
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from . import __version__
from .coherence import pwc, wtc
from .config import AnalysisConfig
from .cwt import cwt_transform
from .errors import ConfigError, DataError, StageError, WavecohError
from .render import RenderOptions, export_grid, render_map
from .series import (
    TimeSeries,
    align_intersect,
    chain_trends_blocks,
    derive_series,
    load_csv,
    quantile_transform,
    restrict,
)
from .significance import fit_ar1, mc_threshold

log = logging.getLogger(__name__)

__all__ = [
    "resolve_series",
    "run_pair",
    "run_partial",
    "run_entry",
    "run_replication",
    "load_manifest",
    "bundled_manifest_path",
    "Bundle",
]


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _single_value_column(path, date_column):
    import csv

    with open(path, newline="", encoding="utf-8") as fh:
        header = next(csv.reader(fh), [])
    cols = [c for c in header if c != date_column]
    if len(cols) != 1:
        raise DataError(f"{path}: specify a value column, found {cols}")
    return cols[0]


def resolve_series(spec, config: AnalysisConfig, base_dir=".", inputs=None) -> TimeSeries:
    """Build a series from a source description.

    ``spec`` is a path, or a dict with one of

    * ``path`` (+ optional ``column``, ``date_column``, ``name``),
    * ``derive`` (``ratio`` or ``per_event_price``) with sources ``a`` and ``b``,
    * ``chain`` (list of paths or a glob pattern) with optional ``column``
      and ``overlap_window``.

    Every file read is appended to ``inputs`` as ``(path, sha256)``.
    """
    base_dir = Path(base_dir)
    if inputs is None:
        inputs = []
    if isinstance(spec, (str, Path)):
        spec = {"path": str(spec)}
    if not isinstance(spec, dict):
        raise DataError(f"cannot interpret series source {spec!r}")
    date_column = spec.get("date_column", "date")

    def read(p, column, name=None):
        path = base_dir / p
        if not path.is_file():
            raise DataError(f"no such file: {path}")
        column = column or _single_value_column(path, date_column)
        inputs.append((str(path), _sha256(path)))
        return load_csv(path, date_column, column, fill=config.fill, name=name)

    if "path" in spec:
        ts = read(spec["path"], spec.get("column"), spec.get("name"))
    elif "derive" in spec:
        a = resolve_series(spec["a"], config, base_dir, inputs)
        b = resolve_series(spec["b"], config, base_dir, inputs)
        a, b = align_intersect(a, b)
        ts = derive_series(spec["derive"], a, b)
        if "name" in spec:
            ts = ts.replace(name=spec["name"])
    elif "chain" in spec:
        paths = spec["chain"]
        if isinstance(paths, str):
            paths = sorted(glob.glob(str(base_dir / paths)))
            if not paths:
                raise DataError(f"no files match {base_dir / spec['chain']}")
        blocks = [read(p, spec.get("column")) for p in paths]
        blocks.sort(key=lambda b: b.start_date)
        ts = chain_trends_blocks(
            blocks, spec.get("overlap_window", config.overlap_window), spec.get("name", "trends")
        )
    else:
        raise DataError(f"series source needs 'path', 'derive' or 'chain': {spec!r}")
    if "start" in spec or "end" in spec:
        ts = restrict(ts, spec.get("start"), spec.get("end"))
    return ts


@dataclass
class Bundle:
    label: str
    directory: Path
    kind: str
    significant_fraction: float
    files: dict = field(default_factory=dict)
    run: dict = field(default_factory=dict)


class _Stages:
    def __init__(self):
        self.done = []

    def __call__(self, name, fn, *args, **kw):
        try:
            out = fn(*args, **kw)
        except StageError:
            raise
        except Exception as exc:  # attribute any failure to its stage
            raise StageError(name, exc) from exc
        self.done.append(name)
        return out


def _prepare(series, config, window):
    if window and (window[0] or window[1]):
        series = [restrict(s, *window) for s in series]
    first = series[0]
    for s in series[1:]:
        first, _ = align_intersect(first, s)
    series = [align_intersect(first, s)[1] for s in series]
    if config.transform == "quantile":
        series = [quantile_transform(s) for s in series]
    return series


def _analyze(kind, sources, config, out_dir, label, base_dir=".", window=None):
    stage = _Stages()
    inputs = []
    raw = [stage("load", resolve_series, s, config, base_dir, inputs) for s in sources]
    series = stage("align", _prepare, raw, config, window)
    n = series[0].n
    grid = stage("grid", config.scale_grid, n)
    ws = [stage("cwt", cwt_transform, s, grid, config.wavelet, config.detrend) for s in series]
    if kind == "wtc":
        m = stage("wtc", wtc, ws[0], ws[1], config.smoothing)
    else:
        m = stage("pwc", pwc, ws[0], ws[1], ws[2], config.smoothing)
    models = [stage("fit_ar1", fit_ar1, s) for s in series]
    sig = stage("significance", mc_threshold, kind, models, config, n, m)
    m = m.with_threshold(sig.threshold)
    m = _with_meta(m, config)

    out = Path(out_dir) / label
    out.mkdir(parents=True, exist_ok=True)
    inside = m.inside_coi() & ~m.mask
    frac = sig.significant_fraction(inside) if inside.any() else 0.0
    opts = RenderOptions(
        color_map=config.color_map,
        arrow_min_coherence=config.arrow_min_coherence,
        lead_convention=config.lead_convention,
        title=f"{label}: {' vs '.join(s.name for s in series)}",
    )
    files = {}
    files["map.csv"] = stage("export", export_grid, m, sig, out / "map.csv", "csv")
    files["map.json"] = stage("export", export_grid, m, sig, out / "map.json", "json")
    files["map.svg"] = out / "map.svg"
    files["map.svg"].write_bytes(stage("render", render_map, m, sig, opts))
    if config.image_format == "png":
        files["map.png"] = out / "map.png"
        files["map.png"].write_bytes(stage("render", render_map, m, sig, _replace_fmt(opts, "png")))
    files["significance.json"] = out / "significance.json"
    files["significance.json"].write_text(json.dumps(sig.to_dict(), separators=(",", ":")), encoding="utf-8")

    run = {
        "tool": "wavecoh",
        "version": __version__,
        "label": label,
        "kind": kind,
        "seed": config.seed,
        "config": config.to_dict(),
        "inputs": [{"path": p, "sha256": h} for p, h in inputs],
        "series": [
            {"name": s.name, "start": s.start_date.isoformat(), "end": s.end_date.isoformat(), "n": s.n}
            for s in series
        ],
        "ar1": [{"phi": md.phi, "sigma": md.sigma, "mean": md.mean} for md in models],
        "grid": grid.to_dict(),
        "stages": stage.done + ["write"],
        "significant_fraction_coi": frac,
        "pwc_clip_count": m.meta.get("clip_count"),
    }
    files["run.json"] = out / "run.json"
    files["run.json"].write_text(json.dumps(run, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    log.info("%s: %s done, %.1f%% of COI interior significant", label, kind, 100 * frac)
    return Bundle(label, out, kind, frac, files, run)


def _replace_fmt(opts, fmt):
    from dataclasses import replace

    return replace(opts, fmt=fmt)


def _with_meta(m, config):
    from dataclasses import replace

    return replace(m, meta={**m.meta, "config": config.to_dict()})


def run_pair(x_path, y_path, config: AnalysisConfig = AnalysisConfig(), out_dir=None, label="wtc",
             window=None, base_dir=".") -> Bundle:
    """Wavelet coherence of two series with red-noise significance.

    ``x_path``/``y_path`` are anything :func:`resolve_series` accepts. The
    first series is the "first" series of the phase convention.
    """
    out_dir = config.output_dir if out_dir is None else out_dir
    return _analyze("wtc", [x_path, y_path], config, out_dir, label, base_dir, window)


def run_partial(x_path, y_path, confounder_path, config: AnalysisConfig = AnalysisConfig(), out_dir=None,
                label="pwc", window=None, base_dir=".") -> Bundle:
    """Partial wavelet coherence of ``x`` and ``y`` controlling for ``confounder``."""
    out_dir = config.output_dir if out_dir is None else out_dir
    return _analyze("pwc", [x_path, y_path, confounder_path], config, out_dir, label, base_dir, window)


# ---------------------------------------------------------------------------
# manifests

_ENTRY_KEYS = {"label", "kind", "x", "y", "confounder", "start", "end", "config", "description"}


def bundled_manifest_path() -> Path:
    """Path of the bundled manifest listing the driver analyses."""
    return Path(str(resources.files("wavecoh") / "data" / "driver_manifest.json"))


def load_manifest(path) -> dict:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError("manifest", f"no such file: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("manifest", f"{path}: invalid JSON ({exc})") from None
    entries = doc.get("entries") if isinstance(doc, dict) else None
    if not isinstance(entries, list):
        raise ConfigError("manifest", f"{path}: expected an object with an 'entries' list")
    labels = set()
    for i, e in enumerate(entries):
        if not isinstance(e, dict) or "label" not in e:
            raise ConfigError("manifest", f"entry {i} has no label")
        if e["label"] in labels:
            raise ConfigError("manifest", f"duplicate label {e['label']!r}")
        labels.add(e["label"])
        unknown = set(e) - _ENTRY_KEYS
        if unknown:
            raise ConfigError("manifest", f"entry {e['label']!r}: unknown keys {sorted(unknown)}")
        kind = e.get("kind", "wtc")
        if kind not in ("wtc", "pwc"):
            raise ConfigError("manifest", f"entry {e['label']!r}: kind must be wtc or pwc")
        if "x" not in e or "y" not in e or (kind == "pwc" and "confounder" not in e):
            raise ConfigError("manifest", f"entry {e['label']!r}: missing series")
    return doc


def run_entry(entry, config: AnalysisConfig, out_dir, base_dir) -> Bundle:
    if entry.get("config"):
        config = config.replace(**entry["config"])
    window = (entry.get("start"), entry.get("end"))
    kind = entry.get("kind", "wtc")
    sources = [entry["x"], entry["y"]] + ([entry["confounder"]] if kind == "pwc" else [])
    return _analyze(kind, sources, config, out_dir, entry["label"], base_dir, window)


def run_replication(manifest_path, config: AnalysisConfig = AnalysisConfig(), out_dir=None, data_root=None,
                    parallel=1):
    """Run every manifest entry; failures are recorded and do not stop the rest.

    Relative series paths resolve against ``data_root`` (default: the
    manifest's directory). Writes ``index.json`` under ``out_dir`` and returns
    the index as a dict; ``index["failed"]`` counts failed entries.
    """
    manifest_path = Path(manifest_path)
    doc = load_manifest(manifest_path)
    out_dir = Path(config.output_dir if out_dir is None else out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    base_dir = Path(data_root) if data_root is not None else manifest_path.parent

    def one(entry):
        try:
            b = run_entry(entry, config, out_dir, base_dir)
            return {
                "label": entry["label"],
                "kind": b.kind,
                "status": "ok",
                "bundle": b.label,
                "significant_fraction_coi": b.significant_fraction,
            }
        except (WavecohError, OSError, ValueError) as exc:
            log.error("%s failed: %s", entry["label"], exc)
            return {"label": entry["label"], "kind": entry.get("kind", "wtc"), "status": "failed", "error": str(exc)}

    entries = doc["entries"]
    if parallel > 1:
        with ThreadPoolExecutor(parallel) as ex:
            results = list(ex.map(one, entries))
    else:
        results = [one(e) for e in entries]
    index = {
        "manifest": str(manifest_path),
        "entries": results,
        "failed": sum(r["status"] == "failed" for r in results),
    }
    (out_dir / "index.json").write_text(json.dumps(index, indent=2) + "\n", encoding="utf-8")
    return index

