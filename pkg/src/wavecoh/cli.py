"""Command-line interface.

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 partial failure of a batch run.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import AnalysisConfig, parse_config
from .cwt import cwt_transform
from .errors import ConfigError, DataError, StageError, WavecohError
from .pipeline import bundled_manifest_path, run_pair, run_partial, run_replication
from .render import RenderOptions, load_map_json, render_map
from .series import align_intersect, chain_trends_blocks, derive_series, load_csv, quantile_transform, write_csv

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_PARTIAL = 0, 1, 2, 3

log = logging.getLogger("wavecoh")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# config keys exposed as flags: (flag, key, type)
_CONFIG_FLAGS = [
    ("--omega0", "omega0", float),
    ("--s0", "s0", float),
    ("--dj", "dj", str),
    ("--max-period-fraction", "max_period_fraction", float),
    ("--time-smoothing", "time_smoothing", float),
    ("--scale-smoothing", "scale_smoothing", float),
    ("--nsims", "nsims", int),
    ("--seed", "seed", int),
    ("--sig-level", "sig_level", float),
    ("--threshold-mode", "threshold_mode", str),
    ("--workers", "workers", int),
    ("--transform", "transform", str),
    ("--fill", "fill", str),
    ("--overlap-window", "overlap_window", int),
    ("--color-map", "color_map", str),
    ("--lead-convention", "lead_convention", str),
    ("--arrow-min-coherence", "arrow_min_coherence", float),
    ("--image-format", "image_format", str),
]


def _add_config_flags(p):
    g = p.add_argument_group("analysis configuration (override --config)")
    g.add_argument("--config", type=Path, help="flat JSON config file")
    for flag, key, typ in _CONFIG_FLAGS:
        g.add_argument(flag, dest=f"cfg_{key}", type=typ, default=None, metavar=key.upper())
    g.add_argument("--detrend", dest="cfg_detrend", action="store_const", const=True, default=None,
                   help="remove a linear trend instead of the mean before the CWT")
    g.add_argument("--out", dest="cfg_output_dir", default=None, help="output directory")


def _config(args) -> AnalysisConfig:
    overrides = {k[4:]: v for k, v in vars(args).items() if k.startswith("cfg_")}
    return parse_config(args.config, overrides)


def _series_arg(text):
    """``PATH`` or ``PATH:COLUMN``."""
    if ":" in text and not Path(text).exists():
        path, _, column = text.rpartition(":")
        return {"path": path, "column": column}
    return {"path": text}


def _load(spec, args):
    return load_csv(spec["path"], args.date_column, spec.get("column") or _only_column(spec["path"], args.date_column),
                    fill=getattr(args, "cfg_fill", None) or "none")


def _only_column(path, date_column):
    import csv

    try:
        with open(path, newline="", encoding="utf-8") as fh:
            header = next(csv.reader(fh), [])
    except FileNotFoundError:
        raise DataError(f"no such file: {path}") from None
    cols = [c for c in header if c != date_column]
    if len(cols) != 1:
        raise DataError(f"{path}: give the value column as PATH:COLUMN, found {cols}")
    return cols[0]


# ---------------------------------------------------------------------------
# subcommands


def cmd_transform(args):
    ts = quantile_transform(_load(_series_arg(args.input), args))
    write_csv(args.output, ts, date_column=args.date_column)
    print(f"wrote {args.output} ({ts.n} rows)")


def cmd_chain_trends(args):
    blocks = [_load(_series_arg(b), args) for b in args.blocks]
    blocks.sort(key=lambda b: b.start_date)
    ts = chain_trends_blocks(blocks, args.overlap_window, name=args.name)
    write_csv(args.output, ts, date_column=args.date_column)
    print(f"wrote {args.output} ({ts.n} rows, {ts.start_date}..{ts.end_date})")


def cmd_derive(args):
    a, b = align_intersect(_load(_series_arg(args.a), args), _load(_series_arg(args.b), args))
    ts = derive_series(args.kind, a, b)
    if args.name:
        ts = ts.replace(name=args.name)
    write_csv(args.output, ts, date_column=args.date_column)
    print(f"wrote {args.output} ({ts.n} rows)")


def cmd_cwt(args):
    cfg = _config(args)
    ts = _load(_series_arg(args.input), args)
    if cfg.transform == "quantile":
        ts = quantile_transform(ts)
    grid = cfg.scale_grid(ts.n)
    w = cwt_transform(ts, grid, cfg.wavelet, cfg.detrend)
    doc = {
        "series": ts.name,
        "start_date": ts.start_date.isoformat(),
        "grid": grid.to_dict(),
        "periods": grid.periods.tolist(),
        "coi": w.coi.tolist(),
        "real": w.coefficients.real.tolist(),
        "imag": w.coefficients.imag.tolist(),
        "config": cfg.to_dict(),
    }
    Path(args.output).write_text(json.dumps(doc, separators=(",", ":")), encoding="utf-8")
    peak = int(np.argmax((np.abs(w.coefficients) ** 2).mean(axis=1)))
    print(f"wrote {args.output} ({grid.J} scales x {grid.n} days); peak mean power at period {grid.periods[peak]:.1f} days")


def _report(bundle):
    print(f"{bundle.label}: {bundle.kind} -> {bundle.directory} "
          f"({100 * bundle.significant_fraction:.1f}% of COI interior significant)")


def cmd_wtc(args):
    cfg = _config(args)
    b = run_pair(_series_arg(args.x), _series_arg(args.y), cfg, label=args.label, window=(args.start, args.end))
    _report(b)


def cmd_pwc(args):
    cfg = _config(args)
    b = run_partial(_series_arg(args.x), _series_arg(args.y), _series_arg(args.confounder), cfg,
                    label=args.label, window=(args.start, args.end))
    _report(b)


def cmd_render(args):
    m, sig = load_map_json(args.map)
    fmt = args.format or Path(args.output).suffix.lstrip(".").lower() or "svg"
    stride = tuple(args.arrow_stride) if args.arrow_stride else None
    opts = RenderOptions(
        color_map=args.color_map,
        arrow_stride=stride,
        arrow_min_coherence=args.arrow_min_coherence,
        lead_convention=args.lead_convention,
        width=args.width,
        height=args.height,
        fmt=fmt,
        title=args.title,
    )
    Path(args.output).write_bytes(render_map(m, sig, opts))
    print(f"wrote {args.output}")


def cmd_replicate(args):
    cfg = _config(args)
    manifest = bundled_manifest_path() if args.bundled else args.manifest
    if manifest is None:
        raise ConfigError("manifest", "give --manifest PATH or --bundled")
    index = run_replication(manifest, cfg, data_root=args.data_root, parallel=args.parallel)
    for e in index["entries"]:
        if e["status"] == "ok":
            print(f"  ok      {e['label']}  {100 * e['significant_fraction_coi']:.1f}% significant")
        else:
            print(f"  FAILED  {e['label']}  {e['error']}")
    print(f"{len(index['entries']) - index['failed']}/{len(index['entries'])} entries succeeded")
    return EXIT_PARTIAL if index["failed"] else EXIT_OK


# ---------------------------------------------------------------------------


def build_parser():
    p = _Parser(prog="wavecoh", description="Wavelet coherence analysis of paired daily time series.")
    p.add_argument("--version", action="version", version=f"wavecoh {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    p.add_argument("--date-column", default="date", help="name of the date column in input CSVs")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("transform", help="rank (quantile) transform a series")
    s.add_argument("input", help="CSV[:COLUMN]")
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--fill", dest="cfg_fill", choices=["none", "forward"])
    s.set_defaults(func=cmd_transform)

    s = sub.add_parser("chain-trends", help="chain overlapping search-interest blocks")
    s.add_argument("blocks", nargs="+", help="block CSV[:COLUMN] files")
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--overlap-window", type=int, default=30)
    s.add_argument("--name", default="trends")
    s.set_defaults(func=cmd_chain_trends)

    s = sub.add_parser("derive", help="derive a ratio or per-transaction price series")
    s.add_argument("kind", choices=["ratio", "per_event_price"])
    s.add_argument("a", help="numerator CSV[:COLUMN]")
    s.add_argument("b", help="denominator CSV[:COLUMN]")
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--name")
    s.set_defaults(func=cmd_derive)

    s = sub.add_parser("cwt", help="continuous wavelet transform of one series")
    s.add_argument("input", help="CSV[:COLUMN]")
    s.add_argument("-o", "--output", required=True, help="JSON output")
    _add_config_flags(s)
    s.set_defaults(func=cmd_cwt)

    for name, func, help_ in (("wtc", cmd_wtc, "wavelet coherence with significance"),
                              ("pwc", cmd_pwc, "partial wavelet coherence with significance")):
        s = sub.add_parser(name, help=help_)
        s.add_argument("x", help="first series CSV[:COLUMN]")
        s.add_argument("y", help="second series CSV[:COLUMN]")
        if name == "pwc":
            s.add_argument("confounder", help="controlled series CSV[:COLUMN]")
        s.add_argument("--label", default=name, help="bundle directory name")
        s.add_argument("--start", help="first day of the analysis window (ISO)")
        s.add_argument("--end", help="last day of the analysis window (ISO)")
        _add_config_flags(s)
        s.set_defaults(func=func)

    s = sub.add_parser("render", help="render an exported map.json as SVG or PNG")
    s.add_argument("map", help="map.json from wtc/pwc")
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--format", choices=["svg", "png"])
    s.add_argument("--color-map", default="jet")
    s.add_argument("--arrow-stride", type=int, nargs=2, metavar=("TIME", "SCALE"))
    s.add_argument("--arrow-min-coherence", type=float, default=0.5)
    s.add_argument("--lead-convention", choices=["paper_downleads", "math_angle"], default="paper_downleads")
    s.add_argument("--width", type=int, default=960)
    s.add_argument("--height", type=int, default=480)
    s.add_argument("--title")
    s.set_defaults(func=cmd_render)

    s = sub.add_parser("replicate", help="run every entry of a replication manifest")
    g = s.add_mutually_exclusive_group()
    g.add_argument("--manifest", type=Path)
    g.add_argument("--bundled", action="store_true", help="use the bundled driver-analysis manifest")
    s.add_argument("--data-root", type=Path, help="directory that relative series paths resolve against")
    s.add_argument("--parallel", type=int, default=1, help="entries run concurrently")
    _add_config_flags(s)
    s.set_defaults(func=cmd_replicate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        rc = args.func(args)
    except ConfigError as exc:
        print(f"wavecoh: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except StageError as exc:
        code = EXIT_USAGE if isinstance(exc.cause, ConfigError) else EXIT_DATA
        print(f"wavecoh: {exc}", file=sys.stderr)
        return code
    except (DataError, WavecohError, OSError) as exc:
        print(f"wavecoh: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK if rc is None else rc


if __name__ == "__main__":
    sys.exit(main())
