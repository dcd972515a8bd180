"""Grid export (CSV/JSON) and coherence-map images (SVG reference, PNG raster).

Images show periods on a log2 axis increasing downward, cells outside the
cone of influence in paler colours, a thick black outline around significant
cells and phase arrows on a decimated lattice.
"""

from __future__ import annotations

import csv
import datetime as _dt
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .coherence import CoherenceMap
from .cwt import ScaleGrid
from .errors import GridMismatchError, WavecohError
from .significance import SignificanceResult

__all__ = [
    "RenderOptions",
    "export_grid",
    "load_map_json",
    "load_grid_csv",
    "arrow_field",
    "contour_loops",
    "render_map",
]


# ---------------------------------------------------------------------------
# export


def _axis_labels(m: CoherenceMap):
    if m.start_date is None:
        return [str(i) for i in range(m.grid.n)]
    start = m.start_date
    return [(start + _dt.timedelta(days=i)).isoformat() for i in range(m.grid.n)]


def _json_grid(a):
    return [[None if math.isnan(v) else v for v in row] for row in a.tolist()]


def export_grid(m: CoherenceMap, sig: SignificanceResult | None, path, fmt=None):
    """Write a map to ``path`` as CSV (values only) or JSON (everything).

    CSV: first row is ``period`` followed by the dates, then one row per
    scale with the period in the first column. JSON carries axes, values,
    phase, mask, COI, metadata and, if given, the significance threshold and
    mask. Floats are written in shortest round-trip form.
    """
    path = Path(path)
    fmt = fmt or path.suffix.lstrip(".").lower()
    try:
        if fmt == "csv":
            with path.open("w", newline="", encoding="utf-8") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["period"] + _axis_labels(m))
                for p, row in zip(m.periods.tolist(), m.values.tolist()):
                    w.writerow([repr(p)] + [repr(v) for v in row])
        elif fmt == "json":
            doc = {
                "kind": m.kind,
                "source_names": list(m.source_names),
                "start_date": None if m.start_date is None else m.start_date.isoformat(),
                "grid": m.grid.to_dict(),
                "periods": m.periods.tolist(),
                "values": _json_grid(m.values),
                "phase": _json_grid(m.phase),
                "mask": m.mask.astype(int).tolist(),
                "coi": m.coi.tolist(),
                "config": m.meta,
            }
            if sig is not None:
                doc["significance"] = {
                    k: v for k, v in sig.to_dict().items() if k not in ("threshold", "mask")
                }
                doc["threshold"] = sig.threshold.tolist()
                if sig.mask is not None:
                    doc["significant"] = sig.mask.astype(int).tolist()
            path.write_text(json.dumps(doc, allow_nan=False, separators=(",", ":")), encoding="utf-8")
        else:
            raise WavecohError(f"unsupported export format {fmt!r}")
    except OSError as exc:
        raise WavecohError(f"cannot write {path}: {exc}") from exc
    return path


def _from_json_grid(rows):
    return np.array([[np.nan if v is None else v for v in row] for row in rows], dtype=float)


def load_map_json(path):
    """Inverse of :func:`export_grid` for JSON; returns ``(map, significance or None)``."""
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    grid = ScaleGrid(**doc["grid"])
    start = doc["start_date"]
    m = CoherenceMap(
        kind=doc["kind"],
        values=_from_json_grid(doc["values"]),
        phase=_from_json_grid(doc["phase"]),
        grid=grid,
        coi=np.array(doc["coi"], dtype=float),
        mask=np.array(doc["mask"], dtype=bool),
        start_date=None if start is None else _dt.date.fromisoformat(start),
        source_names=tuple(doc["source_names"]),
        meta=doc["config"],
    )
    sig = None
    if "significance" in doc:
        s = doc["significance"]
        threshold = np.array(doc["threshold"], dtype=float)
        m = m.with_threshold(threshold)
        sig = SignificanceResult(
            threshold=threshold,
            mask=np.array(doc["significant"], dtype=bool) if "significant" in doc else None,
            nsims=s["nsims"],
            seed=s["seed"],
            level=s["level"],
            mode=s["mode"],
            map_kind=s["map_kind"],
        )
    return m, sig


def load_grid_csv(path):
    """Read a CSV export back as ``(periods, column labels, values)``."""
    with Path(path).open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    labels = rows[0][1:]
    periods = np.array([float(r[0]) for r in rows[1:]])
    values = np.array([[float(v) for v in r[1:]] for r in rows[1:]])
    return periods, labels, values


# ---------------------------------------------------------------------------
# geometry shared by the SVG and PNG back ends


@dataclass(frozen=True)
class RenderOptions:
    color_map: str = "jet"
    arrow_stride: tuple | None = None  # (time, scale); None targets ~20 x 10 arrows
    arrow_min_coherence: float = 0.5
    lead_convention: str = "paper_downleads"
    width: int = 960
    height: int = 480
    fmt: str = "svg"
    title: str | None = None

    def __post_init__(self):
        if self.arrow_stride is not None and min(self.arrow_stride) < 1:
            raise ValueError("arrow strides must be >= 1")
        if not 0 <= self.arrow_min_coherence <= 1:
            raise ValueError("arrow_min_coherence must lie in [0, 1]")
        if self.lead_convention not in ("paper_downleads", "math_angle"):
            raise ValueError(f"unknown lead convention {self.lead_convention!r}")
        if self.fmt not in ("svg", "png"):
            raise WavecohError(f"unsupported image format {self.fmt!r}")


def _strides(m, opts):
    if opts.arrow_stride is not None:
        return int(opts.arrow_stride[0]), int(opts.arrow_stride[1])
    return max(1, m.grid.n // 20), max(1, m.grid.J // 10)


def arrow_field(m: CoherenceMap, opts: RenderOptions = RenderOptions()):
    """Arrows as ``(t, j, dx, dy)`` with ``dy`` pointing up on screen.

    Under ``math_angle`` the arrow makes angle ``phase`` counterclockwise from
    the right. Under ``paper_downleads`` the vertical component is flipped so
    that the first series leading by a quarter period points down.
    """
    st, sj = _strides(m, opts)
    inside = m.inside_coi()
    out = []
    for j in range(sj // 2, m.grid.J, sj):
        for t in range(st // 2, m.grid.n, st):
            v, ph = m.values[j, t], m.phase[j, t]
            if m.mask[j, t] or not inside[j, t] or math.isnan(ph) or not v >= opts.arrow_min_coherence:
                continue
            dx, dy = math.cos(ph), math.sin(ph)
            if opts.lead_convention == "paper_downleads":
                dy = -dy
            out.append((t, j, dx, dy))
    return out


def contour_loops(mask):
    """Closed outlines of the True cells of a boolean (rows, cols) mask.

    Returned loops are lists of ``(col, row)`` cell-corner coordinates. Every
    edge between a True cell and a False cell (or the border) appears exactly
    once, so the outline encloses exactly the True cells.
    """
    mask = np.asarray(mask, dtype=bool)
    R, C = mask.shape
    padded = np.zeros((R + 2, C + 2), dtype=bool)
    padded[1:-1, 1:-1] = mask
    # directed edges with the True cell on the left when walking; corners as (x, y)
    nxt = {}
    def add(a, b):
        nxt.setdefault(a, []).append(b)

    rows, cols = np.nonzero(mask)
    for r, c in zip(rows.tolist(), cols.tolist()):
        pr, pc = r + 1, c + 1
        if not padded[pr - 1, pc]:
            add((c + 1, r), (c, r))
        if not padded[pr + 1, pc]:
            add((c, r + 1), (c + 1, r + 1))
        if not padded[pr, pc - 1]:
            add((c, r), (c, r + 1))
        if not padded[pr, pc + 1]:
            add((c + 1, r + 1), (c + 1, r))

    loops = []
    for start in sorted(nxt):
        while nxt.get(start):
            loop = [start]
            cur = nxt[start].pop()
            while cur != start:
                loop.append(cur)
                cur = nxt[cur].pop()
            loops.append(_simplify(loop))
    return loops


def _simplify(loop):
    n = len(loop)
    out = []
    for i in range(n):
        a, b, c = loop[i - 1], loop[i], loop[(i + 1) % n]
        if (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0]) != 0:
            out.append(b)
    return out or loop


def _lut(name):
    from matplotlib import colormaps

    try:
        cmap = colormaps[name]
    except KeyError:
        raise WavecohError(f"unknown color map {name!r}") from None
    return (np.asarray(cmap(np.linspace(0, 1, 256)))[:, :3] * 255).round().astype(np.uint8)


def _cell_colors(m: CoherenceMap, opts: RenderOptions):
    lut = _lut(opts.color_map)
    vals = m.values
    if m.kind == "xwt_power":
        finite = vals[np.isfinite(vals)]
        top = finite.max() if finite.size and finite.max() > 0 else 1.0
        vals = vals / top
    idx = np.clip(np.nan_to_num(vals, nan=0.0) * 255, 0, 255).round().astype(int)
    rgb = lut[idx].astype(float)
    pale = ~m.inside_coi()
    rgb[pale] = 0.45 * rgb[pale] + 0.55 * 255
    rgb[m.mask] = 200
    return rgb.round().astype(np.uint8)


@dataclass
class _Frame:
    left: float
    top: float
    pw: float
    ph: float
    n: int
    J: int

    @property
    def cw(self):
        return self.pw / self.n

    @property
    def rh(self):
        return self.ph / self.J

    def x(self, col):
        return self.left + col * self.cw

    def y(self, row):
        return self.top + row * self.rh


def _frame(m, opts):
    return _Frame(70.0, 34.0 if opts.title else 16.0, opts.width - 70.0 - 80.0,
                  opts.height - (34.0 if opts.title else 16.0) - 46.0, m.grid.n, m.grid.J)


def _period_ticks(m):
    grid = m.grid
    p = grid.periods
    ticks = []
    e = math.ceil(math.log2(p[0]))
    while 2.0**e <= p[-1]:
        row = math.log2(2.0**e / p[0]) / grid.dj + 0.5
        ticks.append((row, f"{2 ** e:g}"))
        e += 1
    return ticks


def _time_ticks(m, count=6):
    n = m.grid.n
    if m.start_date is None:
        step = max(1, n // count)
        return [(t + 0.5, str(t)) for t in range(0, n, step)]
    ticks = []
    start = m.start_date
    end = start + _dt.timedelta(days=n - 1)
    months = (end.year - start.year) * 12 + end.month - start.month + 1
    every = max(1, math.ceil(months / count))
    y, mo = start.year, start.month
    k = 0
    while True:
        d = _dt.date(y, mo, 1)
        if d > end:
            break
        if d >= start and k % every == 0:
            ticks.append(((d - start).days + 0.5, f"{mo:02d}/{y}"))
        if d >= start:
            k += 1
        mo += 1
        if mo > 12:
            y, mo = y + 1, 1
    return ticks


def _arrow_segments(m, opts, fr):
    st, sj = _strides(m, opts)
    length = 0.8 * min(st * fr.cw, sj * fr.rh, 24.0)
    segs = []
    for t, j, dx, dy in arrow_field(m, opts):
        cx, cy = fr.x(t + 0.5), fr.y(j + 0.5)
        ux, uy = dx, -dy  # screen y points down
        x0, y0 = cx - 0.5 * length * ux, cy - 0.5 * length * uy
        x1, y1 = cx + 0.5 * length * ux, cy + 0.5 * length * uy
        hl = 0.35 * length
        px, py = -uy, ux
        head = [
            (x1, y1),
            (x1 - hl * ux + 0.5 * hl * px, y1 - hl * uy + 0.5 * hl * py),
            (x1 - hl * ux - 0.5 * hl * px, y1 - hl * uy - 0.5 * hl * py),
        ]
        segs.append(((x0, y0), (x1 - 0.6 * hl * ux, y1 - 0.6 * hl * uy), head))
    return segs


# ---------------------------------------------------------------------------
# SVG


def _f(v):
    return f"{v:.2f}".rstrip("0").rstrip(".")


def _hex(c):
    return "#%02x%02x%02x" % tuple(int(v) for v in c)


def _svg(m, sig, opts):
    fr = _frame(m, opts)
    rgb = _cell_colors(m, opts)
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{opts.width}" height="{opts.height}" '
        f'viewBox="0 0 {opts.width} {opts.height}" font-family="sans-serif" font-size="11">',
        f'<rect width="{opts.width}" height="{opts.height}" fill="#ffffff"/>',
    ]
    if opts.title:
        out.append(f'<text x="{_f(opts.width / 2)}" y="20" text-anchor="middle" font-size="13">{_escape(opts.title)}</text>')

    # heat map: horizontal runs of equal colour
    out.append('<g shape-rendering="crispEdges">')
    for j in range(fr.J):
        row = rgb[j]
        t = 0
        while t < fr.n:
            u = t + 1
            while u < fr.n and np.array_equal(row[u], row[t]):
                u += 1
            out.append(
                f'<rect x="{_f(fr.x(t))}" y="{_f(fr.y(j))}" width="{_f((u - t) * fr.cw + 0.01)}" '
                f'height="{_f(fr.rh + 0.01)}" fill="{_hex(row[t])}"/>'
            )
            t = u
    out.append("</g>")

    if sig is not None and sig.mask is not None:
        d = []
        for loop in contour_loops(sig.mask):
            pts = " L".join(f"{_f(fr.x(c))} {_f(fr.y(r))}" for c, r in loop)
            d.append(f"M{pts} Z")
        if d:
            out.append(f'<path d="{" ".join(d)}" fill="none" stroke="#000000" stroke-width="2.5" stroke-linejoin="round"/>')

    out.append('<g stroke="#000000" fill="#000000">')
    for (x0, y0), (x1, y1), head in _arrow_segments(m, opts, fr):
        out.append(f'<line x1="{_f(x0)}" y1="{_f(y0)}" x2="{_f(x1)}" y2="{_f(y1)}" stroke-width="1.2"/>')
        pts = " ".join(f"{_f(x)},{_f(y)}" for x, y in head)
        out.append(f'<polygon points="{pts}" stroke="none"/>')
    out.append("</g>")

    # axes
    out.append(f'<rect x="{_f(fr.left)}" y="{_f(fr.top)}" width="{_f(fr.pw)}" height="{_f(fr.ph)}" fill="none" stroke="#000000"/>')
    for row, label in _period_ticks(m):
        y = fr.y(row)
        out.append(f'<line x1="{_f(fr.left - 4)}" y1="{_f(y)}" x2="{_f(fr.left)}" y2="{_f(y)}" stroke="#000000"/>')
        out.append(f'<text x="{_f(fr.left - 7)}" y="{_f(y + 4)}" text-anchor="end">{label}</text>')
    for col, label in _time_ticks(m):
        x = fr.x(col)
        yb = fr.top + fr.ph
        out.append(f'<line x1="{_f(x)}" y1="{_f(yb)}" x2="{_f(x)}" y2="{_f(yb + 4)}" stroke="#000000"/>')
        out.append(f'<text x="{_f(x)}" y="{_f(yb + 17)}" text-anchor="middle">{label}</text>')
    out.append(
        f'<text transform="translate(16 {_f(fr.top + fr.ph / 2)}) rotate(-90)" text-anchor="middle">period (days)</text>'
    )

    # colour bar
    lut = _lut(opts.color_map)
    bx, bw = fr.left + fr.pw + 20, 14.0
    for k in range(64):
        c = lut[int(round((63 - k) * 255 / 63))]
        out.append(f'<rect x="{_f(bx)}" y="{_f(fr.top + k * fr.ph / 64)}" width="{_f(bw)}" height="{_f(fr.ph / 64 + 0.01)}" fill="{_hex(c)}"/>')
    out.append(f'<rect x="{_f(bx)}" y="{_f(fr.top)}" width="{_f(bw)}" height="{_f(fr.ph)}" fill="none" stroke="#000000"/>')
    top_label = "max" if m.kind == "xwt_power" else "1"
    for frac, label in ((0.0, top_label), (0.5, "0.5" if m.kind != "xwt_power" else ""), (1.0, "0")):
        if label:
            out.append(f'<text x="{_f(bx + bw + 4)}" y="{_f(fr.top + frac * fr.ph + 4)}">{label}</text>')
    out.append("</svg>\n")
    return "\n".join(out).encode("utf-8")


def _escape(s):
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


# ---------------------------------------------------------------------------
# PNG


def _png(m, sig, opts):
    from PIL import Image, ImageDraw

    fr = _frame(m, opts)
    img = Image.new("RGB", (opts.width, opts.height), "white")
    heat = Image.fromarray(_cell_colors(m, opts), "RGB").resize(
        (int(round(fr.pw)), int(round(fr.ph))), Image.NEAREST
    )
    img.paste(heat, (int(round(fr.left)), int(round(fr.top))))
    draw = ImageDraw.Draw(img)
    if opts.title:
        draw.text((opts.width / 2, 8), opts.title, fill="black", anchor="mt")
    if sig is not None and sig.mask is not None:
        for loop in contour_loops(sig.mask):
            pts = [(fr.x(c), fr.y(r)) for c, r in loop]
            draw.line(pts + [pts[0]], fill="black", width=3, joint="curve")
    for p0, p1, head in _arrow_segments(m, opts, fr):
        draw.line([p0, p1], fill="black", width=1)
        draw.polygon(head, fill="black")
    draw.rectangle([fr.left, fr.top, fr.left + fr.pw, fr.top + fr.ph], outline="black")
    for row, label in _period_ticks(m):
        y = fr.y(row)
        draw.line([(fr.left - 4, y), (fr.left, y)], fill="black")
        draw.text((fr.left - 7, y), label, fill="black", anchor="rm")
    for col, label in _time_ticks(m):
        x = fr.x(col)
        yb = fr.top + fr.ph
        draw.line([(x, yb), (x, yb + 4)], fill="black")
        draw.text((x, yb + 8), label, fill="black", anchor="mt")
    lut = _lut(opts.color_map)
    bx = fr.left + fr.pw + 20
    bar = Image.fromarray(lut[::-1][:, None, :].repeat(14, axis=1), "RGB").resize((14, int(round(fr.ph))), Image.NEAREST)
    img.paste(bar, (int(round(bx)), int(round(fr.top))))
    buf = io.BytesIO()
    img.save(buf, format="PNG", optimize=False)
    return buf.getvalue()


def render_map(m: CoherenceMap, sig: SignificanceResult | None = None, opts: RenderOptions = RenderOptions()) -> bytes:
    """Render a map to image bytes in ``opts.fmt`` (``svg`` or ``png``)."""
    if sig is not None:
        if sig.threshold.shape != m.values.shape or (sig.mask is not None and sig.mask.shape != m.values.shape):
            raise GridMismatchError(
                f"significance shape {sig.threshold.shape} does not match map {m.values.shape}"
            )
    if opts.fmt == "svg":
        return _svg(m, sig, opts)
    if opts.fmt == "png":
        return _png(m, sig, opts)
    raise WavecohError(f"unsupported image format {opts.fmt!r}")

