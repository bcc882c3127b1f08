"""Self-contained SVG figures: spectra, field heatmaps, Purcell maps and layouts.

Heatmaps use a 256-step colormap obtained by linear interpolation in RGB
between five anchors (dark blue, blue, teal, yellow-green, yellow), close
to the perceptually ordered maps common in plotting libraries.  Output is a
pure function of the input: identical data render to identical bytes.
"""

from __future__ import annotations

import math
from html import escape

import numpy as np

from .analysis.spectrum import Spectrum
from .geometry.layout import LayoutDocument

_ANCHORS = np.array([
    [0.267, 0.005, 0.329],
    [0.231, 0.322, 0.545],
    [0.129, 0.569, 0.549],
    [0.369, 0.788, 0.384],
    [0.993, 0.906, 0.144],
])


def colormap(n: int = 256) -> list[str]:
    """Hex colours of the ``n``-step map, low to high."""
    pos = np.linspace(0, len(_ANCHORS) - 1, n)
    i = np.minimum(pos.astype(int), len(_ANCHORS) - 2)
    frac = (pos - i)[:, None]
    rgb = _ANCHORS[i] * (1 - frac) + _ANCHORS[i + 1] * frac
    return ["#%02x%02x%02x" % tuple(int(round(255 * c)) for c in row) for row in rgb]


COLORMAP = colormap()


def _fmt(v: float) -> str:
    s = f"{v:.2f}"
    return "0.00" if s == "-0.00" else s


def _tick_label(v: float) -> str:
    if v == 0:
        return "0"
    a = abs(v)
    if a >= 1e4 or a < 1e-2:
        return f"{v:.2e}"
    return f"{v:.4g}"


def _doc(width, height, body) -> str:
    return (
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">\n'
        + "\n".join(body) + "\n</svg>\n"
    )


def _ticks(lo, hi, n):
    if hi == lo:
        return [lo]
    return list(np.linspace(lo, hi, n))


def _spectrum_svg(series, title="", width=640, height=400, ylabel="intensity"):
    if not series or any(len(s) == 0 for _, s in series):
        raise ValueError("nothing to plot")
    ml, mr, mt, mb = 70, 20, 30, 50
    pw, ph = width - ml - mr, height - mt - mb
    xs = np.concatenate([s.wavelengths for _, s in series]) * 1e3
    ys = np.concatenate([s.intensity for _, s in series])
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = float(ys.min()), float(ys.max())
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    X = lambda v: ml + (v - x0) / (x1 - x0) * pw
    Y = lambda v: mt + ph - (v - y0) / (y1 - y0) * ph
    body = [f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>']
    if title:
        body.append(f'<text x="{width / 2}" y="18" text-anchor="middle">{escape(title)}</text>')
    body.append(f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')
    n_pts = min(len(s) for _, s in series)
    n_ticks = max(2, min(6, n_pts))
    for v in _ticks(x0, x1, n_ticks):
        body.append(f'<line class="xtick" x1="{_fmt(X(v))}" y1="{mt + ph}" x2="{_fmt(X(v))}" y2="{mt + ph + 5}" stroke="black"/>')
        body.append(f'<text x="{_fmt(X(v))}" y="{mt + ph + 18}" text-anchor="middle">{_tick_label(v)}</text>')
    for v in _ticks(y0, y1, n_ticks):
        body.append(f'<line class="ytick" x1="{ml - 5}" y1="{_fmt(Y(v))}" x2="{ml}" y2="{_fmt(Y(v))}" stroke="black"/>')
        body.append(f'<text x="{ml - 8}" y="{_fmt(Y(v) + 4)}" text-anchor="end">{_tick_label(v)}</text>')
    body.append(f'<text x="{ml + pw / 2}" y="{height - 10}" text-anchor="middle">wavelength (nm)</text>')
    body.append(f'<text x="14" y="{mt + ph / 2}" text-anchor="middle" '
                f'transform="rotate(-90 14 {mt + ph / 2})">{escape(ylabel)}</text>')
    colours = ["#1f4e9c", "#c0392b", "#27ae60", "#8e44ad"]
    for k, (label, s) in enumerate(series):
        pts = [f"{_fmt(X(w))},{_fmt(Y(v))}" for w, v in zip(s.wavelengths * 1e3, s.intensity)]
        d = "M" + " L".join(pts)
        body.append(f'<path class="series" d="{d}" fill="none" stroke="{colours[k % len(colours)]}" stroke-width="1.2"/>')
        if label:
            body.append(f'<text x="{ml + pw - 5}" y="{mt + 14 + 14 * k}" text-anchor="end" '
                        f'fill="{colours[k % len(colours)]}">{escape(label)}</text>')
    return _doc(width, height, body)


def _downsample(a: np.ndarray, max_cells: int, reduce=np.mean) -> np.ndarray:
    f0 = max(1, math.ceil(a.shape[0] / max_cells))
    f1 = max(1, math.ceil(a.shape[1] / max_cells))
    if f0 == 1 and f1 == 1:
        return a
    n0, n1 = a.shape[0] // f0 * f0, a.shape[1] // f1 * f1
    b = a[:n0, :n1].reshape(n0 // f0, f0, n1 // f1, f1)
    return reduce(reduce(b, axis=3), axis=1)


def _heatmap_svg(values, extent=None, title="", label="", log=False, cell=None, max_cells=160,
                 reduce=np.mean):
    a = np.asarray(values, dtype=float)
    if a.ndim != 2 or a.size == 0:
        raise ValueError("heatmap data must be a non-empty 2D array")
    a = _downsample(a, max_cells, reduce)
    nx, ny = a.shape
    if log:
        pos = a[a > 0]
        floor = pos.min() if pos.size else 1.0
        a = np.log10(np.maximum(a, floor))
    lo, hi = float(a.min()), float(a.max())
    span = hi - lo if hi > lo else 1.0
    level = np.clip(((a - lo) / span * 255).round().astype(int), 0, 255)
    cell = cell or max(2, min(6, 600 // max(nx, ny)))
    ml, mt = 60, 30
    pw, ph = nx * cell, ny * cell
    width = ml + pw + 110
    height = mt + ph + 50
    body = [f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>']
    if title:
        body.append(f'<text x="{ml + pw / 2}" y="18" text-anchor="middle">{escape(title)}</text>')
    # x along the array's first axis, y up along its second
    for j in range(ny):
        yy = mt + (ny - 1 - j) * cell
        for i in range(nx):
            body.append(f'<rect x="{ml + i * cell}" y="{yy}" width="{cell}" height="{cell}" '
                        f'fill="{COLORMAP[level[i, j]]}"/>')
    body.append(f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')
    if extent is not None:
        (xa, xb), (ya, yb) = extent
        for v, xx in ((xa, ml), (xb, ml + pw)):
            body.append(f'<text x="{xx}" y="{mt + ph + 16}" text-anchor="middle">{v * 1e3:.0f}</text>')
        for v, yy in ((ya, mt + ph), (yb, mt)):
            body.append(f'<text x="{ml - 6}" y="{yy + 4}" text-anchor="end">{v * 1e3:.0f}</text>')
        body.append(f'<text x="{ml + pw / 2}" y="{mt + ph + 34}" text-anchor="middle">x (nm)</text>')
    # colour bar
    cbx, cbw = ml + pw + 20, 14
    steps = 64
    for k in range(steps):
        c = COLORMAP[int(round(k / (steps - 1) * 255))]
        h = ph / steps
        body.append(f'<rect x="{cbx}" y="{_fmt(mt + ph - (k + 1) * h)}" width="{cbw}" height="{_fmt(h + 0.5)}" fill="{c}"/>')
    body.append(f'<rect class="colorbar" x="{cbx}" y="{mt}" width="{cbw}" height="{ph}" fill="none" stroke="black"/>')
    tick = (lambda v: _tick_label(10 ** v)) if log else _tick_label
    body.append(f'<text x="{cbx + cbw + 4}" y="{mt + 8}">{tick(hi)}</text>')
    body.append(f'<text x="{cbx + cbw + 4}" y="{mt + ph}">{tick(lo)}</text>')
    if label:
        body.append(f'<text class="colorbar-label" x="{cbx}" y="{mt + ph + 20}">{escape(label)}</text>')
    return _doc(width, height, body)


def render_svg(kind: str, data, **opts) -> str:
    """Render a result as an SVG document.

    Parameters
    ----------
    kind : {"spectrum", "field_map", "purcell_map", "layout"}
    data
        ``Spectrum`` or list of (label, Spectrum) for spectra; a 2D array for
        maps (or a PurcellMap, whose ``F`` is used); a LayoutDocument for
        layouts.
    opts
        ``title``, ``extent`` ((x0, x1), (y0, y1)) in um, ``label``,
        ``max_cells`` for heatmap downsampling.
    """
    if kind == "spectrum":
        series = [("", data)] if isinstance(data, Spectrum) else list(data)
        return _spectrum_svg(series, opts.get("title", ""), ylabel=opts.get("ylabel", "intensity"))
    if kind == "field_map":
        return _heatmap_svg(data, opts.get("extent"), opts.get("title", ""), opts.get("label", "|E|^2"),
                            log=opts.get("log", False), max_cells=opts.get("max_cells", 160))
    if kind == "purcell_map":
        F = getattr(data, "F", data)
        F = np.asarray(F)
        if F.ndim == 3:
            F = F.max(axis=2)
        return _heatmap_svg(F, opts.get("extent"), opts.get("title", ""), "F_Purcell", log=True,
                            max_cells=opts.get("max_cells", 160), reduce=np.max)
    if kind == "layout":
        if not isinstance(data, LayoutDocument):
            data = LayoutDocument.from_dict(data)
        return data.to_svg()
    raise ValueError(f"unknown figure kind {kind!r}")
