"""Standalone SVG plots of a run log: SAD, tendon displacements, actuation
increments, and the controller-mode trace.  Pure text output, no external
assets, byte-deterministic for a given log."""

from pathlib import Path

import numpy as np

WIDTH, HEIGHT = 640, 360
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 60, 20, 30, 40
PLOT_W = WIDTH - MARGIN_L - MARGIN_R
PLOT_H = HEIGHT - MARGIN_T - MARGIN_B

SERIES_COLORS = ("#1f6fb2", "#d95f02", "#2ca02c")
BAND_COLOR = "#d9d9d9"


def _f(x):
    return format(float(x), ".6g")


def _scale(values, lo, hi, out_lo, out_hi):
    span = hi - lo if hi > lo else 1.0
    return out_lo + (np.asarray(values, dtype=float) - lo) * (out_hi - out_lo) / span


def _axes(title, y_label, x_ticks, y_ticks, x_lim, y_lim):
    parts = [
        f'<text x="{WIDTH / 2}" y="18" text-anchor="middle" font-size="13" '
        f'font-family="sans-serif">{title}</text>',
        f'<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{PLOT_W}" height="{PLOT_H}" '
        f'fill="none" stroke="#333" stroke-width="1"/>',
        f'<text x="14" y="{MARGIN_T + PLOT_H / 2}" text-anchor="middle" font-size="11" '
        f'font-family="sans-serif" transform="rotate(-90 14 {MARGIN_T + PLOT_H / 2})">{y_label}</text>',
        f'<text x="{MARGIN_L + PLOT_W / 2}" y="{HEIGHT - 8}" text-anchor="middle" '
        f'font-size="11" font-family="sans-serif">iteration</text>',
    ]
    for tx in x_ticks:
        px = _scale(tx, x_lim[0], x_lim[1], MARGIN_L, MARGIN_L + PLOT_W)
        parts.append(
            f'<line x1="{_f(px)}" y1="{MARGIN_T + PLOT_H}" x2="{_f(px)}" '
            f'y2="{MARGIN_T + PLOT_H + 4}" stroke="#333"/>'
        )
        parts.append(
            f'<text x="{_f(px)}" y="{MARGIN_T + PLOT_H + 16}" text-anchor="middle" '
            f'font-size="10" font-family="sans-serif">{_f(tx)}</text>'
        )
    for ty in y_ticks:
        py = _scale(ty, y_lim[0], y_lim[1], MARGIN_T + PLOT_H, MARGIN_T)
        parts.append(
            f'<line x1="{MARGIN_L - 4}" y1="{_f(py)}" x2="{MARGIN_L}" y2="{_f(py)}" stroke="#333"/>'
        )
        parts.append(
            f'<text x="{MARGIN_L - 7}" y="{_f(py)}" text-anchor="end" dominant-baseline="middle" '
            f'font-size="10" font-family="sans-serif">{_f(ty)}</text>'
        )
    return parts


def _ticks(lo, hi, count=5):
    return np.linspace(lo, hi, count)


def _line_plot(path, title, y_label, x, series, hlines=(), bands=()):
    """series: iterable of (label, values); bands: (x0, x1) shaded spans."""
    x = np.asarray(x, dtype=float)
    all_y = np.concatenate([np.asarray(v, dtype=float) for _, v in series])
    hline_vals = [value for value, _ in hlines]
    y_lo = min(float(all_y.min()), *hline_vals) if hline_vals else float(all_y.min())
    y_hi = max(float(all_y.max()), *hline_vals) if hline_vals else float(all_y.max())
    if y_hi - y_lo < 1e-12:
        y_lo, y_hi = y_lo - 0.5, y_hi + 0.5
    pad = 0.05 * (y_hi - y_lo)
    y_lim = (y_lo - pad, y_hi + pad)
    x_lim = (float(x.min()), float(x.max()) if x.max() > x.min() else float(x.min()) + 1)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
    ]
    for x0, x1 in bands:
        p0 = _scale(x0, *x_lim, MARGIN_L, MARGIN_L + PLOT_W)
        p1 = _scale(x1, *x_lim, MARGIN_L, MARGIN_L + PLOT_W)
        parts.append(
            f'<rect class="mode-band" x="{_f(p0)}" y="{MARGIN_T}" width="{_f(p1 - p0)}" '
            f'height="{PLOT_H}" fill="{BAND_COLOR}"/>'
        )
    parts.extend(_axes(title, y_label, _ticks(*x_lim), _ticks(*y_lim), x_lim, y_lim))
    for value, label in hlines:
        py = _scale(value, y_lim[0], y_lim[1], MARGIN_T + PLOT_H, MARGIN_T)
        parts.append(
            f'<line x1="{MARGIN_L}" y1="{_f(py)}" x2="{MARGIN_L + PLOT_W}" y2="{_f(py)}" '
            f'stroke="#999" stroke-dasharray="4 3"/>'
        )
        parts.append(
            f'<text x="{MARGIN_L + PLOT_W - 4}" y="{_f(py - 3)}" text-anchor="end" '
            f'font-size="10" font-family="sans-serif" fill="#666">{label}</text>'
        )
    px = _scale(x, *x_lim, MARGIN_L, MARGIN_L + PLOT_W)
    for i, (label, values) in enumerate(series):
        py = _scale(values, y_lim[0], y_lim[1], MARGIN_T + PLOT_H, MARGIN_T)
        pts = " ".join(f"{_f(a)},{_f(b)}" for a, b in zip(px, py))
        color = SERIES_COLORS[i % len(SERIES_COLORS)]
        parts.append(
            f'<polyline class="series" points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>'
        )
        parts.append(
            f'<text x="{MARGIN_L + 8}" y="{MARGIN_T + 14 + 13 * i}" font-size="11" '
            f'font-family="sans-serif" fill="{color}">{label}</text>'
        )
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts), encoding="utf-8")


def _mode_bands(log):
    """(start_iter, end_iter) spans where the logged mode is DLBVS."""
    bands = []
    start = None
    for r in log.records:
        if r.mode == "DLBVS" and start is None:
            start = r.iteration
        elif r.mode != "DLBVS" and start is not None:
            bands.append((start, r.iteration))
            start = None
    if start is not None:
        bands.append((start, log.records[-1].iteration))
    return bands


def emit_plots(log, out_dir):
    """Write sad.svg, q.svg, dq.svg, mode.svg for a complete run log."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    x = log.series("iteration")
    bands = _mode_bands(log)
    hlines = [(log.meta.get("convergence_sad", 0.06), "convergence")]
    if "switch_threshold" in log.meta:
        hlines.append((log.meta["switch_threshold"], "switch"))
    paths = {
        "sad": out_dir / "sad.svg",
        "q": out_dir / "q.svg",
        "dq": out_dir / "dq.svg",
        "mode": out_dir / "mode.svg",
    }
    _line_plot(paths["sad"], "image error (SAD)", "SAD", x, [("sad", log.sad_series)], hlines=hlines)
    _line_plot(
        paths["q"],
        "tendon displacements",
        "q (mm)",
        x,
        [("q1", log.series("q1_mm")), ("q2", log.series("q2_mm"))],
    )
    _line_plot(
        paths["dq"],
        "tendon displacement increments",
        "dq (mm)",
        x,
        [("dq1", log.series("dq1_mm")), ("dq2", log.series("dq2_mm"))],
    )
    mode_steps = np.array([1.0 if m == "DLBVS" else 0.0 for m in log.modes])
    _line_plot(
        paths["mode"],
        "controller mode (shaded spans: DLBVS)",
        "mode (0=IBVS, 1=DLBVS)",
        x,
        [("mode", mode_steps)],
        bands=bands,
    )
    return paths
