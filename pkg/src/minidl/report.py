"""Plain-file outputs for runs: CSV tables, SVG line plots, PGM images,
and a JSON manifest of the resolved configuration.

The SVG is written by hand (a few rects, polylines, and text nodes) so
plots have no rendering dependencies and identical inputs produce
byte-identical files.
"""

from __future__ import annotations

import json

import numpy as np

_COLORS = ["#1f6fb2", "#d05a2c", "#3d8f5f", "#8251a1", "#b0a135", "#777777"]


def write_csv(path, header, rows):
    with open(path, "w", newline="") as f:
        f.write(",".join(str(h) for h in header) + "\n")
        for row in rows:
            f.write(",".join(_fmt(v) for v in row) + "\n")


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _ticks(lo, hi):
    if not np.isfinite(lo) or not np.isfinite(hi):
        lo, hi = 0.0, 1.0
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    return [lo, 0.5 * (lo + hi), hi]


def _tick_label(v):
    if v == 0:
        return "0"
    if abs(v) >= 1000 or abs(v) < 0.01:
        return "%.3g" % v
    return "%.4g" % v


def write_curve_svg(path, series, title="", xlabel="", ylabel=""):
    """Line plot of one or more named series.

    ``series`` maps a legend label to (xs, ys). The canvas is a fixed
    800x600 with margins; both axes get min, midpoint, and max ticks.
    """
    width, height = 800, 600
    ml, mr, mt, mb = 80, 30, 50, 60
    plot_w = width - ml - mr
    plot_h = height - mt - mb

    xs_all = np.concatenate([np.asarray(xs, dtype=np.float64) for xs, _ in series.values()])
    ys_all = np.concatenate([np.asarray(ys, dtype=np.float64) for _, ys in series.values()])
    ys_all = ys_all[np.isfinite(ys_all)]
    if ys_all.size == 0:
        ys_all = np.array([0.0, 1.0])
    x_lo, x_hi = float(np.min(xs_all)), float(np.max(xs_all))
    y_lo, y_hi = float(np.min(ys_all)), float(np.max(ys_all))
    if x_lo == x_hi:
        x_lo, x_hi = x_lo - 0.5, x_hi + 0.5
    if y_lo == y_hi:
        y_lo, y_hi = y_lo - 0.5, y_hi + 0.5

    def px(x):
        return ml + (x - x_lo) / (x_hi - x_lo) * plot_w

    def py(y):
        return mt + plot_h - (y - y_lo) / (y_hi - y_lo) * plot_h

    parts = []
    parts.append(
        '<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 %d %d" '
        'font-family="sans-serif" font-size="13">' % (width, height)
    )
    parts.append('<rect width="%d" height="%d" fill="white"/>' % (width, height))
    if title:
        parts.append(
            '<text x="%d" y="28" text-anchor="middle" font-size="17">%s</text>'
            % (width // 2, _esc(title))
        )
    # axes
    parts.append(
        '<line x1="%d" y1="%d" x2="%d" y2="%d" stroke="black"/>'
        % (ml, mt + plot_h, ml + plot_w, mt + plot_h)
    )
    parts.append(
        '<line x1="%d" y1="%d" x2="%d" y2="%d" stroke="black"/>'
        % (ml, mt, ml, mt + plot_h)
    )
    for tv in _ticks(x_lo, x_hi):
        x = px(tv)
        parts.append(
            '<line x1="%.1f" y1="%d" x2="%.1f" y2="%d" stroke="black"/>'
            % (x, mt + plot_h, x, mt + plot_h + 5)
        )
        parts.append(
            '<text x="%.1f" y="%d" text-anchor="middle">%s</text>'
            % (x, mt + plot_h + 22, _tick_label(tv))
        )
    for tv in _ticks(y_lo, y_hi):
        y = py(tv)
        parts.append(
            '<line x1="%d" y1="%.1f" x2="%d" y2="%.1f" stroke="black"/>'
            % (ml - 5, y, ml, y)
        )
        parts.append(
            '<text x="%d" y="%.1f" text-anchor="end" dominant-baseline="middle">%s</text>'
            % (ml - 9, y, _tick_label(tv))
        )
    if xlabel:
        parts.append(
            '<text x="%d" y="%d" text-anchor="middle">%s</text>'
            % (ml + plot_w // 2, height - 15, _esc(xlabel))
        )
    if ylabel:
        parts.append(
            '<text x="20" y="%d" text-anchor="middle" transform="rotate(-90 20 %d)">%s</text>'
            % (mt + plot_h // 2, mt + plot_h // 2, _esc(ylabel))
        )
    for i, (name, (xs, ys)) in enumerate(series.items()):
        xs = np.asarray(xs, dtype=np.float64)
        ys = np.asarray(ys, dtype=np.float64)
        color = _COLORS[i % len(_COLORS)]
        pts = " ".join(
            "%.2f,%.2f" % (px(x), py(y))
            for x, y in zip(xs, ys)
            if np.isfinite(y)
        )
        parts.append(
            '<polyline points="%s" fill="none" stroke="%s" stroke-width="1.5"/>'
            % (pts, color)
        )
        ly = mt + 18 + 18 * i
        parts.append(
            '<line x1="%d" y1="%d" x2="%d" y2="%d" stroke="%s" stroke-width="3"/>'
            % (ml + plot_w - 150, ly - 4, ml + plot_w - 120, ly - 4, color)
        )
        parts.append(
            '<text x="%d" y="%d">%s</text>' % (ml + plot_w - 112, ly, _esc(name))
        )
    parts.append("</svg>")
    with open(path, "w") as f:
        f.write("\n".join(parts) + "\n")


def _esc(s):
    return (
        str(s)
        .replace("&", "&amp;")
        .replace("<", "&lt;")
        .replace(">", "&gt;")
    )


def write_pgm(path, image):
    """Binary (P5) grayscale image from float values in [0, 255]."""
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2:
        raise ValueError("pgm needs a 2-D image, got shape %s" % (image.shape,))
    h, w = image.shape
    data = np.clip(np.rint(image), 0, 255).astype(np.uint8)
    with open(path, "wb") as f:
        f.write(b"P5\n%d %d\n255\n" % (w, h))
        f.write(data.tobytes())


def tile_images(images, grid_rows, grid_cols):
    """Pack [n, h, w] samples in [-1, 1] into one [gr*h, gc*w] grid of
    0..255 gray values, row-major, blank cells black."""
    images = np.asarray(images, dtype=np.float64)
    n, h, w = images.shape
    grid = np.zeros((grid_rows * h, grid_cols * w))
    for k in range(min(n, grid_rows * grid_cols)):
        r, c = divmod(k, grid_cols)
        grid[r * h : (r + 1) * h, c * w : (c + 1) * w] = (images[k] + 1.0) / 2.0 * 255.0
    return grid


def write_run_manifest(path, command, config):
    """Record the resolved settings of a run as JSON."""
    payload = {"command": command, "config": config}
    with open(path, "w") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")
