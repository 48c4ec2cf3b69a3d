"""Trace files: CSV rows, a key = value metadata sidecar, and SVG charts."""

import math
from pathlib import Path
from xml.sax.saxutils import escape

from .errors import UsageError

CSV_HEADER = "k,consensus_residual,dist_to_opt,rel_gap_iter,rel_gap_ravg,epsilon,max_err"
CSV_FIELDS = ("k", "consensus_residual", "dist_to_opt", "rel_obj_gap_iterates",
              "rel_obj_gap_running_avg", "epsilon_k", "max_error_norm")
SVG_COLUMNS = {
    "consensus_residual": "consensus_residual",
    "dist_to_opt": "dist_to_opt",
    "rel_gap_iter": "rel_obj_gap_iterates",
    "rel_gap_ravg": "rel_obj_gap_running_avg",
    "epsilon": "epsilon_k",
    "max_err": "max_error_norm",
}

WIDTH, HEIGHT = 800, 600
MARGIN_LEFT, MARGIN_RIGHT, MARGIN_TOP, MARGIN_BOTTOM = 80, 30, 40, 60
PALETTE = ("#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")


def _write(path, text):
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return path


def csv_text(trace):
    lines = [CSV_HEADER]
    for row in trace.rows:
        lines.append(",".join("%.17g" % getattr(row, name) for name in CSV_FIELDS))
    return "\n".join(lines) + "\n"


def emit_csv(trace, path):
    return _write(path, csv_text(trace))


def emit_meta(trace, path):
    lines = [f"{key} = {value}" for key, value in trace.header.items()]
    lines += [f"flag.{key} = {value}" for key, value in trace.flags.items()]
    return _write(path, "\n".join(lines) + "\n")


def _fmt(v):
    return f"{v:.2f}"


def svg_text(traces, column="dist_to_opt", labels=None, title=None):
    """Log-log line chart with one polyline per trace and an embedded legend."""
    attr = SVG_COLUMNS[column]
    labels = labels or [t.header.get("scenario", "") + " " + t.header.get("engine", "") for t in traces]
    series = []
    for t in traces:
        pts = [(row.k, getattr(row, attr)) for row in t.rows if row.k > 0 and getattr(row, attr) > 0]
        series.append(pts)
    all_pts = [p for s in series for p in s]
    if all_pts:
        kx = [math.log10(k) for k, _ in all_pts]
        vy = [math.log10(v) for _, v in all_pts]
        x_lo, x_hi = math.floor(min(kx)), math.ceil(max(kx))
        y_lo, y_hi = math.floor(min(vy)), math.ceil(max(vy))
    else:
        x_lo, x_hi, y_lo, y_hi = 0, 1, 0, 1
    x_hi = max(x_hi, x_lo + 1)
    y_hi = max(y_hi, y_lo + 1)
    plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT
    plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM

    def sx(k):
        return MARGIN_LEFT + (math.log10(k) - x_lo) / (x_hi - x_lo) * plot_w

    def sy(v):
        return MARGIN_TOP + (y_hi - math.log10(v)) / (y_hi - y_lo) * plot_h

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{plot_w}" height="{plot_h}" '
        'fill="none" stroke="black"/>',
    ]
    for e in range(x_lo, x_hi + 1):
        x = _fmt(MARGIN_LEFT + (e - x_lo) / (x_hi - x_lo) * plot_w)
        out.append(f'<line x1="{x}" y1="{MARGIN_TOP}" x2="{x}" y2="{MARGIN_TOP + plot_h}" stroke="#dddddd"/>')
        out.append(f'<text x="{x}" y="{MARGIN_TOP + plot_h + 20}" font-size="12" '
                   f'text-anchor="middle">1e{e}</text>')
    for e in range(y_lo, y_hi + 1):
        y = _fmt(MARGIN_TOP + (y_hi - e) / (y_hi - y_lo) * plot_h)
        out.append(f'<line x1="{MARGIN_LEFT}" y1="{y}" x2="{MARGIN_LEFT + plot_w}" y2="{y}" stroke="#dddddd"/>')
        out.append(f'<text x="{MARGIN_LEFT - 8}" y="{y}" font-size="12" text-anchor="end">1e{e}</text>')
    out.append(f'<text x="{MARGIN_LEFT + plot_w / 2:.2f}" y="{HEIGHT - 15}" font-size="14" '
               'text-anchor="middle">iteration k</text>')
    out.append(f'<text x="20" y="{MARGIN_TOP + plot_h / 2:.2f}" font-size="14" text-anchor="middle" '
               f'transform="rotate(-90 20 {MARGIN_TOP + plot_h / 2:.2f})">{escape(column)}</text>')
    if title:
        out.append(f'<text x="{WIDTH / 2:.2f}" y="24" font-size="16" text-anchor="middle">{escape(title)}</text>')
    for idx, pts in enumerate(series):
        color = PALETTE[idx % len(PALETTE)]
        if pts:
            coords = " ".join(f"{_fmt(sx(k))},{_fmt(sy(v))}" for k, v in pts)
            out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{coords}"/>')
    for idx, label in enumerate(labels):
        color = PALETTE[idx % len(PALETTE)]
        y = MARGIN_TOP + 20 + 18 * idx
        x = MARGIN_LEFT + plot_w - 220
        out.append(f'<line x1="{x}" y1="{y - 4}" x2="{x + 24}" y2="{y - 4}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{x + 30}" y="{y}" font-size="12">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_svg(traces, path, column="dist_to_opt", labels=None, title=None):
    return _write(path, svg_text(traces, column, labels, title))


def parse_config(text):
    """Parse ``key = value`` lines; ``#`` starts a comment, blank lines are skipped."""
    allowed = {"scenario", "engine", "seed", "iters", "step.kind", "step.scale",
               "network.kind", "network.d", "log.stride"}
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in allowed:
            raise UsageError(f"line {lineno}: unknown key {key!r}")
        out[key] = value
    return out


def load_config(path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc.strerror}") from exc
    return parse_config(text)
