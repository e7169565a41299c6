"""Dependency-free SVG line charts and gnuplot-style .dat companions.

emit_plots writes four chart pairs from a ledger or a re-read time series
table: the criterion integrand against the vorticity integrand, the
dissipation cutoff, the two dyadic Sobolev norms, and the running
criterion integral.  Charts are self-contained SVG 1.1 documents built
with ElementTree, so they are always well-formed XML; an empty table
produces an empty chart rather than an error.
"""

from __future__ import annotations

import math
from pathlib import Path
from xml.etree import ElementTree as ET

from .timeseries import COLUMNS, _fmt

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd")
WIDTH, HEIGHT = 640, 420
MARGIN = {"left": 70, "right": 20, "top": 40, "bottom": 50}


def _finite_pairs(x, y):
    return [(a, b) for a, b in zip(x, y) if math.isfinite(a) and math.isfinite(b)]


def _data_bounds(series):
    xs, ys = [], []
    for _, x, y in series:
        for a, b in _finite_pairs(x, y):
            xs.append(a)
            ys.append(b)
    if not xs:
        return None
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0
    return x_lo, x_hi, y_lo, y_hi


def _ticks(lo, hi, count=5):
    return [lo + (hi - lo) * i / (count - 1) for i in range(count)]


def line_chart(path, title, xlabel, ylabel, series) -> None:
    """Write one SVG line chart; series is a list of (label, x, y)."""
    svg = ET.Element(
        "svg",
        xmlns="http://www.w3.org/2000/svg",
        width=str(WIDTH),
        height=str(HEIGHT),
        viewBox=f"0 0 {WIDTH} {HEIGHT}",
    )
    ET.SubElement(svg, "rect", x="0", y="0", width=str(WIDTH), height=str(HEIGHT), fill="white")
    ET.SubElement(
        svg, "text", x=str(WIDTH // 2), y="22",
        attrib={"text-anchor": "middle", "font-size": "15", "font-family": "sans-serif"},
    ).text = title

    x0, y0 = MARGIN["left"], HEIGHT - MARGIN["bottom"]
    x1, y1 = WIDTH - MARGIN["right"], MARGIN["top"]
    ET.SubElement(
        svg, "path", d=f"M {x0} {y1} L {x0} {y0} L {x1} {y0}",
        stroke="black", fill="none",
        attrib={"stroke-width": "1"},
    )
    ET.SubElement(
        svg, "text", x=str((x0 + x1) // 2), y=str(HEIGHT - 10),
        attrib={"text-anchor": "middle", "font-size": "12", "font-family": "sans-serif"},
    ).text = xlabel
    ET.SubElement(
        svg, "text", x="18", y=str((y0 + y1) // 2),
        attrib={
            "text-anchor": "middle", "font-size": "12", "font-family": "sans-serif",
            "transform": f"rotate(-90 18 {(y0 + y1) // 2})",
        },
    ).text = ylabel

    bounds = _data_bounds(series)
    if bounds is not None:
        x_lo, x_hi, y_lo, y_hi = bounds

        def sx(v):
            return x0 + (v - x_lo) / (x_hi - x_lo) * (x1 - x0)

        def sy(v):
            return y0 - (v - y_lo) / (y_hi - y_lo) * (y0 - y1)

        for tick in _ticks(x_lo, x_hi):
            px = sx(tick)
            ET.SubElement(svg, "line", x1=f"{px:.2f}", y1=str(y0), x2=f"{px:.2f}",
                          y2=str(y0 + 5), stroke="black")
            ET.SubElement(
                svg, "text", x=f"{px:.2f}", y=str(y0 + 18),
                attrib={"text-anchor": "middle", "font-size": "10", "font-family": "sans-serif"},
            ).text = f"{tick:.3g}"
        for tick in _ticks(y_lo, y_hi):
            py = sy(tick)
            ET.SubElement(svg, "line", x1=str(x0 - 5), y1=f"{py:.2f}", x2=str(x0),
                          y2=f"{py:.2f}", stroke="black")
            ET.SubElement(
                svg, "text", x=str(x0 - 8), y=f"{py + 3:.2f}",
                attrib={"text-anchor": "end", "font-size": "10", "font-family": "sans-serif"},
            ).text = f"{tick:.3g}"

        for idx, (label, x, y) in enumerate(series):
            pts = _finite_pairs(x, y)
            if not pts:
                continue
            color = PALETTE[idx % len(PALETTE)]
            d = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in pts)
            ET.SubElement(
                svg, "polyline", points=d, fill="none", stroke=color,
                attrib={"stroke-width": "1.5"},
            )
            ET.SubElement(
                svg, "text", x=str(x1 - 6), y=str(y1 + 14 + 14 * idx),
                attrib={"text-anchor": "end", "font-size": "11",
                        "font-family": "sans-serif", "fill": color},
            ).text = label
    else:
        ET.SubElement(
            svg, "text", x=str((x0 + x1) // 2), y=str((y0 + y1) // 2),
            attrib={"text-anchor": "middle", "font-size": "12",
                    "font-family": "sans-serif", "fill": "#888888"},
        ).text = "no samples"

    ET.ElementTree(svg).write(path, xml_declaration=True, encoding="unicode")


def _write_dat(path, header_cols, columns) -> None:
    lines = ["# " + " ".join(header_cols)]
    for row in zip(*columns):
        lines.append(" ".join(_fmt(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def emit_plots(table: dict[str, list[float]], directory: str | Path) -> list[Path]:
    """Write the four chart pairs from a time-series table.

    The table uses the CSV column names; a ledger is converted with
    ledger_table.  Returns the paths of the four SVG files.

    .dat column layouts:
        criterion_vs_vorticity.dat: t f bkm
        dissipation_cutoff.dat:     t Q lambda
        norms.dat:                  t hs_u hsigma_theta
        criterion_integral.dat:     t int_f
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    t = table["t"]
    charts = [
        (
            "criterion_vs_vorticity",
            "Low-mode criterion integrand vs vorticity sup norm",
            [("f", t, table["f"]), ("bkm", t, table["bkm"])],
            ("t", "f", "bkm"),
        ),
        (
            "dissipation_cutoff",
            "Dissipation cutoff block and wavenumber",
            [("Q", t, table["Q"]), ("lambda", t, table["lambda"])],
            ("t", "Q", "lambda"),
        ),
        (
            "norms",
            "Dyadic Sobolev norms",
            [("hs_u", t, table["hs_u"]), ("hsigma_theta", t, table["hsigma_theta"])],
            ("t", "hs_u", "hsigma_theta"),
        ),
        (
            "criterion_integral",
            "Running integral of the criterion integrand",
            [("int_f", t, table["int_f"])],
            ("t", "int_f"),
        ),
    ]
    written = []
    for name, title, series, dat_cols in charts:
        svg_path = directory / f"{name}.svg"
        line_chart(svg_path, title, "t", name, series)
        _write_dat(directory / f"{name}.dat", dat_cols, [table[c] for c in dat_cols])
        written.append(svg_path)
    return written


def ledger_table(ledger) -> dict[str, list[float]]:
    """Convert a ledger to the CSV-style column table used by emit_plots."""
    table: dict[str, list[float]] = {name: [] for name in COLUMNS}
    int_f = 0.0
    int_bkm = 0.0
    prev = None
    for rec in ledger.samples:
        if prev is not None:
            dt = rec.t - prev.t
            int_f += 0.5 * dt * (prev.f + rec.f)
            int_bkm += 0.5 * dt * (prev.bkm + rec.bkm)
        prev = rec
        table["t"].append(rec.t)
        table["energy_u"].append(rec.energy_u)
        table["energy_theta"].append(rec.energy_theta)
        table["hs_u"].append(rec.hs_u)
        table["hsigma_theta"].append(rec.hsigma_theta)
        table["Q"].append(float(rec.q_value) if rec.q_value is not None else math.nan)
        table["lambda"].append(rec.lambda_value if rec.lambda_value is not None else math.nan)
        table["f"].append(rec.f)
        table["int_f"].append(int_f)
        table["bkm"].append(rec.bkm)
        table["int_bkm"].append(int_bkm)
        table["i1"].append(rec.i1)
        table["i2"].append(rec.i2)
        table["i3"].append(rec.i3)
    return table
