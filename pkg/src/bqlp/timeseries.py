"""CSV time-series output of the criterion ledger.

Fixed column layout, one row per sample, every value printed with 17
significant digits so floats round-trip exactly.  Undefined or unresolved
dissipation cutoffs appear as nan in the Q and lambda columns (the ledger
object retains the distinction).
"""

from __future__ import annotations

import math
from pathlib import Path

from .diagnostics import CriterionLedger

COLUMNS = (
    "t",
    "energy_u",
    "energy_theta",
    "hs_u",
    "hsigma_theta",
    "Q",
    "lambda",
    "f",
    "int_f",
    "bkm",
    "int_bkm",
    "i1",
    "i2",
    "i3",
)


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def write_timeseries(ledger: CriterionLedger, path: str | Path) -> None:
    """Write the ledger samples with running integrals to a CSV file."""
    lines = [",".join(COLUMNS)]
    int_f = 0.0
    int_bkm = 0.0
    prev = None
    for rec in ledger.samples:
        if prev is not None:
            dt = rec.t - prev.t
            int_f += 0.5 * dt * (prev.f + rec.f)
            int_bkm += 0.5 * dt * (prev.bkm + rec.bkm)
        prev = rec
        q = float(rec.q_value) if rec.q_value is not None else math.nan
        lam = rec.lambda_value if rec.lambda_value is not None else math.nan
        row = (
            rec.t, rec.energy_u, rec.energy_theta, rec.hs_u, rec.hsigma_theta,
            q, lam, rec.f, int_f, rec.bkm, int_bkm, rec.i1, rec.i2, rec.i3,
        )
        lines.append(",".join(_fmt(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def read_timeseries(path: str | Path) -> dict[str, list[float]]:
    """Read a ledger CSV back into per-column float lists."""
    text = Path(path).read_text().strip().splitlines()
    if not text:
        raise ValueError(f"{path}: empty time series file")
    header = text[0].split(",")
    if tuple(header) != COLUMNS:
        raise ValueError(f"{path}: unexpected columns {header}")
    out: dict[str, list[float]] = {name: [] for name in COLUMNS}
    for line in text[1:]:
        values = line.split(",")
        if len(values) != len(COLUMNS):
            raise ValueError(f"{path}: row with {len(values)} fields")
        for name, value in zip(COLUMNS, values):
            out[name].append(float(value))
    return out


def reintegrate(t: list[float], y: list[float]) -> float:
    """Trapezoid integral over the samples, mirroring the ledger update."""
    total = 0.0
    for i in range(1, len(t)):
        total += 0.5 * (t[i] - t[i - 1]) * (y[i] + y[i - 1])
    return total
