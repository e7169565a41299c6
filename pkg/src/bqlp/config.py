"""Run configuration: JSON ingestion with total, field-naming validation.

The schema (all blocks except "grid", "physics", "exponents" and "time"
may be omitted when their defaults suffice) is documented in
docs/formats.md and mirrored by the shipped example configuration.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .diagnostics import ExponentRangeError, GronwallConfig, regularity_monitor
from .solver import IC_KINDS, THETA_KINDS, InitialCondition, SolverParams
from .spectral import GridSpec

ALLOWED_FORMATS = ("csv", "svg", "snapshots")


class ConfigError(ValueError):
    """Invalid or missing configuration entry, naming the failing field."""

    def __init__(self, field_path: str, message: str):
        super().__init__(f"{field_path}: {message}")
        self.field_path = field_path


@dataclass(frozen=True)
class PhysicsParams:
    nu: float
    kappa: float
    c: float = 1.0


@dataclass(frozen=True)
class OutputConfig:
    directory: str = "out"
    snapshot_stride: int = 0  # snapshots written every this-many diagnostic samples
    formats: tuple[str, ...] = ("csv", "svg")


@dataclass(frozen=True)
class RunConfig:
    grid: GridSpec
    physics: PhysicsParams
    s: float
    sigma: float
    dt: float
    t_end: float
    cfl_limit: float
    diagnostics_stride: int
    ic: InitialCondition
    output: OutputConfig
    seed: int = 0
    gronwall: GronwallConfig | None = None
    h_half_ceiling: float | None = None

    def solver_params(self) -> SolverParams:
        return SolverParams(
            nu=self.physics.nu,
            kappa=self.physics.kappa,
            dt=self.dt,
            t_end=self.t_end,
            cfl_limit=self.cfl_limit,
            diagnostics_stride=self.diagnostics_stride,
            h_half_ceiling=self.h_half_ceiling,
        )


def _get(data: dict, path: str, kind, required: bool = True, default=None):
    node = data
    parts = path.split(".")
    for part in parts[:-1]:
        node = node.get(part, {})
        if not isinstance(node, dict):
            raise ConfigError(path, "parent entry is not an object")
    leaf = parts[-1]
    if leaf not in node:
        if required:
            raise ConfigError(path, "required entry is missing")
        return default
    value = node[leaf]
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(path, f"expected a number, got {value!r}")
        return float(value)
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(path, f"expected an integer, got {value!r}")
        return value
    if kind is str:
        if not isinstance(value, str):
            raise ConfigError(path, f"expected a string, got {value!r}")
        return value
    return value


def parse_config(data: dict) -> RunConfig:
    """Validate a parsed JSON object into a RunConfig."""
    if not isinstance(data, dict):
        raise ConfigError("<root>", "configuration must be a JSON object")

    n = _get(data, "grid.n", int)
    dealias_fraction = _get(data, "grid.dealias_fraction", float, False, 2.0 / 3.0)
    oversample = _get(data, "grid.oversample_factor", int, False, 2)
    try:
        grid = GridSpec(n, dealias_fraction, oversample)
    except ValueError as exc:
        raise ConfigError("grid", str(exc)) from exc

    nu = _get(data, "physics.nu", float)
    kappa = _get(data, "physics.kappa", float)
    c = _get(data, "physics.c", float, False, 1.0)
    if nu < 0:
        raise ConfigError("physics.nu", "must be >= 0")
    if kappa < 0:
        raise ConfigError("physics.kappa", "must be >= 0")
    if c <= 0:
        raise ConfigError("physics.c", "must be > 0")

    s = _get(data, "exponents.s", float)
    sigma = _get(data, "exponents.sigma", float)
    try:
        regularity_monitor(s, sigma)
    except ExponentRangeError as exc:
        which = "exponents.sigma" if exc.constraint.startswith("sigma") else "exponents.s"
        raise ConfigError(which, f"{exc} (admissible: 1/2 <= s < 1, s - 1 < sigma < 0)") from exc

    dt = _get(data, "time.dt", float)
    t_end = _get(data, "time.t_end", float)
    cfl_limit = _get(data, "time.cfl_limit", float, False, 0.5)
    stride = _get(data, "time.diagnostics_stride", int, False, 10)
    if dt <= 0:
        raise ConfigError("time.dt", "must be > 0")
    if t_end < 0:
        raise ConfigError("time.t_end", "must be >= 0")
    if not 0.0 < cfl_limit <= 1.0:
        raise ConfigError("time.cfl_limit", "must lie in (0, 1]")
    if stride < 1:
        raise ConfigError("time.diagnostics_stride", "must be >= 1")
    ceiling = _get(data, "time.h_half_ceiling", float, False, None)
    if ceiling is not None and ceiling <= 0:
        raise ConfigError("time.h_half_ceiling", "must be > 0")

    seed = _get(data, "seed", int, False, 0)

    kind = _get(data, "initial_condition.kind", str)
    if kind not in IC_KINDS:
        raise ConfigError(
            "initial_condition.kind", f"must be one of {', '.join(IC_KINDS)}"
        )
    amplitude = _get(data, "initial_condition.amplitude", float, False, 1.0)
    band = _get(data, "initial_condition.band", list, False, [1, 3])
    if (
        not isinstance(band, (list, tuple))
        or len(band) != 2
        or not all(isinstance(b, int) and not isinstance(b, bool) for b in band)
        or not 1 <= band[0] <= band[1]
    ):
        raise ConfigError(
            "initial_condition.band", f"must be integers [k_lo, k_hi] with 1 <= lo <= hi, got {band!r}"
        )
    ic_seed = _get(data, "initial_condition.seed", int, False, seed)
    theta_kind = _get(data, "initial_condition.theta.kind", str, False, None)
    if theta_kind is not None and theta_kind not in THETA_KINDS:
        raise ConfigError(
            "initial_condition.theta.kind", f"must be one of {', '.join(THETA_KINDS)}"
        )
    theta_amplitude = _get(data, "initial_condition.theta.amplitude", float, False, None)
    ic = InitialCondition(
        kind=kind,
        amplitude=amplitude,
        band=(band[0], band[1]),
        seed=ic_seed,
        theta_kind=theta_kind,
        theta_amplitude=theta_amplitude,
    )

    directory = _get(data, "output.directory", str, False, "out")
    snapshot_stride = _get(data, "output.snapshot_stride", int, False, 0)
    if snapshot_stride < 0:
        raise ConfigError("output.snapshot_stride", "must be >= 0")
    formats = _get(data, "output.formats", list, False, ["csv", "svg"])
    if not isinstance(formats, (list, tuple)) or not all(
        isinstance(f, str) for f in formats
    ):
        raise ConfigError("output.formats", "must be a list of strings")
    bad = [f for f in formats if f not in ALLOWED_FORMATS]
    if bad:
        raise ConfigError(
            "output.formats", f"unknown formats {bad}; allowed: {', '.join(ALLOWED_FORMATS)}"
        )
    output = OutputConfig(directory, snapshot_stride, tuple(formats))

    gronwall = None
    if isinstance(data.get("gronwall"), dict):
        gc = _get(data, "gronwall.C", float)
        gc6 = _get(data, "gronwall.C6", float)
        gn = _get(data, "gronwall.N", int)
        if gc <= 0:
            raise ConfigError("gronwall.C", "must be > 0")
        if gc6 < 0:
            raise ConfigError("gronwall.C6", "must be >= 0")
        if gn < -1:
            raise ConfigError("gronwall.N", "must be >= -1")
        gronwall = GronwallConfig(gc, gc6, gn)

    return RunConfig(
        grid=grid,
        physics=PhysicsParams(nu, kappa, c),
        s=s,
        sigma=sigma,
        dt=dt,
        t_end=t_end,
        cfl_limit=cfl_limit,
        diagnostics_stride=stride,
        ic=ic,
        output=output,
        seed=seed,
        gronwall=gronwall,
        h_half_ceiling=ceiling,
    )


def load_config(path: str | Path) -> RunConfig:
    """Read and validate a JSON configuration file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError("<file>", f"cannot read {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("<file>", f"invalid JSON in {path}: {exc}") from exc
    return parse_config(data)
