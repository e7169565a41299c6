"""Pseudo-spectral 3D Boussinesq solver with dyadic-band regularity diagnostics."""

from .spectral import (
    GridSpec,
    SpectralScalarField,
    SpectralVectorField,
    forward_transform,
    inverse_transform,
    gradient,
    divergence,
    curl,
    leray_project,
    dealias,
    linf_norm,
    l2_norm,
    inner_product,
)
from .dyadic import (
    DyadicSymbolFamily,
    LPBlockSet,
    build_symbols,
    project_block,
    decompose,
    low_modes,
    tilde_block,
    sobolev_norm,
    besov_b1_inf_inf,
    besov_low_modes,
)
from .solver import (
    CflError,
    InitialCondition,
    SolverParams,
    SolverState,
    RunResult,
    make_initial_state,
    nonlinear_term_velocity,
    buoyancy_term,
    nonlinear_term_temperature,
    rhs,
    step,
    run,
    energy_sample,
    energy_balance_residual,
)
from .diagnostics import (
    CriterionLedger,
    DiagnosticsRecord,
    DissipationCutoff,
    FluxDecomposition,
    GronwallConfig,
    LedgerSettings,
    bkm_integrand,
    commutator_piece,
    criterion_integrand,
    diagnostics_record,
    dissipation_wavenumber,
    flux_terms,
    regularity_monitor,
    update_ledger,
    verify_i312_vanishes,
)
from .config import RunConfig, ConfigError, load_config
from .snapshot import SnapshotError, load_snapshot, save_snapshot
from .timeseries import read_timeseries, write_timeseries
from .svgplot import emit_plots, ledger_table

__version__ = "0.1.0"
