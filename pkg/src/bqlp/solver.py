"""Dealiased pseudo-spectral time integration of buoyancy-coupled flow.

Momentum and temperature are advanced with an integrating-factor RK4:
diffusion is applied exactly per mode through exp(-nu |k|^2 dt) and
exp(-kappa |k|^2 dt) factors, while advection and buoyancy stay explicit.
Advective products are formed in physical space and truncated by the
grid's dealias rule; the velocity tendency is Leray-projected so the
divergence-free constraint is maintained to roundoff.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from scipy import fft as sfft

from . import dyadic
from .spectral import (
    GridSpec,
    SpectralScalarField,
    SpectralVectorField,
    _dealias_mask,
    _leray_coeffs,
    fft_coeffs,
    fft_workers,
    ifft_samples,
    wavenumber_sq,
    wavevectors,
)


class CflError(RuntimeError):
    """Step rejected: advective CFL number exceeded the configured limit."""

    def __init__(self, measured: float, limit: float):
        super().__init__(f"CFL {measured:.4g} exceeds limit {limit:.4g}")
        self.measured = measured
        self.limit = limit


@dataclass(frozen=True)
class SolverParams:
    nu: float
    kappa: float
    dt: float
    t_end: float
    cfl_limit: float = 0.5
    diagnostics_stride: int = 10
    h_half_ceiling: float | None = None

    def __post_init__(self):
        if self.nu < 0 or self.kappa < 0:
            raise ValueError("nu and kappa must be >= 0")
        if self.dt <= 0:
            raise ValueError("dt must be > 0")
        if self.t_end < 0:
            raise ValueError("t_end must be >= 0")
        if not 0.0 < self.cfl_limit <= 1.0:
            raise ValueError("cfl_limit must lie in (0, 1]")
        if self.diagnostics_stride < 1:
            raise ValueError("diagnostics_stride must be >= 1")


@dataclass
class SolverState:
    u: SpectralVectorField
    theta: SpectralScalarField
    t: float

    def copy(self) -> "SolverState":
        return SolverState(self.u.copy(), self.theta.copy(), self.t)


@dataclass(frozen=True)
class RunResult:
    status: str  # completed | blowup | cfl_floor
    state: SolverState
    steps: int
    dt_final: float


# ---------------------------------------------------------------------------
# Initial conditions
# ---------------------------------------------------------------------------

IC_KINDS = ("taylor_green", "random_band", "thermal_bubble", "zero_theta_ns")
THETA_KINDS = ("zero", "thermal_bubble", "random_band")


@dataclass(frozen=True)
class InitialCondition:
    kind: str
    amplitude: float = 1.0
    band: tuple[int, int] = (1, 3)
    seed: int = 0
    theta_kind: str | None = None  # optional override of the kind's default theta
    theta_amplitude: float | None = None

    def __post_init__(self):
        if self.kind not in IC_KINDS:
            raise ValueError(f"unknown initial condition kind {self.kind!r}")
        if self.theta_kind is not None and self.theta_kind not in THETA_KINDS:
            raise ValueError(f"unknown theta kind {self.theta_kind!r}")
        if not (1 <= self.band[0] <= self.band[1]):
            raise ValueError(f"band must satisfy 1 <= lo <= hi, got {self.band}")


def _grid_points(n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    x = np.arange(n) * (2.0 * np.pi / n)
    return np.meshgrid(x, x, x, indexing="ij")


def taylor_green_velocity(grid: GridSpec, amplitude: float = 1.0) -> SpectralVectorField:
    """Classic single-scale vortex; divergence-free by construction."""
    x, y, z = _grid_points(grid.n)
    c = np.empty((3,) + grid.shape, dtype=np.complex128)
    c[0] = fft_coeffs(amplitude * np.sin(x) * np.cos(y) * np.cos(z))
    c[1] = fft_coeffs(-amplitude * np.cos(x) * np.sin(y) * np.cos(z))
    c[2] = 0.0
    return SpectralVectorField(grid, c)


def thermal_bubble_temperature(grid: GridSpec, amplitude: float = 1.0) -> SpectralScalarField:
    """Smooth positive bump centered at (pi, pi, pi), peak value = amplitude.

    Built from a squared raised-cosine product, so it is an exact trig
    polynomial with modes |k_i| <= 2 (no spectral truncation error).
    """
    x, y, z = _grid_points(grid.n)
    bump = ((1 - np.cos(x)) * (1 - np.cos(y)) * (1 - np.cos(z)) / 8.0) ** 2
    return SpectralScalarField(grid, fft_coeffs(amplitude * bump))


def _band_mask(n: int, k_lo: int, k_hi: int) -> np.ndarray:
    kmag = np.sqrt(wavenumber_sq(n))
    return (kmag >= k_lo - 0.5) & (kmag <= k_hi + 0.5)


def random_band_velocity(
    grid: GridSpec, amplitude: float, band: tuple[int, int], seed: int
) -> SpectralVectorField:
    """Solenoidal random field with annulus-supported spectrum and RMS = amplitude."""
    rng = np.random.default_rng(seed)
    mask = _band_mask(grid.n, band[0], band[1])
    c = np.empty((3,) + grid.shape, dtype=np.complex128)
    for j in range(3):
        c[j] = fft_coeffs(rng.standard_normal(grid.shape)) * mask
    c = _leray_coeffs(c, grid.n)
    c[:, 0, 0, 0] = 0.0
    c *= _dealias_mask(grid.n, grid.dealias_fraction)
    rms = np.sqrt(np.sum(np.abs(c) ** 2))
    if rms > 0:
        c *= amplitude / rms
    return SpectralVectorField(grid, c)


def random_band_scalar(
    grid: GridSpec, amplitude: float, band: tuple[int, int], seed: int
) -> SpectralScalarField:
    rng = np.random.default_rng(seed)
    c = fft_coeffs(rng.standard_normal(grid.shape)) * _band_mask(grid.n, band[0], band[1])
    c[0, 0, 0] = 0.0
    c *= _dealias_mask(grid.n, grid.dealias_fraction)
    rms = np.sqrt(np.sum(np.abs(c) ** 2))
    if rms > 0:
        c *= amplitude / rms
    return SpectralScalarField(grid, c)


def make_initial_state(grid: GridSpec, ic: InitialCondition) -> SolverState:
    from .spectral import zeros_scalar, zeros_vector

    if ic.kind == "taylor_green":
        u = taylor_green_velocity(grid, ic.amplitude)
        theta = zeros_scalar(grid)
    elif ic.kind == "thermal_bubble":
        u = zeros_vector(grid)
        theta = thermal_bubble_temperature(grid, ic.amplitude)
    elif ic.kind == "random_band":
        u = random_band_velocity(grid, ic.amplitude, ic.band, ic.seed)
        theta = random_band_scalar(grid, ic.amplitude, ic.band, ic.seed + 1)
    else:  # zero_theta_ns
        u = random_band_velocity(grid, ic.amplitude, ic.band, ic.seed)
        theta = zeros_scalar(grid)

    if ic.theta_kind is not None:
        amp = ic.theta_amplitude if ic.theta_amplitude is not None else ic.amplitude
        if ic.theta_kind == "zero":
            theta = zeros_scalar(grid)
        elif ic.theta_kind == "thermal_bubble":
            theta = thermal_bubble_temperature(grid, amp)
        else:
            theta = random_band_scalar(grid, amp, ic.band, ic.seed + 1)
    return SolverState(u, theta, 0.0)


# ---------------------------------------------------------------------------
# Tendencies
# ---------------------------------------------------------------------------

def _advection_velocity(ucoef: np.ndarray, grid: GridSpec) -> np.ndarray:
    """-(u.grad)u as coefficients: physical products, dealias, Leray-project."""
    n = grid.n
    k = wavevectors(n)
    u_phys = [ifft_samples(ucoef[j]).real for j in range(3)]
    out = np.empty_like(ucoef)
    for i in range(3):
        adv = np.zeros(grid.shape)
        for j in range(3):
            adv += u_phys[j] * ifft_samples(1j * k[j] * ucoef[i]).real
        out[i] = fft_coeffs(adv)
    out *= _dealias_mask(n, grid.dealias_fraction)
    np.negative(out, out)
    return _leray_coeffs(out, n)


def _advection_scalar(ucoef: np.ndarray, tcoef: np.ndarray, grid: GridSpec) -> np.ndarray:
    """-(u.grad)theta as coefficients, dealiased."""
    n = grid.n
    k = wavevectors(n)
    adv = np.zeros(grid.shape)
    for j in range(3):
        adv += ifft_samples(ucoef[j]).real * ifft_samples(1j * k[j] * tcoef).real
    return -fft_coeffs(adv) * _dealias_mask(n, grid.dealias_fraction)


def _buoyancy(tcoef: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Leray projection of the vertical forcing (0, 0, theta)."""
    c = np.zeros((3,) + grid.shape, dtype=np.complex128)
    c[2] = tcoef
    return _leray_coeffs(c, grid.n)


def nonlinear_term_velocity(u: SpectralVectorField) -> SpectralVectorField:
    """Dealiased, divergence-free advection tendency -(u.grad)u."""
    return SpectralVectorField(u.grid, _advection_velocity(u.coeffs, u.grid))


def buoyancy_term(theta: SpectralScalarField) -> SpectralVectorField:
    return SpectralVectorField(theta.grid, _buoyancy(theta.coeffs, theta.grid))


def nonlinear_term_temperature(
    u: SpectralVectorField, theta: SpectralScalarField
) -> SpectralScalarField:
    """Dealiased transport tendency -(u.grad)theta."""
    return SpectralScalarField(u.grid, _advection_scalar(u.coeffs, theta.coeffs, u.grid))


def rhs(state: SolverState) -> tuple[SpectralVectorField, SpectralScalarField]:
    """Explicit tendencies; diffusion is handled by the integrating factor."""
    du = _advection_velocity(state.u.coeffs, state.u.grid)
    du += _buoyancy(state.theta.coeffs, state.u.grid)
    dtheta = _advection_scalar(state.u.coeffs, state.theta.coeffs, state.u.grid)
    return (
        SpectralVectorField(state.u.grid, du),
        SpectralScalarField(state.u.grid, dtheta),
    )


def max_velocity(u: SpectralVectorField) -> float:
    """Max pointwise speed on the native grid (CFL measure)."""
    mag_sq = sum(ifft_samples(u.coeffs[j]).real ** 2 for j in range(3))
    return float(np.sqrt(np.max(mag_sq)))


def cfl_number(state: SolverState, dt: float) -> float:
    n = state.u.grid.n
    return dt * max_velocity(state.u) * n / (2.0 * np.pi)


# ---------------------------------------------------------------------------
# Time stepping
# ---------------------------------------------------------------------------

def _rhs_arrays(ucoef, tcoef, grid):
    """Fast path for rhs: one batched inverse and one batched forward FFT.

    Arithmetic is identical to composing the public tendency operators.
    """
    n = grid.n
    k = wavevectors(n)
    stack = np.empty((15,) + grid.shape, dtype=np.complex128)
    stack[0:3] = ucoef
    for i in range(3):
        for j in range(3):
            stack[3 + 3 * i + j] = 1j * k[j] * ucoef[i]
    for j in range(3):
        stack[12 + j] = 1j * k[j] * tcoef
    phys = sfft.ifftn(stack, axes=(1, 2, 3), norm="forward", workers=fft_workers()).real

    u_p = phys[0:3]
    adv = np.empty((4,) + grid.shape)
    for i in range(3):
        base = 3 + 3 * i
        adv[i] = u_p[0] * phys[base] + u_p[1] * phys[base + 1] + u_p[2] * phys[base + 2]
    adv[3] = u_p[0] * phys[12] + u_p[1] * phys[13] + u_p[2] * phys[14]

    spec = sfft.fftn(adv, axes=(1, 2, 3), norm="forward", workers=fft_workers())
    spec *= _dealias_mask(n, grid.dealias_fraction)
    np.negative(spec, spec)
    du = _leray_coeffs(spec[0:3], n) + _buoyancy(tcoef, grid)
    return du, spec[3]


@lru_cache(maxsize=32)
def _half_step_factors(n: int, nu: float, kappa: float, h: float):
    """Per-mode diffusion factors over half a step (cached across steps)."""
    ksq = wavenumber_sq(n)
    eu = np.exp(-nu * ksq * (0.5 * h))
    et = np.exp(-kappa * ksq * (0.5 * h))
    eu.setflags(write=False)
    et.setflags(write=False)
    return eu, et


def step(state: SolverState, params: SolverParams, dt: float | None = None) -> SolverState:
    """One integrating-factor RK4 step of length dt (default params.dt).

    Raises CflError before doing any work if the advective CFL number
    exceeds params.cfl_limit.  With the nonlinearity identically zero the
    update reduces to exact per-mode diffusion decay.
    """
    h = params.dt if dt is None else dt
    grid = state.u.grid
    measured = cfl_number(state, h)
    if measured > params.cfl_limit:
        raise CflError(measured, params.cfl_limit)

    eu, et = _half_step_factors(grid.n, params.nu, params.kappa, h)
    u0, t0 = state.u.coeffs, state.theta.coeffs

    du1, dt1 = _rhs_arrays(u0, t0, grid)
    du2, dt2 = _rhs_arrays(eu * (u0 + 0.5 * h * du1), et * (t0 + 0.5 * h * dt1), grid)
    du3, dt3 = _rhs_arrays(eu * u0 + 0.5 * h * du2, et * t0 + 0.5 * h * dt2, grid)
    du4, dt4 = _rhs_arrays(eu * (eu * u0 + h * du3), et * (et * t0 + h * dt3), grid)

    u1 = eu * (eu * u0) + (h / 6.0) * (eu * (eu * du1) + 2.0 * eu * (du2 + du3) + du4)
    t1 = et * (et * t0) + (h / 6.0) * (et * (et * dt1) + 2.0 * et * (dt2 + dt3) + dt4)
    return SolverState(
        SpectralVectorField(grid, u1),
        SpectralScalarField(grid, t1),
        state.t + h,
    )


def _finite(state: SolverState) -> bool:
    return bool(np.all(np.isfinite(state.u.coeffs)) and np.all(np.isfinite(state.theta.coeffs)))


def run(params: SolverParams, state: SolverState, sink=None) -> RunResult:
    """Integrate to t_end with CFL fallback and blow-up guards.

    sink(state, step_index) is invoked at step 0 (when any stepping will
    occur), every diagnostics_stride steps, and after the final step.  On a
    CFL rejection the step size is halved down to a floor of dt/64, after
    which the run terminates with status "cfl_floor".  Non-finite
    coefficients terminate with status "blowup" and the last valid state.
    """
    dt = params.dt
    dt_floor = params.dt / 64.0
    t_end = params.t_end
    eps = 1e-12 * max(1.0, abs(t_end))
    steps = 0
    status = "completed"
    emitted_final = False

    if state.t < t_end - eps and sink is not None:
        sink(state, 0)

    while state.t < t_end - eps:
        h = min(dt, t_end - state.t)
        try:
            new_state = step(state, params, dt=h)
        except CflError:
            dt = dt / 2.0
            if dt < dt_floor:
                status = "cfl_floor"
                break
            continue
        if not _finite(new_state):
            status = "blowup"
            break
        state = new_state
        steps += 1
        at_end = state.t >= t_end - eps
        if steps % params.diagnostics_stride == 0 or at_end:
            if sink is not None:
                sink(state, steps)
                emitted_final = at_end
            if params.h_half_ceiling is not None:
                if dyadic.sobolev_norm(state.u, 0.5) > params.h_half_ceiling:
                    status = "blowup"
                    emitted_final = True
                    break

    if status == "completed" and not emitted_final and steps > 0 and sink is not None:
        sink(state, steps)
    return RunResult(status, state, steps, dt)


# ---------------------------------------------------------------------------
# Energy bookkeeping
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EnergySample:
    """Scalars needed to check the energy balances between two instants."""

    t: float
    energy_u: float          # 0.5 ||u||_2^2
    energy_theta: float      # 0.5 ||theta||_2^2
    grad_u_sq: float         # ||grad u||_2^2
    grad_theta_sq: float     # ||grad theta||_2^2
    buoyancy_flux: float     # (theta e3, u)


def energy_sample(state: SolverState) -> EnergySample:
    ksq = wavenumber_sq(state.u.grid.n)
    vol = (2.0 * np.pi) ** 3
    uc, tc = state.u.coeffs, state.theta.coeffs
    return EnergySample(
        t=state.t,
        energy_u=0.5 * vol * float(np.sum(np.abs(uc) ** 2)),
        energy_theta=0.5 * vol * float(np.sum(np.abs(tc) ** 2)),
        grad_u_sq=vol * float(np.sum(ksq * np.abs(uc) ** 2)),
        grad_theta_sq=vol * float(np.sum(ksq * np.abs(tc) ** 2)),
        buoyancy_flux=vol * float(np.real(np.sum(tc * np.conj(uc[2])))),
    )


def energy_balance_residual(
    samples: list[EnergySample], nu: float, kappa: float
) -> tuple[np.ndarray, np.ndarray]:
    """Per-interval residuals of the velocity and temperature energy balances.

    Compares the centered difference of sampled energies against the
    trapezoid of sampled fluxes, normalized by the largest energy seen, so
    the residual is a relative drift rate per unit time.
    """
    if len(samples) < 2:
        raise ValueError("need at least two samples")
    t = np.array([s.t for s in samples])
    e_u = np.array([s.energy_u for s in samples])
    e_t = np.array([s.energy_theta for s in samples])
    flux_u = np.array([-nu * s.grad_u_sq + s.buoyancy_flux for s in samples])
    flux_t = np.array([-kappa * s.grad_theta_sq for s in samples])
    dt = np.diff(t)
    r_u = (np.diff(e_u) / dt) - 0.5 * (flux_u[1:] + flux_u[:-1])
    r_t = (np.diff(e_t) / dt) - 0.5 * (flux_t[1:] + flux_t[:-1])
    scale_u = max(np.max(e_u), 1e-300)
    scale_t = max(np.max(e_t), 1e-300)
    return r_u / scale_u, r_t / scale_t
