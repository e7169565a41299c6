"""Regularity-criterion diagnostics built on the dyadic decomposition.

Provides the dissipation wavenumber scan, the low-mode Besov integrand
f(t) used as a blow-up monitor, the classical vorticity sup-norm
integrand for comparison, the block-energy flux terms with their exact
paraproduct and commutator splits, and a running criterion ledger with an
optional growth-bound overlay.

All integrals are physical-grid quadratures, which coincide with the
spectral Parseval pairing; for band-limited fields inside the family's
coverage radius the decomposition identities hold to roundoff.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dyadic import besov_low_modes, build_symbols, lambda_q, sobolev_norm
from .spectral import (
    SpectralScalarField,
    SpectralVectorField,
    curl,
    ifft_samples,
    linf_norm,
    wavevectors,
)

VOL = (2.0 * np.pi) ** 3


class UndefinedCutoffError(ValueError):
    """Dissipation threshold is zero (nu or kappa vanishes)."""


class ExponentRangeError(ValueError):
    def __init__(self, constraint: str, message: str):
        super().__init__(message)
        self.constraint = constraint


class SequencingError(ValueError):
    """Ledger samples must arrive with strictly increasing times."""


# ---------------------------------------------------------------------------
# Exponent gate
# ---------------------------------------------------------------------------

def regularity_monitor(s: float, sigma: float) -> tuple[float, float]:
    """Validate the norm exponents; admissible set is 1/2 <= s < 1, s-1 < sigma < 0.

    Raises ExponentRangeError naming the violated inequality.  The combined
    condition 2s < 2*sigma + 2 is implied and asserted.
    """
    if not s >= 0.5:
        raise ExponentRangeError("s >= 1/2", f"s = {s} violates 1/2 <= s < 1")
    if not s < 1.0:
        raise ExponentRangeError("s < 1", f"s = {s} violates 1/2 <= s < 1")
    if not sigma > s - 1.0:
        raise ExponentRangeError(
            "sigma > s - 1", f"sigma = {sigma} violates s - 1 < sigma < 0 (s = {s})"
        )
    if not sigma < 0.0:
        raise ExponentRangeError(
            "sigma < 0", f"sigma = {sigma} violates s - 1 < sigma < 0"
        )
    assert 2.0 * s < 2.0 * sigma + 2.0
    return s, sigma


# ---------------------------------------------------------------------------
# Dissipation wavenumber
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DissipationCutoff:
    """Separating dyadic scale: block amplitudes above q_value sit below threshold.

    status is "defined" (q_value in [0, q_max]), "unresolved" (the
    separating scale lies above the trusted block family), or "undefined"
    (threshold c*min(nu, kappa) is zero).
    """

    status: str
    threshold: float
    q_value: int | None = None
    lambda_value: float | None = None

    @property
    def defined(self) -> bool:
        return self.status == "defined"


def _block_sup_norms(u: SpectralVectorField | SpectralScalarField, q_hi: int) -> dict[int, float]:
    """||u_q||_inf for blocks q = -1 .. q_hi (grid-truncated above q_max)."""
    fam = build_symbols(u.grid)
    out = {}
    for q in range(-1, q_hi + 1):
        mult = fam.phi(q)
        if isinstance(u, SpectralVectorField):
            block = SpectralVectorField(u.grid, u.coeffs * mult[np.newaxis])
        else:
            block = SpectralScalarField(u.grid, u.coeffs * mult)
        out[q] = linf_norm(block)
    return out


def block_amplitudes(u: SpectralVectorField | SpectralScalarField) -> dict[int, float]:
    """lambda_p^{-1} ||u_p||_inf for every block with support on the grid.

    Blocks above the family's q_max are grid-truncated; their amplitudes
    measure only representable content and feed the "unresolved" sentinel.
    """
    fam = build_symbols(u.grid)
    sups = _block_sup_norms(u, fam.q_top)
    return {p: sups[p] / lambda_q(p) for p in sups}


def _cutoff_from_amplitudes(
    amps: dict[int, float], q_max: int, q_top: int, threshold: float
) -> DissipationCutoff:
    failing = [p for p in range(1, q_top + 1) if not amps[p] < threshold]
    if not failing:
        q = 0
    else:
        q = max(failing)
        if q > q_max:
            return DissipationCutoff(status="unresolved", threshold=threshold)
    return DissipationCutoff(
        status="defined", threshold=threshold, q_value=q, lambda_value=lambda_q(q)
    )


def dissipation_wavenumber(
    u: SpectralVectorField, nu: float, kappa: float, c: float = 1.0
) -> DissipationCutoff:
    """Smallest q >= 0 with lambda_p^{-1}||u_p||_inf < c*min(nu, kappa) for all p > q.

    Only blocks p >= 1 constrain the scan.  If the last failing block
    lies above the trusted family the cutoff is reported "unresolved";
    when the threshold vanishes it is "undefined".
    """
    if c <= 0:
        raise ValueError(f"threshold constant c must be > 0, got {c}")
    threshold = c * min(nu, kappa)
    if threshold == 0.0:
        return DissipationCutoff(status="undefined", threshold=0.0)
    fam = build_symbols(u.grid)
    amps = block_amplitudes(u)
    return _cutoff_from_amplitudes(amps, fam.q_max, fam.q_top, threshold)


def criterion_integrand(u: SpectralVectorField, cutoff: DissipationCutoff) -> float:
    """Low-mode Besov sup f = sup_{q <= Q} lambda_q ||u_q||_inf.

    An unresolved cutoff falls back to the full block family (the sup is
    then the whole truncated Besov norm); an undefined cutoff raises.
    """
    if cutoff.status == "undefined":
        raise UndefinedCutoffError("dissipation threshold is zero (nu or kappa = 0)")
    fam = build_symbols(u.grid)
    q = fam.q_max if cutoff.status == "unresolved" else cutoff.q_value
    return besov_low_modes(u, q)


def bkm_integrand(u: SpectralVectorField) -> float:
    """Sup norm of the vorticity, the classical blow-up integrand."""
    return linf_norm(curl(u))


# ---------------------------------------------------------------------------
# Flux terms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FluxDecomposition:
    """Block-energy flux integrals and their exact splits.

    i3 = i31 + i32 + i33 and i31 = i311 + i312 + i313 hold to roundoff for
    fields whose block sums reconstruct them exactly; i312 vanishes for
    divergence-free velocity.
    """

    i1: float
    i2: float
    i3: float
    i31: float
    i32: float
    i33: float
    i311: float
    i312: float
    i313: float
    s: float
    sigma: float

    @property
    def i3_parts(self) -> tuple[float, float, float]:
        return (self.i31, self.i32, self.i33)

    @property
    def i31_parts(self) -> tuple[float, float, float]:
        return (self.i311, self.i312, self.i313)


class _FluxWorkspace:
    """Caches physical-space evaluations shared across the flux integrals."""

    def __init__(self, u: SpectralVectorField, theta: SpectralScalarField):
        self.grid = u.grid
        self.fam = build_symbols(u.grid)
        self.n = u.grid.n
        self.k = wavevectors(self.n)
        self.uc = u.coeffs
        self.tc = theta.coeffs
        self._theta_block = {}
        self._theta_phys = {}
        self._proj2_theta_phys = {}
        self._grad_theta_block_phys = {}
        self._u_low_phys = {}
        self._u_block_phys = {}
        self._grad_theta_low_phys = {}
        self._grad_theta_tilde_phys = {}
        self._grad_block_pair_phys = {}
        self._quad_weight = VOL / self.n**3

    def quad(self, a: np.ndarray, b: np.ndarray) -> float:
        return self._quad_weight * float(np.sum(a * b))

    def _phys(self, coeffs: np.ndarray) -> np.ndarray:
        return ifft_samples(coeffs).real

    def theta_block(self, q: int) -> np.ndarray:
        if q not in self._theta_block:
            self._theta_block[q] = self.fam.phi(q) * self.tc
        return self._theta_block[q]

    def theta_phys(self, q: int) -> np.ndarray:
        if q not in self._theta_phys:
            self._theta_phys[q] = self._phys(self.theta_block(q))
        return self._theta_phys[q]

    def proj2_theta_phys(self, q: int) -> np.ndarray:
        # (Delta_q^2 theta) in physical space; pairing partner for the
        # self-adjoint move of Delta_q off a grid product.
        if q not in self._proj2_theta_phys:
            self._proj2_theta_phys[q] = self._phys(self.fam.phi(q) ** 2 * self.tc)
        return self._proj2_theta_phys[q]

    def grad_theta_block_phys(self, p: int) -> list[np.ndarray]:
        if p not in self._grad_theta_block_phys:
            blk = self.theta_block(p)
            self._grad_theta_block_phys[p] = [
                self._phys(1j * self.k[j] * blk) for j in range(3)
            ]
        return self._grad_theta_block_phys[p]

    def u_low_phys(self, level: int) -> list[np.ndarray] | None:
        # Velocity truncated to blocks <= level; None encodes the empty sum.
        if level < -1:
            return None
        if level not in self._u_low_phys:
            mult = self.fam.low_multiplier(level)
            self._u_low_phys[level] = [
                self._phys(mult * self.uc[j]) for j in range(3)
            ]
        return self._u_low_phys[level]

    def u_block_phys(self, p: int) -> list[np.ndarray]:
        if p not in self._u_block_phys:
            mult = self.fam.phi(p)
            self._u_block_phys[p] = [self._phys(mult * self.uc[j]) for j in range(3)]
        return self._u_block_phys[p]

    def grad_theta_low_phys(self, level: int) -> list[np.ndarray] | None:
        if level < -1:
            return None
        if level not in self._grad_theta_low_phys:
            mult = self.fam.low_multiplier(level)
            self._grad_theta_low_phys[level] = [
                self._phys(1j * self.k[j] * mult * self.tc) for j in range(3)
            ]
        return self._grad_theta_low_phys[level]

    def grad_theta_tilde_phys(self, p: int) -> list[np.ndarray]:
        if p not in self._grad_theta_tilde_phys:
            tilde = self.theta_block(p).copy()
            if p - 1 >= -1:
                tilde = tilde + self.theta_block(p - 1)
            if p + 1 <= self.fam.q_max:
                tilde = tilde + self.theta_block(p + 1)
            self._grad_theta_tilde_phys[p] = [
                self._phys(1j * self.k[j] * tilde) for j in range(3)
            ]
        return self._grad_theta_tilde_phys[p]

    def grad_block_pair_phys(self, q: int, p: int) -> list[np.ndarray]:
        # grad(Delta_q theta_p): double multiplier, then spectral gradient.
        if (q, p) not in self._grad_block_pair_phys:
            blk = self.fam.phi(q) * self.theta_block(p)
            self._grad_block_pair_phys[(q, p)] = [
                self._phys(1j * self.k[j] * blk) for j in range(3)
            ]
        return self._grad_block_pair_phys[(q, p)]

    @staticmethod
    def dot(a: list[np.ndarray], b: list[np.ndarray]) -> np.ndarray:
        return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]

    def transport(self, vel: list[np.ndarray] | None, grad: list[np.ndarray]) -> np.ndarray | None:
        if vel is None:
            return None
        return self.dot(vel, grad)


def _i1_i2(ws: _FluxWorkspace, s: float) -> tuple[float, float]:
    fam, k, n = ws.fam, ws.k, ws.n
    u_phys = [ws._phys(ws.uc[j]) for j in range(3)]
    adv = [
        sum(u_phys[j] * ws._phys(1j * k[j] * ws.uc[i]) for j in range(3))
        for i in range(3)
    ]
    i1 = 0.0
    i2 = 0.0
    for q in range(-1, fam.q_max + 1):
        w = lambda_q(q) ** (2.0 * s)
        phi2 = fam.phi(q) ** 2
        proj2_u = [ws._phys(phi2 * ws.uc[i]) for i in range(3)]
        i1 += w * sum(ws.quad(adv[i], proj2_u[i]) for i in range(3))
        # Delta_q(theta e3) . u_q pairs theta against the doubled projection
        # of the vertical velocity component; no products are involved.
        i2 -= w * VOL * float(np.real(np.sum(phi2 * ws.tc * np.conj(ws.uc[2]))))
    return i1, i2


def flux_terms(
    u: SpectralVectorField, theta: SpectralScalarField, s: float, sigma: float
) -> FluxDecomposition:
    """All flux integrals: transport against u-blocks, buoyancy, scalar
    transport against theta-blocks, plus the paraproduct split of the
    scalar flux and the commutator split of its low-high part.
    """
    regularity_monitor(s, sigma)
    ws = _FluxWorkspace(u, theta)
    fam = ws.fam
    qs = range(-1, fam.q_max + 1)

    i1, i2 = _i1_i2(ws, s)

    # Direct scalar flux: w = u . grad(theta) paired against Delta_q^2 theta.
    u_phys = [ws._phys(ws.uc[j]) for j in range(3)]
    grad_theta = [ws._phys(1j * ws.k[j] * ws.tc) for j in range(3)]
    w_theta = ws.dot(u_phys, grad_theta)
    i3 = sum(
        lambda_q(q) ** (2.0 * sigma) * ws.quad(w_theta, ws.proj2_theta_phys(q))
        for q in qs
    )

    i31 = i32 = i33 = 0.0
    i311 = i312 = i313 = 0.0
    for q in qs:
        w = lambda_q(q) ** (2.0 * sigma)
        # Low-high and commutator family over nearby p.
        for p in range(max(-1, q - 2), min(fam.q_max, q + 2) + 1):
            grad_pair = ws.grad_block_pair_phys(q, p)
            vel_p = ws.u_low_phys(p - 2)
            if vel_p is not None:
                g_p = ws.transport(vel_p, ws.grad_theta_block_phys(p))
                term = ws.quad(g_p, ws.proj2_theta_phys(q))
                i31 += w * term
                inner = ws.transport(vel_p, grad_pair)
                i311 += w * (term - ws.quad(inner, ws.theta_phys(q)))
            else:
                inner = None
            # (u_{<=p-2} - u_{<=q-2}) . grad Delta_q theta_p against theta_q.
            vel_q = ws.u_low_phys(q - 2)
            sub = ws.transport(vel_q, grad_pair)
            if inner is not None or sub is not None:
                diff = (inner if inner is not None else 0.0) - (
                    sub if sub is not None else 0.0
                )
                i313 += w * ws.quad(diff, ws.theta_phys(q))
            # High-low part.
            gtl = ws.grad_theta_low_phys(p - 2)
            if gtl is not None:
                h_p = ws.transport(ws.u_block_phys(p), gtl)
                i32 += w * ws.quad(h_p, ws.proj2_theta_phys(q))
        # High-high part over p >= q - 2.
        for p in range(max(-1, q - 2), fam.q_max + 1):
            m_p = ws.transport(ws.u_block_phys(p), ws.grad_theta_tilde_phys(p))
            i33 += w * ws.quad(m_p, ws.proj2_theta_phys(q))
        # Middle commutator term: u_{<=q-2} . grad(theta_q) theta_q.
        vel = ws.u_low_phys(q - 2)
        if vel is not None:
            prod = ws.transport(vel, ws.grad_theta_block_phys(q))
            i312 += w * ws.quad(prod, ws.theta_phys(q))

    return FluxDecomposition(
        i1=i1, i2=i2, i3=i3,
        i31=i31, i32=i32, i33=i33,
        i311=i311, i312=i312, i313=i313,
        s=s, sigma=sigma,
    )


def commutator_piece(
    u: SpectralVectorField, theta: SpectralScalarField, q: int, p: int, sigma: float
) -> float:
    """Single (q, p) contribution to the commutator flux term.

    Weighted by lambda_q^(2*sigma), so summing over all pairs with
    |q - p| <= 2 reproduces the assembled commutator total.
    """
    ws = _FluxWorkspace(u, theta)
    fam = ws.fam
    if not (-1 <= q <= fam.q_max) or not (-1 <= p <= fam.q_max):
        raise IndexError(f"block indices ({q}, {p}) outside [-1, {fam.q_max}]")
    vel = ws.u_low_phys(p - 2)
    if vel is None:
        return 0.0
    w = lambda_q(q) ** (2.0 * sigma)
    g_p = ws.transport(vel, ws.grad_theta_block_phys(p))
    outer = ws.quad(g_p, ws.proj2_theta_phys(q))
    inner = ws.quad(
        ws.transport(vel, ws.grad_block_pair_phys(q, p)), ws.theta_phys(q)
    )
    return w * (outer - inner)


def verify_i312_vanishes(
    u: SpectralVectorField, theta: SpectralScalarField, sigma: float
) -> float:
    """Normalized magnitude of the exactly-cancelling commutator middle term.

    Returns |i312| / (1 + |i3|); at roundoff level for divergence-free u.
    """
    ws = _FluxWorkspace(u, theta)
    fam = ws.fam
    u_phys = [ws._phys(ws.uc[j]) for j in range(3)]
    grad_theta = [ws._phys(1j * ws.k[j] * ws.tc) for j in range(3)]
    w_theta = ws.dot(u_phys, grad_theta)
    i3 = 0.0
    i312 = 0.0
    for q in range(-1, fam.q_max + 1):
        w = lambda_q(q) ** (2.0 * sigma)
        i3 += w * ws.quad(w_theta, ws.proj2_theta_phys(q))
        vel = ws.u_low_phys(q - 2)
        if vel is not None:
            prod = ws.transport(vel, ws.grad_theta_block_phys(q))
            i312 += w * ws.quad(prod, ws.theta_phys(q))
    return abs(i312) / (1.0 + abs(i3))


# ---------------------------------------------------------------------------
# Criterion ledger
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GronwallConfig:
    """User-supplied constants for the growth-bound overlay (diagnostic only)."""

    C: float
    C6: float
    N: int


@dataclass(frozen=True)
class LedgerSettings:
    s: float
    sigma: float
    nu: float
    kappa: float
    c: float = 1.0
    compute_flux: bool = True
    gronwall: GronwallConfig | None = None


@dataclass(frozen=True)
class DiagnosticsRecord:
    """One time sample of every monitored quantity."""

    t: float
    energy_u: float
    energy_theta: float
    hs_u: float
    hsigma_theta: float
    q_status: str
    q_value: int | None
    lambda_value: float | None
    f: float
    besov_full: float
    bkm: float
    i1: float
    i2: float
    i3: float


@dataclass
class CriterionLedger:
    """Append-only time series with running trapezoid integrals."""

    settings: LedgerSettings
    samples: list = field(default_factory=list)
    integral_f: float = 0.0
    integral_bkm: float = 0.0
    gronwall_bound: list = field(default_factory=list)
    _gw_state: tuple | None = None  # (f, forcing) at the previous sample

    def __len__(self) -> int:
        return len(self.samples)


def diagnostics_record(
    t: float,
    u: SpectralVectorField,
    theta: SpectralScalarField,
    settings: LedgerSettings,
) -> DiagnosticsRecord:
    """Compute a full diagnostics sample for one state."""
    vol = VOL
    energy_u = 0.5 * vol * float(np.sum(np.abs(u.coeffs) ** 2))
    energy_theta = 0.5 * vol * float(np.sum(np.abs(theta.coeffs) ** 2))
    hs_u = sobolev_norm(u, settings.s)
    hsigma_theta = sobolev_norm(theta, settings.sigma)
    # One pass over block sup norms feeds the cutoff scan and both Besov sups.
    fam = build_symbols(u.grid)
    sups = _block_sup_norms(u, fam.q_top)
    threshold = settings.c * min(settings.nu, settings.kappa)
    if threshold == 0.0:
        cutoff = DissipationCutoff(status="undefined", threshold=0.0)
    else:
        amps = {p: sups[p] / lambda_q(p) for p in sups}
        cutoff = _cutoff_from_amplitudes(amps, fam.q_max, fam.q_top, threshold)
    besov_full = max(lambda_q(q) * sups[q] for q in range(-1, fam.q_max + 1))
    if cutoff.status == "undefined":
        f_val = float("nan")
    else:
        q_eff = fam.q_max if cutoff.status == "unresolved" else cutoff.q_value
        f_val = max(lambda_q(q) * sups[q] for q in range(-1, q_eff + 1))
    bkm = bkm_integrand(u)
    if settings.compute_flux:
        flux = flux_terms(u, theta, settings.s, settings.sigma)
        i1, i2, i3 = flux.i1, flux.i2, flux.i3
    else:
        i1 = i2 = i3 = float("nan")
    return DiagnosticsRecord(
        t=t,
        energy_u=energy_u,
        energy_theta=energy_theta,
        hs_u=hs_u,
        hsigma_theta=hsigma_theta,
        q_status=cutoff.status,
        q_value=cutoff.q_value,
        lambda_value=cutoff.lambda_value,
        f=f_val,
        besov_full=besov_full,
        bkm=bkm,
        i1=i1,
        i2=i2,
        i3=i3,
    )


def _theta_low_sum(theta: SpectralScalarField, s: float, N: int) -> float:
    """sum_{q <= N} lambda_q^{2s} ||theta_q||_2^2 for the bound overlay."""
    fam = build_symbols(theta.grid)
    energy = np.abs(theta.coeffs) ** 2
    total = 0.0
    for q in range(-1, min(N, fam.q_max) + 1):
        total += lambda_q(q) ** (2.0 * s) * float(np.sum(fam.phi(q) ** 2 * energy))
    return VOL * total


def update_ledger(
    ledger: CriterionLedger,
    t: float,
    u: SpectralVectorField,
    theta: SpectralScalarField,
    settings: LedgerSettings | None = None,
) -> CriterionLedger:
    """Append one sample and advance the running integrals.

    Times must be strictly increasing.  With a configured growth-bound
    overlay, the bound trajectory advances by the trapezoid-discretized
    integrating factor; it is an advisory overlay, never a pass/fail test.
    """
    cfg = settings or ledger.settings
    if ledger.samples and t <= ledger.samples[-1].t:
        raise SequencingError(
            f"sample time {t} not after previous {ledger.samples[-1].t}"
        )
    rec = diagnostics_record(t, u, theta, cfg)
    if ledger.samples:
        prev = ledger.samples[-1]
        dt = t - prev.t
        ledger.integral_f += 0.5 * dt * (prev.f + rec.f)
        ledger.integral_bkm += 0.5 * dt * (prev.bkm + rec.bkm)
    ledger.samples.append(rec)

    if cfg.gronwall is not None:
        gw = cfg.gronwall
        b_now = gw.C6 * _theta_low_sum(theta, cfg.s, gw.N)
        if not ledger.gronwall_bound:
            ledger.gronwall_bound.append(rec.hs_u**2 + rec.hsigma_theta**2)
        else:
            f_prev, b_prev = ledger._gw_state
            dt = t - ledger.samples[-2].t
            growth = math.exp(0.5 * dt * gw.C * ((f_prev + 1.0) + (rec.f + 1.0)))
            bound = ledger.gronwall_bound[-1] * growth + 0.5 * dt * (
                b_prev * growth + b_now
            )
            ledger.gronwall_bound.append(bound)
        ledger._gw_state = (rec.f, b_now)
    return ledger
