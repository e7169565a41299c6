"""Dyadic frequency decomposition and the norms built from it.

A smooth radial profile psi (identically 1 inside radius 3/4, identically 0
outside radius 1) generates band multipliers phi_q supported on dyadic
annuli around lambda_q = 2^q.  Band projections, low-mode truncations,
Sobolev-type and Besov-type norms are all Fourier multipliers tabulated on
the grid's wavenumber magnitudes, so partition-of-unity and reconstruction
identities hold to machine precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .spectral import (
    Field,
    GridSpec,
    SpectralScalarField,
    SpectralVectorField,
    linf_norm,
    wavenumber_mag,
)


class BlockIndexError(IndexError):
    """Requested dyadic block lies outside the family."""


def lambda_q(q: int) -> float:
    """Dyadic wavenumber 2^q (q = -1 gives 1/2)."""
    return 2.0**q


def smooth_step(x: np.ndarray) -> np.ndarray:
    """C-infinity step: 0 for x <= 0, 1 for x >= 1, strictly increasing between."""
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros(x.shape)
    out[x >= 1.0] = 1.0
    mid = (x > 0.0) & (x < 1.0)
    xm = x[mid]
    # g(x) = exp(-1/x) glue; both exponentials are finite on (0, 1)
    g = np.exp(-1.0 / xm)
    gc = np.exp(-1.0 / (1.0 - xm))
    out[mid] = g / (g + gc)
    return out


def psi_profile(xi) -> np.ndarray:
    """Radial cutoff: 1 for |xi| <= 3/4, 0 for |xi| >= 1, smooth monotone between."""
    xi = np.abs(np.asarray(xi, dtype=np.float64))
    scalar = xi.ndim == 0
    xi = np.atleast_1d(xi)
    out = np.ones(xi.shape)
    hi = xi >= 1.0
    mid = (xi > 0.75) & (xi < 1.0)
    out[hi] = 0.0
    out[mid] = smooth_step((1.0 - xi[mid]) * 4.0)
    return float(out[0]) if scalar else out


def phi_profile(xi, q: int) -> np.ndarray:
    """Band multiplier at block q: psi(xi/2^(q+1)) - psi(xi/2^q); psi itself at q = -1."""
    if q == -1:
        return psi_profile(xi)
    xi = np.asarray(xi, dtype=np.float64)
    return psi_profile(xi / lambda_q(q + 1)) - psi_profile(xi / lambda_q(q))


@dataclass(frozen=True)
class DyadicSymbolFamily:
    """Tabulated band multipliers on one grid.

    q_max is the top block whose annulus fits inside the dealias cutoff;
    decompositions and norms run over q = -1 .. q_max.  Blocks up to
    q_top have some support on the grid and are tabulated for scan-style
    diagnostics, but they are truncated by the grid and never enter norms.
    """

    grid: GridSpec
    q_max: int
    q_top: int
    _tables: tuple[np.ndarray, ...]

    def phi(self, q: int) -> np.ndarray:
        if q < -1 or q > self.q_top:
            raise BlockIndexError(f"block {q} outside tabulated range [-1, {self.q_top}]")
        return self._tables[q + 1]

    def low_multiplier(self, Q: int) -> np.ndarray:
        """Multiplier for modes up to block Q: psi(|k| / 2^(Q+1))."""
        if Q < -1:
            raise BlockIndexError(f"low-mode index must be >= -1, got {Q}")
        return psi_profile(wavenumber_mag(self.grid.n) / lambda_q(Q + 1))

    @property
    def coverage_radius(self) -> float:
        """Largest |k| where the q = -1 .. q_max multipliers sum exactly to 1."""
        return 0.75 * lambda_q(self.q_max + 1)


@lru_cache(maxsize=None)
def build_symbols(grid: GridSpec) -> DyadicSymbolFamily:
    """Construct (and cache) the dyadic multiplier family for a grid."""
    kmag = wavenumber_mag(grid.n)
    q_max = int(math.floor(math.log2(grid.dealias_cutoff))) - 1
    # Highest block with any support on the grid: phi_q vanishes below
    # (3/4) * 2^q, so it needs (3/4) * 2^q < max |k| on the grid.
    kmag_top = math.sqrt(3.0) * (grid.n // 2)
    q_top = q_max
    while 0.75 * lambda_q(q_top + 1) < kmag_top:
        q_top += 1
    tables = []
    for q in range(-1, q_top + 1):
        tab = phi_profile(kmag, q)
        tab.setflags(write=False)
        tables.append(tab)
    return DyadicSymbolFamily(grid, q_max, q_top, tuple(tables))


@dataclass
class LPBlockSet:
    """Dyadic blocks q = -1 .. q_max of one field; their sum reconstructs it."""

    family: DyadicSymbolFamily
    blocks: list

    def block(self, q: int) -> Field:
        if q < -1 or q > self.family.q_max:
            raise BlockIndexError(f"block {q} outside [-1, {self.family.q_max}]")
        return self.blocks[q + 1]

    @property
    def q_range(self) -> range:
        return range(-1, self.family.q_max + 1)


def _apply_multiplier(f: Field, mult: np.ndarray) -> Field:
    if isinstance(f, SpectralVectorField):
        return SpectralVectorField(f.grid, f.coeffs * mult[np.newaxis])
    return SpectralScalarField(f.grid, f.coeffs * mult)


def project_block(f: Field, q: int) -> Field:
    """Band projection of a field onto dyadic block q."""
    fam = build_symbols(f.grid)
    if q < -1 or q > fam.q_max:
        raise BlockIndexError(f"block {q} outside [-1, {fam.q_max}]")
    return _apply_multiplier(f, fam.phi(q))


def decompose(f: Field) -> LPBlockSet:
    fam = build_symbols(f.grid)
    blocks = [_apply_multiplier(f, fam.phi(q)) for q in range(-1, fam.q_max + 1)]
    return LPBlockSet(fam, blocks)


def low_modes(f: Field, Q: int) -> Field:
    """Sum of blocks up to Q, applied as the telescoped multiplier psi(|k|/2^(Q+1))."""
    if Q < -1:
        raise BlockIndexError(f"low-mode index must be >= -1, got {Q}")
    fam = build_symbols(f.grid)
    return _apply_multiplier(f, fam.low_multiplier(Q))


def tilde_block(blocks: LPBlockSet, q: int) -> Field:
    """Sum of blocks q-1, q, q+1; neighbors outside the family count as zero."""
    fam = blocks.family
    if q < -1 or q > fam.q_max:
        raise BlockIndexError(f"block {q} outside [-1, {fam.q_max}]")
    out = blocks.block(q).copy()
    if q - 1 >= -1:
        out = out + blocks.block(q - 1)
    if q + 1 <= fam.q_max:
        out = out + blocks.block(q + 1)
    return out


def sobolev_norm(f: Field, s: float) -> float:
    """Dyadic-sum homogeneous Sobolev norm of order s.

    Block L^2 norms are read off the multiplier tables directly; the sum is
    truncated at the family's q_max, which is exact for fields supported
    inside the coverage radius.
    """
    fam = build_symbols(f.grid)
    energy = np.abs(f.coeffs) ** 2
    if isinstance(f, SpectralVectorField):
        energy = energy.sum(axis=0)
    total = 0.0
    for q in range(-1, fam.q_max + 1):
        block_sq = float(np.sum(fam.phi(q) ** 2 * energy))
        total += lambda_q(q) ** (2.0 * s) * block_sq
    return float(np.sqrt((2.0 * np.pi) ** 3 * total))


def besov_b1_inf_inf(f: Field) -> float:
    """sup over blocks of lambda_q times the block sup norm."""
    fam = build_symbols(f.grid)
    return besov_low_modes(f, fam.q_max)


def besov_low_modes(f: Field, Q: int) -> float:
    """Same sup restricted to blocks q <= Q (never exceeds the full norm)."""
    if Q < -1:
        raise BlockIndexError(f"low-mode index must be >= -1, got {Q}")
    fam = build_symbols(f.grid)
    top = min(Q, fam.q_max)
    best = 0.0
    for q in range(-1, top + 1):
        block = _apply_multiplier(f, fam.phi(q))
        best = max(best, lambda_q(q) * linf_norm(block))
    return best


def block_l2_norms(f: Field) -> dict[int, float]:
    """L^2 norm of every block in the family, keyed by q."""
    fam = build_symbols(f.grid)
    energy = np.abs(f.coeffs) ** 2
    if isinstance(f, SpectralVectorField):
        energy = energy.sum(axis=0)
    out = {}
    for q in range(-1, fam.q_max + 1):
        out[q] = float(np.sqrt((2.0 * np.pi) ** 3 * np.sum(fam.phi(q) ** 2 * energy)))
    return out
