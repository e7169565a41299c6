"""Shared fixtures and independent oracles for the test suite."""

import numpy as np
import pytest

from bqlp import spectral as sp
from bqlp import dyadic as dy


@pytest.fixture
def grid16():
    return sp.GridSpec(16)


@pytest.fixture
def grid32():
    return sp.GridSpec(32)


# ---------------------------------------------------------------------------
# Field factories
# ---------------------------------------------------------------------------

def random_scalar(grid, kmax, seed, zero_mean=True):
    """Random real scalar field with spectrum confined to |k| <= kmax."""
    rng = np.random.default_rng(seed)
    c = sp.fft_coeffs(rng.standard_normal(grid.shape))
    c *= sp.wavenumber_mag(grid.n) <= kmax
    if zero_mean:
        c[0, 0, 0] = 0.0
    return sp.SpectralScalarField(grid, c)


def random_solenoidal(grid, kmax, seed, mean_flow=0.0):
    """Random divergence-free vector field confined to |k| <= kmax.

    mean_flow adds a random constant velocity (exactly solenoidal), which
    populates the lowest dyadic block.
    """
    rng = np.random.default_rng(seed)
    c = np.stack([sp.fft_coeffs(rng.standard_normal(grid.shape)) for _ in range(3)])
    c *= sp.wavenumber_mag(grid.n) <= kmax
    c = sp._leray_coeffs(c, grid.n)
    c[:, 0, 0, 0] = mean_flow * rng.standard_normal(3)
    return sp.SpectralVectorField(grid, c)


def coverage_scalar(grid, seed, **kw):
    """Random scalar supported inside the dyadic family's coverage radius."""
    fam = dy.build_symbols(grid)
    return random_scalar(grid, fam.coverage_radius, seed, **kw)


def coverage_solenoidal(grid, seed, **kw):
    fam = dy.build_symbols(grid)
    return random_solenoidal(grid, fam.coverage_radius, seed, **kw)


def field_from_modes(grid, modes):
    """Build a scalar field from a {wavevector: coefficient} dict.

    The dict must already be Hermitian (contain conjugate pairs).
    """
    c = np.zeros(grid.shape, dtype=np.complex128)
    for k, v in modes.items():
        idx = tuple(np.mod(k, grid.n))
        c[idx] += v
    return sp.SpectralScalarField(grid, c)


def cosine_scalar(grid, k, amplitude=1.0):
    """amplitude * cos(k . x) as a two-mode spectral field."""
    k = tuple(int(v) for v in k)
    mk = tuple(-v for v in k)
    return field_from_modes(grid, {k: amplitude / 2.0, mk: amplitude / 2.0})


# ---------------------------------------------------------------------------
# Oracles
# ---------------------------------------------------------------------------

def convolve_modes(a: dict, b: dict) -> dict:
    """Exact convolution of two sparse mode dictionaries."""
    out = {}
    for ka, va in a.items():
        for kb, vb in b.items():
            key = tuple(x + y for x, y in zip(ka, kb))
            out[key] = out.get(key, 0.0) + va * vb
    return {k: v for k, v in out.items() if abs(v) > 0}


def modes_of(field, tol=1e-13) -> dict:
    """Sparse mode dict of a spectral field (for comparison with oracles)."""
    n = field.grid.n
    out = {}
    idx = np.argwhere(np.abs(field.coeffs) > tol)
    for i in idx:
        k = tuple(int(v) if v <= n // 2 else int(v) - n for v in i)
        out[k] = complex(field.coeffs[tuple(i)])
    return out


def trapezoid(t, y):
    total = 0.0
    for i in range(1, len(t)):
        total += 0.5 * (t[i] - t[i - 1]) * (y[i] + y[i - 1])
    return total
