"""Spectral fields and calculus on the triply periodic 2*pi box.

Fields are stored as full complex Fourier coefficient cubes in standard
FFT index order, normalized so that f(x) = sum_k c_k exp(i k.x) with
integer wavevectors k.  Real fields are represented by Hermitian-symmetric
coefficients; every operation in this module preserves that symmetry.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import fft as sfft

BOX_LENGTH = 2.0 * np.pi


class GridMismatchError(ValueError):
    """Physical array or coefficient cube does not match the grid."""


def fft_workers() -> int:
    """FFT worker count, capped by the BQLP_THREADS environment variable."""
    try:
        return max(1, int(os.environ.get("BQLP_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class GridSpec:
    """Cubic periodic grid: n points per dimension on [0, 2*pi)^3.

    dealias_fraction sets the componentwise truncation cutoff applied after
    nonlinear products (default 2/3 rule); oversample_factor is the grid
    refinement used when evaluating sup norms of band-limited fields.
    """

    n: int
    dealias_fraction: float = 2.0 / 3.0
    oversample_factor: int = 2

    def __post_init__(self):
        if self.n < 8 or (self.n & (self.n - 1)) != 0:
            raise ValueError(f"grid n must be a power of two >= 8, got {self.n}")
        if not 0.0 < self.dealias_fraction <= 1.0:
            raise ValueError(
                f"dealias_fraction must lie in (0, 1], got {self.dealias_fraction}"
            )
        if int(self.oversample_factor) != self.oversample_factor or self.oversample_factor < 1:
            raise ValueError(
                f"oversample_factor must be an integer >= 1, got {self.oversample_factor}"
            )

    @property
    def box_length(self) -> float:
        return BOX_LENGTH

    @property
    def k_max(self) -> int:
        return self.n // 2

    @property
    def dealias_cutoff(self) -> float:
        return self.dealias_fraction * self.k_max

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n, self.n, self.n)


@lru_cache(maxsize=None)
def wavevectors(n: int) -> np.ndarray:
    """Integer wavevector components, shape (3, n, n, n) in FFT order."""
    k1d = np.fft.fftfreq(n, d=1.0 / n)
    kx, ky, kz = np.meshgrid(k1d, k1d, k1d, indexing="ij")
    out = np.stack([kx, ky, kz])
    out.setflags(write=False)
    return out


@lru_cache(maxsize=None)
def wavenumber_sq(n: int) -> np.ndarray:
    k = wavevectors(n)
    out = k[0] ** 2 + k[1] ** 2 + k[2] ** 2
    out.setflags(write=False)
    return out


@lru_cache(maxsize=None)
def wavenumber_mag(n: int) -> np.ndarray:
    out = np.sqrt(wavenumber_sq(n))
    out.setflags(write=False)
    return out


@lru_cache(maxsize=None)
def _dealias_mask(n: int, fraction: float) -> np.ndarray:
    # Componentwise 2/3-style rule: keep max_i |k_i| <= fraction * (n/2).
    k = wavevectors(n)
    cutoff = fraction * (n // 2)
    mask = (np.abs(k[0]) <= cutoff) & (np.abs(k[1]) <= cutoff) & (np.abs(k[2]) <= cutoff)
    mask.setflags(write=False)
    return mask


@dataclass
class SpectralScalarField:
    """Real scalar field held as Hermitian-symmetric Fourier coefficients."""

    grid: GridSpec
    coeffs: np.ndarray

    def __post_init__(self):
        if self.coeffs.shape != self.grid.shape:
            raise GridMismatchError(
                f"coefficient shape {self.coeffs.shape} != grid {self.grid.shape}"
            )
        if self.coeffs.dtype != np.complex128:
            self.coeffs = self.coeffs.astype(np.complex128)

    def copy(self) -> "SpectralScalarField":
        return SpectralScalarField(self.grid, self.coeffs.copy())

    def __add__(self, other: "SpectralScalarField") -> "SpectralScalarField":
        return SpectralScalarField(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other: "SpectralScalarField") -> "SpectralScalarField":
        return SpectralScalarField(self.grid, self.coeffs - other.coeffs)

    def __mul__(self, scalar: float) -> "SpectralScalarField":
        return SpectralScalarField(self.grid, self.coeffs * scalar)

    __rmul__ = __mul__


@dataclass
class SpectralVectorField:
    """Three scalar components on a shared grid, stored as a (3, n, n, n) cube."""

    grid: GridSpec
    coeffs: np.ndarray

    def __post_init__(self):
        if self.coeffs.shape != (3,) + self.grid.shape:
            raise GridMismatchError(
                f"coefficient shape {self.coeffs.shape} != (3,)+{self.grid.shape}"
            )
        if self.coeffs.dtype != np.complex128:
            self.coeffs = self.coeffs.astype(np.complex128)

    def component(self, j: int) -> SpectralScalarField:
        return SpectralScalarField(self.grid, self.coeffs[j])

    def copy(self) -> "SpectralVectorField":
        return SpectralVectorField(self.grid, self.coeffs.copy())

    def __add__(self, other: "SpectralVectorField") -> "SpectralVectorField":
        return SpectralVectorField(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other: "SpectralVectorField") -> "SpectralVectorField":
        return SpectralVectorField(self.grid, self.coeffs - other.coeffs)

    def __mul__(self, scalar: float) -> "SpectralVectorField":
        return SpectralVectorField(self.grid, self.coeffs * scalar)

    __rmul__ = __mul__


Field = SpectralScalarField | SpectralVectorField


def zeros_scalar(grid: GridSpec) -> SpectralScalarField:
    return SpectralScalarField(grid, np.zeros(grid.shape, dtype=np.complex128))


def zeros_vector(grid: GridSpec) -> SpectralVectorField:
    return SpectralVectorField(grid, np.zeros((3,) + grid.shape, dtype=np.complex128))


# ---------------------------------------------------------------------------
# Transforms
# ---------------------------------------------------------------------------

def fft_coeffs(physical: np.ndarray) -> np.ndarray:
    """Forward DFT of a real sample cube to Fourier coefficients."""
    return sfft.fftn(physical, norm="forward", workers=fft_workers())


def ifft_samples(coeffs: np.ndarray) -> np.ndarray:
    """Inverse DFT of a coefficient cube; returns complex samples."""
    return sfft.ifftn(coeffs, norm="forward", workers=fft_workers())


def forward_transform(grid: GridSpec, physical: np.ndarray) -> SpectralScalarField:
    """Transform real grid samples to a spectral field.

    Parseval holds exactly in this normalization:
    (2*pi/n)^3 * sum |f(x)|^2 == (2*pi)^3 * sum |c_k|^2.
    """
    physical = np.asarray(physical)
    if physical.shape != grid.shape:
        raise GridMismatchError(
            f"physical shape {physical.shape} does not match grid {grid.shape}"
        )
    return SpectralScalarField(grid, fft_coeffs(np.asarray(physical, dtype=np.float64)))


def _pad_axis(c: np.ndarray, axis: int, n: int, m: int) -> np.ndarray:
    """Zero-pad one axis of a coefficient cube from n to m slots.

    The Nyquist plane (k = -n/2, stored at index n/2) is split half-and-half
    between the +n/2 and -n/2 slots of the target so the padded spectrum
    stays Hermitian and the trigonometric interpolant stays real.
    """
    if m == n:
        return c
    shape = list(c.shape)
    shape[axis] = m
    out = np.zeros(shape, dtype=c.dtype)
    src = np.moveaxis(c, axis, 0)
    dst = np.moveaxis(out, axis, 0)
    half = n // 2
    dst[:half] = src[:half]
    dst[m - half + 1:] = src[half + 1:]
    dst[half] += 0.5 * src[half]
    dst[m - half] += 0.5 * src[half]
    return out


def pad_spectrum(coeffs: np.ndarray, n: int, m: int) -> np.ndarray:
    """Embed an n^3 coefficient cube into an m^3 cube (m >= n)."""
    out = coeffs
    for axis in range(3):
        out = _pad_axis(out, axis, n, m)
    return out


def inverse_transform(f: SpectralScalarField, oversample: int = 1) -> np.ndarray:
    """Evaluate the field on an (oversample*n)^3 physical grid.

    Uses zero-padded inverse FFT; the imaginary residue of a Hermitian
    field is at roundoff level and is discarded.
    """
    if oversample < 1:
        raise ValueError(f"oversample must be >= 1, got {oversample}")
    n = f.grid.n
    m = oversample * n
    return ifft_samples(pad_spectrum(f.coeffs, n, m)).real


# ---------------------------------------------------------------------------
# Calculus operators
# ---------------------------------------------------------------------------

def gradient(f: SpectralScalarField) -> SpectralVectorField:
    """Spectral gradient: component j carries i*k_j*c_k."""
    k = wavevectors(f.grid.n)
    return SpectralVectorField(f.grid, 1j * k * f.coeffs[np.newaxis])


def divergence(v: SpectralVectorField) -> SpectralScalarField:
    k = wavevectors(v.grid.n)
    out = 1j * (k[0] * v.coeffs[0] + k[1] * v.coeffs[1] + k[2] * v.coeffs[2])
    return SpectralScalarField(v.grid, out)


def curl(v: SpectralVectorField) -> SpectralVectorField:
    k = wavevectors(v.grid.n)
    c = v.coeffs
    out = np.empty_like(c)
    out[0] = 1j * (k[1] * c[2] - k[2] * c[1])
    out[1] = 1j * (k[2] * c[0] - k[0] * c[2])
    out[2] = 1j * (k[0] * c[1] - k[1] * c[0])
    return SpectralVectorField(v.grid, out)


def laplacian(f: SpectralScalarField) -> SpectralScalarField:
    return SpectralScalarField(f.grid, -wavenumber_sq(f.grid.n) * f.coeffs)


def leray_project(v: SpectralVectorField) -> SpectralVectorField:
    """Remove the gradient part: v_hat -> v_hat - k (k.v_hat) / |k|^2.

    The k = 0 mode has no gradient part and passes through unchanged.
    """
    return SpectralVectorField(v.grid, _leray_coeffs(v.coeffs, v.grid.n))


def _leray_coeffs(c: np.ndarray, n: int) -> np.ndarray:
    k = wavevectors(n)
    ksq = wavenumber_sq(n).copy()
    ksq[0, 0, 0] = 1.0  # guard; numerator is zero at k = 0 anyway
    kdotv = (k[0] * c[0] + k[1] * c[1] + k[2] * c[2]) / ksq
    return c - k * kdotv[np.newaxis]


def dealias(f: Field) -> Field:
    """Zero all coefficients with max_i |k_i| above the grid's cutoff."""
    mask = _dealias_mask(f.grid.n, f.grid.dealias_fraction)
    return type(f)(f.grid, f.coeffs * mask)


# ---------------------------------------------------------------------------
# Norms, pairings, diagnostics of the representation
# ---------------------------------------------------------------------------

def l2_norm(f: Field) -> float:
    """True L^2 norm over the box: sqrt((2*pi)^3 * sum |c_k|^2)."""
    return float(np.sqrt(BOX_LENGTH**3 * np.sum(np.abs(f.coeffs) ** 2)))


def inner_product(f: Field, g: Field) -> float:
    """L^2 inner product of two real fields (spectral Parseval pairing)."""
    return float(BOX_LENGTH**3 * np.real(np.sum(f.coeffs * np.conj(g.coeffs))))


def linf_norm(f: Field, oversample: int | None = None) -> float:
    """Sup norm estimated on the oversampled physical grid.

    Scalars use max |f|; vectors use the max Euclidean magnitude.  The
    default oversample factor comes from the grid.
    """
    o = f.grid.oversample_factor if oversample is None else oversample
    if not np.any(f.coeffs):
        return 0.0
    if isinstance(f, SpectralScalarField):
        return float(np.max(np.abs(inverse_transform(f, o))))
    mag_sq = sum(
        inverse_transform(f.component(j), o) ** 2 for j in range(3)
    )
    return float(np.sqrt(np.max(mag_sq)))


def hermitian_residual(f: Field) -> float:
    """Max |c(k) - conj(c(-k))| relative to the coefficient scale."""
    c = f.coeffs
    axes = tuple(range(c.ndim - 3, c.ndim))
    reflected = np.conj(np.roll(np.flip(c, axis=axes), shift=1, axis=axes))
    scale = float(np.max(np.abs(c)))
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(c - reflected)) / scale)


def divergence_residual(v: SpectralVectorField) -> float:
    """Max |k.v_hat| / |v_hat| over resolved modes; 0 for the zero field."""
    k = wavevectors(v.grid.n)
    kdotv = np.abs(k[0] * v.coeffs[0] + k[1] * v.coeffs[1] + k[2] * v.coeffs[2])
    vmag = np.sqrt(np.sum(np.abs(v.coeffs) ** 2, axis=0))
    scale = float(np.max(vmag))
    if scale == 0.0:
        return 0.0
    return float(np.max(kdotv) / scale)
