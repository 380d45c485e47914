"""Periodic grids, sampled fields, spectral calculus and weighted norms.

The box [-L, L)^d is sampled at N points per axis, x_j = -L + j h with
h = 2L/N.  Transforms use the angular convention (kernel e^{-i xi x}), so
the lattice frequencies are xi_k = pi k / L and the symbol of the
Laplacian is -|xi|^2.
"""

from __future__ import annotations

import math
import os
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.fft as sfft

from .errors import DomainError, TruncationError


def fft_workers() -> int:
    """Thread count for FFTs, capped by WAVEHOLTZ_THREADS (default 1)."""
    try:
        return max(1, int(os.environ.get("WAVEHOLTZ_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class Grid:
    dim: int
    half_width: float
    points_per_dim: int

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise DomainError(f"dim must be 1, 2 or 3, got {self.dim}")
        if self.points_per_dim < 4 or self.points_per_dim % 2:
            raise DomainError(f"points_per_dim must be even and >= 4, got {self.points_per_dim}")
        if not self.half_width > 0:
            raise DomainError("half_width must be positive")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / self.points_per_dim

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.points_per_dim,) * self.dim

    @property
    def freq_spacing(self) -> float:
        return math.pi / self.half_width

    def axis(self) -> np.ndarray:
        return -self.half_width + self.spacing * np.arange(self.points_per_dim)

    def coords(self) -> tuple[np.ndarray, ...]:
        ax = self.axis()
        if self.dim == 1:
            return (ax,)
        return tuple(np.meshgrid(*([ax] * self.dim), indexing="ij"))

    def radius(self) -> np.ndarray:
        return np.sqrt(sum(c**2 for c in self.coords()))

    def wavenumbers(self, half: bool = False) -> tuple[np.ndarray, ...]:
        """Per-axis angular wavenumbers, broadcastable to the spectrum shape.

        With ``half=True`` the last axis matches ``rfftn`` output.
        """
        n, h = self.points_per_dim, self.spacing
        full = 2.0 * math.pi * sfft.fftfreq(n, h)
        last = 2.0 * math.pi * sfft.rfftfreq(n, h) if half else full
        out = []
        for ax in range(self.dim):
            k = last if ax == self.dim - 1 else full
            shape = [1] * self.dim
            shape[ax] = k.size
            out.append(k.reshape(shape))
        return tuple(out)

    def kmag(self, half: bool = False) -> np.ndarray:
        ks = self.wavenumbers(half)
        return np.sqrt(sum(k**2 for k in ks))

    def shell_gap(self, omega: float) -> float:
        """min over the lattice of ||xi| - omega|."""
        return float(np.min(np.abs(self.kmag(half=True) - omega)))


def shell_avoiding_grid(dim: int, omega: float, min_half_width: float, max_spacing: float) -> Grid:
    """Grid whose half-width puts omega midway between lattice frequencies.

    L = pi (m + 1/2) / omega, so in one dimension the nearest lattice
    frequency sits exactly half a frequency step from the shell.
    """
    m = max(0, math.ceil(omega * min_half_width / math.pi - 0.5))
    L = math.pi * (m + 0.5) / omega
    n = math.ceil(2.0 * L / max_spacing)
    n = sfft.next_fast_len(n + (n % 2))
    while n % 2:
        n = sfft.next_fast_len(n + 1)
    return Grid(dim, L, max(n, 4))


@dataclass(frozen=True, eq=False)
class Field:
    grid: Grid
    values: np.ndarray
    is_real: bool = True

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.shape != self.grid.shape:
            raise DomainError(f"values shape {v.shape} does not match grid {self.grid.shape}")
        if self.is_real and np.iscomplexobj(v):
            scale = float(np.max(np.abs(v))) if v.size else 0.0
            if float(np.max(np.abs(v.imag))) > 1e-13 * scale:
                raise DomainError("field flagged real has a significant imaginary part")
            v = v.real
        v = np.array(v, dtype=float if self.is_real else complex)
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @classmethod
    def zeros(cls, grid: Grid, is_real: bool = True) -> "Field":
        return cls(grid, np.zeros(grid.shape), is_real)

    def _check(self, other: "Field"):
        if other.grid != self.grid:
            raise DomainError("fields live on different grids")

    def __add__(self, other):
        self._check(other)
        return Field(self.grid, self.values + other.values, self.is_real and other.is_real)

    def __sub__(self, other):
        self._check(other)
        return Field(self.grid, self.values - other.values, self.is_real and other.is_real)

    def __neg__(self):
        return Field(self.grid, -self.values, self.is_real)

    def __mul__(self, c):
        c = complex(c) if isinstance(c, complex) else float(c)
        return Field(self.grid, self.values * c, self.is_real and isinstance(c, float))

    __rmul__ = __mul__

    @property
    def real(self) -> "Field":
        return Field(self.grid, np.real(self.values), True)

    @property
    def imag(self) -> "Field":
        return Field(self.grid, np.imag(self.values), True)

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))


@dataclass(frozen=True)
class Spectrum:
    grid: Grid
    coeffs: np.ndarray


def dft_forward(field: Field) -> Spectrum:
    """Unitary forward DFT; real input gives exactly Hermitian coefficients."""
    axes = tuple(range(field.grid.dim))
    coeffs = sfft.fftn(field.values, axes=axes, norm="ortho", workers=fft_workers())
    if field.is_real:
        # c = (c + conj(c[-k])) / 2 is Hermitian bit for bit
        rev = (-np.arange(field.grid.points_per_dim)) % field.grid.points_per_dim
        mirror = coeffs
        for ax in axes:
            mirror = np.take(mirror, rev, axis=ax)
        coeffs = 0.5 * (coeffs + np.conj(mirror))
    return Spectrum(field.grid, coeffs)


def dft_inverse(spec: Spectrum, real: bool = False) -> Field:
    if spec.coeffs.shape != spec.grid.shape:
        raise DomainError("spectrum shape does not match its grid")
    axes = tuple(range(spec.grid.dim))
    v = sfft.ifftn(spec.coeffs, axes=axes, norm="ortho", workers=fft_workers())
    return Field(spec.grid, v.real if real else v, real)


def apply_multiplier(field: Field, mult) -> Field:
    """Multiply every Fourier mode by ``mult(|xi|)``.

    ``mult`` is a callable of |xi| (or an array of matching shape).  A real
    multiplier maps real fields to real fields via the half-spectrum path.
    """
    g = field.grid
    axes = tuple(range(g.dim))
    w = fft_workers()
    if field.is_real:
        m = mult(g.kmag(half=True)) if callable(mult) else mult
        if np.iscomplexobj(m):
            return apply_multiplier(Field(g, field.values.astype(complex), False), mult)
        half = sfft.rfftn(field.values, axes=axes, workers=w)
        out = sfft.irfftn(half * m, s=g.shape, axes=axes, workers=w)
        return Field(g, out, True)
    m = mult(g.kmag()) if callable(mult) else mult
    out = sfft.ifftn(sfft.fftn(field.values, axes=axes, workers=w) * m, axes=axes, workers=w)
    return Field(g, out, False)


def laplacian(field: Field) -> Field:
    return apply_multiplier(field, lambda k: -(k**2))


def gradient(field: Field) -> list[Field]:
    """Spectral partial derivatives; the Nyquist mode is dropped."""
    g = field.grid
    axes = tuple(range(g.dim))
    w = fft_workers()
    n = g.points_per_dim
    spec = sfft.fftn(field.values, axes=axes, workers=w)
    out = []
    for ax, k in enumerate(g.wavenumbers()):
        k = k.copy()
        idx = [0] * g.dim
        idx[ax] = n // 2
        k[tuple(idx)] = 0.0
        d = sfft.ifftn(1j * k * spec, axes=axes, workers=w)
        out.append(Field(g, d.real if field.is_real else d, field.is_real))
    return out


# ---------------------------------------------------------------------------
# weighted norms

@dataclass(frozen=True)
class NormSpec:
    """Weighted Sobolev norm with weight <x>^s and derivatives up to order k."""

    weight_exponent: float
    derivative_order: int = 0

    def __post_init__(self):
        if self.derivative_order not in (0, 1):
            raise DomainError("derivative_order must be 0 or 1")


def bracket(grid: Grid) -> np.ndarray:
    """<x> = (1 + |x|^2)^(1/2) on the grid."""
    return np.sqrt(1.0 + grid.radius() ** 2)


def weighted_norm(field: Field, spec: NormSpec, mask=None) -> float:
    """(sum_{|a|<=k} ||d^a v <x>^s||^2_{L2(box)})^(1/2) by the trapezoidal rule.

    ``mask`` restricts the quadrature to a boolean region of the box.
    """
    g = field.grid
    wgt = bracket(g) ** (2.0 * spec.weight_exponent) * g.spacing**g.dim
    if mask is not None:
        wgt = np.where(mask, wgt, 0.0)
    parts = [field] + (gradient(field) if spec.derivative_order == 1 else [])
    total = sum(float(np.sum(np.abs(p.values) ** 2 * wgt)) for p in parts)
    return math.sqrt(total)


# ---------------------------------------------------------------------------
# sources

@dataclass(frozen=True)
class GaussianProfile:
    """S(x) = amplitude * exp(-|x|^2 / width^2)."""

    width: float = 1.0
    amplitude: float = 1.0

    def __call__(self, r):
        return self.amplitude * np.exp(-(np.asarray(r) / self.width) ** 2)

    def l2_norm(self, dim: int) -> float:
        return abs(self.amplitude) * (math.pi / 2.0) ** (dim / 4.0) * self.width ** (dim / 2.0)


_TAIL = 1e-14


def gaussian_source(grid: Grid, center=None, width: float = 1.0, amplitude: float = 1.0) -> Field:
    """A exp(-|x - c|^2 / sigma^2) sampled on the grid.

    Raises TruncationError if the relative value at the nearest box face
    exceeds 1e-14.
    """
    if not width > 0:
        raise DomainError("width must be positive")
    c = np.zeros(grid.dim) if center is None else np.broadcast_to(np.asarray(center, float), (grid.dim,))
    reach = grid.half_width - float(np.max(np.abs(c)))
    if reach <= 0 or math.exp(-(reach / width) ** 2) > _TAIL:
        raise TruncationError(
            f"Gaussian of width {width} centred at {c.tolist()} is not below {_TAIL:g} "
            f"at the box boundary (half-width {grid.half_width})")
    r2 = sum((x - ci) ** 2 for x, ci in zip(grid.coords(), c))
    return Field(grid, amplitude * np.exp(-r2 / width**2), True)


def scaled_source_bound(profile: GaussianProfile) -> float:
    """Largest admissible h * omega for a scaled Gaussian source.

    Enforces both 10 points per wavelength and a spectrum below 1e-16 at the
    Nyquist frequency.
    """
    k_cut = 2.0 * math.sqrt(math.log(1e16))
    return min(0.2 * math.pi, math.pi * profile.width / k_cut)


def scaled_source(profile: GaussianProfile, omega: float, grid: Grid) -> Field:
    """f(x) = omega^((3+d)/2) S(omega x): a source concentrating at the origin."""
    bound = scaled_source_bound(profile)
    if grid.spacing * omega > bound:
        need = math.ceil(2.0 * grid.half_width * omega / bound)
        need += need % 2
        raise DomainError(
            f"grid under-resolves omega={omega}: h*omega={grid.spacing * omega:.4g} > {bound:.4g}; "
            f"need points_per_dim >= {need}")
    width = profile.width / omega
    amp = omega ** ((3 + grid.dim) / 2.0) * profile.amplitude
    return gaussian_source(grid, None, width, amp)


# ---------------------------------------------------------------------------
# serialization

_MAGIC = b"WHFD"
_HEADER = struct.Struct("<4sIIdI")


def write_field(path, field: Field) -> None:
    """Flat binary layout: header (magic, d, N, L, complex flag), then
    row-major float64 payload; complex values are stored as (re, im) pairs."""
    g = field.grid
    payload = field.values if field.is_real else np.stack([field.values.real, field.values.imag], -1)
    data = _HEADER.pack(_MAGIC, g.dim, g.points_per_dim, g.half_width, 0 if field.is_real else 1)
    _atomic_write(path, data + np.ascontiguousarray(payload, dtype="<f8").tobytes())


def read_field(path) -> Field:
    raw = Path(path).read_bytes()
    magic, d, n, L, cplx = _HEADER.unpack_from(raw)
    if magic != _MAGIC:
        raise DomainError(f"{path}: not a field file")
    grid = Grid(d, L, n)
    arr = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    if cplx:
        arr = arr.reshape(grid.shape + (2,))
        return Field(grid, arr[..., 0] + 1j * arr[..., 1], False)
    return Field(grid, arr.reshape(grid.shape).copy(), True)


def write_field_csv(path, field: Field) -> None:
    if field.grid.dim != 1:
        raise DomainError("CSV export is only defined for d = 1")
    x = field.grid.axis()
    lines = ["x,re,im"]
    for xi, v in zip(x, field.values):
        v = complex(v)
        lines.append(f"{xi:.17g},{v.real:.17g},{v.imag:.17g}")
    _atomic_write(path, ("\n".join(lines) + "\n").encode())


def read_field_csv(path, half_width: float, is_real: bool = False) -> Field:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    grid = Grid(1, half_width, data.shape[0])
    vals = data[:, 1] if is_real else data[:, 1] + 1j * data[:, 2]
    return Field(grid, vals, is_real)


def _atomic_write(path, data: bytes) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)
