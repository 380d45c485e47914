"""Reference solutions of Delta u + omega^2 u = f.

``solve_outgoing`` realises the limiting-absorption limit: damped solves
with z = omega^2 + i alpha omega on a zero-padded box, Richardson
extrapolated to alpha = 0.  ``pv_real`` divides by the real symbol and,
on a grid whose lattice straddles the resonant shell, reproduces Re u.
``green_convolve`` is a quadrature oracle that is independent of both.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import ConvergenceError, DomainError, TruncationError
from .fields import Field, Grid, NormSpec, apply_multiplier, laplacian, weighted_norm

METHODS = ("lap_extrapolated", "green_d1", "green_d3", "pv_real")
REFERENCE_NORM = NormSpec(-2.0, 0)

#: damped Green's functions decay like exp(-alpha |x| / 2); padding of
#: PAD_DECAY / alpha_min keeps wrap-around below roundoff
PAD_DECAY = 23.0
SHELL_GAP = 0.3


@dataclass(frozen=True)
class AlphaSchedule:
    """alpha_k = alpha0 * 2^-k for k = 0..levels."""

    alpha0: float = 0.02
    levels: int = 2

    def __post_init__(self):
        if not self.alpha0 > 0:
            raise DomainError("alpha0 must be positive")
        if self.levels < 2:
            raise DomainError("three-point extrapolation needs levels >= 2")

    @property
    def alphas(self) -> list[float]:
        return [self.alpha0 * 2.0**-k for k in range(self.levels + 1)]


@dataclass(frozen=True, eq=False)
class OutgoingSolution:
    field: Field
    omega: float
    method: str
    alpha_schedule: tuple = ()
    residual: float = 0.0
    diagnostics: dict = field(default_factory=dict)


def solve_damped(f: Field, omega: float, alpha: float) -> Field:
    """u_hat = f_hat / (omega^2 - |xi|^2 + i alpha omega)."""
    if not alpha > 0:
        raise DomainError(f"damping alpha must be positive, got {alpha}")
    return apply_multiplier(f, lambda k: 1.0 / (omega**2 - k**2 + 1j * alpha * omega))


def damped_residual(u: Field, f: Field, omega: float, alpha: float) -> float:
    """max|Delta u + (omega^2 + i alpha omega) u - f| / max|f|, spectral Laplacian."""
    r = laplacian(u).values + (omega**2 + 1j * alpha * omega) * u.values - f.values
    scale = max(f.max_abs(), 1e-300)
    return float(np.max(np.abs(r))) / scale


def _padded(f: Field, pad: int) -> Field:
    g = f.grid
    big = Grid(g.dim, pad * g.half_width, pad * g.points_per_dim)
    off = (pad - 1) * g.points_per_dim // 2
    vals = np.zeros(big.shape, dtype=f.values.dtype)
    vals[(slice(off, off + g.points_per_dim),) * g.dim] = f.values
    return Field(big, vals, f.is_real)


def _restrict(u: Field, grid: Grid, pad: int) -> Field:
    off = (pad - 1) * grid.points_per_dim // 2
    return Field(grid, u.values[(slice(off, off + grid.points_per_dim),) * grid.dim], u.is_real)


def required_pad(grid: Grid, alpha_min: float) -> int:
    return max(1, math.ceil((grid.half_width + PAD_DECAY / alpha_min) / grid.half_width))


def solve_outgoing(f: Field, omega: float, schedule: AlphaSchedule | None = None,
                   pad: int | None = None) -> OutgoingSolution:
    """Outgoing solution by damped solves extrapolated to alpha = 0.

    Each damped solve runs on a box ``pad`` times larger with the same
    spacing, then is restricted to the original grid.  The error table is
    a Neville scheme for ratio-2 steps; the reported residual is the
    difference of the last two extrapolants in the L2_{-2} norm.

    Raises
    ------
    ConvergenceError
        If successive damped solutions do not approach each other.
    """
    schedule = schedule or AlphaSchedule()
    if schedule.alpha0 > omega / 4:
        raise DomainError("alpha0 must not exceed omega / 4")
    grid = f.grid
    if pad is None:
        pad = required_pad(grid, schedule.alphas[-1])
    fb = _padded(f, pad)
    sols = [_restrict(solve_damped(fb, omega, a), grid, pad) for a in schedule.alphas]
    steps = [weighted_norm(b - a, REFERENCE_NORM) for a, b in zip(sols, sols[1:])]
    diag = {"step_norms": steps, "pad": pad}
    if any(b >= a and b > 0 for a, b in zip(steps, steps[1:])):
        raise ConvergenceError("damped solutions are not Cauchy in alpha", diag)
    table = [[s] for s in sols]
    for k in range(1, len(sols)):
        for j in range(1, k + 1):
            prev, lower = table[k][j - 1], table[k - 1][j - 1]
            table[k].append(prev + (prev - lower) * (1.0 / (2**j - 1)))
    best = table[-1][-1]
    resid = weighted_norm(best - table[-1][-2], REFERENCE_NORM)
    return OutgoingSolution(best, omega, "lap_extrapolated", tuple(schedule.alphas), resid, diag)


def pv_real(f: Field, omega: float) -> Field:
    """Divide every mode by omega^2 - |xi|^2.

    Requires the lattice to keep a gap of 0.3 frequency steps from the shell
    |xi| = omega (see ``shell_avoiding_grid``).
    """
    g = f.grid
    k = g.kmag()
    gap = np.abs(k - omega)
    i = np.unravel_index(np.argmin(gap), gap.shape)
    if gap[i] < SHELL_GAP * g.freq_spacing:
        xi = [float(w[tuple(ix if w.shape[a] > 1 else 0 for a, ix in enumerate(i))])
              for w in g.wavenumbers()]
        raise DomainError(
            f"lattice mode xi={xi} lies within {gap[i]:.3g} of the shell |xi|={omega} "
            f"(need >= {SHELL_GAP} * {g.freq_spacing:.3g})")
    return apply_multiplier(f, lambda kk: 1.0 / (omega**2 - kk**2))


# ---------------------------------------------------------------------------
# Green's function oracles

def _green_line(x: np.ndarray, fx: np.ndarray, omega: float, chunk: int = 2048) -> np.ndarray:
    """int exp(i omega |x - y|) / (2 i omega) f(y) dy on a uniform line.

    Trapezoid sum plus the two leading Euler-Maclaurin terms for the kink
    at y = x, which makes the rule sixth order.
    """
    h = x[1] - x[0]
    n = x.size
    # spectral f'' on the line (f is compactly supported)
    k = 2.0 * math.pi * np.fft.fftfreq(n, h)
    f2 = np.fft.ifft(-(k**2) * np.fft.fft(fx))
    f2 = f2 if np.iscomplexobj(fx) else f2.real
    out = np.empty(n, dtype=complex)
    for s in range(0, n, chunk):
        xs = x[s:s + chunk, None]
        ker = np.exp(1j * omega * np.abs(xs - x[None, :])) / (2j * omega)
        out[s:s + chunk] = h * (ker @ fx)
    out += (h**2 / 12.0) * fx - (h**4 / 720.0) * (3.0 * f2 - omega**2 * fx)
    return out


def _check_contained(f: Field):
    g = f.grid
    edge = np.zeros(g.shape, dtype=bool)
    for ax in range(g.dim):
        idx = [slice(None)] * g.dim
        idx[ax] = 0
        edge[tuple(idx)] = True
    peak = f.max_abs()
    if peak and float(np.max(np.abs(f.values[edge]))) > 1e-14 * peak:
        raise TruncationError("source is not compactly supported inside the box")


def green_convolve(f: Field, omega: float) -> Field:
    """Outgoing solution by direct quadrature against the free-space kernel.

    d = 1 uses exp(i omega |x|) / (2 i omega).  d = 3 needs a radial f and
    uses -exp(i omega r) / (4 pi r) through U = r u, which solves the 1-D
    problem with the odd source r F(r); U is spline-interpolated onto the
    grid radii.
    """
    g = f.grid
    if g.dim not in (1, 3):
        raise DomainError(f"green_convolve supports d = 1 or 3, got {g.dim}")
    _check_contained(f)
    x = g.axis()
    if g.dim == 1:
        return Field(g, _green_line(x, f.values, omega), False)
    c = g.points_per_dim // 2
    line = f.values[:, c, c]
    U = _green_line(x, x * line, omega)
    spline_re, spline_im = CubicSpline(x, U.real), CubicSpline(x, U.imag)
    r = g.radius()
    rs = np.where(r == 0.0, 1.0, r)
    u = (spline_re(r) + 1j * spline_im(r)) / rs
    u0 = spline_re(0.0, 1) + 1j * spline_im(0.0, 1)
    return Field(g, np.where(r == 0.0, u0, u), False)


def fd_residual(u: Field, f: Field, omega: float, margin: int = 2) -> float:
    """max |D_h u + omega^2 u - f| over interior points, 3-point Laplacian, d = 1."""
    if u.grid.dim != 1:
        raise DomainError("fd_residual is one-dimensional")
    h = u.grid.spacing
    v = u.values
    lap = (v[2:] - 2.0 * v[1:-1] + v[:-2]) / h**2
    r = lap + omega**2 * v[1:-1] - f.values[1:-1]
    return float(np.max(np.abs(r[margin:-margin] if margin else r)))


def sommerfeld_defect(u: Field, omega: float) -> tuple[float, float]:
    """|(d_r - i omega) u| at the left and right ends of a 1-D field."""
    if u.grid.dim != 1:
        raise DomainError("sommerfeld_defect is one-dimensional")
    h = u.grid.spacing
    v = u.values
    # fourth-order one-sided differences
    c = np.array([25.0, -48.0, 36.0, -16.0, 3.0]) / (12.0 * h)
    right = c @ v[:-6:-1] - 1j * omega * v[-1]
    left = c @ v[:5] - 1j * omega * v[0]
    return float(abs(left)), float(abs(right))


def outgoing_reference(f: Field, omega: float, method: str = "lap_extrapolated",
                       schedule: AlphaSchedule | None = None) -> OutgoingSolution:
    """Dispatch to one of the reference methods by name."""
    if method == "lap_extrapolated":
        return solve_outgoing(f, omega, schedule)
    if method in ("green_d1", "green_d3"):
        want = 1 if method == "green_d1" else 3
        if f.grid.dim != want:
            raise DomainError(f"{method} needs d = {want}")
        return OutgoingSolution(green_convolve(f, omega), omega, method)
    if method == "pv_real":
        u = pv_real(f, omega)
        return OutgoingSolution(Field(u.grid, u.values.astype(complex), False), omega, method)
    raise DomainError(f"unknown method {method!r}; expected one of {METHODS}")
