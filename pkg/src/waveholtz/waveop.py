"""The filter operator S and the Waveholtz map Pi.

Two backends share one interface.  ``spectral`` applies the exact Fourier
multipliers; ``timedomain`` integrates the wave equation over one period
with leapfrog and a spectral Laplacian, then integrates against K by
Simpson's rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import DomainError
from .fields import Field, Grid, apply_multiplier, laplacian
from .quadrature import simpson_weights
from .transfer import KernelSpec, _one_minus_beta_over_sq, beta_closed, kernel_K

BACKENDS = ("spectral", "timedomain")
CFL_SAFETY = 0.9
# default dt/h as a fraction of the limit; leapfrog dispersion is superluminal
# for high wavenumbers and shows up in support tails near the limit
DEFAULT_CFL_FRACTION = 0.5


def cfl_limit(dim: int) -> float:
    """Largest stable dt/h for leapfrog with a spectral Laplacian, times 0.9.

    Stability needs dt * max|xi| <= 2 and max|xi| = pi sqrt(d) / h.
    """
    return CFL_SAFETY * 2.0 / (math.pi * math.sqrt(dim))


@dataclass(frozen=True)
class SolveConfig:
    omega: float
    grid: Grid
    backend: str = "spectral"
    cfl: float | None = None
    steps_per_period: int | None = None

    def __post_init__(self):
        if self.backend not in BACKENDS:
            raise DomainError(f"backend must be one of {BACKENDS}, got {self.backend!r}")
        if not self.omega > 0:
            raise DomainError("omega must be positive")
        if self.steps_per_period is not None and (self.steps_per_period < 2 or self.steps_per_period % 2):
            raise DomainError("steps_per_period must be even and >= 2")

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.omega

    def time_steps(self) -> int:
        """M, the number of leapfrog steps per period (even)."""
        if self.steps_per_period is not None:
            m = self.steps_per_period
        else:
            c = self.cfl if self.cfl is not None else DEFAULT_CFL_FRACTION * cfl_limit(self.grid.dim)
            m = math.ceil(self.period / (c * self.grid.spacing))
            m += m % 2
        courant = self.period / m / self.grid.spacing
        if courant > cfl_limit(self.grid.dim) * (1 + 1e-12):
            raise DomainError(
                f"dt/h = {courant:.4g} exceeds the stability limit {cfl_limit(self.grid.dim):.4g} "
                f"for d={self.grid.dim}; raise steps_per_period to at least "
                f"{math.ceil(self.period / (cfl_limit(self.grid.dim) * self.grid.spacing))}")
        return m

    def with_backend(self, backend: str) -> "SolveConfig":
        return replace(self, backend=backend)


# ---------------------------------------------------------------------------
# multipliers

def beta_multiplier(k, omega: float):
    return beta_closed(np.asarray(k) / omega)


def pi_multiplier(k, omega: float):
    """m(rho) = (1 - beta(rho)) / (omega^2 - rho^2), finite across rho = omega."""
    r = np.asarray(k, dtype=float) / omega
    x = r - 1.0
    near = np.abs(x) < 0.1
    xn = np.where(near, x, 0.0)
    stable = -xn * _one_minus_beta_over_sq(xn) / (omega**2 * (2.0 + xn))
    rf = np.where(near, 0.0, r)
    direct = (1.0 - beta_closed(rf)) / (omega**2 * (1.0 - rf**2))
    return np.where(near, stable, direct)


def _require_real(v: Field, what: str):
    if not v.is_real:
        raise DomainError(f"{what} must be a real field")


def _check_grid(v: Field, cfg: SolveConfig):
    if v.grid != cfg.grid:
        raise DomainError("field grid does not match the solve configuration")


# ---------------------------------------------------------------------------
# leapfrog

def _leapfrog(v: Field, f: Field | None, cfg: SolveConfig) -> Field:
    """int_0^T K(t) w(t) dt for w_tt = lap w - f cos(omega t), w(0)=v, w_t(0)=0."""
    m = cfg.time_steps()
    T = cfg.period
    dt = T / m
    spec = KernelSpec(cfg.omega)
    weights = simpson_weights(m, T) * kernel_K(np.linspace(0.0, T, m + 1), spec)
    fv = None if f is None else f.values
    w_prev = v.values
    acc = weights[0] * w_prev
    force0 = laplacian(v).values - (fv if fv is not None else 0.0)
    w_cur = w_prev + 0.5 * dt**2 * force0
    acc = acc + weights[1] * w_cur
    g = v.grid
    for k in range(1, m):
        rhs = laplacian(Field(g, w_cur, True)).values
        if fv is not None:
            rhs = rhs - fv * math.cos(cfg.omega * k * dt)
        w_next = 2.0 * w_cur - w_prev + dt**2 * rhs
        w_prev, w_cur = w_cur, w_next
        acc = acc + weights[k + 1] * w_cur
    return Field(g, acc, True)


def discrete_transfer(rho, omega: float, steps_per_period: int) -> np.ndarray:
    """beta_dt(rho): the transfer function realised by the leapfrog backend.

    Runs the same recursion on single modes, vectorised over ``rho``.
    """
    rho = np.asarray(rho, dtype=float)
    m = steps_per_period
    T = 2.0 * math.pi / omega
    dt = T / m
    weights = simpson_weights(m, T) * kernel_K(np.linspace(0.0, T, m + 1), KernelSpec(omega))
    a = -(rho * dt) ** 2
    w_prev = np.ones_like(rho)
    w_cur = 1.0 + 0.5 * a
    acc = weights[0] * w_prev + weights[1] * w_cur
    for k in range(1, m):
        w_prev, w_cur = w_cur, (2.0 + a) * w_cur - w_prev
        acc = acc + weights[k + 1] * w_cur
    return acc


# ---------------------------------------------------------------------------
# public operators

def apply_S(v: Field, cfg: SolveConfig) -> Field:
    """S v: multiply each mode by beta(|xi|), or run one kernel-weighted wave period."""
    _check_grid(v, cfg)
    if cfg.backend == "spectral":
        return apply_multiplier(v, lambda k: beta_multiplier(k, cfg.omega))
    _require_real(v, "time-domain input")
    return _leapfrog(v, None, cfg)


def apply_Pi(v: Field, f: Field, cfg: SolveConfig) -> Field:
    """Pi v: one Waveholtz step with source f."""
    _check_grid(v, cfg)
    _check_grid(f, cfg)
    if cfg.backend == "spectral":
        return apply_S(v, cfg) + apply_multiplier(f, lambda k: pi_multiplier(k, cfg.omega))
    _require_real(v, "time-domain input")
    _require_real(f, "time-domain source")
    return _leapfrog(v, f, cfg)


def apply_S_power(v: Field, n: int, cfg: SolveConfig) -> Field:
    """S^n v.  The spectral backend powers beta once per mode."""
    if n < 0:
        raise DomainError(f"power must be >= 0, got {n}")
    _check_grid(v, cfg)
    if n == 0:
        return v
    if cfg.backend == "spectral":
        return apply_multiplier(v, lambda k: beta_multiplier(k, cfg.omega) ** n)
    out = v
    for _ in range(n):
        out = apply_S(out, cfg)
    return out


def support_radius(field: Field, threshold: float) -> float:
    """Radius of the smallest centred ball outside which |v| < threshold * max|v|."""
    if not threshold > 0:
        raise DomainError("threshold must be positive")
    mag = np.abs(field.values)
    peak = float(mag.max())
    if peak == 0.0:
        return 0.0
    r = field.grid.radius()
    return float(r[mag >= threshold * peak].max())
