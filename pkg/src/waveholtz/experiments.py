"""Waveholtz iterations, error tracking, rate fits and frequency sweeps."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DomainError, InstabilityError
from .fields import (Field, GaussianProfile, Grid, NormSpec, _atomic_write, gaussian_source,
                     scaled_source, scaled_source_bound, shell_avoiding_grid, weighted_norm)
from .resolvent import pv_real
from .waveop import SolveConfig, apply_Pi, apply_S_power

DEFAULT_S = 2.0
DEFAULT_WINDOW = (32, 1024)
GROWTH_LIMIT = 10.0


def default_norms(s: float = DEFAULT_S) -> list[NormSpec]:
    return [NormSpec(-s, 0), NormSpec(-s, 1)]


def _fmt(x) -> str:
    return "%.17g" % x


@dataclass
class IterationReport:
    """Error norms of the iterates against a reference.

    ``per_n`` rows are ``(n, l2_weighted, h1_weighted)``; a column is NaN when
    the corresponding norm was not requested.
    """

    per_n: list
    reference: str
    config: dict = field(default_factory=dict)
    window: tuple = DEFAULT_WINDOW
    fitted_slope: float | None = None
    fitted_constant: float | None = None

    @property
    def ns(self) -> np.ndarray:
        return np.array([row[0] for row in self.per_n], dtype=int)

    @property
    def l2(self) -> np.ndarray:
        return np.array([row[1] for row in self.per_n])

    @property
    def h1(self) -> np.ndarray:
        return np.array([row[2] for row in self.per_n])

    def to_csv(self, path) -> None:
        lines = ["n,l2_weighted,h1_weighted"]
        lines += [f"{n},{_fmt(a)},{_fmt(b)}" for n, a, b in self.per_n]
        _atomic_write(path, ("\n".join(lines) + "\n").encode())

    def to_dict(self) -> dict:
        return {
            "reference": self.reference,
            "config": self.config,
            "window": list(self.window),
            "fitted_slope": self.fitted_slope,
            "fitted_constant": self.fitted_constant,
            "rows": len(self.per_n),
        }

    def to_json(self, path) -> None:
        _atomic_write(path, (json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n").encode())


# ---------------------------------------------------------------------------
# fits

def fit_power_law(xs, ys) -> tuple[float, float]:
    """Least-squares line through (log x, log y); returns (slope, log intercept)."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.size != ys.size or xs.size < 2:
        raise DomainError("need at least two points of matching length")
    if np.any(ys <= 0) or np.any(xs <= 0) or not np.all(np.isfinite(ys)):
        raise DomainError("power-law fit needs positive finite data")
    slope, icpt = np.polyfit(np.log(xs), np.log(ys), 1)
    return float(slope), float(icpt)


def fit_rate(report: IterationReport, window=None, column: str = "l2") -> tuple[float, float]:
    """Slope and intercept of log(error) against log(n) inside ``window``.

    Raises DomainError with fewer than four points or non-positive norms.
    """
    lo, hi = window or report.window
    ns = report.ns
    vals = getattr(report, column)
    sel = (ns >= lo) & (ns <= hi)
    if sel.sum() < 4:
        raise DomainError(f"fit window [{lo}, {hi}] holds {int(sel.sum())} points; need 4")
    return fit_power_law(ns[sel], vals[sel])


def envelope(values) -> np.ndarray:
    """env[i] = max(values[i:])."""
    return np.maximum.accumulate(np.asarray(values)[::-1])[::-1]


# ---------------------------------------------------------------------------
# iteration

def run_waveholtz(f: Field, cfg: SolveConfig, n_max: int, norm_specs=None, *,
                  reference: Field | None = None, reference_tag: str = "pv_real",
                  record=None, window=DEFAULT_WINDOW, fit: bool = True) -> IterationReport:
    """Iterate u^{n+1} = Pi u^n from u^0 = 0 and record ||u^n - Re u||.

    ``record`` selects the n values stored (default: every n).  The fit is
    attempted on ``window`` when it holds enough recorded points.

    Raises
    ------
    InstabilityError
        If a recorded norm exceeds 10 times its value at n = 0.
    """
    if n_max < 0:
        raise DomainError("n_max must be >= 0")
    specs = list(norm_specs) if norm_specs is not None else default_norms()
    if len(specs) > 2:
        raise DomainError("at most two norms (L2 and H1) are tracked")
    ref = reference if reference is not None else pv_real(f, cfg.omega)
    ref = ref.real
    keep = set(range(n_max + 1)) if record is None else {n for n in record if 0 <= n <= n_max} | {0}

    def norms(e: Field):
        row = [math.nan, math.nan]
        for spec in specs:
            row[spec.derivative_order] = weighted_norm(e, spec)
        return row

    u = Field.zeros(f.grid)
    rows = [(0, *norms(-ref))]
    base = [abs(v) for v in rows[0][1:]]
    for n in range(1, n_max + 1):
        u = apply_Pi(u, f, cfg)
        if n in keep:
            row = norms(u - ref)
            for v, b in zip(row, base):
                if math.isfinite(v) and (not math.isfinite(b) or v > GROWTH_LIMIT * max(b, 1e-300)):
                    raise InstabilityError(
                        f"error norm grew to {v:.3g} at n={n} (initial {b:.3g})",
                        {"n": n, "norm": v, "initial": b, "rows": rows})
            rows.append((n, *row))
    report = IterationReport(rows, reference_tag, _snapshot(cfg, n_max, specs), tuple(window))
    if fit:
        try:
            slope, icpt = fit_rate(report)
            report.fitted_slope, report.fitted_constant = slope, math.exp(icpt)
        except DomainError:
            pass
    return report


def _snapshot(cfg: SolveConfig, n_max: int, specs) -> dict:
    g = cfg.grid
    return {
        "omega": cfg.omega,
        "backend": cfg.backend,
        "dim": g.dim,
        "half_width": g.half_width,
        "points_per_dim": g.points_per_dim,
        "steps_per_period": cfg.time_steps() if cfg.backend == "timedomain" else None,
        "n_max": n_max,
        "norms": [asdict(s) for s in specs],
    }


def error_equation_discrepancies(f: Field, cfg: SolveConfig, ns, s: float = DEFAULT_S) -> dict:
    """For each n: ||(u^n - Re u) - pv_real(-S^n f)|| in L2_{-s}.

    Both sides use the spectral backend on the same grid.
    """
    if cfg.backend != "spectral":
        raise DomainError("the error-equation check uses the spectral backend")
    spec = NormSpec(-s, 0)
    ref = pv_real(f, cfg.omega)
    wanted = sorted(set(int(n) for n in ns))
    out = {}
    u = Field.zeros(f.grid)
    n = 0
    for target in wanted:
        while n < target:
            u = apply_Pi(u, f, cfg)
            n += 1
        direct = pv_real(-apply_S_power(f, n, cfg), cfg.omega)
        out[n] = weighted_norm((u - ref) - direct, spec)
    return out


def error_equation_check(f: Field, cfg: SolveConfig, n: int, s: float = DEFAULT_S) -> float:
    return error_equation_discrepancies(f, cfg, [n], s)[n]


# ---------------------------------------------------------------------------
# demo problem

@dataclass(frozen=True)
class DemoProblem:
    """Gaussian source in d = 1 on a shell-avoiding box sized by finite speed.

    The box holds supp(f) + (n_max + 2) T + 1 and the spacing resolves both
    10 points per wavelength and the Gaussian spectrum.
    """

    omega: float = 8.0
    width: float = 0.25
    amplitude: float = 1.0
    n_max: int = 1024
    dim: int = 1

    def support(self) -> float:
        return self.width * math.sqrt(math.log(1e16))

    def grid(self) -> Grid:
        T = 2.0 * math.pi / self.omega
        half = self.support() + (self.n_max + 2) * T + 1.0
        h = min(2.0 * math.pi / (10.0 * self.omega), math.pi * self.width / (2.0 * math.sqrt(math.log(1e16))))
        return shell_avoiding_grid(self.dim, self.omega, half, h)

    def source(self, grid: Grid | None = None) -> Field:
        return gaussian_source(grid or self.grid(), None, self.width, self.amplitude)


def power_of_two_window(lo: int, hi: int) -> list[int]:
    out, n = [], 1
    while n <= hi:
        if n >= lo:
            out.append(n)
        n *= 2
    return out


# ---------------------------------------------------------------------------
# frequency sweep

@dataclass
class SweepPoint:
    omega: float
    n: int
    censored: bool
    initial_error: float
    final_error: float
    points_per_dim: int


@dataclass
class SweepReport:
    points: list
    tol: float
    s: float
    n_max: int
    exponent: float | None = None
    constant: float | None = None

    def to_csv(self, path) -> None:
        lines = ["omega,n,censored,initial_error,final_error,points_per_dim"]
        for p in self.points:
            lines.append(f"{_fmt(p.omega)},{p.n},{int(p.censored)},{_fmt(p.initial_error)},"
                         f"{_fmt(p.final_error)},{p.points_per_dim}")
        _atomic_write(path, ("\n".join(lines) + "\n").encode())

    def to_dict(self) -> dict:
        return {"tol": self.tol, "s": self.s, "n_max": self.n_max,
                "exponent": self.exponent, "constant": self.constant,
                "points": [asdict(p) for p in self.points]}

    def to_json(self, path) -> None:
        _atomic_write(path, (json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n").encode())


def sweep_grid(profile: GaussianProfile, omega: float, n_max: int, dim: int = 1) -> Grid:
    """Box of half-width supp + (n_max + 2) T + 1 with h proportional to 1/omega."""
    T = 2.0 * math.pi / omega
    supp = profile.width * math.sqrt(math.log(1e16)) / omega
    h = 0.999 * scaled_source_bound(profile) / omega
    return shell_avoiding_grid(dim, omega, supp + (n_max + 2) * T + 1.0, h)


def omega_sweep(profile: GaussianProfile, omegas, tol: float, s: float = DEFAULT_S,
                n_max: int = 2**15, dim: int = 1) -> SweepReport:
    """Smallest n with ||e^n|| <= tol ||e^0|| in L2_{-s}, for each omega.

    e^n is evaluated through the error equation, e^n = pv_real(-S^n f),
    so each probe costs one spectral solve.  The search doubles n until the
    tolerance is met, then bisects; this locates the first crossing when
    the error decreases monotonically in n.  Points that need more than
    ``n_max`` iterations are censored and excluded from the fit.
    """
    omegas = [float(w) for w in omegas]
    if any(b <= a for a, b in zip(omegas, omegas[1:])):
        raise DomainError("omegas must be strictly increasing")
    spec = NormSpec(-s, 0)
    points = []
    for omega in omegas:
        grid = sweep_grid(profile, omega, n_max, dim)
        f = scaled_source(profile, omega, grid)
        cfg = SolveConfig(omega, grid)

        def err(n):
            return weighted_norm(pv_real(apply_S_power(f, n, cfg), omega), spec)

        e0 = err(0)
        target = tol * e0
        if e0 <= target:
            points.append(SweepPoint(omega, 0, False, e0, e0, grid.points_per_dim))
            continue
        lo, hi = 0, 1
        e_hi = err(hi)
        while e_hi > target and hi < n_max:
            lo, hi = hi, min(2 * hi, n_max)
            e_hi = err(hi)
        if e_hi > target:
            points.append(SweepPoint(omega, n_max, True, e0, e_hi, grid.points_per_dim))
            continue
        while hi - lo > 1:
            mid = (lo + hi) // 2
            e_mid = err(mid)
            if e_mid <= target:
                hi, e_hi = mid, e_mid
            else:
                lo = mid
        points.append(SweepPoint(omega, hi, False, e0, e_hi, grid.points_per_dim))
    report = SweepReport(points, tol, s, n_max)
    usable = [p for p in points if not p.censored and p.n > 0]
    if len(usable) >= 2:
        slope, icpt = fit_power_law([p.omega for p in usable], [p.n for p in usable])
        report.exponent, report.constant = slope, math.exp(icpt)
    return report


def exterior_error_model(n: int, omega: float, s: float, dim: int = 1) -> float:
    """((n+1) T)^(1/2 - s) / sqrt(2s - 1): the L2_{-s} mass of a unit-amplitude
    oscillation beyond the radius reached after n + 1 periods."""
    if s <= 0.5:
        raise DomainError(f"exterior model needs s > 1/2, got {s}")
    if dim not in (1, 2, 3):
        raise DomainError("dim must be 1, 2 or 3")
    if n < 0:
        raise DomainError("n must be >= 0")
    T = 2.0 * math.pi / omega
    return ((n + 1) * T) ** (0.5 - s) / math.sqrt(2.0 * s - 1.0)
