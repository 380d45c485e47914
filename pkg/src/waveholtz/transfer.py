"""Kernel K, transfer function beta and the quantities built from it.

Conventions
-----------
``sinc(x) = sin(2 pi x) / (2 pi x)``.  ``beta(lam)`` is the multiplier of the
filter operator at angular frequency ``lam``; ``beta_bar(r) = beta(omega r)``
is its frequency-rescaled form, independent of ``omega``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .quadrature import adaptive_simpson, simpson_weights

#: constant of the far-field bound |beta_bar(r)| <= A_BOUND / (r - 1)
A_BOUND = 3.0 / (4.0 * math.pi)
#: quadratic coefficient of 1 - beta_bar(1 + x) ~ C_PEAK x^2 (same for beta_sym)
C_PEAK = 2.0 * math.pi**2 / 3.0 - 0.25

_SINGULAR_BAND = 1e-4


@dataclass(frozen=True)
class KernelSpec:
    omega: float

    def __post_init__(self):
        if not (self.omega > 0 and math.isfinite(self.omega)):
            raise DomainError(f"omega must be positive and finite, got {self.omega}")

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.omega


def kernel_K(t, spec: KernelSpec):
    """K(t) = (2/T)(cos(omega t) - 1/4) on [0, T]."""
    t = np.asarray(t, dtype=float)
    T = spec.period
    slack = 8 * np.finfo(float).eps * T
    if np.any(t < -slack) or np.any(t > T + slack):
        raise DomainError(f"kernel_K is defined on [0, T={T}]")
    return (2.0 / T) * (np.cos(spec.omega * t) - 0.25)


def sinc(x):
    return np.sinc(2.0 * np.asarray(x, dtype=float))


def beta_closed(r):
    """Rescaled transfer function sinc(r+1) + sinc(r-1) - sinc(r)/2."""
    r = np.abs(np.asarray(r, dtype=float))
    return sinc(r + 1.0) + sinc(r - 1.0) - 0.5 * sinc(r)


def beta_alternative(r):
    """(1/pi) sin(2 pi r) (r/(r^2-1) - 1/(4r)), with the poles at 0 and 1 rewritten.

    Near r = 1 the first product equals 2 pi sinc(x)(1+x)/(2+x) with
    x = r - 1, and near r = 0 the second equals (pi/2) sinc(r).
    """
    r = np.abs(np.asarray(r, dtype=float))
    near0 = r < _SINGULAR_BAND
    near1 = np.abs(r - 1.0) < _SINGULAR_BAND
    s = np.sin(2.0 * math.pi * r)
    r1 = np.where(near1, 2.0, r)
    r0 = np.where(near0, 1.0, r)
    x = r - 1.0
    first = np.where(near1, 2.0 * math.pi * sinc(x) * (1.0 + x) / (2.0 + x),
                     s * r1 / (r1**2 - 1.0))
    second = np.where(near0, 0.5 * math.pi * sinc(r), s / (4.0 * r0))
    return (first - second) / math.pi


def beta_quadrature(lam, spec: KernelSpec, steps: int = 10_000):
    """Composite-Simpson value of int_0^T K(t) cos(lam t) dt."""
    w = simpson_weights(steps, spec.period)
    t = np.linspace(0.0, spec.period, steps + 1)
    K = kernel_K(t, spec)
    lam = np.asarray(lam, dtype=float)
    flat = lam.reshape(-1)
    out = np.empty(flat.shape)
    chunk = max(1, 2_000_000 // (steps + 1))
    for i in range(0, flat.size, chunk):
        out[i:i + chunk] = np.cos(np.outer(flat[i:i + chunk], t)) @ (w * K)
    return out.reshape(lam.shape) if lam.ndim else float(out[0])


def one_minus_beta_near_peak(x):
    """1 - beta_bar(1 + x) without cancellation for small |x|.

    Uses beta_bar(1+x) = sinc(x)(1 + x^2 / (2(1+x)(2+x))), so that
    1 - beta_bar(1+x) = x^2 [(1 - sinc x)/x^2 - sinc(x) / (2(1+x)(2+x))].
    """
    x = np.asarray(x, dtype=float)
    return x**2 * _one_minus_beta_over_sq(x)


def _one_minus_beta_over_sq(x):
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-2
    xs = np.where(small, 0.0, x)
    # (1 - sinc(x)) / x^2 by series inside |x| < 1e-2
    z = (2.0 * math.pi * x) ** 2
    series = (2.0 * math.pi) ** 2 * (1.0 / 6.0 - z / 120.0 + z**2 / 5040.0 - z**3 / 362880.0)
    direct = (1.0 - sinc(xs)) / np.where(small, 1.0, xs) ** 2
    head = np.where(small, series, direct)
    return head - sinc(x) / (2.0 * (1.0 + x) * (2.0 + x))


# ---------------------------------------------------------------------------
# bound ladder

@dataclass
class BoundReport:
    """Worst margins (bound minus |beta_bar|) of each bound on the samples.

    A negative margin is a violation; ``violations`` lists ``(bound, r)``.
    """

    parabola: float
    parabola_vs_gauss: float
    half: float
    far: float
    max_norm: float
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def bound_values(r):
    """Bound values at radii ``r`` (NaN where a bound does not apply)."""
    r = np.abs(np.asarray(r, dtype=float))
    d = np.abs(r - 1.0)
    parabola = np.where(d <= 0.5, 1.0 - 0.5 * d**2, np.nan)
    gauss = np.where(d <= 0.5, np.exp(-0.5 * d**2), np.nan)
    half = np.where(d >= 0.5, 0.5, np.nan)
    with np.errstate(divide="ignore"):
        far = np.where(r >= 1.5, A_BOUND / (r - 1.0), np.nan)
    max_norm = np.where(d >= 0.25, 31.0 / 32.0, np.nan)
    return {"parabola": parabola, "gauss": gauss, "half": half, "far": far,
            "max_norm": max_norm}


def beta_bounds_check(r_samples, slack: float = 1e-14) -> BoundReport:
    """Check the bound ladder for beta_bar on the given radii.

    Margins are computed as bound - |beta_bar|; ``slack`` absorbs roundoff in
    cases that hold with equality (e.g. r = 0, where beta_bar = -1/2).
    """
    r = np.abs(np.asarray(r_samples, dtype=float))
    b = np.abs(beta_closed(r))
    bounds = bound_values(r)
    margins = {
        "parabola": bounds["parabola"] - b,
        "parabola_vs_gauss": bounds["gauss"] - bounds["parabola"],
        "half": bounds["half"] - b,
        "far": bounds["far"] - b,
        "max_norm": bounds["max_norm"] - b,
    }
    worst = {}
    violations = []
    for name, m in margins.items():
        valid = ~np.isnan(m)
        worst[name] = float(np.min(m[valid])) if valid.any() else math.inf
        bad = valid & (m < -slack)
        violations.extend((name, float(x)) for x in r[bad])
    return BoundReport(violations=violations, **worst)


# ---------------------------------------------------------------------------
# symmetric part, ratio w and Q

def beta_sym(r):
    """sinc(r)(1 + r^2/(2r^2+4)); even in r."""
    r = np.asarray(r, dtype=float)
    return sinc(r) * (1.0 + r**2 / (2.0 * r**2 + 4.0))


def q_poly(r):
    """Q(r) = 6 / ((3r^2+4)(2r^2+6r+4)); poles at r = -1, -2."""
    r = np.asarray(r, dtype=float)
    den2 = 2.0 * r**2 + 6.0 * r + 4.0
    if np.any(den2 == 0.0):
        raise DomainError("Q has poles at r = -1 and r = -2")
    return 6.0 / ((3.0 * r**2 + 4.0) * den2)


def q_poly_derivative(r):
    r = np.asarray(r, dtype=float)
    A = 3.0 * r**2 + 4.0
    B = 2.0 * r**2 + 6.0 * r + 4.0
    return -6.0 * (6.0 * r * B + A * (4.0 * r + 6.0)) / (A * B) ** 2


def w_ratio(r):
    """beta_bar(1+r) / beta_sym(r), evaluated as 1 - r^3 Q(r)."""
    r = np.asarray(r, dtype=float)
    if np.any(np.abs(r) >= 0.5):
        raise DomainError("w_ratio needs |r| < 1/2 (first zero of beta_sym)")
    return 1.0 - r**3 * q_poly(r)


def w_derivative(r):
    r = np.asarray(r, dtype=float)
    return -3.0 * r**2 * q_poly(r) - r**3 * q_poly_derivative(r)


def measure_c_delta(delta: float = 0.25, samples: int = 20001) -> float:
    """Numerical value of 3 + delta * max_{|r|<=delta} |Q'(r)|."""
    r = np.linspace(-delta, delta, samples)
    return 3.0 + delta * float(np.max(np.abs(q_poly_derivative(r))))


# ---------------------------------------------------------------------------
# symmetric difference and the N functional

def d_omega(h, omega: float, x):
    """(h(omega + x) - h(omega - x)) / (2x)."""
    x = np.asarray(x, dtype=float)
    if np.any(x == 0.0):
        raise DomainError("d_omega is undefined at x = 0; use the limit h'(omega)")
    return (h(omega + x) - h(omega - x)) / (2.0 * x)


def beta_power_d1(n: int, x):
    """D_1 (beta_bar^n)(x) on 0 <= x < 1/2 through beta_sym and w.

    The difference w(x)^n - w(-x)^n is formed as e^b expm1(a - b) with
    a, b = n log w(+-x), which keeps full relative accuracy as x -> 0.
    The value at x = 0 is the limit n beta_bar(1)^(n-1) beta_bar'(1) = 0.
    """
    x = np.asarray(x, dtype=float)
    xs = np.where(x == 0.0, 0.125, x)
    a = n * np.log1p(-xs**3 * q_poly(xs))
    b = n * np.log1p(xs**3 * q_poly(-xs))
    out = beta_sym(xs) ** n * np.exp(b) * np.expm1(a - b) / (2.0 * xs)
    return np.where(x == 0.0, 0.0, out)


@dataclass(frozen=True)
class NFunctionalReport:
    l1_term: float
    dstar_term: float
    linf_term: float
    total: float
    l1_tail: float = 0.0
    quad_error: float = 0.0


def _linf_outside_band(h_abs, omega, delta, r_cut, samples_per_unit=4000):
    pieces = []
    lo, hi = omega * (1.0 - delta), omega * (1.0 + delta)
    if lo > 0:
        pieces.append(np.linspace(0.0, lo, max(3, int(samples_per_unit * lo / omega))))
    if r_cut > hi:
        pieces.append(np.linspace(hi, r_cut, max(3, int(samples_per_unit * (r_cut - hi) / omega))))
    if not pieces:
        return 0.0
    best = 0.0
    for xs in pieces:
        vals = np.abs(h_abs(xs))
        k = int(np.argmax(vals))
        best = max(best, float(vals[k]))
        # refine around the sampled maximum
        a, b = xs[max(k - 1, 0)], xs[min(k + 1, xs.size - 1)]
        fine = np.linspace(a, b, 2001)
        best = max(best, float(np.max(np.abs(h_abs(fine)))))
    return best


def n_functional(h_hat, omega: float = 1.0, delta: float = 0.25, *, r_cut=None,
                 tol: float = 1e-10, breakpoints=(), l1_tail: float = 0.0,
                 linf_tail: float = 0.0, d_integrand=None) -> NFunctionalReport:
    """omega^-1 ||h||_L1(R) + ||D_omega h||_L1(0, omega delta) + ||h||_Linf(R \\ omega I_delta).

    ``h_hat`` must be even and vectorised.  Integrals run on [0, r_cut] split
    at ``breakpoints`` (kinks of |h|) and at the band edges; ``l1_tail`` is a
    bound for int_{r_cut}^inf |h| and ``linf_tail`` for sup_{r > r_cut} |h|.
    ``d_integrand`` may supply a cancellation-free D_omega h on [0, omega delta].
    """
    if not 0.0 < delta < 1.0:
        raise DomainError(f"delta must lie in (0, 1), got {delta}")
    r_cut = max(8.0, 4.0 * omega) if r_cut is None else float(r_cut)
    edges = {0.0, r_cut, omega * (1 - delta), omega, omega * (1 + delta)}
    edges.update(float(b) for b in breakpoints)
    edges = sorted(e for e in edges if 0.0 <= e <= r_cut)
    panels = list(zip(edges[:-1], edges[1:]))
    panel_tol = tol / (len(panels) + 1)

    l1 = 0.0
    err = 0.0
    for a, b in panels:
        v, e = adaptive_simpson(lambda r: np.abs(h_hat(r)), a, b, panel_tol)
        l1 += v
        err += e
    l1_full = 2.0 * (l1 + l1_tail)

    if d_integrand is None:
        eps = 1e-5 * omega * delta

        def d_integrand(x):
            x = np.asarray(x, dtype=float)
            return d_omega(h_hat, omega, np.where(x == 0.0, eps, x))

    dstar, e = adaptive_simpson(lambda x: np.abs(d_integrand(x)), 0.0, omega * delta, panel_tol)
    err += e

    linf = max(_linf_outside_band(h_hat, omega, delta, r_cut), linf_tail)
    l1_term = l1_full / omega
    return NFunctionalReport(l1_term=l1_term, dstar_term=dstar, linf_term=linf,
                             total=l1_term + dstar + linf, l1_tail=2.0 * l1_tail / omega,
                             quad_error=err)


def n_functional_beta_power(n: int, omega: float = 1.0, delta: float = 0.25, *,
                            tol: float = 1e-10, r_cut=None) -> NFunctionalReport:
    """N_omega(beta^n) with h(lam) = beta_bar(lam / omega)^n.

    The tail beyond ``r_cut`` uses |beta_bar(r)| <= a/(r-1); for n = 1 the L1
    norm diverges and the report carries ``inf``.
    """
    if n < 1:
        raise DomainError("n must be a positive integer")
    r_cut = max(8.0, 4.0 * omega) if r_cut is None else float(r_cut)
    rc = r_cut / omega
    if n == 1:
        tail = math.inf
    else:
        tail = omega * A_BOUND**n * (rc - 1.0) ** (1 - n) / (n - 1)
    linf_tail = (A_BOUND / (rc - 1.0)) ** n
    # zeros of beta_bar sit at the half-integers r = k/2, k >= 1, k != 2
    zeros = [omega * k / 2.0 for k in range(1, int(2 * rc) + 1) if k != 2]
    if 2.0 * delta < 1.0:
        def dfun(x):
            return omega ** -1 * beta_power_d1(n, np.asarray(x) / omega)
    else:
        dfun = None
    return n_functional(lambda lam: beta_closed(np.asarray(lam) / omega) ** n, omega, delta,
                        r_cut=r_cut, tol=tol, breakpoints=zeros, l1_tail=tail,
                        linf_tail=linf_tail, d_integrand=dfun)


def nfunctional_plateau() -> float:
    """Large-n limit of sqrt(n) N_1(beta_bar^n) from Laplace's method.

    ||beta_bar^n||_L1 ~ 2 sqrt(pi / (c n)) and ||D_1 beta_bar^n||_L1 ~
    (3 sqrt(pi) / 32) c^(-3/2) n^(-1/2) with c = 2 pi^2 / 3 - 1/4; the max-norm
    term decays geometrically.
    """
    c = C_PEAK
    return 2.0 * math.sqrt(math.pi / c) + 3.0 * math.sqrt(math.pi) / 32.0 * c ** -1.5
