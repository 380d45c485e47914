import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from waveholtz.errors import DomainError, InstabilityError
from waveholtz.experiments import (DemoProblem, IterationReport, envelope,
                                   error_equation_check, error_equation_discrepancies,
                                   exterior_error_model, fit_power_law, fit_rate, omega_sweep,
                                   power_of_two_window, run_waveholtz)
from waveholtz.fields import (Field, GaussianProfile, Grid, NormSpec, gaussian_source,
                              shell_avoiding_grid, weighted_norm)
from waveholtz.resolvent import pv_real
from waveholtz.transfer import beta_closed
from waveholtz.waveop import SolveConfig, apply_S_power, pi_multiplier


@pytest.fixture(scope="module")
def small():
    """omega = 4 Gaussian problem sized for 64 iterations."""
    p = DemoProblem(omega=4.0, width=0.4, n_max=64)
    g = p.grid()
    return p, g, p.source(g), SolveConfig(p.omega, g)


# fits -------------------------------------------------------------------

@pytest.mark.parametrize("power", [-0.5, -1.0, 0.25])
def test_fit_exact_power(power):
    n = np.array([32, 64, 128, 256, 512])
    slope, icpt = fit_power_law(n, 3.0 * n**power)
    assert slope == pytest.approx(power, abs=1e-12)
    assert math.exp(icpt) == pytest.approx(3.0, rel=1e-12)


@given(st.floats(-3, 3), st.floats(0.1, 10))
def test_fit_recovers_random_lines(p, c):
    n = np.array([2.0, 5.0, 11.0, 40.0])
    slope, _ = fit_power_law(n, c * n**p)
    assert slope == pytest.approx(p, abs=1e-9)


def test_fit_rate_window_and_errors():
    rows = [(n, n**-0.5, 2 * n**-0.5) for n in range(1, 200)]
    rep = IterationReport(rows, "synthetic", window=(32, 128))
    slope, _ = fit_rate(rep)
    assert slope == pytest.approx(-0.5, abs=1e-12)
    assert fit_rate(rep, column="h1")[0] == pytest.approx(-0.5, abs=1e-12)
    with pytest.raises(DomainError):
        fit_rate(rep, window=(150, 152))
    with pytest.raises(DomainError):
        fit_power_law([1, 2, 3, 4], [1.0, 0.0, 1.0, 1.0])


def test_envelope():
    assert envelope([3, 1, 2, 0.5]).tolist() == [3, 2, 2, 0.5]


# iteration ----------------------------------------------------------------

def test_iteration_zero_step(small):
    p, g, f, cfg = small
    rep = run_waveholtz(f, cfg, 0)
    ref = pv_real(f, cfg.omega)
    assert rep.per_n[0][0] == 0
    assert rep.l2[0] == pytest.approx(weighted_norm(ref, NormSpec(-2)), rel=1e-15)
    assert rep.fitted_slope is None


def test_single_mode_iteration_matches_affine_recursion():
    w, rho = 2.1, 1.25
    g = Grid(1, 4 * math.pi, 64)
    f = Field(g, np.cos(rho * g.axis()))
    cfg = SolveConfig(w, g)
    rep = run_waveholtz(f, cfg, 20, [NormSpec(0)], reference=pv_real(f, w), fit=False)
    b = beta_closed(rho / w)
    amp = 1 / (w**2 - rho**2)
    norm_mode = weighted_norm(f, NormSpec(0))
    for n, l2, _ in rep.per_n:
        assert l2 == pytest.approx(abs(b) ** n * abs(amp) * norm_mode, rel=1e-9, abs=1e-15)
    # the recursion u^{n+1} = beta u^n + m f reproduces (1 - beta^n) f / (w^2 - rho^2)
    u = 0.0
    for _ in range(20):
        u = b * u + pi_multiplier(rho, w)
    assert u == pytest.approx((1 - b**20) * amp, rel=1e-12)


def test_iteration_records_and_is_monotone_at_start(small):
    p, g, f, cfg = small
    rep = run_waveholtz(f, cfg, 64, record=[1, 2, 4, 8, 16, 32, 64], window=(4, 64))
    assert rep.ns.tolist() == [0, 1, 2, 4, 8, 16, 32, 64]
    assert np.all(np.diff(rep.l2) < 0)
    assert -0.8 < rep.fitted_slope < -0.3
    assert np.all(rep.h1 > rep.l2)


def test_instability_detected():
    g = Grid(1, 4 * math.pi, 64)
    f = Field(g, np.cos(1.25 * g.axis()))
    # a bogus reference makes the first recorded error jump by far more than 10x
    with pytest.raises(InstabilityError) as exc:
        run_waveholtz(f, SolveConfig(2.1, g), 3, reference=1e-6 * pv_real(f, 2.1))
    assert exc.value.diagnostics["n"] == 1


def test_timedomain_iteration_approaches_spectral():
    w = 2.0
    g = shell_avoiding_grid(1, w, 30.0, 0.2)
    f = gaussian_source(g, width=1.0)
    spec = run_waveholtz(f, SolveConfig(w, g), 8, fit=False).l2[-1]
    diffs = []
    for m in (32, 64, 128):
        rep = run_waveholtz(f, SolveConfig(w, g, "timedomain", steps_per_period=m), 8, fit=False)
        diffs.append(abs(rep.l2[-1] - spec))
    assert math.log2(diffs[0] / diffs[1]) == pytest.approx(2, abs=0.25)
    assert math.log2(diffs[1] / diffs[2]) == pytest.approx(2, abs=0.25)


# error equation ------------------------------------------------------------

def test_error_equation_small_n(small):
    p, g, f, cfg = small
    assert error_equation_check(f, cfg, 0) <= 1e-12
    d = error_equation_discrepancies(f, cfg, [1, 8, 64])
    assert d[1] <= 1e-10 and d[64] <= 1e-8


def test_error_equation_requires_spectral(small):
    p, g, f, cfg = small
    with pytest.raises(DomainError):
        error_equation_check(f, cfg.with_backend("timedomain"), 1)


# reports ------------------------------------------------------------------

def test_report_serialization(tmp_path, small):
    p, g, f, cfg = small
    rep = run_waveholtz(f, cfg, 4, fit=False)
    rep.to_csv(tmp_path / "r.csv")
    rep.to_json(tmp_path / "r.json")
    lines = (tmp_path / "r.csv").read_text().splitlines()
    assert lines[0] == "n,l2_weighted,h1_weighted" and len(lines) == 6
    assert float(lines[1].split(",")[1]) == rep.l2[0]
    data = json.loads((tmp_path / "r.json").read_text())
    assert data["config"]["omega"] == 4.0 and data["reference"] == "pv_real"


# sweep ----------------------------------------------------------------------

def test_sweep_single_omega_has_no_fit():
    rep = omega_sweep(GaussianProfile(), [2.0], 0.3, n_max=256)
    assert len(rep.points) == 1 and rep.exponent is None
    assert not rep.points[0].censored and rep.points[0].n > 0


def test_sweep_tolerance_one_gives_zero():
    rep = omega_sweep(GaussianProfile(), [1.0, 2.0], 1.0, n_max=64)
    assert [p.n for p in rep.points] == [0, 0]


def test_sweep_censoring_and_csv(tmp_path):
    rep = omega_sweep(GaussianProfile(), [1.0, 2.0], 1e-3, n_max=8)
    assert all(p.censored and p.n == 8 for p in rep.points)
    assert rep.exponent is None
    rep.to_csv(tmp_path / "s.csv")
    rows = (tmp_path / "s.csv").read_text().splitlines()
    assert rows[0].startswith("omega,n,censored") and rows[1].split(",")[2] == "1"


def test_sweep_first_crossing():
    rep = omega_sweep(GaussianProfile(), [2.0], 0.3, n_max=256)
    pt = rep.points[0]
    from waveholtz.experiments import sweep_grid
    from waveholtz.fields import scaled_source
    g = sweep_grid(GaussianProfile(), 2.0, 256)
    f = scaled_source(GaussianProfile(), 2.0, g)
    cfg = SolveConfig(2.0, g)
    errs = [weighted_norm(pv_real(apply_S_power(f, n, cfg), 2.0), NormSpec(-2)) for n in range(pt.n + 1)]
    assert errs[pt.n] <= 0.3 * errs[0] < errs[pt.n - 1]


def test_sweep_rejects_unsorted():
    with pytest.raises(DomainError):
        omega_sweep(GaussianProfile(), [2.0, 1.0], 0.1)


# exterior model -------------------------------------------------------------

def test_exterior_model_properties():
    assert exterior_error_model(10, 4.0, 20.0) < 1e-15
    ratio = exterior_error_model(2 * 64 + 1, 8.0, 2.0) / exterior_error_model(64, 8.0, 2.0)
    assert ratio == pytest.approx(2 ** -1.5, rel=1e-12)
    with pytest.raises(DomainError):
        exterior_error_model(1, 1.0, 0.5)


def test_exterior_model_matches_tail_norm():
    w, n, s, sig = 8.0, 64, 2.0, 0.25
    R = (n + 1) * 2 * math.pi / w
    g = shell_avoiding_grid(1, w, 8 * R, 0.05)
    # far field of Re u has unit amplitude when f_hat(omega) = 2 omega
    amp = 2 * w / (sig * math.sqrt(math.pi) * math.exp(-(w * sig) ** 2 / 4))
    f = gaussian_source(g, width=sig, amplitude=amp)
    cfg = SolveConfig(w, g)
    e = pv_real(apply_S_power(f, n, cfg), w)
    tail = weighted_norm(e, NormSpec(-s), mask=g.radius() > R)
    model = exterior_error_model(n, w, s, 1)
    assert model / 3 <= tail <= 3 * model


def test_power_of_two_window():
    assert power_of_two_window(32, 1024) == [32, 64, 128, 256, 512, 1024]
