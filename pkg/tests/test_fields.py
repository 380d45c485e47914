import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from waveholtz.errors import DomainError, TruncationError
from waveholtz.fields import (Field, GaussianProfile, Grid, NormSpec, Spectrum, apply_multiplier,
                              dft_forward, dft_inverse, gaussian_source, gradient, laplacian,
                              read_field, read_field_csv, scaled_source, shell_avoiding_grid,
                              weighted_norm, write_field, write_field_csv)


def random_field(grid, seed=0, real=True):
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(grid.shape)
    if not real:
        v = v + 1j * rng.standard_normal(grid.shape)
    return Field(grid, v, real)


# grid ----------------------------------------------------------------------

def test_grid_basics():
    g = Grid(2, 3.0, 12)
    assert g.spacing == pytest.approx(0.5)
    assert g.shape == (12, 12)
    assert g.axis()[0] == -3.0 and g.axis()[-1] == pytest.approx(2.5)
    assert g.axis()[6] == 0.0


def test_grid_frequency_lattice():
    g = Grid(1, 5.0, 10)
    (k,) = g.wavenumbers()
    assert np.allclose(np.sort(k), math.pi * np.arange(-5, 5) / 5.0)


@pytest.mark.parametrize("args", [(4, 1.0, 8), (1, 1.0, 7), (1, 1.0, 2), (1, -1.0, 8)])
def test_grid_validation(args):
    with pytest.raises(DomainError):
        Grid(*args)


def test_shell_avoiding_grid_centres_shell():
    for w in (1.0, 4.0, 8.0, 13.0):
        g = shell_avoiding_grid(1, w, 30.0, 0.1)
        assert g.half_width >= 30.0 and g.spacing <= 0.1
        assert g.shell_gap(w) == pytest.approx(0.5 * g.freq_spacing, rel=1e-9)


# field ---------------------------------------------------------------------

def test_field_is_immutable_and_checked():
    g = Grid(1, 1.0, 8)
    f = Field(g, np.ones(8))
    with pytest.raises(ValueError):
        f.values[0] = 3.0
    with pytest.raises(DomainError):
        Field(g, np.ones(6))
    with pytest.raises(DomainError):
        Field(g, np.ones(8) * 1j, True)


def test_field_arithmetic_grid_mismatch():
    a = Field.zeros(Grid(1, 1.0, 8))
    b = Field.zeros(Grid(1, 2.0, 8))
    with pytest.raises(DomainError):
        a + b


# transforms ---------------------------------------------------------------

def test_dft_zero():
    g = Grid(2, 1.0, 8)
    assert np.all(dft_forward(Field.zeros(g)).coeffs == 0)


def test_dft_single_cosine_gives_two_spikes():
    g = Grid(1, math.pi, 16)
    f = Field(g, np.cos(3 * g.axis()))
    c = np.abs(dft_forward(f).coeffs)
    big = np.flatnonzero(c > 1e-12)
    assert big.tolist() == [3, 13]
    assert c[3] == pytest.approx(c[13], rel=1e-14)


@pytest.mark.parametrize("dim", [1, 2, 3])
@pytest.mark.parametrize("real", [True, False])
def test_dft_roundtrip_and_parseval(dim, real):
    g = Grid(dim, 2.0, 8 if dim == 3 else 16)
    f = random_field(g, dim, real)
    s = dft_forward(f)
    back = dft_inverse(s, real=real)
    assert np.max(np.abs(back.values - f.values)) <= 1e-12 * f.max_abs()
    assert np.linalg.norm(s.coeffs) == pytest.approx(np.linalg.norm(f.values), rel=1e-12)


def test_dft_hermitian_exact_for_real_fields():
    g = Grid(3, 1.0, 8)
    c = dft_forward(random_field(g, 5)).coeffs
    rev = (-np.arange(8)) % 8
    assert np.array_equal(c, np.conj(c[np.ix_(rev, rev, rev)]))


def test_dft_inverse_grid_mismatch():
    with pytest.raises(DomainError):
        dft_inverse(Spectrum(Grid(1, 1.0, 8), np.zeros(10)))


def test_laplacian_symbol():
    g = Grid(2, math.pi, 32)
    x, y = g.coords()
    f = Field(g, np.sin(2 * x) * np.cos(3 * y))
    assert np.allclose(laplacian(f).values, -13 * f.values, atol=1e-11)


def test_gradient_matches_central_differences_second_order():
    errs = []
    for n in (64, 128):
        g = Grid(1, 8.0, n)
        x = g.axis()
        f = Field(g, np.exp(-x**2))
        (d,) = gradient(f)
        h = g.spacing
        fd = (np.roll(f.values, -1) - np.roll(f.values, 1)) / (2 * h)
        errs.append(np.max(np.abs(d.values - fd)))
    assert math.log2(errs[0] / errs[1]) == pytest.approx(2.0, abs=0.1)


def test_real_multiplier_preserves_reality():
    g = Grid(2, 2.0, 16)
    out = apply_multiplier(random_field(g), lambda k: np.exp(-k))
    assert out.is_real


# weighted norms -------------------------------------------------------------

def test_weighted_norm_of_constant_negative_weight():
    g = Grid(1, 6.0, 4096)
    one = Field(g, np.ones(g.shape))
    assert weighted_norm(one, NormSpec(-1)) == pytest.approx(math.sqrt(2 * math.atan(6.0)), rel=1e-6)


def test_weighted_norm_of_constant_positive_weight():
    L = 3.0
    g = Grid(1, L, 4096)
    one = Field(g, np.ones(g.shape))
    assert weighted_norm(one, NormSpec(1)) == pytest.approx(math.sqrt(2 * L + 2 * L**3 / 3), rel=1e-6)


def test_weighted_norm_gaussian_against_quad():
    g = Grid(1, 10.0, 512)
    f = gaussian_source(g, width=1.0)
    ref = quad(lambda x: math.exp(-2 * x * x) * (1 + x * x) ** 2, -np.inf, np.inf)[0]
    assert weighted_norm(f, NormSpec(2)) == pytest.approx(math.sqrt(ref), abs=1e-8)


def test_weighted_h1_adds_gradient():
    g = Grid(1, 10.0, 512)
    f = gaussian_source(g, width=1.0)
    ref = quad(lambda x: (1 + 4 * x * x) * math.exp(-2 * x * x) * (1 + x * x) ** -1, -np.inf, np.inf)[0]
    assert weighted_norm(f, NormSpec(-1, 1)) == pytest.approx(math.sqrt(ref), abs=1e-8)


def test_normspec_validation():
    with pytest.raises(DomainError):
        NormSpec(1.0, 2)


@settings(max_examples=30, deadline=None)
@given(st.floats(-3, 3), st.floats(0, 3), st.integers(0, 1), st.integers(0, 1000))
def test_norm_nesting(s2, ds, k, seed):
    g = Grid(1, 4.0, 32)
    f = random_field(g, seed)
    assert weighted_norm(f, NormSpec(s2, k)) <= weighted_norm(f, NormSpec(s2 + ds, k)) * (1 + 1e-12)


def test_norm_box_truncation_control():
    vals = []
    for L, n in ((10.0, 512), (20.0, 1024)):
        f = gaussian_source(Grid(1, L, n), width=1.0)
        vals.append(weighted_norm(f, NormSpec(2, 1)))
    assert abs(vals[0] - vals[1]) <= 1e-10 * vals[1]


# sources -----------------------------------------------------------------

def test_gaussian_source_zero_and_symmetric():
    g = Grid(1, 10.0, 256)
    assert gaussian_source(g, amplitude=0.0).max_abs() == 0.0
    f = gaussian_source(g, center=0.0, width=1.3).values
    assert np.allclose(f[1:], f[1:][::-1], atol=1e-16)


def test_gaussian_source_l2_closed_form():
    for sigma in (0.5, 1.0):
        f = gaussian_source(Grid(1, 10.0, 1024), width=sigma, amplitude=2.0)
        expected = 2.0 * (math.pi / 2) ** 0.25 * math.sqrt(sigma)
        assert weighted_norm(f, NormSpec(0)) == pytest.approx(expected, rel=1e-12)
        assert GaussianProfile(sigma, 2.0).l2_norm(1) == pytest.approx(expected, rel=1e-15)


def test_gaussian_source_truncation():
    with pytest.raises(TruncationError):
        gaussian_source(Grid(1, 3.0, 64), width=1.0)
    with pytest.raises(TruncationError):
        gaussian_source(Grid(1, 10.0, 64), center=8.0, width=1.0)


def test_scaled_source_amplitudes():
    g = Grid(1, 10.0, 1024)
    assert scaled_source(GaussianProfile(), 1.0, g).max_abs() == pytest.approx(1.0)
    assert scaled_source(GaussianProfile(), 2.0, g).max_abs() == pytest.approx(4.0)


@pytest.mark.parametrize("dim,n", [(1, 2048), (2, 256)])
def test_scaled_source_l2_scaling(dim, n):
    prof = GaussianProfile()
    g = Grid(dim, 8.0, n)
    for w in (1.0, 2.0, 4.0):
        f = scaled_source(prof, w, g)
        assert weighted_norm(f, NormSpec(0)) == pytest.approx(w**1.5 * prof.l2_norm(dim), rel=1e-10)


def test_scaled_source_under_resolved_names_n():
    with pytest.raises(DomainError, match="points_per_dim >= "):
        scaled_source(GaussianProfile(), 8.0, Grid(1, 10.0, 64))


# serialization ------------------------------------------------------------

@pytest.mark.parametrize("real", [True, False])
def test_binary_roundtrip(tmp_path, real):
    g = Grid(2, 1.5, 8)
    f = random_field(g, 3, real)
    write_field(tmp_path / "f.bin", f)
    back = read_field(tmp_path / "f.bin")
    assert back.grid == g and back.is_real == real
    assert np.array_equal(back.values, f.values)


def test_binary_layout(tmp_path):
    g = Grid(1, 2.0, 4)
    write_field(tmp_path / "f.bin", Field(g, np.arange(4.0)))
    raw = (tmp_path / "f.bin").read_bytes()
    assert len(raw) == 4 + 4 + 4 + 8 + 4 + 4 * 8
    assert np.array_equal(np.frombuffer(raw[24:], "<f8"), np.arange(4.0))


def test_csv_roundtrip(tmp_path):
    g = Grid(1, 2.0, 16)
    f = random_field(g, 4, real=False)
    write_field_csv(tmp_path / "f.csv", f)
    back = read_field_csv(tmp_path / "f.csv", 2.0)
    assert np.array_equal(back.values, f.values)
    with pytest.raises(DomainError):
        write_field_csv(tmp_path / "g.csv", Field.zeros(Grid(2, 1.0, 4)))
