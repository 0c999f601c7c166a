import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra import numpy as hnp

from scaleinv import spectral as sp
from scaleinv.errors import GeometryError, InsufficientDataError

from oracles import dft2_loops, ols_slope, ring_average_loops

pow2 = st.sampled_from([1, 2, 4, 8, 16, 32])


def fields(m):
    return hnp.arrays(np.float64, (m, m), elements=st.floats(-100, 100))


def test_naive_constant():
    out = sp.dft2_naive(np.full((4, 4), 2.5))
    assert out[0, 0] == pytest.approx(2.5 * 16)
    assert np.abs(out.ravel()[1:]).max() < 1e-12


def test_naive_impulse():
    f = np.zeros((8, 8))
    f[0, 0] = 1
    np.testing.assert_allclose(sp.dft2_naive(f), np.ones((8, 8)), atol=1e-12)


def test_naive_two_by_two():
    np.testing.assert_allclose(sp.dft2_naive([[1.0, 0.0], [0.0, 0.0]]), np.ones((2, 2)), atol=0)


@pytest.mark.parametrize("m", [2, 3, 4, 5])
def test_naive_matches_loops(m, rng):
    f = rng.standard_normal((m, m))
    np.testing.assert_allclose(sp.dft2_naive(f), dft2_loops(f), atol=1e-10)


def test_fft_matches_naive_8(rng):
    for _ in range(20):
        f = rng.standard_normal((8, 8))
        np.testing.assert_allclose(sp.fft2(f), sp.dft2_naive(f), rtol=1e-9, atol=1e-9)


def test_fft_constant():
    out = sp.fft2(np.full((16, 16), -1.5))
    assert out[0, 0] == pytest.approx(-1.5 * 256)
    assert np.abs(out.ravel()[1:]).max() < 1e-10


def test_fft_batch_matches_single(rng):
    batch = rng.standard_normal((3, 16, 16))
    out = sp.fft2(batch)
    for i in range(3):
        np.testing.assert_array_equal(out[i], sp.fft2(batch[i]))


def test_fft_rejects_non_pow2(rng):
    f = rng.standard_normal((6, 6))
    with pytest.raises(GeometryError):
        sp.fft2(f)
    np.testing.assert_allclose(sp.fft2(f, allow_naive=True), sp.dft2_naive(f))
    with pytest.raises(GeometryError):
        sp.fft2(np.zeros((4, 8)))


@given(st.data(), pow2)
def test_fft_equals_naive(data, m):
    f = data.draw(fields(m))
    ref = sp.dft2_naive(f)
    scale = max(1.0, np.abs(ref).max())
    np.testing.assert_allclose(sp.fft2(f), ref, rtol=0, atol=1e-9 * scale)


@given(st.data(), pow2, st.floats(-10, 10), st.floats(-10, 10))
def test_fft_linear(data, m, a, b):
    f = data.draw(fields(m))
    g = data.draw(fields(m))
    lhs = sp.fft2(a * f + b * g)
    rhs = a * sp.fft2(f) + b * sp.fft2(g)
    scale = max(1.0, np.abs(lhs).max())
    np.testing.assert_allclose(lhs, rhs, rtol=0, atol=1e-9 * scale)


@given(st.data(), st.sampled_from([2, 4, 8, 16, 32, 64]))
def test_parseval(data, m):
    f = data.draw(fields(m))
    energy = (f ** 2).sum()
    spec = (np.abs(sp.fft2(f)) ** 2).sum() / (m * m)
    assert spec == pytest.approx(energy, rel=1e-9, abs=1e-300)


def test_constant_patch_demeaned():
    s = sp.power_spectrum_2d([np.full((8, 8), 4.0)], demean=True)
    assert np.all(s.power == 0)


def test_impulse_patch_flat():
    f = np.zeros((4, 4))
    f[0, 0] = 1.0
    s = sp.power_spectrum_2d([f], demean=False)
    np.testing.assert_allclose(s.power, np.full((4, 4), 1 / 16), rtol=0, atol=1e-15)


def test_average_with_itself(rng):
    f = rng.standard_normal((16, 16))
    one = sp.power_spectrum_2d([f])
    two = sp.power_spectrum_2d([f, f])
    np.testing.assert_allclose(two.power, one.power, rtol=1e-15)
    assert two.count == 2


def test_size_mismatch():
    with pytest.raises(GeometryError):
        sp.power_spectrum_2d([np.zeros((4, 4)), np.zeros((8, 8))])
    with pytest.raises(InsufficientDataError):
        sp.power_spectrum_2d([])


def test_accumulator_merge_equals_single_pass(rng):
    patches = rng.standard_normal((6, 8, 8))
    whole = sp.SpectrumAccumulator(8).add(patches).result()
    a = sp.SpectrumAccumulator(8).add(patches[:2])
    b = sp.SpectrumAccumulator(8).add(patches[2:])
    np.testing.assert_allclose(a.merge(b).result().power, whole.power, rtol=1e-14)


def test_hann_window_normalization(rng):
    # white noise keeps unit mean power under the window normalization
    patches = rng.standard_normal((400, 32, 32))
    s = sp.SpectrumAccumulator(32, demean=False, window="hann").add(patches).result()
    assert s.power.mean() == pytest.approx(1.0, abs=0.03)
    with pytest.raises(ValueError):
        sp.SpectrumAccumulator(8, window="kaiser")


@given(st.data(), st.sampled_from([4, 8, 16]), st.booleans())
def test_power_nonnegative_and_point_symmetric(data, m, demean):
    f = data.draw(fields(m))
    p = sp.power_spectrum_2d([f], demean=demean).power
    assert np.all(p >= 0)
    # reflection through the centre cell (m//2, m//2); row/col 0 is its own partner modulo m
    idx = (m - np.arange(m)) % m
    refl = p[np.ix_(idx, idx)]
    scale = max(p.max(), 1e-300)
    np.testing.assert_allclose(p, refl, rtol=0, atol=1e-9 * scale)


def test_ring_constant():
    s = sp.azimuthal_average(sp.PowerSpectrum2D(np.full((16, 16), 3.5), 1))
    np.testing.assert_allclose(s.power, 3.5)
    assert s.freqs.tolist() == list(range(1, 9))


def test_ring_three_only():
    m = 16
    grid = (sp.ring_index(m) == 3).astype(float)
    s = sp.azimuthal_average(sp.PowerSpectrum2D(grid, 1))
    expected = np.zeros(m // 2)
    expected[2] = 1.0
    np.testing.assert_array_equal(s.power, expected)


def test_ring_exclude_axes():
    m = 16
    grid = np.zeros((m, m))
    grid[m // 2, :] = 1
    grid[:, m // 2] = 1
    s = sp.azimuthal_average(sp.PowerSpectrum2D(grid, 1), exclude_axes=True)
    assert np.all(s.power == 0)


@given(st.sampled_from([4, 8, 16, 32]), st.data(), st.booleans())
def test_ring_average_matches_loops(m, data, exclude):
    grid = data.draw(hnp.arrays(np.float64, (m, m), elements=st.floats(0, 10)))
    s = sp.azimuthal_average(sp.PowerSpectrum2D(grid, 1), exclude_axes=exclude)
    ref = ring_average_loops(grid, exclude)
    assert s.freqs.tolist() == list(ref)
    np.testing.assert_allclose(s.power, list(ref.values()), rtol=1e-12)
    assert np.all(np.diff(s.freqs) > 0) and s.freqs[0] > 0
    assert len(s.power) == len(s.freqs)


@given(st.sampled_from([8, 16, 32]), hnp.arrays(np.float64, 64, elements=st.floats(0, 50)))
def test_isotropic_grid_reproduced(m, radial):
    grid = radial[sp.ring_index(m)]
    s = sp.azimuthal_average(sp.PowerSpectrum2D(grid, 1))
    np.testing.assert_allclose(s.power, radial[1:m // 2 + 1], rtol=1e-13, atol=0)


def _law(exponent, n=60):
    f = np.arange(1, n + 1, dtype=float)
    return sp.Spectrum1D(f, f ** exponent, np.ones(n, dtype=int))


def test_fit_exact_law():
    fit = sp.fit_slope(_law(-2.0), 1, 60)
    assert fit.slope == pytest.approx(-2.0, abs=1e-9)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)
    assert fit.n_points == 60


def test_fit_uses_only_positive_in_range():
    s = _law(-1.0, 20)
    s.power[5] = 0.0
    s.power[0] = 1e9
    fit = sp.fit_slope(s, 2, 10)
    assert fit.n_points == 8
    assert fit.slope == pytest.approx(-1.0, abs=1e-12)


def test_fit_too_few_points():
    with pytest.raises(InsufficientDataError):
        sp.fit_slope(_law(-1.0, 10), 4, 5)


def test_fit_default_range():
    s = _law(-3.0, 64)
    s.size = 128
    fit = sp.fit_slope(s)
    assert (fit.f_lo, fit.f_hi) == (4.0, 32.0)


@given(hnp.arrays(np.float64, 30, elements=st.floats(1e-3, 1e3)), st.floats(1e-6, 1e6))
def test_fit_scale_invariant(power, k):
    f = np.arange(1, 31, dtype=float)
    a = sp.fit_slope(sp.Spectrum1D(f, power, np.ones(30)), 1, 30)
    b = sp.fit_slope(sp.Spectrum1D(f, k * power, np.ones(30)), 1, 30)
    assert b.slope == pytest.approx(a.slope, abs=1e-9)
    assert b.intercept == pytest.approx(a.intercept + np.log10(k), abs=1e-9)


@given(hnp.arrays(np.float64, 25, elements=st.floats(1e-3, 1e3)))
def test_fit_matches_polyfit(power):
    f = np.arange(1, 26, dtype=float)
    fit = sp.fit_slope(sp.Spectrum1D(f, power, np.ones(25)), 1, 25)
    assert fit.slope == pytest.approx(ols_slope(np.log10(f), np.log10(power)), abs=1e-8)
    assert 0 <= fit.r_squared <= 1


def test_rescale_examples():
    r = sp.rescale_spectrum(_law(-2.0), 3.0)
    np.testing.assert_allclose(r.power, r.freqs ** -5.0, rtol=1e-14)
    base = _law(-2.0)
    np.testing.assert_array_equal(sp.rescale_spectrum(base, 0.0).power, base.power)
    np.testing.assert_allclose(sp.rescale_spectrum(_law(2.7), 2.7).power, 1.0, rtol=1e-13)


@given(hnp.arrays(np.float64, 40, elements=st.floats(1e-3, 1e3)), st.floats(0, 5))
def test_rescale_shifts_slope(power, gamma):
    f = np.arange(1, 41, dtype=float)
    s = sp.Spectrum1D(f, power, np.ones(40))
    raw = sp.fit_slope(s, 4, 40)
    res = sp.fit_slope(sp.rescale_spectrum(s, gamma), 4, 40)
    assert res.slope == pytest.approx(raw.slope - gamma, abs=1e-9)


def test_white_noise_flat(rng):
    patches = rng.standard_normal((200, 128, 128))
    s = sp.azimuthal_average(sp.power_spectrum_2d(patches))
    assert abs(sp.fit_slope(s).slope) < 0.1
