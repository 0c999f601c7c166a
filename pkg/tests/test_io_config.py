import numpy as np
import pytest
from hypothesis import given, strategies as st

from scaleinv import csvio, multiscale as ms, spectral
from scaleinv.config import ConfigError, coerce, dump_kv, format_value, parse_kv
from scaleinv.runtime import derive_rng, derive_seed_sequence, parallel_map


def test_parse_kv():
    text = "# run\nside = 512\nsource.kind=power_law\n\ngammas = 2.5, 3\nn_max = none\n"
    assert parse_kv(text) == {"side": "512", "source.kind": "power_law", "gammas": "2.5, 3", "n_max": "none"}
    with pytest.raises(ConfigError):
        parse_kv("side 512")
    with pytest.raises(ConfigError):
        parse_kv("= 3")


def test_coerce():
    assert coerce("512", int) == 512
    assert coerce("1e8", int) == 10**8
    assert coerce("2.5, 3", [float]) == [2.5, 3.0]
    assert coerce("none", int, optional=True) is None
    assert coerce("yes", bool) is True and coerce("off", bool) is False
    for text, kind in [("abc", int), ("maybe", bool), ("none", int)]:
        with pytest.raises(ConfigError):
            coerce(text, kind)


@given(st.dictionaries(st.from_regex(r"[a-z][a-z_.]{0,10}", fullmatch=True),
                       st.one_of(st.integers(-10**6, 10**6), st.floats(allow_nan=False, allow_infinity=False),
                                 st.booleans(), st.none(), st.lists(st.integers(0, 99), min_size=1, max_size=4))))
def test_dump_parse_roundtrip(values):
    parsed = parse_kv(dump_kv(values))
    assert parsed == {k: format_value(v) for k, v in values.items()}
    for k, v in values.items():
        if isinstance(v, float):
            assert coerce(parsed[k], float) == v


def test_histogram_csv(tmp_path):
    h = ms.histogram([0.1, 0.2, 0.7], 0.0, 1.0, 4)
    csvio.write_histogram(tmp_path / "h.csv", h)
    centers, masses = csvio.read_histogram(tmp_path / "h.csv")
    np.testing.assert_array_equal(centers, h.centers)
    np.testing.assert_array_equal(masses, h.masses)
    assert (tmp_path / "h.csv").read_text().splitlines()[0] == "bin_center,mass"


@given(st.lists(st.floats(1e-300, 1e300), min_size=4, max_size=4))
def test_spectrum_csv_exact(tmp_path_factory, vals):
    d = tmp_path_factory.mktemp("csv")
    s2 = spectral.PowerSpectrum2D(np.array(vals).reshape(2, 2), 1)
    csvio.write_spectrum2d(d / "s2.csv", s2)
    np.testing.assert_array_equal(csvio.read_spectrum2d(d / "s2.csv").power, s2.power)
    s1 = spectral.Spectrum1D(np.arange(1.0, 5.0), np.array(vals), np.arange(4))
    csvio.write_spectrum1d(d / "s1.csv", s1)
    back = csvio.read_spectrum1d(d / "s1.csv")
    np.testing.assert_array_equal(back.power, s1.power)
    np.testing.assert_array_equal(back.counts, s1.counts)


def test_slopefit_csv(tmp_path):
    fit = spectral.SlopeFit(-2.0123, 1.5, 0.99, 4.0, 32.0, 29)
    csvio.write_slopefit(tmp_path / "f.csv", fit)
    back = csvio.read_slopefit(tmp_path / "f.csv")
    assert (back.slope, back.intercept, back.r_squared, back.f_lo, back.f_hi) == (-2.0123, 1.5, 0.99, 4.0, 32.0)
    assert (tmp_path / "f.csv").read_text().splitlines()[0] == "slope,intercept,r2,f_lo,f_hi"


def test_spectrum_files(tmp_path):
    for tag in ["2.5", "3", "x"]:
        (tmp_path / f"spectrum_gamma{tag}.csv").write_text("freq,power,count\n")
    files = csvio.spectrum_files(tmp_path)
    assert list(files) == [2.5, 3.0]
    assert csvio.gamma_tag(3.0) == "3" and csvio.gamma_tag(2.5) == "2.5"


def test_seed_derivation():
    a = derive_rng(7, 1, 2).random(4)
    np.testing.assert_array_equal(a, derive_rng(7, 1, 2).random(4))
    assert not np.array_equal(a, derive_rng(7, 2, 1).random(4))
    nested = derive_seed_sequence(derive_seed_sequence(7, 1), 2)
    np.testing.assert_array_equal(np.random.default_rng(nested).random(4), a)


@given(st.lists(st.integers(), max_size=30), st.integers(1, 6))
def test_parallel_map_order(items, threads):
    assert parallel_map(lambda x: x * 2, items, threads) == [x * 2 for x in items]
