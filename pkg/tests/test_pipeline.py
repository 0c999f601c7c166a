import numpy as np
import pytest

from scaleinv import multiscale as ms, pipeline
from scaleinv.errors import DegenerateInputError, InputError
from scaleinv.imageio import IntensityImage, write_pgm, write_raw_u16


def _noise_loaders(n, shape=(96, 128), seed=0):
    rng = np.random.default_rng(seed)
    return [pipeline.array_loader(rng.standard_normal(shape)) for _ in range(n)]


def test_find_images(tmp_path):
    write_pgm(tmp_path / "b.pgm", np.ones((2, 2), dtype=int))
    write_raw_u16(tmp_path / "a.iml", IntensityImage(np.ones((2, 2))))
    (tmp_path / "notes.txt").write_text("x")
    found = pipeline.find_images(tmp_path)
    assert [p.name for p in found] == ["a.iml", "b.pgm"]
    assert pipeline.find_images(str(tmp_path / "*.pgm")) == [tmp_path / "b.pgm"]
    assert pipeline.find_images(tmp_path / "a.iml") == [tmp_path / "a.iml"]


def test_field_loader_transform(tmp_path):
    write_pgm(tmp_path / "g.pgm", np.array([[1, 1], [4, 4]]))
    logc = pipeline.field_loader(tmp_path / "g.pgm")()
    np.testing.assert_allclose(logc, np.log([[0.5, 0.5], [2, 2]]), atol=1e-15)
    raw = pipeline.field_loader(tmp_path / "g.pgm", transform="none")()
    np.testing.assert_array_equal(raw, [[1, 1], [4, 4]])
    with pytest.raises(InputError):
        pipeline.field_loader(tmp_path / "g.pgm", transform="sqrt")


def test_empty_dataset():
    for fn in (pipeline.pixel_stats, pipeline.gradient_stats):
        with pytest.raises(InputError):
            fn([], [1])
    with pytest.raises(InputError):
        pipeline.ensemble_spectrum([])


def test_constant_images():
    loaders = [pipeline.array_loader(np.full((40, 40), 5.0), transform="log")] * 2
    with pytest.raises(DegenerateInputError):
        pipeline.pixel_stats(loaders, [1, 2])
    g = pipeline.gradient_stats(loaders, [1, 2])
    for st in g.values():
        assert st.hist.masses[0] == 1.0


def test_pixel_stats_standardized():
    out = pipeline.pixel_stats(_noise_loaders(3), [1, 2, 4], patches_per_image=50, seed=1)
    for n, st in out.items():
        assert st.sample.values.size == 150
        assert abs(st.sample.values.mean()) < 1e-9 and abs(st.sample.values.std() - 1) < 1e-9
        assert st.hist.masses.sum() == pytest.approx(1.0, abs=1e-12)
    # block means of unit white noise have sd 1/N
    assert out[4].sample.sigma == pytest.approx(0.25, rel=0.2)


def test_white_noise_gradients_rayleigh():
    # independent Monte-Carlo reference: magnitudes of pairs of unit normals
    mc = np.hypot(*np.random.default_rng(99).standard_normal((2, 200_000)))
    ref = ms.histogram(mc, 0.0, 6.0, 121)
    g = pipeline.gradient_stats(_noise_loaders(20, (128, 128)), [1], patches_per_image=200, seed=3,
                                standardize_components=True)
    assert ms.ks_distance(g[1].hist, ref) < 0.05
    assert ms.ks_distance(g[1].hist, ms.reference_histogram("rayleigh", 0.0, 6.0, 121)) < 0.05


def test_spectrum_white_noise_flat():
    res = pipeline.ensemble_spectrum(_noise_loaders(10, (256, 256)), patch_size=128, patches_per_image=20, seed=2)
    assert abs(res.fit.slope) < 0.1
    assert res.spec2d.count == 200


def test_impulse_flat_spectrum():
    img = np.zeros((16, 16))
    img[0, 0] = 1.0
    res = pipeline.ensemble_spectrum([pipeline.array_loader(img)], patch_size=16, patches_per_image=1,
                                     demean=False, exclude_axes=False)
    p = res.spec1d.power
    assert np.all(np.abs(p - p[0]) <= 1e-9 * p[0])


def test_thread_invariance():
    loaders = _noise_loaders(5)
    a = pipeline.pixel_stats(loaders, [1, 2], seed=5, threads=1)
    b = pipeline.pixel_stats(loaders, [1, 2], seed=5, threads=4)
    for n in a:
        np.testing.assert_array_equal(a[n].sample.values, b[n].sample.values)
    s1 = pipeline.ensemble_spectrum(loaders, 64, seed=5, threads=1)
    s4 = pipeline.ensemble_spectrum(loaders, 64, seed=5, threads=4)
    np.testing.assert_array_equal(s1.spec2d.power, s4.spec2d.power)
