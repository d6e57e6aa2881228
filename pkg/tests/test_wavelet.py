import numpy as np
import pytest

from prnulink.wavelet import (FILTERS, dwt2, idwt2, pad_to_multiple,
                              wavedec2, waverec2)


@pytest.mark.parametrize("wavelet", ["haar", "db2", "db4"])
def test_perfect_reconstruction(wavelet):
    rng = np.random.default_rng(0)
    x = rng.normal(size=(64, 96))
    a, details = wavedec2(x, wavelet, levels=3)
    xr = waverec2(a, details, wavelet)
    assert np.abs(xr - x).max() < 1e-9


@pytest.mark.parametrize("wavelet", ["haar", "db2", "db4"])
def test_filters_orthonormal(wavelet):
    h = FILTERS[wavelet]
    assert abs(np.sum(h ** 2) - 1.0) < 1e-12
    # even shifts of the lowpass are orthogonal
    for shift in range(2, len(h), 2):
        assert abs(np.dot(h[:-shift], h[shift:])) < 1e-12


def test_subband_shapes():
    x = np.zeros((32, 48))
    ll, (lh, hl, hh) = dwt2(x)
    for sub in (ll, lh, hl, hh):
        assert sub.shape == (16, 24)


def test_constant_image_has_zero_details():
    x = np.full((32, 32), 7.0)
    ll, details = dwt2(x, "db4")
    for sub in details:
        assert np.abs(sub).max() < 1e-10
    assert np.abs(idwt2(ll, details, "db4") - x).max() < 1e-10


def test_energy_preserved():
    rng = np.random.default_rng(5)
    x = rng.normal(size=(64, 64))
    ll, (lh, hl, hh) = dwt2(x, "db4")
    total = sum(np.sum(s ** 2) for s in (ll, lh, hl, hh))
    assert abs(total - np.sum(x ** 2)) < 1e-6


def test_odd_sizes_rejected():
    with pytest.raises(ValueError):
        dwt2(np.zeros((33, 32)))


def test_pad_to_multiple():
    x = np.arange(15.0).reshape(3, 5)
    padded, (h, w) = pad_to_multiple(x, 4)
    assert (h, w) == (3, 5)
    assert padded.shape == (4, 8)
    assert np.array_equal(padded[:3, :5], x)
    same, _ = pad_to_multiple(np.zeros((8, 8)), 4)
    assert same.shape == (8, 8)
