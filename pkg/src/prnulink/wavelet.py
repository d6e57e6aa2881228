"""Separable 2D discrete wavelet transform with periodic boundary handling.

Orthogonal filter banks only (haar, db2, db4), so synthesis is the exact
transpose of analysis and reconstruction is numerically exact for inputs
whose sides are divisible by 2**levels.
"""

import numpy as np

_SQRT2 = np.sqrt(2.0)

FILTERS = {
    "haar": np.array([1.0, 1.0]) / _SQRT2,
    "db2": np.array(
        [0.48296291314469025, 0.836516303737469,
         0.22414386804185735, -0.12940952255092145]),
    "db4": np.array(
        [0.23037781330885523, 0.7148465705525415,
         0.6308807679295904, -0.02798376941698385,
         -0.18703481171888114, 0.030841381835986965,
         0.032883011666982945, -0.010597401784997278]),
}


def _qmf(h: np.ndarray) -> np.ndarray:
    g = h[::-1].copy()
    g[1::2] *= -1.0
    return g


def _analysis_1d(x, h, g, axis):
    n = x.shape[axis]
    if n % 2 != 0:
        raise ValueError("signal length must be even, got %d" % n)
    keep = (slice(None),) * axis + (slice(0, None, 2),)
    lo = None
    hi = None
    for i in range(len(h)):
        rolled = np.roll(x, -i, axis=axis)[keep]
        if lo is None:
            lo = h[i] * rolled
            hi = g[i] * rolled
        else:
            lo += h[i] * rolled
            hi += g[i] * rolled
    return lo, hi


def _synthesis_1d(lo, hi, h, g, axis):
    shape = list(lo.shape)
    shape[axis] *= 2
    up_lo = np.zeros(shape)
    up_hi = np.zeros(shape)
    even = (slice(None),) * axis + (slice(0, None, 2),)
    up_lo[even] = lo
    up_hi[even] = hi
    out = np.zeros(shape)
    for i in range(len(h)):
        out += h[i] * np.roll(up_lo, i, axis=axis)
        out += g[i] * np.roll(up_hi, i, axis=axis)
    return out


def dwt2(x: np.ndarray, wavelet: str = "db4"):
    """One analysis level: returns (approx, (horiz, vert, diag))."""
    h = FILTERS[wavelet]
    g = _qmf(h)
    lo, hi = _analysis_1d(x, h, g, axis=1)
    ll, lh = _analysis_1d(lo, h, g, axis=0)
    hl, hh = _analysis_1d(hi, h, g, axis=0)
    return ll, (lh, hl, hh)


def idwt2(ll: np.ndarray, details, wavelet: str = "db4") -> np.ndarray:
    h = FILTERS[wavelet]
    g = _qmf(h)
    lh, hl, hh = details
    lo = _synthesis_1d(ll, lh, h, g, axis=0)
    hi = _synthesis_1d(hl, hh, h, g, axis=0)
    return _synthesis_1d(lo, hi, h, g, axis=1)


def wavedec2(x: np.ndarray, wavelet: str = "db4", levels: int = 1):
    """Multi-level decomposition; details returned coarsest-first."""
    details = []
    a = x
    for _ in range(levels):
        a, d = dwt2(a, wavelet)
        details.append(d)
    return a, details[::-1]


def waverec2(a: np.ndarray, details, wavelet: str = "db4") -> np.ndarray:
    for d in details:
        a = idwt2(a, d, wavelet)
    return a


def pad_to_multiple(x: np.ndarray, multiple: int):
    """Symmetric-pad both axes up to the next multiple; returns (padded, (h, w))."""
    h, w = x.shape
    ph = (-h) % multiple
    pw = (-w) % multiple
    if ph == 0 and pw == 0:
        return x, (h, w)
    return np.pad(x, ((0, ph), (0, pw)), mode="symmetric"), (h, w)
