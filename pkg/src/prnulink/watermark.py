"""Representative invisible watermarking schemes and the survival bench.

Two spatial schemes (sequential LSB and keyed-permutation LSB) and two
transform-domain schemes (block-DCT coefficient ordering and an additive
wavelet scheme) are run through simulated sharing channels to reproduce
the classic survival pattern: spatial methods die under recompression,
transform methods hold up far better.
"""

from dataclasses import dataclass

import numpy as np
from scipy.fft import dctn, idctn

from .channel import SNChannelProfile, UploadContext, apply_channel
from .errors import CapacityExceeded, ImageTooSmall
from .image import GRAY8, ImageBuffer, decode_image, encode_png, from_array
from .metadata import MetadataMap
from .wavelet import dwt2, idwt2, pad_to_multiple

SURVIVED = "S"
DESTROYED = "D"
EMBED_FAILED = "F"

DCT_MARGIN = 8.0
DWT_ALPHA = 0.2
DWT_T1 = 40.0
DWT_T2 = 50.0


@dataclass(frozen=True)
class WatermarkPayload:
    """Bit sequence plus the key used by keyed schemes."""

    bits: tuple
    key: int = 0

    def __post_init__(self):
        if len(self.bits) == 0:
            raise ValueError("payload must be non-empty")
        if any(b not in (0, 1) for b in self.bits):
            raise ValueError("payload bits must be 0/1")


def payload_from_text(text: str, key: int = 0) -> WatermarkPayload:
    bits = []
    for byte in text.encode("utf-8"):
        bits.extend((byte >> i) & 1 for i in range(7, -1, -1))
    return WatermarkPayload(tuple(bits), key)


def psnr(a: ImageBuffer, b: ImageBuffer) -> float:
    """Peak signal-to-noise ratio in dB; inf for identical images."""
    if a.pixels.shape != b.pixels.shape:
        raise ValueError("shapes differ")
    mse = np.mean((a.pixels.astype(np.float64)
                   - b.pixels.astype(np.float64)) ** 2)
    if mse == 0:
        return float("inf")
    return float(10.0 * np.log10(255.0 ** 2 / mse))


# ---------------------------------------------------------------------------
# Spatial schemes

def _check_capacity(img: ImageBuffer, n_bits: int) -> int:
    capacity = img.width * img.height * img.n_channels
    if n_bits > capacity:
        raise CapacityExceeded(
            "payload of %d bits exceeds capacity %d" % (n_bits, capacity))
    return capacity


def lsb_embed(img: ImageBuffer, payload: WatermarkPayload) -> ImageBuffer:
    """Replace least significant bits in raster order."""
    _check_capacity(img, len(payload.bits))
    flat = img.pixels.reshape(-1).copy()
    bits = np.asarray(payload.bits, dtype=np.uint8)
    flat[:len(bits)] = (flat[:len(bits)] & 0xFE) | bits
    return from_array(flat.reshape(img.pixels.shape))


def lsb_extract(img: ImageBuffer, length: int, key: int = 0) -> tuple:
    """Read back raster-order LSBs (the key is unused by this scheme)."""
    _check_capacity(img, length)
    flat = img.pixels.reshape(-1)
    return tuple(int(v) for v in (flat[:length] & 1))


def _permutation(capacity: int, key: int) -> np.ndarray:
    return np.random.default_rng(key).permutation(capacity)


def hideseek_embed(img: ImageBuffer, payload: WatermarkPayload) -> ImageBuffer:
    """LSB replacement along a key-seeded pixel permutation."""
    capacity = _check_capacity(img, len(payload.bits))
    order = _permutation(capacity, payload.key)
    flat = img.pixels.reshape(-1).copy()
    bits = np.asarray(payload.bits, dtype=np.uint8)
    idx = order[:len(bits)]
    flat[idx] = (flat[idx] & 0xFE) | bits
    return from_array(flat.reshape(img.pixels.shape))


def hideseek_extract(img: ImageBuffer, length: int, key: int) -> tuple:
    capacity = _check_capacity(img, length)
    order = _permutation(capacity, key)
    flat = img.pixels.reshape(-1)
    return tuple(int(v) for v in (flat[order[:length]] & 1))


def ber(a, b) -> float:
    """Bit error rate between two equal-length bit sequences."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError("bit sequences differ in length")
    return float(np.mean(a != b))


# ---------------------------------------------------------------------------
# Luminance carrier for the transform schemes

def _luma_f64(img: ImageBuffer) -> np.ndarray:
    if img.channels == GRAY8:
        return img.pixels.astype(np.float64)
    return img.pixels.astype(np.float64) @ np.array([0.299, 0.587, 0.114])


def _apply_luma_delta(img: ImageBuffer, new_luma: np.ndarray) -> ImageBuffer:
    """Write a modified luminance back by adding the delta to each channel."""
    delta = new_luma - _luma_f64(img)
    if img.channels == GRAY8:
        out = img.pixels.astype(np.float64) + delta
    else:
        out = img.pixels.astype(np.float64) + delta[:, :, None]
    return from_array(np.clip(np.floor(out + 0.5), 0, 255).astype(np.uint8))


# ---------------------------------------------------------------------------
# Block-DCT coefficient-ordering scheme (readable)

_PAIR_A = (2, 1)
_PAIR_B = (1, 2)


def _block_dct(y: np.ndarray):
    h8, w8 = (y.shape[0] // 8) * 8, (y.shape[1] // 8) * 8
    blocks = y[:h8, :w8].reshape(h8 // 8, 8, w8 // 8, 8).transpose(0, 2, 1, 3)
    return dctn(blocks, axes=(2, 3), norm="ortho"), (h8, w8)


def _block_idct(coeffs: np.ndarray, y: np.ndarray, dims) -> np.ndarray:
    h8, w8 = dims
    rec = idctn(coeffs, axes=(2, 3), norm="ortho")
    out = y.copy()
    out[:h8, :w8] = rec.transpose(0, 2, 1, 3).reshape(h8, w8)
    return out


def dct_embed(img: ImageBuffer, payload: WatermarkPayload,
              margin: float = DCT_MARGIN) -> ImageBuffer:
    """Encode one payload bit per 8x8 block via a mid-frequency pair order.

    Bit 1 forces coeff(2,1) > coeff(1,2) by at least ``margin``, bit 0 the
    reverse; the payload cycles over all blocks for redundancy.
    """
    if img.width < 8 or img.height < 8:
        raise ImageTooSmall("block scheme needs at least 8x8 pixels")
    y = _luma_f64(img)
    coeffs, dims = _block_dct(y)
    n0, n1 = coeffs.shape[:2]
    n_blocks = n0 * n1
    bits = payload.bits
    if len(bits) > n_blocks:
        raise CapacityExceeded("payload of %d bits exceeds %d blocks"
                               % (len(bits), n_blocks))
    flat = coeffs.reshape(n_blocks, 8, 8)
    ca = flat[:, _PAIR_A[0], _PAIR_A[1]].copy()
    cb = flat[:, _PAIR_B[0], _PAIR_B[1]].copy()
    want = np.resize(np.asarray(bits, dtype=np.int64), n_blocks)
    # minimal adjustment: blocks already ordered with enough gap stay
    # untouched, the rest collapse to midpoint +- margin/2
    diff = ca - cb
    mid = (ca + cb) / 2.0
    ok = np.where(want == 1, diff >= margin, -diff >= margin)
    hi = mid + margin / 2.0
    lo = mid - margin / 2.0
    flat[:, _PAIR_A[0], _PAIR_A[1]] = np.where(
        ok, ca, np.where(want == 1, hi, lo))
    flat[:, _PAIR_B[0], _PAIR_B[1]] = np.where(
        ok, cb, np.where(want == 1, lo, hi))
    marked = _block_idct(flat.reshape(coeffs.shape), y, dims)
    return _apply_luma_delta(img, marked)


def dct_detect(img: ImageBuffer, length: int):
    """Majority-vote readback; returns (bits, confidence).

    Confidence is the fraction of blocks agreeing with their bit's
    majority, 1.0 when every redundant copy votes the same way.
    """
    if img.width < 8 or img.height < 8:
        raise ImageTooSmall("block scheme needs at least 8x8 pixels")
    coeffs, _ = _block_dct(_luma_f64(img))
    n_blocks = coeffs.shape[0] * coeffs.shape[1]
    if length > n_blocks:
        raise CapacityExceeded("requested %d bits from %d blocks"
                               % (length, n_blocks))
    flat = coeffs.reshape(n_blocks, 8, 8)
    votes_one = flat[:, _PAIR_A[0], _PAIR_A[1]] > flat[:, _PAIR_B[0], _PAIR_B[1]]
    ones = np.zeros(length, dtype=np.int64)
    totals = np.zeros(length, dtype=np.int64)
    slots = np.arange(n_blocks) % length
    np.add.at(ones, slots, votes_one.astype(np.int64))
    np.add.at(totals, slots, 1)
    bits = (2 * ones > totals).astype(int)
    agree = np.where(bits == 1, ones, totals - ones)
    confidence = float(agree.sum() / totals.sum())
    return tuple(int(b) for b in bits), confidence


# ---------------------------------------------------------------------------
# Additive wavelet scheme (detectable)

@dataclass(frozen=True)
class DwtDetection:
    detected: bool
    correlation: float
    threshold: float


def _dwt_subbands(img: ImageBuffer):
    if img.width < 64 or img.height < 64:
        raise ImageTooSmall("wavelet scheme needs at least 64x64 pixels")
    y = _luma_f64(img)
    padded, (h, w) = pad_to_multiple(y, 2)
    ll, details = dwt2(padded, "db4")
    return ll, details, (h, w)


def dwt_embed(img: ImageBuffer, key: int, alpha: float = DWT_ALPHA,
              t1: float = DWT_T1) -> ImageBuffer:
    """Add a key-seeded pseudo-random sequence to strong detail coefficients.

    Each detail coefficient with |c| > t1 becomes c + alpha * |c| * x, with
    x drawn N(0,1) from the key, so the mark rides the image's own edges.
    """
    ll, details, (h, w) = _dwt_subbands(img)
    rng = np.random.default_rng(key)
    marked = []
    for sub in details:
        x = rng.normal(0.0, 1.0, sub.shape)
        marked.append(np.where(np.abs(sub) > t1,
                               sub + alpha * np.abs(sub) * x, sub))
    rec = idwt2(ll, tuple(marked), "db4")[:h, :w]
    return _apply_luma_delta(img, rec)


def dwt_detect(img: ImageBuffer, key: int, alpha: float = DWT_ALPHA,
               t2: float = DWT_T2) -> DwtDetection:
    """Correlate strong detail coefficients against the keyed sequence.

    Detection compares the mean correlation z against the data-dependent
    threshold rho = alpha/(2M) * sum|c|, the midpoint between the expected
    unmarked (0) and marked (2*rho) responses.
    """
    _, details, _ = _dwt_subbands(img)
    rng = np.random.default_rng(key)
    num = 0.0
    abs_sum = 0.0
    count = 0
    for sub in details:
        x = rng.normal(0.0, 1.0, sub.shape)
        mask = np.abs(sub) > t2
        num += float(np.sum(sub[mask] * x[mask]))
        abs_sum += float(np.sum(np.abs(sub[mask])))
        count += int(mask.sum())
    if count == 0:
        return DwtDetection(False, 0.0, 0.0)
    z = num / count
    rho = alpha * abs_sum / (2.0 * count)
    return DwtDetection(bool(z > rho), z, rho)


# ---------------------------------------------------------------------------
# Survival grid

@dataclass(frozen=True)
class Scheme:
    """An embed/recover pair; readable schemes must return the exact bits."""

    name: str
    readable: bool
    embed: object
    recover: object  # (img, payload) -> bool


def _lsb_ok(img, payload):
    return lsb_extract(img, len(payload.bits)) == tuple(payload.bits)


def _hideseek_ok(img, payload):
    return hideseek_extract(img, len(payload.bits),
                            payload.key) == tuple(payload.bits)


def _dct_ok(img, payload):
    bits, _ = dct_detect(img, len(payload.bits))
    return bits == tuple(payload.bits)


def _dwt_ok(img, payload):
    return dwt_detect(img, payload.key).detected


SCHEMES = {
    "lsb": Scheme("lsb", True,
                  lambda img, p: lsb_embed(img, p), _lsb_ok),
    "hideseek": Scheme("hideseek", True,
                       lambda img, p: hideseek_embed(img, p), _hideseek_ok),
    "dct": Scheme("dct", True,
                  lambda img, p: dct_embed(img, p), _dct_ok),
    "dwt": Scheme("dwt", False,
                  lambda img, p: dwt_embed(img, p.key), _dwt_ok),
}


@dataclass(frozen=True)
class SurvivalGrid:
    """Survived/Destroyed/EmbedFailed per (platform, scheme, class)."""

    sn_ids: tuple
    columns: tuple  # (scheme, resolution_class) pairs
    cells: dict     # (sn_id, scheme, class) -> "S" | "D" | "F"

    def to_csv(self) -> str:
        header = "sn," + ",".join("%s:%s" % col for col in self.columns)
        lines = [header]
        for sn in self.sn_ids:
            row = [sn]
            for scheme, cls in self.columns:
                row.append(self.cells[(sn, scheme, cls)])
            lines.append(",".join(row))
        return "\n".join(lines) + "\n"


def run_survival_grid(scheme_names, profiles, corpus_by_class,
                      payload: WatermarkPayload,
                      ctx: UploadContext | None = None) -> SurvivalGrid:
    """Embed, push through each channel, and try to get the mark back.

    Marked images travel in a lossless container (as the embedding tools
    write them), so identity channels return them bit-exact; compressing
    channels re-encode regardless. A cell is Survived only if recovery
    succeeds on every corpus image of its class (exact bits for readable
    schemes, a positive detection for detectable ones); an embedding error
    marks the whole cell as failed.
    """
    if ctx is None:
        ctx = UploadContext("bench", 1_500_000_000)
    classes = tuple(corpus_by_class.keys())
    columns = tuple((name, cls) for name in scheme_names for cls in classes)
    cells = {}
    marked_cache = {}
    for name in scheme_names:
        scheme = SCHEMES[name]
        for cls in classes:
            entry = []
            failed = False
            for img in corpus_by_class[cls]:
                try:
                    marked = scheme.embed(img, payload)
                except CapacityExceeded:
                    failed = True
                    break
                entry.append(decode_image(encode_png(marked)))
            marked_cache[(name, cls)] = None if failed else entry
    for profile in profiles:
        for name in scheme_names:
            scheme = SCHEMES[name]
            for cls in classes:
                marked = marked_cache[(name, cls)]
                if marked is None:
                    cells[(profile.sn_id, name, cls)] = EMBED_FAILED
                    continue
                ok = True
                for img in marked:
                    out, _, _ = apply_channel(img, MetadataMap(), "img",
                                              profile, ctx)
                    if not scheme.recover(out, payload):
                        ok = False
                        break
                cells[(profile.sn_id, name, cls)] = SURVIVED if ok \
                    else DESTROYED
    return SurvivalGrid(tuple(p.sn_id for p in profiles), columns, cells)
