"""Image decoding/encoding, pixel model, and the synthetic camera sensor.

Decoded rasters are 8-bit numpy arrays, ``(h, w)`` for grayscale and
``(h, w, 3)`` for RGB. All operations are pure functions: encoders are
deterministic for identical inputs and every random draw is seeded.
"""

import io
from dataclasses import dataclass, field

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import DimensionMismatch, MalformedStream, UnsupportedFormat

GRAY8 = "gray8"
RGB8 = "rgb8"

_JPEG_MAGIC = b"\xff\xd8\xff"
_PNG_MAGIC = b"\x89PNG\r\n\x1a\n"

# BT.601 full-range luma weights
_LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])


@dataclass(frozen=True, eq=False)
class ImageBuffer:
    """Decoded raster plus (optionally) the encoded bytes it came from.

    ``meta_segments`` keeps the raw metadata segments of the source stream
    (JPEG APPn/COM payloads, PNG ancillary chunks) as an opaque record for
    the diff kit; the pixel array itself never carries metadata.
    """

    width: int
    height: int
    channels: str
    pixels: np.ndarray
    source_bytes: bytes | None = None
    format: str | None = None
    meta_segments: tuple = field(default=())

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("image dimensions must be >= 1")
        if self.channels not in (GRAY8, RGB8):
            raise ValueError("unknown channel layout %r" % self.channels)
        expected = (self.height, self.width) if self.channels == GRAY8 \
            else (self.height, self.width, 3)
        if self.pixels.shape != expected:
            raise ValueError("pixel array shape %r does not match %r"
                             % (self.pixels.shape, expected))
        if self.pixels.dtype != np.uint8:
            raise ValueError("pixels must be uint8")
        self.pixels.setflags(write=False)

    @property
    def n_channels(self) -> int:
        return 1 if self.channels == GRAY8 else 3

    def same_pixels(self, other: "ImageBuffer") -> bool:
        return (self.channels == other.channels
                and self.pixels.shape == other.pixels.shape
                and bool(np.array_equal(self.pixels, other.pixels)))


@dataclass(frozen=True, eq=False)
class LumaPlane:
    """Real-valued luminance plane in [0, 255]."""

    width: int
    height: int
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != (self.height, self.width):
            raise ValueError("luma shape %r does not match (%d, %d)"
                             % (self.values.shape, self.height, self.width))
        self.values.setflags(write=False)


def from_array(arr: np.ndarray, source_bytes: bytes | None = None,
               fmt: str | None = None, meta_segments: tuple = ()) -> ImageBuffer:
    """Wrap a uint8 array of shape (h, w) or (h, w, 3)."""
    arr = np.ascontiguousarray(arr, dtype=np.uint8)
    if arr.ndim == 2:
        ch = GRAY8
    elif arr.ndim == 3 and arr.shape[2] == 3:
        ch = RGB8
    else:
        raise ValueError("expected (h, w) or (h, w, 3) array, got %r" % (arr.shape,))
    return ImageBuffer(arr.shape[1], arr.shape[0], ch, arr,
                       source_bytes=source_bytes, format=fmt,
                       meta_segments=meta_segments)


def _jpeg_segments(data: bytes):
    """Raw APPn/COM segments of a JPEG stream, as (marker_name, payload)."""
    segs = []
    pos = 2
    n = len(data)
    while pos + 4 <= n:
        if data[pos] != 0xFF:
            break
        marker = data[pos + 1]
        if marker in (0xD8, 0x01) or 0xD0 <= marker <= 0xD7:
            pos += 2
            continue
        if marker == 0xDA:  # start of scan: entropy data follows
            break
        length = int.from_bytes(data[pos + 2:pos + 4], "big")
        payload = data[pos + 4:pos + 2 + length]
        if 0xE0 <= marker <= 0xEF:
            segs.append(("APP%d" % (marker - 0xE0), payload))
        elif marker == 0xFE:
            segs.append(("COM", payload))
        pos += 2 + length
    return tuple(segs)


def _png_chunks(data: bytes):
    """Ancillary PNG chunks carrying metadata, as (chunk_type, payload)."""
    segs = []
    pos = 8
    n = len(data)
    while pos + 8 <= n:
        length = int.from_bytes(data[pos:pos + 4], "big")
        ctype = data[pos + 4:pos + 8]
        if ctype in (b"tEXt", b"zTXt", b"iTXt", b"eXIf", b"tIME"):
            segs.append((ctype.decode("ascii"), data[pos + 8:pos + 8 + length]))
        if ctype == b"IEND":
            break
        pos += 12 + length
    return tuple(segs)


def decode_image(data: bytes) -> ImageBuffer:
    """Decode a JPEG or PNG byte stream.

    The original bytes are retained on the buffer, and metadata segments
    are preserved verbatim as an opaque side record.

    Raises ``UnsupportedFormat`` for non-JPEG/PNG input and
    ``MalformedStream`` for truncated or corrupt streams.
    """
    if data.startswith(_JPEG_MAGIC):
        fmt = "jpeg"
        segs = _jpeg_segments(data)
    elif data.startswith(_PNG_MAGIC):
        fmt = "png"
        segs = _png_chunks(data)
    else:
        raise UnsupportedFormat("not a JPEG or PNG stream")
    try:
        with Image.open(io.BytesIO(data)) as im:
            im.load()
            if im.mode == "L":
                arr = np.asarray(im)
            elif im.mode == "RGB":
                arr = np.asarray(im)
            else:
                arr = np.asarray(im.convert("RGB"))
    except (UnidentifiedImageError, OSError, SyntaxError, ValueError) as exc:
        raise MalformedStream(str(exc)) from exc
    return from_array(arr, source_bytes=data, fmt=fmt, meta_segments=segs)


def encode_jpeg(img: ImageBuffer, quality: int) -> bytes:
    """Encode to JPEG at the given quality (1..100).

    Deterministic for fixed (pixels, quality): fixed quantization tables,
    no stochastic optimization. Chroma subsampling is 4:2:0 below quality
    95 and 4:4:4 at or above, mirroring common encoder policy.
    """
    if not 1 <= int(quality) <= 100:
        raise ValueError("quality must be in [1, 100], got %r" % quality)
    quality = int(quality)
    mode = "L" if img.channels == GRAY8 else "RGB"
    buf = io.BytesIO()
    Image.fromarray(img.pixels, mode=mode).save(
        buf, format="JPEG", quality=quality,
        subsampling=0 if quality >= 95 else 2, optimize=False)
    return buf.getvalue()


def encode_png(img: ImageBuffer) -> bytes:
    """Lossless PNG encoding; deterministic for fixed pixels."""
    mode = "L" if img.channels == GRAY8 else "RGB"
    buf = io.BytesIO()
    Image.fromarray(img.pixels, mode=mode).save(buf, format="PNG")
    return buf.getvalue()


def y_channel(img: ImageBuffer) -> LumaPlane:
    """Luminance plane: BT.601 full-range weights for RGB, identity for gray."""
    if img.channels == GRAY8:
        vals = img.pixels.astype(np.float64)
    else:
        vals = img.pixels.astype(np.float64) @ _LUMA_WEIGHTS
    return LumaPlane(img.width, img.height, vals)


def resize_plane(values: np.ndarray, new_width: int, new_height: int) -> np.ndarray:
    """Bilinear resample of a 2D float plane (half-pixel-center alignment)."""
    h, w = values.shape
    if (w, h) == (new_width, new_height):
        return values.copy()
    xs = (np.arange(new_width) + 0.5) * (w / new_width) - 0.5
    ys = (np.arange(new_height) + 0.5) * (h / new_height) - 0.5
    x0 = np.clip(np.floor(xs).astype(np.intp), 0, w - 1)
    y0 = np.clip(np.floor(ys).astype(np.intp), 0, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = np.clip(xs - x0, 0.0, 1.0)
    fy = np.clip(ys - y0, 0.0, 1.0)[:, None]
    top = values[np.ix_(y0, x0)] * (1.0 - fx) + values[np.ix_(y0, x1)] * fx
    bot = values[np.ix_(y1, x0)] * (1.0 - fx) + values[np.ix_(y1, x1)] * fx
    return top * (1.0 - fy) + bot * fy


def resize(img: ImageBuffer, new_width: int, new_height: int) -> ImageBuffer:
    """Bilinear resize; aspect handling is the caller's responsibility."""
    if new_width < 1 or new_height < 1:
        raise ValueError("target dimensions must be >= 1")
    if (new_width, new_height) == (img.width, img.height):
        return from_array(img.pixels.copy(), source_bytes=img.source_bytes,
                          fmt=img.format, meta_segments=img.meta_segments)
    src = img.pixels.astype(np.float64)
    if img.channels == GRAY8:
        out = resize_plane(src, new_width, new_height)
    else:
        out = np.stack([resize_plane(src[:, :, c], new_width, new_height)
                        for c in range(3)], axis=2)
    out = np.clip(np.floor(out + 0.5), 0, 255).astype(np.uint8)
    return from_array(out)


@dataclass(frozen=True, eq=False)
class SyntheticCamera:
    """A simulated sensor: a fixed multiplicative per-pixel gain pattern."""

    camera_id: str
    prnu_pattern: np.ndarray
    pattern_strength: float
    rng_seed: int

    def __post_init__(self):
        self.prnu_pattern.setflags(write=False)

    @property
    def width(self) -> int:
        return self.prnu_pattern.shape[1]

    @property
    def height(self) -> int:
        return self.prnu_pattern.shape[0]


def generate_camera(seed: int, width: int, height: int, strength: float,
                    camera_id: str | None = None) -> SyntheticCamera:
    """Create a synthetic camera with an i.i.d. Gaussian gain pattern.

    The pattern is drawn with std = ``strength`` and mean-centered, so two
    cameras with different seeds are statistically independent. Pure
    function of (seed, dims, strength).
    """
    if not 0.0 < strength <= 0.2:
        raise ValueError("strength must be in (0, 0.2], got %r" % strength)
    rng = np.random.default_rng(seed)
    pattern = rng.normal(0.0, strength, size=(height, width))
    pattern -= pattern.mean()
    if camera_id is None:
        camera_id = "cam%04d" % seed
    return SyntheticCamera(camera_id, pattern, strength, seed)


def capture(scene: ImageBuffer, cam: SyntheticCamera, shot_noise_std: float,
            rng_seed: int) -> ImageBuffer:
    """Simulate a shot: out = clamp(scene * (1 + pattern) + noise, 0, 255).

    The multiplicative term is the camera's fixed pattern; the additive
    term is per-shot Gaussian noise drawn from ``rng_seed``. Raises
    ``DimensionMismatch`` if scene and sensor dimensions differ.
    """
    if (scene.width, scene.height) != (cam.width, cam.height):
        raise DimensionMismatch(
            "scene %dx%d vs sensor %dx%d"
            % (scene.width, scene.height, cam.width, cam.height))
    vals = scene.pixels.astype(np.float64)
    gain = 1.0 + cam.prnu_pattern
    if scene.channels == RGB8:
        gain = gain[:, :, None]
    out = vals * gain
    if shot_noise_std > 0:
        rng = np.random.default_rng(rng_seed)
        out = out + rng.normal(0.0, shot_noise_std, size=vals.shape)
    out = np.clip(np.floor(out + 0.5), 0, 255).astype(np.uint8)
    return from_array(out)
