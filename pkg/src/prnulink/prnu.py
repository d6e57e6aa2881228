"""Sensor pattern-noise fingerprinting: residual extraction, fingerprint
averaging, normalized correlation, and score classification.

The fingerprint of a camera is the elementwise mean of per-image noise
residuals, where a residual is the luminance plane minus its denoised
version. A test image is matched to a fingerprint via the flattened
zero-mean normalized correlation of their planes; same-source images
score visibly above the cross-source population.
"""

import struct
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import gaussian_filter

from .errors import (CorruptFile, DegenerateInput, DimensionMismatch,
                     EmptyList, ImageTooSmall, NonConvergence, SingleClass,
                     UntrainedModel, VersionMismatch)
from .image import ImageBuffer, resize_plane, y_channel
from .wavelet import pad_to_multiple, wavedec2, waverec2

WAVELET_HARD = "wavelet-hard"
WAVELET_SOFT = "wavelet-soft"
GAUSSIAN_BASELINE = "gaussian"

MODE_THRESHOLD = "threshold"
MODE_GLM = "glm"

SAME_SOURCE = "SameSource"
DIFFERENT_SOURCE = "DifferentSource"

DEFAULT_THRESHOLD = 0.011

_FP_MAGIC_PREFIX = b"PRNUFP"
_FP_MAGIC = b"PRNUFP01"


@dataclass(frozen=True)
class DenoiserSpec:
    """Choice of denoiser used to split an image into content + noise."""

    kind: str = WAVELET_HARD
    levels: int = 4
    sigma: float = 5.0

    def __post_init__(self):
        if self.kind not in (WAVELET_HARD, WAVELET_SOFT, GAUSSIAN_BASELINE):
            raise ValueError("unknown denoiser kind %r" % self.kind)
        if self.levels < 1:
            raise ValueError("levels must be >= 1")
        if self.sigma <= 0:
            raise ValueError("sigma must be > 0")


@dataclass(frozen=True, eq=False)
class NoiseResidual:
    """Zero-mean noise plane extracted from a single image."""

    width: int
    height: int
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != (self.height, self.width):
            raise ValueError("residual shape mismatch")
        self.values.setflags(write=False)


@dataclass(frozen=True, eq=False)
class CameraFingerprint:
    """Mean of a device's noise residuals."""

    device_id: str
    width: int
    height: int
    values: np.ndarray
    n_images: int

    def __post_init__(self):
        if self.n_images < 1:
            raise ValueError("n_images must be >= 1")
        if self.values.shape != (self.height, self.width):
            raise ValueError("fingerprint shape mismatch")
        self.values.setflags(write=False)


def _denoise(y: np.ndarray, spec: DenoiserSpec) -> np.ndarray:
    if spec.kind == GAUSSIAN_BASELINE:
        # blur radius scales with the assumed noise level (1 px at default)
        return gaussian_filter(y, spec.sigma / 5.0)
    block = 2 ** spec.levels
    padded, (h, w) = pad_to_multiple(y, block)
    approx, details = wavedec2(padded, "db4", spec.levels)
    # universal threshold for the assumed noise std
    t = spec.sigma * np.sqrt(2.0 * np.log(y.size))
    filtered = []
    for level in details:
        if spec.kind == WAVELET_HARD:
            level = tuple(np.where(np.abs(c) > t, c, 0.0) for c in level)
        else:
            level = tuple(np.sign(c) * np.maximum(np.abs(c) - t, 0.0)
                          for c in level)
        filtered.append(level)
    rec = waverec2(approx, filtered, "db4")
    return rec[:h, :w]


def extract_residual(img: ImageBuffer,
                     spec: DenoiserSpec = DenoiserSpec()) -> NoiseResidual:
    """Noise residual of an image: luminance minus its denoised version.

    The residual is mean-centered after subtraction. Deterministic for a
    fixed spec. Raises ``ImageTooSmall`` when a wavelet denoiser cannot
    decompose the image to the requested depth.
    """
    if spec.kind != GAUSSIAN_BASELINE:
        block = 2 ** spec.levels
        if img.width < block or img.height < block:
            raise ImageTooSmall(
                "image %dx%d below %d-level wavelet minimum %d"
                % (img.width, img.height, spec.levels, block))
    y = y_channel(img).values
    residual = y - _denoise(y, spec)
    residual = residual - residual.mean()
    return NoiseResidual(img.width, img.height, residual)


def estimate_fingerprint(residuals, device_id: str) -> CameraFingerprint:
    """Elementwise mean of residuals, accumulated in index order."""
    residuals = list(residuals)
    if not residuals:
        raise EmptyList("no residuals to average")
    shape = residuals[0].values.shape
    for r in residuals:
        if r.values.shape != shape:
            raise DimensionMismatch(
                "residual %r does not match %r" % (r.values.shape, shape))
    acc = np.zeros(shape)
    for r in residuals:
        acc += r.values
    acc /= len(residuals)
    return CameraFingerprint(device_id, shape[1], shape[0], acc,
                             len(residuals))


def _as_plane(obj) -> np.ndarray:
    if isinstance(obj, (NoiseResidual, CameraFingerprint)):
        return obj.values
    return np.asarray(obj, dtype=np.float64)


def correlate(n, fp) -> float:
    """Zero-mean normalized correlation of two planes, flattened.

    If dimensions differ, the larger plane is downscaled to the smaller
    one (never upscaled). The score is in [-1, 1]; constant planes raise
    ``DegenerateInput``.
    """
    a = _as_plane(n)
    b = _as_plane(fp)
    th = min(a.shape[0], b.shape[0])
    tw = min(a.shape[1], b.shape[1])
    if a.shape != (th, tw):
        a = resize_plane(a, tw, th)
    if b.shape != (th, tw):
        b = resize_plane(b, tw, th)
    a = a.ravel() - a.mean()
    b = b.ravel() - b.mean()
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise DegenerateInput("constant plane has no correlation")
    return float(np.clip(a @ b / (na * nb), -1.0, 1.0))


@dataclass(frozen=True)
class ClassifierConfig:
    """Same-source decision rule applied to a correlation score."""

    mode: str = MODE_THRESHOLD
    threshold: float = DEFAULT_THRESHOLD
    glm_weights: tuple | None = None  # (bias, slope)

    def __post_init__(self):
        if self.mode not in (MODE_THRESHOLD, MODE_GLM):
            raise ValueError("unknown classifier mode %r" % self.mode)
        if not -1.0 < self.threshold < 1.0:
            raise ValueError("threshold must be in (-1, 1)")


def classify(score: float, cfg: ClassifierConfig) -> str:
    """SameSource/DifferentSource decision; the threshold itself rejects."""
    if cfg.mode == MODE_THRESHOLD:
        return SAME_SOURCE if score > cfg.threshold else DIFFERENT_SOURCE
    if cfg.glm_weights is None:
        raise UntrainedModel("GLM mode requires trained weights")
    bias, slope = cfg.glm_weights
    return SAME_SOURCE if bias + slope * score > 0.0 else DIFFERENT_SOURCE


def train_glm(scores, labels, max_iter: int = 10000,
              tol: float = 1e-9):
    """Logistic regression of a binary label on a scalar score.

    Fit by iteratively reweighted least squares from (0, 0); converged
    when the log-likelihood change drops below ``tol``. Returns
    (bias, slope). Raises ``SingleClass`` when only one label value is
    present and ``NonConvergence`` past the iteration cap.
    """
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if s.shape != y.shape or s.ndim != 1:
        raise ValueError("scores and labels must be equal-length vectors")
    if np.all(y == y[0]):
        raise SingleClass("training data contains a single class")
    X = np.column_stack([np.ones_like(s), s])
    w = np.zeros(2)
    eps = 1e-12

    def log_lik(w):
        z = X @ w
        # log sigmoid computed stably on both branches
        return float(np.sum(y * z - np.logaddexp(0.0, z)))

    prev = log_lik(w)
    for _ in range(max_iter):
        p = 1.0 / (1.0 + np.exp(-(X @ w)))
        grad = X.T @ (y - p)
        wt = np.maximum(p * (1.0 - p), eps)
        hess = X.T @ (X * wt[:, None]) + eps * np.eye(2)
        w = w + np.linalg.solve(hess, grad)
        cur = log_lik(w)
        if abs(cur - prev) < tol:
            return float(w[0]), float(w[1])
        prev = cur
    raise NonConvergence("IRLS did not converge in %d iterations" % max_iter)


def youden_threshold(same_scores, cross_scores) -> float:
    """Threshold maximizing sensitivity + specificity - 1.

    Candidates are midpoints between adjacent distinct observed scores;
    ties resolve to the lowest candidate, deterministically.
    """
    same = np.asarray(same_scores, dtype=np.float64)
    cross = np.asarray(cross_scores, dtype=np.float64)
    if same.size == 0 or cross.size == 0:
        raise EmptyList("both score populations are required")
    values = np.unique(np.concatenate([same, cross]))
    if values.size == 1:
        return float(values[0])
    candidates = (values[:-1] + values[1:]) / 2.0
    best_t, best_j = None, None
    for t in candidates:
        j = np.mean(same > t) + np.mean(cross <= t) - 1.0
        if best_j is None or j > best_j:
            best_t, best_j = float(t), float(j)
    return best_t


# ---------------------------------------------------------------------------
# Fingerprint persistence: magic, dims, count, device id, float64 plane.

def save_fingerprint(fp: CameraFingerprint, path: str) -> None:
    device = fp.device_id.encode("utf-8")
    if len(device) > 0xFFFF:
        raise ValueError("device_id too long")
    with open(path, "wb") as fh:
        fh.write(_FP_MAGIC)
        fh.write(struct.pack("<III", fp.width, fp.height, fp.n_images))
        fh.write(struct.pack("<H", len(device)))
        fh.write(device)
        fh.write(np.ascontiguousarray(fp.values, dtype="<f8").tobytes())


def load_fingerprint(path: str) -> CameraFingerprint:
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 8 or not data.startswith(_FP_MAGIC_PREFIX):
        raise CorruptFile("bad fingerprint magic")
    if data[:8] != _FP_MAGIC:
        raise VersionMismatch("unsupported fingerprint version %r"
                              % data[6:8])
    if len(data) < 8 + 12 + 2:
        raise CorruptFile("truncated fingerprint header")
    width, height, n_images = struct.unpack_from("<III", data, 8)
    (dev_len,) = struct.unpack_from("<H", data, 20)
    off = 22
    if len(data) < off + dev_len:
        raise CorruptFile("truncated device id")
    device_id = data[off:off + dev_len].decode("utf-8")
    off += dev_len
    expected = width * height * 8
    if len(data) != off + expected:
        raise CorruptFile("fingerprint payload length mismatch")
    values = np.frombuffer(data[off:], dtype="<f8").reshape(height, width)
    return CameraFingerprint(device_id, width, height,
                             values.astype(np.float64), n_images)
