"""Synthetic-camera corpus generation: the toolkit's ground-truth oracle.

Each synthetic camera has a known gain pattern, so every generated image
has a known source; experiments can then measure attribution and linking
accuracy against that truth. Generation is a pure function of the config,
including the encoded bytes on disk.
"""

import json
import os
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import gaussian_filter

from .image import (ImageBuffer, SyntheticCamera, capture, encode_jpeg,
                    from_array, generate_camera)
from .metadata import NS_EXIF, NS_OTHER, MetadataMap

SCENE_KINDS = ("flat", "gradient", "textured-noise")

ROLE_TRAIN = "train"
ROLE_TEST = "test"
ROLE_UNASSIGNED = "unassigned"


@dataclass(frozen=True)
class CorpusConfig:
    cameras: int = 6
    images_per_camera: int = 50
    width: int = 512
    height: int = 512
    strength: float = 0.03
    scene: str = "textured-noise"
    shot_noise_std: float = 2.0
    seed: int = 0
    jpeg_quality: int = 96  # encoding quality of the "originals"

    def __post_init__(self):
        if self.cameras < 1:
            raise ValueError("need at least one camera")
        if self.images_per_camera < 1:
            raise ValueError("need at least one image per camera")
        if self.scene not in SCENE_KINDS:
            raise ValueError("unknown scene kind %r" % self.scene)


def make_scene(rng: np.random.Generator, width: int, height: int,
               kind: str) -> ImageBuffer:
    """One grayscale scene. Textured scenes composite sharp-edged regions
    over a smooth luminance field plus fine grain, which is what gives
    them natural-image-like wavelet statistics."""
    if kind == "flat":
        level = rng.uniform(90.0, 170.0)
        img = np.full((height, width), level)
    elif kind == "gradient":
        gx, gy = rng.uniform(-1.0, 1.0, 2)
        xx, yy = np.meshgrid(np.linspace(0, 1, width),
                             np.linspace(0, 1, height))
        ramp = gx * xx + gy * yy
        span = np.ptp(ramp)
        if span < 1e-12:
            ramp = np.zeros_like(ramp)
        else:
            ramp = (ramp - ramp.min()) / span
        img = 60.0 + ramp * 140.0
    else:
        base = gaussian_filter(rng.normal(0.0, 1.0, (height, width)), 8.0)
        base = (base - base.min()) / max(np.ptp(base), 1e-12)
        img = 70.0 + base * 110.0
        for sigma, contrast in ((16.0, 90.0), (8.0, 60.0), (4.0, 40.0)):
            mask = gaussian_filter(rng.normal(0.0, 1.0, (height, width)),
                                   sigma) > 0.0
            img = img + np.where(mask, contrast / 2.0, -contrast / 2.0)
        img = img + gaussian_filter(rng.normal(0.0, 6.0, (height, width)),
                                    0.8)
    return from_array(np.clip(np.floor(img + 0.5), 0, 255).astype(np.uint8))


def corpus_cameras(config: CorpusConfig) -> list:
    return [generate_camera(config.seed * 1000 + i, config.width,
                            config.height, config.strength,
                            camera_id="cam%02d" % i)
            for i in range(config.cameras)]


def _shot_seed(config: CorpusConfig, cam_index: int, img_index: int) -> int:
    return (config.seed * 7_654_321 + cam_index * 10_007
            + img_index * 101 + 13)


def generate_images(config: CorpusConfig):
    """In-memory corpus: {camera_id: [ImageBuffer with source bytes]}."""
    out = {}
    for ci, cam in enumerate(corpus_cameras(config)):
        images = []
        for j in range(config.images_per_camera):
            seed = _shot_seed(config, ci, j)
            scene = make_scene(np.random.default_rng(seed), config.width,
                               config.height, config.scene)
            shot = capture(scene, cam, config.shot_noise_std, seed + 1)
            images.append(_with_bytes(shot, config.jpeg_quality))
        out[cam.camera_id] = images
    return out


def _with_bytes(img: ImageBuffer, quality: int) -> ImageBuffer:
    from .image import decode_image
    return decode_image(encode_jpeg(img, quality))


def camera_metadata(camera_id: str, timestamp: str,
                    with_gps: bool = True) -> MetadataMap:
    """A plausible capture metadata record for a synthetic shot."""
    entries = [
        (NS_EXIF, "Make", b"Synthetic"),
        (NS_EXIF, "Model", camera_id.encode("ascii")),
        (NS_EXIF, "Software", b"prnulink synth"),
        (NS_EXIF, "DateTime", timestamp.encode("ascii")),
        (NS_EXIF, "DateTimeOriginal", timestamp.encode("ascii")),
        (NS_EXIF, "ExposureTime", b"1/60"),
        (NS_EXIF, "ISOSpeedRatings", b"100"),
        (NS_EXIF, "FocalLength", b"4.2"),
        (NS_EXIF, "ImageDescription", b"synthetic capture"),
        (NS_EXIF, "Copyright", b"(c) corpus"),
        (NS_EXIF, "ThumbnailCompression", b"6"),
        (NS_EXIF, "ThumbnailJPEGInterchangeFormat", b"\x00\x00\x02\x00"),
        (NS_EXIF, "ThumbnailJPEGInterchangeFormatLength", b"\x00\x00\x10\x00"),
    ]
    if with_gps:
        entries += [
            (NS_EXIF, "GPSLatitude", b"44/1 29/1 3841/100"),
            (NS_EXIF, "GPSLongitude", b"11/1 20/1 2702/100"),
            (NS_EXIF, "GPSLatitudeRef", b"N"),
            (NS_EXIF, "GPSLongitudeRef", b"E"),
        ]
    entries.append((NS_OTHER, "Comment0", b"synthetic corpus image"))
    return MetadataMap(tuple(entries))


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    camera_id: str
    role: str = ROLE_UNASSIGNED


@dataclass(frozen=True)
class CorpusManifest:
    """Index of a corpus on disk: per-image path, source camera, role."""

    seed: int
    entries: tuple = field(default=())

    def __post_init__(self):
        paths = [e.path for e in self.entries]
        if len(set(paths)) != len(paths):
            raise ValueError("manifest paths must be unique")

    def camera_ids(self) -> list:
        seen = []
        for e in self.entries:
            if e.camera_id not in seen:
                seen.append(e.camera_id)
        return seen

    def paths_for(self, camera_id: str) -> list:
        return [e.path for e in self.entries if e.camera_id == camera_id]

    def to_json(self) -> str:
        doc = {
            "seed": self.seed,
            "entries": [{"path": e.path, "camera_id": e.camera_id,
                         "role": e.role} for e in self.entries],
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    @staticmethod
    def from_json(text: str) -> "CorpusManifest":
        doc = json.loads(text)
        return CorpusManifest(
            seed=int(doc["seed"]),
            entries=tuple(ManifestEntry(e["path"], e["camera_id"],
                                        e.get("role", ROLE_UNASSIGNED))
                          for e in doc["entries"]))


def write_corpus(config: CorpusConfig, out_dir: str) -> CorpusManifest:
    """Generate the corpus to disk and return its manifest.

    Repeated runs with the same config produce byte-identical files and
    manifest.
    """
    os.makedirs(out_dir, exist_ok=True)
    entries = []
    for ci, cam in enumerate(corpus_cameras(config)):
        for j in range(config.images_per_camera):
            seed = _shot_seed(config, ci, j)
            scene = make_scene(np.random.default_rng(seed), config.width,
                               config.height, config.scene)
            shot = capture(scene, cam, config.shot_noise_std, seed + 1)
            data = encode_jpeg(shot, config.jpeg_quality)
            fname = "%s_img%03d.jpg" % (cam.camera_id, j)
            with open(os.path.join(out_dir, fname), "wb") as fh:
                fh.write(data)
            entries.append(ManifestEntry(fname, cam.camera_id))
    manifest = CorpusManifest(seed=config.seed, entries=tuple(entries))
    with open(os.path.join(out_dir, "manifest.json"), "w",
              encoding="utf-8") as fh:
        fh.write(manifest.to_json())
    return manifest


def load_corpus(manifest_path: str):
    """Read a corpus from disk: (manifest, {camera_id: [ImageBuffer]})."""
    from .image import decode_image
    with open(manifest_path, "r", encoding="utf-8") as fh:
        manifest = CorpusManifest.from_json(fh.read())
    base = os.path.dirname(os.path.abspath(manifest_path))
    images = {}
    for entry in manifest.entries:
        with open(os.path.join(base, entry.path), "rb") as fh:
            images.setdefault(entry.camera_id, []).append(
                decode_image(fh.read()))
    return manifest, images
