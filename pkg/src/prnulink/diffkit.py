"""The four upload/download comparisons: name, full, content, metadata.

These are the measurements used to characterize what a sharing platform
does to an image: rename detection against known per-platform name
formats, SHA-1 whole-file equality, decoded-sample differences, and
metadata attribute diffs, plus the byte-size compression ratio.
"""

import hashlib
import json
import re
from dataclasses import dataclass

import numpy as np

from .errors import ZeroOriginal
from .image import ImageBuffer, decode_image
from .metadata import MetadataMap, parse_metadata


class _DimensionsDiffer:
    """Sentinel: content comparison is undefined across different shapes."""

    def __repr__(self):
        return "DimensionsDiffer"


DIMENSIONS_DIFFER = _DimensionsDiffer()


def sha1_hex(data: bytes) -> str:
    return hashlib.sha1(data).hexdigest()


def full_compare(a: bytes, b: bytes) -> bool:
    """Whole-file equality via SHA-1 digests."""
    return hashlib.sha1(a).digest() == hashlib.sha1(b).digest()


def content_compare(a: ImageBuffer, b: ImageBuffer):
    """Count of differing decoded samples, metadata excluded.

    Returns the DIMENSIONS_DIFFER sentinel when shapes (including channel
    count) do not match; zero means the two contents are identical.
    """
    if a.pixels.shape != b.pixels.shape:
        return DIMENSIONS_DIFFER
    return int(np.count_nonzero(a.pixels != b.pixels))


def metadata_compare(a: MetadataMap, b: MetadataMap):
    """Diff by (namespace, key): returns (added, removed, changed) lists."""
    a_map = {(ns, key): val for ns, key, val in a.entries}
    b_map = {(ns, key): val for ns, key, val in b.entries}
    added = [k for ns, k2, _ in b.entries if (k := (ns, k2)) not in a_map]
    removed = [k for ns, k2, _ in a.entries if (k := (ns, k2)) not in b_map]
    changed = [k for ns, k2, _ in a.entries
               if (k := (ns, k2)) in b_map and b_map[k] != a_map[k]]
    return added, removed, changed


def compression_ratio(original_size: int, processed_size: int) -> float:
    """Size reduction percentage; negative when the file grew."""
    if original_size <= 0:
        raise ZeroOriginal("original size must be > 0")
    return (1.0 - processed_size / original_size) * 100.0


# Downloaded-image name formats per platform. Ordered most specific first;
# classification returns the first match.
NAME_PATTERNS = (
    ("WhatsApp", re.compile(r"^IMG-\d{8}-WA\d{4}$")),
    ("Telegram", re.compile(r"^IMG_\d{8}_\d{6}$")),
    ("WeChat", re.compile(r"^mmexport\d{13}$")),
    ("Viber", re.compile(r"^image-\d-\d{2}-\d{2}-[a-z0-9]{65}-V$")),
    ("LinkedIn", re.compile(
        r"^[0-9a-f]{8}-[0-9a-f]{4}-[0-9a-f]{4}-[0-9a-f]{4}-[0-9a-f]{12}-original$")),
    ("Tumblr", re.compile(r"^tumblr_[A-Za-z0-9]+_1280$")),
    ("Twitter", re.compile(r"^[A-Za-z0-9_-]{15}\.jpg-large$")),
    ("Pinterest", re.compile(r"^[0-9a-f]{32}$")),
    ("Flickr", re.compile(r"^\d{8,12}_[0-9a-f]{10}_o$")),
    ("Facebook", re.compile(r"^\d{6,10}_\d{10,16}_\d{10,18}_o$")),
    ("Instagram", re.compile(r"^\d{6,10}_\d{10,16}_\d{10,18}_n$")),
    ("VK", re.compile(r"^[A-Za-z0-9_-]{11}$")),
    ("Unchanged", re.compile(r"^\d{8}_\d{6}$")),
)

_EXT_RE = re.compile(r"\.(jpe?g|png)$", re.IGNORECASE)


def name_classify(filename: str) -> str:
    """Best-match rename-policy label for a downloaded file name."""
    candidates = [filename]
    stem = _EXT_RE.sub("", filename)
    if stem != filename:
        candidates.append(stem)
    for cand in candidates:
        for label, pattern in NAME_PATTERNS:
            if pattern.match(cand):
                return label
    return "Unknown"


@dataclass(frozen=True)
class DiffReport:
    """Outcome of all four comparisons between two files."""

    name_equal: bool
    digest_equal: bool
    content_diff_count: object  # int or DIMENSIONS_DIFFER
    metadata_added: tuple
    metadata_removed: tuple
    metadata_changed: tuple
    name_label_a: str = "Unknown"
    name_label_b: str = "Unknown"

    def to_json(self) -> str:
        count = self.content_diff_count
        doc = {
            "name_equal": self.name_equal,
            "digest_equal": self.digest_equal,
            "content_diff_count": (
                None if count is DIMENSIONS_DIFFER else int(count)),
            "dimensions_differ": count is DIMENSIONS_DIFFER,
            "metadata_added": [list(k) for k in self.metadata_added],
            "metadata_removed": [list(k) for k in self.metadata_removed],
            "metadata_changed": [list(k) for k in self.metadata_changed],
            "name_label_a": self.name_label_a,
            "name_label_b": self.name_label_b,
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def diff_files(a: bytes, b: bytes, name_a: str, name_b: str) -> DiffReport:
    """Run all four comparisons on two encoded image files."""
    img_a = decode_image(a)
    img_b = decode_image(b)
    added, removed, changed = metadata_compare(parse_metadata(a),
                                               parse_metadata(b))
    return DiffReport(
        name_equal=(name_a == name_b),
        digest_equal=full_compare(a, b),
        content_diff_count=content_compare(img_a, img_b),
        metadata_added=tuple(added),
        metadata_removed=tuple(removed),
        metadata_changed=tuple(changed),
        name_label_a=name_classify(name_a),
        name_label_b=name_classify(name_b),
    )
