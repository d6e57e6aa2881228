"""Structured image metadata and minimal Exif/IPTC readers.

A ``MetadataMap`` is an ordered list of (namespace, key, raw value bytes)
entries with unique keys per namespace. The readers only extract tags --
writing metadata back into image bytes is out of scope; the simulator
carries metadata beside the image instead.
"""

import base64
import json
import struct
from dataclasses import dataclass

NS_EXIF = "Exif"
NS_IPTC = "IPTC"
NS_OTHER = "Other"

# Tag name tables (the common subset; unknown tags keep a hex name).
_IFD0_TAGS = {
    0x010E: "ImageDescription", 0x010F: "Make", 0x0110: "Model",
    0x0112: "Orientation", 0x011A: "XResolution", 0x011B: "YResolution",
    0x0128: "ResolutionUnit", 0x0131: "Software", 0x0132: "DateTime",
    0x013B: "Artist", 0x8298: "Copyright", 0x0100: "ImageWidth",
    0x0101: "ImageLength", 0x0102: "BitsPerSample", 0x0103: "Compression",
    0x0213: "YCbCrPositioning",
}
_EXIF_TAGS = {
    0x829A: "ExposureTime", 0x829D: "FNumber", 0x8822: "ExposureProgram",
    0x8827: "ISOSpeedRatings", 0x9003: "DateTimeOriginal",
    0x9004: "DateTimeDigitized", 0x9201: "ShutterSpeedValue",
    0x9202: "ApertureValue", 0x9204: "ExposureBiasValue",
    0x9207: "MeteringMode", 0x9209: "Flash", 0x920A: "FocalLength",
    0xA002: "PixelXDimension", 0xA003: "PixelYDimension",
    0xA403: "WhiteBalance", 0xA406: "SceneCaptureType",
    0x9286: "UserComment", 0xA420: "ImageUniqueID",
}
_GPS_TAGS = {
    0x0001: "GPSLatitudeRef", 0x0002: "GPSLatitude",
    0x0003: "GPSLongitudeRef", 0x0004: "GPSLongitude",
    0x0005: "GPSAltitudeRef", 0x0006: "GPSAltitude",
    0x0007: "GPSTimeStamp", 0x001D: "GPSDateStamp",
}
_IPTC_DATASETS = {
    (2, 5): "Object Name", (2, 25): "Keywords",
    (2, 40): "Special Instructions", (2, 55): "Date Created",
    (2, 80): "By-line", (2, 103): "Original Transmission Reference",
    (2, 105): "Headline", (2, 110): "Credit", (2, 115): "Source",
    (2, 116): "Copyright Notice", (2, 120): "Caption-Abstract",
}

# Attribute categories named by Exif's attribute groups; used by channel
# metadata policies and by tests.
CATEGORY_DATETIME = "datetime"
CATEGORY_CAMERA = "camera"
CATEGORY_DESCRIPTION = "description"
CATEGORY_COPYRIGHT = "copyright"
CATEGORY_GPS = "gps"
CATEGORY_THUMBNAIL = "thumbnail"
CATEGORY_OTHER = "other"

_DATETIME_KEYS = {"DateTime", "DateTimeOriginal", "DateTimeDigitized",
                  "GPSTimeStamp", "GPSDateStamp", "Date Created"}
_CAMERA_KEYS = {"Make", "Model", "Software", "ExposureTime", "FNumber",
                "ExposureProgram", "ISOSpeedRatings", "ShutterSpeedValue",
                "ApertureValue", "ExposureBiasValue", "MeteringMode",
                "Flash", "FocalLength", "WhiteBalance", "SceneCaptureType",
                "Orientation", "XResolution", "YResolution",
                "ResolutionUnit", "PixelXDimension", "PixelYDimension",
                "YCbCrPositioning"}
_DESCRIPTION_KEYS = {"ImageDescription", "UserComment", "ImageUniqueID",
                     "Artist", "Object Name", "Keywords", "Headline",
                     "Caption-Abstract", "By-line", "Credit", "Source"}
_COPYRIGHT_KEYS = {"Copyright", "Copyright Notice"}


def key_category(key: str) -> str:
    if key.startswith("Thumbnail"):
        return CATEGORY_THUMBNAIL
    if key.startswith("GPS"):
        return CATEGORY_GPS
    if key in _DATETIME_KEYS:
        return CATEGORY_DATETIME
    if key in _CAMERA_KEYS:
        return CATEGORY_CAMERA
    if key in _DESCRIPTION_KEYS:
        return CATEGORY_DESCRIPTION
    if key in _COPYRIGHT_KEYS:
        return CATEGORY_COPYRIGHT
    return CATEGORY_OTHER


@dataclass(frozen=True)
class MetadataMap:
    """Ordered (namespace, key, value-bytes) entries, unique per namespace."""

    entries: tuple = ()

    def __post_init__(self):
        seen = set()
        for ns, key, value in self.entries:
            if ns not in (NS_EXIF, NS_IPTC, NS_OTHER):
                raise ValueError("unknown namespace %r" % ns)
            if not isinstance(value, bytes):
                raise ValueError("metadata values must be bytes")
            if (ns, key) in seen:
                raise ValueError("duplicate metadata key %r in %s" % (key, ns))
            seen.add((ns, key))

    def get(self, ns: str, key: str) -> bytes | None:
        for ens, ekey, val in self.entries:
            if ens == ns and ekey == key:
                return val
        return None

    def keys(self, ns: str | None = None):
        return [(ens, ekey) for ens, ekey, _ in self.entries
                if ns is None or ens == ns]

    def upsert(self, ns: str, key: str, value: bytes) -> "MetadataMap":
        out = []
        replaced = False
        for ens, ekey, val in self.entries:
            if ens == ns and ekey == key:
                out.append((ns, key, value))
                replaced = True
            else:
                out.append((ens, ekey, val))
        if not replaced:
            out.append((ns, key, value))
        return MetadataMap(tuple(out))

    def filter(self, keep) -> "MetadataMap":
        """Keep entries for which keep(ns, key, value) is true."""
        return MetadataMap(tuple(e for e in self.entries if keep(*e)))

    def __len__(self) -> int:
        return len(self.entries)

    def to_json(self) -> str:
        rows = [{"ns": ns, "key": key,
                 "value_b64": base64.b64encode(val).decode("ascii")}
                for ns, key, val in self.entries]
        return json.dumps({"entries": rows}, indent=2, sort_keys=True) + "\n"

    @staticmethod
    def from_json(text: str) -> "MetadataMap":
        doc = json.loads(text)
        return MetadataMap(tuple(
            (row["ns"], row["key"], base64.b64decode(row["value_b64"]))
            for row in doc["entries"]))


# ---------------------------------------------------------------------------
# Exif (TIFF structure) reader

_TYPE_SIZES = {1: 1, 2: 1, 3: 2, 4: 4, 5: 8, 6: 1, 7: 1, 8: 2, 9: 4, 10: 8,
               11: 4, 12: 8}


def _read_ifd(data: bytes, offset: int, endian: str):
    """Yield (tag, raw value bytes) plus the next-IFD offset."""
    entries = []
    if offset + 2 > len(data):
        return entries, 0
    (count,) = struct.unpack_from(endian + "H", data, offset)
    pos = offset + 2
    for _ in range(count):
        if pos + 12 > len(data):
            break
        tag, vtype, n = struct.unpack_from(endian + "HHI", data, pos)
        size = _TYPE_SIZES.get(vtype, 1) * n
        if size <= 4:
            raw = data[pos + 8:pos + 8 + size]
        else:
            (voff,) = struct.unpack_from(endian + "I", data, pos + 8)
            raw = data[voff:voff + size]
        entries.append((tag, vtype, raw))
        pos += 12
    next_off = 0
    if pos + 4 <= len(data):
        (next_off,) = struct.unpack_from(endian + "I", data, pos)
    return entries, next_off


def parse_exif_tiff(data: bytes) -> list:
    """Parse a TIFF-structured Exif block into (namespace, key, value) rows.

    IFD0 and the Exif/GPS sub-IFDs map to readable tag names where known;
    the thumbnail IFD's tags are prefixed ``Thumbnail``. Unknown tags pass
    through as ``Tag0x%04X`` so diffs never drop data.
    """
    if len(data) < 8:
        return []
    if data[:2] == b"II":
        endian = "<"
    elif data[:2] == b"MM":
        endian = ">"
    else:
        return []
    (magic,) = struct.unpack_from(endian + "H", data, 2)
    if magic != 42:
        return []
    (ifd0_off,) = struct.unpack_from(endian + "I", data, 4)
    rows = []

    def tag_name(tag, table, prefix=""):
        name = table.get(tag) or _IFD0_TAGS.get(tag) or "Tag0x%04X" % tag
        return prefix + name

    entries, ifd1_off = _read_ifd(data, ifd0_off, endian)
    sub_offsets = {}
    for tag, vtype, raw in entries:
        if tag in (0x8769, 0x8825) and len(raw) >= 4:
            (off,) = struct.unpack_from(endian + "I", raw, 0)
            sub_offsets[tag] = off
            continue
        rows.append((NS_EXIF, tag_name(tag, _IFD0_TAGS), raw))
    if 0x8769 in sub_offsets:
        sub, _ = _read_ifd(data, sub_offsets[0x8769], endian)
        for tag, vtype, raw in sub:
            rows.append((NS_EXIF, tag_name(tag, _EXIF_TAGS), raw))
    if 0x8825 in sub_offsets:
        sub, _ = _read_ifd(data, sub_offsets[0x8825], endian)
        for tag, vtype, raw in sub:
            rows.append((NS_EXIF, tag_name(tag, _GPS_TAGS), raw))
    if ifd1_off:
        sub, _ = _read_ifd(data, ifd1_off, endian)
        for tag, vtype, raw in sub:
            rows.append((NS_EXIF, tag_name(tag, _IFD0_TAGS, "Thumbnail"), raw))
    return rows


def parse_iptc_iim(data: bytes) -> list:
    """Parse IPTC-IIM datasets (0x1C record dataset length...) into rows."""
    rows = []
    pos = 0
    n = len(data)
    while pos + 5 <= n:
        if data[pos] != 0x1C:
            pos += 1
            continue
        record = data[pos + 1]
        dataset = data[pos + 2]
        length = int.from_bytes(data[pos + 3:pos + 5], "big")
        pos += 5
        if length & 0x8000:  # extended: length of the length field
            lsize = length & 0x7FFF
            length = int.from_bytes(data[pos:pos + lsize], "big")
            pos += lsize
        value = data[pos:pos + length]
        pos += length
        key = _IPTC_DATASETS.get((record, dataset), "%d:%d" % (record, dataset))
        rows.append((NS_IPTC, key, value))
    return rows


def _iptc_from_photoshop(data: bytes) -> list:
    """Extract IIM bytes from an APP13 'Photoshop 3.0' 8BIM block."""
    if not data.startswith(b"Photoshop 3.0\x00"):
        return []
    pos = len(b"Photoshop 3.0\x00")
    rows = []
    while pos + 12 <= len(data):
        if data[pos:pos + 4] != b"8BIM":
            break
        (rid,) = struct.unpack_from(">H", data, pos + 4)
        name_len = data[pos + 6]
        pos += 7 + name_len
        if (1 + name_len) % 2 == 1:
            pos += 1
        (size,) = struct.unpack_from(">I", data, pos)
        pos += 4
        if rid == 0x0404:
            rows.extend(parse_iptc_iim(data[pos:pos + size]))
        pos += size + (size % 2)
    return rows


def parse_metadata(data: bytes) -> MetadataMap:
    """Extract a MetadataMap from JPEG or PNG bytes.

    Unrecognized segments are preserved under the Other namespace keyed by
    their segment name, so nothing the stream carried is silently lost.
    """
    from .image import _jpeg_segments, _png_chunks, _JPEG_MAGIC, _PNG_MAGIC

    rows = []
    if data.startswith(_JPEG_MAGIC):
        com_idx = 0
        for name, payload in _jpeg_segments(data):
            if name == "APP1" and payload.startswith(b"Exif\x00\x00"):
                rows.extend(parse_exif_tiff(payload[6:]))
            elif name == "APP13":
                rows.extend(_iptc_from_photoshop(payload))
            elif name == "COM":
                rows.append((NS_OTHER, "Comment%d" % com_idx, payload))
                com_idx += 1
            elif name not in ("APP0",):  # JFIF header is structure, not metadata
                rows.append((NS_OTHER, name, payload))
    elif data.startswith(_PNG_MAGIC):
        for name, payload in _png_chunks(data):
            if name == "eXIf":
                rows.extend(parse_exif_tiff(payload))
            elif name in ("tEXt", "iTXt", "zTXt"):
                key = payload.split(b"\x00", 1)[0].decode("latin-1", "replace")
                rows.append((NS_OTHER, "%s:%s" % (name, key), payload))
            else:
                rows.append((NS_OTHER, name, payload))
    # De-duplicate repeated keys deterministically (first wins, later copies
    # get an index suffix) so the map invariant holds for arbitrary files.
    seen = {}
    out = []
    for ns, key, value in rows:
        k = (ns, key)
        if k in seen:
            seen[k] += 1
            out.append((ns, "%s#%d" % (key, seen[k]), value))
        else:
            seen[k] = 0
            out.append((ns, key, value))
    return MetadataMap(tuple(out))
