import struct

import numpy as np
import pytest

from prnulink import encode_jpeg, from_array
from prnulink.metadata import (CATEGORY_CAMERA, CATEGORY_GPS,
                               CATEGORY_THUMBNAIL, NS_EXIF, NS_IPTC,
                               NS_OTHER, MetadataMap, key_category,
                               parse_exif_tiff, parse_iptc_iim,
                               parse_metadata)


class TiffBuilder:
    """Hand-rolled little-endian TIFF writer for parser oracle tests.

    Sub-IFDs (Exif, GPS) are reached via pointer tags only; "next IFD"
    chaining is reserved for the IFD0 -> thumbnail-IFD1 link.
    """

    def __init__(self):
        self.ifds = []  # (entries, next_ifd_index or None)

    def add_ifd(self, entries, next_ifd=None):
        self.ifds.append((entries, next_ifd))

    def build(self) -> bytes:
        header_size = 8
        ifd_sizes = [2 + 12 * len(e) + 4 for e, _ in self.ifds]
        ifd_offsets = []
        pos = header_size
        for size in ifd_sizes:
            ifd_offsets.append(pos)
            pos += size
        heap = b""
        heap_base = pos
        chunks = [b"II", struct.pack("<H", 42),
                  struct.pack("<I", ifd_offsets[0])]
        for entries, next_ifd in self.ifds:
            chunks.append(struct.pack("<H", len(entries)))
            for tag, vtype, count, value in entries:
                if callable(value):
                    value = value(ifd_offsets)
                size = {1: 1, 2: 1, 3: 2, 4: 4}[vtype] * count
                if vtype == 3 and isinstance(value, int):
                    raw = struct.pack("<H", value)
                elif vtype == 4 and isinstance(value, int):
                    raw = struct.pack("<I", value)
                else:
                    raw = value
                if size <= 4:
                    field = raw.ljust(4, b"\x00")
                else:
                    field = struct.pack("<I", heap_base + len(heap))
                    heap += raw
                chunks.append(struct.pack("<HHI", tag, vtype, count) + field)
            next_off = 0 if next_ifd is None else ifd_offsets[next_ifd]
            chunks.append(struct.pack("<I", next_off))
        chunks.append(heap)
        return b"".join(chunks)


def _sample_tiff() -> bytes:
    b = TiffBuilder()
    # IFD0: Make (heap string), Model (inline), Exif + GPS pointers;
    # chains on to the thumbnail IFD1
    b.add_ifd([
        (0x010F, 2, 8, b"SynthCo\x00"),
        (0x0110, 2, 3, b"X1\x00"),
        (0x8769, 4, 1, lambda offs: offs[1]),
        (0x8825, 4, 1, lambda offs: offs[2]),
    ], next_ifd=3)
    # Exif sub-IFD: ISO inline short, DateTimeOriginal on the heap
    b.add_ifd([
        (0x8827, 3, 1, 100),
        (0x9003, 2, 20, b"2016:10:28 08:54:47\x00"),
    ])
    b.add_ifd([(0x0001, 2, 2, b"N\x00")])  # GPS
    b.add_ifd([(0x0103, 3, 1, 6), (0x0201, 4, 1, 4096)])  # IFD1
    return b.build()


class TestExifParser:
    def test_sample_tags(self):
        rows = parse_exif_tiff(_sample_tiff())
        keys = {key: val for ns, key, val in rows}
        assert keys["Make"] == b"SynthCo\x00"
        assert keys["Model"] == b"X1\x00"
        assert keys["ISOSpeedRatings"] == struct.pack("<H", 100)
        assert keys["DateTimeOriginal"] == b"2016:10:28 08:54:47\x00"
        assert keys["GPSLatitudeRef"] == b"N\x00"

    def test_thumbnail_ifd_prefixed(self):
        rows = parse_exif_tiff(_sample_tiff())
        thumb = sorted(key for ns, key, val in rows
                       if key.startswith("Thumbnail"))
        assert thumb == ["ThumbnailCompression", "ThumbnailTag0x0201"]

    def test_big_endian(self):
        data = (b"MM" + struct.pack(">H", 42) + struct.pack(">I", 8)
                + struct.pack(">H", 1)
                + struct.pack(">HHI", 0x0110, 2, 3) + b"Z9\x00\x00"
                + struct.pack(">I", 0))
        rows = parse_exif_tiff(data)
        assert rows == [(NS_EXIF, "Model", b"Z9\x00")]

    def test_garbage_returns_empty(self):
        assert parse_exif_tiff(b"notatiff") == []
        assert parse_exif_tiff(b"") == []


def _iim(record, dataset, value):
    return bytes([0x1C, record, dataset]) + struct.pack(">H", len(value)) + value


class TestIptcParser:
    def test_named_datasets(self):
        data = _iim(2, 40, b"FBMD01") + _iim(2, 105, b"headline")
        rows = parse_iptc_iim(data)
        assert (NS_IPTC, "Special Instructions", b"FBMD01") in rows
        assert (NS_IPTC, "Headline", b"headline") in rows

    def test_unknown_dataset_keeps_numbers(self):
        rows = parse_iptc_iim(_iim(2, 250, b"x"))
        assert rows == [(NS_IPTC, "2:250", b"x")]


def _jpeg_with_segments(extra_segments) -> bytes:
    base = encode_jpeg(from_array(np.full((8, 8), 77, np.uint8)), 90)
    spliced = base[:2]
    for marker, payload in extra_segments:
        body = payload
        spliced += bytes([0xFF, marker]) + struct.pack(">H", len(body) + 2) + body
    return spliced + base[2:]


class TestParseMetadata:
    def test_jpeg_exif_and_iptc(self):
        app1 = b"Exif\x00\x00" + _sample_tiff()
        iim = _iim(2, 40, b"code")
        app13 = (b"Photoshop 3.0\x008BIM" + struct.pack(">H", 0x0404)
                 + b"\x00\x00" + struct.pack(">I", len(iim)) + iim)
        com = b"hello"
        data = _jpeg_with_segments([(0xE1, app1), (0xED, app13), (0xFE, com)])
        meta = parse_metadata(data)
        assert meta.get(NS_EXIF, "Make") == b"SynthCo\x00"
        assert meta.get(NS_IPTC, "Special Instructions") == b"code"
        assert meta.get(NS_OTHER, "Comment0") == b"hello"

    def test_plain_jpeg_has_no_entries(self):
        data = encode_jpeg(from_array(np.full((8, 8), 9, np.uint8)), 90)
        assert len(parse_metadata(data)) == 0

    def test_png_text_chunks(self):
        import io
        from PIL import Image, PngImagePlugin
        info = PngImagePlugin.PngInfo()
        info.add_text("Author", "nobody")
        buf = io.BytesIO()
        Image.fromarray(np.zeros((4, 4), np.uint8), "L").save(
            buf, format="PNG", pnginfo=info)
        meta = parse_metadata(buf.getvalue())
        assert meta.get(NS_OTHER, "tEXt:Author") is not None


class TestMetadataMap:
    def test_duplicate_keys_rejected(self):
        with pytest.raises(ValueError):
            MetadataMap(((NS_EXIF, "Make", b"a"), (NS_EXIF, "Make", b"b")))

    def test_same_key_different_namespace_ok(self):
        m = MetadataMap(((NS_EXIF, "X", b"1"), (NS_OTHER, "X", b"2")))
        assert m.get(NS_EXIF, "X") == b"1"
        assert m.get(NS_OTHER, "X") == b"2"

    def test_upsert_and_filter(self):
        m = MetadataMap(((NS_EXIF, "Make", b"a"),))
        m2 = m.upsert(NS_EXIF, "Make", b"b").upsert(NS_IPTC, "New", b"c")
        assert m2.get(NS_EXIF, "Make") == b"b"
        assert m2.get(NS_IPTC, "New") == b"c"
        only_exif = m2.filter(lambda ns, k, v: ns == NS_EXIF)
        assert only_exif.keys() == [(NS_EXIF, "Make")]

    def test_json_round_trip(self):
        m = MetadataMap(((NS_EXIF, "Make", b"\x00binary\xff"),
                         (NS_IPTC, "Headline", b"text")))
        again = MetadataMap.from_json(m.to_json())
        assert again == m

    def test_categories(self):
        assert key_category("Make") == CATEGORY_CAMERA
        assert key_category("GPSLatitude") == CATEGORY_GPS
        assert key_category("ThumbnailCompression") == CATEGORY_THUMBNAIL
        assert key_category("Whatever") == "other"
