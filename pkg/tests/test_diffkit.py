import json

import numpy as np
import pytest

from prnulink import (DIMENSIONS_DIFFER, compression_ratio, content_compare,
                      decode_image, diff_files, encode_jpeg, from_array,
                      full_compare, metadata_compare, name_classify)
from prnulink.diffkit import sha1_hex
from prnulink.errors import ZeroOriginal
from prnulink.metadata import NS_EXIF, NS_IPTC, MetadataMap


class TestFullCompare:
    def test_identical(self):
        assert full_compare(b"abc", b"abc")

    def test_single_bit_flip(self):
        assert not full_compare(b"abc", b"abb")

    def test_sha1_reference_vector(self):
        # digest self-test against the standard empty-input value
        assert sha1_hex(b"") == "da39a3ee5e6b4b0d3255bfef95601890afd80709"

    def test_reflexive_on_random_blobs(self, rng):
        for _ in range(20):
            blob = rng.integers(0, 256, rng.integers(1, 64)).astype(
                np.uint8).tobytes()
            assert full_compare(blob, blob)


class TestContentCompare:
    def test_self_is_zero(self, textured_image):
        assert content_compare(textured_image, textured_image) == 0

    def test_lossy_reencode_differs(self, textured_image):
        redone = decode_image(encode_jpeg(textured_image, 50))
        assert content_compare(textured_image, redone) > 0

    def test_shape_mismatch_sentinel(self):
        a = from_array(np.zeros((480, 640), np.uint8))
        b = from_array(np.zeros((720, 1280), np.uint8))
        assert content_compare(a, b) is DIMENSIONS_DIFFER

    def test_channel_mismatch_sentinel(self):
        a = from_array(np.zeros((8, 8), np.uint8))
        b = from_array(np.zeros((8, 8, 3), np.uint8))
        assert content_compare(a, b) is DIMENSIONS_DIFFER

    def test_counts_exact_samples(self):
        a = np.zeros((4, 4), np.uint8)
        b = a.copy()
        b[0, 0] = 1
        b[3, 3] = 2
        assert content_compare(from_array(a), from_array(b)) == 2


class TestMetadataCompare:
    def _base(self):
        return MetadataMap((
            (NS_EXIF, "Make", b"SynthCo"),
            (NS_EXIF, "ThumbnailCompression", b"6"),
            (NS_EXIF, "ThumbnailTag0x0201", b"x"),
            (NS_EXIF, "DateTime", b"2016:10:28"),
        ))

    def test_self_diff_empty(self):
        m = self._base()
        assert metadata_compare(m, m) == ([], [], [])

    def test_thumbnail_removal_detected(self):
        m = self._base()
        stripped = m.filter(lambda ns, k, v: not k.startswith("Thumbnail"))
        added, removed, changed = metadata_compare(m, stripped)
        assert added == [] and changed == []
        assert set(removed) == {(NS_EXIF, "ThumbnailCompression"),
                                (NS_EXIF, "ThumbnailTag0x0201")}

    def test_added_iptc_field_detected(self):
        m = self._base()
        plus = m.upsert(NS_IPTC, "Special Instructions", b"FBMD00")
        added, removed, changed = metadata_compare(m, plus)
        assert added == [(NS_IPTC, "Special Instructions")]
        assert removed == [] and changed == []

    def test_changed_value_detected(self):
        m = self._base()
        altered = m.upsert(NS_EXIF, "DateTime", b"2017:01:01")
        added, removed, changed = metadata_compare(m, altered)
        assert changed == [(NS_EXIF, "DateTime")]


class TestCompressionRatio:
    def test_equal_sizes(self):
        assert compression_ratio(1000, 1000) == 0.0

    def test_inflated_output_goes_negative(self):
        assert abs(compression_ratio(1000, 1465) - (-46.5)) < 1e-9

    def test_zero_original_rejected(self):
        with pytest.raises(ZeroOriginal):
            compression_ratio(0, 10)

    def test_antisymmetry_around_equal(self, rng):
        for _ in range(50):
            s = int(rng.integers(100, 10_000))
            r = float(rng.uniform(-80, 80))
            processed = s * (1 - r / 100.0)
            forward = compression_ratio(s, processed)
            assert abs(forward - r) < 1e-9
            back = compression_ratio(processed, s)
            # swapping recovers a ratio of the opposite sign direction
            assert forward == 0 or np.sign(back) == -np.sign(forward)


class TestNameClassify:
    @pytest.mark.parametrize("name,label", [
        ("IMG-20171029-WA0019", "WhatsApp"),
        ("20161028_085447", "Unchanged"),
        ("zzz", "Unknown"),
        ("IMG_20171029_184428", "Telegram"),
        ("mmexport1477761254890", "WeChat"),
        ("tumblr_ofswzjXl7K1vjbnv5o1_1280", "Tumblr"),
        ("Cv3ahPvXEAAo6CR.jpg-large", "Twitter"),
        ("2ecd9963cac22479edbd03d65b43dd2a", "Pinterest"),
        ("30319899670_77e6fd4bed_o", "Flickr"),
        ("14633305_13935419006590_2203780186632661_o", "Facebook"),
        ("14533468_7761667291914_4275777725718855_n", "Instagram"),
        ("9f86293d-bdaf-4bce-b5ce-c5610e2cd9b8-original", "LinkedIn"),
        ("0ysdRR9cIVc", "VK"),
        ("image-0-02-05-" + "a1" * 32 + "b" + "-V", "Viber"),
    ])
    def test_observed_formats(self, name, label):
        assert name_classify(name) == label

    def test_extension_stripped(self):
        assert name_classify("IMG-20171029-WA0019.jpg") == "WhatsApp"


class TestDiffFiles:
    def test_file_vs_itself(self, textured_image):
        data = textured_image.source_bytes
        report = diff_files(data, data, "a.jpg", "a.jpg")
        assert report.name_equal and report.digest_equal
        assert report.content_diff_count == 0
        assert report.metadata_added == ()
        assert report.metadata_removed == ()
        assert report.metadata_changed == ()

    def test_reencoded_differs(self, textured_image):
        data = textured_image.source_bytes
        other = encode_jpeg(textured_image, 60)
        report = diff_files(data, other, "a.jpg", "b.jpg")
        assert not report.digest_equal
        assert report.content_diff_count > 0

    def test_json_shape(self, textured_image):
        data = textured_image.source_bytes
        doc = json.loads(diff_files(data, data, "a", "a").to_json())
        assert doc["digest_equal"] is True
        assert doc["content_diff_count"] == 0
        assert doc["dimensions_differ"] is False

    def test_digest_equal_implies_rest(self, textured_image, rng):
        # report invariant, checked over a few random re-encodes
        for q in (40, 70, 96):
            data = encode_jpeg(textured_image, q)
            report = diff_files(data, bytes(data), "x", "x")
            assert report.digest_equal
            assert report.content_diff_count == 0
            assert not (report.metadata_added or report.metadata_removed
                        or report.metadata_changed)
