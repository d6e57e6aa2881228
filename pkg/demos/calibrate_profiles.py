"""Calibrate the thirteen channel profiles against their compression targets.

Walks every platform profile and every resolution class, generates a small
synthetic calibration corpus at the true class resolution (the platform's
own size for "standard", 4128x2322 for "large", 640x480 for "small"),
sweeps JPEG qualities, and keeps the quality whose mean compression ratio
lands closest to the profile's target. The calibrated set is written to
src/prnulink/data/sn_profiles.json, which is what load_profiles() ships.

Run from the repository root:

    python demos/calibrate_profiles.py [out.json]
"""

import os
import sys
import time

import numpy as np

from prnulink import (builtin_profiles, calibrate_quality, capture,
                      encode_jpeg, generate_camera, make_scene,
                      mean_compression_ratio, save_profiles)
from prnulink.channel import UploadContext
from prnulink.image import decode_image

N_IMAGES = 3
ORIGINAL_QUALITY = 96
LARGE_DIMS = (4128, 2322)
SMALL_DIMS = (640, 480)


def class_corpus(width, height, seed):
    cam = generate_camera(seed, width, height, 0.03)
    out = []
    for i in range(N_IMAGES):
        scene = make_scene(np.random.default_rng(seed * 100 + i),
                           width, height, "textured-noise")
        shot = capture(scene, cam, 2.0, seed * 100 + i + 50)
        out.append(decode_image(encode_jpeg(shot, ORIGINAL_QUALITY)))
    return out


def main(out_path):
    corpora = {}

    def corpus_for(dims, seed):
        if dims not in corpora:
            print("  generating %dx%d calibration corpus" % dims)
            corpora[dims] = class_corpus(dims[0], dims[1], seed)
        return corpora[dims]

    ctx = UploadContext("cal", 1_500_000_000)
    calibrated = []
    for idx, profile in enumerate(builtin_profiles()):
        t0 = time.time()
        if profile.passthrough:
            calibrated.append(profile)
            print("%s %-10s pass-through" % (profile.sn_id, profile.name))
            continue
        p = profile
        for cls, dims in (("standard", profile.default_resolution),
                          ("large", LARGE_DIMS),
                          ("small", SMALL_DIMS)):
            corpus = corpus_for(dims, 31 + idx if cls == "standard" else
                                (7 if cls == "large" else 11))
            p = calibrate_quality(p, corpus, cls=cls)
            achieved = mean_compression_ratio(p, corpus, ctx)
            print("%s %-10s %-8s q=%-3d target %7.2f%% achieved %7.2f%%"
                  % (p.sn_id, p.name, cls, p.jpeg_quality[cls],
                     p.target_compression[cls], achieved))
        calibrated.append(p)
        print("  (%.1fs)" % (time.time() - t0))
    save_profiles(calibrated, out_path)
    print("wrote %s" % out_path)


if __name__ == "__main__":
    default_out = os.path.join(os.path.dirname(__file__), "..", "src",
                               "prnulink", "data", "sn_profiles.json")
    main(sys.argv[1] if len(sys.argv) > 1 else default_out)
