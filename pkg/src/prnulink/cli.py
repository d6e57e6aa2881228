"""Command-line entry point.

Every command is a pure function of its inputs, flags, and seed: repeated
invocations write byte-identical outputs. Exit codes: 0 success, 1 domain
error, 2 usage error.
"""

import argparse
import json
import os
import sys

from . import corpus as corpus_mod
from . import linkage
from .channel import (UploadContext, apply_channel, calibrate_quality,
                      load_profiles, profiles_to_json, resolution_class,
                      save_profiles)
from .diffkit import diff_files
from .errors import PrnulinkError
from .image import decode_image, encode_jpeg
from .metadata import MetadataMap, parse_metadata
from .prnu import (ClassifierConfig, DenoiserSpec, correlate,
                   estimate_fingerprint, extract_residual, load_fingerprint,
                   save_fingerprint)
from .watermark import (SCHEMES, WatermarkPayload, dct_detect, dwt_detect,
                        hideseek_extract, lsb_extract, run_survival_grid)

_DENOISERS = ("wavelet-hard", "wavelet-soft", "gaussian")


def _read(path: str) -> bytes:
    with open(path, "rb") as fh:
        return fh.read()


def _write(path: str, data) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    mode = "wb" if isinstance(data, bytes) else "w"
    with open(path, mode) as fh:
        fh.write(data)


def _parse_bits(text: str) -> tuple:
    if not text or any(c not in "01" for c in text):
        raise PrnulinkError("--bits must be a non-empty 0/1 string")
    return tuple(int(c) for c in text)


def _denoiser(args) -> DenoiserSpec:
    return DenoiserSpec(kind=args.denoiser)


def _classifier(args) -> ClassifierConfig:
    return ClassifierConfig(mode=args.classifier, threshold=args.threshold)


def _load_corpus_images(manifest_path: str):
    return corpus_mod.load_corpus(manifest_path)


# ---------------------------------------------------------------------------
# Subcommand handlers

def _cmd_synth(args) -> int:
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        cfg = corpus_mod.CorpusConfig(**doc)
    else:
        cfg = corpus_mod.CorpusConfig(
            cameras=args.cameras, images_per_camera=args.images,
            width=args.width, height=args.height, strength=args.strength,
            scene=args.scene, shot_noise_std=args.noise_std,
            seed=args.seed, jpeg_quality=args.quality)
    manifest = corpus_mod.write_corpus(cfg, args.out)
    print("wrote %d images to %s" % (len(manifest.entries), args.out))
    return 0


def _cmd_diff(args) -> int:
    report = diff_files(_read(args.path_a), _read(args.path_b),
                        os.path.basename(args.path_a),
                        os.path.basename(args.path_b))
    sys.stdout.write(report.to_json())
    return 0


def _cmd_simulate(args) -> int:
    profiles = {p.sn_id: p for p in load_profiles(args.profiles)}
    if args.sn not in profiles:
        raise PrnulinkError("unknown platform id %r" % args.sn)
    profile = profiles[args.sn]
    data = _read(args.input)
    img = decode_image(data)
    if args.meta:
        with open(args.meta, "r", encoding="utf-8") as fh:
            meta = MetadataMap.from_json(fh.read())
    else:
        meta = parse_metadata(data)
    name = os.path.splitext(os.path.basename(args.input))[0]
    ctx = UploadContext(args.profile_id, args.timestamp)
    out_img, out_meta, out_name = apply_channel(img, meta, name, profile,
                                                ctx)
    _write(os.path.join(args.out, out_name + ".jpg"), out_img.source_bytes)
    _write(os.path.join(args.out, out_name + ".meta.json"),
           out_meta.to_json())
    print(out_name)
    return 0


def _cmd_calibrate(args) -> int:
    profiles = load_profiles(args.profiles)
    _, images = _load_corpus_images(args.corpus)
    corpus = [im for cam in sorted(images) for im in images[cam]]
    if args.limit:
        corpus = corpus[:args.limit]
    calibrated = []
    for p in profiles:
        cls = resolution_class(corpus[0], p)
        calibrated.append(calibrate_quality(p, corpus, cls=cls))
    save_profiles(calibrated, args.out)
    print("calibrated %d profiles -> %s" % (len(calibrated), args.out))
    return 0


def _cmd_wm_embed(args) -> int:
    img = decode_image(_read(args.input))
    payload = WatermarkPayload(_parse_bits(args.bits), args.key)
    scheme = SCHEMES[args.scheme]
    marked = scheme.embed(img, payload)
    _write(args.output, encode_jpeg(marked, args.quality))
    return 0


def _cmd_wm_extract(args) -> int:
    img = decode_image(_read(args.input))
    if args.scheme == "lsb":
        bits = lsb_extract(img, args.length)
    elif args.scheme == "hideseek":
        bits = hideseek_extract(img, args.length, args.key)
    elif args.scheme == "dct":
        bits, confidence = dct_detect(img, args.length)
        print("".join(str(b) for b in bits))
        print("confidence %.6f" % confidence)
        return 0
    else:
        raise PrnulinkError("scheme %r is detect-only" % args.scheme)
    print("".join(str(b) for b in bits))
    return 0


def _cmd_wm_detect(args) -> int:
    img = decode_image(_read(args.input))
    result = dwt_detect(img, args.key)
    print("detected %s correlation %.6f threshold %.6f"
          % (str(result.detected).lower(), result.correlation,
             result.threshold))
    return 0


def _cmd_wm_grid(args) -> int:
    profiles = load_profiles(args.profiles)
    _, images = _load_corpus_images(args.corpus)
    flat = [im for cam in sorted(images) for im in images[cam]]
    corpus_by_class = {args.class_label: flat[:args.limit]}
    payload = WatermarkPayload(_parse_bits(args.bits), args.key)
    grid = run_survival_grid(args.schemes.split(","), profiles,
                             corpus_by_class, payload)
    _write(args.out, grid.to_csv())
    print("wrote %s" % args.out)
    return 0


def _cmd_fp_build(args) -> int:
    _, images = _load_corpus_images(args.corpus)
    if args.camera not in images:
        raise PrnulinkError("camera %r not in corpus" % args.camera)
    imgs = images[args.camera]
    if args.limit:
        imgs = imgs[:args.limit]
    spec = _denoiser(args)
    residuals = [extract_residual(im, spec) for im in imgs]
    fp = estimate_fingerprint(residuals, args.camera)
    save_fingerprint(fp, args.out)
    print("fingerprint %s from %d images -> %s"
          % (args.camera, fp.n_images, args.out))
    return 0


def _cmd_fp_match(args) -> int:
    fp = load_fingerprint(args.fp)
    img = decode_image(_read(args.image))
    residual = extract_residual(img, _denoiser(args))
    print("%.6f" % correlate(residual, fp))
    return 0


def _cmd_eval(args) -> int:
    profiles = load_profiles(args.profiles)
    _, images = _load_corpus_images(args.corpus)
    split = linkage.EvalSplit(train_count=args.train_count,
                              test_count=args.test_count, seed=args.seed)
    cfg = _classifier(args)
    spec = _denoiser(args)
    if args.task == "attribution":
        reports = linkage.run_attribution(images, profiles, split, cfg,
                                          denoiser=spec)
    elif args.task == "intra":
        reports = linkage.run_intra_layer(images, profiles, split, cfg,
                                          denoiser=spec)
    else:
        pairs = linkage.default_inter_layer_pairs(profiles)
        if not pairs:
            raise PrnulinkError(
                "profiles file lacks the inter-layer linking subset")
        reports = linkage.run_inter_layer(images, pairs, split, cfg,
                                          denoiser=spec)
    for report in reports:
        stem = "%s_%s" % (report.task.replace("-", "_"), report.subject_id)
        _write(os.path.join(args.out, stem + ".csv"), report.to_csv())
        _write(os.path.join(args.out, stem + ".png"), report.heatmap_png())
    print("wrote %d reports to %s" % (len(reports), args.out))
    return 0


# ---------------------------------------------------------------------------
# Argument parsing

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="prnulink",
        description="Sensor-noise fingerprinting and sharing-channel "
                    "simulation toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    p.add_argument("--config", help="JSON config file (overrides flags)")
    p.add_argument("--out", required=True)
    p.add_argument("--cameras", type=int, default=6)
    p.add_argument("--images", type=int, default=50)
    p.add_argument("--width", type=int, default=512)
    p.add_argument("--height", type=int, default=512)
    p.add_argument("--strength", type=float, default=0.03)
    p.add_argument("--scene", choices=corpus_mod.SCENE_KINDS,
                   default="textured-noise")
    p.add_argument("--noise-std", type=float, default=2.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--quality", type=int, default=96)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("diff", help="run the four comparisons on two files")
    p.add_argument("path_a")
    p.add_argument("path_b")
    p.set_defaults(func=_cmd_diff)

    p = sub.add_parser("simulate", help="push an image through a channel")
    p.add_argument("--input", required=True)
    p.add_argument("--sn", required=True, help="platform id, e.g. SN01")
    p.add_argument("--profiles", help="profiles JSON (default: packaged)")
    p.add_argument("--meta", help="metadata JSON sidecar for the input")
    p.add_argument("--profile-id", default="P1")
    p.add_argument("--timestamp", type=int, default=1_500_000_000)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("calibrate",
                       help="fit channel qualities to compression targets")
    p.add_argument("--profiles", help="profiles JSON (default: packaged)")
    p.add_argument("--corpus", required=True, help="corpus manifest JSON")
    p.add_argument("--limit", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_calibrate)

    wm = sub.add_parser("wm", help="watermarking commands")
    wm_sub = wm.add_subparsers(dest="wm_command", required=True)

    p = wm_sub.add_parser("embed")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--scheme", choices=sorted(SCHEMES), required=True)
    p.add_argument("--bits", required=True)
    p.add_argument("--key", type=int, default=0)
    p.add_argument("--quality", type=int, default=96)
    p.set_defaults(func=_cmd_wm_embed)

    p = wm_sub.add_parser("extract")
    p.add_argument("--input", required=True)
    p.add_argument("--scheme", choices=("lsb", "hideseek", "dct"),
                   required=True)
    p.add_argument("--length", type=int, required=True)
    p.add_argument("--key", type=int, default=0)
    p.set_defaults(func=_cmd_wm_extract)

    p = wm_sub.add_parser("detect")
    p.add_argument("--input", required=True)
    p.add_argument("--key", type=int, required=True)
    p.set_defaults(func=_cmd_wm_detect)

    p = wm_sub.add_parser("grid")
    p.add_argument("--corpus", required=True)
    p.add_argument("--profiles")
    p.add_argument("--schemes", default="lsb,hideseek,dct,dwt")
    p.add_argument("--bits", default="1011001110001111")
    p.add_argument("--key", type=int, default=7)
    p.add_argument("--limit", type=int, default=3)
    p.add_argument("--class-label", default="standard")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_wm_grid)

    fp = sub.add_parser("fingerprint", help="fingerprint commands")
    fp_sub = fp.add_subparsers(dest="fp_command", required=True)

    p = fp_sub.add_parser("build")
    p.add_argument("--corpus", required=True)
    p.add_argument("--camera", required=True)
    p.add_argument("--limit", type=int, default=0)
    p.add_argument("--denoiser", choices=_DENOISERS, default="wavelet-hard")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_fp_build)

    p = fp_sub.add_parser("match")
    p.add_argument("--fp", required=True)
    p.add_argument("--image", required=True)
    p.add_argument("--denoiser", choices=_DENOISERS, default="wavelet-hard")
    p.set_defaults(func=_cmd_fp_match)

    p = sub.add_parser("eval", help="run a linking experiment")
    p.add_argument("task", choices=("attribution", "intra", "inter"))
    p.add_argument("--corpus", required=True)
    p.add_argument("--profiles")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--train-count", type=int, default=33)
    p.add_argument("--test-count", type=int, default=17)
    p.add_argument("--classifier", choices=("threshold", "glm"),
                   default="threshold")
    p.add_argument("--threshold", type=float, default=0.011)
    p.add_argument("--denoiser", choices=_DENOISERS, default="wavelet-hard")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_eval)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except PrnulinkError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1
    except OSError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
