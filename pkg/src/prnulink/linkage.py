"""Attribution and profile-linking experiments over simulated channels.

Three tasks share one shape: build fingerprints from a training set,
correlate test images against every candidate fingerprint, and count
where each test image lands. Attribution trains on originals and tests
through a channel; intra-layer linking trains and tests within one
channel; inter-layer linking trains on one channel and tests on another.
"""

import io
from dataclasses import dataclass

import numpy as np
from PIL import Image

from .channel import SNChannelProfile, UploadContext, apply_channel
from .errors import InsufficientImages
from .image import ImageBuffer
from .metadata import MetadataMap
from .prnu import (MODE_GLM, SAME_SOURCE, CameraFingerprint,
                   ClassifierConfig, DenoiserSpec, classify, correlate,
                   estimate_fingerprint, extract_residual, train_glm)

TASK_ATTRIBUTION = "attribution"
TASK_INTRA_LAYER = "intra-layer"
TASK_INTER_LAYER = "inter-layer"

UNKNOWN = "unknown"

_EVAL_CTX = UploadContext("eval", 1_500_000_000)

# Fig. 5-style white-to-blue ramp endpoints
_RAMP_LOW = np.array([255, 255, 255], dtype=np.float64)
_RAMP_HIGH = np.array([8, 48, 107], dtype=np.float64)


@dataclass(frozen=True)
class EvalSplit:
    """Per-camera train/test split sizes and the shuffle seed."""

    train_count: int = 33
    test_count: int = 17
    seed: int = 0


def split_images(images, split: EvalSplit):
    """Deterministic train/test partition of one camera's images."""
    n = len(images)
    if split.train_count + split.test_count > n:
        raise InsufficientImages(
            "%d images cannot supply %d train + %d test"
            % (n, split.train_count, split.test_count))
    order = np.random.default_rng(split.seed).permutation(n)
    train = [images[i] for i in order[:split.train_count]]
    test = [images[i] for i in
            order[split.train_count:split.train_count + split.test_count]]
    return train, test


def attribute(test_img: ImageBuffer, fps, cfg: ClassifierConfig,
              denoiser: DenoiserSpec = DenoiserSpec()):
    """Best-matching device id, or None when no fingerprint passes.

    The winner is the argmax correlation; ties break to the lowest device
    id. The score classifier then accepts or rejects the winner, so images
    from cameras outside the candidate set come back unattributed.
    """
    residual = extract_residual(test_img, denoiser)
    return attribute_residual(residual, fps, cfg)


def attribute_residual(residual, fps, cfg: ClassifierConfig):
    fps = list(fps)
    if not fps:
        raise InsufficientImages("no candidate fingerprints")
    best_id = None
    best_score = None
    for fp in sorted(fps, key=lambda f: f.device_id):
        score = correlate(residual, fp)
        if best_score is None or score > best_score:
            best_id, best_score = fp.device_id, score
    if classify(best_score, cfg) == SAME_SOURCE:
        return best_id
    return None


@dataclass(frozen=True, eq=False)
class EvaluationReport:
    """Counts of test images per (row, candidate) for one true source."""

    task: str
    subject_id: str
    row_labels: tuple
    col_labels: tuple   # candidate device ids, then "unknown"
    grid: np.ndarray    # rows x cols, int counts
    metrics: dict       # row label -> {"accuracy", "ppv", "npv"}
    test_count: int

    def to_csv(self) -> str:
        header = "row," + ",".join(self.col_labels) + ",accuracy,ppv,npv"
        lines = [header]
        for i, row in enumerate(self.row_labels):
            m = self.metrics[row]
            cells = ",".join(str(int(v)) for v in self.grid[i])
            vals = ",".join("" if v != v else "%.6f" % v
                            for v in (m["accuracy"], m["ppv"], m["npv"]))
            lines.append("%s,%s,%s" % (row, cells, vals))
        return "\n".join(lines) + "\n"

    def heatmap_png(self, cell_px: int = 24) -> bytes:
        """White-to-blue heatmap of the count grid (0 = white)."""
        frac = np.clip(self.grid.astype(np.float64)
                       / max(self.test_count, 1), 0.0, 1.0)
        colors = (_RAMP_LOW[None, None, :]
                  + frac[:, :, None] * (_RAMP_HIGH - _RAMP_LOW)[None, None, :])
        img = np.repeat(np.repeat(colors, cell_px, axis=0), cell_px, axis=1)
        img[::cell_px, :, :] = 128
        img[:, ::cell_px, :] = 128
        buf = io.BytesIO()
        Image.fromarray(img.astype(np.uint8), "RGB").save(buf, format="PNG")
        return buf.getvalue()


def _metrics_row(pair_decisions):
    """PPV/NPV over (decided_same, truly_same) pairs; NaN when undefined."""
    tp = sum(1 for d, t in pair_decisions if d and t)
    fp = sum(1 for d, t in pair_decisions if d and not t)
    tn = sum(1 for d, t in pair_decisions if not d and not t)
    fn = sum(1 for d, t in pair_decisions if not d and t)
    ppv = tp / (tp + fp) if (tp + fp) else float("nan")
    npv = tn / (tn + fn) if (tn + fn) else float("nan")
    return ppv, npv


def _fit_glm_weights(fps, residuals_by_cam):
    """Per-channel GLM: regress same/different on correlation scores."""
    scores = []
    labels = []
    for cam_id, residuals in sorted(residuals_by_cam.items()):
        for res in residuals:
            for fp in fps:
                scores.append(correlate(res, fp))
                labels.append(fp.device_id == cam_id)
    return train_glm(scores, labels)


def _through_channel(img, profile, ctx):
    out, _, _ = apply_channel(img, MetadataMap(), "img", profile, ctx)
    return out


class _Runner:
    """Shared machinery for the three experiment shapes."""

    def __init__(self, corpus, split, cfg, denoiser, ctx, glm_fit_count):
        self.cam_ids = sorted(corpus.keys())
        self.split = split
        self.cfg = cfg
        self.denoiser = denoiser
        self.ctx = ctx
        self.glm_fit_count = glm_fit_count
        self.train = {}
        self.test = {}
        for cam in self.cam_ids:
            tr, te = split_images(corpus[cam], split)
            self.train[cam] = tr
            self.test[cam] = te

    def residual(self, img):
        return extract_residual(img, self.denoiser)

    def fingerprints(self, images_by_cam):
        fps = []
        for cam in self.cam_ids:
            residuals = [self.residual(im) for im in images_by_cam[cam]]
            fps.append(estimate_fingerprint(residuals, cam))
        return fps

    def row_cfg(self, fps, fit_residuals_by_cam):
        if self.cfg.mode == MODE_GLM and self.cfg.glm_weights is None:
            weights = _fit_glm_weights(fps, fit_residuals_by_cam)
            return ClassifierConfig(mode=MODE_GLM, glm_weights=weights)
        return self.cfg

    def build_reports(self, task, row_labels, cells):
        """cells[(row, cam)] = (attributed ids, pair decisions)."""
        col_labels = tuple(self.cam_ids) + (UNKNOWN,)
        reports = []
        for cam in self.cam_ids:
            grid = np.zeros((len(row_labels), len(col_labels)), dtype=int)
            metrics = {}
            for i, row in enumerate(row_labels):
                attributed, pairs = cells[(row, cam)]
                for did in attributed:
                    j = (col_labels.index(did) if did in col_labels
                         else len(col_labels) - 1)
                    grid[i, j] += 1
                correct = sum(1 for did in attributed if did == cam)
                ppv, npv = _metrics_row(pairs)
                metrics[row] = {"accuracy": correct / max(len(attributed), 1),
                                "ppv": ppv, "npv": npv}
            reports.append(EvaluationReport(
                task=task, subject_id=cam, row_labels=tuple(row_labels),
                col_labels=col_labels, grid=grid, metrics=metrics,
                test_count=self.split.test_count))
        return reports

    def score_cells(self, fps, row_cfg, test_residuals_by_cam):
        cells = {}
        for cam in self.cam_ids:
            attributed = []
            pairs = []
            for res in test_residuals_by_cam[cam]:
                attributed.append(attribute_residual(res, fps, row_cfg))
                for fp in fps:
                    decided = classify(correlate(res, fp),
                                       row_cfg) == SAME_SOURCE
                    pairs.append((decided, fp.device_id == cam))
            cells[cam] = (attributed, pairs)
        return cells


def run_attribution(corpus, profiles, split: EvalSplit,
                    cfg: ClassifierConfig,
                    denoiser: DenoiserSpec = DenoiserSpec(),
                    ctx: UploadContext = _EVAL_CTX,
                    glm_fit_count: int = 8):
    """Fingerprints from original train images; tests pass through each
    channel. Returns one report per camera, rows = channels."""
    runner = _Runner(corpus, split, cfg, denoiser, ctx, glm_fit_count)
    fps = runner.fingerprints(runner.train)
    row_labels = [p.sn_id for p in profiles]
    cells = {}
    for profile in profiles:
        if cfg.mode == MODE_GLM and cfg.glm_weights is None:
            fit_res = {cam: [runner.residual(
                _through_channel(im, profile, ctx))
                for im in runner.train[cam][:glm_fit_count]]
                for cam in runner.cam_ids}
            row_cfg = runner.row_cfg(fps, fit_res)
        else:
            row_cfg = cfg
        test_res = {cam: [runner.residual(
            _through_channel(im, profile, ctx))
            for im in runner.test[cam]] for cam in runner.cam_ids}
        for cam, cell in runner.score_cells(fps, row_cfg, test_res).items():
            cells[(profile.sn_id, cam)] = cell
    return runner.build_reports(TASK_ATTRIBUTION, row_labels, cells)


def run_intra_layer(corpus, profiles, split: EvalSplit,
                    cfg: ClassifierConfig,
                    denoiser: DenoiserSpec = DenoiserSpec(),
                    ctx: UploadContext = _EVAL_CTX,
                    glm_fit_count: int = 8):
    """Both the fingerprints and the tests come from the same channel."""
    runner = _Runner(corpus, split, cfg, denoiser, ctx, glm_fit_count)
    row_labels = [p.sn_id for p in profiles]
    cells = {}
    for profile in profiles:
        train_res = {cam: [runner.residual(
            _through_channel(im, profile, ctx))
            for im in runner.train[cam]] for cam in runner.cam_ids}
        fps = [estimate_fingerprint(train_res[cam], cam)
               for cam in runner.cam_ids]
        row_cfg = runner.row_cfg(
            fps, {cam: train_res[cam][:glm_fit_count]
                  for cam in runner.cam_ids})
        test_res = {cam: [runner.residual(
            _through_channel(im, profile, ctx))
            for im in runner.test[cam]] for cam in runner.cam_ids}
        for cam, cell in runner.score_cells(fps, row_cfg, test_res).items():
            cells[(profile.sn_id, cam)] = cell
    return runner.build_reports(TASK_INTRA_LAYER, row_labels, cells)


def run_inter_layer(corpus, profile_pairs, split: EvalSplit,
                    cfg: ClassifierConfig,
                    denoiser: DenoiserSpec = DenoiserSpec(),
                    ctx: UploadContext = _EVAL_CTX,
                    glm_fit_count: int = 8):
    """Fingerprints from one channel, tests from another.

    ``profile_pairs`` is a list of (train_profile, test_profile); rows are
    labelled "SNa->SNb".
    """
    corpus_pairs = list(profile_pairs)
    runner = _Runner(corpus, split, cfg, denoiser, ctx, glm_fit_count)
    fps_cache = {}
    test_cache = {}
    fit_cache = {}

    def fps_for(profile):
        if profile.sn_id not in fps_cache:
            train_res = {cam: [runner.residual(
                _through_channel(im, profile, runner.ctx))
                for im in runner.train[cam]] for cam in runner.cam_ids}
            fps_cache[profile.sn_id] = [
                estimate_fingerprint(train_res[cam], cam)
                for cam in runner.cam_ids]
        return fps_cache[profile.sn_id]

    def tests_for(profile):
        if profile.sn_id not in test_cache:
            test_cache[profile.sn_id] = {cam: [runner.residual(
                _through_channel(im, profile, runner.ctx))
                for im in runner.test[cam]] for cam in runner.cam_ids}
        return test_cache[profile.sn_id]

    def fit_for(profile):
        if profile.sn_id not in fit_cache:
            fit_cache[profile.sn_id] = {cam: [runner.residual(
                _through_channel(im, profile, runner.ctx))
                for im in runner.train[cam][:runner.glm_fit_count]]
                for cam in runner.cam_ids}
        return fit_cache[profile.sn_id]

    row_labels = ["%s->%s" % (a.sn_id, b.sn_id) for a, b in corpus_pairs]
    cells = {}
    for (prof_a, prof_b), row in zip(corpus_pairs, row_labels):
        fps = fps_for(prof_a)
        if cfg.mode == MODE_GLM and cfg.glm_weights is None:
            row_cfg = runner.row_cfg(fps, fit_for(prof_b))
        else:
            row_cfg = cfg
        for cam, cell in runner.score_cells(fps, row_cfg,
                                            tests_for(prof_b)).items():
            cells[(row, cam)] = cell
    return runner.build_reports(TASK_INTER_LAYER, row_labels, cells)


def default_inter_layer_pairs(profiles):
    """All ordered pairs among the configured linking subset."""
    subset = [p for p in profiles if p.sn_id in
              ("SN01", "SN04", "SN07", "SN13")]
    return [(a, b) for a in subset for b in subset if a.sn_id != b.sn_id]


def link_profiles(set_a, set_b, cfg: ClassifierConfig,
                  denoiser: DenoiserSpec = DenoiserSpec()):
    """Do two image sets come from the same device?

    Builds a fingerprint from ``set_a`` and classifies every image of
    ``set_b`` against it; the answer is the majority vote. Returns
    (same_user, evidence fraction).
    """
    set_a = list(set_a)
    set_b = list(set_b)
    if len(set_a) < 2:
        raise InsufficientImages("set_a needs at least 2 images")
    if len(set_b) < 1:
        raise InsufficientImages("set_b needs at least 1 image")
    residuals = [extract_residual(im, denoiser) for im in set_a]
    fp = estimate_fingerprint(residuals, "set_a")
    hits = 0
    for im in set_b:
        score = correlate(extract_residual(im, denoiser), fp)
        if classify(score, cfg) == SAME_SOURCE:
            hits += 1
    evidence = hits / len(set_b)
    return evidence >= 0.5, evidence
