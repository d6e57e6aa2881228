"""prnulink: camera sensor-noise fingerprinting on simulated sharing channels.

The toolkit covers the full pipeline: a synthetic-camera corpus generator
with known ground truth, noise-residual extraction and fingerprint
correlation, a calibrated simulator of thirteen sharing platforms'
image transformations, the four file-comparison forensics, conventional
watermarking schemes with a survival bench, and the attribution /
profile-linking experiments built on top.
"""

from .channel import (SNChannelProfile, UploadContext, apply_channel,
                      builtin_profiles, calibrate_quality, facebook_iptc,
                      load_profiles, mean_compression_ratio,
                      resolution_class, save_profiles)
from .corpus import (CorpusConfig, CorpusManifest, generate_images,
                     load_corpus, make_scene, write_corpus)
from .diffkit import (DIMENSIONS_DIFFER, DiffReport, compression_ratio,
                      content_compare, diff_files, full_compare,
                      metadata_compare, name_classify)
from .errors import PrnulinkError
from .image import (GRAY8, RGB8, ImageBuffer, LumaPlane, SyntheticCamera,
                    capture, decode_image, encode_jpeg, encode_png,
                    from_array, generate_camera, resize, resize_plane,
                    y_channel)
from .linkage import (EvalSplit, EvaluationReport, attribute, link_profiles,
                      run_attribution, run_inter_layer, run_intra_layer)
from .metadata import MetadataMap, parse_metadata
from .prnu import (CameraFingerprint, ClassifierConfig, DenoiserSpec,
                   NoiseResidual, classify, correlate, estimate_fingerprint,
                   extract_residual, load_fingerprint, save_fingerprint,
                   train_glm, youden_threshold)
from .watermark import (SCHEMES, SurvivalGrid, WatermarkPayload, ber,
                        dct_detect, dct_embed, dwt_detect, dwt_embed,
                        hideseek_embed, hideseek_extract, lsb_embed,
                        lsb_extract, psnr, run_survival_grid)

__version__ = "0.1.0"
