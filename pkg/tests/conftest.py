import numpy as np
import pytest

from prnulink import (CorpusConfig, capture, encode_jpeg, from_array,
                      generate_camera, generate_images, make_scene)
from prnulink.image import decode_image


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def textured_image():
    """One 256x256 textured grayscale image with encoded source bytes."""
    scene = make_scene(np.random.default_rng(77), 256, 256, "textured-noise")
    return decode_image(encode_jpeg(scene, 96))


@pytest.fixture
def flat_image():
    return from_array(np.full((128, 128), 128, dtype=np.uint8))


@pytest.fixture(scope="session")
def small_corpus():
    """4 cameras x 16 images at 128x128; enough for linking experiments."""
    cfg = CorpusConfig(cameras=4, images_per_camera=16, width=128,
                       height=128, strength=0.05, scene="textured-noise",
                       shot_noise_std=2.0, seed=3)
    return generate_images(cfg)


@pytest.fixture(scope="session")
def foreign_camera_image():
    """An image from a camera outside small_corpus's candidate set."""
    cam = generate_camera(987654, 128, 128, 0.05)
    scene = make_scene(np.random.default_rng(55), 128, 128, "textured-noise")
    return decode_image(encode_jpeg(capture(scene, cam, 2.0, 56), 96))
