import hypothesis
import hypothesis.strategies as st
import numpy as np
import pytest
from hypothesis.extra.numpy import arrays

from entroseg.image_core.image_core import GrayImage, write_pgm

np.seterr(all="warn")

hypothesis.settings.register_profile("fast", max_examples=5)
hypothesis.settings.register_profile("debugger", report_multiple_bugs=False)


@st.composite
def gray_images(draw, min_side=1, max_side=16, max_value=255):
    """Small random gray images, values drawn from a few levels half of the time so that windows repeat values."""
    height = draw(st.integers(min_side, max_side))
    width = draw(st.integers(min_side, max_side))
    if draw(st.booleans()):
        levels = draw(st.lists(st.integers(0, max_value), min_size=1, max_size=4, unique=True))
        elements = st.sampled_from(levels)
    else:
        elements = st.integers(0, max_value)
    return GrayImage(draw(arrays(np.uint8, (height, width), elements=elements)))


@st.composite
def training_vectors(draw, dims=(2, 4), max_vectors=64):
    dim = draw(st.sampled_from(dims))
    count = draw(st.integers(1, max_vectors))
    return draw(arrays(np.float64, (count, dim), elements=st.integers(0, 15).map(float)))


def two_texture_image(size=128, a=60, b=200, c=120):
    """Left half : vertical stripes repeating columns a, a, b. Right half : constant c."""
    pixels = np.full((size, size), c, dtype=np.uint8)
    columns = np.arange(size // 2)
    pixels[:, :size // 2] = np.where(columns % 3 == 2, b, a)[None, :]
    return GrayImage(pixels)


def vertical_step_image(size=16, low=0, high=255):
    pixels = np.full((size, size), low, dtype=np.uint8)
    pixels[:, size // 2:] = high
    return GrayImage(pixels)


@pytest.fixture
def random_image():
    rng = np.random.default_rng(20110)
    return GrayImage(rng.integers(0, 256, size=(256, 256), dtype=np.uint8))


@pytest.fixture
def write_input(tmp_path):
    """Writes a GrayImage as a PGM file under tmp_path and returns its path."""
    def write(img, name="image.pgm"):
        path = tmp_path / name
        path.write_bytes(write_pgm(img))
        return str(path)
    return write
