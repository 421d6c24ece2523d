"""
The glcm module contains functions allowing to calculate the gray-level co-occurrence matrix (GLCM) of a window, and the GLCM entropy image.

This is the baseline the entropy-based segmentation is compared with.
Gray values are first re-binned uniformly into a small number of levels (bin = g * levels // 256),
then for every window the pairs (p, p + offset) that both fall inside the window are counted,
transposed counts are added when the matrix is symmetric, and the matrix is normalized to sum to 1.
The entropy of that matrix, -sum(m * log2(m)) over its non-zero entries, replaces the central pixel.
"""
import logging
from dataclasses import dataclass

import numpy as np

from ..image_core.image_core import FloatImage
from ..utils import utils

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GlcmConfig:
    """
    Parameters of the co-occurrence matrix.

    :param int window_size: Pixels per side of the window, odd and >= 3, same default as the entropy window.
    :param tuple offset: (dx, dy) displacement between the two pixels of a pair, cannot be (0, 0).
    :param int levels: Number of gray bins, in [2, 256].
    :param bool symmetric: Whether to add the transposed counts.
    """
    window_size: int = 3
    offset: tuple = (1, 0)
    levels: int = 8
    symmetric: bool = True

    def __post_init__(self):
        utils.check_window_size(self.window_size)
        offset = tuple(int(value) for value in self.offset)
        if len(offset) != 2:
            raise ValueError("GLCM offset must be a pair (dx, dy), got " + str(self.offset))
        if offset == (0, 0):
            raise ValueError("GLCM offset cannot be (0, 0)")
        if abs(offset[0]) >= self.window_size or abs(offset[1]) >= self.window_size:
            raise ValueError("GLCM offset " + str(offset) + " leaves no pair inside a " + str(self.window_size) + "x" + str(self.window_size) + " window")
        if not 2 <= self.levels <= 256:
            raise ValueError("GLCM levels must be in [2, 256], got " + str(self.levels))
        object.__setattr__(self, "offset", offset)


@dataclass(frozen=True, eq=False)
class Glcm:
    """A normalized levels x levels co-occurrence matrix, matrix[i, j] is the share of pairs going from bin i to bin j."""
    matrix: np.ndarray

    def entropy(self):
        """Returns -sum(m * log2(m)) over the non-zero entries."""
        mass = self.matrix[self.matrix > 0]
        return float(-np.sum(mass * np.log2(mass)) + 0.0)


def rebin(pixels, levels):
    """Uniform re-binning of 8-bit values into levels bins (floor division)."""
    return (np.asarray(pixels, dtype=np.int64) * levels) // 256


def _pair_positions(cfg):
    """Row/column indices, inside a window, of the first and second pixel of every pair."""
    dx, dy = cfg.offset
    size = cfg.window_size
    rows, cols = np.mgrid[0:size, 0:size]
    inside = (rows + dy >= 0) & (rows + dy < size) & (cols + dx >= 0) & (cols + dx < size)
    first_rows, first_cols = rows[inside], cols[inside]
    return first_rows, first_cols, first_rows + dy, first_cols + dx


def _pair_codes(binned_windows, cfg):
    """
    Encodes every pair of every window as first * levels + second.

    :param numpy.ndarray binned_windows: Array of shape (..., window_size, window_size).
    :return: Array of shape (..., M), M being the number of pairs (doubled when symmetric).
    """
    first_rows, first_cols, second_rows, second_cols = _pair_positions(cfg)
    first = binned_windows[..., first_rows, first_cols]
    second = binned_windows[..., second_rows, second_cols]
    codes = first * cfg.levels + second
    if cfg.symmetric:
        codes = np.concatenate([codes, second * cfg.levels + first], axis=-1)
    return codes


def glcm_of_window(img, center, cfg=None):
    """
    Outputs the normalized co-occurrence matrix of the window centered on a pixel.

    The window is clamped at the borders by replicate padding, consistently with the entropy module.

    :param GrayImage img: Original image.
    :param tuple center: (x, y) coordinates of the central pixel.
    :param GlcmConfig cfg: Window, offset, levels and symmetry, defaults to GlcmConfig().
    :rtype: Glcm
    """
    cfg = cfg or GlcmConfig()
    x, y = center
    if not (0 <= x < img.width and 0 <= y < img.height):
        raise IndexError("Pixel (" + str(x) + ", " + str(y) + ") is outside of a " + str(img.width) + "x" + str(img.height) + " image")
    radius = cfg.window_size // 2
    rows = np.clip(np.arange(y - radius, y + radius + 1), 0, img.height - 1)
    cols = np.clip(np.arange(x - radius, x + radius + 1), 0, img.width - 1)
    window = rebin(img.pixels[np.ix_(rows, cols)], cfg.levels)
    codes = _pair_codes(window, cfg)
    counts = np.bincount(codes, minlength=cfg.levels * cfg.levels).astype(np.float64)
    return Glcm(counts.reshape(cfg.levels, cfg.levels) / counts.sum())


def glcm_entropy_image(img, cfg=None):
    """
    Outputs the GLCM entropy image : every pixel is replaced by the entropy of the co-occurrence matrix of its window.

    Values lie in [0, 2 * log2(levels)]. Border windows are clamped, so the output has the same dimensions as the input.

    :param GrayImage img: Original image.
    :param GlcmConfig cfg: Window, offset, levels and symmetry, defaults to GlcmConfig().
    :rtype: FloatImage
    """
    cfg = cfg or GlcmConfig()
    binned = rebin(img.pixels, cfg.levels)
    windows = utils.padded_windows(binned, cfg.window_size)
    codes = _pair_codes(windows, cfg)
    return FloatImage(np.maximum(utils.window_entropy(codes, 2), 0.0))
