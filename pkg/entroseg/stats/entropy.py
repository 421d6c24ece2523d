"""
The entropy module contains functions allowing to calculate the probability image, the windowed entropy image, and their histogram equalized versions.

The probability image replaces each pixel by the relative frequency of its gray level in the whole image.
The entropy image is then obtained by moving an analyzing window (3x3 or 5x5) on the complete image,
and replacing the central pixel of each window by H = -sum(P_i * log(P_i)).

Two readings of this formula are available through EntropyConfig.mode :
* ProbabilitySum (default) sums -p*log(p) over the probability image values found in the window.
* LocalEmpirical uses the distribution of gray levels inside the window itself, and works on the gray image directly.

Since entropy values are very small, entropy images are quantized to 8 bits and histogram equalized before being segmented.
"""
import enum
import logging
import math
from dataclasses import dataclass

import numpy as np

from ..image_core.image_core import FloatImage, GrayImage, quantize_to_gray
from ..utils import utils

logger = logging.getLogger(__name__)


class EntropyMode(enum.Enum):
    PROBABILITY_SUM = "prob-sum"
    LOCAL_EMPIRICAL = "local-empirical"


@dataclass(frozen=True)
class EntropyConfig:
    """
    Parameters of the entropy image.

    :param int window_size: Pixels per side of the analyzing window, odd and >= 3. The original experiments use 3 and 5.
    :param float log_base: Base of the logarithm, 2 gives entropies in bits.
    :param EntropyMode mode: Which reading of the entropy formula to use.
    """
    window_size: int = 3
    log_base: float = 2.0
    mode: EntropyMode = EntropyMode.PROBABILITY_SUM

    def __post_init__(self):
        utils.check_window_size(self.window_size)
        if not math.isfinite(self.log_base) or self.log_base <= 1:
            raise ValueError("Logarithm base must be a finite real > 1, got " + str(self.log_base))
        object.__setattr__(self, "mode", EntropyMode(self.mode))

    @property
    def window_area(self):
        return self.window_size * self.window_size

    def upper_bound(self):
        """Largest entropy a window can reach in the current mode."""
        if self.mode is EntropyMode.LOCAL_EMPIRICAL:
            return math.log(self.window_area, self.log_base)
        return self.window_area * math.log(math.e, self.log_base) / math.e


@dataclass(frozen=True, eq=False)
class Histogram:
    """Counts of each of the 256 gray levels, bins[i] / total is the probability of gray level i."""
    bins: np.ndarray
    total: int

    def __post_init__(self):
        bins = np.array(self.bins, dtype=np.int64, copy=True)
        if bins.shape != (256,):
            raise ValueError("A histogram needs exactly 256 bins, got shape " + str(bins.shape))
        if np.any(bins < 0) or int(bins.sum()) != self.total or self.total < 1:
            raise ValueError("Histogram bins must be non-negative and sum to total=" + str(self.total))
        bins.setflags(write=False)
        object.__setattr__(self, "bins", bins)

    def probabilities(self):
        return self.bins / self.total


def gray_histogram(img):
    """Returns the histogram of a GrayImage : bins[g] is the number of pixels with intensity g."""
    bins = np.bincount(img.data, minlength=256)
    return Histogram(bins, int(img.width * img.height))


def probability_image(img):
    """
    Replaces every pixel by the global relative frequency of its gray level, every value is in (0, 1].

    :param GrayImage img: Original image.
    :rtype: FloatImage
    """
    histogram = gray_histogram(img)
    return FloatImage(histogram.probabilities()[img.pixels])


def entropy_image(source, cfg=None):
    """
    Outputs the entropy image: each pixel is replaced by the entropy of the window centered on it.

    Windows are clamped at the borders by replicate padding so the output has the same dimensions as the input.
    In ProbabilitySum mode, source is the probability image and H = -sum over the window of p * log(p).
    In LocalEmpirical mode, source is the gray image and H = -sum_g q_g * log(q_g),
    q_g being the relative frequency of gray level g inside the window.

    :param source: Probability image (ProbabilitySum) or original image (LocalEmpirical).
    :type source: FloatImage or GrayImage
    :param EntropyConfig cfg: Window size, logarithm base and mode, defaults to EntropyConfig().
    :return: Entropy image, values are finite and >= 0.
    :rtype: FloatImage
    """
    cfg = cfg or EntropyConfig()
    if cfg.mode is EntropyMode.PROBABILITY_SUM:
        if not isinstance(source, FloatImage):
            raise TypeError("ProbabilitySum entropy needs the probability image (FloatImage), got " + type(source).__name__)
        probabilities = source.pixels
        if np.any(probabilities <= 0) or np.any(probabilities > 1):
            raise ValueError("Probability image values must be in (0, 1]")
        # p == 1 gives exactly 0
        terms = -probabilities * utils.log_in_base(probabilities, cfg.log_base)
        windows = utils.padded_windows(terms, cfg.window_size)
        values = windows.sum(axis=(-2, -1))
    else:
        if not isinstance(source, GrayImage):
            raise TypeError("LocalEmpirical entropy needs the gray image (GrayImage), got " + type(source).__name__)
        windows = utils.padded_windows(source.pixels, cfg.window_size)
        codes = windows.reshape(source.height, source.width, cfg.window_area)
        values = utils.window_entropy(codes, cfg.log_base)
    return FloatImage(np.maximum(values, 0.0))


def histogram_equalize(img):
    """
    Outputs the histogram equalized image : g -> round(255 * cdf(g) / N), with the inclusive cumulative histogram.

    Rounding is half-up. A constant image is returned unchanged.

    :param GrayImage img: 8-bit image.
    :rtype: GrayImage
    """
    histogram = gray_histogram(img)
    if np.count_nonzero(histogram.bins) <= 1:
        return img
    cdf = np.cumsum(histogram.bins)
    total = histogram.total
    # floor(255 * cdf / N + 1/2) in integer arithmetic
    mapping = (2 * 255 * cdf + total) // (2 * total)
    return GrayImage(mapping.astype(np.uint8)[img.pixels])


def equalize_float_image(img):
    """Quantizes a real-valued image to 8 bits, then equalizes it : the display chain of probability and entropy images."""
    return histogram_equalize(quantize_to_gray(img))
