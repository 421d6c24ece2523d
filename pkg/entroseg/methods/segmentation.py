"""
The segmentation module turns cluster labels into images: one image per cluster, Canny edge maps, and edge maps superimposed on the original image.

Canny's operator is implemented in its usual stages, on top of scipy.ndimage :
1. Gaussian smoothing, kernel radius ceil(3 * sigma), borders replicated.
2. Sobel gradients.
3. Non-maximum suppression, gradient angles quantized into 4 sectors.
4. Double threshold and hysteresis, weak pixels are kept when 8-connected to a strong pixel.

It also contains helpers to display results: cluster statistics as a dataframe, and a figure gathering every stage.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np
import pandas as pd
import seaborn as sns
from matplotlib.figure import Figure
from scipy import ndimage

from ..image_core.image_core import BinaryImage, GrayImage, check_same_geometry
from .vq import MARGIN_LABEL

logger = logging.getLogger(__name__)

EDGE_VALUE = 255
# Gradients are rounded before comparisons so that mirror-symmetric pixels tie exactly.
GRADIENT_DECIMALS = 6


@dataclass(frozen=True)
class CannyParams:
    """
    Parameters of Canny's operator.

    Thresholds default to fractions of the image's largest gradient magnitude: high = high_fraction * max, low = low_fraction * high.
    Absolute thresholds can be given instead, both at once.

    :param float gaussian_sigma: Standard deviation of the smoothing kernel, > 0.
    :param float high_fraction: Share of the largest gradient magnitude used as high threshold.
    :param float low_fraction: Share of the high threshold used as low threshold.
    :param float high_threshold: Absolute high threshold, overrides high_fraction.
    :param float low_threshold: Absolute low threshold, overrides low_fraction.
    """
    gaussian_sigma: float = 1.0
    high_fraction: float = 0.2
    low_fraction: float = 0.4
    high_threshold: float = None
    low_threshold: float = None

    def __post_init__(self):
        if not self.gaussian_sigma > 0:
            raise ValueError("Gaussian sigma must be > 0, got " + str(self.gaussian_sigma))
        if not 0 < self.high_fraction <= 1:
            raise ValueError("High threshold fraction must be in (0, 1], got " + str(self.high_fraction))
        if not 0 < self.low_fraction < 1:
            raise ValueError("Low threshold fraction must be in (0, 1), got " + str(self.low_fraction))
        if (self.high_threshold is None) != (self.low_threshold is None):
            raise ValueError("Absolute thresholds must be given together, got low=" + str(self.low_threshold) + " high=" + str(self.high_threshold))
        if self.high_threshold is not None and not 0 < self.low_threshold < self.high_threshold:
            raise ValueError("Thresholds must satisfy 0 < low < high, got low=" + str(self.low_threshold) + " high=" + str(self.high_threshold))

    @property
    def kernel_radius(self):
        return int(math.ceil(3 * self.gaussian_sigma))

    def thresholds(self, max_magnitude):
        """Returns (low, high) for an image whose largest gradient magnitude is max_magnitude."""
        if self.high_threshold is not None:
            return self.low_threshold, self.high_threshold
        high = self.high_fraction * max_magnitude
        return self.low_fraction * high, high


@dataclass(frozen=True)
class ClusterImage:
    """Image of one cluster: source pixels inside the cluster, 0 everywhere else."""
    cluster_id: int
    image: GrayImage


def cluster_image(source, labels, cluster_id):
    """
    Outputs the image of one cluster : out(x, y) = source(x, y) where labels(x, y) == cluster_id, else 0.

    :param GrayImage source: Usually the equalized entropy image, or the original image.
    :param LabelImage labels: Cluster of every pixel.
    :param int cluster_id: 0-based cluster index.
    :rtype: ClusterImage
    """
    check_same_geometry(source, labels, "source image and label image")
    if not 0 <= cluster_id < labels.num_clusters:
        raise IndexError("Cluster id " + str(cluster_id) + " is out of range [0, " + str(labels.num_clusters) + ")")
    pixels = np.where(labels.labels == cluster_id, source.pixels, 0)
    return ClusterImage(int(cluster_id), GrayImage(pixels))


def _shifted(array, dy, dx):
    """Value of the neighbor at (y + dy, x + dx) for every pixel, 0 outside the image."""
    padded = np.pad(array, 1, mode="constant")
    height, width = array.shape
    return padded[1 + dy:1 + dy + height, 1 + dx:1 + dx + width]


def non_maximum_suppression(magnitude, gx, gy):
    """
    Keeps the pixels whose magnitude is a maximum along their gradient direction, quantized into 4 sectors.

    A pixel must be strictly greater than its backward neighbor and at least equal to its forward neighbor,
    so that a ridge two pixels wide keeps only one of them.
    """
    angle = np.mod(np.degrees(np.arctan2(gy, gx)), 180.0)
    # (dy, dx) of the forward neighbor, y pointing down
    sectors = [
        ((angle < 22.5) | (angle >= 157.5), (0, 1)),
        ((angle >= 22.5) & (angle < 67.5), (1, 1)),
        ((angle >= 67.5) & (angle < 112.5), (1, 0)),
        ((angle >= 112.5) & (angle < 157.5), (1, -1)),
    ]
    keep = np.zeros(magnitude.shape, dtype=bool)
    for mask, (dy, dx) in sectors:
        forward = _shifted(magnitude, dy, dx)
        backward = _shifted(magnitude, -dy, -dx)
        keep |= mask & (magnitude > backward) & (magnitude >= forward)
    return np.where(keep & (magnitude > 0), magnitude, 0.0)


def gradients(img, params):
    """Gaussian smoothing then Sobel gradients, returns (gx, gy, magnitude)."""
    smoothed = ndimage.gaussian_filter(img.pixels.astype(np.float64), params.gaussian_sigma,
                                       mode="nearest", radius=params.kernel_radius)
    gx = np.round(ndimage.sobel(smoothed, axis=1, mode="nearest"), GRADIENT_DECIMALS)
    gy = np.round(ndimage.sobel(smoothed, axis=0, mode="nearest"), GRADIENT_DECIMALS)
    magnitude = np.round(np.hypot(gx, gy), GRADIENT_DECIMALS)
    return gx, gy, magnitude


def canny_edges(img, params=None):
    """
    Outputs the edge map of an image with Canny's operator.

    :param GrayImage img: Image to analyze.
    :param CannyParams params: Smoothing and thresholds, defaults to CannyParams().
    :return: True for edge pixels.
    :rtype: BinaryImage
    """
    params = params or CannyParams()
    gx, gy, magnitude = gradients(img, params)
    max_magnitude = float(magnitude.max())
    if max_magnitude == 0:
        return BinaryImage(np.zeros(magnitude.shape, dtype=bool))
    suppressed = non_maximum_suppression(magnitude, gx, gy)
    low, high = params.thresholds(max_magnitude)
    candidates = (suppressed > 0) & (suppressed >= low)
    strong = candidates & (suppressed >= high)
    components, count = ndimage.label(candidates, structure=np.ones((3, 3), dtype=bool))
    connected = np.unique(components[strong])
    edges = np.isin(components, connected[connected > 0])
    logger.debug("canny: %d edge pixels, thresholds low=%.4f high=%.4f", int(edges.sum()), low, high)
    return BinaryImage(edges)


def superimpose(original, edges):
    """Outputs the original image with edge pixels set to 255."""
    check_same_geometry(original, edges, "original image and edge map")
    return GrayImage(np.where(edges.pixels, EDGE_VALUE, original.pixels))


def superimpose_color(original, edges, channel=0):
    """RGB version of superimpose: gray original, edges drawn in one saturated channel (red by default)."""
    check_same_geometry(original, edges, "original image and edge map")
    rgb = np.repeat(original.pixels[:, :, None], 3, axis=2)
    color = np.zeros(3, dtype=np.uint8)
    color[channel] = 255
    rgb[edges.pixels] = color
    return rgb


def edges_to_gray(edges):
    """Edge map as an image, 255 for edges and 0 elsewhere."""
    return GrayImage(np.where(edges.pixels, EDGE_VALUE, 0))


def label_image_to_gray(labels):
    """Label map as an image, each pixel holds its 0-based cluster, margin pixels hold 255."""
    if labels.num_clusters > 255:
        raise ValueError("Cannot render more than 255 clusters as an 8-bit image, got " + str(labels.num_clusters))
    return GrayImage(np.where(labels.labels == MARGIN_LABEL, 255, labels.labels))


def cluster_statistics(training, super_assignment, num_clusters):
    """
    Returns a dataframe describing each cluster : 1-based id, number of blocks and pixels, share of the labeled region, mean value.

    :param TrainingSet training: Training vectors.
    :param super_assignment: Cluster of every training vector.
    :param int num_clusters: Number of clusters.
    :rtype: pandas.DataFrame
    """
    super_assignment = np.asarray(super_assignment, dtype=np.int64)
    blocks = np.bincount(super_assignment, minlength=num_clusters)
    sums = np.bincount(super_assignment, weights=training.vectors.mean(axis=1), minlength=num_clusters)
    with np.errstate(invalid="ignore", divide="ignore"):
        means = np.where(blocks > 0, sums / np.maximum(blocks, 1), np.nan)
    df = pd.DataFrame(dict(
        cluster=np.arange(1, num_clusters + 1),
        blocks=blocks,
        pixels=blocks * training.block_w * training.block_h,
        share=blocks / max(1, len(training)),
        mean_value=means,
    ))
    return df.set_index("cluster")


def plot_figures(panels, cluster_images, statistics, output_path, title=""):
    """
    Draws every stage in one figure and saves it : the given panels (original, probability, entropy..), the image of each cluster,
    and a bar chart of the share of each cluster.

    :param dict panels: Associates a title with a GrayImage.
    :param list cluster_images: ClusterImage instances, in cluster order.
    :param pandas.DataFrame statistics: Output of cluster_statistics.
    :param str output_path: Where to save the figure, usually a .png file.
    """
    columns = 4
    cells = len(panels) + len(cluster_images) + 1
    rows = int(math.ceil(cells / columns))
    figure = Figure(figsize=(4 * columns, 4 * rows))
    axes = figure.subplots(rows, columns, squeeze=False).ravel()
    position = 0
    for panel_title, img in panels.items():
        axes[position].imshow(img.pixels, cmap="gray", vmin=0, vmax=255)
        axes[position].set_title(panel_title)
        position += 1
    for cluster in cluster_images:
        axes[position].imshow(cluster.image.pixels, cmap="gray", vmin=0, vmax=255)
        axes[position].set_title("Image for code-vector " + str(cluster.cluster_id + 1))
        position += 1
    for axis in axes[:position]:
        axis.axis("off")
    sns.barplot(x=statistics.index.astype(str), y=statistics["share"], ax=axes[position], color="steelblue")
    axes[position].set_xlabel("cluster")
    axes[position].set_ylabel("share of blocks")
    for axis in axes[position + 1:]:
        axis.axis("off")
    if title:
        figure.suptitle(title)
    figure.tight_layout()
    figure.savefig(output_path)
    logger.info("figure saved in %s", output_path)
