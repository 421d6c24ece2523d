import numpy as np
import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from entroseg.image_core.image_core import BinaryImage, GeometryError, GrayImage
from entroseg.methods import segmentation, vq
from entroseg.methods.segmentation import CannyParams

from conftest import gray_images, vertical_step_image


def quadrant_labels():
    training = vq.extract_training_vectors(GrayImage(np.zeros((4, 4))), 2, 2)
    return training, vq.build_label_image(training, [0, 1, 2, 3], 4, 4, 2, 2)


def test_vertical_step_golden_column():
    edges = segmentation.canny_edges(vertical_step_image())
    for row in range(2, 14):
        assert np.flatnonzero(edges.pixels[row]).tolist() == [7]


def test_constant_image_has_no_edges():
    edges = segmentation.canny_edges(GrayImage(np.full((12, 9), 77)))
    assert not edges.pixels.any()


def test_edges_follow_translation():
    first = np.zeros((24, 24), dtype=np.uint8)
    first[6:12, 6:12] = 200
    second = np.zeros((24, 24), dtype=np.uint8)
    second[8:14, 9:15] = 200
    edges_first = segmentation.canny_edges(GrayImage(first)).pixels
    edges_second = segmentation.canny_edges(GrayImage(second)).pixels
    assert edges_first.any()
    np.testing.assert_array_equal(edges_first[:16, :15], edges_second[2:18, 3:18])


@settings(deadline=None)
@given(gray_images(min_side=4, max_side=16))
def test_raising_the_high_threshold_keeps_a_subset(img):
    _, _, magnitude = segmentation.gradients(img, CannyParams())
    top = float(magnitude.max())
    if top == 0:
        return
    loose = segmentation.canny_edges(img, CannyParams(high_threshold=0.3 * top, low_threshold=0.1 * top)).pixels
    strict = segmentation.canny_edges(img, CannyParams(high_threshold=0.6 * top, low_threshold=0.1 * top)).pixels
    assert not np.any(strict & ~loose)


def test_non_maximum_suppression_thins_a_ridge():
    magnitude = np.array([[0.0, 1.0, 3.0, 3.0, 1.0, 0.0]])
    gx = np.ones_like(magnitude)
    gy = np.zeros_like(magnitude)
    kept = segmentation.non_maximum_suppression(magnitude, gx, gy)
    assert np.flatnonzero(kept[0]).tolist() == [2]


@settings(deadline=None)
@given(gray_images(min_side=3, max_side=16, max_value=200), st.integers(1, 55))
def test_edges_ignore_intensity_shift(img, shift):
    shifted = GrayImage(img.pixels.astype(int) + shift)
    np.testing.assert_array_equal(segmentation.canny_edges(shifted).pixels, segmentation.canny_edges(img).pixels)


@settings(deadline=None)
@given(gray_images(min_side=3, max_side=16))
def test_edges_are_one_pixel_thin_along_the_gradient(img):
    gx, gy, _ = segmentation.gradients(img, CannyParams())
    edges = segmentation.canny_edges(img).pixels
    angle = np.mod(np.degrees(np.arctan2(gy, gx)), 180.0)
    sector = np.select([(angle < 22.5) | (angle >= 157.5), angle < 67.5, angle < 112.5], [0, 1, 2], default=3)
    steps = [(0, 1), (1, 1), (1, 0), (1, -1)]
    for y, x in zip(*np.nonzero(edges)):
        dy, dx = steps[sector[y, x]]
        if 0 <= y + dy < img.height and 0 <= x + dx < img.width and sector[y + dy, x + dx] == sector[y, x]:
            assert not edges[y + dy, x + dx]


def test_canny_params_thresholds():
    assert CannyParams().thresholds(100.0) == pytest.approx((8.0, 20.0))
    assert CannyParams(high_threshold=9.0, low_threshold=3.0).thresholds(100.0) == (3.0, 9.0)
    assert CannyParams(gaussian_sigma=1.0).kernel_radius == 3
    assert CannyParams(gaussian_sigma=1.4).kernel_radius == 5


@pytest.mark.parametrize("kwargs", [
    dict(gaussian_sigma=0.0),
    dict(high_fraction=0.0),
    dict(low_fraction=1.0),
    dict(high_threshold=5.0),
    dict(high_threshold=5.0, low_threshold=6.0),
])
def test_invalid_canny_params(kwargs):
    with pytest.raises(ValueError):
        CannyParams(**kwargs)


def test_cluster_image():
    _, labels = quadrant_labels()
    source = GrayImage(np.full((4, 4), 50))
    cluster = segmentation.cluster_image(source, labels, 3)
    assert cluster.cluster_id == 3
    assert cluster.image.pixels.tolist() == [[0, 0, 0, 0], [0, 0, 0, 0], [0, 0, 50, 50], [0, 0, 50, 50]]


def test_cluster_image_errors():
    _, labels = quadrant_labels()
    with pytest.raises(IndexError):
        segmentation.cluster_image(GrayImage(np.zeros((4, 4))), labels, 4)
    with pytest.raises(GeometryError):
        segmentation.cluster_image(GrayImage(np.zeros((4, 5))), labels, 0)


def test_cluster_images_partition_the_image():
    _, labels = quadrant_labels()
    source = GrayImage(np.arange(1, 17).reshape(4, 4))
    total = sum(segmentation.cluster_image(source, labels, k).image.pixels.astype(int) for k in range(4))
    np.testing.assert_array_equal(total, source.pixels)


def test_superimpose():
    original = GrayImage(np.full((2, 2), 10))
    edges = BinaryImage(np.array([[True, False], [False, True]]))
    assert segmentation.superimpose(original, edges).pixels.tolist() == [[255, 10], [10, 255]]
    rgb = segmentation.superimpose_color(original, edges)
    assert rgb.shape == (2, 2, 3)
    assert rgb[0, 0].tolist() == [255, 0, 0]
    assert rgb[0, 1].tolist() == [10, 10, 10]
    with pytest.raises(GeometryError):
        segmentation.superimpose(GrayImage(np.zeros((3, 2))), edges)


@given(gray_images(min_side=3, max_side=12))
def test_superimpose_twice_changes_nothing(img):
    edges = segmentation.canny_edges(img)
    once = segmentation.superimpose(img, edges)
    assert segmentation.superimpose(once, edges) == once


def test_renderings():
    edges = BinaryImage(np.array([[True, False]]))
    assert segmentation.edges_to_gray(edges).data.tolist() == [255, 0]
    training = vq.extract_training_vectors(GrayImage(np.zeros((3, 3))), 2, 2)
    labels = vq.build_label_image(training, [5], 3, 3, 2, 2, num_clusters=8)
    assert segmentation.label_image_to_gray(labels).pixels.tolist() == [[5, 5, 255], [5, 5, 255], [255, 255, 255]]


def test_cluster_statistics():
    training, _ = quadrant_labels()
    df = segmentation.cluster_statistics(training, [0, 0, 1, 1], 3)
    assert df.index.tolist() == [1, 2, 3]
    assert df["blocks"].tolist() == [2, 2, 0]
    assert df["pixels"].tolist() == [8, 8, 0]
    assert df["share"].tolist() == [0.5, 0.5, 0.0]
    assert np.isnan(df.loc[3, "mean_value"])


def test_plot_figures(tmp_path):
    training, labels = quadrant_labels()
    source = GrayImage(np.arange(16).reshape(4, 4) * 10)
    clusters = [segmentation.cluster_image(source, labels, k) for k in range(4)]
    statistics = segmentation.cluster_statistics(training, [0, 1, 2, 3], 4)
    output = tmp_path / "figures.png"
    segmentation.plot_figures({"Original image": source}, clusters, statistics, str(output), title="quadrants")
    assert output.read_bytes().startswith(b"\x89PNG")
