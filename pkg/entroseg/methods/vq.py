"""
The vq module contains the vector quantization part of the segmentation: training vectors, codebook generation and requantization.

The image is divided into fixed sized blocks (2x2 by default) that form the training vectors.
The codebook is generated with Kekre's Fast Codebook Generation algorithm (KFCG) :
Initially there is one cluster holding every training vector, its codevector is their centroid.
In the first iteration, a vector goes to the lower cluster if its first element is smaller than the first element of the codevector,
otherwise it goes to the upper cluster. The next iteration compares second elements, and so on, cycling through the dimensions.
Codevectors are recomputed as centroids after each iteration, until the codebook size is reached.
No Euclidean distance is ever computed, only one element comparison per vector and per iteration.

Requantization clusters the codevectors themselves with the same algorithm (128 codevectors into 8 clusters by default),
each training vector then belongs to the super-cluster of its codevector.
"""
import logging
from dataclasses import dataclass

import numpy as np

from ..image_core.image_core import GeometryError

logger = logging.getLogger(__name__)

# Label of the pixels left out when the image dimensions are not multiples of the block size.
MARGIN_LABEL = -1

_counters = dict(distance_evaluations=0)


def distance_evaluations():
    """Number of Euclidean distances evaluated since the last reset."""
    return _counters["distance_evaluations"]


def reset_distance_counter():
    _counters["distance_evaluations"] = 0


def squared_distances(vectors, codevectors):
    """Squared Euclidean distance between each vector and the codevector on the same row. Every call is counted."""
    vectors = np.asarray(vectors, dtype=np.float64)
    codevectors = np.asarray(codevectors, dtype=np.float64)
    _counters["distance_evaluations"] += len(vectors)
    return np.sum((vectors - codevectors) ** 2, axis=1)


@dataclass(frozen=True, eq=False)
class TrainingSet:
    """
    Training vectors obtained from non-overlapping blocks, in row-major block order.

    - List of **attributes**::
        :param numpy.ndarray vectors: Array of shape (n, k), k = block_w * block_h, each block flattened row-major.
        :param numpy.ndarray block_coords: Array of shape (n, 2) holding the (block_x, block_y) coordinates of each vector.
        :param int block_w: Block width in pixels.
        :param int block_h: Block height in pixels.
        :param int image_width: Width of the source image.
        :param int image_height: Height of the source image.
        :param int covered_width: Width of the region covered by blocks, the rest was cropped.
        :param int covered_height: Height of the region covered by blocks.
    """
    vectors: np.ndarray
    block_coords: np.ndarray
    block_w: int
    block_h: int
    image_width: int
    image_height: int
    covered_width: int
    covered_height: int

    def __post_init__(self):
        vectors = np.array(self.vectors, dtype=np.float64, copy=True)
        coords = np.array(self.block_coords, dtype=np.int64, copy=True)
        if vectors.ndim != 2 or vectors.shape[1] != self.block_w * self.block_h:
            raise ValueError("Training vectors must have shape (n, " + str(self.block_w * self.block_h) + "), got " + str(vectors.shape))
        if coords.shape != (len(vectors), 2):
            raise ValueError("Block coordinates must have shape (n, 2), got " + str(coords.shape))
        if not np.all(np.isfinite(vectors)):
            raise ValueError("Training vectors must be finite")
        vectors.setflags(write=False)
        coords.setflags(write=False)
        object.__setattr__(self, "vectors", vectors)
        object.__setattr__(self, "block_coords", coords)

    def __len__(self):
        return len(self.vectors)

    @property
    def dim(self):
        return self.vectors.shape[1]

    @property
    def blocks_x(self):
        return self.covered_width // self.block_w

    @property
    def blocks_y(self):
        return self.covered_height // self.block_h


@dataclass(frozen=True)
class SplitRecord:
    """
    What happened to one cluster during one iteration of the codebook generation.

    threshold is None when the cluster was left unsplit (the codebook size was reached during the iteration),
    children holds the indexes of the resulting clusters: two after a split, one if the other side was empty or if it was not split.
    """
    iteration: int
    dimension: int
    parent: int
    threshold: float
    children: tuple


@dataclass(frozen=True, eq=False)
class Codebook:
    """
    Codevectors and the cluster assigned to each training vector.

    - List of **attributes**::
        :param numpy.ndarray codevectors: Array of shape (size, dim), each row is the centroid of its cluster.
        :param numpy.ndarray assignment: Cluster index of each training vector.
        :param int requested_size: Size that was asked for, the codebook can end smaller for degenerate inputs.
        :param int discarded_children: Number of empty clusters discarded while splitting.
        :param tuple splits: SplitRecord history, enough to re-derive the assignment.
    """
    codevectors: np.ndarray
    assignment: np.ndarray
    requested_size: int
    discarded_children: int = 0
    splits: tuple = ()

    def __post_init__(self):
        codevectors = np.array(self.codevectors, dtype=np.float64, copy=True)
        assignment = np.array(self.assignment, dtype=np.int64, copy=True)
        if codevectors.ndim != 2:
            raise ValueError("Codevectors must be a 2-dimensional array, got shape " + str(codevectors.shape))
        if assignment.size and (assignment.min() < 0 or assignment.max() >= len(codevectors)):
            raise ValueError("Assignment holds cluster indexes outside of [0, " + str(len(codevectors)) + ")")
        codevectors.setflags(write=False)
        assignment.setflags(write=False)
        object.__setattr__(self, "codevectors", codevectors)
        object.__setattr__(self, "assignment", assignment)

    @property
    def dim(self):
        return self.codevectors.shape[1]

    @property
    def size(self):
        return len(self.codevectors)

    @property
    def shortfall(self):
        """How many codevectors are missing compared with the requested size."""
        return max(0, self.requested_size - self.size)


def extract_training_vectors(img, block_w=2, block_h=2):
    """
    Divides an image into non-overlapping blocks, in row-major order, each block flattened row-major into a vector.

    If the dimensions are not multiples of the block size, the right and bottom edges are cropped.

    :param img: Image to divide, usually the equalized entropy image.
    :type img: GrayImage or FloatImage
    :param int block_w: Block width, >= 1.
    :param int block_h: Block height, >= 1.
    :rtype: TrainingSet
    """
    if block_w < 1 or block_h < 1:
        raise ValueError("Block dimensions must be >= 1, got " + str(block_w) + "x" + str(block_h))
    if block_w > img.width or block_h > img.height:
        raise GeometryError("Block " + str(block_w) + "x" + str(block_h) + " is larger than the "
                            + str(img.width) + "x" + str(img.height) + " image")
    blocks_x = img.width // block_w
    blocks_y = img.height // block_h
    covered_width = blocks_x * block_w
    covered_height = blocks_y * block_h
    if (covered_width, covered_height) != (img.width, img.height):
        logger.info("cropping image from %dx%d to %dx%d to fit %dx%d blocks",
                    img.width, img.height, covered_width, covered_height, block_w, block_h)
    cropped = np.asarray(img.pixels[:covered_height, :covered_width], dtype=np.float64)
    vectors = (cropped.reshape(blocks_y, block_h, blocks_x, block_w)
               .transpose(0, 2, 1, 3)
               .reshape(blocks_y * blocks_x, block_h * block_w))
    block_y, block_x = np.divmod(np.arange(blocks_x * blocks_y), blocks_x)
    return TrainingSet(vectors, np.stack([block_x, block_y], axis=1), block_w, block_h,
                       img.width, img.height, covered_width, covered_height)


def _as_vectors(training):
    if isinstance(training, TrainingSet):
        return training.vectors
    vectors = np.asarray(training, dtype=np.float64)
    if vectors.ndim != 2:
        raise ValueError("Training vectors must be a 2-dimensional array, got shape " + str(vectors.shape))
    return vectors


def _members_by_cluster(assignment, size):
    """Indexes of the members of each cluster, in increasing order."""
    order = np.argsort(assignment, kind="stable")
    counts = np.bincount(assignment, minlength=size)
    return np.split(order, np.cumsum(counts)[:-1])


def kfcg_codebook(training, target_size):
    """
    Generates a codebook with Kekre's Fast Codebook Generation algorithm.

    Iteration t compares dimension d = (t - 1) mod k : a member X of a cluster with codevector C goes to the lower child if X[d] < C[d],
    else to the upper child. Children are numbered in the order of their parents, lower child first, and empty children are discarded.
    Codevectors are recomputed as centroids after every iteration.
    When splitting every cluster would go past target_size, clusters are split in index order and splitting halts as soon as target_size is reached.
    If k consecutive iterations add no cluster, every cluster holds identical vectors and generation stops short of target_size.

    :param training: Training vectors.
    :type training: TrainingSet or numpy.ndarray
    :param int target_size: Requested number of codevectors, >= 1.
    :rtype: Codebook
    """
    vectors = _as_vectors(training)
    if len(vectors) == 0:
        raise ValueError("Cannot generate a codebook from an empty training set")
    if target_size < 1:
        raise ValueError("Codebook size must be >= 1, got " + str(target_size))
    count, dim = vectors.shape
    assignment = np.zeros(count, dtype=np.int64)
    codevectors = vectors.mean(axis=0, keepdims=True)
    discarded = 0
    splits = []
    iteration = 0
    stagnant = 0

    while len(codevectors) < target_size and stagnant < dim:
        iteration += 1
        dimension = (iteration - 1) % dim
        clusters = len(codevectors)
        groups = []
        for parent, members in enumerate(_members_by_cluster(assignment, len(codevectors))):
            if clusters >= target_size:
                splits.append(SplitRecord(iteration, dimension, parent, None, (len(groups),)))
                groups.append(members)
                continue
            threshold = float(codevectors[parent, dimension])
            lower = vectors[members, dimension] < threshold
            children = []
            for part in (members[lower], members[~lower]):
                if part.size:
                    children.append(len(groups))
                    groups.append(part)
                else:
                    discarded += 1
            if len(children) == 2:
                clusters += 1
            splits.append(SplitRecord(iteration, dimension, parent, threshold, tuple(children)))

        stagnant = stagnant + 1 if len(groups) == len(codevectors) else 0
        for index, members in enumerate(groups):
            assignment[members] = index
        codevectors = np.stack([vectors[members].mean(axis=0) for members in groups])
        logger.debug("iteration %d on dimension %d: %d clusters", iteration, dimension + 1, len(codevectors))

    codebook = Codebook(codevectors, assignment, target_size, discarded, tuple(splits))
    if codebook.shortfall:
        logger.warning("WARNING: codebook holds %d codevectors instead of %d, the training set does not hold enough distinct vectors",
                       codebook.size, target_size)
    return codebook


def replay_assignment(training, codebook):
    """Re-derives the assignment of the training vectors from the split history of a codebook alone."""
    vectors = _as_vectors(training)
    assignment = np.zeros(len(vectors), dtype=np.int64)
    size = 1
    records = list(codebook.splits)
    position = 0
    while position < len(records):
        iteration = records[position].iteration
        replayed = np.empty_like(assignment)
        groups = _members_by_cluster(assignment, size)
        size = 0
        while position < len(records) and records[position].iteration == iteration:
            record = records[position]
            members = groups[record.parent]
            if len(record.children) == 2:
                lower = vectors[members, record.dimension] < record.threshold
                replayed[members[lower]] = record.children[0]
                replayed[members[~lower]] = record.children[1]
            else:
                replayed[members] = record.children[0]
            size = max(size, max(record.children) + 1)
            position += 1
        assignment = replayed
    return assignment


def requantize_codebook(cb, target):
    """
    Clusters the codevectors of a codebook into target super-clusters with the same algorithm.

    :param Codebook cb: Codebook to requantize, its size must be >= target.
    :param int target: Number of super-clusters, >= 1.
    :return: Super-cluster index of every codevector (mapping[old_index] = super_index).
    :rtype: numpy.ndarray
    """
    if not 1 <= target <= cb.size:
        raise ValueError("Requantization target must be in [1, " + str(cb.size) + "], got " + str(target))
    return kfcg_codebook(cb.codevectors, target).assignment


def compose_assignment(cb, mapping):
    """Super-cluster of every training vector : mapping applied to the codebook assignment."""
    return np.asarray(mapping, dtype=np.int64)[cb.assignment]


def distortion(training, cb):
    """
    Mean squared Euclidean distance between each training vector and its assigned codevector.

    :param training: Training vectors the codebook was generated from.
    :type training: TrainingSet or numpy.ndarray
    :param Codebook cb: Codebook.
    :rtype: float
    """
    vectors = _as_vectors(training)
    if vectors.shape[1] != cb.dim:
        raise ValueError("Training vectors have dimension " + str(vectors.shape[1]) + " but codevectors have dimension " + str(cb.dim))
    if len(vectors) != len(cb.assignment):
        raise ValueError("Codebook assignment covers " + str(len(cb.assignment)) + " vectors, training set holds " + str(len(vectors)))
    return float(np.mean(squared_distances(vectors, cb.codevectors[cb.assignment])))


@dataclass(frozen=True, eq=False)
class LabelImage:
    """
    Cluster label of every pixel, block labels expanded to pixels.

    Pixels cropped away when extracting blocks hold MARGIN_LABEL.
    """
    labels: np.ndarray
    num_clusters: int

    def __post_init__(self):
        labels = np.array(self.labels, dtype=np.int16, copy=True)
        if labels.ndim != 2:
            raise ValueError("Labels must be 2-dimensional, got shape " + str(labels.shape))
        valid = labels[labels != MARGIN_LABEL]
        if valid.size and (valid.min() < 0 or valid.max() >= self.num_clusters):
            raise ValueError("Labels must be in [0, " + str(self.num_clusters) + ") or MARGIN_LABEL")
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)

    @property
    def width(self):
        return self.labels.shape[1]

    @property
    def height(self):
        return self.labels.shape[0]


def build_label_image(training, super_assignment, img_w, img_h, block_w, block_h, num_clusters=None):
    """
    Expands the super-cluster of each block to every pixel of the block.

    :param TrainingSet training: Training set the assignment refers to.
    :param super_assignment: Super-cluster index of every training vector.
    :param int img_w: Image width, must match the training set.
    :param int img_h: Image height, must match the training set.
    :param int block_w: Block width, must match the training set.
    :param int block_h: Block height, must match the training set.
    :param int num_clusters: Number of clusters, defaults to the largest label + 1.
    :rtype: LabelImage
    """
    super_assignment = np.asarray(super_assignment, dtype=np.int64)
    if (training.image_width, training.image_height) != (img_w, img_h):
        raise GeometryError("Training set comes from a " + str(training.image_width) + "x" + str(training.image_height)
                            + " image, not " + str(img_w) + "x" + str(img_h))
    if (training.block_w, training.block_h) != (block_w, block_h):
        raise GeometryError("Training set uses " + str(training.block_w) + "x" + str(training.block_h)
                            + " blocks, not " + str(block_w) + "x" + str(block_h))
    if super_assignment.shape != (len(training),):
        raise GeometryError("Assignment covers " + str(super_assignment.size) + " vectors, training set holds " + str(len(training)))
    if num_clusters is None:
        num_clusters = int(super_assignment.max()) + 1 if super_assignment.size else 1

    grid = np.empty((training.blocks_y, training.blocks_x), dtype=np.int64)
    grid[training.block_coords[:, 1], training.block_coords[:, 0]] = super_assignment
    labels = np.full((img_h, img_w), MARGIN_LABEL, dtype=np.int64)
    labels[:training.covered_height, :training.covered_width] = np.repeat(np.repeat(grid, block_h, axis=0), block_w, axis=1)
    return LabelImage(labels, num_clusters)


# Text formats
def write_codebook(cb):
    """Header 'KFCG <dim> <size>' then one codevector per line, as decimal reals that read back exactly."""
    lines = ["KFCG " + str(cb.dim) + " " + str(cb.size)]
    for codevector in cb.codevectors:
        lines.append(" ".join(repr(float(value)) for value in codevector))
    return ("\n".join(lines) + "\n").encode("ascii")


def read_codebook(data):
    """Reads the codevectors written by write_codebook, returns an array of shape (size, dim)."""
    lines = bytes(data).decode("ascii").splitlines()
    if not lines:
        raise ValueError("Codebook file is empty")
    header = lines[0].split()
    if len(header) != 3 or header[0] != "KFCG" or not header[1].isdigit() or not header[2].isdigit():
        raise ValueError("Codebook header must be 'KFCG <dim> <size>', got " + repr(lines[0]))
    dim, size = int(header[1]), int(header[2])
    rows = [line.split() for line in lines[1:] if line.strip()]
    if len(rows) != size or any(len(row) != dim for row in rows):
        raise ValueError("Codebook body does not hold " + str(size) + " codevectors of dimension " + str(dim))
    return np.array([[float(value) for value in row] for row in rows], dtype=np.float64).reshape(size, dim)


def write_assignment(assignment):
    """One cluster index per training vector, one per line."""
    return "".join(str(int(index)) + "\n" for index in assignment).encode("ascii")


def read_assignment(data):
    return np.array([int(line) for line in bytes(data).decode("ascii").split()], dtype=np.int64)
