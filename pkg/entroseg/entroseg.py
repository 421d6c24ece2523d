"""
The entroseg module interacts with the library's submodules to segment a grayscale image with vector quantization on its entropy image.
By default, each stage of the pipeline is available, but the user can choose to exclude some (for instance the GLCM baseline).

This module contains two types of components:
First, the low-level processor, which is referenced in the documentation or in the code as a 'segmenter'.
At start-up : it records the configuration of every stage, and which stages depend on which.
Afterwards, this processor can compute each stage for any given image.

The second type are parsed images, obtained by calling the parse function from the segmenter.
On top of containing the image itself, these store the result of each stage once calculated, so that intermediate images
(probability image, entropy image, codebook..) are computed only once even when several later stages need them.
"""
import logging

from .image_core.image_core import GrayImage, quantize_to_gray
from .methods import segmentation, vq
from .parsed_image import parsed_image
from .stats import entropy, glcm

logger = logging.getLogger(__name__)

GLCM_STAGES = ("glcm_entropy", "glcm_equalized")
CLUSTER_SOURCES = ("entropy", "original")
DEFAULT_OVERLAY = (4, 8)


class Segmenter:
    """
    The Segmenter class provides a way to access the underlying library submodules in order to segment an image.

    - List of **attributes**::
        :param dict informations: Dictionary associating stages with the functions needed to calculate them, alongside the stages they depend on.
        :param dict excluded_informations: Same as above, but contains stages that have been excluded at start-up.
        :param EntropyConfig entropy_config: Window size, logarithm base and mode of the entropy image.
        :param int block_w: Width of the blocks forming the training vectors.
        :param int block_h: Height of the blocks forming the training vectors.
        :param int codebook_size: Number of codevectors generated by KFCG.
        :param int num_clusters: Number of super-clusters after requantization.
        :param CannyParams canny_params: Parameters of Canny's operator.
        :param GlcmConfig glcm_config: Parameters of the GLCM baseline.
        :param str cluster_source: Which image fills the cluster images, 'entropy' (equalized entropy image) or 'original'.
        :param tuple overlay_clusters: 1-based ids of the clusters whose edge maps are superimposed on the original image,
            defaults to the clusters of DEFAULT_OVERLAY that exist.
    """
    def __init__(self, exclude=(), entropy_config=None, block_w=2, block_h=2, codebook_size=128, num_clusters=8,
                 canny_params=None, glcm_config=None, cluster_source="entropy", overlay_clusters=None):
        """
        Constructor of the Segmenter class, won't return any value but creates the attributes listed above.

        :param list(str) exclude: List of stages to exclude, in order to modify the `informations` attribute.
        """
        if codebook_size < num_clusters or num_clusters < 1:
            raise ValueError("Codebook size and number of clusters must satisfy codebook_size >= num_clusters >= 1, got "
                             + str(codebook_size) + " and " + str(num_clusters))
        if cluster_source not in CLUSTER_SOURCES:
            raise ValueError("Type of parameter 'cluster_source' cannot be '" + str(cluster_source) + "', needs to be 'entropy' or 'original'")
        if overlay_clusters is None:
            overlay_clusters = [cluster_id for cluster_id in DEFAULT_OVERLAY if cluster_id <= num_clusters]
        for cluster_id in overlay_clusters:
            if not 1 <= cluster_id <= num_clusters:
                raise ValueError("Overlay cluster " + str(cluster_id) + " is out of range [1, " + str(num_clusters) + "]")
        self.entropy_config = entropy_config or entropy.EntropyConfig()
        self.block_w = block_w
        self.block_h = block_h
        self.codebook_size = codebook_size
        self.num_clusters = num_clusters
        self.canny_params = canny_params or segmentation.CannyParams()
        self.glcm_config = glcm_config or glcm.GlcmConfig()
        self.cluster_source = cluster_source
        self.overlay_clusters = tuple(overlay_clusters)

        # This dictionary associates stages with the functions used to calculate them, alongside the stages they depend on.
        self.informations = dict(
            probability=dict(function=self.probability, dependencies=[], default_arguments=dict()),
            probability_equalized=dict(function=self.probability_equalized, dependencies=["probability"], default_arguments=dict()),
            entropy=dict(function=self.entropy, dependencies=["probability"], default_arguments=dict(cfg=self.entropy_config)),
            entropy_gray=dict(function=self.entropy_gray, dependencies=["entropy"], default_arguments=dict()),
            entropy_equalized=dict(function=self.entropy_equalized, dependencies=["entropy_gray"], default_arguments=dict()),
            training=dict(function=self.training, dependencies=["entropy_equalized"],
                          default_arguments=dict(block_w=block_w, block_h=block_h)),
            codebook=dict(function=self.codebook, dependencies=["training"], default_arguments=dict(size=codebook_size)),
            requantization=dict(function=self.requantization, dependencies=["codebook"], default_arguments=dict(target=num_clusters)),
            super_assignment=dict(function=self.super_assignment, dependencies=["codebook", "requantization"], default_arguments=dict()),
            labels=dict(function=self.labels, dependencies=["training", "super_assignment"], default_arguments=dict()),
            cluster_images=dict(function=self.cluster_images, dependencies=["labels", "entropy_equalized"],
                                default_arguments=dict(source=cluster_source)),
            edges=dict(function=self.edges, dependencies=["cluster_images"],
                       default_arguments=dict(clusters=self.overlay_clusters, params=self.canny_params)),
            overlays=dict(function=self.overlays, dependencies=["edges"], default_arguments=dict()),
            glcm_entropy=dict(function=self.glcm_entropy, dependencies=[], default_arguments=dict(cfg=self.glcm_config)),
            glcm_equalized=dict(function=self.glcm_equalized, dependencies=["glcm_entropy"], default_arguments=dict()),
        )
        self.excluded_informations = dict()

        # Then remove things in self.informations based on what's in the exclude argument
        for value in list(self.informations.keys()):
            if value in exclude:
                self.excluded_informations[value] = self.informations[value]
                del self.informations[value]
        unknown = set(exclude) - set(self.informations) - set(self.excluded_informations)
        if unknown:
            raise ValueError("Stages " + str(sorted(unknown)) + " were not recognized, available stages are " + str(list(self.informations.keys())))

    # Utility functions : parse/load/checks
    def parse(self, image, name="image"):
        """Returns a ParsedImage instance, containing the image and a reference to the segmenter used, providing a way to store and output each stage."""
        if not isinstance(image, GrayImage):
            raise TypeError("Can only parse a GrayImage, got " + type(image).__name__)
        return parsed_image.ParsedImage(image, self, name)

    def load(self, value):
        """Checks if a stage has been excluded and enables it."""
        if value in self.excluded_informations:
            self.informations[value] = self.excluded_informations.pop(value)
            logger.info("stage '%s' can now be calculated", value)
        elif value in self.informations:
            logger.info("no need to call .load(%s), stage already exists in instance.informations", value)
        else:
            raise ValueError("Stage '" + str(value) + "' was not recognized as part of instance.informations or instance.excluded_informations, please check if you've done a typo.")

    def check_stage_and_dependencies_available(self, stage_name):
        """Indicates whether a stage, and every stage it depends on, is available."""
        if stage_name not in self.informations:
            logger.warning("stage '%s' was not found in instance.informations, check if it was excluded when initializing the Segmenter", stage_name)
            return False
        for dependency in self.informations[stage_name]["dependencies"]:
            if not self.check_stage_and_dependencies_available(dependency):
                return False
        return True

    # Entropy stages
    def probability(self, parsed):
        """Probability image: relative frequency of each pixel's gray level."""
        return entropy.probability_image(parsed.image)

    def probability_equalized(self, parsed):
        """Histogram equalized probability image, for display."""
        return entropy.equalize_float_image(parsed.call_stage("probability"))

    def entropy(self, parsed, cfg):
        """Entropy image, from the probability image or from the gray image depending on the mode."""
        logger.info("computing entropy image (%dx%d window, %s)..", cfg.window_size, cfg.window_size, cfg.mode.value)
        if cfg.mode is entropy.EntropyMode.LOCAL_EMPIRICAL:
            return entropy.entropy_image(parsed.image, cfg)
        return entropy.entropy_image(parsed.call_stage("probability"), cfg)

    def entropy_gray(self, parsed):
        """Entropy image quantized to 8 bits, before equalization."""
        return quantize_to_gray(parsed.call_stage("entropy"))

    def entropy_equalized(self, parsed):
        """Histogram equalized entropy image, the image that is segmented."""
        return entropy.histogram_equalize(parsed.call_stage("entropy_gray"))

    # Vector quantization stages
    def training(self, parsed, block_w, block_h):
        """Training vectors from the blocks of the equalized entropy image."""
        return vq.extract_training_vectors(parsed.call_stage("entropy_equalized"), block_w, block_h)

    def codebook(self, parsed, size):
        """KFCG codebook of the training vectors."""
        logger.info("generating codebook of size %d..", size)
        codebook = vq.kfcg_codebook(parsed.call_stage("training"), size)
        logger.info("codebook generated: %d codevectors", codebook.size)
        return codebook

    def requantization(self, parsed, target):
        """Super-cluster of every codevector."""
        codebook = parsed.call_stage("codebook")
        if codebook.size < target:
            logger.warning("WARNING: only %d codevectors for %d clusters, some clusters will be empty", codebook.size, target)
        logger.info("requantizing %d codevectors into %d clusters..", codebook.size, min(target, codebook.size))
        return vq.requantize_codebook(codebook, min(target, codebook.size))

    def super_assignment(self, parsed):
        """Super-cluster of every training vector."""
        return vq.compose_assignment(parsed.call_stage("codebook"), parsed.call_stage("requantization"))

    def labels(self, parsed):
        """Label image: super-cluster of every pixel."""
        training = parsed.call_stage("training")
        return vq.build_label_image(training, parsed.call_stage("super_assignment"), parsed.image.width, parsed.image.height,
                                    training.block_w, training.block_h, self.num_clusters)

    # Segmentation stages
    def cluster_images(self, parsed, source):
        """One image per cluster, filled with the equalized entropy image or the original image."""
        if source not in CLUSTER_SOURCES:
            raise ValueError("Type of parameter 'source' cannot be '" + str(source) + "', needs to be 'entropy' or 'original'")
        source_image = parsed.call_stage("entropy_equalized") if source == "entropy" else parsed.image
        labels = parsed.call_stage("labels")
        return [segmentation.cluster_image(source_image, labels, cluster_id) for cluster_id in range(labels.num_clusters)]

    def edges(self, parsed, clusters, params):
        """Canny edge maps of the selected cluster images, keyed by 1-based cluster id."""
        cluster_images = parsed.call_stage("cluster_images")
        result = dict()
        for cluster_id in clusters:
            logger.info("computing edge map of cluster %d..", cluster_id)
            result[cluster_id] = segmentation.canny_edges(cluster_images[cluster_id - 1].image, params)
        return result

    def overlays(self, parsed):
        """Edge maps superimposed on the original image, keyed by 1-based cluster id."""
        return {cluster_id: segmentation.superimpose(parsed.image, edges)
                for cluster_id, edges in parsed.call_stage("edges").items()}

    # GLCM baseline
    def glcm_entropy(self, parsed, cfg):
        """GLCM entropy image of the original image."""
        logger.info("computing GLCM entropy image (%d levels, offset %s)..", cfg.levels, cfg.offset)
        return glcm.glcm_entropy_image(parsed.image, cfg)

    def glcm_equalized(self, parsed):
        """Quantized and equalized GLCM entropy image."""
        return entropy.equalize_float_image(parsed.call_stage("glcm_entropy"))
