"""
The ParsedImage module contains the ParsedImage class, serving as an interface between an image and a Segmenter instance.

It is used to store every intermediate image (probability image, entropy image, codebook, label image..) once calculated,
so that stages sharing a dependency don't calculate it twice.
This class is meant to be created as a result of Segmenter.parse() since it uses the segmenter in order to know which stages are available.
"""
import logging

import numpy as np
import pandas as pd

from ..methods import segmentation

logger = logging.getLogger(__name__)


class ParsedImage:
    """
    The ParsedImage class serves as an interface between an image and a Segmenter instance in order to store and output each stage of the segmentation.

    List of methods : __init__, call_stage(), show_available_stages(), show_results(), show_statistics(), cluster_statistics(), plot_figures().
    It also contains accessor functions sharing the name of Segmenter stages, these use the helper function call_stage() in order to work.
    List of attributes : image, name, segmenter, statistics, results
    """
    def __init__(self, image, segmenter, name="image"):
        """
        Constructor of the ParsedImage class, creates the 'image', 'name', 'results', 'statistics', and 'segmenter' attributes.

        Keep in mind that the results default to None since they haven't been calculated yet.

        :param GrayImage image: Image to segment.
        :param Segmenter segmenter: Processor used to calculate each stage.
        :param str name: Name of the image, used in titles and logs.
        """
        self.segmenter = segmenter
        self.image = image
        self.name = name

        # Initialize results by setting them all to None
        self.results = dict()
        for info in list(segmenter.informations.keys()):
            self.results[info] = None
        for info in list(segmenter.excluded_informations.keys()):
            self.results[info] = None

        # Common statistics of the original image
        levels = np.bincount(image.data, minlength=256)
        self.statistics = dict()
        self.statistics["width"] = image.width
        self.statistics["height"] = image.height
        self.statistics["totalPixels"] = image.width * image.height
        self.statistics["distinctLevels"] = int(np.count_nonzero(levels))
        self.statistics["minimum"] = int(image.pixels.min())
        self.statistics["maximum"] = int(image.pixels.max())
        self.statistics["mean"] = float(image.pixels.mean())

    def call_stage(self, stage_name, arguments=None, force=False):
        """
        Helper function that gets a stage's result if it already exists, otherwise checks if it's available, if so calls the relevant function from the Segmenter.

        Use of function is: instance.call_stage(stage_name:str, arguments:list(argi), force:bool)
        If arguments is None, the stage's default arguments (taken from the Segmenter configuration) are used.

        :param str stage_name: Name of a stage recognized by Segmenter.informations.
        :param list(any) arguments: Values used to change behavior of underlying functions.
        :param bool force: Indicates whether to force the calculation of a stage or not.
        """
        if stage_name not in self.results:
            raise ValueError("Stage '" + str(stage_name) + "' was not recognized, available stages are " + str(self.show_available_stages()))
        # Check if stage_name already calculated
        if self.results[stage_name] is not None and not force:
            return self.results[stage_name]
        # Otherwise check if stage_name is available in segmenter
        if not self.segmenter.check_stage_and_dependencies_available(stage_name):
            raise RuntimeError("Stage '" + stage_name + "' or one of its dependencies was excluded, call segmenter.load() on it first")
        func = self.segmenter.informations[stage_name]["function"]
        if arguments is None:
            arguments = self.segmenter.informations[stage_name]["default_arguments"].values()
        logger.debug("%s: calculating stage '%s'", self.name, stage_name)
        self.results[stage_name] = func(self, *(arguments))
        return self.results[stage_name]

    def show_available_stages(self):
        """Returns currently 'available' stages' names in a list"""
        return list(self.results.keys())

    def show_results(self, force=False):
        """
        Returns a dataframe with one row per stage, telling whether it was calculated and what type of result it holds.

        :param bool force: Indicates whether to calculate every available stage first.
        """
        if force:
            for stage_name in list(self.segmenter.informations.keys()):
                self.call_stage(stage_name)
        rows = []
        for stage_name, result in self.results.items():
            rows.append(dict(stage=stage_name,
                             available=stage_name in self.segmenter.informations,
                             calculated=result is not None,
                             result=type(result).__name__ if result is not None else None))
        return pd.DataFrame(rows).set_index("stage")

    def show_statistics(self):
        """Returns a dataframe containing the statistics of the original image."""
        return pd.DataFrame([self.statistics])

    def cluster_statistics(self):
        """Returns a dataframe describing each cluster, see segmentation.cluster_statistics."""
        return segmentation.cluster_statistics(self.training(), self.super_assignment(), self.segmenter.num_clusters)

    def plot_figures(self, output_path):
        """Draws the original image, probability and entropy images, and every cluster image in one figure."""
        panels = {
            "Original image": self.image,
            "Probability image": self.probability_equalized(),
            "Entropy image": self.entropy_gray(),
            "Histogram equalized entropy image": self.entropy_equalized(),
        }
        segmentation.plot_figures(panels, self.cluster_images(), self.cluster_statistics(), output_path, title=self.name)

    # Accessors
    def probability(self, force=False):
        return self.call_stage("probability", force=force)

    def probability_equalized(self, force=False):
        return self.call_stage("probability_equalized", force=force)

    def entropy(self, force=False):
        return self.call_stage("entropy", force=force)

    def entropy_gray(self, force=False):
        return self.call_stage("entropy_gray", force=force)

    def entropy_equalized(self, force=False):
        return self.call_stage("entropy_equalized", force=force)

    def training(self, force=False):
        return self.call_stage("training", force=force)

    def codebook(self, force=False):
        return self.call_stage("codebook", force=force)

    def requantization(self, force=False):
        return self.call_stage("requantization", force=force)

    def super_assignment(self, force=False):
        return self.call_stage("super_assignment", force=force)

    def labels(self, force=False):
        return self.call_stage("labels", force=force)

    def cluster_images(self, force=False):
        return self.call_stage("cluster_images", force=force)

    def edges(self, force=False):
        return self.call_stage("edges", force=force)

    def overlays(self, force=False):
        return self.call_stage("overlays", force=force)

    def glcm_entropy(self, force=False):
        return self.call_stage("glcm_entropy", force=force)

    def glcm_equalized(self, force=False):
        return self.call_stage("glcm_equalized", force=force)
