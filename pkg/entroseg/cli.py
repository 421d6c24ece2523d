"""
Command line interface : runs the whole segmentation pipeline on one image and writes every intermediate image,
the codebook, the cluster assignment and a manifest describing the run.

    entroseg run --input image.pgm --outdir out/ [--window 5] [--no-glcm] ..
    entroseg rerun --manifest out/image_manifest.txt [--outdir other/]

The manifest holds every resolved configuration value, so that rerun reproduces byte-identical outputs.
"""
import argparse
import logging
import os
import sys
from dataclasses import dataclass, field

from . import __version__
from .entroseg import DEFAULT_OVERLAY, GLCM_STAGES, Segmenter
from .image_core.image_core import load_image, quantize_to_gray, save_image, write_png_rgb
from .methods import segmentation, vq
from .stats.entropy import EntropyConfig, EntropyMode
from .stats.glcm import GlcmConfig
from .utils import utils

logger = logging.getLogger(__name__)

MANIFEST_SUFFIX = "_manifest.txt"
# labels and the margin are rendered as 8-bit gray levels
MAX_CLUSTERS = 255


class StageError(RuntimeError):
    """A pipeline stage failed, stage holds its name."""
    def __init__(self, stage, reason):
        super().__init__("stage '" + stage + "' failed: " + str(reason))
        self.stage = stage
        self.reason = reason


@dataclass(frozen=True)
class PipelineConfig:
    """
    Every parameter of a run, defaults reproduce the original experiments :
    3x3 entropy window, 2x2 blocks, codebook of size 128 requantized into 8 clusters, edges of clusters 4 and 8.
    """
    input_path: str
    output_dir: str
    entropy: EntropyConfig = field(default_factory=EntropyConfig)
    block_w: int = 2
    block_h: int = 2
    codebook_size: int = 128
    num_clusters: int = 8
    canny: segmentation.CannyParams = field(default_factory=segmentation.CannyParams)
    glcm: GlcmConfig = field(default_factory=GlcmConfig)
    emit_glcm_baseline: bool = True
    cluster_source: str = "entropy"
    overlay_clusters: tuple = None
    color_overlay: bool = False
    figures: bool = False

    def __post_init__(self):
        if self.block_w < 1 or self.block_h < 1:
            raise ValueError("Block dimensions must be >= 1, got " + str(self.block_w) + "x" + str(self.block_h))
        if not self.codebook_size >= self.num_clusters >= 1:
            raise ValueError("Codebook size and number of clusters must satisfy codebook >= clusters >= 1, got "
                             + str(self.codebook_size) + " and " + str(self.num_clusters))
        if self.num_clusters > MAX_CLUSTERS:
            raise ValueError("Number of clusters must be <= " + str(MAX_CLUSTERS) + " to fit the label image, got " + str(self.num_clusters))
        if self.cluster_source not in ("entropy", "original"):
            raise ValueError("Type of parameter 'cluster_source' cannot be '" + str(self.cluster_source) + "', needs to be 'entropy' or 'original'")
        # absolute, reruns do not depend on the working directory
        object.__setattr__(self, "input_path", os.path.abspath(self.input_path))
        if self.overlay_clusters is None:
            overlay_clusters = tuple(cluster_id for cluster_id in DEFAULT_OVERLAY if cluster_id <= self.num_clusters)
        else:
            overlay_clusters = tuple(int(cluster_id) for cluster_id in self.overlay_clusters)
        for cluster_id in overlay_clusters:
            if not 1 <= cluster_id <= self.num_clusters:
                raise ValueError("Overlay cluster " + str(cluster_id) + " is out of range [1, " + str(self.num_clusters) + "]")
        object.__setattr__(self, "overlay_clusters", overlay_clusters)

    @property
    def stem(self):
        return os.path.splitext(os.path.basename(self.input_path))[0]

    def _flags(self):
        """(flag, value) pairs of the 'run' command rebuilding this configuration, value is None for switches."""
        flags = [
            ("input", self.input_path),
            ("window", str(self.entropy.window_size)),
            ("mode", self.entropy.mode.value),
            ("log-base", repr(float(self.entropy.log_base))),
            ("block", str(self.block_w) + "x" + str(self.block_h)),
            ("codebook", str(self.codebook_size)),
            ("clusters", str(self.num_clusters)),
            ("cluster-source", self.cluster_source),
            ("overlay", ",".join(str(cluster_id) for cluster_id in self.overlay_clusters)),
            ("canny-sigma", repr(float(self.canny.gaussian_sigma))),
            ("canny-high-frac", repr(float(self.canny.high_fraction))),
            ("canny-low-frac", repr(float(self.canny.low_fraction))),
            ("glcm-window", str(self.glcm.window_size)),
            ("glcm-levels", str(self.glcm.levels)),
            ("glcm-offset", ",".join(str(value) for value in self.glcm.offset)),
        ]
        if self.canny.high_threshold is not None:
            flags += [("canny-high", repr(float(self.canny.high_threshold))), ("canny-low", repr(float(self.canny.low_threshold)))]
        switches = [("glcm-asymmetric", not self.glcm.symmetric), ("no-glcm", not self.emit_glcm_baseline),
                    ("color-overlay", self.color_overlay), ("figures", self.figures)]
        flags += [(name, None) for name, enabled in switches if enabled]
        return flags

    def to_manifest(self):
        """Flattens the configuration into 'config.<flag>' manifest entries, switches hold 'true'."""
        return {"config." + name: "true" if value is None else value for name, value in self._flags()}


def config_from_manifest(path, output_dir=None):
    """
    Rebuilds the configuration of a previous run from its manifest.

    :param str path: Manifest written by run_pipeline.
    :param str output_dir: Where to write the outputs, defaults to the directory holding the manifest.
    :rtype: PipelineConfig
    """
    with open(path, "rb") as file:
        entries = utils.parse_manifest(file.read())
    if "config.input" not in entries:
        raise ValueError("Manifest '" + str(path) + "' holds no 'config.input' entry")
    arguments = ["run"]
    for key, value in sorted(entries.items()):
        if key.startswith("config."):
            name = key[len("config."):]
            arguments.append("--" + name if value == "true" else "--" + name + "=" + value)
    arguments.append("--outdir=" + (output_dir if output_dir is not None else os.path.dirname(os.path.abspath(path))))
    return parse_args(arguments)


# Argument types
def _odd_window(value):
    try:
        window = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError("window size must be an integer, got '" + value + "'")
    if window < 3 or window % 2 == 0:
        raise argparse.ArgumentTypeError("window size must be an odd integer >= 3, got " + value)
    return window


def _block(value):
    try:
        width, height = (int(part) for part in value.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError("block must be WxH, got '" + value + "'")
    if width < 1 or height < 1:
        raise argparse.ArgumentTypeError("block dimensions must be >= 1, got '" + value + "'")
    return width, height


def _int_list(value):
    if not value:
        return ()
    try:
        return tuple(int(part) for part in value.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("expected comma separated integers, got '" + value + "'")


def _offset(value):
    offset = _int_list(value)
    if len(offset) != 2:
        raise argparse.ArgumentTypeError("offset must be dx,dy, got '" + value + "'")
    return offset


def build_parser():
    parser = argparse.ArgumentParser(prog="entroseg", description="Segmentation of grayscale images using vector quantization on entropy images.")
    parser.add_argument("--version", action="version", version="%(prog)s " + __version__)
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="segment one image", formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    run.add_argument("--input", required=True, help="input image, 8-bit PGM (P5) or grayscale PNG")
    run.add_argument("--outdir", required=True, help="directory receiving every output file")
    run.add_argument("--window", type=_odd_window, default=3, help="side of the entropy window, odd")
    run.add_argument("--mode", choices=[mode.value for mode in EntropyMode], default=EntropyMode.PROBABILITY_SUM.value,
                     help="reading of the entropy formula")
    run.add_argument("--log-base", type=float, default=2.0, help="base of the entropy logarithm")
    run.add_argument("--block", type=_block, default=(2, 2), metavar="WxH", help="size of the blocks forming training vectors")
    run.add_argument("--codebook", type=int, default=128, help="codebook size")
    run.add_argument("--clusters", type=int, default=8, help="number of clusters after requantization")
    run.add_argument("--cluster-source", choices=["entropy", "original"], default="entropy", help="image shown inside cluster images")
    run.add_argument("--overlay", type=_int_list, default=None,
                     help="1-based clusters whose edges are superimposed, 4,8 when they exist")
    run.add_argument("--no-glcm", action="store_true", help="skip the GLCM entropy baseline")
    run.add_argument("--canny-sigma", type=float, default=1.0, help="Gaussian smoothing of Canny's operator")
    run.add_argument("--canny-high-frac", type=float, default=0.2, help="high threshold as a share of the largest gradient")
    run.add_argument("--canny-low-frac", type=float, default=0.4, help="low threshold as a share of the high threshold")
    run.add_argument("--canny-high", type=float, default=None, help="absolute high threshold, requires --canny-low")
    run.add_argument("--canny-low", type=float, default=None, help="absolute low threshold, requires --canny-high")
    run.add_argument("--glcm-window", type=_odd_window, default=3, help="side of the GLCM window, odd")
    run.add_argument("--glcm-levels", type=int, default=8, help="gray levels of the co-occurrence matrix")
    run.add_argument("--glcm-offset", type=_offset, default=(1, 0), metavar="DX,DY", help="displacement between paired pixels")
    run.add_argument("--glcm-asymmetric", action="store_true", help="do not add transposed pairs")
    run.add_argument("--color-overlay", action="store_true", help="also write overlays with edges in red, as PNG")
    run.add_argument("--figures", action="store_true", help="also draw every stage in one PNG figure")
    _add_logging_flags(run)

    rerun = commands.add_parser("rerun", help="reproduce a run from its manifest", formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    rerun.add_argument("--manifest", required=True, help="manifest written by a previous run")
    rerun.add_argument("--outdir", default=None, help="output directory, defaults to the directory of the manifest")
    _add_logging_flags(rerun)
    return parser


def _add_logging_flags(parser):
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("--verbose", action="store_true", help="log every stage in detail")
    verbosity.add_argument("--quiet", action="store_true", help="only log warnings and errors")


def _config_from_namespace(namespace):
    return PipelineConfig(
        input_path=namespace.input,
        output_dir=namespace.outdir,
        entropy=EntropyConfig(namespace.window, namespace.log_base, EntropyMode(namespace.mode)),
        block_w=namespace.block[0],
        block_h=namespace.block[1],
        codebook_size=namespace.codebook,
        num_clusters=namespace.clusters,
        canny=segmentation.CannyParams(namespace.canny_sigma, namespace.canny_high_frac, namespace.canny_low_frac,
                                       namespace.canny_high, namespace.canny_low),
        glcm=GlcmConfig(namespace.glcm_window, namespace.glcm_offset, namespace.glcm_levels, not namespace.glcm_asymmetric),
        emit_glcm_baseline=not namespace.no_glcm,
        cluster_source=namespace.cluster_source,
        overlay_clusters=namespace.overlay,
        color_overlay=namespace.color_overlay,
        figures=namespace.figures,
    )


def _parse(argv):
    """Returns (namespace, config), exits with code 2 on invalid arguments."""
    parser = build_parser()
    namespace = parser.parse_args(argv)
    try:
        if namespace.command == "rerun":
            return namespace, config_from_manifest(namespace.manifest, namespace.outdir)
        return namespace, _config_from_namespace(namespace)
    except (ValueError, TypeError, OSError) as error:
        parser.error(str(error))


def parse_args(argv):
    """
    Parses command line arguments into a PipelineConfig.

    :param list(str) argv: Arguments, without the program name.
    :rtype: PipelineConfig
    """
    return _parse(argv)[1]


class _Run:
    """Writes the outputs of one run and keeps track of the manifest entries."""
    def __init__(self, cfg):
        self.cfg = cfg
        self.entries = cfg.to_manifest()
        self.entries["toolkit.version"] = __version__

    def path(self, suffix):
        return os.path.join(self.cfg.output_dir, self.cfg.stem + "_" + suffix)

    def write_image(self, artifact, img, extension=".pgm"):
        name = self.cfg.stem + "_" + artifact + extension
        save_image(os.path.join(self.cfg.output_dir, name), img)
        self.entries["output." + artifact] = name

    def write_bytes(self, artifact, data, extension):
        name = self.cfg.stem + "_" + artifact + extension
        with open(os.path.join(self.cfg.output_dir, name), "wb") as file:
            file.write(data)
        self.entries["output." + artifact] = name

    def write_manifest(self):
        with open(self.path(MANIFEST_SUFFIX[1:]), "wb") as file:
            file.write(utils.format_manifest(self.entries))


def _make_segmenter(cfg):
    return Segmenter(
        exclude=() if cfg.emit_glcm_baseline else GLCM_STAGES,
        entropy_config=cfg.entropy,
        block_w=cfg.block_w,
        block_h=cfg.block_h,
        codebook_size=cfg.codebook_size,
        num_clusters=cfg.num_clusters,
        canny_params=cfg.canny,
        glcm_config=cfg.glcm,
        cluster_source=cfg.cluster_source,
        overlay_clusters=cfg.overlay_clusters,
    )


def run_pipeline(cfg):
    """
    Runs every stage on the input image and writes the results in the output directory.

    Outputs are named after the input file : <stem>_probability.pgm, <stem>_entropy_equalized.pgm, <stem>_cluster<k>.pgm..
    On failure, files already written are kept and the manifest records status=failed and the failing stage.

    :param PipelineConfig cfg: Configuration of the run.
    :return: Manifest entries, also written to <stem>_manifest.txt.
    :rtype: dict
    :raises StageError: When a stage fails.
    """
    try:
        os.makedirs(cfg.output_dir, exist_ok=True)
    except OSError as error:
        raise StageError("outdir", error) from error
    run = _Run(cfg)
    state = dict()

    def read():
        state["parsed"] = _make_segmenter(cfg).parse(load_image(cfg.input_path), name=cfg.stem)
        run.entries["input.sha256"] = utils.sha256_of_file(cfg.input_path)
        run.entries["input.width"] = state["parsed"].image.width
        run.entries["input.height"] = state["parsed"].image.height

    def probability():
        parsed = state["parsed"]
        run.write_image("probability", quantize_to_gray(parsed.probability()))
        run.write_image("probability_equalized", parsed.probability_equalized())

    def entropy():
        parsed = state["parsed"]
        run.write_image("entropy", parsed.entropy_gray())
        run.write_image("entropy_equalized", parsed.entropy_equalized())

    def codebook():
        parsed = state["parsed"]
        codebook = parsed.codebook()
        run.write_bytes("codebook", vq.write_codebook(codebook), ".txt")
        run.entries["codebook.size"] = codebook.size
        run.entries["codebook.requested_size"] = codebook.requested_size
        run.entries["codebook.empty_split_count"] = codebook.shortfall
        run.entries["codebook.discarded_children"] = codebook.discarded_children
        run.entries["codebook.dimension"] = codebook.dim
        run.entries["codebook.distortion"] = repr(vq.distortion(parsed.training(), codebook))

    def requantization():
        parsed = state["parsed"]
        super_assignment = parsed.super_assignment()
        run.write_bytes("assignment", vq.write_assignment(super_assignment), ".txt")
        run.entries["clusters.count"] = cfg.num_clusters
        run.entries["clusters.non_empty"] = len(set(super_assignment.tolist()))

    def labels():
        run.write_image("labels", segmentation.label_image_to_gray(state["parsed"].labels()))

    def cluster_images():
        for cluster in state["parsed"].cluster_images():
            run.write_image("cluster" + str(cluster.cluster_id + 1), cluster.image)

    def edges():
        parsed = state["parsed"]
        overlays = parsed.overlays()
        for cluster_id, edge_map in parsed.edges().items():
            run.write_image("cluster" + str(cluster_id) + "_edges", segmentation.edges_to_gray(edge_map))
            run.write_image("cluster" + str(cluster_id) + "_overlay", overlays[cluster_id])
            if cfg.color_overlay:
                run.write_bytes("cluster" + str(cluster_id) + "_overlay_color",
                                write_png_rgb(segmentation.superimpose_color(parsed.image, edge_map)), ".png")

    def glcm():
        parsed = state["parsed"]
        run.write_image("glcm_entropy", quantize_to_gray(parsed.glcm_entropy()))
        run.write_image("glcm_entropy_equalized", parsed.glcm_equalized())

    def figures():
        state["parsed"].plot_figures(run.path("figures.png"))
        run.entries["output.figures"] = cfg.stem + "_figures.png"

    stages = [("read", read), ("probability", probability), ("entropy", entropy), ("codebook", codebook),
              ("requantization", requantization), ("labels", labels), ("cluster_images", cluster_images), ("edges", edges)]
    if cfg.emit_glcm_baseline:
        stages.append(("glcm", glcm))
    if cfg.figures:
        stages.append(("figures", figures))

    for stage, function in stages:
        logger.info("stage '%s'..", stage)
        try:
            function()
        except Exception as error:
            run.entries["status"] = "failed"
            run.entries["failed_stage"] = stage
            run.entries["error"] = " ".join(str(error).split()) or type(error).__name__
            run.write_manifest()
            raise StageError(stage, error) from error
    run.entries["status"] = "ok"
    run.write_manifest()
    logger.info("%d files written in %s", sum(1 for key in run.entries if key.startswith("output.")) + 1, cfg.output_dir)
    return run.entries


def main(argv=None):
    """Entry point of the entroseg command, returns the exit code."""
    namespace, cfg = _parse(sys.argv[1:] if argv is None else argv)
    level = logging.DEBUG if namespace.verbose else logging.WARNING if namespace.quiet else logging.INFO
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        run_pipeline(cfg)
    except StageError as error:
        print(str(error), file=sys.stderr)
        return 1
    return 0
