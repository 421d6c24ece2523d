import os

import numpy as np
import pytest

from entroseg import cli
from entroseg.image_core.image_core import GrayImage, write_pgm
from entroseg.stats.entropy import EntropyMode
from entroseg.utils import utils

from conftest import two_texture_image

SMALL = ["--codebook", "16", "--clusters", "4", "--overlay", "2,4"]


def noise(size, seed=11):
    rng = np.random.default_rng(seed)
    return GrayImage(rng.integers(0, 256, size=(size, size), dtype=np.uint8))


def read_manifest(outdir, stem="image"):
    with open(os.path.join(outdir, stem + "_manifest.txt"), "rb") as file:
        return utils.parse_manifest(file.read())


def test_parse_args_defaults():
    cfg = cli.parse_args(["run", "--input", "in.pgm", "--outdir", "out"])
    assert cfg.entropy.window_size == 3
    assert cfg.entropy.mode is EntropyMode.PROBABILITY_SUM
    assert cfg.entropy.log_base == 2.0
    assert (cfg.block_w, cfg.block_h) == (2, 2)
    assert cfg.codebook_size == 128
    assert cfg.num_clusters == 8
    assert cfg.overlay_clusters == (4, 8)
    assert cfg.cluster_source == "entropy"
    assert cfg.emit_glcm_baseline
    assert cfg.glcm.offset == (1, 0) and cfg.glcm.levels == 8
    assert cfg.canny.gaussian_sigma == 1.0


def test_parse_args_flags():
    cfg = cli.parse_args(["run", "--input", "in.pgm", "--outdir", "out", "--window", "5", "--mode", "local-empirical",
                          "--block", "3x2", "--no-glcm", "--glcm-offset=-1,1", "--cluster-source", "original"])
    assert cfg.entropy.window_size == 5
    assert cfg.entropy.mode is EntropyMode.LOCAL_EMPIRICAL
    assert (cfg.block_w, cfg.block_h) == (3, 2)
    assert not cfg.emit_glcm_baseline
    assert cfg.glcm.offset == (-1, 1)
    assert cfg.cluster_source == "original"


@pytest.mark.parametrize("arguments", [
    ["--window", "4"],
    ["--window", "three"],
    ["--block", "0x2"],
    ["--codebook", "4"],
    ["--overlay", "9"],
    ["--glcm-levels", "1"],
    ["--canny-high", "5"],
    ["--mode", "global"],
    ["--unknown"],
])
def test_parse_args_errors(arguments, capsys):
    with pytest.raises(SystemExit) as error:
        cli.parse_args(["run", "--input", "in.pgm", "--outdir", "out"] + arguments)
    assert error.value.code == 2


def test_clusters_beyond_label_range(capsys):
    with pytest.raises(SystemExit) as error:
        cli.parse_args(["run", "--input", "in.pgm", "--outdir", "out", "--codebook", "512", "--clusters", "256"])
    assert error.value.code == 2
    assert "255" in capsys.readouterr().err


def test_default_overlay_follows_clusters():
    assert cli.parse_args(["run", "--input", "in.pgm", "--outdir", "out", "--clusters", "4"]).overlay_clusters == (4,)
    assert cli.parse_args(["run", "--input", "in.pgm", "--outdir", "out", "--clusters", "3"]).overlay_clusters == ()
    with pytest.raises(SystemExit):
        cli.parse_args(["run", "--input", "in.pgm", "--outdir", "out", "--clusters", "4", "--overlay", "8"])


def test_input_path_is_absolute(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    cfg = cli.parse_args(["run", "--input", "in.pgm", "--outdir", "out"])
    assert cfg.input_path == str(tmp_path / "in.pgm")
    assert cfg.stem == "in"


def test_even_window_message(capsys):
    with pytest.raises(SystemExit):
        cli.parse_args(["run", "--input", "in.pgm", "--outdir", "out", "--window", "4"])
    assert "odd" in capsys.readouterr().err


def test_help_lists_defaults(capsys):
    with pytest.raises(SystemExit) as error:
        cli.main(["run", "--help"])
    assert error.value.code == 0
    out = capsys.readouterr().out
    for flag in ("--window", "--codebook", "--clusters", "--canny-sigma", "--glcm-offset", "--no-glcm"):
        assert flag in out
    assert "default: 128" in out


def test_manifest_round_trip(tmp_path):
    cfg = cli.parse_args(["run", "--input", "in.pgm", "--outdir", "out", "--window", "5", "--glcm-offset=0,-1",
                          "--canny-high", "40", "--canny-low", "10", "--figures"] + SMALL)
    path = tmp_path / "image_manifest.txt"
    path.write_bytes(utils.format_manifest(cfg.to_manifest()))
    rebuilt = cli.config_from_manifest(str(path), "out")
    assert rebuilt == cfg


def test_default_run_writes_every_file(tmp_path, write_input):
    outdir = tmp_path / "out"
    assert cli.main(["run", "--input", write_input(noise(64)), "--outdir", str(outdir)]) == 0
    names = sorted(os.listdir(outdir))
    assert len(names) == 22
    expected = ["image_probability.pgm", "image_probability_equalized.pgm", "image_entropy.pgm", "image_entropy_equalized.pgm",
                "image_codebook.txt", "image_assignment.txt", "image_labels.pgm", "image_manifest.txt",
                "image_glcm_entropy.pgm", "image_glcm_entropy_equalized.pgm"]
    expected += ["image_cluster" + str(k) + ".pgm" for k in range(1, 9)]
    expected += ["image_cluster" + str(k) + suffix for k in (4, 8) for suffix in ("_edges.pgm", "_overlay.pgm")]
    assert names == sorted(expected)
    manifest = read_manifest(outdir)
    assert manifest["status"] == "ok"
    assert manifest["codebook.size"] == "128"
    assert manifest["codebook.dimension"] == "4"
    assert manifest["clusters.count"] == "8"
    assert manifest["input.sha256"] == utils.sha256_of_file(os.path.join(tmp_path, "image.pgm"))
    assert manifest["output.cluster4_overlay"] == "image_cluster4_overlay.pgm"
    assert float(manifest["codebook.distortion"]) >= 0


def test_no_glcm(tmp_path, write_input):
    outdir = tmp_path / "out"
    assert cli.main(["run", "--input", write_input(noise(16)), "--outdir", str(outdir), "--no-glcm", "--quiet"] + SMALL) == 0
    names = os.listdir(outdir)
    assert len(names) == 2 + 2 + 2 + 1 + 4 + 4 + 1
    assert not any("glcm" in name for name in names)


def test_optional_outputs(tmp_path, write_input):
    outdir = tmp_path / "out"
    assert cli.main(["run", "--input", write_input(noise(16)), "--outdir", str(outdir), "--figures", "--color-overlay"] + SMALL) == 0
    manifest = read_manifest(outdir)
    for artifact in ("figures", "cluster2_overlay_color", "cluster4_overlay_color"):
        with open(os.path.join(outdir, manifest["output." + artifact]), "rb") as file:
            assert file.read(4) == b"\x89PNG"


def test_runs_are_byte_identical(tmp_path, write_input):
    path = write_input(noise(32))
    for name in ("first", "second"):
        assert cli.main(["run", "--input", path, "--outdir", str(tmp_path / name), "--window", "5"] + SMALL) == 0
    assert utils.sha256_of_directory(tmp_path / "first") == utils.sha256_of_directory(tmp_path / "second")


def test_rerun_from_manifest(tmp_path, write_input):
    path = write_input(noise(32))
    first = tmp_path / "first"
    assert cli.main(["run", "--input", path, "--outdir", str(first), "--mode", "local-empirical", "--glcm-offset=-1,1"] + SMALL) == 0
    second = tmp_path / "second"
    assert cli.main(["rerun", "--manifest", str(first / "image_manifest.txt"), "--outdir", str(second)]) == 0
    assert utils.sha256_of_directory(first) == utils.sha256_of_directory(second)


def test_rerun_of_relative_input_from_another_directory(tmp_path, monkeypatch):
    work = tmp_path / "work"
    work.mkdir()
    (work / "image.pgm").write_bytes(write_pgm(noise(16)))
    monkeypatch.chdir(work)
    assert cli.main(["run", "--input", "image.pgm", "--outdir", "out"] + SMALL) == 0
    monkeypatch.chdir(tmp_path)
    again = tmp_path / "again"
    assert cli.main(["rerun", "--manifest", str(work / "out" / "image_manifest.txt"), "--outdir", str(again)]) == 0
    assert utils.sha256_of_directory(work / "out") == utils.sha256_of_directory(again)


def test_small_cluster_count_runs_with_default_overlay(tmp_path, write_input):
    outdir = tmp_path / "out"
    assert cli.main(["run", "--input", write_input(noise(16)), "--outdir", str(outdir), "--codebook", "8",
                     "--clusters", "2", "--no-glcm"]) == 0
    assert read_manifest(outdir)["config.overlay"] == ""
    assert not any(name.endswith("_overlay.pgm") for name in os.listdir(outdir))
    assert cli.main(["rerun", "--manifest", str(outdir / "image_manifest.txt"), "--outdir", str(tmp_path / "again")]) == 0


def test_rerun_in_place_regenerates_deleted_outputs(tmp_path, write_input):
    path = write_input(noise(16))
    outdir = tmp_path / "out"
    assert cli.main(["run", "--input", path, "--outdir", str(outdir)] + SMALL) == 0
    checksum = utils.sha256_of_directory(outdir)
    for name in os.listdir(outdir):
        if not name.endswith("_manifest.txt"):
            os.remove(outdir / name)
    assert cli.main(["rerun", "--manifest", str(outdir / "image_manifest.txt")]) == 0
    assert utils.sha256_of_directory(outdir) == checksum


def test_constant_input(tmp_path, write_input):
    outdir = tmp_path / "out"
    path = write_input(GrayImage(np.full((16, 16), 128, dtype=np.uint8)), "flat.pgm")
    assert cli.main(["run", "--input", path, "--outdir", str(outdir)]) == 0
    manifest = read_manifest(outdir, "flat")
    assert manifest["codebook.size"] == "1"
    assert manifest["codebook.requested_size"] == "128"
    assert manifest["codebook.empty_split_count"] == "127"
    assert manifest["clusters.non_empty"] == "1"
    assert len(os.listdir(outdir)) == 22


def test_missing_input_fails_with_stage_name(tmp_path, capsys):
    outdir = tmp_path / "out"
    assert cli.main(["run", "--input", str(tmp_path / "missing.pgm"), "--outdir", str(outdir)]) == 1
    assert "stage 'read' failed" in capsys.readouterr().err
    manifest = read_manifest(outdir, "missing")
    assert manifest["status"] == "failed"
    assert manifest["failed_stage"] == "read"


def test_stage_error_keeps_partial_outputs(tmp_path):
    path = tmp_path / "tiny.pgm"
    path.write_bytes(b"P5\n1 1\n255\n\x10")
    cfg = cli.parse_args(["run", "--input", str(path), "--outdir", str(tmp_path / "out")] + SMALL)
    with pytest.raises(cli.StageError) as error:
        cli.run_pipeline(cfg)
    # a 1x1 image cannot hold a 2x2 block
    assert error.value.stage == "codebook"
    manifest = read_manifest(tmp_path / "out", "tiny")
    assert manifest["failed_stage"] == "codebook"
    assert os.path.exists(tmp_path / "out" / "tiny_entropy_equalized.pgm")


def test_two_texture_run(tmp_path, write_input):
    outdir = tmp_path / "out"
    assert cli.main(["run", "--input", write_input(two_texture_image(), "texture.pgm"), "--outdir", str(outdir), "--no-glcm"]) == 0
    manifest = read_manifest(outdir, "texture")
    assert manifest["codebook.size"] == "5"
    assert manifest["clusters.non_empty"] == "5"
