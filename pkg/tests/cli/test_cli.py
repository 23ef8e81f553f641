"""Tests for the `cli` module."""
from pathlib import Path
from typing import List

import numpy as np
import pytest

from mmkgc.base import Toolkit
from mmkgc.cli import run
from mmkgc.exceptions import GradientCheckError
from mmkgc.model import MultiModalKgcModel
from mmkgc.numeric import load_checkpoint
from mmkgc.training.trainer import LAST_CHECKPOINT


def _train(toy_config: Path, out: Path, *extra: str) -> int:
    return run(["train", "-c", str(toy_config), "--epochs", "2", "--output-dir", str(out), *extra])


def _lines(path: Path) -> List[str]:
    return path.read_text(encoding="utf-8").splitlines()


def test_train_writes_a_checkpoint(toy_config: Path, tmp_path: Path) -> None:
    """Test that a short training run succeeds and writes its outputs."""
    out = tmp_path / "run"

    assert _train(toy_config, out) == 0
    assert (out / LAST_CHECKPOINT).exists()
    assert len(_lines(out / "trace.tsv")) == 2
    assert _lines(out / "metrics_valid.tsv")[0].startswith("mrr\t")


def test_invalid_override_is_a_config_error(toy_config: Path, tmp_path: Path) -> None:
    """Test that a negative CLUB weight and an unknown key both exit with code 2."""
    assert _train(toy_config, tmp_path / "a", "--lambda=-1") == 2
    assert _train(toy_config, tmp_path / "b", "--no-such-key", "3") == 2
    assert not (tmp_path / "a" / LAST_CHECKPOINT).exists()


def test_zero_epochs_writes_the_initialisation(toy_config: Path, tmp_path: Path) -> None:
    """Test that `--epochs 0` checkpoints the freshly initialised model."""
    out = tmp_path / "run"
    assert run(["train", "-c", str(toy_config), "--epochs", "0", "--output-dir", str(out)]) == 0

    toolkit = Toolkit(str(toy_config))
    store, features = toolkit.load_dataset()
    initial = MultiModalKgcModel(toolkit.config, store, features).checkpoint_groups()
    groups = load_checkpoint(out / LAST_CHECKPOINT)

    assert list(groups) == list(initial)
    assert all(np.array_equal(groups[name], initial[name]) for name in groups)


def test_missing_train_file_is_a_data_error(toy_config: Path, tmp_path: Path) -> None:
    """Test that an absent training file exits with code 3."""
    assert _train(toy_config, tmp_path / "run", "--train-path", str(tmp_path / "absent.txt")) == 3


def test_malformed_train_file_is_a_data_error(toy_config: Path, tmp_path: Path) -> None:
    """Test that a training line without three fields exits with code 3."""
    broken = tmp_path / "broken.txt"
    broken.write_text("alice\tknows\tbob\nalice\tknows\n", encoding="utf-8")

    assert _train(toy_config, tmp_path / "run", "--train-path", str(broken)) == 3


def test_undecodable_train_file_is_a_data_error(toy_config: Path, tmp_path: Path) -> None:
    """Test that a training file which is not UTF-8 exits with code 3."""
    broken = tmp_path / "broken.txt"
    broken.write_bytes(b"\xff\tknows\tbob\n")

    assert _train(toy_config, tmp_path / "run", "--train-path", str(broken)) == 3


def test_undecodable_checkpoint_is_a_compatibility_error(toy_config: Path, tmp_path: Path) -> None:
    """Test that a checkpoint with a non UTF-8 group name exits with code 4."""
    out = tmp_path / "run"
    assert _train(toy_config, out) == 0
    checkpoint = out / LAST_CHECKPOINT
    data = bytearray(checkpoint.read_bytes())
    data[16] = 0xFF
    checkpoint.write_bytes(bytes(data))

    code = run(["eval", "-c", str(toy_config), "--checkpoint", str(checkpoint), "--out", str(out)])

    assert code == 4


def test_eval_of_an_incompatible_checkpoint(toy_config: Path, tmp_path: Path) -> None:
    """Test that a checkpoint trained with another dimension exits with code 4."""
    out = tmp_path / "run"
    assert _train(toy_config, out) == 0

    code = run(
        ["eval", "-c", str(toy_config), "--checkpoint", str(out / LAST_CHECKPOINT), "--out", str(out), "--dim", "6"]
    )

    assert code == 4


def test_eval_writes_metrics_and_relation_table(toy_config: Path, tmp_path: Path) -> None:
    """Test that `--per-modality` adds the per-relation table next to the metrics."""
    out = tmp_path / "run"
    assert _train(toy_config, out) == 0

    code = run(
        [
            "eval",
            "-c",
            str(toy_config),
            "--checkpoint",
            str(out / LAST_CHECKPOINT),
            "--split",
            "test",
            "--per-modality",
            "--out",
            str(out),
        ]
    )

    assert code == 0
    assert _lines(out / "metrics_test.tsv")[0].startswith("mrr\t")
    assert (out / "relations_test.tsv").exists()


def test_corrupt_sparse_keeps_the_ceil_fraction(toy_config: Path, tmp_path: Path) -> None:
    """Test that 6 of the 8 toy training triples survive at ratio 0.3 and other files are copied."""
    out = tmp_path / "sparse"

    code = run(["corrupt", "-c", str(toy_config), "--scenario", "sparse", "--ratio", "0.3", "--out", str(out)])

    assert code == 0
    assert len(_lines(out / "train.txt")) == 6
    original = set(_lines(toy_config.parent / "train.txt"))
    assert set(_lines(out / "train.txt")) <= original
    for name in ("valid.txt", "test.txt", "image.txt", "text.txt"):
        assert (out / name).read_bytes() == (toy_config.parent / name).read_bytes()


@pytest.mark.parametrize("scenario", ["noise", "missing", "sparse"])
def test_corrupt_ratio_zero_is_byte_identical(scenario: str, toy_config: Path, tmp_path: Path) -> None:
    """Test that ratio 0 reproduces every input file exactly."""
    out = tmp_path / scenario

    assert run(["corrupt", "-c", str(toy_config), "--scenario", scenario, "--ratio", "0", "--out", str(out)]) == 0
    for name in ("train.txt", "valid.txt", "test.txt", "image.txt", "text.txt"):
        assert (out / name).read_bytes() == (toy_config.parent / name).read_bytes()


def test_corrupt_is_seeded(toy_config: Path, tmp_path: Path) -> None:
    """Test that the same seed writes the same noisy features."""
    for name in ("a", "b"):
        args = ["corrupt", "-c", str(toy_config), "--scenario", "noise", "--ratio", "0.6", "--seed", "9"]
        assert run([*args, "--out", str(tmp_path / name)]) == 0

    assert (tmp_path / "a" / "image.txt").read_bytes() == (tmp_path / "b" / "image.txt").read_bytes()
    assert (tmp_path / "a" / "image.txt").read_bytes() != (toy_config.parent / "image.txt").read_bytes()


@pytest.mark.parametrize("scenario", ["none", "blur"])
def test_corrupt_needs_a_real_scenario(scenario: str, toy_config: Path, tmp_path: Path) -> None:
    """Test that `none` and unknown scenarios exit with code 2."""
    code = run(["corrupt", "-c", str(toy_config), "--scenario", scenario, "--ratio", "0.1", "--out", str(tmp_path)])

    assert code == 2


def test_report_writes_both_tables(toy_config: Path, tmp_path: Path) -> None:
    """Test that the report command writes the gate and per-relation tables."""
    out = tmp_path / "run"
    assert _train(toy_config, out) == 0

    code = run(["report", "-c", str(toy_config), "--checkpoint", str(out / LAST_CHECKPOINT), "--out", str(out)])

    assert code == 0
    assert (out / "gates.tsv").exists()
    assert (out / "relations_test.tsv").exists()


def test_report_of_an_unknown_relation(toy_config: Path, tmp_path: Path) -> None:
    """Test that an unknown relation name exits with code 2."""
    out = tmp_path / "run"
    assert _train(toy_config, out) == 0

    code = run(
        [
            "report",
            "-c",
            str(toy_config),
            "--checkpoint",
            str(out / LAST_CHECKPOINT),
            "--relations",
            "knows,hates",
            "--out",
            str(out),
        ]
    )

    assert code == 2


def test_gradcheck_passes_on_the_toy_config(toy_config: Path) -> None:
    """Test that the analytic gradients agree with finite differences."""
    assert run(["gradcheck", "-c", str(toy_config)]) == 0


def test_corrupted_gradients_fail_the_check(toy_config: Path) -> None:
    """Test that scaled analytic gradients exit with code 5."""
    assert run(["gradcheck", "-c", str(toy_config), "--corrupt-gradients"]) == 5


def test_single_expert_skips_the_club_check(toy_config: Path) -> None:
    """Test that with one expert only L_kgc and L_exid are checked."""
    reports = Toolkit(str(toy_config), {"experts": 1}).gradcheck()

    assert set(reports) == {"L_kgc", "L_exid"}


def test_corrupted_gradients_name_the_losses(toy_config: Path) -> None:
    """Test that the failure message lists the offending losses."""
    with pytest.raises(GradientCheckError, match="L_kgc"):
        Toolkit(str(toy_config)).gradcheck(corrupt_gradients=True)


@pytest.mark.slow
def test_memorised_toy_ranks_train_triples_first(toy_config: Path, tmp_path: Path) -> None:
    """Test that a fully trained toy model ranks training triples first."""
    out = tmp_path / "run"
    assert run(["train", "-c", str(toy_config), "--output-dir", str(out)]) == 0

    code = run(
        ["eval", "-c", str(toy_config), "--checkpoint", str(out / LAST_CHECKPOINT), "--split", "train", "--out", str(out)]
    )

    assert code == 0
    metrics = dict(line.split("\t") for line in _lines(out / "metrics_train.tsv"))
    assert float(metrics["hit1"]) >= 0.5
