"""Tests for the `config_loader` module."""
from pathlib import Path

import pytest

from mmkgc._helper import Scenario, TiePolicy, load_config, parse_overrides, validate_config, write_config
from mmkgc._helper.config_loader import parse_value, read_config_file
from mmkgc.data import Modality
from mmkgc.exceptions import ConfigError


def test_config_file_values_are_typed(tmp_path: Path) -> None:
    """Test that ints, floats, bools and lists are parsed from `key = value` lines."""
    path = tmp_path / "run.cfg"
    path.write_text(
        "# a comment\n\ndim = 16\nlambda = 1e-3  # trailing comment\nuse_noise = false\nmodalities = structure, text\n",
        encoding="utf-8",
    )

    config = load_config(str(path))

    assert config.dim == 16
    assert config.lambda_ == pytest.approx(1e-3)
    assert config.use_noise is False
    assert config.modalities == [Modality.STRUCTURE, Modality.TEXT]


def test_relative_paths_resolve_against_the_config_directory(tmp_path: Path) -> None:
    """Test that data paths are relative to the file that names them."""
    path = tmp_path / "run.cfg"
    path.write_text("train_path = data/train.txt\n", encoding="utf-8")

    config = load_config(str(path))

    assert config.train_path == str(tmp_path.resolve() / "data" / "train.txt")


def test_overrides_win_over_the_file(tmp_path: Path) -> None:
    """Test that command line overrides replace file values."""
    path = tmp_path / "run.cfg"
    path.write_text("epochs = 10\n", encoding="utf-8")

    config = load_config(str(path), parse_overrides(["--epochs", "3", "--tie-policy=mid"]))

    assert config.epochs == 3
    assert config.tie_policy == TiePolicy.MID


def test_override_values_keep_their_dashes() -> None:
    """Test that only the key of a `--key=value` override has its dashes replaced."""
    assert parse_overrides(["--lambda=-1", "--corrupt-seed", "4"]) == {"lambda": -1, "corrupt_seed": 4}


def test_unknown_key_is_named() -> None:
    """Test that an unknown key is rejected with its name in the message."""
    with pytest.raises(ConfigError, match="bogus"):
        validate_config({"bogus": 1})


def test_negative_lambda_is_rejected() -> None:
    """Test that the CLUB weight must be non-negative."""
    with pytest.raises(ConfigError, match="lambda"):
        validate_config({"lambda": -1})


def test_joint_cannot_be_enabled_as_a_base_modality() -> None:
    """Test that the derived joint modality is not accepted in `modalities`."""
    with pytest.raises(ConfigError):
        validate_config({"modalities": "structure,joint"})


def test_full_sparsification_is_rejected() -> None:
    """Test that the sparse scenario cannot remove every training triple."""
    with pytest.raises(ConfigError):
        validate_config({"corrupt_scenario": "sparse", "corrupt_ratio": 1.0})


def test_joint_needs_two_modalities() -> None:
    """Test that the joint modality is only enabled with at least two base modalities."""
    assert validate_config({}).joint_enabled
    assert not validate_config({"modalities": "text"}).joint_enabled
    assert not validate_config({"use_joint_training": False}).joint_enabled


def test_resolved_defaults_follow_dim() -> None:
    """Test that the relation and hidden widths and the exid learning rate default sensibly."""
    config = validate_config({"dim": 12, "lr": 0.05})

    assert config.resolved_relation_dim == 12
    assert config.resolved_hidden_dim == 12
    assert config.resolved_exid_lr == pytest.approx(0.05)


def test_written_config_loads_back_equal(tmp_path: Path) -> None:
    """Test that `write_config` output is read back into the same config."""
    config = validate_config(
        {
            "dim": 7,
            "lambda": 0.5,
            "modalities": "image,text",
            "corrupt_scenario": "noise",
            "train_path": "/data/t.txt",
            "output_dir": str(tmp_path / "out"),
        }
    )
    path = tmp_path / "written.cfg"

    write_config(str(path), config)

    assert load_config(str(path)) == config


def test_updated_validates() -> None:
    """Test that `Config.updated` returns a validated copy."""
    config = validate_config({})

    assert config.updated(epochs=0).epochs == 0
    assert config.epochs == 100
    with pytest.raises(ConfigError):
        config.updated(experts=0)


def test_yaml_config_files_are_flat_mappings(tmp_path: Path) -> None:
    """Test that `.yml` files are accepted when they hold a flat mapping."""
    flat = tmp_path / "run.yml"
    flat.write_text("dim: 9\ncorrupt_scenario: missing\n", encoding="utf-8")
    nested = tmp_path / "nested.yml"
    nested.write_text("model:\n  dim: 9\n", encoding="utf-8")

    config = load_config(str(flat))

    assert config.dim == 9
    assert config.corrupt_scenario == Scenario.MISSING
    with pytest.raises(ConfigError):
        read_config_file(str(nested))


def test_malformed_line_names_the_line(tmp_path: Path) -> None:
    """Test that a line without `=` is reported with its line number."""
    path = tmp_path / "bad.cfg"
    path.write_text("dim = 4\nepochs 3\n", encoding="utf-8")

    with pytest.raises(ConfigError, match=":2:"):
        read_config_file(str(path))


def test_missing_config_file() -> None:
    """Test that a missing config file is a config error."""
    with pytest.raises(ConfigError):
        load_config("/nonexistent/run.cfg")


def test_parse_value() -> None:
    """Test the typing of raw values."""
    assert parse_value("3") == 3
    assert parse_value("1e-4") == pytest.approx(1e-4)
    assert parse_value("true") is True
    assert parse_value("structure,image") == "structure,image"
    assert parse_value("  ") is None


def test_parse_overrides_rejects_dangling_flags() -> None:
    """Test that overrides must come as `--key value` pairs."""
    with pytest.raises(ConfigError):
        parse_overrides(["--epochs"])
    with pytest.raises(ConfigError):
        parse_overrides(["epochs", "3"])


def test_undecodable_config_file(tmp_path: Path) -> None:
    """Test that a config file which is not UTF-8 is a config error."""
    path = tmp_path / "run.cfg"
    path.write_bytes(b"dim = \xff\n")

    with pytest.raises(ConfigError) as info:
        read_config_file(str(path))

    assert info.value.exit_code == 2
