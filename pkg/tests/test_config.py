import pytest

from instrumentid.config import RunConfig, load_config, DEFAULT_TAXONOMY

from helpers import write_config


def test_defaults_are_valid():
    cfg = RunConfig()
    cfg.validate(require_inputs=False)
    assert cfg.taxonomy_file == DEFAULT_TAXONOMY
    assert cfg.sgd().batch_size == 16
    assert cfg.mfcc().mel_bands == 40


def test_parse_overrides_and_relative_paths(tmp_path):
    path = write_config(
        tmp_path / "run.cfg",
        audio_dir="audio", output_dir="out",
        test_fraction=0.25, split_seed=7,
        learning_rate=0.05, batch_size=4, epochs=3,
        reduced="true", drop_rate=0.25,
    )
    cfg = load_config(path)
    assert cfg.audio_dir == tmp_path / "audio"
    assert cfg.output_dir == tmp_path / "out"
    assert cfg.test_fraction == 0.25
    assert cfg.reduced is True
    assert cfg.sgd().learning_rate == 0.05
    assert cfg.sgd().epochs == 3


def test_comments_and_blank_lines_ignored(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("# a comment\n\nepochs = 2  # trailing comment\n")
    assert load_config(p).epochs == 2


def test_unknown_key_rejected(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("learning_rte = 0.1\n")
    with pytest.raises(ValueError, match="unknown config key"):
        load_config(p)


def test_bad_boolean_rejected(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("reduced = maybe\n")
    with pytest.raises(ValueError, match="boolean"):
        load_config(p)


def test_validate_checks_ranges():
    cfg = RunConfig(test_fraction=1.5)
    with pytest.raises(ValueError, match="test_fraction"):
        cfg.validate(require_inputs=False)
    cfg = RunConfig(drop_rate=1.0)
    with pytest.raises(ValueError, match="drop_rate"):
        cfg.validate(require_inputs=False)


def test_validate_checks_paths(tmp_path):
    cfg = RunConfig(audio_dir=tmp_path / "nope")
    with pytest.raises(FileNotFoundError, match="audio_dir"):
        cfg.validate()


def test_default_taxonomy_ships_with_package():
    assert DEFAULT_TAXONOMY.exists()
    text = DEFAULT_TAXONOMY.read_text()
    assert "male singer\tvoice" in text
