import pytest

from config import RunConfig, parse_config, parse_overrides
from utils.exceptions import ConfigParseError


def test_defaults_follow_simulation_table():
    cfg = parse_config()
    assert cfg == RunConfig()
    assert cfg.channel.n_links == 20
    assert cfg.channel.wavelength == pytest.approx(0.125)
    assert cfg.channel.max_tx_power_mw == pytest.approx(1e4)
    assert cfg.train.batch_size == 50 and cfg.train.learning_rate == 0.002
    assert cfg.overhead.symbols_per_frame == 3000


def test_file_and_overrides(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text(
        "# small run\n"
        "[channel]\n"
        "n_links = 30  # links\n"
        "rho = none\n"
        "\n"
        "[train]\n"
        "iterations = 10\n",
        encoding="utf-8",
    )
    cfg = parse_config(path, {"train.iterations": "5", "model.aggregation": "max"})
    assert cfg.channel.n_links == 30
    assert cfg.channel.rho is None
    assert cfg.train.iterations == 5
    assert cfg.model.aggregation == "max"


@pytest.mark.parametrize(
    "text,line",
    [
        ("[channel]\nbogus = 1\n", 2),
        ("[physics]\n", 1),
        ("n_links = 3\n", 1),
        ("[channel]\nn_links\n", 2),
        ("[channel]\n\nn_links = -1\n", 3),
    ],
)
def test_bad_lines_report_their_number(tmp_path, text, line):
    path = tmp_path / "bad.cfg"
    path.write_text(text, encoding="utf-8")
    with pytest.raises(ConfigParseError) as info:
        parse_config(path)
    assert info.value.line == line


def test_inconsistent_distances_are_rejected():
    with pytest.raises(ConfigParseError):
        parse_config(overrides={"channel.field_length": "50"})


def test_override_syntax():
    assert parse_overrides(["train.seed=3", " model.embed_dim = 4 "]) == {"train.seed": "3", "model.embed_dim": "4"}
    with pytest.raises(ConfigParseError):
        parse_overrides(["train.seed"])
    with pytest.raises(ConfigParseError):
        parse_config(overrides={"seed": "3"})
