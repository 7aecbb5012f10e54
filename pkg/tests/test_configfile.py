import pytest

from gsmotion import ConfigError
from gsmotion.configfile import parse_config, reject_unknown, write_config


def test_parse_pairs_preserve_order_and_repeats(tmp_path):
    path = tmp_path / "a.cfg"
    path.write_text(
        "# header comment\n"
        "alpha = 1\n"
        "\n"
        "kernel = 0 0 1 1 0 1   # trailing comment\n"
        "kernel = 2 2 1 1 0 0.5\n"
    )
    pairs = parse_config(path)
    assert pairs == [
        ("alpha", "1"),
        ("kernel", "0 0 1 1 0 1"),
        ("kernel", "2 2 1 1 0 0.5"),
    ]


def test_missing_equals_reports_line(tmp_path):
    path = tmp_path / "a.cfg"
    path.write_text("alpha = 1\nbogus line\n")
    with pytest.raises(ConfigError, match=":2"):
        parse_config(path)


def test_missing_value_rejected(tmp_path):
    path = tmp_path / "a.cfg"
    path.write_text("alpha =\n")
    with pytest.raises(ConfigError, match="alpha"):
        parse_config(path)


def test_write_then_parse_round_trip(tmp_path):
    path = tmp_path / "a.cfg"
    pairs = [("x", "1.5"), ("kernel", "0 0 1 1 0 1"), ("kernel", "1 1 2 2 0 1")]
    write_config(path, pairs, header="two kernels")
    assert parse_config(path) == pairs


def test_reject_unknown_names_offender():
    with pytest.raises(ConfigError, match="mystery"):
        reject_unknown([("width", "1"), ("mystery", "2")], {"width"}, "test.cfg")
