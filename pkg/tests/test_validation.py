from datetime import time

import pytest

from bikecongest.config import RunConfig, config_from_mapping, load_config
from bikecongest.errors import ConfigError, KTooLarge, WindowMisaligned
from bikecongest.validation import (
    check_n_clusters,
    check_seed,
    check_width,
    parse_timestamp,
    parse_window,
)


def test_timestamps_are_strict():
    assert parse_timestamp(" 2020-12-21 07:05:09 ").minute == 5
    for bad in ("2020-12-21T07:05:09", "2020-12-21 7:05:09", "2020-02-30 07:00:00", ""):
        with pytest.raises(ValueError):
            parse_timestamp(bad)


def test_seed_bounds():
    assert check_seed(0) == 0 and check_seed(2**64 - 1) == 2**64 - 1
    for bad in (-1, 2**64, 1.5, True, "3"):
        with pytest.raises(ConfigError):
            check_seed(bad)


def test_window_and_width():
    assert parse_window("06:00-10:00") == (time(6), time(10))
    for bad in ("06:00", "10:00-06:00", "6-10", "06:00-06:00"):
        with pytest.raises(ConfigError):
            parse_window(bad)
    w = (time(6), time(10))
    assert [check_width(x, w) for x in (300, 900, 1800, 3600)] == [300, 900, 1800, 3600]
    with pytest.raises(WindowMisaligned):
        check_width(420, w)
    with pytest.raises(ConfigError):
        check_width(0, w)


def test_n_clusters():
    assert check_n_clusters(3, 3) == 3
    with pytest.raises(KTooLarge):
        check_n_clusters(4, 3)
    with pytest.raises(ConfigError):
        check_n_clusters(0, 3)


def test_config_defaults_and_validation(tmp_path):
    cfg = RunConfig().validate()
    assert cfg.widths == [300, 900, 1800] and cfg.cluster_width_s == 900
    with pytest.raises(ConfigError, match="cluster_width_s"):
        RunConfig(widths=[300]).validate()
    with pytest.raises(ConfigError, match="unknown config keys"):
        config_from_mapping({"colour": "red"})
    with pytest.raises(ConfigError):
        RunConfig(poi_categories=["Spaceport"]).validate()
    with pytest.raises(ConfigError):
        RunConfig(distance_mode="trajectory").validate()
    with pytest.raises(ConfigError, match="required"):
        RunConfig().validate(["events"])


def test_config_paths_resolve_against_config_file(tmp_path):
    (tmp_path / "sub").mkdir()
    (tmp_path / "sub" / "c.json").write_text('{"events": "e.csv", "transit": "t.csv"}')
    cfg = load_config(tmp_path / "sub" / "c.json")
    assert cfg.events == str(tmp_path / "sub" / "e.csv")
    assert cfg.transit == [str(tmp_path / "sub" / "t.csv")]
    (tmp_path / "bad.json").write_text("[1, 2]")
    with pytest.raises(ConfigError):
        load_config(tmp_path / "bad.json")
