import logging
import os

import numpy as np
import pytest
from configobj import ConfigObj

from metrosim.config import (
    config_location,
    ensure_dir_exists,
    get_config,
    initialize_logging,
    load_world_spec,
    resolve_sim_config,
    write_config_snapshot,
)
from metrosim.main import bundled_world
from metrosim.simconfig import ConfigError, GovernmentMode, SimConfig

from utils import TINY_WORLD, write_world


@pytest.fixture
def metrosim_logger():
    logger = logging.getLogger("metrosim")
    handlers, level = list(logger.handlers), logger.level
    yield logger
    for handler in logger.handlers[len(handlers):]:
        handler.close()
    logger.handlers = handlers
    logger.setLevel(level)


def test_ensure_file_parent(tmpdir):
    subdir = tmpdir.join("subdir")
    rcfile = subdir.join("rcfile")
    ensure_dir_exists(str(rcfile))
    assert subdir.check(dir=1)


def test_ensure_existing_dir(tmpdir):
    rcfile = str(tmpdir.mkdir("subdir").join("rcfile"))

    # should just not raise
    ensure_dir_exists(rcfile)


def test_config_location_follows_xdg():
    assert config_location() == os.path.expanduser(os.environ["XDG_CONFIG_HOME"]) + "/metrosim/"


class TestRcFile:
    def test_default_rc_is_written(self, tmpdir):
        rc = tmpdir.join("rc")
        config = get_config(str(rc))
        assert rc.check(file=1)
        assert config["main"]["table_format"] == "psql"
        assert config["simulation"]["beta"] == "0.94"

    def test_user_values_win(self, tmpdir):
        rc = tmpdir.join("rc")
        rc.write("[main]\nworkers = 4\n[simulation]\nalpha = 0.5\n")
        config = get_config(str(rc))
        assert config["main"]["workers"] == "4"
        assert config["main"]["log_level"] == "INFO"
        assert resolve_sim_config(config).alpha == 0.5

    def test_env_var(self, tmpdir, monkeypatch):
        rc = tmpdir.join("from-env")
        monkeypatch.setenv("METROSIMRC", str(rc))
        get_config()
        assert rc.check(file=1)

    def test_unparsable(self, tmpdir):
        rc = tmpdir.join("rc")
        rc.write("[main\nworkers = 4\n")
        with pytest.raises(ConfigError):
            get_config(str(rc))


class TestLayers:
    def test_packaged_defaults(self, tmpdir):
        config = resolve_sim_config(get_config(str(tmpdir.join("rc"))))
        assert config == SimConfig()

    def test_precedence(self, tmpdir):
        rc = tmpdir.join("rc")
        rc.write("[simulation]\nalpha = 0.5\nbeta = 0.8\ntax_rate = 0.1\n")
        config = resolve_sim_config(get_config(str(rc)), {"beta": "0.7", "tax_rate": "0.2"}, {"tax_rate": 0.3})
        assert (config.alpha, config.beta, config.tax_rate) == (0.5, 0.7, 0.3)

    def test_unknown_field(self):
        with pytest.raises(ConfigError) as e:
            resolve_sim_config(None, {"gamma": "1"})
        assert e.value.field == "gamma"

    @pytest.mark.parametrize(
        "field, value",
        [
            ("vacancy", "1.5"),
            ("beta", "1.2"),
            ("alpha", "0"),
            ("months", "0"),
            ("market_sample_size", "2.5"),
            ("government_mode", "federal"),
            ("tax_rate", "lots"),
            ("wage_dispersion", "1"),
            ("spending_rate", "1.5"),
            ("spending", "stimulus"),
        ],
    )
    def test_invalid_value_names_field(self, field, value):
        with pytest.raises(ConfigError) as e:
            resolve_sim_config(None, None, {field: value})
        assert e.value.field == field

    def test_conversions(self):
        config = resolve_sim_config(
            None, None, {"months": "12", "government_mode": "UNIFIED", "sample_fraction": "default", "initial_firm_cash": "5"}
        )
        assert config.months == 12
        assert config.government_mode is GovernmentMode.UNIFIED
        assert config.sample_fraction is None
        assert config.initial_firm_cash == 5.0

    def test_snapshot_reproduces_config(self, tmpdir):
        config = SimConfig(alpha=0.35, seed=9, government_mode=GovernmentMode.UNIFIED, sample_fraction=0.02)
        path = str(tmpdir.join("config.ini"))
        write_config_snapshot(config, path, world="tiny")
        snapshot = ConfigObj(path)
        assert snapshot["world"] == "tiny"
        assert snapshot["simulation"]["initial_firm_cash"] == "default"
        assert resolve_sim_config(None, dict(snapshot["simulation"])) == config


class TestLogging:
    def test_none_level(self, metrosim_logger):
        config = {"main": {"log_file": "default", "log_level": "NONE"}}
        assert isinstance(initialize_logging(config), logging.NullHandler)
        assert metrosim_logger.level == logging.CRITICAL

    def test_log_file(self, tmpdir, metrosim_logger):
        log_file = tmpdir.join("logs", "metrosim.log")
        handler = initialize_logging({"main": {"log_file": str(log_file), "log_level": "DEBUG"}})
        logging.getLogger("metrosim.test").info("hello")
        handler.flush()
        assert "metrosim.test INFO - hello" in log_file.read()

    def test_unknown_level(self, metrosim_logger):
        with pytest.raises(ConfigError) as e:
            initialize_logging({"main": {"log_file": "default", "log_level": "LOUD"}})
        assert e.value.field == "log_level"


class TestWorldFile:
    def test_tiny_world(self, tmpdir):
        spec, overrides = load_world_spec(write_world(tmpdir))
        assert [m.name for m in spec.municipalities] == ["Center", "Edge"]
        assert [m.id for m in spec.municipalities] == [0, 1]
        assert spec.municipalities[1].target_population == 60
        assert spec.age_groups == [(0, 14), (15, 39), (40, 69), (70, 90)]
        assert len(spec.mortality_female) == 101
        assert len(spec.fertility) == 50
        assert spec.sample_fraction == 1.0
        assert spec.house_size_range == (40.0, 120.0)
        assert overrides == {"months": "3"}

    def test_bundled_world(self):
        spec, overrides = load_world_spec(bundled_world())
        assert spec.name == "ride-default"
        assert overrides == {"openings_per_month": "4"}
        assert np.all(np.diff(spec.mortality_female) > 0)

    def test_table_models(self, tmpdir):
        text = TINY_WORLD.replace(
            "model = gompertz\nfemale_base = 0.0002\nfemale_growth = 0.085\nmale_base = 0.0004\nmale_growth = 0.085",
            "female = 0.001, 0.002, 0.003\nmale = 0.002, 0.003, 0.004",
        ).replace(
            "model = gaussian\ntotal_fertility = 2.0\npeak = 27\nspread = 6",
            "table = 0, 0, 0.01, 0.01",
        )
        spec, _ = load_world_spec(write_world(tmpdir, text))
        assert list(spec.mortality_male) == [0.002, 0.003, 0.004]
        assert list(spec.fertility) == [0, 0, 0.01, 0.01]

    def test_missing_file(self, tmpdir):
        with pytest.raises(ConfigError):
            load_world_spec(str(tmpdir.join("nope")))

    @pytest.mark.parametrize(
        "old, new, field",
        [
            ("[qualification]", "[skills]", "qualification"),
            ("region = 0, 0, 10, 10", "region = 0, 0, 10", "municipalities.Center.region"),
            ("region = 0, 0, 10, 10", "region = 10, 0, 0, 10", "municipalities.Center.region"),
            ("initial_qli = 0.7", "initial_qli = high", "municipalities.Center.initial_qli"),
            ("initial_qli = 0.7", "initial_qli = 1.7", "municipalities.Center.initial_qli"),
            ("groups = 0-14,", "groups = 0..14,", "age_pyramid.groups"),
            ("female = 0.25, 0.4, 0.3, 0.05", "female = 0.25, 0.4, 0.3, 0.15", "age_pyramid.female"),
        ],
    )
    def test_errors_name_the_field(self, tmpdir, old, new, field):
        assert old in TINY_WORLD
        with pytest.raises(ConfigError) as e:
            load_world_spec(write_world(tmpdir, TINY_WORLD.replace(old, new, 1)))
        assert e.value.field == field
