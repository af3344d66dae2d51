import logging
import os
import platform
import shutil
from os.path import dirname, exists, expanduser
from typing import Dict, List, Optional, Tuple

import numpy as np
from configobj import ConfigObj, ConfigObjError

from .demography import gaussian_fertility, gompertz_mortality
from .geo import Municipality, Rect, WorldSpec
from .simconfig import ConfigError, SimConfig

__all__ = [
    "ConfigError",
    "config_location",
    "get_config",
    "initialize_logging",
    "load_config",
    "load_world_spec",
    "resolve_sim_config",
    "write_config_snapshot",
]

LOG_FORMAT = "%(asctime)s (%(process)d/%(threadName)s) %(name)s %(levelname)s - %(message)s"


def config_location():
    if "XDG_CONFIG_HOME" in os.environ:
        return "%s/metrosim/" % expanduser(os.environ["XDG_CONFIG_HOME"])
    elif platform.system() == "Windows":
        user_profile = os.getenv("USERPROFILE", "")
        return user_profile + "\\AppData\\Local\\metrosim\\"
    else:
        return expanduser("~/.config/metrosim/")


def load_config(usr_cfg, def_cfg=None):
    if def_cfg:
        cfg = ConfigObj()
        cfg.merge(ConfigObj(def_cfg, interpolation=False))
        cfg.merge(ConfigObj(expanduser(usr_cfg), interpolation=False, encoding="utf-8"))
    else:
        cfg = ConfigObj(expanduser(usr_cfg), interpolation=False, encoding="utf-8")
    cfg.filename = expanduser(usr_cfg)
    return cfg


def ensure_dir_exists(path):
    parent_dir = expanduser(dirname(path))
    os.makedirs(parent_dir, exist_ok=True)


def write_default_config(source, destination, overwrite=False):
    destination = expanduser(destination)
    if not overwrite and exists(destination):
        return

    ensure_dir_exists(destination)

    shutil.copyfile(source, destination)


def default_config_file():
    from metrosim import __file__ as package_root

    return os.path.join(os.path.dirname(package_root), "metrosimrc")


def get_config_filename(rc_file=None):
    return rc_file or os.environ.get("METROSIMRC") or "%sconfig" % config_location()


def get_config(rc_file=None):
    rc_file = get_config_filename(rc_file)
    default_config = default_config_file()
    try:
        write_default_config(default_config, rc_file)
        return load_config(rc_file, default_config)
    except ConfigObjError as e:
        raise ConfigError("config", f"cannot parse {rc_file}: {e}") from None
    except OSError as e:
        raise ConfigError("config", f"cannot read {rc_file}: {e.strerror or e}") from None


def initialize_logging(config, verbose: bool = False):
    log_file = config["main"]["log_file"]
    if log_file == "default":
        log_file = config_location() + "log"
    log_level = config["main"]["log_level"]

    # NONE switches to a no-op handler at a level that skips formatting.
    handler: logging.Handler
    if log_level.upper() == "NONE":
        handler = logging.NullHandler()
    else:
        ensure_dir_exists(log_file)
        handler = logging.FileHandler(expanduser(log_file))

    level_map = {
        "CRITICAL": logging.CRITICAL,
        "ERROR": logging.ERROR,
        "WARNING": logging.WARNING,
        "INFO": logging.INFO,
        "DEBUG": logging.DEBUG,
        "NONE": logging.CRITICAL,
    }
    try:
        level = level_map[log_level.upper()]
    except KeyError:
        raise ConfigError("log_level", f"must be one of {', '.join(level_map)}") from None

    formatter = logging.Formatter(LOG_FORMAT)
    handler.setFormatter(formatter)

    root_logger = logging.getLogger("metrosim")
    root_logger.addHandler(handler)
    root_logger.setLevel(level)

    if verbose:
        stream = logging.StreamHandler()
        stream.setFormatter(formatter)
        stream.setLevel(logging.DEBUG)
        root_logger.addHandler(stream)
        root_logger.setLevel(logging.DEBUG)

    root_logger.debug("Initializing metrosim logging.")
    root_logger.debug("Log file %r.", log_file)
    return handler


def resolve_sim_config(rc=None, world_overrides=None, cli_overrides=None) -> SimConfig:
    """Packaged defaults < rc ``[simulation]`` < world file ``[simulation]`` < CLI."""
    config = SimConfig()
    for layer in (rc.get("simulation", {}) if rc is not None else {}, world_overrides or {}, cli_overrides or {}):
        config = config.with_overrides(dict(layer))
    return config.validate()


def write_config_snapshot(config: SimConfig, path: str, world: Optional[str] = None) -> None:
    snapshot = ConfigObj(encoding="utf-8")
    snapshot.filename = path
    if world:
        snapshot["world"] = world
    snapshot["simulation"] = {k: "default" if v is None else str(v) for k, v in config.as_dict().items()}
    snapshot.write()


def _floats(section, key, where) -> np.ndarray:
    try:
        value = section[key]
        values = value if isinstance(value, list) else [value]
        return np.array([float(v) for v in values])
    except KeyError:
        raise ConfigError(f"{where}.{key}", "is required") from None
    except ValueError:
        raise ConfigError(f"{where}.{key}", f"expected numbers, got {section[key]!r}") from None


def _float(section, key, where, default=None) -> float:
    if key not in section and default is not None:
        return default
    try:
        return section.as_float(key)
    except KeyError:
        raise ConfigError(f"{where}.{key}", "is required") from None
    except (TypeError, ValueError):
        raise ConfigError(f"{where}.{key}", f"expected a number, got {section[key]!r}") from None


def _rect(section, key, where) -> Rect:
    values = _floats(section, key, where)
    if len(values) != 4:
        raise ConfigError(f"{where}.{key}", "expected x0, y0, x1, y1")
    try:
        return Rect(*values)
    except ValueError as e:
        raise ConfigError(f"{where}.{key}", str(e)) from None


def _range(section, key, where, default) -> Tuple[float, float]:
    if key not in section:
        return default
    values = _floats(section, key, where)
    if len(values) != 2:
        raise ConfigError(f"{where}.{key}", "expected min, max")
    return float(values[0]), float(values[1])


def _municipalities(section) -> List[Municipality]:
    out = []
    for i, name in enumerate(section.sections):
        m = section[name]
        where = f"municipalities.{name}"
        try:
            population = m.as_int("target_population")
            firms = m.as_int("target_firms")
        except KeyError as e:
            raise ConfigError(f"{where}.{e.args[0]}", "is required") from None
        except ValueError:
            raise ConfigError(where, "targets must be integers") from None
        out.append(Municipality(
            id=i,
            name=name,
            region=_rect(m, "region", where),
            urban_zone=_rect(m, "urban_zone", where),
            initial_qli=_float(m, "initial_qli", where),
            target_population=population,
            target_firms=firms,
            urban_fraction=_float(m, "urban_fraction", where, default=0.0),
        ))
    return out


def _age_groups(labels) -> List[Tuple[int, int]]:
    groups = []
    for label in labels if isinstance(labels, list) else [labels]:
        try:
            lo, hi = (int(p) for p in str(label).split("-"))
        except ValueError:
            raise ConfigError("age_pyramid.groups", f"bad age group {label!r}, expected low-high") from None
        groups.append((lo, hi))
    return groups


def _mortality(section) -> Tuple[np.ndarray, np.ndarray]:
    if section.get("model") == "gompertz":
        return tuple(
            gompertz_mortality(_float(section, f"{g}_base", "mortality"), _float(section, f"{g}_growth", "mortality"))
            for g in ("female", "male")
        )
    return _floats(section, "female", "mortality"), _floats(section, "male", "mortality")


def _fertility(section, sim: Dict[str, str]) -> np.ndarray:
    if section.get("model") == "gaussian":
        low = int(sim.get("fertile_age_min", SimConfig.fertile_age_min))
        high = int(sim.get("fertile_age_max", SimConfig.fertile_age_max))
        return gaussian_fertility(
            _float(section, "total_fertility", "fertility"),
            _float(section, "peak", "fertility"),
            _float(section, "spread", "fertility"),
            low,
            high,
        )
    return _floats(section, "table", "fertility")


def load_world_spec(path: str) -> Tuple[WorldSpec, Dict[str, str]]:
    """Read a world file. Returns the spec and its ``[simulation]`` overrides."""
    if not os.path.isfile(expanduser(path)):
        raise ConfigError("config", f"world file {path} does not exist")
    try:
        cfg = ConfigObj(expanduser(path), interpolation=False, encoding="utf-8", file_error=True)
    except (ConfigObjError, OSError) as e:
        raise ConfigError("config", f"cannot parse {path}: {e}") from None

    for required in ("municipalities", "age_pyramid", "mortality", "fertility", "qualification"):
        if required not in cfg.sections:
            raise ConfigError(required, f"section missing from {path}")
    sim = dict(cfg.get("simulation", {}))
    pyramid = cfg["age_pyramid"]
    mortality_female, mortality_male = _mortality(cfg["mortality"])
    houses = cfg.get("houses", {})

    spec = WorldSpec(
        municipalities=_municipalities(cfg["municipalities"]),
        age_groups=_age_groups(pyramid.get("groups", [])),
        pyramid_female=_floats(pyramid, "female", "age_pyramid"),
        pyramid_male=_floats(pyramid, "male", "age_pyramid"),
        mortality_female=mortality_female,
        mortality_male=mortality_male,
        fertility=_fertility(cfg["fertility"], sim),
        qualification_weights=_floats(cfg["qualification"], "weights", "qualification"),
        house_size_range=_range(houses, "size", "houses", WorldSpec.house_size_range),
        house_quality_range=_range(houses, "quality", "houses", WorldSpec.house_quality_range),
        sample_fraction=_float(cfg, "sample_fraction", "world", default=WorldSpec.sample_fraction),
        female_share=_float(cfg, "female_share", "world", default=WorldSpec.female_share),
        name=cfg.get("name", os.path.basename(path)),
    )
    return spec.validate(), sim
