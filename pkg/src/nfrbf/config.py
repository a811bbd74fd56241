"""Plain-text configuration files for simulation runs.

INI-style sections of key = value pairs (parsed by configparser, so
``#`` and ``;`` comments work).  Unknown sections or keys are rejected
up front; nothing is computed before the whole file validates.

Example::

    [run]
    scenario = labyrinth
    out_dir = out/labyrinth
    smoke = false

    [domain]
    gamma = 0.4
    resolution = 4096

    [rbf]
    ell = 3
    deg = 3
    k = 32

    [time]
    dt = 0.01
    t_end = 200.0
    n_frames = 20
"""

import configparser
from dataclasses import dataclass, field

from .errors import ConfigError

_SCHEMA = {
    "run": {"scenario": str, "out_dir": str, "smoke": bool, "cache_dir": str},
    "domain": {"gamma": float, "resolution": int, "mesh_path": str},
    "rbf": {"ell": int, "deg": int, "k": int},
    "model": {"tau": float, "beta": float},
    "time": {"dt": float, "t_end": float, "n_frames": int},
}


@dataclass
class SimulationConfig:
    scenario: str
    out_dir: str
    smoke: bool = False
    cache_dir: str = None
    mesh_path: str = None
    n_frames: int = 20
    overrides: dict = field(default_factory=dict)

    def describe(self) -> str:
        bits = [f"scenario={self.scenario}", f"out_dir={self.out_dir}",
                f"smoke={self.smoke}"]
        if self.mesh_path:
            bits.append(f"mesh_path={self.mesh_path}")
        bits += [f"{k}={v}" for k, v in sorted(self.overrides.items())]
        return " ".join(bits)


def _coerce(raw: str, typ, where: str):
    raw = raw.strip()
    try:
        if typ is bool:
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        return typ(raw)
    except ValueError as exc:
        raise ConfigError(f"{where}: cannot parse {raw!r} as {typ.__name__}") from exc


def read_config(path: str) -> SimulationConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    read = parser.read(path)
    if not read:
        raise ConfigError(f"config file {path} not found or unreadable")
    values = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown config section [{section}] in {path}")
        for key, raw in parser.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}] of {path}")
            values[key] = _coerce(raw, _SCHEMA[section][key], f"[{section}] {key}")
    if "scenario" not in values:
        raise ConfigError(f"{path} must set scenario in [run]")
    if "out_dir" not in values:
        raise ConfigError(f"{path} must set out_dir in [run]")
    cfg = SimulationConfig(
        scenario=values.pop("scenario"),
        out_dir=values.pop("out_dir"),
        smoke=values.pop("smoke", False),
        cache_dir=values.pop("cache_dir", None),
        mesh_path=values.pop("mesh_path", None),
        n_frames=values.pop("n_frames", 20),
    )
    cfg.overrides = values  # remaining keys feed the showcase driver
    return cfg
