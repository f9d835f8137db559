"""Scenario configuration, unit conversion and link geometry.

Everything downstream consumes a validated :class:`ScenarioConfig`. Powers are
stored in dBm at this boundary and converted to watts on use.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

SPEED_OF_LIGHT = 299_792_458.0


class ConfigError(ValueError):
    """Raised when a scenario violates its invariants or a config file is malformed."""


def dbm_to_watts(x):
    """Convert a power in dBm to watts. Works elementwise on arrays."""
    return 10.0 ** ((x - 30.0) / 10.0)


@dataclass(frozen=True)
class ScenarioConfig:
    n_bs: int = 16
    k_ue: int = 8
    l_ris: int = 100
    l_h: int = 10
    l_v: int = 10
    f_dl_hz: float = 2.135e9
    f_ul_hz: float = 1.945e9
    p_dl_max_dbm: float = 27.0
    p_ul_max_dbm: float = 23.0
    noise_dl_dbm: float = -104.0
    noise_ul_dbm: float = -104.0
    eta: float = 0.5
    n_streams_dl: int = 5
    n_streams_ul: int = 5
    n_paths_g_dl: int = 5
    n_paths_g_ul: int = 5
    n_paths_h_dl: int = 5
    n_paths_h_ul: int = 5
    pos_bs: tuple[float, float] = (0.0, 0.0)
    pos_ris: tuple[float, float] = (750.0, 5.0)
    pos_ue: tuple[float, float] = (800.0, 0.0)
    antenna_spacing_m: float = field(default=SPEED_OF_LIGHT / (2 * 1.945e9))
    theta_d_rad: float = 0.0
    seed: int = 0
    eps_outer: float = 1e-4
    eps_inner: float = 1e-4
    max_outer: int = 50
    max_inner: int = 200

    def __post_init__(self):
        # JSON gives lists; keep positions hashable and immutable
        for name in ("pos_bs", "pos_ris", "pos_ue"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))
        self.validate()

    def validate(self) -> None:
        counts = ("n_bs", "k_ue", "l_ris", "l_h", "l_v", "n_streams_dl", "n_streams_ul",
                  "n_paths_g_dl", "n_paths_g_ul", "n_paths_h_dl", "n_paths_h_ul",
                  "max_outer", "max_inner")
        for name in counts:
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, int) or v < 1:
                raise ConfigError(f"{name} must be a positive integer, got {v!r}")
        if self.l_ris != self.l_h * self.l_v:
            raise ConfigError(f"l_ris={self.l_ris} != l_h*l_v={self.l_h * self.l_v}")
        if not 0.0 <= self.eta <= 1.0:
            raise ConfigError(f"eta must lie in [0, 1], got {self.eta}")
        rank_bound = min(self.n_bs, self.k_ue)
        if self.n_streams_dl > rank_bound or self.n_streams_ul > rank_bound:
            raise ConfigError(f"stream counts must not exceed min(N, K)={rank_bound}")
        for name in ("p_dl_max_dbm", "p_ul_max_dbm", "noise_dl_dbm", "noise_ul_dbm",
                     "theta_d_rad"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigError(f"{name} must be finite")
        for name in ("f_dl_hz", "f_ul_hz", "antenna_spacing_m", "eps_outer", "eps_inner"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ConfigError(f"{name} must be finite and > 0, got {v}")
        for name in ("pos_bs", "pos_ris", "pos_ue"):
            p = getattr(self, name)
            if len(p) != 2 or not all(math.isfinite(c) for c in p):
                raise ConfigError(f"{name} must be a finite 2-D coordinate")

    # linear-unit views
    @property
    def p_dl_max_w(self) -> float:
        return dbm_to_watts(self.p_dl_max_dbm)

    @property
    def p_ul_max_w(self) -> float:
        return dbm_to_watts(self.p_ul_max_dbm)

    @property
    def noise_dl_w(self) -> float:
        return dbm_to_watts(self.noise_dl_dbm)

    @property
    def noise_ul_w(self) -> float:
        return dbm_to_watts(self.noise_ul_dbm)

    def replace(self, **changes) -> "ScenarioConfig":
        """Return a validated copy with ``changes`` applied."""
        return dataclasses.replace(self, **changes)

    def with_square_ris(self, l_ris: int) -> "ScenarioConfig":
        side = math.isqrt(l_ris)
        if side * side != l_ris:
            raise ConfigError(f"L={l_ris} is not a perfect square")
        return self.replace(l_ris=l_ris, l_h=side, l_v=side)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        for name in ("pos_bs", "pos_ris", "pos_ue"):
            d[name] = list(d[name])
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        """Build a config from a mapping; absent fields take the reference-scenario defaults."""
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config fields: {', '.join(unknown)}")
        return cls(**data)


def default_paper_scenario() -> ScenarioConfig:
    """The reference deployment: 16x8 MIMO link through a 10x10 RIS at 750 m."""
    return ScenarioConfig()


def link_distances(cfg: ScenarioConfig) -> tuple[float, float]:
    """Return ``(d_bs_ris, d_ris_ue)`` in meters."""
    return math.dist(cfg.pos_bs, cfg.pos_ris), math.dist(cfg.pos_ris, cfg.pos_ue)


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read scenario file {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top-level JSON value must be an object")
    return ScenarioConfig.from_dict(data)


def save_config(cfg: ScenarioConfig, path) -> None:
    Path(path).write_text(json.dumps(cfg.to_dict(), indent=2) + "\n")
