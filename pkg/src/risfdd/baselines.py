"""Reference schemes for comparison against the joint optimisers."""

from __future__ import annotations

import enum

import numpy as np

from .channel import ChannelSet
from .closed_form import lcao_solve
from .scenario import ScenarioConfig
from .transceiver import ReflectionState, evaluate, optimal_precoders


class BaselineKind(str, enum.Enum):
    ONEWAY_DL = "oneway_dl"
    ONEWAY_UL = "oneway_ul"
    SEPARATED = "separated"
    RANDOM = "random"


def oneway_ao(ch: ChannelSet, cfg: ScenarioConfig, rng=None, direction: str = "dl", **kw):
    """Element-wise AO that serves one direction only.

    Element updates use weight 1 (``"dl"``) or 0 (``"ul"``); both precoders
    are still re-optimised and both rates reported with ``cfg.eta``.
    """
    direction = direction.lower()
    if direction not in ("dl", "ul"):
        raise ValueError(f"direction must be 'dl' or 'ul', got {direction!r}")
    weight = 1.0 if direction == "dl" else 0.0
    return lcao_solve(ch, cfg, rng, element_weights=np.full(ch.dims[0], weight), **kw)


def separated_elements(ch: ChannelSet, cfg: ScenarioConfig, rng=None, **kw):
    """First half of the elements serves the downlink, second half the uplink."""
    l_ris = ch.dims[0]
    if l_ris % 2:
        raise ValueError(f"separated elements needs an even L, got {l_ris}")
    weights = np.zeros(l_ris)
    weights[: l_ris // 2] = 1.0
    return lcao_solve(ch, cfg, rng, element_weights=weights, **kw)


def random_phases(ch: ChannelSet, cfg: ScenarioConfig, rng=None):
    """Uniform random phases with eigenmode precoders; returns ``(refl, precoders, rates)``."""
    rng = rng if rng is not None else np.random.default_rng(cfg.seed)
    refl = ReflectionState.random(ch.dims[0], rng, cfg.theta_d_rad)
    precoders = optimal_precoders(ch, refl, cfg)
    return refl, precoders, evaluate(ch, refl, precoders, cfg)
