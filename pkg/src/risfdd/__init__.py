"""Joint downlink/uplink RIS phase and precoder optimisation for FDD MIMO links."""

__version__ = "0.1.0"

from .scenario import ScenarioConfig, default_paper_scenario, dbm_to_watts, link_distances
from .channel import ChannelSet, realize_channels
from .transceiver import PrecoderPair, RatePair, ReflectionState, evaluate, optimal_precoders
from .manifold import RcgSettings, manifold_alternate, rcg_solve
from .closed_form import lcao_solve
from .baselines import BaselineKind, oneway_ao, random_phases, separated_elements
from .trace import OptimizationTrace

__all__ = [
    "ScenarioConfig", "default_paper_scenario", "dbm_to_watts", "link_distances",
    "ChannelSet", "realize_channels",
    "PrecoderPair", "RatePair", "ReflectionState", "evaluate", "optimal_precoders",
    "RcgSettings", "manifold_alternate", "rcg_solve", "lcao_solve",
    "BaselineKind", "oneway_ao", "random_phases", "separated_elements",
    "OptimizationTrace",
]
