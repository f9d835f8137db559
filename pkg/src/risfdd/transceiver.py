"""Effective channels, log-det rates and eigenmode/water-filling precoders."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelSet
from .scenario import ScenarioConfig

UNIT_MODULUS_TOL = 1e-12
POWER_TOL = 1e-9


class DegenerateChannelError(ValueError):
    """No stream has positive gain, so power cannot be allocated."""


@dataclass(frozen=True)
class ReflectionState:
    """RIS coefficients (diagonal of the reflection matrix) and the UL bulk phase."""

    theta: np.ndarray
    theta_d_rad: float = 0.0

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=complex)
        object.__setattr__(self, "theta", theta)
        if np.any(np.abs(np.abs(theta) - 1.0) > UNIT_MODULUS_TOL):
            raise ValueError("reflection coefficients must have unit modulus")

    @classmethod
    def random(cls, l: int, rng: np.random.Generator, theta_d_rad: float = 0.0):
        """Phases i.i.d. uniform on [0, 2*pi)."""
        return cls(np.exp(1j * rng.uniform(0.0, 2 * np.pi, l)), theta_d_rad)


@dataclass(frozen=True)
class PrecoderPair:
    f_dl: np.ndarray
    f_ul: np.ndarray
    p_dl_max_w: float
    p_ul_max_w: float

    def within_budget(self, tol: float = POWER_TOL) -> bool:
        return (np.linalg.norm(self.f_dl) ** 2 <= self.p_dl_max_w + tol
                and np.linalg.norm(self.f_ul) ** 2 <= self.p_ul_max_w + tol)


@dataclass(frozen=True)
class RatePair:
    """Rates in bits/s/Hz."""

    r_dl: float
    r_ul: float
    r_wsr: float


def effective_channel_dl(ch: ChannelSet, refl: ReflectionState) -> np.ndarray:
    """``H_D^H diag(theta) G_D``, shape K x N."""
    return ch.h_dl.conj().T @ (refl.theta[:, None] * ch.g_dl)


def effective_channel_ul(ch: ChannelSet, refl: ReflectionState) -> np.ndarray:
    """``exp(j theta_d) G_U^H diag(theta) H_U``, shape N x K."""
    return np.exp(1j * refl.theta_d_rad) * (ch.g_ul.conj().T @ (refl.theta[:, None] * ch.h_ul))


def achievable_rate(h_eff: np.ndarray, f: np.ndarray, noise_w: float) -> float:
    """``log2 det(I + H F F^H H^H / noise)`` via a Cholesky factor.

    The log-det is taken over the smaller of the two Gram matrices
    (Sylvester's identity), which is always positive definite.
    """
    if not noise_w > 0:
        raise ValueError("noise power must be positive")
    hf = h_eff @ f
    if hf.shape[0] <= hf.shape[1]:
        gram = hf @ hf.conj().T
    else:
        gram = hf.conj().T @ hf
    m = np.eye(gram.shape[0]) + gram / noise_w
    chol = np.linalg.cholesky(m)
    rate = 2.0 * np.sum(np.log2(np.abs(np.diag(chol))))
    if not np.isfinite(rate):
        raise ValueError("non-finite rate; check channel and precoder inputs")
    return float(rate)


def water_filling(gains, noise_w: float, budget_w: float) -> np.ndarray:
    """Water-filling over parallel channels with power gains ``gains``.

    Returns ``p`` with ``p_i = max(mu - noise_w / gains_i, 0)`` and
    ``sum(p) == budget_w``. The water level is located by scanning the sorted
    thresholds ``noise_w / gains_i`` for the largest consistent active set.
    """
    gains = np.asarray(gains, dtype=float)
    if not budget_w > 0:
        raise ValueError("budget must be positive")
    if np.any(gains < 0):
        raise ValueError("gains must be non-negative")
    if not np.any(gains > 0):
        raise DegenerateChannelError("all channel gains are zero")
    with np.errstate(divide="ignore"):
        floors = np.where(gains > 0, noise_w / gains, np.inf)
    order = np.argsort(floors, kind="stable")
    sorted_floors = floors[order]
    n_pos = int(np.count_nonzero(np.isfinite(sorted_floors)))
    cumsum = np.cumsum(sorted_floors[:n_pos])
    mu = None
    for k in range(n_pos, 0, -1):
        level = (budget_w + cumsum[k - 1]) / k
        if level > sorted_floors[k - 1]:
            mu = level
            break
    p = np.maximum(mu - floors, 0.0)
    p[~np.isfinite(floors)] = 0.0
    # exact budget: rescale rounding drift on the active set
    return p * (budget_w / p.sum())


def _fix_phase(v: np.ndarray) -> np.ndarray:
    """Rotate each column so its largest-magnitude entry is real positive."""
    idx = np.argmax(np.abs(v), axis=0)
    pivot = v[idx, np.arange(v.shape[1])]
    return v * (np.abs(pivot) / pivot)[None, :]


def optimal_precoder(h_eff: np.ndarray, noise_w: float, budget_w: float,
                     n_streams: int) -> np.ndarray:
    """Eigenmode precoder ``V_s P^{1/2}`` with water-filled powers.

    ``V_s`` holds the ``n_streams`` leading right singular vectors of
    ``h_eff``; the powers water-fill over the squared singular values.
    """
    if n_streams > min(h_eff.shape):
        raise ValueError(f"n_streams={n_streams} exceeds rank bound {min(h_eff.shape)}")
    _, s, vh = np.linalg.svd(h_eff, full_matrices=False)
    v = _fix_phase(vh[:n_streams].conj().T)
    p = water_filling(s[:n_streams] ** 2, noise_w, budget_w)
    return v * np.sqrt(p)[None, :]


def optimal_precoders(ch: ChannelSet, refl: ReflectionState, cfg: ScenarioConfig) -> PrecoderPair:
    """Optimal downlink and uplink precoders for fixed reflection coefficients."""
    f_dl = optimal_precoder(effective_channel_dl(ch, refl), cfg.noise_dl_w, cfg.p_dl_max_w,
                            cfg.n_streams_dl)
    f_ul = optimal_precoder(effective_channel_ul(ch, refl), cfg.noise_ul_w, cfg.p_ul_max_w,
                            cfg.n_streams_ul)
    return PrecoderPair(f_dl, f_ul, cfg.p_dl_max_w, cfg.p_ul_max_w)


def evaluate(ch: ChannelSet, refl: ReflectionState, precoders: PrecoderPair,
             cfg: ScenarioConfig) -> RatePair:
    r_dl = achievable_rate(effective_channel_dl(ch, refl), precoders.f_dl, cfg.noise_dl_w)
    r_ul = achievable_rate(effective_channel_ul(ch, refl), precoders.f_ul, cfg.noise_ul_w)
    return RatePair(r_dl, r_ul, cfg.eta * r_dl + (1 - cfg.eta) * r_ul)
