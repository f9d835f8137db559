"""Riemannian conjugate gradient on the complex circle manifold.

Search directions follow the ascent convention: the problem maximises the
weighted sum-rate, so ``d = grad + gamma * transport(d_old)`` where ``grad``
is the Riemannian gradient of the rate itself. This is the usual descent
recursion applied to the negated rate.

Gradients use the real-coordinate convention: component ``l`` equals
``dR/dRe(theta_l) + 1j * dR/dIm(theta_l)`` (twice the Wirtinger derivative
with respect to ``conj(theta_l)``), so that the first-order change of the
rate along ``delta`` is ``Re(vdot(grad, delta))``.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelSet
from .scenario import ScenarioConfig
from .trace import OptimizationTrace
from .transceiver import (PrecoderPair, ReflectionState, effective_channel_dl,
                          effective_channel_ul, evaluate, optimal_precoders)

LN2 = np.log(2.0)
DEGENERATE_MODULUS = 1e-15


@dataclass(frozen=True)
class RcgSettings:
    armijo_contraction: float = 0.5
    armijo_slope: float = 1e-4
    initial_step: float = 1.0
    max_backtracks: int = 50
    eps_inner: float = 1e-4
    max_inner: int = 200

    def __post_init__(self):
        if not 0 < self.armijo_contraction < 1:
            raise ValueError("armijo_contraction must lie in (0, 1)")
        for name in ("armijo_slope", "initial_step", "eps_inner"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.max_backtracks < 1 or self.max_inner < 1:
            raise ValueError("iteration caps must be >= 1")

    @classmethod
    def from_config(cls, cfg: ScenarioConfig, **overrides) -> "RcgSettings":
        return cls(eps_inner=cfg.eps_inner, max_inner=cfg.max_inner, **overrides)


def _rate_gradient_wrt_heff(hf: np.ndarray, f: np.ndarray, noise_w: float) -> np.ndarray:
    """Gradient of the log-det rate w.r.t. the effective channel, MMSE form.

    ``(H F (I + F^H H^H H F / noise)^{-1} F^H) / (ln 2 * noise)``.
    """
    ns = hf.shape[1]
    mmse = np.linalg.solve(np.eye(ns) + hf.conj().T @ hf / noise_w, f.conj().T)
    return hf @ mmse / (LN2 * noise_w)


def euclidean_gradient_dl(ch: ChannelSet, refl: ReflectionState, f_dl: np.ndarray,
                          noise_w: float) -> np.ndarray:
    """Euclidean gradient of the downlink rate w.r.t. the RIS coefficients."""
    h_eff = effective_channel_dl(ch, refl)
    m = _rate_gradient_wrt_heff(h_eff @ f_dl, f_dl, noise_w)
    # component l: h_dl[l] @ M @ conj(g_dl[l])
    return 2.0 * np.sum((ch.h_dl @ m) * ch.g_dl.conj(), axis=1)


def euclidean_gradient_ul(ch: ChannelSet, refl: ReflectionState, f_ul: np.ndarray,
                          noise_w: float) -> np.ndarray:
    """Euclidean gradient of the uplink rate; the bulk phase cancels."""
    h_eff = effective_channel_ul(ch, refl)
    m = _rate_gradient_wrt_heff(h_eff @ f_ul, f_ul, noise_w)
    phase = np.exp(-1j * refl.theta_d_rad)
    return 2.0 * phase * np.sum((ch.g_ul @ m) * ch.h_ul.conj(), axis=1)


def euclidean_gradient_wsr(ch: ChannelSet, refl: ReflectionState, precoders: PrecoderPair,
                           cfg: ScenarioConfig) -> np.ndarray:
    """``eta * grad R_D + (1 - eta) * grad R_U``; a zero-weight term is never computed."""
    grad = np.zeros(ch.dims[0], dtype=complex)
    if cfg.eta > 0:
        grad += cfg.eta * euclidean_gradient_dl(ch, refl, precoders.f_dl, cfg.noise_dl_w)
    if cfg.eta < 1:
        grad += (1 - cfg.eta) * euclidean_gradient_ul(ch, refl, precoders.f_ul, cfg.noise_ul_w)
    return grad


def riemannian_project(theta: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Orthogonal projection of ``g`` onto the tangent space at ``theta``."""
    return g - np.real(g * theta.conj()) * theta


def transport(theta_new: np.ndarray, d: np.ndarray) -> np.ndarray:
    """Vector transport by projection onto the tangent space at ``theta_new``."""
    return d - np.real(d * theta_new.conj()) * theta_new


def _inner(x: np.ndarray, y: np.ndarray) -> float:
    return float(np.real(np.vdot(x, y)))


def conjugate_direction(grad_new: np.ndarray, d_old: np.ndarray, grad_old: np.ndarray,
                        theta_new: np.ndarray) -> np.ndarray:
    """Polak-Ribiere+ ascent direction at ``theta_new``.

    Falls back to ``grad_new`` when the PR coefficient is negative, when the
    old gradient vanishes, or when the combined direction is not ascent.
    """
    denom = _inner(grad_old, grad_old)
    if denom == 0.0:
        return grad_new.copy()
    moved_grad = transport(theta_new, grad_old)
    gamma = max(0.0, _inner(grad_new, grad_new - moved_grad) / denom)
    if gamma == 0.0:
        return grad_new.copy()
    d = grad_new + gamma * transport(theta_new, d_old)
    if _inner(d, grad_new) <= 0.0:
        return grad_new.copy()
    return d


def retract(theta: np.ndarray) -> np.ndarray:
    """Elementwise normalisation back onto the unit circle."""
    mod = np.abs(theta)
    if np.any(mod < DEGENERATE_MODULUS):
        raise FloatingPointError("retraction of a (near-)zero entry")
    return theta / mod


def armijo_step(objective, theta: np.ndarray, direction: np.ndarray, grad: np.ndarray,
                settings: RcgSettings, initial_step: float | None = None,
                f0: float | None = None):
    """Backtracking line search along ``direction`` followed by retraction.

    Returns ``(step, theta_next, value_next)``. The first trial step
    ``initial_step * contraction**k`` meeting the sufficient-increase
    condition is accepted; if none of ``max_backtracks`` trials passes,
    ``(0.0, theta, f0)`` is returned.
    """
    if f0 is None:
        f0 = objective(theta)
    slope = _inner(grad, direction)
    if slope <= 0.0 or not np.any(direction):
        return 0.0, theta, f0
    tau = settings.initial_step if initial_step is None else initial_step
    for _ in range(settings.max_backtracks):
        try:
            candidate = retract(theta + tau * direction)
        except FloatingPointError:
            tau *= settings.armijo_contraction
            continue
        value = objective(candidate)
        if value >= f0 + settings.armijo_slope * tau * slope:
            return tau, candidate, value
        tau *= settings.armijo_contraction
    return 0.0, theta, f0


@dataclass
class RcgResult:
    values: list[float] = field(default_factory=list)
    grad_norm: float = np.inf
    iterations: int = 0
    converged: bool = False
    stalled: bool = False


def _wsr_objective(ch, precoders, cfg, theta_d):
    def objective(theta):
        return evaluate(ch, ReflectionState(theta, theta_d), precoders, cfg).r_wsr
    return objective


def rcg_solve(ch: ChannelSet, precoders: PrecoderPair, refl_init: ReflectionState,
              cfg: ScenarioConfig, settings: RcgSettings | None = None):
    """Maximise the weighted sum-rate over the RIS phases for fixed precoders.

    Returns ``(ReflectionState, RcgResult)``. ``RcgResult.converged`` is set
    when the Riemannian gradient norm fell to ``eps_inner``; ``stalled`` when
    the line search could not make progress even along the gradient.
    """
    settings = settings or RcgSettings.from_config(cfg)
    theta_d = refl_init.theta_d_rad
    objective = _wsr_objective(ch, precoders, cfg, theta_d)

    def rgrad(theta):
        egrad = euclidean_gradient_wsr(ch, ReflectionState(theta, theta_d), precoders, cfg)
        return riemannian_project(theta, egrad)

    theta = refl_init.theta.copy()
    value = objective(theta)
    grad = rgrad(theta)
    direction = grad.copy()
    step0 = settings.initial_step
    result = RcgResult(values=[value])

    for it in range(settings.max_inner):
        result.grad_norm = float(np.linalg.norm(grad))
        if result.grad_norm <= settings.eps_inner:
            result.converged = True
            break
        tau, theta_next, value_next = armijo_step(objective, theta, direction, grad, settings,
                                                  initial_step=step0, f0=value)
        if tau == 0.0 and direction is not grad:
            direction = grad
            tau, theta_next, value_next = armijo_step(objective, theta, direction, grad,
                                                      settings, initial_step=step0, f0=value)
        if tau == 0.0:
            result.stalled = True
            break
        step0 = 2.0 * tau
        grad_next = rgrad(theta_next)
        direction = conjugate_direction(grad_next, direction, grad, theta_next)
        theta, value, grad = theta_next, value_next, grad_next
        result.values.append(value)
        result.iterations = it + 1
    else:
        result.grad_norm = float(np.linalg.norm(grad))
        result.converged = result.grad_norm <= settings.eps_inner

    return ReflectionState(theta, theta_d), result


def manifold_alternate(ch: ChannelSet, cfg: ScenarioConfig, settings: RcgSettings | None = None,
                       rng: np.random.Generator | None = None,
                       refl_init: ReflectionState | None = None):
    """Alternate RCG phase updates with eigenmode precoder updates.

    Returns ``(ReflectionState, PrecoderPair, OptimizationTrace)``; stops when
    the weighted sum-rate increment is at most ``cfg.eps_outer`` or after
    ``cfg.max_outer`` outer iterations.
    """
    settings = settings or RcgSettings.from_config(cfg)
    if refl_init is None:
        rng = rng if rng is not None else np.random.default_rng(cfg.seed)
        refl_init = ReflectionState.random(ch.dims[0], rng, cfg.theta_d_rad)
    t0 = time.perf_counter()
    refl = refl_init
    precoders = optimal_precoders(ch, refl, cfg)
    rates = evaluate(ch, refl, precoders, cfg)
    trace = OptimizationTrace()
    trace.append(rates, wall_ms=1e3 * (time.perf_counter() - t0))

    for _ in range(cfg.max_outer):
        t0 = time.perf_counter()
        prev = rates.r_wsr
        refl, info = rcg_solve(ch, precoders, refl, cfg, settings)
        precoders = optimal_precoders(ch, refl, cfg)
        rates = evaluate(ch, refl, precoders, cfg)
        trace.append(rates, grad_norm=info.grad_norm,
                     wall_ms=1e3 * (time.perf_counter() - t0))
        if abs(rates.r_wsr - prev) <= cfg.eps_outer:
            break
    return refl, precoders, trace
