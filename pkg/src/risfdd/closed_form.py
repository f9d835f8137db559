"""Low-complexity alternating optimisation: one RIS element at a time.

For element ``l`` with all others fixed, the downlink rate splits as

    log2 det(I + theta_l A^{-1} B + conj(theta_l) A^{-1} B^H) + log2 det(A)

where ``A`` is Hermitian positive definite and ``B`` has rank at most one.
The single nonzero eigenvalue ``lam = tr(A^{-1} B)`` drives the closed-form
phase update ``theta_l = exp(-1j * angle(eta*lam_dl + (1-eta)*lam_ul))``,
which maximises the first-order surrogate ``Re(theta_l * lam)``.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .channel import ChannelSet
from .scenario import ScenarioConfig
from .trace import OptimizationTrace
from .transceiver import (PrecoderPair, ReflectionState, evaluate, optimal_precoders)

ZERO_LAMBDA = 1e-14
DIRECT_VS_SCALAR_TOL = 1e-8
CANCELLATION_FLOOR = 64 * np.finfo(float).eps


@dataclass
class LinkTerms:
    """Precoded per-element channel factors and the running composites.

    Row ``l`` of ``g_dl_eff`` is ``g'_{D,l}^H`` and row ``l`` of
    ``h_ul_eff`` is ``h'_{U,l}^H``. ``h_dl_col[l]`` / ``g_ul_col[l]`` are the
    ``l``-th columns of ``H_D^H`` and ``G_U^H``.
    """

    g_dl_eff: np.ndarray
    h_ul_eff: np.ndarray
    h_dl_col: np.ndarray
    g_ul_col: np.ndarray
    composite_dl: np.ndarray
    composite_ul: np.ndarray

    def term_dl(self, l: int) -> np.ndarray:
        return np.outer(self.h_dl_col[l], self.g_dl_eff[l])

    def term_ul(self, l: int) -> np.ndarray:
        return np.outer(self.g_ul_col[l], self.h_ul_eff[l])

    def refresh(self, theta: np.ndarray) -> None:
        """Recompute both composites from scratch."""
        self.composite_dl = self.h_dl_col.T @ (theta[:, None] * self.g_dl_eff)
        self.composite_ul = self.g_ul_col.T @ (theta[:, None] * self.h_ul_eff)

    def update(self, l: int, theta_old: complex, theta_new: complex) -> None:
        delta = theta_new - theta_old
        self.composite_dl += delta * self.term_dl(l)
        self.composite_ul += delta * self.term_ul(l)


def link_terms(ch: ChannelSet, precoders: PrecoderPair, theta: np.ndarray) -> LinkTerms:
    terms = LinkTerms(
        g_dl_eff=ch.g_dl @ precoders.f_dl,
        h_ul_eff=ch.h_ul @ precoders.f_ul,
        h_dl_col=ch.h_dl.conj(),
        g_ul_col=ch.g_ul.conj(),
        composite_dl=None, composite_ul=None,
    )
    terms.refresh(theta)
    return terms


@dataclass(frozen=True)
class ElementSubproblem:
    a_dl: np.ndarray
    b_dl: np.ndarray
    a_ul: np.ndarray
    b_ul: np.ndarray
    lambda_dl: complex
    lambda_ul: complex


def _rank_one_eigenvalue(a: np.ndarray, b: np.ndarray) -> complex:
    """``tr(A^{-1} B)`` through a Cholesky factorisation of ``A``."""
    return complex(np.trace(sla.cho_solve(sla.cho_factor(a), b)))


def _split(composite, own, theta_l, noise_w):
    others = composite - theta_l * own
    # a residual at the level of the subtraction's rounding error is an empty sum
    if np.linalg.norm(others) <= CANCELLATION_FLOOR * (np.linalg.norm(composite)
                                                        + np.linalg.norm(own)):
        others = np.zeros_like(others)
    a = (np.eye(composite.shape[0])
         + (others @ others.conj().T + own @ own.conj().T) / noise_w)
    b = own @ others.conj().T / noise_w
    return a, b


def build_subproblem(terms: LinkTerms, theta: np.ndarray, l: int,
                     cfg: ScenarioConfig) -> ElementSubproblem:
    """Matrices of the element-``l`` subproblem from leave-one-out composites."""
    a_dl, b_dl = _split(terms.composite_dl, terms.term_dl(l), theta[l], cfg.noise_dl_w)
    a_ul, b_ul = _split(terms.composite_ul, terms.term_ul(l), theta[l], cfg.noise_ul_w)
    return ElementSubproblem(a_dl, b_dl, a_ul, b_ul,
                             _rank_one_eigenvalue(a_dl, b_dl),
                             _rank_one_eigenvalue(a_ul, b_ul))


def element_objective_direct(a: np.ndarray, b: np.ndarray, theta_l: complex) -> float:
    """``log2 det(I + theta A^{-1}B + conj(theta) A^{-1}B^H)``."""
    # det is real positive: it equals det(A + theta B + conj(theta) B^H) / det(A)
    m = (np.eye(a.shape[0]) + theta_l * np.linalg.solve(a, b)
         + np.conj(theta_l) * np.linalg.solve(a, b.conj().T))
    _, logdet = np.linalg.slogdet(m)
    return float(np.real(logdet) / np.log(2.0))


def scalar_form_coefficients(a: np.ndarray, b: np.ndarray):
    """Return ``(lam, c_prime, c)`` of the eigen-decomposed rank-one subproblem.

    ``A^{-1}B = U diag(lam, 0, ..., 0) U^{-1}`` with ``B = u v^H``, first
    eigenvector ``A^{-1} u`` and the rest spanning the null space of ``v^H``.
    With ``C = U^H A U``, ``c_prime = C[0, 0]`` and ``c = inv(C)[0, 0]``.
    The first row of ``U^{-1}`` is ``v^H / lam``, which gives the closed forms
    ``c_prime = u^H A^{-1} u`` and ``c = v^H A^{-1} v / |lam|^2``; forming
    ``U`` explicitly loses accuracy when ``lam`` is small relative to ``B``.
    """
    uu, s, vh = np.linalg.svd(b)
    u = uu[:, 0] * s[0]
    v = vh[0].conj()
    factor = sla.cho_factor(a)
    a_inv_u = sla.cho_solve(factor, u)
    lam = complex(np.vdot(v, a_inv_u))
    c_prime = float(np.real(np.vdot(u, a_inv_u)))
    c = float(np.real(np.vdot(v, sla.cho_solve(factor, v)))) / abs(lam) ** 2
    return lam, c_prime, c


def element_objective_scalar(a: np.ndarray, b: np.ndarray, theta_l: complex) -> float:
    """``log2(1 + |lam|^2 (1 - c' c) + 2 Re(theta lam))`` for diagonalizable ``A^{-1}B``."""
    lam, c_prime, c = scalar_form_coefficients(a, b)
    inner = 1 + abs(lam) ** 2 * (1 - c_prime * c) + 2 * np.real(theta_l * lam)
    return float(np.log2(inner))


def _diagonalizable(lam: complex, b: np.ndarray) -> bool:
    # ||A^{-1}|| <= 1 since A >= I, so ||B||_F bounds the trace scale
    scale = np.linalg.norm(b)
    tol = 1e-12 * scale if scale > 0 else 1e-12
    return abs(lam) > tol


def exact_element_objective(sub: ElementSubproblem, theta_l: complex, eta: float) -> float:
    """Weighted element objective, cross-checked between the two closed forms.

    Raises ``ArithmeticError`` if the direct log-det and the scalar form
    disagree by more than ``1e-8`` on a diagonalizable direction.
    """
    total = 0.0
    for weight, a, b, lam in ((eta, sub.a_dl, sub.b_dl, sub.lambda_dl),
                              (1 - eta, sub.a_ul, sub.b_ul, sub.lambda_ul)):
        if weight == 0:
            continue
        direct = element_objective_direct(a, b, theta_l)
        if _diagonalizable(lam, b):
            scalar = element_objective_scalar(a, b, theta_l)
            if abs(direct - scalar) > DIRECT_VS_SCALAR_TOL:
                raise ArithmeticError(f"element objective forms disagree: {direct} vs {scalar}")
        total += weight * direct
    return total


def closed_form_phase(lambda_dl: complex, lambda_ul: complex, eta: float) -> complex:
    """Unit-modulus maximiser of ``eta Re(theta lam_dl) + (1-eta) Re(theta lam_ul)``."""
    if abs(lambda_dl) < ZERO_LAMBDA and abs(lambda_ul) < ZERO_LAMBDA:
        raise ValueError("both eigenvalues vanish; use the fallback phase")
    return complex(np.exp(-1j * np.angle(eta * lambda_dl + (1 - eta) * lambda_ul)))


def element_update(sub: ElementSubproblem, eta: float) -> complex:
    """Four-branch phase update.

    A direction counts as active when its weight is positive and
    ``tr(A^{-1}B)`` is nonzero relative to ``||B||_F``.
    """
    dl = eta > 0 and _diagonalizable(sub.lambda_dl, sub.b_dl)
    ul = eta < 1 and _diagonalizable(sub.lambda_ul, sub.b_ul)
    if dl and ul:
        return closed_form_phase(sub.lambda_dl, sub.lambda_ul, eta)
    if dl:
        return complex(np.exp(-1j * np.angle(sub.lambda_dl)))
    if ul:
        return complex(np.exp(-1j * np.angle(sub.lambda_ul)))
    return 1.0 + 0j


def lemma2_check(sub: ElementSubproblem, cfg: ScenarioConfig, tol: float = 1e-8) -> bool:
    """Check the eigenvalue bounds on ``A`` and ``|lam|``.

    When ``n_streams < dim - 1`` the smallest eigenvalue of ``A`` must be 1;
    ``|lam| <= ||B||_F`` holds whenever ``A >= I``.
    """
    ok = True
    for a, b, lam, ns, dim in ((sub.a_dl, sub.b_dl, sub.lambda_dl, cfg.n_streams_dl, cfg.k_ue),
                               (sub.a_ul, sub.b_ul, sub.lambda_ul, cfg.n_streams_ul, cfg.n_bs)):
        if ns < dim - 1:
            ok &= abs(np.linalg.eigvalsh(a)[0] - 1.0) <= tol
        ok &= abs(lam) <= np.linalg.norm(b) + tol
    return bool(ok)


def sweep_elements(terms: LinkTerms, theta: np.ndarray, cfg: ScenarioConfig,
                   weights: np.ndarray) -> np.ndarray:
    """One in-order pass over all elements; ``weights[l]`` is the DL weight for element ``l``."""
    theta = theta.copy()
    terms.refresh(theta)
    for l in range(theta.size):
        sub = build_subproblem(terms, theta, l, cfg)
        new = element_update(sub, weights[l])
        terms.update(l, theta[l], new)
        theta[l] = new
    return theta


def lcao_solve(ch: ChannelSet, cfg: ScenarioConfig, rng: np.random.Generator | None = None,
               element_weights=None, refl_init: ReflectionState | None = None):
    """Closed-form element sweeps alternated with precoder updates.

    ``element_weights`` (length ``L``) overrides the DL weight used inside the
    element updates; rates and stopping always use ``cfg.eta``. Returns
    ``(ReflectionState, PrecoderPair, OptimizationTrace)``.
    """
    l_ris = ch.dims[0]
    weights = (np.full(l_ris, cfg.eta) if element_weights is None
               else np.asarray(element_weights, dtype=float))
    if weights.shape != (l_ris,):
        raise ValueError(f"element_weights must have length {l_ris}")
    if refl_init is None:
        rng = rng if rng is not None else np.random.default_rng(cfg.seed)
        refl_init = ReflectionState.random(l_ris, rng, cfg.theta_d_rad)
    t0 = time.perf_counter()
    refl = refl_init
    precoders = optimal_precoders(ch, refl, cfg)
    rates = evaluate(ch, refl, precoders, cfg)
    trace = OptimizationTrace()
    trace.append(rates, wall_ms=1e3 * (time.perf_counter() - t0))

    for _ in range(cfg.max_outer):
        t0 = time.perf_counter()
        prev = rates.r_wsr
        terms = link_terms(ch, precoders, refl.theta)
        theta = sweep_elements(terms, refl.theta, cfg, weights)
        refl = ReflectionState(theta, refl.theta_d_rad)
        precoders = optimal_precoders(ch, refl, cfg)
        rates = evaluate(ch, refl, precoders, cfg)
        trace.append(rates, wall_ms=1e3 * (time.perf_counter() - t0))
        if abs(rates.r_wsr - prev) <= cfg.eps_outer:
            break
    return refl, precoders, trace
