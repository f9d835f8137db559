import numpy as np
import pytest

from risfdd.channel import ChannelSet
from risfdd.scenario import ScenarioConfig
from risfdd.transceiver import PrecoderPair, ReflectionState


def cn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def random_channels(rng, l, n, k):
    return ChannelSet(cn(rng, l, n), cn(rng, l, k), cn(rng, l, n), cn(rng, l, k))


def unit_config(l=6, n=4, k=3, ns_dl=2, ns_ul=2, eta=0.5, **kw):
    """Small scenario with unit noise and unit power budgets (30 dBm = 1 W)."""
    return ScenarioConfig(n_bs=n, k_ue=k, l_ris=l, l_h=l, l_v=1, n_streams_dl=ns_dl,
                          n_streams_ul=ns_ul, eta=eta, p_dl_max_dbm=30.0, p_ul_max_dbm=30.0,
                          noise_dl_dbm=30.0, noise_ul_dbm=30.0, **kw)


def unchecked_state(theta, theta_d=0.0):
    """ReflectionState bypassing the unit-modulus check (for finite differences)."""
    obj = object.__new__(ReflectionState)
    object.__setattr__(obj, "theta", np.asarray(theta, dtype=complex))
    object.__setattr__(obj, "theta_d_rad", theta_d)
    return obj


def random_precoders(rng, n, k, ns_dl, ns_ul):
    return PrecoderPair(cn(rng, n, ns_dl), cn(rng, k, ns_ul), np.inf, np.inf)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def toy_config(**kw):
    """Two-element RIS with 2x2 links; very low noise so the RIS matters."""
    from risfdd.scenario import default_paper_scenario
    return default_paper_scenario().replace(n_bs=2, k_ue=2, l_ris=2, l_h=2, l_v=1,
                                            n_streams_dl=2, n_streams_ul=2,
                                            noise_dl_dbm=-140.0, noise_ul_dbm=-140.0, **kw)


def _two_stream_capacity(h, noise, budget):
    """Batched capacity of 2x2 channels ``h`` (..., 2, 2) with water-filling."""
    gains = np.linalg.eigvalsh(np.swapaxes(h.conj(), -1, -2) @ h)[..., ::-1]
    g1, g2 = np.maximum(gains[..., 0], 1e-300), np.maximum(gains[..., 1], 1e-300)
    mu = (budget + noise / g1 + noise / g2) / 2
    both = mu > noise / g2
    p1 = np.where(both, mu - noise / g1, budget)
    p2 = np.where(both, mu - noise / g2, 0.0)
    return np.log2(1 + p1 * g1 / noise) + np.log2(1 + p2 * g2 / noise)


def grid_maximum(ch, cfg, step_deg=0.5):
    """Brute-force WSR maximum over (theta_1, theta_2) on a ``step_deg`` grid.

    Rates depend on the phases only through their difference, so fixing
    theta_1 = 1 and scanning theta_2 visits every value of the 2-D grid.
    """
    phases = np.deg2rad(np.arange(0.0, 360.0, step_deg))
    theta = np.stack([np.ones_like(phases), np.exp(1j * phases)], axis=1).astype(complex)
    h_dl = np.einsum("lk,pl,ln->pkn", ch.h_dl.conj(), theta, ch.g_dl)
    h_ul = np.einsum("ln,pl,lk->pnk", ch.g_ul.conj(), theta, ch.h_ul)
    r_dl = _two_stream_capacity(h_dl, cfg.noise_dl_w, cfg.p_dl_max_w)
    r_ul = _two_stream_capacity(h_ul, cfg.noise_ul_w, cfg.p_ul_max_w)
    return float(np.max(cfg.eta * r_dl + (1 - cfg.eta) * r_ul))


ACCEPTANCE_LINES: list[str] = []


def report(number: int, passed: bool, detail: str) -> None:
    line = f"{'PASS' if passed else 'FAIL'} criterion {number:2d}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
