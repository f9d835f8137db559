"""Geometric narrowband channels for the BS-RIS-UE link.

The BS and UE carry uniform linear arrays; the RIS is a uniform planar array
with ``l_v`` vertical by ``l_h`` horizontal elements. Each of the four links
(BS->RIS and RIS->UE, for downlink and uplink) is a sum of ``M`` rank-one
paths with i.i.d. complex Gaussian gains whose variance is the linear
attenuation ``10**(-PL_dB / 10)``.

Storage convention (all shaped so that row ``l`` belongs to RIS element ``l``):

============  =======  =============================================
field         shape    physical channel
============  =======  =============================================
``g_dl``      L x N    BS -> RIS, downlink carrier
``h_dl``      L x K    conjugate transpose is RIS -> UE (K x L)
``g_ul``      L x N    conjugate transpose is RIS -> BS (N x L)
``h_ul``      L x K    UE -> RIS, uplink carrier
============  =======  =============================================
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .scenario import SPEED_OF_LIGHT, ScenarioConfig, link_distances

REFERENCE_DISTANCE_M = 1.0
REFERENCE_FREQUENCY_HZ = 1e9

# Child-stream indices under the master SeedSequence. Channels and algorithm
# initialisation use disjoint subtrees so paired comparisons share channels.
STREAM_G_DL, STREAM_H_DL, STREAM_G_UL, STREAM_H_UL = range(4)
STREAM_ALGORITHM = 4


@dataclass(frozen=True)
class ChannelSet:
    g_dl: np.ndarray
    h_dl: np.ndarray
    g_ul: np.ndarray
    h_ul: np.ndarray

    @property
    def dims(self) -> tuple[int, int, int]:
        """``(L, N, K)``."""
        return self.g_dl.shape[0], self.g_dl.shape[1], self.h_dl.shape[1]

    def validate(self) -> None:
        l, n, k = self.dims
        expected = {"g_dl": (l, n), "h_dl": (l, k), "g_ul": (l, n), "h_ul": (l, k)}
        for name, shape in expected.items():
            arr = getattr(self, name)
            if arr.shape != shape:
                raise ValueError(f"{name} has shape {arr.shape}, expected {shape}")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite entries")


def path_loss_db(d, f):
    """3GPP distance/frequency path loss ``28 + 22 log10(d) + 20 log10(f/1GHz)`` in dB."""
    d = np.asarray(d, dtype=float)
    if np.any(d < REFERENCE_DISTANCE_M):
        raise ValueError(f"distance must be >= {REFERENCE_DISTANCE_M} m, got {d}")
    if np.any(np.asarray(f) <= 0):
        raise ValueError("frequency must be positive")
    out = (28.0 + 22.0 * np.log10(d / REFERENCE_DISTANCE_M)
           + 20.0 * np.log10(np.asarray(f, dtype=float) / REFERENCE_FREQUENCY_HZ))
    return float(out) if out.ndim == 0 else out


def _phase_ramp(n: int, omega: float) -> np.ndarray:
    return np.exp(1j * omega * np.arange(n)) / np.sqrt(n)


def ula_response(n: int, spacing: float, f: float, angle: float) -> np.ndarray:
    """Unit-norm ULA steering vector for a departure/arrival angle in radians."""
    omega = 2 * np.pi * f * spacing * np.sin(angle) / SPEED_OF_LIGHT
    return _phase_ramp(n, omega)


def upa_response(l_h: int, l_v: int, spacing_h: float, spacing_v: float, f: float,
                 azimuth: float, elevation: float) -> np.ndarray:
    """Unit-norm UPA steering vector, ordered as ``kron(vertical, horizontal)``.

    Entry ``v * l_h + h`` carries the phase of vertical index ``v`` and
    horizontal index ``h``.
    """
    gamma = 2 * np.pi * f * spacing_v * np.sin(elevation) / SPEED_OF_LIGHT
    delta = 2 * np.pi * f * spacing_h * np.cos(elevation) * np.sin(azimuth) / SPEED_OF_LIGHT
    return np.kron(_phase_ramp(l_v, gamma), _phase_ramp(l_h, delta))


SteeringSampler = Callable[[np.random.Generator], np.ndarray]


def ula_sampler(n: int, spacing: float, f: float) -> SteeringSampler:
    """Draw ULA responses with the angle uniform on [-pi, pi)."""
    def sample(rng):
        return ula_response(n, spacing, f, rng.uniform(-np.pi, np.pi))
    return sample


def upa_sampler(l_h: int, l_v: int, spacing: float, f: float) -> SteeringSampler:
    """Draw UPA responses with azimuth and elevation uniform on [-pi/2, pi/2]."""
    def sample(rng):
        az, el = rng.uniform(-np.pi / 2, np.pi / 2, size=2)
        return upa_response(l_h, l_v, spacing, spacing, f, az, el)
    return sample


def complex_gaussian(rng: np.random.Generator, variance: float, size=None):
    """Circularly symmetric CN(0, variance) samples."""
    scale = np.sqrt(variance / 2)
    return scale * (rng.standard_normal(size) + 1j * rng.standard_normal(size))


def draw_channel(rng: np.random.Generator, n_rx: int, n_tx: int, n_paths: int,
                 variance_linear: float, rx_steering: SteeringSampler,
                 tx_steering: SteeringSampler, gains=None) -> np.ndarray:
    """Sum of ``n_paths`` rank-one paths scaled by ``sqrt(n_rx n_tx / n_paths)``.

    ``gains`` overrides the random path gains (used for deterministic tests).
    """
    if n_paths < 1:
        raise ValueError("n_paths must be >= 1")
    if not variance_linear > 0:
        raise ValueError("variance_linear must be positive")
    if gains is None:
        gains = complex_gaussian(rng, variance_linear, n_paths)
    out = np.zeros((n_rx, n_tx), dtype=complex)
    for alpha in gains:
        a_rx = rx_steering(rng)
        a_tx = tx_steering(rng)
        out += alpha * np.outer(a_rx, a_tx.conj())
    return np.sqrt(n_rx * n_tx / n_paths) * out


def _child_rngs(seed) -> list[np.random.Generator]:
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return [np.random.default_rng(child) for child in ss.spawn(STREAM_ALGORITHM + 1)]


def algorithm_rng(seed) -> np.random.Generator:
    """Generator for algorithm-side randomness, disjoint from the channel streams."""
    return _child_rngs(seed)[STREAM_ALGORITHM]


def realize_channels(cfg: ScenarioConfig, seed=None) -> ChannelSet:
    """Draw one realisation of all four links.

    ``seed`` defaults to ``cfg.seed``. Each link draws from its own child of
    the master seed sequence, so the result does not depend on draw order.
    """
    rngs = _child_rngs(cfg.seed if seed is None else seed)
    d_br, d_ru = link_distances(cfg)
    a = cfg.antenna_spacing_m
    l, n, k = cfg.l_ris, cfg.n_bs, cfg.k_ue

    def var(d, f):
        return 10.0 ** (-path_loss_db(d, f) / 10.0)

    def ris(f):
        return upa_sampler(cfg.l_h, cfg.l_v, a, f)

    f_d, f_u = cfg.f_dl_hz, cfg.f_ul_hz
    g_dl = draw_channel(rngs[STREAM_G_DL], l, n, cfg.n_paths_g_dl, var(d_br, f_d),
                        ris(f_d), ula_sampler(n, a, f_d))
    h_dl_herm = draw_channel(rngs[STREAM_H_DL], k, l, cfg.n_paths_h_dl, var(d_ru, f_d),
                             ula_sampler(k, a, f_d), ris(f_d))
    g_ul_herm = draw_channel(rngs[STREAM_G_UL], n, l, cfg.n_paths_g_ul, var(d_br, f_u),
                             ula_sampler(n, a, f_u), ris(f_u))
    h_ul = draw_channel(rngs[STREAM_H_UL], l, k, cfg.n_paths_h_ul, var(d_ru, f_u),
                        ris(f_u), ula_sampler(k, a, f_u))
    ch = ChannelSet(g_dl=g_dl, h_dl=h_dl_herm.conj().T.copy(),
                    g_ul=g_ul_herm.conj().T.copy(), h_ul=h_ul)
    ch.validate()
    return ch


# Channel dump: little-endian, fixed layout.
#   bytes 0-7    magic b"RISCHAN1"
#   bytes 8-19   uint32 L, N, K
#   bytes 20-27  int64 seed (-1 when unknown)
#   then g_dl (L*N), h_dl (L*K), g_ul (L*N), h_ul (L*K) entries, each matrix
#   row-major, each entry a float64 (real, imag) pair.
_DUMP_MAGIC = b"RISCHAN1"
_DUMP_HEADER = struct.Struct("<8s3Iq")
_DUMP_ORDER = ("g_dl", "h_dl", "g_ul", "h_ul")


def save_channels(ch: ChannelSet, path, seed: int | None = None) -> None:
    l, n, k = ch.dims
    header = _DUMP_HEADER.pack(_DUMP_MAGIC, l, n, k, -1 if seed is None else int(seed))
    with open(path, "wb") as fh:
        fh.write(header)
        for name in _DUMP_ORDER:
            arr = np.ascontiguousarray(getattr(ch, name), dtype="<c16")
            fh.write(arr.tobytes(order="C"))


def load_channels(path) -> tuple[ChannelSet, int | None]:
    """Read a dump written by :func:`save_channels`; returns ``(channels, seed)``."""
    raw = Path(path).read_bytes()
    if len(raw) < _DUMP_HEADER.size:
        raise ValueError(f"{path}: truncated header")
    magic, l, n, k, seed = _DUMP_HEADER.unpack_from(raw)
    if magic != _DUMP_MAGIC:
        raise ValueError(f"{path}: not a channel dump (magic {magic!r})")
    shapes = {"g_dl": (l, n), "h_dl": (l, k), "g_ul": (l, n), "h_ul": (l, k)}
    expected = _DUMP_HEADER.size + 16 * sum(a * b for a, b in shapes.values())
    if len(raw) != expected:
        raise ValueError(f"{path}: expected {expected} bytes, found {len(raw)}")
    offset = _DUMP_HEADER.size
    mats = {}
    for name in _DUMP_ORDER:
        count = shapes[name][0] * shapes[name][1]
        mats[name] = np.frombuffer(raw, dtype="<c16", count=count,
                                   offset=offset).reshape(shapes[name]).astype(complex)
        offset += 16 * count
    return ChannelSet(**mats), (None if seed < 0 else seed)
