"""Line-of-sight channel between two coaxial QF-UCAs.

Each logical transmit/receive pair sees the free-space gain
``beta*lambda/(4*pi) * exp(-2j*pi*d/lambda) / d``.  Distances are either
exact Euclidean norms or the second-order small-aperture expansion

    d ~ D + (1/D) sum_n R_n^2 (1 - cos(theta_n - phi_n))
          + (1/D) sum_{i<j} R_i R_j [cos(theta_i - theta_j) + cos(phi_i - phi_j)
                                      -+ cos(theta_i - phi_j) -+ cos(phi_i - theta_j)]

with ``theta``/``phi`` the absolute receive/transmit azimuths of each level.
``expansion="corrected"`` uses ``-`` on the two mixed cosines (the Taylor
expansion of the exact distance); ``"printed"`` uses ``+`` on all four, which
does not reduce to ``D`` for aligned elements and is kept for comparison only.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigError, NumericalError
from .geometry import ArrayConfig, azimuths, element_position, flat_index, index_digits, positions

DISTANCE_MODES = ("exact", "approx")
EXPANSIONS = ("corrected", "printed")


def exact_distance(config: ArrayConfig, tx_idx: Sequence[int], rx_idx: Sequence[int]) -> float:
    return float(np.linalg.norm(element_position(config, rx_idx, "rx") - element_position(config, tx_idx, "tx")))


def _approx(config, tx_ang, rx_ang, expansion):
    if expansion not in EXPANSIONS:
        raise ValueError(f"expansion must be one of {EXPANSIONS}, got {expansion!r}")
    if config.radii_tx != config.radii_rx:
        raise ConfigError("radii_rx", "the distance expansion assumes equal tx and rx radii per level")
    D = config.distance
    R = np.asarray(config.radii_tx[::-1])  # column order of the azimuth arrays
    th = rx_ang[:, None, :]
    ph = tx_ang[None, :, :]
    acc = np.sum(R**2 * (1 - np.cos(th - ph)), axis=-1)
    sign = -1.0 if expansion == "corrected" else 1.0
    N = len(R)
    for i in range(N):
        for j in range(i + 1, N):
            acc = acc + R[i] * R[j] * (
                np.cos(th[..., i] - th[..., j])
                + np.cos(ph[..., i] - ph[..., j])
                + sign * np.cos(th[..., i] - ph[..., j])
                + sign * np.cos(ph[..., i] - th[..., j])
            )
    return D + acc / D


def approx_distance(
    config: ArrayConfig, tx_idx: Sequence[int], rx_idx: Sequence[int], expansion: str = "corrected"
) -> float:
    flat_index(tx_idx, config.counts_tx)
    flat_index(rx_idx, config.counts_rx)
    tx = azimuths(config.counts_tx, config.frame, np.asarray(tx_idx)[None, :])
    rx = azimuths(config.counts_rx, config.frame, np.asarray(rx_idx)[None, :])
    return float(_approx(config, tx, rx, expansion)[0, 0])


def distance_matrix(config: ArrayConfig, mode: str = "exact", expansion: str = "corrected") -> np.ndarray:
    """All pair distances, rows = receive logical index, columns = transmit logical index."""
    if mode == "exact":
        tx = positions(config, "tx")
        rx = positions(config, "rx")
        return np.linalg.norm(rx[:, None, :] - tx[None, :, :], axis=-1)
    if mode == "approx":
        tx = azimuths(config.counts_tx, config.frame, index_digits(config.counts_tx))
        rx = azimuths(config.counts_rx, config.frame, index_digits(config.counts_rx))
        return _approx(config, tx, rx, expansion)
    raise ValueError(f"distance mode must be one of {DISTANCE_MODES}, got {mode!r}")


def pair_gain(config: ArrayConfig, d):
    """Free-space complex gain at distance ``d`` (scalar or array)."""
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0):
        raise NumericalError("zero or negative distance between elements (co-located tx/rx elements)")
    lam = config.wavelength
    g = config.beta * lam / (4 * np.pi) * np.exp(-2j * np.pi * d / lam) / d
    return complex(g) if g.ndim == 0 else g


@dataclass(frozen=True)
class ChannelMatrix:
    H: np.ndarray = field(repr=False)
    distances: np.ndarray = field(repr=False)
    distance_mode: str
    config: ArrayConfig

    @property
    def shape(self):
        return self.H.shape


def assemble_channel(config: ArrayConfig, distance_mode: str = "exact", expansion: str = "corrected") -> ChannelMatrix:
    d = distance_matrix(config, distance_mode, expansion)
    return ChannelMatrix(H=pair_gain(config, d), distances=d, distance_mode=distance_mode, config=config)


def distance_gap(config: ArrayConfig, expansion: str = "corrected") -> float:
    """Largest ``|approx - exact|`` over all pairs, in metres."""
    return float(np.max(np.abs(distance_matrix(config, "approx", expansion) - distance_matrix(config, "exact"))))


def circulant_projection(H: np.ndarray, counts: Sequence[int], levels: Sequence[int] | None = None) -> np.ndarray:
    """Average ``H`` over simultaneous cyclic shifts of the rx and tx digit of each listed level.

    With ``levels=None`` every level is averaged, giving the nearest matrix whose
    entries depend only on the digit differences ``(v_n - k_n) mod K_n``.
    """
    counts = tuple(counts)
    N = len(counts)
    if levels is None:
        levels = range(1, N + 1)
    shape = counts[::-1]
    T = np.asarray(H).reshape(shape + shape)
    for n in levels:
        ax = N - n
        K = counts[n - 1]
        acc = np.zeros_like(T)
        for s in range(K):
            acc += np.roll(np.roll(T, s, axis=ax), s, axis=N + ax)
        T = acc / K
    m = int(np.prod(counts))
    return T.reshape(m, m)


def circulant_residual(H, counts: Sequence[int] | None = None, levels: Sequence[int] | None = None) -> float:
    """``||H - P(H)||_F / ||H||_F`` with ``P`` the recursive-circulant projection."""
    if isinstance(H, ChannelMatrix):
        if counts is None:
            counts = H.config.counts_tx
        H = H.H
    H = np.asarray(H)
    if H.shape[0] != H.shape[1]:
        raise ValueError("circulant residual needs a square channel (symmetric mode)")
    norm = np.linalg.norm(H)
    if norm == 0:
        return 0.0
    return float(np.linalg.norm(H - circulant_projection(H, counts, levels)) / norm)


def write_channel_csv(channel: ChannelMatrix, path) -> None:
    H, d = channel.H, channel.distances
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["rx_index", "tx_index", "re", "im", "distance_m"])
        for (i, j), v in np.ndenumerate(H):
            w.writerow([i, j, f"{v.real:.17g}", f"{v.imag:.17g}", f"{d[i, j]:.17g}"])
