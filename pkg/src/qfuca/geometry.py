"""Quasi-fractal UCA geometry.

An N-level array is a circle of circles: level ``n`` places ``K_n`` cells on a
ring of radius ``R_n`` around the centre of its parent cell, and the level-1
cells are the antenna elements.  A logical element is a digit tuple
``(k_N, ..., k_1)``; its flat index is mixed radix with ``k_1`` varying fastest,
which is the row/column order of every matrix in this package.

Two frame conventions are supported:

``"nested"`` (default)
    each child ring is rotated with its parent, so the azimuth of level ``n``
    is ``2*pi*(k_n/K_n + k_{n+1}/K_{n+1} + ... + k_N/K_N)``.  Shifting ``k_N``
    by one is then a rigid rotation of the whole array by ``2*pi/K_N``.
``"global"``
    every level uses the same fixed x-axis, azimuth ``2*pi*k_n/K_n``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT
from scipy.spatial import cKDTree

from .errors import ConfigError

FRAMES = ("nested", "global")
SIDES = ("tx", "rx")


@dataclass(frozen=True)
class ArrayConfig:
    """Transmitter/receiver QF-UCA pair plus link constants.

    Counts and radii are listed innermost level first, ``(K_1, ..., K_N)``.
    Receive counts/radii default to the transmit ones.
    """

    counts_tx: tuple[int, ...]
    radii_tx: tuple[float, ...]
    counts_rx: tuple[int, ...] | None = None
    radii_rx: tuple[float, ...] | None = None
    distance: float = 100.0
    carrier_freq: float = 5.8e9
    beta: float = 1.0
    total_power: float = 1.0
    noise_variance: float = 1.0
    frame: str = "nested"
    symmetric: bool = True
    aggregate_radius: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "counts_tx", tuple(int(k) for k in self.counts_tx))
        object.__setattr__(self, "radii_tx", tuple(float(r) for r in self.radii_tx))
        if self.counts_rx is None:
            object.__setattr__(self, "counts_rx", self.counts_tx)
        else:
            object.__setattr__(self, "counts_rx", tuple(int(k) for k in self.counts_rx))
        if self.radii_rx is None:
            object.__setattr__(self, "radii_rx", self.radii_tx)
        else:
            object.__setattr__(self, "radii_rx", tuple(float(r) for r in self.radii_rx))
        self._validate()

    def _validate(self):
        if len(self.counts_tx) == 0:
            raise ConfigError("counts_tx", "at least one level is required")
        for side in SIDES:
            counts = getattr(self, f"counts_{side}")
            radii = getattr(self, f"radii_{side}")
            if len(counts) != len(self.counts_tx):
                raise ConfigError(f"counts_{side}", "level count differs between tx and rx")
            if len(radii) != len(counts):
                raise ConfigError(f"radii_{side}", f"expected {len(counts)} radii, got {len(radii)}")
            if any(k < 1 for k in counts):
                raise ConfigError(f"counts_{side}", "all counts must be >= 1")
            if any(not np.isfinite(r) or r < 0 for r in radii):
                raise ConfigError(f"radii_{side}", "all radii must be finite and >= 0")
            if self.aggregate_radius is not None and not np.isclose(
                sum(radii), self.aggregate_radius, rtol=1e-9, atol=1e-12
            ):
                raise ConfigError(
                    f"radii_{side}",
                    f"radii sum to {sum(radii)!r}, expected aggregate radius {self.aggregate_radius!r}",
                )
        if not self.distance > 0:
            raise ConfigError("distance", "must be > 0")
        if not self.carrier_freq > 0:
            raise ConfigError("carrier_freq", "must be > 0")
        if self.total_power < 0:
            raise ConfigError("total_power", "must be >= 0")
        if self.noise_variance < 0:
            raise ConfigError("noise_variance", "must be >= 0")
        if self.frame not in FRAMES:
            raise ConfigError("frame", f"must be one of {FRAMES}, got {self.frame!r}")
        if self.symmetric and (self.counts_rx != self.counts_tx or self.radii_rx != self.radii_tx):
            raise ConfigError("symmetric", "symmetric mode requires identical tx and rx counts and radii")

    @property
    def levels(self) -> int:
        return len(self.counts_tx)

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_freq

    @property
    def n_tx(self) -> int:
        return int(np.prod(self.counts_tx))

    @property
    def n_rx(self) -> int:
        return int(np.prod(self.counts_rx))

    @property
    def radius_tx(self) -> float:
        return float(sum(self.radii_tx))

    @property
    def radius_rx(self) -> float:
        return float(sum(self.radii_rx))

    @property
    def near_field(self) -> bool:
        """True when D < 2 R_E; the 1/d amplitude model is still used."""
        return self.distance < 2 * max(self.radius_tx, self.radius_rx)

    def counts(self, side: str) -> tuple[int, ...]:
        return self.counts_tx if side == "tx" else self.counts_rx

    def radii(self, side: str) -> tuple[float, ...]:
        return self.radii_tx if side == "tx" else self.radii_rx

    def with_(self, **changes) -> "ArrayConfig":
        return replace(self, **changes)


def _check_side(side):
    if side not in SIDES:
        raise ValueError(f"side must be 'tx' or 'rx', got {side!r}")


def index_digits(counts: Sequence[int]) -> np.ndarray:
    """All logical indices as an ``(M, N)`` array of digits ``(k_N, ..., k_1)``."""
    shape = tuple(counts)[::-1]
    m = int(np.prod(shape))
    return np.stack(np.unravel_index(np.arange(m), shape), axis=1)


def flat_index(digits: Sequence[int], counts: Sequence[int]) -> int:
    """Flat position of the digit tuple ``(k_N, ..., k_1)``."""
    shape = tuple(counts)[::-1]
    if len(digits) != len(shape):
        raise IndexError(f"expected {len(shape)} digits, got {len(digits)}")
    for level, (d, k) in enumerate(zip(digits, shape)):
        if not 0 <= d < k:
            raise IndexError(f"digit for level {len(shape) - level} is {d}, must lie in [0, {k - 1}]")
    return int(np.ravel_multi_index(tuple(int(d) for d in digits), shape))


def azimuths(counts: Sequence[int], frame: str = "nested", digits: np.ndarray | None = None) -> np.ndarray:
    """Per-level azimuths, shape ``(M, N)``, columns ordered ``(level N, ..., level 1)``."""
    if digits is None:
        digits = index_digits(counts)
    digits = np.atleast_2d(digits)
    own = 2 * np.pi * digits / np.asarray(counts[::-1], dtype=float)
    if frame == "nested":
        return np.cumsum(own, axis=1)
    if frame == "global":
        return own
    raise ValueError(f"unknown frame {frame!r}")


def positions(config: ArrayConfig, side: str) -> np.ndarray:
    """Element positions in metres for every logical index, shape ``(M, 3)``."""
    _check_side(side)
    counts = config.counts(side)
    radii = np.asarray(config.radii(side)[::-1])
    ang = azimuths(counts, config.frame)
    xy = np.stack([(radii * np.cos(ang)).sum(axis=1), (radii * np.sin(ang)).sum(axis=1)], axis=1)
    z = np.full((len(xy), 1), 0.0 if side == "tx" else config.distance)
    return np.hstack([xy, z])


def element_position(config: ArrayConfig, idx: Sequence[int], side: str) -> np.ndarray:
    """Position of one logical element, ``idx = (k_N, ..., k_1)``."""
    _check_side(side)
    counts = config.counts(side)
    flat_index(idx, counts)  # range check
    radii = np.asarray(config.radii(side)[::-1])
    ang = azimuths(counts, config.frame, np.asarray(idx)[None, :])[0]
    z = 0.0 if side == "tx" else config.distance
    return np.array([np.sum(radii * np.cos(ang)), np.sum(radii * np.sin(ang)), z])


def merge_positions(points: np.ndarray, tol: float) -> tuple[np.ndarray, np.ndarray]:
    """Union points closer than or equal to ``tol``.

    Returns ``(physical, mapping)`` where ``physical[mapping[i]]`` is the merged
    location of ``points[i]``.  Each cluster is represented by its first member
    and clusters are numbered in order of first appearance.
    """
    if tol < 0:
        raise ValueError("merge tolerance must be >= 0")
    points = np.asarray(points, dtype=float)
    parent = np.arange(len(points))

    def root(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for a, b in sorted(cKDTree(points).query_pairs(tol)):
        ra, rb = root(a), root(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    roots = np.array([root(i) for i in range(len(points))], dtype=int)
    # a root is the smallest member of its cluster, so sorted roots = order of first appearance
    uniq, mapping = np.unique(roots, return_inverse=True)
    return points[uniq], mapping.ravel()


@dataclass(frozen=True)
class ElementLayout:
    side: str
    counts: tuple[int, ...]
    positions: np.ndarray = field(repr=False)
    physical_elements: np.ndarray = field(repr=False)
    logical_to_physical: np.ndarray = field(repr=False)
    radius: float = 0.0

    @property
    def n_logical(self) -> int:
        return len(self.positions)

    @property
    def n_physical(self) -> int:
        return len(self.physical_elements)

    @property
    def shared_count(self) -> int:
        return self.n_logical - self.n_physical

    def multiplicity(self) -> np.ndarray:
        """Number of logical indices mapped onto each physical element."""
        return np.bincount(self.logical_to_physical, minlength=self.n_physical)


def build_layout(config: ArrayConfig, side: str = "tx", merge_tol: float | None = None) -> ElementLayout:
    """Logical positions plus the deduplicated physical inventory.

    ``merge_tol`` defaults to one hundredth of the wavelength.
    """
    if merge_tol is None:
        merge_tol = config.wavelength / 100
    pos = positions(config, side)
    physical, mapping = merge_positions(pos, merge_tol)
    return ElementLayout(
        side=side,
        counts=config.counts(side),
        positions=pos,
        physical_elements=physical,
        logical_to_physical=mapping,
        radius=float(sum(config.radii(side))),
    )


@dataclass(frozen=True)
class LayoutSummary:
    streams: int
    physical: int
    exceeds: bool
    radius: float


def layout_summary(layout: ElementLayout) -> LayoutSummary:
    return LayoutSummary(
        streams=layout.n_logical,
        physical=layout.n_physical,
        exceeds=layout.n_logical > layout.n_physical,
        radius=layout.radius,
    )


def write_layout_csv(layout: ElementLayout, path) -> None:
    letter = "k" if layout.side == "tx" else "v"
    n = len(layout.counts)
    digits = index_digits(layout.counts)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"{letter}{n - i}" for i in range(n)] + ["x_m", "y_m", "z_m", "physical_id"])
        for d, p, pid in zip(digits, layout.positions, layout.logical_to_physical):
            w.writerow([*map(int, d), *(f"{v:.17g}" for v in p), int(pid)])
