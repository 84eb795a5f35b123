"""Spectrum efficiency and orthogonality metrics."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .channel import assemble_channel
from .demodulation import DemodPipeline, calibrate
from .geometry import ArrayConfig

SNR_REFERENCES = ("boresight", "transmit")
SE_POLICIES = ("processed", "fixed")


@dataclass(frozen=True)
class PowerAllocation:
    powers: np.ndarray = field(repr=False)
    total_power: float

    def __post_init__(self):
        p = np.asarray(self.powers, dtype=float)
        if np.any(p < 0):
            raise ValueError("per-mode powers must be >= 0")
        if not np.isclose(p.sum(), self.total_power, rtol=1e-12, atol=0.0):
            raise ValueError(f"powers sum to {p.sum()!r}, expected {self.total_power!r}")
        object.__setattr__(self, "powers", p)


def uniform_allocation(total_power: float, n_modes: int) -> PowerAllocation:
    return PowerAllocation(np.full(n_modes, total_power / n_modes), total_power)


@dataclass(frozen=True)
class SeResult:
    sinr: np.ndarray = field(repr=False)
    per_mode: np.ndarray = field(repr=False)
    total: float
    active_modes: int


def _values(x, keys=None):
    if isinstance(x, Mapping):
        if keys is None:
            keys = list(x)
        elif set(keys) != set(x):
            raise ValueError("mode sets of gains, powers and noise differ")
        return np.array([x[k] for k in keys], dtype=float), keys
    return np.asarray(x, dtype=float), keys


def spectrum_efficiency(gains, alloc, noise, interference=None, active=None) -> SeResult:
    """``sum_m log2(1 + v_m^2 p_m / (sigma_m^2 + I_m))`` in bit/s/Hz.

    ``gains``, ``noise`` (and ``alloc`` when not a :class:`PowerAllocation`)
    are per-mode arrays or mode-keyed mappings; ``noise`` may be a scalar.
    Modes outside ``active`` contribute nothing.
    """
    v, keys = _values(gains)
    p = alloc.powers if isinstance(alloc, PowerAllocation) else _values(alloc, keys)[0]
    s2 = np.broadcast_to(_values(noise, keys)[0] if not np.isscalar(noise) else float(noise), v.shape)
    i = np.zeros_like(v) if interference is None else np.broadcast_to(_values(interference, keys)[0], v.shape)
    if not (len(p) == len(v) == len(s2)):
        raise ValueError(f"length mismatch: {len(v)} gains, {len(p)} powers, {len(s2)} noise values")
    act = np.ones(len(v), bool) if active is None else np.asarray(active, bool)
    if np.any(s2[act] <= 0):
        raise ValueError("noise variance must be > 0 for every active mode")
    sinr = np.zeros(len(v))
    sinr[act] = v[act] ** 2 * p[act] / (s2[act] + i[act])
    per_mode = np.log2(1 + sinr)
    return SeResult(sinr=sinr, per_mode=per_mode, total=float(per_mode.sum()), active_modes=int(act.sum()))


def noise_for_snr(config: ArrayConfig, snr_db: float, reference: str = "boresight") -> float:
    """Per-element noise variance giving ``snr_db``.

    ``"transmit"``: SNR = total transmit power / noise variance.
    ``"boresight"``: SNR = total transmit power times the free-space power gain
    at the array separation D, over the noise variance.
    """
    snr = 10 ** (snr_db / 10)
    if reference == "transmit":
        return config.total_power / snr
    if reference == "boresight":
        g0 = config.beta * config.wavelength / (4 * np.pi * config.distance)
        return config.total_power * g0**2 / snr
    raise ValueError(f"SNR reference must be one of {SNR_REFERENCES}, got {reference!r}")


def leakage_matrix(pipeline: DemodPipeline, H=None) -> np.ndarray:
    """``|G H T|^2``: power reaching recovered mode ``m`` (row) from transmitted mode ``m'`` (column)."""
    return np.abs(pipeline.end_to_end(H)) ** 2


def link_se(
    pipeline: DemodPipeline,
    noise_variance: float,
    total_power: float,
    policy: str = "processed",
    alloc: PowerAllocation | None = None,
) -> SeResult:
    """Spectrum efficiency of a calibrated link with uniform (default) power per mode.

    ``"processed"`` uses the end-to-end gain after zero forcing, the noise
    carried by each composite demodulation row and the residual inter-mode
    interference.  ``"fixed"`` uses the singular values with the raw noise
    variance.
    """
    n = pipeline.size
    alloc = uniform_allocation(total_power, n) if alloc is None else alloc
    if policy == "fixed":
        return spectrum_efficiency(pipeline.singular_values, alloc, noise_variance, active=pipeline.recoverable)
    if policy != "processed":
        raise ValueError(f"SE policy must be one of {SE_POLICIES}, got {policy!r}")
    G = pipeline.demod_matrix()
    E = G @ pipeline.channel @ pipeline.mset.transmit_matrix()
    row = np.sum(np.abs(G) ** 2, axis=1)
    power = np.abs(E) ** 2
    interference = power @ alloc.powers - np.diag(power) * alloc.powers
    return spectrum_efficiency(
        np.abs(np.diag(E)),
        alloc,
        noise_variance * row,
        interference=np.maximum(interference, 0.0),
        active=row > 0,
    )


@dataclass(frozen=True)
class SeRow:
    config_id: str
    levels: int
    distance: float
    snr_db: float
    total_se: float
    active_modes: int


def _evaluate(args):
    cid, config, distance, snrs, distance_mode, reference, policy = args
    cfg = config.with_(distance=distance)
    pipeline = calibrate(assemble_channel(cfg, distance_mode))
    rows = []
    for snr in snrs:
        se = link_se(pipeline, noise_for_snr(cfg, snr, reference), cfg.total_power, policy)
        rows.append(SeRow(cid, cfg.levels, distance, snr, se.total, se.active_modes))
    return rows


def dimension_comparison(
    configs: Mapping[str, ArrayConfig],
    snr_db: Sequence[float] = (15.0,),
    distances: Sequence[float] | None = None,
    distance_mode: str = "exact",
    reference: str = "boresight",
    policy: str = "processed",
    workers: int | None = None,
) -> list[SeRow]:
    """SE for every (config, distance, SNR) point, in grid order regardless of completion order."""
    jobs = []
    for cid, cfg in configs.items():
        for d in distances if distances is not None else (cfg.distance,):
            jobs.append((cid, cfg, float(d), [float(s) for s in snr_db], distance_mode, reference, policy))
    if workers == 1:
        results = map(_evaluate, jobs)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_evaluate, jobs))
    return [row for rows in results for row in rows]
