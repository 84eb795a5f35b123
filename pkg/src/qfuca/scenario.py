"""YAML scenario files and the end-to-end run, sweep and diagnose drivers.

Schema (every section optional except that an array must come from
``preset`` or ``array.counts_tx``/``array.radii_tx``)::

    preset: 1d-25                 # shipped preset id
    array:                        # overrides / explicit geometry
      counts_tx: [5, 5]           # innermost level first
      radii_tx: [1.48, 2.52]      # metres
      counts_rx: ...              # default: transmit values
      radii_rx: ...
      frame: nested               # nested | global
    link:
      distance_m: 100.0
      carrier_freq_hz: 5.8e9
      beta: 1.0
      total_power_w: 1.0
      snr_db: 15.0
      snr_reference: boresight    # boresight | transmit
    run:
      distance_mode: exact        # exact | approx
      expansion: corrected        # corrected | printed
      se_policy: processed        # processed | fixed
      seed: 0
      trials: 100                 # noisy symbol frames
      merge_tol_m: null           # default: wavelength / 100
      workers: null               # sweep threads
    sweep:
      presets: [1d-25, 2d-5x5]    # default: the scenario array only
      distances_m: [50, 100, 200]
      snr_db: [0, 15, 30]
    output:
      dir: out
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .channel import DISTANCE_MODES, EXPANSIONS, assemble_channel, circulant_residual, distance_gap, write_channel_csv
from .demodulation import calibrate, recursive_demodulate, write_report_csv
from .errors import ConfigError
from .geometry import ArrayConfig, build_layout, index_digits, layout_summary, write_layout_csv
from .metrics import SE_POLICIES, SNR_REFERENCES, dimension_comparison, leakage_matrix, link_se, noise_for_snr
from .presets import PRESETS, get_preset

_SECTIONS = {
    "preset": None,
    "array": {"counts_tx", "radii_tx", "counts_rx", "radii_rx", "frame"},
    "link": {"distance_m", "carrier_freq_hz", "beta", "total_power_w", "snr_db", "snr_reference"},
    "run": {"distance_mode", "expansion", "se_policy", "seed", "trials", "merge_tol_m", "workers"},
    "sweep": {"presets", "distances_m", "snr_db"},
    "output": {"dir"},
}


@dataclass(frozen=True)
class Scenario:
    config: ArrayConfig
    config_id: str = "custom"
    snr_db: float = 15.0
    snr_reference: str = "boresight"
    distance_mode: str = "exact"
    expansion: str = "corrected"
    se_policy: str = "processed"
    seed: int = 0
    trials: int = 100
    merge_tol: float | None = None
    workers: int | None = None
    sweep_presets: tuple[str, ...] = ()
    sweep_distances: tuple[float, ...] = ()
    sweep_snr: tuple[float, ...] = ()
    out_dir: Path = field(default=Path("out"))


def _num(section, key, value, kind=float, positive=False):
    try:
        x = kind(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{section}.{key}", f"expected a number, got {value!r}") from None
    if kind is float and not np.isfinite(x):
        raise ConfigError(f"{section}.{key}", "must be finite")
    if positive and x <= 0:
        raise ConfigError(f"{section}.{key}", "must be > 0")
    return x


def _list(section, key, value, kind=float):
    if not isinstance(value, (list, tuple)) or not value:
        raise ConfigError(f"{section}.{key}", "expected a nonempty list")
    return tuple(_num(section, key, v, kind) for v in value)


def _choice(section, key, value, options):
    if value not in options:
        raise ConfigError(f"{section}.{key}", f"must be one of {list(options)}, got {value!r}")
    return value


def parse_scenario(data: Any, base_dir: Path | None = None) -> Scenario:
    """Validate a loaded YAML mapping; errors name the offending field."""
    if not isinstance(data, dict):
        raise ConfigError("<root>", "scenario must be a mapping")
    for key, allowed in _SECTIONS.items():
        if allowed is not None and key in data and not isinstance(data[key], dict):
            raise ConfigError(key, "expected a mapping")
    for key in data:
        if key not in _SECTIONS:
            raise ConfigError(key, f"unknown section; expected one of {list(_SECTIONS)}")
        allowed = _SECTIONS[key]
        if allowed is not None:
            for sub in data[key]:
                if sub not in allowed:
                    raise ConfigError(f"{key}.{sub}", "unknown key")

    array, link = data.get("array", {}), data.get("link", {})
    run, sweep, output = data.get("run", {}), data.get("sweep", {}), data.get("output", {})

    kw: dict[str, Any] = {}
    config_id = "custom"
    if "preset" in data:
        name = data["preset"]
        if name not in PRESETS:
            raise ConfigError("preset", f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
        p = get_preset(name)
        kw.update(counts_tx=p.counts, radii_tx=p.radii)
        config_id = name
    for key in ("counts_tx", "counts_rx"):
        if key in array:
            kw[key] = _list("array", key, array[key], int)
    for key in ("radii_tx", "radii_rx"):
        if key in array:
            kw[key] = _list("array", key, array[key])
    for key in ("counts_tx", "radii_tx"):
        if key not in kw:
            raise ConfigError(f"array.{key}", "required (or give a preset)")
    if "frame" in array:
        kw["frame"] = array["frame"]
    if "distance_m" in link:
        kw["distance"] = _num("link", "distance_m", link["distance_m"], positive=True)
    if "carrier_freq_hz" in link:
        kw["carrier_freq"] = _num("link", "carrier_freq_hz", link["carrier_freq_hz"], positive=True)
    if "beta" in link:
        kw["beta"] = _num("link", "beta", link["beta"], positive=True)
    if "total_power_w" in link:
        kw["total_power"] = _num("link", "total_power_w", link["total_power_w"], positive=True)
    kw["symmetric"] = kw.get("counts_rx", kw["counts_tx"]) == kw["counts_tx"] and kw.get(
        "radii_rx", kw["radii_tx"]
    ) == kw["radii_tx"]
    try:
        config = ArrayConfig(**kw)
    except ConfigError as exc:
        raise ConfigError(f"array.{exc.field}", str(exc).split(": ", 1)[1]) from None

    sweep_presets = ()
    if "presets" in sweep:
        if not isinstance(sweep["presets"], list) or not sweep["presets"]:
            raise ConfigError("sweep.presets", "expected a nonempty list")
        for name in sweep["presets"]:
            if name not in PRESETS:
                raise ConfigError("sweep.presets", f"unknown preset {name!r}")
        sweep_presets = tuple(sweep["presets"])

    base = base_dir or Path(".")
    out = Path(output.get("dir", "out"))
    return Scenario(
        config=config,
        config_id=config_id,
        snr_db=_num("link", "snr_db", link.get("snr_db", 15.0)),
        snr_reference=_choice("link", "snr_reference", link.get("snr_reference", "boresight"), SNR_REFERENCES),
        distance_mode=_choice("run", "distance_mode", run.get("distance_mode", "exact"), DISTANCE_MODES),
        expansion=_choice("run", "expansion", run.get("expansion", "corrected"), EXPANSIONS),
        se_policy=_choice("run", "se_policy", run.get("se_policy", "processed"), SE_POLICIES),
        seed=_num("run", "seed", run.get("seed", 0), int),
        trials=_num("run", "trials", run.get("trials", 100), int, positive=True),
        merge_tol=None if run.get("merge_tol_m") is None else _num("run", "merge_tol_m", run["merge_tol_m"]),
        workers=None if run.get("workers") is None else _num("run", "workers", run["workers"], int, positive=True),
        sweep_presets=sweep_presets,
        sweep_distances=_list("sweep", "distances_m", sweep["distances_m"]) if "distances_m" in sweep else (),
        sweep_snr=_list("sweep", "snr_db", sweep["snr_db"]) if "snr_db" in sweep else (),
        out_dir=out if out.is_absolute() else base / out,
    )


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError("<file>", f"cannot read {path}: {exc.strerror}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError("<file>", f"invalid YAML: {exc}") from None
    return parse_scenario(data or {}, path.parent)


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.17g}"


def _write_rows(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, str) else _fmt(v) for v in row])


def qpsk(rng: np.random.Generator, shape) -> np.ndarray:
    """Unit-energy QPSK symbols."""
    bits = rng.integers(0, 2, size=(2,) + tuple(np.atleast_1d(shape)))
    return ((2 * bits[0] - 1) + 1j * (2 * bits[1] - 1)) / np.sqrt(2)


def diagnose(scenario: Scenario) -> dict[str, float | bool]:
    """Orthogonality and conditioning diagnostics without symbol transmission."""
    cfg = scenario.config
    ch = assemble_channel(cfg, scenario.distance_mode, scenario.expansion)
    pipeline = calibrate(ch)
    v = pipeline.singular_values[pipeline.recoverable]
    try:
        gap = distance_gap(cfg, scenario.expansion)
    except ConfigError:
        gap = float("nan")  # expansion undefined for unequal radii
    return {
        "circulant_residual": circulant_residual(ch),
        "top_circulant_residual": circulant_residual(ch, levels=[cfg.levels]),
        "block_residual": pipeline.block_residual,
        "symmetrization_residual": pipeline.sym_residual,
        "mode_condition": float(v.max() / v.min()) if len(v) else float("inf"),
        "channel_condition": float(np.linalg.cond(ch.H)),
        "recoverable_modes": int(pipeline.recoverable.sum()),
        "distance_gap_m": gap,
        "near_field": cfg.near_field,
    }


def write_diagnostics_csv(diag: dict, path) -> None:
    _write_rows(Path(path), ["metric", "value"], [(k, v) for k, v in diag.items()])


def write_layouts(scenario: Scenario, out: Path) -> dict:
    out.mkdir(parents=True, exist_ok=True)
    summary = {}
    for side in ("tx", "rx"):
        layout = build_layout(scenario.config, side, scenario.merge_tol)
        write_layout_csv(layout, out / f"layout_{side}.csv")
        summary[side] = layout_summary(layout)
    return summary


SE_HEADER = ["config_id", "N", "D_m", "snr_db", "total_se_bits", "active_modes", "snr_reference"]


def run_scenario(scenario: Scenario, out_dir: Path | None = None) -> dict[str, Path]:
    """Full chain for one array; returns the written artifacts by name."""
    out = Path(out_dir or scenario.out_dir)
    cfg = scenario.config
    write_layouts(scenario, out)
    ch = assemble_channel(cfg, scenario.distance_mode, scenario.expansion)
    write_channel_csv(ch, out / "channel.csv")
    write_diagnostics_csv(diagnose(scenario), out / "channel_summary.csv")

    pipeline = calibrate(ch)
    rng = np.random.default_rng(scenario.seed)
    sigma2 = noise_for_snr(cfg, scenario.snr_db, scenario.snr_reference)
    # symbols carry the per-mode power of the uniform allocation
    p = cfg.total_power / pipeline.size
    S = np.sqrt(p) * qpsk(rng, (pipeline.size, scenario.trials))
    report = recursive_demodulate(pipeline, S, noise_variance=sigma2, rng=rng)
    write_report_csv(report, out / "demod_report.csv")

    leak = leakage_matrix(pipeline)
    digits = [tuple(int(x) for x in d) for d in index_digits(cfg.counts_tx)]
    n = cfg.levels
    _write_rows(
        out / "leakage.csv",
        [f"in_l{n - i}" for i in range(n)] + [f"out_l{n - i}" for i in range(n)] + ["power_ratio"],
        ([*digits[j], *digits[i], leak[i, j]] for j in range(len(digits)) for i in range(len(digits))),
    )

    se = link_se(pipeline, sigma2, cfg.total_power, scenario.se_policy)
    _write_rows(
        out / "se_table.csv",
        SE_HEADER,
        [(scenario.config_id, n, cfg.distance, scenario.snr_db, se.total, se.active_modes, scenario.snr_reference)],
    )
    names = ["layout_tx", "layout_rx", "channel", "channel_summary", "demod_report", "leakage", "se_table"]
    return {k: out / f"{k}.csv" for k in names}


def sweep(scenario: Scenario, out_dir: Path | None = None) -> Path:
    """SE over the preset x distance x SNR grid, rows in grid order."""
    out = Path(out_dir or scenario.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    frame = scenario.config.frame
    if scenario.sweep_presets:
        configs = {name: get_preset(name).config(frame=frame) for name in scenario.sweep_presets}
        base = scenario.config
        configs = {
            k: c.with_(carrier_freq=base.carrier_freq, beta=base.beta, total_power=base.total_power)
            for k, c in configs.items()
        }
    else:
        configs = {scenario.config_id: scenario.config}
    rows = dimension_comparison(
        configs,
        snr_db=scenario.sweep_snr or (scenario.snr_db,),
        distances=scenario.sweep_distances or None,
        distance_mode=scenario.distance_mode,
        reference=scenario.snr_reference,
        policy=scenario.se_policy,
        workers=scenario.workers,
    )
    path = out / "se_sweep.csv"
    _write_rows(
        path,
        SE_HEADER,
        [(r.config_id, r.levels, r.distance, r.snr_db, r.total_se, r.active_modes, scenario.snr_reference) for r in rows],
    )
    return path
