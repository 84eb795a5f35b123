"""Shipped array presets: 25 physical elements, aggregate radius 4 m, 5.8 GHz.

The published layouts are not available, so these are reconstructions chosen
so that every preset deduplicates to exactly 25 physical elements with the
same aggregate radius.  Higher-dimensional presets share physical elements
between logical indices.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import ArrayConfig, build_layout

AGGREGATE_RADIUS = 4.0
PHYSICAL_ELEMENTS = 25

_S5 = np.sin(np.pi / 5)


@dataclass(frozen=True)
class Preset:
    name: str
    counts: tuple[int, ...]
    radii: tuple[float, ...]
    description: str

    def config(self, **overrides) -> ArrayConfig:
        return ArrayConfig(counts_tx=self.counts, radii_tx=self.radii, aggregate_radius=AGGREGATE_RADIUS).with_(
            **overrides
        )


PRESETS: dict[str, Preset] = {
    p.name: p
    for p in (
        Preset("1d-25", (25,), (4.0,), "single 25-element ring of radius 4 m"),
        Preset(
            "2d-5x5",
            (5, 5),
            (float(4 * _S5 / (1 + _S5)), float(4 / (1 + _S5))),
            "5 rings of 5 on a ring of 5; R1 = R2 sin(pi/5) makes neighbouring sub-rings tangent",
        ),
        Preset(
            "3d-25",
            (4, 4, 4),
            (1.0, 1.0, 2.0),
            "4x4x4 with radii 1/1/2 m; 64 logical elements land on a 25-point square lattice",
        ),
        Preset(
            "4d-25",
            (4, 4, 4, 4),
            (1.0, 1.0, 1.0, 1.0),
            "4x4x4x4 with unit radii; 256 logical elements land on the same 25-point lattice",
        ),
    )
}


def get_preset(name: str) -> Preset:
    try:
        return PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


def list_presets() -> list[dict]:
    """One record per preset, including the deduplicated physical element count."""
    out = []
    for p in PRESETS.values():
        layout = build_layout(p.config())
        out.append(
            {
                "name": p.name,
                "counts": p.counts,
                "radii_m": tuple(round(float(r), 6) for r in p.radii),
                "aggregate_radius_m": float(sum(p.radii)),
                "logical": layout.n_logical,
                "physical": layout.n_physical,
                "description": p.description,
            }
        )
    return out
