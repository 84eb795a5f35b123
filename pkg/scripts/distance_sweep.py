"""SE versus link distance for the shipped presets at a fixed SNR.

    python3 scripts/distance_sweep.py --out results/distance.csv
"""
import argparse
import csv
from pathlib import Path

import numpy as np

from qfuca.metrics import dimension_comparison
from qfuca.presets import PRESETS


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--snr", type=float, default=15.0)
    ap.add_argument("--distances", type=float, nargs="+", default=list(np.geomspace(10, 1000, 13)))
    ap.add_argument("--distance-mode", choices=("exact", "approx"), default="exact")
    ap.add_argument("--policy", choices=("processed", "fixed"), default="processed")
    ap.add_argument("--reference", choices=("boresight", "transmit"), default="boresight")
    ap.add_argument("--out", type=Path, default=Path("results/distance.csv"))
    args = ap.parse_args()

    configs = {name: p.config() for name, p in PRESETS.items()}
    rows = dimension_comparison(
        configs, [args.snr], args.distances, args.distance_mode, reference=args.reference, policy=args.policy
    )

    args.out.parent.mkdir(parents=True, exist_ok=True)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["config_id", "N", "D_m", "snr_db", "total_se_bits", "active_modes"])
        for r in rows:
            w.writerow([r.config_id, r.levels, f"{r.distance:.6g}", r.snr_db, f"{r.total_se:.6f}", r.active_modes])

    print(f"{'D_m':>9}" + "".join(f"{k:>10}" for k in configs))
    for d in args.distances:
        line = [r.total_se for r in rows if r.distance == d]
        print(f"{d:9.1f}" + "".join(f"{x:10.2f}" for x in line))
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
