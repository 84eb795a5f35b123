"""SE versus SNR for the four shipped presets at a fixed distance.

    python3 scripts/dimension_comparison.py --out results/dimension.csv
"""
import argparse
import csv
from pathlib import Path

import numpy as np

from qfuca.metrics import dimension_comparison
from qfuca.presets import PRESETS


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--distance", type=float, default=100.0)
    ap.add_argument("--snr", type=float, nargs=3, default=(0.0, 30.0, 5.0), metavar=("START", "STOP", "STEP"))
    ap.add_argument("--policy", choices=("processed", "fixed"), default="processed")
    ap.add_argument("--reference", choices=("boresight", "transmit"), default="boresight")
    ap.add_argument("--out", type=Path, default=Path("results/dimension.csv"))
    args = ap.parse_args()

    start, stop, step = args.snr
    snrs = np.arange(start, stop + step / 2, step)
    configs = {name: p.config(distance=args.distance) for name, p in PRESETS.items()}
    rows = dimension_comparison(configs, snrs, reference=args.reference, policy=args.policy)

    args.out.parent.mkdir(parents=True, exist_ok=True)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["config_id", "N", "D_m", "snr_db", "total_se_bits", "active_modes"])
        for r in rows:
            w.writerow([r.config_id, r.levels, r.distance, r.snr_db, f"{r.total_se:.6f}", r.active_modes])

    print(f"{'snr_db':>7}" + "".join(f"{k:>10}" for k in configs))
    for s in snrs:
        line = [r.total_se for r in rows if r.snr_db == s]
        print(f"{s:7.1f}" + "".join(f"{x:10.2f}" for x in line))
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
