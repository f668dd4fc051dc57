"""Run the (interleaves, alpha) grid and print an ASCII heatmap of mean SSIM.

Example:
    python scripts/run_sweep.py --out results.csv --workers 8
    python scripts/run_sweep.py --config scripts/sweep_default.json --out results.csv
    python scripts/run_sweep.py --long --out long.csv   # 256^2, 1..125 interleaves; hours
"""

import argparse
import json
import sys

import numpy as np

from spiralkit import sweep


def long_config(workers):
    return sweep.SweepConfig(interleaves_list=tuple(range(1, 126)), alpha_list=(1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0),
                             matrix_size=256, dwell_s=4e-6, n_phantoms=3, workers=workers)


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--config")
    ap.add_argument("--out", required=True)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--long", action="store_true", help="full-resolution grid")
    args = ap.parse_args()
    if args.long:
        cfg = long_config(args.workers)
    else:
        raw = json.load(open(args.config)) if args.config else {}
        cfg = sweep.SweepConfig.from_dict({**raw, "workers": args.workers})
    res = sweep.run_grid_search(cfg, lambda d, t, r: print(f"[{d}/{t}] {r}", file=sys.stderr))
    sweep.emit_heatmap_csv(res, args.out)

    ils, als = sorted(set(cfg.interleaves_list)), sorted(set(cfg.alpha_list))
    grid = res.as_array("ssim", ils, als)
    print("interleaves \\ alpha " + " ".join(f"{a:>6g}" for a in als))
    for n, row in zip(ils, grid):
        print(f"{n:>19d} " + " ".join("     x" if np.isnan(v) else f"{v:6.3f}" for v in row))
    best = np.unravel_index(np.nanargmax(grid), grid.shape)
    print(f"best: interleaves={ils[best[0]]} alpha={als[best[1]]} ssim={grid[best]:.4f}")
    for a, b in ((1.33, 0.39), (0.87, 0.54)):
        pts = []
        for n in ils:
            try:
                pts.append(f"{n}:{sweep.ridge_curve(n, a, b):.2f}")
            except sweep.DomainError:
                pass
        print(f"ridge a={a} b={b}: " + " ".join(pts))


if __name__ == "__main__":
    main()
