"""Guidance ablation on the fixed desk corpus: CG vs sampler with and without guidance.

Example:
    python scripts/ablation.py --denoiser support --tau 0.1 --phantoms 10
    python scripts/ablation.py --denoiser gaussian --tau 0.1 --inject-noise
"""

import argparse
import json
import time
from dataclasses import replace

import numpy as np

from spiralkit import metrics, nufft, recon, trajgen


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--interleaves", type=int, default=23)
    ap.add_argument("--alpha", type=float, default=1.23)
    ap.add_argument("--phantoms", type=int, default=recon.CORPUS_SIZE)
    ap.add_argument("--denoiser", choices=recon.DENOISERS, default="support")
    ap.add_argument("--tau", type=float, default=0.1)
    ap.add_argument("--betas", type=float, nargs="+", default=[0.0, 1.0])
    ap.add_argument("--inject-noise", action="store_true")
    ap.add_argument("--steps", type=int, default=50)
    ap.add_argument("--out", help="optional JSON summary")
    args = ap.parse_args()

    plan = nufft.plan_create(trajgen.design_spiral(recon.desk_spec(args.interleaves, args.alpha)), recon.DESK_MATRIX)
    base = recon.ReconSettings(method="diffusion", denoiser=args.denoiser, tau=args.tau,
                               schedule=replace(recon.ReconSettings().schedule, steps=args.steps))
    base = recon.with_method(base, "diffusion", inject_noise=args.inject_noise)
    rows = {"cg": []}
    rows.update({f"beta={b:g}": [] for b in args.betas})
    t0 = time.perf_counter()
    for case in recon.desk_corpus(args.phantoms):
        y = recon.simulate_case(case, plan)
        rows["cg"].append(metrics.score(case.truth, nufft.cg_inverse(plan, y))["ssim"])
        for b in args.betas:
            est = recon.reconstruct(plan, y, recon.with_method(base, "diffusion", beta=b))
            rows[f"beta={b:g}"].append(metrics.score(case.truth, est)["ssim"])
        print(f"phantom {case.spec.seed}: " + ", ".join(f"{k} {v[-1]:.4f}" for k, v in rows.items()), flush=True)
    summary = {k: {"mean_ssim": float(np.mean(v)), "min_ssim": float(np.min(v))} for k, v in rows.items()}
    print(json.dumps(summary, indent=2))
    print(f"{time.perf_counter() - t0:.1f}s")
    if args.out:
        with open(args.out, "w") as fh:
            json.dump({"settings": base.to_dict(), "summary": summary}, fh, indent=2)


if __name__ == "__main__":
    main()
