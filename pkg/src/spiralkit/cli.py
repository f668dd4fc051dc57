"""Command-line entry point: design, simulate, recon, eval, sweep."""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import asdict
from pathlib import Path

from . import __version__, diffusion, io, metrics, nufft, phantom, recon, sweep, trajgen
from .errors import NumericalBreakdown, SpiralkitError, ValidationError

EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_NUMERICAL = 0, 2, 3, 4


def _repro(command, seed, config):
    line = json.dumps({"spiralkit": __version__, "command": command, "seed": seed, "config": config},
                      sort_keys=True, default=str)
    print(line, file=sys.stderr)


def _plan_from_csv(path, matrix, fov_cm):
    traj = io.read_trajectory_csv(path)
    coords = nufft.normalize_coords(traj.flat_k(), fov_cm, matrix)
    return nufft.plan_create(coords, matrix)


def cmd_design(args):
    spec = trajgen.SpiralSpec(matrix_size=args.matrix, fov_cm=args.fov_cm, interleaves=args.interleaves,
                              alpha=args.alpha, total_readout_s=args.readout_s, dwell_s=args.dwell_s,
                              gmax_mT_per_m=args.gmax, smax_T_per_m_per_s=args.smax)
    _repro("design", None, asdict(spec))
    traj = trajgen.design_spiral(spec)
    io.write_trajectory_csv(traj, args.out or sys.stdout)
    rep = trajgen.check_hardware_limits(traj)
    print(f"turns={traj.turns:.4g} samples/interleaf={traj.samples_per_interleaf} "
          f"max|g|={rep.max_amp:.4g} mT/m max slew={rep.max_slew:.4g} T/m/s", file=sys.stderr)


def cmd_simulate(args):
    spec = phantom.PhantomSpec(size=args.matrix, kind=args.phantom, seed=args.seed, coils=args.coils,
                               coil_profile=args.coil_profile, noise_sigma=args.noise_sigma)
    _repro("simulate", args.seed, {**asdict(spec), "traj": args.traj, "fov_cm": args.fov_cm})
    plan = _plan_from_csv(args.traj, args.matrix, args.fov_cm)
    img, sens, truth = phantom.make_case(spec)
    meas = phantom.simulate_measurements(img, sens, plan, args.noise_sigma, seed=args.seed)
    io.write_cplx(args.out, meas)
    if args.truth_out:
        io.write_cplx(args.truth_out, truth)


def _recon_settings(args) -> recon.ReconSettings:
    return recon.ReconSettings(
        method=args.method, cg_iters=args.cg_iters, cg_tol=args.cg_tol, l2_reg=args.l2_reg,
        denoiser=args.denoiser, tau=args.tau, threshold_scale=args.threshold_scale,
        schedule=diffusion.NoiseSchedule(args.sigma_max, args.sigma_min, args.steps),
        guidance=diffusion.GuidanceConfig(beta=args.beta, c1=args.c1, c2=args.c2,
                                          cg_iters=args.guidance_cg_iters, cg_tol=args.guidance_cg_tol,
                                          inject_noise=args.inject_noise),
        seed=args.seed)


def cmd_recon(args):
    settings = _recon_settings(args)
    _repro("recon", args.seed, {**settings.to_dict(), "traj": args.traj, "meas": args.meas,
                                "matrix": args.matrix, "fov_cm": args.fov_cm})
    plan = _plan_from_csv(args.traj, args.matrix, args.fov_cm)
    meas = io.read_cplx(args.meas)
    log = [] if args.log else None
    img = recon.reconstruct(plan, meas, settings, log=log)
    io.write_cplx(args.out, img)
    preview = args.preview or str(Path(args.out).with_suffix(".pgm"))
    io.write_pgm(preview, phantom.rss_combine(img))
    if args.log:
        with open(args.log, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["step", "sigma", "sigma_next", "gamma", "residual"])
            for row in log:
                w.writerow([row["step"]] + [repr(float(row[k])) for k in ("sigma", "sigma_next", "gamma", "residual")])


def cmd_eval(args):
    _repro("eval", None, {"ref": args.ref, "test": args.test})
    ref = io.read_cplx(args.ref)
    test = io.read_cplx(args.test)
    if ref.ndim == 2:
        ref, test = ref[None], test[None]
    print(json.dumps(metrics.score(ref, test)))


def _default_workers():
    env = os.environ.get("SPIRALKIT_WORKERS")
    if env is None:
        return None
    try:
        return max(1, int(env))
    except ValueError:
        raise SpiralkitError(f"SPIRALKIT_WORKERS must be an integer, got {env!r}") from None


def cmd_sweep(args):
    raw = {}
    if args.config:
        with open(args.config) as fh:
            try:
                raw = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"sweep config is not JSON: {exc}") from None
    workers = args.workers if args.workers is not None else _default_workers()
    if workers is not None:
        raw = {**raw, "workers": workers}
    config = sweep.SweepConfig.from_dict(raw)
    _repro("sweep", config.seed, config.to_dict())

    def progress(done, total, row):
        print(f"[{done}/{total}] interleaves={row.interleaves} alpha={row.alpha} "
              f"ssim={row.ssim:.4f} feasible={row.feasible}", file=sys.stderr)

    result = sweep.run_grid_search(config, progress)
    sweep.emit_heatmap_csv(result, args.out)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="spiralkit", description=__doc__)
    p.add_argument("--version", action="version", version=f"spiralkit {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("design", help="design a spiral and write the trajectory CSV")
    d.add_argument("--matrix", type=int, required=True)
    d.add_argument("--fov-cm", type=float, required=True)
    d.add_argument("--interleaves", type=int, required=True)
    d.add_argument("--alpha", type=float, required=True)
    d.add_argument("--readout-s", type=float, required=True, help="total readout over all interleaves")
    d.add_argument("--dwell-s", type=float, default=4e-6)
    d.add_argument("--gmax", type=float, default=40.0, help="mT/m")
    d.add_argument("--smax", type=float, default=150.0, help="T/m/s")
    d.add_argument("--out", help="CSV path (default stdout)")
    d.set_defaults(func=cmd_design)

    s = sub.add_parser("simulate", help="simulate multicoil measurements on a trajectory")
    s.add_argument("--traj", required=True)
    s.add_argument("--matrix", type=int, required=True)
    s.add_argument("--fov-cm", type=float, required=True)
    s.add_argument("--phantom", choices=("shepp_logan", "random_ellipses"), default="shepp_logan")
    s.add_argument("--coils", type=int, default=8)
    s.add_argument("--coil-profile", choices=("gaussian", "birdcage_like"), default="gaussian")
    s.add_argument("--noise-sigma", type=float, default=None, help="default: 0.5%% of peak |y|")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True, help="measurements (.cplx)")
    s.add_argument("--truth-out", help="ground-truth coil images (.cplx)")
    s.set_defaults(func=cmd_simulate)

    r = sub.add_parser("recon", help="reconstruct coil images from measurements")
    r.add_argument("--traj", required=True)
    r.add_argument("--meas", required=True)
    r.add_argument("--matrix", type=int, required=True)
    r.add_argument("--fov-cm", type=float, required=True)
    r.add_argument("--method", choices=recon.METHODS, default="cg")
    r.add_argument("--denoiser", choices=recon.DENOISERS, default="support")
    r.add_argument("--tau", type=float, default=0.1)
    r.add_argument("--threshold-scale", type=float, default=1.0)
    r.add_argument("--cg-iters", type=int, default=50)
    r.add_argument("--cg-tol", type=float, default=1e-6)
    r.add_argument("--l2-reg", type=float, default=0.0)
    r.add_argument("--beta", type=float, default=1.0)
    r.add_argument("--c1", type=float, default=1.0)
    r.add_argument("--c2", type=float, default=4.0)
    r.add_argument("--guidance-cg-iters", type=int, default=10)
    r.add_argument("--guidance-cg-tol", type=float, default=1e-4)
    r.add_argument("--inject-noise", action="store_true")
    r.add_argument("--sigma-max", type=float, default=10.0)
    r.add_argument("--sigma-min", type=float, default=0.01)
    r.add_argument("--steps", type=int, default=50)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--out", required=True, help="coil images (.cplx)")
    r.add_argument("--preview", help="RSS preview (.pgm); default next to --out")
    r.add_argument("--log", help="per-step sampler log (.csv)")
    r.set_defaults(func=cmd_recon)

    e = sub.add_parser("eval", help="score a reconstruction against a reference")
    e.add_argument("--ref", required=True)
    e.add_argument("--test", required=True)
    e.set_defaults(func=cmd_eval)

    w = sub.add_parser("sweep", help="grid search over interleaves and alpha")
    w.add_argument("--config", help="JSON config (see README); default grid if omitted")
    w.add_argument("--out", required=True)
    w.add_argument("--workers", type=int, default=None, help="default: $SPIRALKIT_WORKERS or config")
    w.set_defaults(func=cmd_sweep)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except NumericalBreakdown as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (SpiralkitError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
