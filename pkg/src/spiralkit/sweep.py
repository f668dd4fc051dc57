"""Grid search over (interleaves, alpha) at a fixed total readout duration."""

from __future__ import annotations

import csv
import math
import struct
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from multiprocessing import get_context

import numpy as np

from . import metrics, nufft, recon, trajgen
from .errors import DomainError, SpiralkitError, ValidationError
from .phantom import PhantomSpec

CSV_HEADER = ("interleaves", "alpha", "ssim", "nrmse", "feasible", "recon_seconds")
DEFAULT_INTERLEAVES = (1, 4, 8, 16, 23, 32, 64)
DEFAULT_ALPHAS = (1.0, 1.23, 1.5, 2.0, 3.0, 4.0)

# keys accepted in the JSON config, with the expected Python types
CONFIG_SCHEMA = {
    "interleaves_list": list, "alpha_list": list, "readout_s": float, "matrix_size": int,
    "fov_cm": float, "dwell_s": float, "gmax_mT_per_m": float, "smax_T_per_m_per_s": float,
    "phantom": dict, "n_phantoms": int, "recon": dict, "seed": int, "workers": int, "timing": bool,
}


@dataclass(frozen=True)
class SweepConfig:
    interleaves_list: tuple = DEFAULT_INTERLEAVES
    alpha_list: tuple = DEFAULT_ALPHAS
    readout_s: float = recon.DESK_READOUT_S
    matrix_size: int = recon.DESK_MATRIX
    fov_cm: float = recon.DESK_FOV_CM
    dwell_s: float = recon.DESK_DWELL_S
    gmax_mT_per_m: float = 40.0
    smax_T_per_m_per_s: float = 150.0
    phantom: PhantomSpec = field(default_factory=lambda: PhantomSpec(kind="random_ellipses"))
    n_phantoms: int = 3
    recon: recon.ReconSettings = field(default_factory=recon.ReconSettings)
    seed: int = 0
    workers: int = 1
    timing: bool = False  # wall-clock column breaks byte determinism, so off by default

    def __post_init__(self):
        object.__setattr__(self, "interleaves_list", tuple(int(n) for n in self.interleaves_list))
        object.__setattr__(self, "alpha_list", tuple(float(a) for a in self.alpha_list))
        if not self.interleaves_list or not self.alpha_list:
            raise ValidationError("interleaves_list and alpha_list must be nonempty")
        if any(n < 1 for n in self.interleaves_list) or any(not a >= 1 for a in self.alpha_list):
            raise ValidationError("need interleaves >= 1 and alpha >= 1")
        if not self.readout_s > 0:
            raise ValidationError("readout_s must be > 0")
        if self.n_phantoms < 1 or self.workers < 1:
            raise ValidationError("n_phantoms and workers must be >= 1")
        if self.phantom.size != self.matrix_size:
            object.__setattr__(self, "phantom", replace(self.phantom, size=self.matrix_size))

    def cells(self):
        return sorted({(n, a) for n in self.interleaves_list for a in self.alpha_list})

    def spiral_spec(self, interleaves, alpha) -> trajgen.SpiralSpec:
        return trajgen.SpiralSpec(
            matrix_size=self.matrix_size, fov_cm=self.fov_cm, interleaves=interleaves, alpha=alpha,
            total_readout_s=self.readout_s, dwell_s=self.dwell_s,
            gmax_mT_per_m=self.gmax_mT_per_m, smax_T_per_m_per_s=self.smax_T_per_m_per_s)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["interleaves_list"] = list(self.interleaves_list)
        d["alpha_list"] = list(self.alpha_list)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SweepConfig":
        if not isinstance(d, dict):
            raise ValidationError("sweep config must be a JSON object")
        unknown = set(d) - set(CONFIG_SCHEMA)
        if unknown:
            raise ValidationError(f"unknown sweep config keys {sorted(unknown)}")
        kw = {}
        for key, val in d.items():
            want = CONFIG_SCHEMA[key]
            ok = isinstance(val, (int, float)) and not isinstance(val, bool) if want is float else (
                isinstance(val, want) and not (want is int and isinstance(val, bool)))
            if not ok:
                raise ValidationError(f"{key} must be of type {want.__name__}")
            kw[key] = val
        if "phantom" in kw:
            try:
                kw["phantom"] = PhantomSpec(**kw["phantom"])
            except TypeError as exc:
                raise ValidationError(str(exc)) from None
        if "recon" in kw:
            kw["recon"] = recon.ReconSettings.from_dict(kw["recon"])
        return cls(**kw)


@dataclass(frozen=True)
class SweepRow:
    interleaves: int
    alpha: float
    ssim: float
    nrmse: float
    feasible: bool
    recon_seconds: float

    def key(self):
        return (self.interleaves, self.alpha)


@dataclass(frozen=True)
class SweepResult:
    rows: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(sorted(self.rows, key=SweepRow.key)))

    def as_array(self, column: str, interleaves_list=None, alpha_list=None) -> np.ndarray:
        """Heatmap ``[len(interleaves), len(alpha)]`` of one column; missing cells are nan."""
        ils = sorted({r.interleaves for r in self.rows}) if interleaves_list is None else interleaves_list
        als = sorted({r.alpha for r in self.rows}) if alpha_list is None else alpha_list
        lookup = {r.key(): float(getattr(r, column)) for r in self.rows}
        return np.array([[lookup.get((n, a), np.nan) for a in als] for n in ils])


def cell_seed(global_seed: int, interleaves: int, alpha: float) -> int:
    """Seed that depends only on the cell, never on scheduling."""
    hi, lo = struct.unpack("<II", struct.pack("<d", float(alpha)))
    return int(np.random.SeedSequence([int(global_seed), int(interleaves), hi, lo]).generate_state(1)[0])


def run_cell(config: SweepConfig, interleaves: int, alpha: float) -> SweepRow:
    seed = cell_seed(config.seed, interleaves, alpha)
    nan = float("nan")
    try:
        traj = trajgen.design_spiral(config.spiral_spec(interleaves, alpha))
        if not trajgen.check_hardware_limits(traj).feasible:
            return SweepRow(interleaves, alpha, nan, nan, False, nan)
        plan = nufft.plan_create(traj, config.matrix_size)
        settings = replace(config.recon, seed=seed)
        ph = config.phantom
        cases = recon.desk_corpus(config.n_phantoms, config.matrix_size, ph.coils, ph.kind,
                                  ph.coil_profile, first_seed=ph.seed)
        ssims, errs = [], []
        t0 = time.perf_counter()
        for i, case in enumerate(cases):
            meas = recon.simulate_case(case, plan, ph.noise_sigma, noise_seed=(seed, i))
            est = recon.reconstruct(plan, meas, settings)
            s = metrics.score(case.truth, est)
            ssims.append(s["ssim"])
            errs.append(s["nrmse"])
        elapsed = time.perf_counter() - t0 if config.timing else nan
    except SpiralkitError as exc:
        print(f"cell ({interleaves}, {alpha}) failed: {exc}", file=sys.stderr)
        return SweepRow(interleaves, alpha, nan, nan, False, nan)
    return SweepRow(interleaves, alpha, float(np.mean(ssims)), float(np.mean(errs)), True, elapsed)


def _run_cell_args(args):
    return run_cell(*args)


def run_grid_search(config: SweepConfig, progress=None) -> SweepResult:
    """Evaluate every grid cell; infeasible or failing cells are kept with feasible=False."""
    cells = config.cells()
    jobs = [(config, n, a) for n, a in cells]
    rows = []
    if config.workers == 1 or len(cells) == 1:
        for job in jobs:
            rows.append(run_cell(*job))
            if progress:
                progress(len(rows), len(cells), rows[-1])
    else:
        with ProcessPoolExecutor(max_workers=min(config.workers, len(cells)),
                                 mp_context=get_context("spawn")) as pool:
            for row in pool.map(_run_cell_args, jobs):
                rows.append(row)
                if progress:
                    progress(len(rows), len(cells), row)
    return SweepResult(tuple(rows))


def _fmt(v: float) -> str:
    return "nan" if math.isnan(v) else repr(float(v))


def emit_heatmap_csv(result: SweepResult, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in result.rows:
            w.writerow([r.interleaves, repr(float(r.alpha)), _fmt(r.ssim), _fmt(r.nrmse),
                        "true" if r.feasible else "false", _fmt(r.recon_seconds)])


def read_heatmap_csv(path) -> SweepResult:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != CSV_HEADER:
        raise ValidationError("unexpected sweep CSV header")
    out = []
    for r in rows[1:]:
        if len(r) != len(CSV_HEADER) or r[4] not in ("true", "false"):
            raise ValidationError(f"malformed sweep row {r!r}")
        out.append(SweepRow(int(r[0]), float(r[1]), float(r[2]), float(r[3]), r[4] == "true", float(r[5])))
    return SweepResult(tuple(out))


def ridge_curve(interleaves, a, b) -> float:
    """Ridge parameterization ``alpha = a * ln(b * interleaves)`` for overlays."""
    arg = b * interleaves
    if not arg > 0:
        raise DomainError(f"log argument b*interleaves = {arg} must be > 0")
    alpha = a * math.log(arg)
    if alpha < 1.0 - 1e-12:
        raise DomainError(f"ridge alpha {alpha} < 1")
    return max(alpha, 1.0)
