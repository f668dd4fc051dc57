"""Reconstruction settings shared by the sweep, the CLI and the experiment scripts."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import diffusion, nufft, phantom, trajgen
from .errors import ValidationError

# Desk-scale acquisition: 64x64 over 22 cm, 20 ms total readout. The dwell is
# stretched from 4 us so that 64^2 is undersampled roughly as hard as 256^2 is
# at 4 us (about 15% vs 8% of the Nyquist sample count).
DESK_MATRIX = 64
DESK_FOV_CM = 22.0
DESK_READOUT_S = 0.02
DESK_DWELL_S = 32e-6
CORPUS_SIZE = 10
_NOISE_SEED_OFFSET = 10_000

METHODS = ("cg", "diffusion")
DENOISERS = ("gaussian", "shrinkage", "support")


@dataclass(frozen=True)
class ReconSettings:
    method: str = "cg"
    cg_iters: int = 50
    cg_tol: float = 1e-6
    l2_reg: float = 0.0
    denoiser: str = "support"
    tau: float = 0.1
    threshold_scale: float = 1.0
    schedule: diffusion.NoiseSchedule = field(default_factory=diffusion.NoiseSchedule)
    guidance: diffusion.GuidanceConfig = field(
        default_factory=lambda: diffusion.GuidanceConfig(inject_noise=False))
    seed: int = 0

    def __post_init__(self):
        if self.method == "cg_only":
            object.__setattr__(self, "method", "cg")
        if self.method not in METHODS:
            raise ValidationError(f"unknown method {self.method!r}")
        if self.denoiser not in DENOISERS:
            raise ValidationError(f"unknown denoiser {self.denoiser!r}")
        if self.cg_iters < 1 or not self.cg_tol > 0 or self.l2_reg < 0:
            raise ValidationError("need cg_iters >= 1, cg_tol > 0, l2_reg >= 0")
        if not self.tau > 0:
            raise ValidationError("tau must be > 0")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ReconSettings":
        d = dict(d)
        unknown = set(d) - {f for f in cls.__dataclass_fields__}
        if unknown:
            raise ValidationError(f"unknown recon keys {sorted(unknown)}")
        if "schedule" in d:
            d["schedule"] = diffusion.NoiseSchedule(**d["schedule"])
        if "guidance" in d:
            d["guidance"] = diffusion.GuidanceConfig(**d["guidance"])
        try:
            return cls(**d)
        except TypeError as exc:
            raise ValidationError(str(exc)) from None


def make_denoiser(settings: ReconSettings):
    if settings.denoiser == "gaussian":
        return diffusion.GaussianPriorDenoiser(settings.tau)
    if settings.denoiser == "shrinkage":
        return diffusion.ShrinkageDenoiser(settings.threshold_scale)
    return diffusion.SupportPriorDenoiser(settings.tau, phantom.SUPPORT_RADIUS)


def reconstruct(plan: nufft.NufftPlan, meas, settings: ReconSettings = ReconSettings(), log=None):
    """Coil images ``(coils, n, n)`` from measurements with the chosen method."""
    p0 = nufft.cg_inverse(plan, meas, settings.cg_iters, settings.cg_tol, settings.l2_reg)
    if settings.method == "cg":
        return p0
    return diffusion.sample_reconstruct(plan, meas, make_denoiser(settings), settings.schedule,
                                        settings.guidance, seed=settings.seed, log=log, prior=p0)


def desk_spec(interleaves: int, alpha: float, **overrides) -> trajgen.SpiralSpec:
    base = dict(matrix_size=DESK_MATRIX, fov_cm=DESK_FOV_CM, interleaves=interleaves, alpha=alpha,
                total_readout_s=DESK_READOUT_S, dwell_s=DESK_DWELL_S)
    base.update(overrides)
    return trajgen.SpiralSpec(**base)


def plan_for(traj: trajgen.Trajectory) -> nufft.NufftPlan:
    return nufft.plan_create(traj, traj.spec.matrix_size)


@dataclass(frozen=True)
class Case:
    spec: phantom.PhantomSpec
    image: np.ndarray
    sens: np.ndarray
    truth: np.ndarray  # coil images


def desk_corpus(n: int = CORPUS_SIZE, size: int = DESK_MATRIX, coils: int = 8,
                kind: str = "random_ellipses", coil_profile: str = "gaussian", first_seed: int = 0):
    """The fixed evaluation phantoms, seeds ``first_seed .. first_seed+n-1``."""
    out = []
    for seed in range(first_seed, first_seed + n):
        spec = phantom.PhantomSpec(size=size, kind=kind, seed=seed, coils=coils, coil_profile=coil_profile)
        img, sens, truth = phantom.make_case(spec)
        out.append(Case(spec, img, sens, truth))
    return out


def simulate_case(case: Case, plan, noise_sigma=None, noise_seed=None):
    """Noisy measurements of ``case``; the noise seed defaults to one tied to the phantom seed."""
    if noise_seed is None:
        noise_seed = _NOISE_SEED_OFFSET + case.spec.seed
    return phantom.simulate_measurements(case.image, case.sens, plan, noise_sigma, seed=noise_seed)


def with_method(settings: ReconSettings, method: str, **guidance) -> ReconSettings:
    """Copy of ``settings`` with another method and guidance overrides."""
    return replace(settings, method=method, guidance=replace(settings.guidance, **guidance))
