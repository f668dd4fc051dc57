"""Reverse-diffusion reconstruction with annealed frequency-space guidance.

The sampler starts from complex white noise at ``sigma_max`` and walks a
linear noise schedule down to zero. Every step takes an Euler step of the
probability-flow ODE using a denoiser conditioned on the conjugate-gradient
reconstruction ``p0``, then nudges the result toward the measurements: the
k-space residual is reweighted by ``1 / (c1 * exp(-c2 * r**2))``, inverted with
a short CG solve, optionally perturbed with noise at the current level, and
added with weight ``gamma = beta * (1 - progress)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol

import numpy as np

from . import nufft
from .errors import OutOfRange, ValidationError


@dataclass(frozen=True)
class NoiseSchedule:
    sigma_max: float = 10.0
    sigma_min: float = 0.01
    steps: int = 50

    def __post_init__(self):
        if not self.sigma_max > self.sigma_min > 0:
            raise ValidationError("need sigma_max > sigma_min > 0")
        if self.steps < 1:
            raise ValidationError("steps must be >= 1")

    def sigma(self, s: int) -> float:
        return schedule_sigma(self, s)


@dataclass(frozen=True)
class GuidanceConfig:
    beta: float = 1.0
    c1: float = 1.0
    c2: float = 4.0
    cg_iters: int = 10
    cg_tol: float = 1e-4
    inject_noise: bool = True
    # settings of the conditioning reconstruction p0
    prior_iters: int = 50
    prior_tol: float = 1e-6

    def __post_init__(self):
        if self.beta < 0:
            raise ValidationError("beta must be >= 0")
        if not self.c1 > 0:
            raise ValidationError("c1 must be > 0")
        if self.c2 < 0:
            raise ValidationError("c2 must be >= 0")
        if self.cg_iters < 1 or not self.cg_tol > 0:
            raise ValidationError("cg_iters must be >= 1 and cg_tol > 0")


class Denoiser(Protocol):
    def __call__(self, x_t: np.ndarray, sigma: float, prior: np.ndarray) -> np.ndarray: ...


def schedule_sigma(schedule: NoiseSchedule, s: int) -> float:
    """Noise level at step ``s``, linear from sigma_max (s=0) to sigma_min."""
    if not 0 <= s < schedule.steps:
        raise OutOfRange(f"step {s} outside [0, {schedule.steps})")
    if schedule.steps == 1:
        return float(schedule.sigma_max)
    frac = s / (schedule.steps - 1)
    return float(schedule.sigma_max + frac * (schedule.sigma_min - schedule.sigma_max))


def gamma(config: GuidanceConfig, s_norm: float) -> float:
    """Guidance weight after a fraction ``s_norm`` of the sampling is done."""
    if not 0.0 <= s_norm <= 1.0:
        raise OutOfRange(f"progress {s_norm} outside [0, 1]")
    return config.beta * (1.0 - s_norm)


def gaussian_prior_denoise(x_t, sigma, prior, tau):
    """Posterior mean of x given ``x_t = x + sigma*eps`` and ``x ~ N(prior, tau^2)``."""
    if not tau > 0:
        raise ValidationError("tau must be > 0")
    if np.isinf(tau):
        return np.array(x_t, copy=True)
    t2, s2 = tau * tau, sigma * sigma
    return (t2 * x_t + s2 * prior) / (t2 + s2)


def gaussian_score(x, sigma, prior, tau):
    """Gradient of log N(x; prior, tau^2 + sigma^2), per real and imaginary part."""
    return -(x - prior) / (tau * tau + sigma * sigma)


def gaussian_log_density(x, sigma, prior, tau):
    var = tau * tau + sigma * sigma
    d = np.asarray(x - prior)
    return float(-np.sum(np.abs(d) ** 2) / (2 * var) - d.size * np.log(2 * np.pi * var))


def shrinkage_denoise(x_t, sigma, prior, threshold_scale):
    """Soft-threshold the magnitude of ``x_t - prior`` at ``threshold_scale*sigma``."""
    if threshold_scale < 0:
        raise ValidationError("threshold_scale must be >= 0")
    thr = threshold_scale * sigma
    if thr == 0:
        return np.array(x_t, copy=True)
    resid = x_t - prior
    mag = np.abs(resid)
    with np.errstate(invalid="ignore", divide="ignore"):
        gain = np.where(mag > thr, (mag - thr) / mag, 0.0)
    return prior + gain * resid


@dataclass(frozen=True)
class GaussianPriorDenoiser:
    tau: float = 1.0

    def __call__(self, x_t, sigma, prior):
        return gaussian_prior_denoise(x_t, sigma, prior, self.tau)


def support_prior_denoise(x_t, sigma, prior, tau, mask):
    """Gaussian posterior mean inside ``mask``; zero outside it.

    The prior is N(prior, tau^2) on the support and a point mass at zero
    elsewhere, i.e. the object is known to lie inside the mask.
    """
    mask = np.asarray(mask, dtype=bool)
    return mask * gaussian_prior_denoise(x_t, sigma, mask * prior, tau)


@dataclass(frozen=True)
class SupportPriorDenoiser:
    """Gaussian prior restricted to a centered disc of ``radius`` (fraction of half-FOV)."""

    tau: float = 0.05
    radius: float = 0.95

    def __post_init__(self):
        if not 0 < self.radius <= np.sqrt(2):
            raise ValidationError("radius must be in (0, sqrt(2)]")

    def mask(self, n):
        c = (np.arange(n) - n / 2 + 0.5) / (n / 2)
        return c[:, None] ** 2 + c[None, :] ** 2 <= self.radius**2

    def __call__(self, x_t, sigma, prior):
        return support_prior_denoise(x_t, sigma, prior, self.tau, self.mask(x_t.shape[-1]))


@dataclass(frozen=True)
class ShrinkageDenoiser:
    threshold_scale: float = 1.0

    def __call__(self, x_t, sigma, prior):
        return shrinkage_denoise(x_t, sigma, prior, self.threshold_scale)


def euler_step(x, sigma_cur, sigma_next, denoised):
    """Probability-flow Euler step from ``sigma_cur`` to ``sigma_next``."""
    return x + (sigma_next - sigma_cur) * (x - denoised) / sigma_cur


def _complex_normal(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def guidance_step(plan, x_tilde, y0, sigma, gamma_t, config: GuidanceConfig, rng=None):
    """Move ``x_tilde`` toward measurement consistency with weight ``gamma_t``."""
    if gamma_t == 0:
        return x_tilde
    resid = y0 - nufft.forward(plan, x_tilde)
    weights = nufft.radial_weights(plan.radius(), config.c1, config.c2)
    resid = nufft.apply_frequency_weighting(resid, weights)
    grad = nufft.cg_inverse(plan, resid, config.cg_iters, config.cg_tol)
    if config.inject_noise and sigma > 0:
        if rng is None:
            raise ValidationError("noise injection needs an rng")
        grad = grad + sigma * _complex_normal(rng, grad.shape)
    return x_tilde + gamma_t * grad


def sample_reconstruct(plan, y0, denoiser: Denoiser, schedule: NoiseSchedule = NoiseSchedule(),
                       config: GuidanceConfig = GuidanceConfig(), seed=0, log=None, prior=None):
    """Guided reverse-diffusion reconstruction of coil images ``(coils, n, n)``.

    ``prior`` overrides the conditioning image; by default it is the CG
    reconstruction of ``y0``. When ``log`` is a list, one dict per step is
    appended with the step index, noise levels, guidance weight and the
    relative data residual after the step.
    """
    y0 = nufft._as_meas(plan, y0)
    if prior is None:
        prior = nufft.cg_inverse(plan, y0, config.prior_iters, config.prior_tol)
    rng = np.random.default_rng(seed)
    n = plan.image_size
    x = schedule.sigma_max * _complex_normal(rng, (y0.shape[0], n, n))
    ynorm = np.linalg.norm(y0)
    for s in range(schedule.steps):
        sig = schedule_sigma(schedule, s)
        sig_next = schedule_sigma(schedule, s + 1) if s + 1 < schedule.steps else 0.0
        x_tilde = euler_step(x, sig, sig_next, denoiser(x, sig, prior))
        progress = s / (schedule.steps - 1) if schedule.steps > 1 else 1.0
        g = gamma(config, progress)
        x = guidance_step(plan, x_tilde, y0, sig_next, g, config, rng)
        if log is not None:
            resid = np.linalg.norm(y0 - nufft.forward(plan, x))
            log.append({"step": s, "sigma": sig, "sigma_next": sig_next, "gamma": g,
                        "residual": float(resid / ynorm) if ynorm else float(resid)})
    return x
