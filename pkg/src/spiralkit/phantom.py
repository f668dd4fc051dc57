"""Synthetic multicoil ground truth and retrospective spiral acquisition."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import nufft
from .errors import ShapeMismatch, ValidationError

# Modified Shepp-Logan (Toft): intensity, semi-axes a, b, center x, y, angle in degrees
SHEPP_LOGAN = (
    (1.0, 0.69, 0.92, 0.0, 0.0, 0.0),
    (-0.8, 0.6624, 0.8740, 0.0, -0.0184, 0.0),
    (-0.2, 0.1100, 0.3100, 0.22, 0.0, -18.0),
    (-0.2, 0.1600, 0.4100, -0.22, 0.0, 18.0),
    (0.1, 0.2100, 0.2500, 0.0, 0.35, 0.0),
    (0.1, 0.0460, 0.0460, 0.0, 0.1, 0.0),
    (0.1, 0.0460, 0.0460, 0.0, -0.1, 0.0),
    (0.1, 0.0460, 0.0230, -0.08, -0.605, 0.0),
    (0.1, 0.0230, 0.0230, 0.0, -0.606, 0.0),
    (0.1, 0.0230, 0.0460, 0.06, -0.605, 0.0),
)

NOISE_FRACTION_OF_PEAK = 0.005
SUPPORT_RADIUS = 0.95  # fraction of the half-FOV that holds the object


@dataclass(frozen=True)
class PhantomSpec:
    size: int = 64
    kind: str = "shepp_logan"
    seed: int = 0
    coils: int = 8
    coil_profile: str = "gaussian"
    noise_sigma: Optional[float] = None  # None: 0.5% of peak noiseless |y|

    def __post_init__(self):
        if self.kind not in ("shepp_logan", "random_ellipses"):
            raise ValidationError(f"unknown phantom kind {self.kind!r}")
        if self.coil_profile not in ("gaussian", "birdcage_like"):
            raise ValidationError(f"unknown coil profile {self.coil_profile!r}")
        if self.coils < 1:
            raise ValidationError("coils must be >= 1")
        if self.noise_sigma is not None and self.noise_sigma < 0:
            raise ValidationError("noise_sigma must be >= 0")
        if self.size < 16 or self.size % 2:
            raise ValidationError("size must be an even integer >= 16")


def _unit_coords(n):
    c = (np.arange(n) - n / 2 + 0.5) / (n / 2)
    x = np.broadcast_to(c[None, :], (n, n))
    y = np.broadcast_to(-c[:, None], (n, n))
    return x, y


def _draw_ellipses(n, ellipses):
    x, y = _unit_coords(n)
    img = np.zeros((n, n))
    for rho, a, b, x0, y0, phi in ellipses:
        t = np.deg2rad(phi)
        xr = (x - x0) * np.cos(t) + (y - y0) * np.sin(t)
        yr = -(x - x0) * np.sin(t) + (y - y0) * np.cos(t)
        img[(xr / a) ** 2 + (yr / b) ** 2 <= 1.0] += rho
    return img


def _random_ellipses(rng):
    a0, b0 = rng.uniform(0.6, 0.85), rng.uniform(0.75, 0.92)
    out = [(1.0, a0, b0, 0.0, 0.0, rng.uniform(-10, 10)),
           (-rng.uniform(0.5, 0.8), a0 * 0.92, b0 * 0.94, 0.0, 0.0, 0.0)]
    for _ in range(rng.integers(6, 13)):
        r, th = 0.6 * np.sqrt(rng.uniform()), rng.uniform(0, 2 * np.pi)
        out.append((rng.choice([-1.0, 1.0]) * rng.uniform(0.05, 0.4),
                    rng.uniform(0.03, 0.3), rng.uniform(0.03, 0.3),
                    r * a0 * np.cos(th), r * b0 * np.sin(th), rng.uniform(0, 180)))
    return out


def make_phantom(spec: PhantomSpec) -> np.ndarray:
    """Real (size, size) proton-density image scaled to a maximum of 1."""
    if spec.kind == "shepp_logan":
        img = _draw_ellipses(spec.size, SHEPP_LOGAN)
    else:
        img = _draw_ellipses(spec.size, _random_ellipses(np.random.default_rng(spec.seed)))
    img = np.clip(img, 0.0, None)
    return img / img.max()


def support_mask(size):
    x, y = _unit_coords(size)
    return x**2 + y**2 <= SUPPORT_RADIUS**2


def coil_sensitivities(size, coils, profile="gaussian", seed=0) -> np.ndarray:
    """Smooth complex maps ``(coils, size, size)`` scaled to a peak RSS of 1.

    Gaussian coils sit on a circle of radius 0.3*FOV with width 0.5*FOV and a
    linear phase ramp along their direction; a single coil is centered and
    real. Birdcage-like coils follow a 1/distance magnitude with the angular
    phase of a rung placed outside the FOV.
    """
    if coils < 1:
        raise ValidationError("coils must be >= 1")
    x, y = _unit_coords(size)  # unit = half FOV
    rng = np.random.default_rng(seed)
    if profile == "gaussian":
        width = 1.0  # 0.5 FOV in half-FOV units
        if coils == 1:
            maps = np.exp(-(x**2 + y**2) / (2 * width**2))[None].astype(complex)
        else:
            angles = 2 * np.pi * np.arange(coils) / coils
            offsets = rng.uniform(0, 2 * np.pi, coils)
            maps = []
            for th, off in zip(angles, offsets):
                cx, cy = 0.6 * np.cos(th), 0.6 * np.sin(th)
                mag = np.exp(-((x - cx) ** 2 + (y - cy) ** 2) / (2 * width**2))
                phase = off + 0.5 * np.pi * (x * np.cos(th) + y * np.sin(th))
                maps.append(mag * np.exp(1j * phase))
            maps = np.stack(maps)
    elif profile == "birdcage_like":
        angles = 2 * np.pi * np.arange(coils) / coils + rng.uniform(0, 2 * np.pi / coils)
        maps = []
        for th in angles:
            dx, dy = x - 1.5 * np.cos(th), y - 1.5 * np.sin(th)
            rr = np.hypot(dx, dy)
            maps.append(np.exp(1j * (np.arctan2(dx, -dy) - th)) / rr)
        maps = np.stack(maps)
    else:
        raise ValidationError(f"unknown coil profile {profile!r}")
    return maps / rss_combine(maps).max()


def default_noise_sigma(clean_meas):
    return NOISE_FRACTION_OF_PEAK * float(np.abs(clean_meas).max())


def simulate_measurements(img, sens, plan, noise_sigma=None, seed=0) -> np.ndarray:
    """Per-coil samples ``forward(plan, sens * img)`` plus complex Gaussian noise.

    ``noise_sigma`` is the standard deviation of each of the real and
    imaginary parts; None selects :func:`default_noise_sigma`.
    """
    img = np.asarray(img)
    sens = np.asarray(sens)
    if sens.ndim != 3 or img.shape[-2:] != sens.shape[-2:]:
        raise ShapeMismatch(f"image {img.shape} and sensitivities {sens.shape} disagree")
    y = nufft.forward(plan, sens * img)
    sigma = default_noise_sigma(y) if noise_sigma is None else float(noise_sigma)
    if sigma < 0:
        raise ValidationError("noise_sigma must be >= 0")
    if sigma == 0:
        return y
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal(y.shape) + 1j * rng.standard_normal(y.shape)
    return y + sigma * noise


def rss_combine(img) -> np.ndarray:
    img = np.asarray(img)
    if img.ndim == 2:
        img = img[None]
    return np.sqrt(np.sum(np.abs(img) ** 2, axis=0))


def make_case(spec: PhantomSpec):
    """Ground-truth coil images ``(coils, n, n)`` for ``spec``."""
    img = make_phantom(spec)
    sens = coil_sensitivities(spec.size, spec.coils, spec.coil_profile, spec.seed)
    return img, sens, sens * img
