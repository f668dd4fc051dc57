"""Image-quality and timing metrics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import gaussian_filter

from .errors import DegenerateReference, ShapeMismatch, ValidationError
from .phantom import rss_combine


@dataclass(frozen=True)
class SsimParams:
    window: int = 11
    sigma: float = 1.5
    k1: float = 0.01
    k2: float = 0.03

    def __post_init__(self):
        if self.window % 2 != 1 or self.window < 3:
            raise ValidationError("window must be an odd size >= 3")
        if not (self.k1 > 0 and self.k2 > 0):
            raise ValidationError("k1 and k2 must be positive")

    def kernel(self) -> np.ndarray:
        """Normalized 2D Gaussian window."""
        r = np.arange(self.window) - self.window // 2
        g = np.exp(-(r**2) / (2 * self.sigma**2))
        g /= g.sum()
        return np.outer(g, g)


def _local_mean(img, params):
    radius = params.window // 2
    return gaussian_filter(img, params.sigma, mode="reflect", truncate=radius / params.sigma)


def ssim(ref, test, params: SsimParams = SsimParams(), data_range=None) -> float:
    """Mean local SSIM with a Gaussian window and reflective borders.

    ``data_range`` defaults to the maximum of ``ref``.
    """
    ref = np.asarray(ref, dtype=float)
    test = np.asarray(test, dtype=float)
    if ref.shape != test.shape:
        raise ShapeMismatch(f"shapes differ: {ref.shape} vs {test.shape}")
    if data_range is None:
        data_range = float(ref.max())
    if not data_range > 0:
        raise DegenerateReference("reference has no positive dynamic range")
    c1 = (params.k1 * data_range) ** 2
    c2 = (params.k2 * data_range) ** 2
    mu_x = _local_mean(ref, params)
    mu_y = _local_mean(test, params)
    sxx = _local_mean(ref * ref, params) - mu_x**2
    syy = _local_mean(test * test, params) - mu_y**2
    sxy = _local_mean(ref * test, params) - mu_x * mu_y
    num = (2 * mu_x * mu_y + c1) * (2 * sxy + c2)
    den = (mu_x**2 + mu_y**2 + c1) * (sxx + syy + c2)
    return float(np.mean(num / den))


def nrmse(ref, test) -> float:
    ref = np.asarray(ref)
    test = np.asarray(test)
    if ref.shape != test.shape:
        raise ShapeMismatch(f"shapes differ: {ref.shape} vs {test.shape}")
    norm = np.linalg.norm(ref)
    if norm == 0:
        raise DegenerateReference("reference has zero norm")
    return float(np.linalg.norm(test - ref) / norm)


def normalized_magnitudes(ref_coils, test_coils):
    """RSS magnitudes of both stacks, scaled so the reference peaks at 1."""
    ref = rss_combine(ref_coils)
    test = rss_combine(test_coils)
    peak = ref.max()
    if not peak > 0:
        raise DegenerateReference("reference image is all zero")
    return ref / peak, test / peak


def score(ref_coils, test_coils, params: SsimParams = SsimParams()) -> dict:
    ref, test = normalized_magnitudes(ref_coils, test_coils)
    return {"ssim": ssim(ref, test, params, data_range=1.0), "nrmse": nrmse(ref, test)}


def effective_scan_time(scan_time_s, matrix_lines, recon_lines, slices) -> float:
    """Per-slice scan time after cropping the phase-encode lines."""
    vals = (scan_time_s, matrix_lines, recon_lines, slices)
    if not all(v > 0 for v in vals):
        raise ValidationError("all arguments must be positive")
    return scan_time_s * (recon_lines / matrix_lines) / slices
