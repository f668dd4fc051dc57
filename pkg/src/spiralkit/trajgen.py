"""Variable-density spiral trajectories under gradient hardware limits.

Each interleaf follows ``k(tau) = kmax * tau**alpha * exp(1j * 2*pi*turns * tau)``
for ``tau`` in [0, 1]. The time parameterization is the fastest traversal that
respects the gradient amplitude and slew caps, stretched uniformly to the
requested per-interleaf duration. Units: k in cycles/cm, gradients in mT/m,
slew in T/m/s, time in seconds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import InfeasibleDuration, ValidationError

GAMMA_BAR_HZ_PER_T = 42.577e6
# cycles/cm accumulated per second by a 1 mT/m gradient
K_PER_MT_S = GAMMA_BAR_HZ_PER_T * 1e-3 / 100.0

_DERATES = (0.995, 0.98, 0.95, 0.9)
_FINE_POINTS = 100_001


@dataclass(frozen=True)
class SpiralSpec:
    matrix_size: int = 256
    fov_cm: float = 22.0
    interleaves: int = 1
    alpha: float = 1.0
    total_readout_s: float = 0.02
    dwell_s: float = 4e-6
    gmax_mT_per_m: float = 40.0
    smax_T_per_m_per_s: float = 150.0
    turns: Optional[float] = None  # None: derived, see design_spiral

    def __post_init__(self):
        if int(self.matrix_size) != self.matrix_size or self.matrix_size < 8 or self.matrix_size % 2:
            raise ValidationError(f"matrix_size must be an even integer >= 8, got {self.matrix_size}")
        if not self.fov_cm > 0:
            raise ValidationError(f"fov_cm must be positive, got {self.fov_cm}")
        if int(self.interleaves) != self.interleaves or self.interleaves < 1:
            raise ValidationError(f"interleaves must be an integer >= 1, got {self.interleaves}")
        if not 1.0 <= self.alpha <= 8.0:
            raise ValidationError(f"alpha must lie in [1, 8], got {self.alpha}")
        if not self.dwell_s > 0:
            raise ValidationError(f"dwell_s must be positive, got {self.dwell_s}")
        if not self.total_readout_s / self.interleaves >= 2 * self.dwell_s * (1 - 1e-12):
            raise ValidationError("each interleaf needs at least two samples")
        if not (self.gmax_mT_per_m > 0 and self.smax_T_per_m_per_s > 0):
            raise ValidationError("hardware caps must be positive")
        if self.turns is not None and not self.turns >= 0:
            raise ValidationError(f"turns must be non-negative, got {self.turns}")

    @property
    def kmax(self) -> float:
        return self.matrix_size / (2.0 * self.fov_cm)

    @property
    def samples_per_interleaf(self) -> int:
        return int(math.floor(self.total_readout_s / self.interleaves / self.dwell_s + 1e-9))

    @property
    def nyquist_turns(self) -> float:
        """Turns at which the edge pitch of one interleaf is interleaves/fov."""
        return self.alpha * self.matrix_size / (2.0 * self.interleaves)


@dataclass(frozen=True)
class Trajectory:
    """Sample locations and gradients, shaped (interleaves, samples, 2)."""

    k_samples: np.ndarray
    grads: np.ndarray
    dwell_s: float
    kmax: float
    spec: Optional[SpiralSpec] = None
    turns: float = float("nan")
    dilation: float = float("nan")
    times: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "times", np.arange(self.k_samples.shape[1]) * self.dwell_s)

    @property
    def interleaves(self) -> int:
        return self.k_samples.shape[0]

    @property
    def samples_per_interleaf(self) -> int:
        return self.k_samples.shape[1]

    @property
    def duration_s(self) -> float:
        return self.samples_per_interleaf * self.dwell_s

    def flat_k(self) -> np.ndarray:
        return self.k_samples.reshape(-1, 2)


@dataclass(frozen=True)
class HardwareReport:
    max_amp: float
    max_slew: float
    feasible: bool


def gradients_from_k(k_samples, dwell_s):
    """Backward-difference gradient waveform (mT/m) along the sample axis.

    The waveform starts at zero, so ``k[0] + cumsum(g) * K_PER_MT_S * dwell_s``
    reproduces ``k`` exactly. Shape ``(..., n, 2)`` in and out.
    """
    k = np.asarray(k_samples, dtype=float)
    if k.shape[-2] < 2:
        raise ValidationError("need at least two samples")
    g = np.zeros_like(k)
    g[..., 1:, :] = np.diff(k, axis=-2) / (K_PER_MT_S * dwell_s)
    return g


def integrate_gradients(grads, dwell_s, k0=0.0):
    return k0 + np.cumsum(grads, axis=-2) * (K_PER_MT_S * dwell_s)


def check_hardware_limits(traj: Trajectory) -> HardwareReport:
    g = traj.grads
    if g.size == 0:
        raise ValidationError("empty trajectory")
    amp = np.sqrt(np.sum(g**2, axis=-1))
    max_amp = float(amp.max())
    if g.shape[-2] > 1:
        slew = np.sqrt(np.sum(np.diff(g, axis=-2) ** 2, axis=-1)) / traj.dwell_s * 1e-3
        max_slew = float(slew.max())
    else:
        max_slew = 0.0
    spec = traj.spec or SpiralSpec()
    feasible = (max_amp <= spec.gmax_mT_per_m * (1 + 1e-9)
                and max_slew <= spec.smax_T_per_m_per_s * (1 + 1e-9))
    return HardwareReport(max_amp, max_slew, bool(feasible))


def rotate_interleaves(base_k, n, base_grads=None):
    """Copies of one interleaf rotated by ``2*pi*i/n``; returns (k, g) arrays."""
    if int(n) != n or n < 1:
        raise ValidationError(f"n must be a positive integer, got {n}")
    angles = 2 * np.pi * np.arange(n) / n
    c, s = np.cos(angles)[:, None], np.sin(angles)[:, None]

    def rot(a):
        a = np.asarray(a, dtype=float)
        x, y = a[..., 0], a[..., 1]
        out = np.stack([c * x - s * y, s * x + c * y], axis=-1)
        out[0] = a  # identity rotation stays bit-exact
        return out

    k = rot(base_k)
    g = rot(base_grads) if base_grads is not None else None
    return k, g


class _SpiralPath:
    """Geometry of one interleaf plus an arc-length lookup table."""

    def __init__(self, kmax, alpha, turns):
        self.kmax = kmax
        self.alpha = alpha
        self.omega = 2 * np.pi * turns
        tau = np.linspace(0.0, 1.0, _FINE_POINTS)
        pts = self.point(tau)
        seg = np.abs(np.diff(pts))
        self.tau_fine = tau
        self.s_fine = np.concatenate([[0.0], np.cumsum(seg)])
        self.length = self.s_fine[-1]

    def point(self, tau):
        return self.kmax * tau**self.alpha * np.exp(1j * self.omega * tau)

    def tau_at(self, s):
        return np.interp(s, self.s_fine, self.tau_fine)

    def curvature(self, tau):
        a, w, lam = self.alpha, self.omega, self.kmax
        with np.errstate(divide="ignore", invalid="ignore"):
            d1 = lam * (a * tau ** (a - 1) + 1j * w * tau**a)
            d2 = lam * (a * (a - 1) * tau ** (a - 2) + 2j * w * a * tau ** (a - 1) - w**2 * tau**a)
            kappa = np.abs(np.imag(np.conj(d1) * d2)) / np.abs(d1) ** 3
        return np.where(np.isfinite(kappa), kappa, np.inf)


def _min_time_profile(path, vmax, amax, n_nodes):
    """Fastest speed profile v(s) along ``path`` under speed/acceleration caps.

    Forward pass from rest, backward pass with a free end. Each segment uses
    constant tangential acceleration, so its duration is 2*ds/(v0+v1).
    """
    s = np.linspace(0.0, path.length, n_nodes + 1)
    ds = path.length / n_nodes if n_nodes else 0.0
    kappa = path.curvature(path.tau_at(s))
    with np.errstate(divide="ignore"):
        bound = np.minimum(vmax, np.sqrt(amax / kappa))
    bound = bound.tolist()
    kap = kappa.tolist()
    amax2 = amax * amax

    v = [0.0] * (n_nodes + 1)
    for j in range(n_nodes):
        vj = v[j]
        cen = kap[j] * vj * vj if vj > 0.0 else 0.0
        acc = math.sqrt(max(amax2 - cen * cen, 0.0)) if cen < amax else 0.0
        v[j + 1] = min(math.sqrt(vj * vj + 2.0 * acc * ds), bound[j + 1])
    v[-1] = min(v[-1], bound[-1])
    for j in range(n_nodes - 1, -1, -1):
        vn = v[j + 1]
        cen = kap[j + 1] * vn * vn if vn > 0.0 else 0.0
        acc = math.sqrt(max(amax2 - cen * cen, 0.0)) if cen < amax else 0.0
        vb = math.sqrt(vn * vn + 2.0 * acc * ds)
        if vb < v[j]:
            v[j] = vb

    v = np.asarray(v)
    vsum = v[:-1] + v[1:]
    if np.any(vsum <= 0):
        return s, v, np.full_like(s, np.inf)
    t = np.concatenate([[0.0], np.cumsum(2.0 * ds / vsum)])
    return s, v, t


def _nodes_for(turns):
    return int(np.clip(200 * turns, 2000, 20000))


def _min_time(spec, turns, derate):
    path = _SpiralPath(spec.kmax, spec.alpha, turns)
    vmax = K_PER_MT_S * spec.gmax_mT_per_m * derate
    amax = K_PER_MT_S * spec.smax_T_per_m_per_s * 1e3 * derate
    s, v, t = _min_time_profile(path, vmax, amax, _nodes_for(turns))
    return path, s, v, t


def _choose_turns(spec, t_trav, derate):
    if spec.turns is not None:
        return float(spec.turns)
    nyq = spec.nyquist_turns
    if _min_time(spec, nyq, derate)[3][-1] <= t_trav:
        return nyq
    lo, hi = 0.0, nyq
    t0 = _min_time(spec, 0.0, derate)[3][-1]
    if t0 > t_trav:
        _raise_infeasible(spec, t0)
    for _ in range(30):
        mid = 0.5 * (lo + hi)
        if _min_time(spec, mid, derate)[3][-1] <= t_trav:
            lo = mid
        else:
            hi = mid
    return lo


def _raise_infeasible(spec, t_min):
    n_min = int(math.ceil(t_min / spec.dwell_s - 1e-9)) + 1
    raise InfeasibleDuration(spec.total_readout_s, spec.interleaves * n_min * spec.dwell_s)


def _sample_profile(path, s, v, t, n_samples, dwell_s):
    t_trav = (n_samples - 1) * dwell_s
    dilation = t_trav / t[-1]
    tq = np.arange(n_samples) * dwell_s / dilation
    j = np.clip(np.searchsorted(t, tq, side="right") - 1, 0, len(s) - 2)
    ds = s[1] - s[0]
    dt = tq - t[j]
    acc = (v[j + 1] ** 2 - v[j] ** 2) / (2 * ds)
    sq = np.minimum(s[j] + v[j] * dt + 0.5 * acc * dt**2, s[j + 1])
    sq[0] = 0.0
    sq[-1] = path.length
    tau = path.tau_at(sq)
    tau[-1] = 1.0
    k = path.point(tau)
    return np.stack([k.real, k.imag], axis=-1), dilation


def design_spiral(spec: SpiralSpec) -> Trajectory:
    """Design all interleaves of a spiral meeting the hardware caps.

    ``spec.turns=None`` selects the Nyquist-relative turn count
    ``alpha*matrix/(2*interleaves)``, reduced to the largest count that still
    fits the per-interleaf duration when the hardware cannot traverse it in
    time. Raises InfeasibleDuration when even a straight radial readout is
    too slow.
    """
    n_samples = spec.samples_per_interleaf
    t_trav = (n_samples - 1) * spec.dwell_s
    for derate in _DERATES:
        turns = _choose_turns(spec, t_trav, derate)
        path, s, v, t = _min_time(spec, turns, derate)
        if t[-1] > t_trav:
            _raise_infeasible(spec, t[-1])
        base_k, dilation = _sample_profile(path, s, v, t, n_samples, spec.dwell_s)
        base_g = gradients_from_k(base_k, spec.dwell_s)
        k, g = rotate_interleaves(base_k, spec.interleaves, base_g)
        traj = Trajectory(k, g, spec.dwell_s, spec.kmax, spec, turns, dilation)
        if check_hardware_limits(traj).feasible:
            return traj
    raise InfeasibleDuration(spec.total_readout_s, float("nan"))
