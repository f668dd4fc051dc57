"""Non-uniform Fourier operators for square images.

Images are ``(coils, n, n)`` complex arrays with pixel coordinates centered at
``-n/2 ... n/2-1`` (row = y, column = x). Measurements are ``(coils, m)``
complex arrays. Frequencies are in cycles/sample, in ``[-0.5, 0.5)``. The
forward operator is ``y_j = sum_p x(p) exp(-2i*pi*k_j.p)``.

Gridding uses a Kaiser-Bessel kernel on an oversampled grid with
image-domain deapodization; :func:`nudft_forward_oracle` and
:func:`nudft_adjoint_oracle` evaluate the same sums directly.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.special import i0

from .errors import CoordOutOfRange, NonPositiveWeight, NumericalBreakdown, ShapeMismatch, ValidationError

logger = logging.getLogger(__name__)

DEFAULT_OVERSAMP = 2.0
DEFAULT_KERNEL_WIDTH = 7
# normalized coordinates within this distance above +0.5 wrap to -0.5 (same phase on integer pixels)
_WRAP_TOL = 1e-9


def kaiser_bessel_beta(width, oversamp):
    """Shape parameter from Beatty et al. for a given width and oversampling."""
    return np.pi * np.sqrt((width / oversamp) ** 2 * (oversamp - 0.5) ** 2 - 0.8)


def kaiser_bessel(u, width, beta):
    u = np.asarray(u, dtype=float)
    arg = 1.0 - (2.0 * u / width) ** 2
    out = i0(beta * np.sqrt(np.clip(arg, 0.0, None)))
    return np.where(arg >= 0.0, out, 0.0)


def kaiser_bessel_ft(nu, width, beta):
    """Continuous Fourier transform of :func:`kaiser_bessel` at frequency ``nu``."""
    z2 = beta**2 - (np.pi * width * np.asarray(nu, dtype=float)) ** 2
    z = np.sqrt(np.abs(z2))
    with np.errstate(invalid="ignore", divide="ignore"):
        val = np.where(z2 > 0, np.sinh(z) / z, np.sin(z) / z)
    return width * np.where(z == 0, 1.0, val)


def normalize_coords(k_cycles_per_cm, fov_cm, matrix_size):
    return np.asarray(k_cycles_per_cm, dtype=float) * fov_cm / matrix_size


@dataclass(frozen=True, eq=False)
class NufftPlan:
    image_size: int
    oversamp: float
    kernel_width: int
    kernel_beta: float
    sample_coords: np.ndarray
    grid_size: int
    interp_indices: np.ndarray
    interp_weights: np.ndarray
    apodization: np.ndarray
    _interp: sp.csr_matrix = field(repr=False)
    _interp_h: sp.csr_matrix = field(repr=False)

    @property
    def num_samples(self) -> int:
        return self.sample_coords.shape[0]

    def radius(self):
        """Normalized k-space radius of every sample, in [0, 0.5*sqrt(2)]."""
        return np.hypot(self.sample_coords[:, 0], self.sample_coords[:, 1])


def plan_create(coords, image_size, oversamp=DEFAULT_OVERSAMP, kernel_width=DEFAULT_KERNEL_WIDTH,
                kernel_beta=None) -> NufftPlan:
    """Precompute interpolation weights for normalized ``coords`` of shape (m, 2).

    A :class:`~spiralkit.trajgen.Trajectory` carrying its spec is also
    accepted and normalized by ``fov_cm / matrix_size``.
    """
    if hasattr(coords, "k_samples"):
        spec = coords.spec
        if spec is None:
            raise ValidationError("trajectory has no spec; normalize coordinates explicitly")
        coords = normalize_coords(coords.flat_k(), spec.fov_cm, spec.matrix_size)
    coords = np.array(coords, dtype=float).reshape(-1, 2)
    if coords.shape[0] == 0:
        raise ValidationError("empty trajectory")
    if int(image_size) != image_size or image_size < 2 or image_size % 2:
        raise ValidationError(f"image_size must be an even integer, got {image_size}")
    if not np.all(np.isfinite(coords)):
        raise CoordOutOfRange("non-finite coordinate")
    wrap = (coords >= 0.5) & (coords <= 0.5 + _WRAP_TOL)
    coords[wrap] -= 1.0
    bad = (coords < -0.5) | (coords >= 0.5)
    if np.any(bad):
        idx = int(np.argwhere(bad.any(axis=1))[0, 0])
        raise CoordOutOfRange(f"sample {idx} at {coords[idx].tolist()} outside [-0.5, 0.5)")

    n = int(image_size)
    grid = int(2 * np.ceil(oversamp * n / 2))
    width = int(kernel_width)
    beta = kaiser_bessel_beta(width, grid / n) if kernel_beta is None else float(kernel_beta)

    # kernel footprint per axis: W consecutive grid points starting at ceil(u - W/2)
    u = coords * grid
    start = np.ceil(u - width / 2.0).astype(int)
    offs = np.arange(width)
    pts = start[:, :, None] + offs[None, None, :]  # (m, 2, W)
    w_axis = kaiser_bessel(u[:, :, None] - pts, width, beta)
    wx, wy = w_axis[:, 0, :], w_axis[:, 1, :]
    ix, iy = np.mod(pts[:, 0, :], grid), np.mod(pts[:, 1, :], grid)
    weights = (wy[:, :, None] * wx[:, None, :]).reshape(len(coords), -1)
    indices = (iy[:, :, None] * grid + ix[:, None, :]).reshape(len(coords), -1)

    m = len(coords)
    rows = np.repeat(np.arange(m), width * width)
    interp = sp.csr_matrix((weights.ravel(), (rows, indices.ravel())), shape=(m, grid * grid))
    interp.sum_duplicates()
    interp_h = interp.T.tocsr()

    p = np.arange(n) - n // 2
    apod1 = kaiser_bessel_ft(p / grid, width, beta)
    apod = np.outer(apod1, apod1)
    if not np.all(apod > 0):
        raise ValidationError("kernel parameters give a non-positive apodization map")
    return NufftPlan(n, grid / n, width, beta, coords, grid, indices, weights, apod, interp, interp_h)


def _as_image(plan, img):
    img = np.asarray(img)
    if img.ndim == 2:
        img = img[None]
    if img.ndim != 3 or img.shape[1:] != (plan.image_size, plan.image_size):
        raise ShapeMismatch(f"image shape {img.shape} does not match plan size {plan.image_size}")
    return img


def _as_meas(plan, meas):
    meas = np.asarray(meas)
    if meas.ndim == 1:
        meas = meas[None]
    if meas.ndim != 2 or meas.shape[1] != plan.num_samples:
        raise ShapeMismatch(f"measurement shape {meas.shape} does not match {plan.num_samples} samples")
    return meas


def _forward_coil(plan, x):
    n, g = plan.image_size, plan.grid_size
    padded = np.zeros((g, g), dtype=complex)
    idx = np.mod(np.arange(n) - n // 2, g)
    padded[np.ix_(idx, idx)] = x / plan.apodization
    spec = np.fft.fft2(padded)
    return plan._interp @ spec.ravel()


def _adjoint_coil(plan, y):
    n, g = plan.image_size, plan.grid_size
    spec = (plan._interp_h @ y).reshape(g, g)
    full = np.fft.ifft2(spec) * (g * g)
    idx = np.mod(np.arange(n) - n // 2, g)
    return full[np.ix_(idx, idx)] / plan.apodization


def forward(plan: NufftPlan, img) -> np.ndarray:
    """Image ``(coils, n, n)`` to samples ``(coils, m)``; coils are independent."""
    img = _as_image(plan, img)
    return np.stack([_forward_coil(plan, x) for x in img])


def adjoint(plan: NufftPlan, meas) -> np.ndarray:
    """Exact conjugate transpose of :func:`forward`."""
    meas = _as_meas(plan, meas)
    return np.stack([_adjoint_coil(plan, y) for y in meas])


def _pixel_grid(n):
    p = np.arange(n) - n // 2
    py, px = np.meshgrid(p, p, indexing="ij")
    return px.ravel(), py.ravel()


def _oracle_blocks(coords, n, block=512):
    coords = np.asarray(coords, dtype=float).reshape(-1, 2)
    px, py = _pixel_grid(n)
    for lo in range(0, len(coords), block):
        c = coords[lo:lo + block]
        yield lo, np.exp(-2j * np.pi * (np.outer(c[:, 0], px) + np.outer(c[:, 1], py)))


def nudft_forward_oracle(coords, img):
    """Direct O(N*M) evaluation of the forward sum, images up to ~64x64."""
    img = np.asarray(img, dtype=complex)
    squeeze = img.ndim == 2
    img = img[None] if squeeze else img
    n = img.shape[-1]
    m = np.asarray(coords).reshape(-1, 2).shape[0]
    flat = img.reshape(img.shape[0], -1)
    out = np.zeros((img.shape[0], m), dtype=complex)
    for lo, mat in _oracle_blocks(coords, n):
        out[:, lo:lo + mat.shape[0]] = flat @ mat.T
    return out[0] if squeeze else out


def nudft_adjoint_oracle(coords, samples, image_size):
    samples = np.asarray(samples, dtype=complex)
    squeeze = samples.ndim == 1
    samples = samples[None] if squeeze else samples
    n = int(image_size)
    out = np.zeros((samples.shape[0], n * n), dtype=complex)
    for lo, mat in _oracle_blocks(coords, n):
        out += samples[:, lo:lo + mat.shape[0]] @ mat.conj()
    out = out.reshape(-1, n, n)
    return out[0] if squeeze else out


def nudft_matrix(coords, image_size):
    """Dense forward matrix (m, n*n); for small oracle problems only."""
    return np.concatenate([mat for _, mat in _oracle_blocks(coords, image_size)])


@dataclass
class CGInfo:
    iterations: list = field(default_factory=list)
    residuals: list = field(default_factory=list)  # per coil: relative residual history


def _cg_coil(plan, b, max_iters, tol, l2_reg, info):
    """Conjugate-residual iteration on the normal operator.

    This member of the conjugate-gradient family minimizes the residual norm
    over the same Krylov space, so the residual history never increases.
    """
    def normal(v):
        out = _adjoint_coil(plan, _forward_coil(plan, v))
        return out + l2_reg * v if l2_reg else out

    x = np.zeros_like(b)
    bnorm = np.linalg.norm(b)
    history = [0.0 if bnorm == 0 else 1.0]
    if bnorm == 0:
        info.iterations.append(0)
        info.residuals.append(history)
        return x
    r = b.copy()
    p = r.copy()
    ar = normal(r)
    ap = ar.copy()
    rar = np.vdot(r, ar).real
    it = 0
    for it in range(1, max_iters + 1):
        denom = np.vdot(ap, ap).real
        if not np.isfinite(denom) or denom == 0:
            break
        step = rar / denom
        x = x + step * p
        r = r - step * ap
        rel = np.linalg.norm(r) / bnorm
        if not np.isfinite(rel):
            raise NumericalBreakdown(f"non-finite residual at iteration {it}")
        history.append(float(rel))
        if rel <= tol:
            break
        ar = normal(r)
        rar_new = np.vdot(r, ar).real
        p = r + (rar_new / rar) * p
        ap = ar + (rar_new / rar) * ap
        rar = rar_new
    info.iterations.append(it)
    info.residuals.append(history)
    return x


def cg_inverse(plan: NufftPlan, meas, max_iters=50, tol=1e-6, l2_reg=0.0, info: CGInfo | None = None):
    """Solve ``(A^H A + l2_reg I) x = A^H y`` per coil, from a zero start.

    Stops per coil once the relative residual drops to ``tol`` or after
    ``max_iters``; pass a :class:`CGInfo` to collect iteration counts and
    residual histories.
    """
    if not tol > 0:
        raise ValidationError("tol must be positive")
    meas = _as_meas(plan, meas)
    info = CGInfo() if info is None else info
    out = []
    for y in meas:
        if not np.all(np.isfinite(y)):
            raise NumericalBreakdown("non-finite measurements")
        b = _adjoint_coil(plan, y)
        out.append(_cg_coil(plan, b, int(max_iters), float(tol), float(l2_reg), info))
    logger.debug("cg_inverse iterations per coil: %s", info.iterations)
    return np.stack(out)


def apply_frequency_weighting(meas, weights):
    meas = np.asarray(meas)
    weights = np.asarray(weights, dtype=float)
    if weights.shape != meas.shape[-1:]:
        raise ShapeMismatch(f"{weights.shape[0] if weights.ndim else 0} weights for {meas.shape[-1]} samples")
    if not np.all(weights > 0):
        raise NonPositiveWeight("weights must be strictly positive")
    return meas * weights


def radial_weights(radius, c1=1.0, c2=0.0):
    """Low-frequency correction ``1 / (c1 * exp(-c2 * r**2))``."""
    return 1.0 / (c1 * np.exp(-c2 * np.asarray(radius, dtype=float) ** 2))
