"""On-disk formats: "cplx" complex arrays, trajectory CSV, PGM previews."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .errors import FormatError
from .trajgen import Trajectory

TRAJECTORY_HEADER = ("interleaf", "index", "t_s", "kx_cycles_per_cm", "ky_cycles_per_cm",
                     "gx_mT_per_m", "gy_mT_per_m")
_CPLX_DTYPE = "c64le"


def write_cplx(path, array):
    """Write a complex array of rank 2 or 3 as a JSON header line plus float32 (re, im) pairs."""
    arr = np.asarray(array)
    if arr.ndim not in (2, 3):
        raise ValueError(f"cplx arrays are [coils, samples] or [coils, h, w], got shape {arr.shape}")
    header = json.dumps({"dims": list(arr.shape), "dtype": _CPLX_DTYPE}) + "\n"
    payload = np.empty(arr.shape + (2,), dtype="<f4")
    payload[..., 0] = arr.real
    payload[..., 1] = arr.imag
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(payload.tobytes(order="C"))


def read_cplx(path) -> np.ndarray:
    """Read a cplx file into a complex128 array."""
    raw = Path(path).read_bytes()
    end = raw.find(b"\n")
    if end < 0:
        raise FormatError("missing header newline", offset=len(raw))
    try:
        header = json.loads(raw[:end].decode("ascii"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"header is not JSON: {exc}", offset=0) from None
    if not isinstance(header, dict):
        raise FormatError("header must be a JSON object", offset=0)
    dims = header.get("dims")
    if header.get("dtype") != _CPLX_DTYPE:
        raise FormatError(f"unsupported dtype {header.get('dtype')!r}", offset=0)
    if (not isinstance(dims, list) or len(dims) not in (2, 3)
            or not all(isinstance(d, int) and d >= 0 for d in dims)):
        raise FormatError(f"bad dims {dims!r}", offset=0)
    start = end + 1
    expected = int(np.prod(dims)) * 8
    got = len(raw) - start
    if got != expected:
        raise FormatError(f"payload has {got} bytes, expected {expected}", offset=start + min(got, expected))
    data = np.frombuffer(raw, dtype="<f4", offset=start).reshape(tuple(dims) + (2,))
    return data[..., 0].astype(np.float64) + 1j * data[..., 1].astype(np.float64)


def write_trajectory_csv(traj: Trajectory, path_or_file):
    """Write one row per sample; accepts a path or an open text file."""
    if hasattr(path_or_file, "write"):
        _write_trajectory_rows(traj, path_or_file)
        return
    with open(path_or_file, "w", newline="") as fh:
        _write_trajectory_rows(traj, fh)


def _write_trajectory_rows(traj, fh):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(TRAJECTORY_HEADER)
    for il in range(traj.interleaves):
        for i in range(traj.samples_per_interleaf):
            kx, ky = traj.k_samples[il, i]
            gx, gy = traj.grads[il, i]
            w.writerow([il, i] + [repr(float(v)) for v in (traj.times[i], kx, ky, gx, gy)])


def read_trajectory_csv(path) -> Trajectory:
    """Load a trajectory CSV; the result carries no design spec."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != TRAJECTORY_HEADER:
        raise FormatError("unexpected trajectory header", offset=0)
    body = rows[1:]
    if not body:
        raise FormatError("trajectory has no samples", offset=0)
    try:
        ids = np.array([[int(r[0]), int(r[1])] for r in body])
        vals = np.array([[float(v) for v in r[2:7]] for r in body])
    except (ValueError, IndexError) as exc:
        raise FormatError(f"malformed row: {exc}", offset=0) from None
    n_il = ids[:, 0].max() + 1
    n_s = ids[:, 1].max() + 1
    if len(body) != n_il * n_s or not np.array_equal(
            ids, np.stack(np.meshgrid(np.arange(n_il), np.arange(n_s), indexing="ij"), -1).reshape(-1, 2)):
        raise FormatError("rows must enumerate (interleaf, index) in lexicographic order", offset=0)
    vals = vals.reshape(n_il, n_s, 5)
    k = vals[..., 1:3]
    g = vals[..., 3:5]
    dwell = float(vals[0, 1, 0] - vals[0, 0, 0]) if n_s > 1 else float("nan")
    kmax = float(np.hypot(k[..., 0], k[..., 1]).max())
    return Trajectory(np.ascontiguousarray(k), np.ascontiguousarray(g), dwell, kmax)


def write_pgm(path, image, ref_max=None):
    """8-bit binary PGM of a real image scaled by ``ref_max`` (default: its max)."""
    img = np.asarray(image, dtype=float)
    peak = float(img.max()) if ref_max is None else float(ref_max)
    scaled = np.clip(img / peak, 0.0, 1.0) if peak > 0 else np.zeros_like(img)
    data = np.round(scaled * 255).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode("ascii"))
        fh.write(data.tobytes())
