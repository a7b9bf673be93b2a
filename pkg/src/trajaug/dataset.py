"""Fixed-rate trajectory tensors: normalization, padding, serialization.

``build_dataset`` resamples a trajectory list onto a uniform grid and
produces an (N, F, S) float64 tensor, normalized per feature, padded by
replicating each sequence's final valid frame.  Datasets round-trip
bit-exactly through a small versioned binary container (magic ``ATRD``).
"""

from __future__ import annotations

import io
import logging
import struct
from dataclasses import dataclass

import numpy as np

from .errors import DataError, FormatError
from .interpolate import pchip_resample
from .trajectory import Trajectory

log = logging.getLogger(__name__)

DATASET_MAGIC = b"ATRD"
DATASET_VERSION = 1

NORM_MODES = ("minmax", "zscore")


@dataclass(frozen=True)
class NormStats:
    """Per-feature affine normalization: normalized = (v - center) / scale.

    minmax mode: center = feature minimum, scale = max - min (maps to [0, 1]).
    zscore mode: center = feature mean, scale = standard deviation.
    """

    mode: str
    center: np.ndarray
    scale: np.ndarray

    def __post_init__(self):
        if self.mode not in NORM_MODES:
            raise DataError(f"unknown normalization mode {self.mode!r}")
        if np.any(np.asarray(self.scale) <= 0):
            raise DataError("normalization scale must be positive for every feature")

    @classmethod
    def fit(cls, values: np.ndarray, mode: str = "minmax") -> "NormStats":
        """Fit stats over an (F, n) value matrix."""
        if mode == "minmax":
            lo = values.min(axis=1)
            hi = values.max(axis=1)
            return cls(mode, lo, hi - lo)
        if mode == "zscore":
            return cls(mode, values.mean(axis=1), values.std(axis=1))
        raise DataError(f"unknown normalization mode {mode!r}")

    def apply(self, data: np.ndarray) -> np.ndarray:
        """Normalize an (..., F, S) array."""
        return (data - self.center[:, None]) / self.scale[:, None]

    def invert(self, data: np.ndarray) -> np.ndarray:
        return data * self.scale[:, None] + self.center[:, None]


def denormalize(data: np.ndarray, norm: NormStats) -> np.ndarray:
    """Inverse of the normalization map on an (..., F, S) array."""
    if norm.mode not in NORM_MODES:
        raise DataError(f"unknown normalization mode {norm.mode!r}")
    return norm.invert(np.asarray(data, dtype=np.float64))


def normalize(data: np.ndarray, norm: NormStats) -> np.ndarray:
    if norm.mode not in NORM_MODES:
        raise DataError(f"unknown normalization mode {norm.mode!r}")
    return norm.apply(np.asarray(data, dtype=np.float64))


@dataclass(frozen=True)
class ResampledDataset:
    """Normalized (N, F, S) trajectory tensor with per-sequence valid lengths."""

    data: np.ndarray
    lengths: np.ndarray
    norm: NormStats
    dt: float

    def __post_init__(self):
        if self.data.ndim != 3:
            raise DataError(f"dataset tensor must be (N, F, S), got {self.data.shape}")
        n, f, s = self.data.shape
        if f != 3:
            raise DataError(f"expected 3 features, got {f}")
        if self.lengths.shape != (n,):
            raise DataError("lengths must have one entry per sequence")
        if np.any(self.lengths < 1) or np.any(self.lengths > s):
            raise DataError("lengths must lie in [1, S]")
        if not np.all(np.isfinite(self.data)):
            raise DataError("dataset contains non-finite values")

    @property
    def n_sequences(self) -> int:
        return self.data.shape[0]

    @property
    def max_len(self) -> int:
        return self.data.shape[2]

    def valid_mask(self) -> np.ndarray:
        """Boolean (N, S) mask, True at valid positions."""
        return np.arange(self.max_len)[None, :] < self.lengths[:, None]

    def denormalized(self) -> np.ndarray:
        return denormalize(self.data, self.norm)


def build_dataset(
    trajs: list[Trajectory],
    dt: float,
    max_len: int,
    mode: str = "minmax",
) -> ResampledDataset:
    """Resample, normalize, and pad a trajectory list into a dataset tensor.

    Sequences longer than ``max_len`` are truncated from the front so the
    final-approach portion survives; shorter sequences are padded by
    replicating their last valid frame.
    """
    if not trajs:
        raise DataError("cannot build a dataset from an empty trajectory list")
    resampled = []
    for traj in trajs:
        _, feats = pchip_resample(traj, dt).to_arrays()
        if feats.shape[1] > max_len:
            log.warning(
                "truncating %s from %d to %d frames (keeping the tail)",
                traj.flight_id, feats.shape[1], max_len,
            )
            feats = feats[:, -max_len:]
        resampled.append(feats)

    norm = NormStats.fit(np.concatenate(resampled, axis=1), mode=mode)

    n = len(resampled)
    data = np.empty((n, 3, max_len))
    lengths = np.empty(n, dtype=np.int64)
    for i, feats in enumerate(resampled):
        norm_feats = norm.apply(feats)
        m = feats.shape[1]
        data[i, :, :m] = norm_feats
        data[i, :, m:] = norm_feats[:, -1:]  # replicate last valid frame
        lengths[i] = m
    data.flags.writeable = False
    lengths.flags.writeable = False
    return ResampledDataset(data, lengths, norm, float(dt))


def save_dataset(dataset: ResampledDataset, path) -> None:
    """Write the versioned little-endian binary container."""
    n, f, s = dataset.data.shape
    buf = io.BytesIO()
    buf.write(DATASET_MAGIC)
    buf.write(struct.pack("<I", DATASET_VERSION))
    buf.write(struct.pack("<B", NORM_MODES.index(dataset.norm.mode)))
    buf.write(struct.pack("<QQQ", n, f, s))
    buf.write(struct.pack("<d", dataset.dt))
    buf.write(np.ascontiguousarray(dataset.norm.center, dtype="<f8").tobytes())
    buf.write(np.ascontiguousarray(dataset.norm.scale, dtype="<f8").tobytes())
    buf.write(np.ascontiguousarray(dataset.lengths, dtype="<i8").tobytes())
    buf.write(np.ascontiguousarray(dataset.data, dtype="<f8").tobytes())
    with open(path, "wb") as fh:
        fh.write(buf.getvalue())


def load_dataset(path) -> ResampledDataset:
    """Read a container written by save_dataset; bit-exact round trip."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 41:
        raise FormatError(f"{path}: truncated dataset file")
    if blob[:4] != DATASET_MAGIC:
        raise FormatError(f"{path}: bad magic {blob[:4]!r}, expected {DATASET_MAGIC!r}")
    (version,) = struct.unpack_from("<I", blob, 4)
    if version != DATASET_VERSION:
        raise FormatError(
            f"{path}: dataset format version {version}, this reader supports {DATASET_VERSION}"
        )
    (mode_idx,) = struct.unpack_from("<B", blob, 8)
    if mode_idx >= len(NORM_MODES):
        raise FormatError(f"{path}: unknown normalization mode index {mode_idx}")
    n, f, s = struct.unpack_from("<QQQ", blob, 9)
    (dt,) = struct.unpack_from("<d", blob, 33)
    offset = 41
    expected = offset + 8 * (2 * f + n + n * f * s)
    if len(blob) != expected:
        raise FormatError(f"{path}: file length {len(blob)} != expected {expected}")

    def take(count, dtype):
        nonlocal offset
        arr = np.frombuffer(blob, dtype=dtype, count=count, offset=offset).copy()
        offset += count * 8
        return arr

    center = take(f, "<f8")
    scale = take(f, "<f8")
    lengths = take(n, "<i8")
    data = take(n * f * s, "<f8").reshape(n, f, s)
    data.flags.writeable = False
    lengths.flags.writeable = False
    return ResampledDataset(data, lengths, NormStats(NORM_MODES[mode_idx], center, scale), dt)
