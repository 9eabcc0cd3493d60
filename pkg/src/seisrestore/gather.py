"""Core gather data model, binary file formats, dataset splits and gain.

A gather is a dense 2D array of amplitudes, time-major: ``samples[t, x]``
is time sample ``t`` of trace ``x``.  Missing traces are represented as
zero-filled columns together with an explicit trace mask; the arrays
themselves never contain NaN or Inf.

On-disk formats (little-endian throughout):

* gather file: ``SGTH`` | version u16=1 | n_t u32 | n_x u32 | dt f64 |
  dx f64 | f0 f64 | n_t*n_x float32 samples in C order over (t, x).
* mask file: ``SMSK`` | version u16=1 | n_t u32 | n_x u32 | n_t*n_x u8
  values in {0, 1}, 1 = missing sample.
* dataset manifest: UTF-8 JSON with gather paths, split assignment, seed.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, FormatError, MissingInputError, ParameterError

GATHER_MAGIC = b"SGTH"
MASK_MAGIC = b"SMSK"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class AcquisitionMeta:
    """Acquisition metadata: time step (s), group spacing (m), dominant frequency (Hz)."""

    dt: float
    dx: float = 12.5
    f0: float = 27.0

    def __post_init__(self):
        if not self.dt > 0:
            raise ParameterError(f"dt must be positive, got {self.dt}")
        if not self.dx > 0:
            raise ParameterError(f"dx must be positive, got {self.dx}")
        nyquist = 1.0 / (2.0 * self.dt)
        if not 0 < self.f0 < nyquist:
            raise ParameterError(
                f"f0 must lie in (0, {nyquist} Hz), got {self.f0}"
            )


@dataclass(frozen=True)
class Gather:
    """Immutable 2D seismic record: ``samples[t, x]`` plus acquisition metadata."""

    samples: np.ndarray
    meta: AcquisitionMeta

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=np.float32)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ParameterError(f"samples must be a non-empty 2D array, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ParameterError("samples contain non-finite values")
        arr = np.ascontiguousarray(arr)
        arr.flags.writeable = False
        object.__setattr__(self, "samples", arr)

    @property
    def n_t(self) -> int:
        return self.samples.shape[0]

    @property
    def n_x(self) -> int:
        return self.samples.shape[1]

    def with_samples(self, samples) -> "Gather":
        return Gather(samples, self.meta)


def save_gather(g: Gather, path) -> None:
    """Write ``g`` to ``path`` in the SGTH binary format."""
    header = GATHER_MAGIC + struct.pack(
        "<HIIddd", FORMAT_VERSION, g.n_t, g.n_x, g.meta.dt, g.meta.dx, g.meta.f0
    )
    payload = g.samples.astype("<f4", copy=False).tobytes(order="C")
    Path(path).write_bytes(header + payload)


def load_gather(path) -> Gather:
    """Read a gather written by :func:`save_gather`; bit-exact round trip."""
    path = Path(path)
    if not path.exists():
        raise MissingInputError(f"gather file not found: {path}")
    raw = path.read_bytes()
    if len(raw) < 4 or raw[:4] != GATHER_MAGIC:
        raise FormatError("bad-magic", f"{path}: not a gather file")
    head_len = 4 + struct.calcsize("<HIIddd")
    if len(raw) < head_len:
        raise FormatError("truncated", f"{path}: truncated header")
    version, n_t, n_x, dt, dx, f0 = struct.unpack("<HIIddd", raw[4:head_len])
    if version != FORMAT_VERSION:
        raise FormatError("bad-version", f"{path}: unsupported version {version}")
    expected = head_len + 4 * n_t * n_x
    if len(raw) < expected:
        raise FormatError("truncated", f"{path}: expected {expected} bytes, got {len(raw)}")
    samples = np.frombuffer(raw[head_len:expected], dtype="<f4").reshape(n_t, n_x)
    if not np.all(np.isfinite(samples)):
        raise FormatError("non-finite", f"{path}: payload contains non-finite samples")
    return Gather(samples, AcquisitionMeta(dt=dt, dx=dx, f0=f0))


def save_mask(mask: np.ndarray, path) -> None:
    """Write a binary sample mask (1 = missing) in the SMSK format."""
    mask = np.asarray(mask)
    if mask.ndim != 2:
        raise ParameterError("mask must be 2D")
    m = (mask != 0).astype(np.uint8)
    header = MASK_MAGIC + struct.pack("<HII", FORMAT_VERSION, m.shape[0], m.shape[1])
    Path(path).write_bytes(header + m.tobytes(order="C"))


def load_mask(path) -> np.ndarray:
    path = Path(path)
    if not path.exists():
        raise MissingInputError(f"mask file not found: {path}")
    raw = path.read_bytes()
    if len(raw) < 4 or raw[:4] != MASK_MAGIC:
        raise FormatError("bad-magic", f"{path}: not a mask file")
    head_len = 4 + struct.calcsize("<HII")
    if len(raw) < head_len:
        raise FormatError("truncated", f"{path}: truncated header")
    version, n_t, n_x = struct.unpack("<HII", raw[4:head_len])
    if version != FORMAT_VERSION:
        raise FormatError("bad-version", f"{path}: unsupported version {version}")
    expected = head_len + n_t * n_x
    if len(raw) < expected:
        raise FormatError("truncated", f"{path}: expected {expected} bytes, got {len(raw)}")
    m = np.frombuffer(raw[head_len:expected], dtype=np.uint8).reshape(n_t, n_x)
    if not np.all((m == 0) | (m == 1)):
        raise FormatError("non-finite", f"{path}: mask values outside {{0, 1}}")
    return m.copy()


def trace_to_sample_mask(trace_mask: np.ndarray, n_t: int) -> np.ndarray:
    """Expand a per-trace mask (n_x,) to a per-sample mask (n_t, n_x)."""
    trace_mask = np.asarray(trace_mask, dtype=bool)
    return np.repeat(trace_mask[None, :], n_t, axis=0).astype(np.uint8)


@dataclass(frozen=True)
class Split:
    """Disjoint, exhaustive index assignment produced by :func:`split_dataset`."""

    train: tuple
    validation: tuple
    evaluation: tuple

    def as_dict(self):
        return {
            "train": list(self.train),
            "validation": list(self.validation),
            "evaluation": list(self.evaluation),
        }


def split_dataset(n: int, n_trainval: int, trainval_ratio: float, seed: int) -> Split:
    """Deterministically split ``n`` gather indices into train/validation/evaluation.

    ``n_trainval`` indices are drawn by a seeded permutation; the train share
    is ``round(trainval_ratio * n_trainval)`` (half-up), the rest of the
    drawn indices go to validation, everything else to evaluation.
    """
    if n_trainval > n:
        raise ParameterError(f"n_trainval={n_trainval} exceeds dataset size {n}")
    if not 0 < trainval_ratio < 1:
        raise ParameterError(f"trainval_ratio must lie in (0, 1), got {trainval_ratio}")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    n_train = int(math.floor(trainval_ratio * n_trainval + 0.5))
    train = tuple(sorted(int(i) for i in perm[:n_train]))
    val = tuple(sorted(int(i) for i in perm[n_train:n_trainval]))
    evaluation = tuple(sorted(int(i) for i in perm[n_trainval:]))
    return Split(train, val, evaluation)


@dataclass(frozen=True)
class Dataset:
    """An ordered collection of gathers with a train/validation/evaluation split."""

    gathers: tuple
    split: Split
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "gathers", tuple(self.gathers))
        n = len(self.gathers)
        all_idx = sorted(self.split.train + self.split.validation + self.split.evaluation)
        if all_idx != list(range(n)):
            raise ConfigError(
                f"split must partition range({n}), got indices {all_idx[:8]}..."
            )

    def subset(self, name):
        idx = getattr(self.split, name)
        return [self.gathers[i] for i in idx]


def save_manifest(paths, split: Split, seed: int, manifest_path) -> None:
    """Write a dataset manifest (JSON) listing gather files and their split."""
    doc = {
        "gathers": [str(p) for p in paths],
        "split": split.as_dict(),
        "seed": int(seed),
    }
    Path(manifest_path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def load_manifest(manifest_path):
    """Read a dataset manifest; returns (paths, Split, seed)."""
    path = Path(manifest_path)
    if not path.exists():
        raise MissingInputError(f"manifest not found: {path}")
    doc = json.loads(path.read_text(encoding="utf-8"))
    split = Split(
        tuple(doc["split"]["train"]),
        tuple(doc["split"]["validation"]),
        tuple(doc["split"]["evaluation"]),
    )
    return [Path(p) for p in doc["gathers"]], split, int(doc.get("seed", 0))


def load_dataset(manifest_path) -> Dataset:
    paths, split, seed = load_manifest(manifest_path)
    base = Path(manifest_path).parent
    gathers = []
    for p in paths:
        p = Path(p)
        gathers.append(load_gather(p if p.is_absolute() else base / p))
    return Dataset(tuple(gathers), split, seed)


def apply_gain(g: Gather, gain: float) -> Gather:
    """Scale every sample by the constant ``gain``."""
    if gain == 0:
        raise ParameterError("gain must be nonzero")
    return g.with_samples(g.samples * np.float32(gain))


def remove_gain(g: Gather, gain: float) -> Gather:
    """Undo :func:`apply_gain`; round trip is exact to ~1 rounding per sample."""
    if gain == 0:
        raise ParameterError("gain must be nonzero")
    return g.with_samples(g.samples / np.float32(gain))
