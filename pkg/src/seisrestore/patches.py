"""Deterministic patch geometry: extraction, masks, merge and reassembly."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .gather import Gather

__all__ = ["PatchGrid", "plan_patches", "extract", "assemble", "build_mask", "merge_known"]


@dataclass(frozen=True)
class PatchGrid:
    """Square-patch lattice over a gather.

    Origins enumerate the stride lattice row-major; every patch fits inside
    the gather.  ``coverage`` counts how many patches touch each sample.
    """

    n: int
    stride_t: int
    stride_x: int
    gather_shape: tuple
    origins: tuple

    @property
    def k(self) -> int:
        return len(self.origins)

    def coverage(self) -> np.ndarray:
        cov = np.zeros(self.gather_shape, dtype=np.int32)
        for r, c in self.origins:
            cov[r : r + self.n, c : c + self.n] += 1
        return cov

    def fully_covered(self) -> bool:
        return bool(self.coverage().min() >= 1)


def plan_patches(shape, n: int, stride_t: int, stride_x: int) -> PatchGrid:
    """Enumerate all N x N patch origins for the given strides.

    K = (floor((n_t - N)/stride_t) + 1) * (floor((n_x - N)/stride_x) + 1).
    """
    n_t, n_x = shape
    if n > n_t or n > n_x:
        raise ParameterError(f"patch size {n} exceeds gather shape {shape}")
    if stride_t < 1 or stride_x < 1:
        raise ParameterError("strides must be >= 1")
    rows = range(0, n_t - n + 1, stride_t)
    cols = range(0, n_x - n + 1, stride_x)
    origins = tuple((r, c) for r in rows for c in cols)
    return PatchGrid(n, stride_t, stride_x, (n_t, n_x), origins)


def extract(g: Gather, grid: PatchGrid):
    """Copy the window at each origin; returns a list of N x N arrays."""
    if g.samples.shape != grid.gather_shape:
        raise ParameterError(
            f"grid planned for {grid.gather_shape}, gather is {g.samples.shape}"
        )
    n = grid.n
    return [g.samples[r : r + n, c : c + n].copy() for r, c in grid.origins]


def assemble(patches, grid: PatchGrid, meta=None) -> np.ndarray:
    """Reassemble patches by sample-wise averaging of overlapping portions.

    Samples covered by no patch stay zero; the caller can detect them via
    ``grid.fully_covered()``.
    """
    if len(patches) != grid.k:
        raise ParameterError(f"expected {grid.k} patches, got {len(patches)}")
    n = grid.n
    acc = np.zeros(grid.gather_shape, dtype=np.float64)
    count = np.zeros(grid.gather_shape, dtype=np.int64)
    for patch, (r, c) in zip(patches, grid.origins):
        patch = np.asarray(patch)
        if patch.shape != (n, n):
            raise ParameterError(f"patch shape {patch.shape} != ({n}, {n})")
        acc[r : r + n, c : c + n] += patch
        count[r : r + n, c : c + n] += 1
    out = np.divide(acc, count, out=np.zeros_like(acc), where=count > 0)
    return out


def build_mask(trace_mask: np.ndarray, grid: PatchGrid, k: int) -> np.ndarray:
    """Binary N x N mask of patch ``k``: 1 where the underlying sample is missing."""
    if not 0 <= k < grid.k:
        raise ParameterError(f"patch index {k} out of range [0, {grid.k})")
    trace_mask = np.asarray(trace_mask, dtype=bool)
    r, c = grid.origins[k]
    cols = trace_mask[c : c + grid.n]
    return np.repeat(cols[None, :], grid.n, axis=0).astype(np.uint8)


def merge_known(p_bar: np.ndarray, p_tilde: np.ndarray, mask: np.ndarray, gain: float):
    """Known-sample merge: ``(p_bar * (1-M) + p_tilde * M) / gain``.

    ``p_bar`` is the gained corrupted patch, ``p_tilde`` the network output.
    Known samples come out as exactly ``p_bar / gain`` (a single division,
    no intervening multiply).
    """
    if gain == 0:
        raise ParameterError("gain must be nonzero")
    p_bar = np.asarray(p_bar)
    p_tilde = np.asarray(p_tilde)
    mask = np.asarray(mask)
    if p_bar.shape != p_tilde.shape or p_bar.shape != mask.shape:
        raise ParameterError("patch and mask shapes must agree")
    return np.where(mask != 0, p_tilde, p_bar) / gain
