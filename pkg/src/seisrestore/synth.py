"""Synthetic shot gathers: dipping linear events built from a Ricker wavelet."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .gather import AcquisitionMeta, Dataset, Gather, Split, split_dataset


def ricker(f0: float, dt: float, half_len: int) -> np.ndarray:
    """Ricker wavelet ``(1 - 2*pi^2*f0^2*t^2) * exp(-pi^2*f0^2*t^2)``.

    Sampled at ``t = (k - half_len) * dt`` for ``k = 0 .. 2*half_len``;
    symmetric with peak value 1 at the center.
    """
    if not f0 < 1.0 / (2.0 * dt):
        raise ParameterError(f"f0={f0} Hz is at or above Nyquist for dt={dt}")
    t = (np.arange(2 * half_len + 1) - half_len) * dt
    a = (np.pi * f0 * t) ** 2
    return (1.0 - 2.0 * a) * np.exp(-a)


def default_half_len(f0: float, dt: float) -> int:
    """Compact support: the wavelet tail falls below 0.1% of peak within this."""
    return int(np.ceil(1.5 / (f0 * dt)))


def normalize_energy(w: np.ndarray) -> np.ndarray:
    """Scale a 1D signal to unit energy (sum of squares = 1)."""
    w = np.asarray(w, dtype=np.float64)
    energy = np.sum(w * w)
    if energy == 0:
        raise ParameterError("cannot normalize an all-zero signal")
    return w / np.sqrt(energy)


@dataclass(frozen=True)
class EventSpec:
    """A single linear event: intercept time (s), dip (s per trace), amplitude."""

    slope: float
    t0: float
    amplitude: float = 1.0


@dataclass(frozen=True)
class SynthConfig:
    n_gathers: int
    n_t: int
    n_x: int
    dt: float = 0.006
    f0: float = 27.0
    n_events: int = 1
    slope_range: tuple = None
    t0_range: tuple = None
    amplitude: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.n_gathers < 1 or self.n_t < 1 or self.n_x < 1:
            raise ParameterError("n_gathers, n_t and n_x must all be >= 1")
        if self.n_events < 1:
            raise ParameterError("n_events must be >= 1")
        if not self.f0 < 1.0 / (2.0 * self.dt):
            raise ParameterError("f0 must be below Nyquist")
        if self.slope_range is None:
            object.__setattr__(self, "slope_range", (-2.0 * self.dt, 2.0 * self.dt))
        if self.t0_range is None:
            window = self.n_t * self.dt
            object.__setattr__(self, "t0_range", (0.2 * window, 0.8 * window))
        for name in ("slope_range", "t0_range"):
            lo, hi = getattr(self, name)
            if hi < lo:
                raise ParameterError(f"{name} is empty: {(lo, hi)}")


def render_event(n_t, n_x, dt, spec: EventSpec, f0) -> Gather:
    """Place the wavelet on every trace, centered at ``t0 + slope * x``.

    Placement snaps to the nearest sample; parts of the wavelet outside the
    time window are clipped.
    """
    half = default_half_len(f0, dt)
    w = spec.amplitude * ricker(f0, dt, half)
    data = np.zeros((n_t, n_x), dtype=np.float64)
    for x in range(n_x):
        center = int(round((spec.t0 + spec.slope * x) / dt))
        lo = center - half
        hi = center + half + 1
        src_lo = max(0, -lo)
        src_hi = len(w) - max(0, hi - n_t)
        if src_lo < src_hi:
            data[max(0, lo) : min(n_t, hi), x] += w[src_lo:src_hi]
    return Gather(data, AcquisitionMeta(dt=dt, f0=f0))


def make_gathers(cfg: SynthConfig):
    """Generate ``cfg.n_gathers`` gathers of ``cfg.n_events`` linear events.

    Slopes and intercepts are uniform over the configured ranges; events
    within a gather are summed.  Each gather draws from a sub-stream seeded
    by (cfg.seed, index), so generation is reproducible and
    order-independent.
    """
    out = []
    for i in range(cfg.n_gathers):
        rng = np.random.default_rng([cfg.seed, i])
        acc = None
        for _ in range(cfg.n_events):
            slope = rng.uniform(*cfg.slope_range)
            t0 = rng.uniform(*cfg.t0_range)
            spec = EventSpec(slope=slope, t0=t0, amplitude=cfg.amplitude)
            g = render_event(cfg.n_t, cfg.n_x, cfg.dt, spec, cfg.f0)
            acc = g if acc is None else acc.with_samples(acc.samples + g.samples)
        out.append(acc)
    return out


def make_dataset(cfg: SynthConfig, n_trainval=None, trainval_ratio=0.75) -> Dataset:
    """Generate a dataset; by default every gather goes to the evaluation split."""
    gathers = make_gathers(cfg)
    n = len(gathers)
    if n_trainval is None:
        split = Split((), (), tuple(range(n)))
    else:
        split = split_dataset(n, n_trainval, trainval_ratio, cfg.seed)
    return Dataset(tuple(gathers), split, cfg.seed)
