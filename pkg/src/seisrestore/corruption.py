"""Corruption models: missing traces (uniform, bursty, regular) and noise.

Every operator is a pure function of ``(gather, parameters, seed)`` and is
bit-reproducible.  Missing-trace operators return the corrupted gather
(missing columns exactly zero) together with a per-trace boolean mask,
True = missing.  Noise operators return only the corrupted gather.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import convolve1d
from scipy.signal import firwin

from .errors import ConfigError, ParameterError
from .gather import Gather
from .synth import default_half_len, normalize_energy, ricker

LOWPASS_ORDER = 101  # linear-phase windowed-sinc FIR, Hamming window


def _zero_traces(g: Gather, trace_mask: np.ndarray):
    data = g.samples.copy()
    data[:, trace_mask] = 0.0
    return g.with_samples(data), trace_mask


def uniform_missing(g: Gather, h_percent: float, seed: int):
    """Zero exactly ``round(h_percent/100 * n_x)`` traces, chosen uniformly."""
    if not 0 <= h_percent < 100:
        raise ParameterError(f"H must lie in [0, 100), got {h_percent}")
    n_missing = int(np.floor(h_percent / 100.0 * g.n_x + 0.5))
    rng = np.random.default_rng(seed)
    chosen = rng.choice(g.n_x, size=n_missing, replace=False)
    mask = np.zeros(g.n_x, dtype=bool)
    mask[chosen] = True
    return _zero_traces(g, mask)


@dataclass(frozen=True)
class BurstChain:
    """Two-state Markov chain over traces: NM (present) and M (missing).

    ``alpha`` is the marginal missing probability, ``beta`` the mean burst
    length.  Transition probabilities: q = P(M -> M) = 1 - 1/beta and
    p = P(NM -> M) = alpha / (beta * (1 - alpha)).  Starting the chain from
    its stationary distribution makes P(missing) = alpha for every trace.
    """

    alpha: float
    beta: float

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ParameterError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.beta < 1:
            raise ParameterError(f"beta must be >= 1, got {self.beta}")
        if self.p > 1:
            raise ParameterError(
                f"alpha={self.alpha} exceeds beta/(1+beta)={self.beta / (1 + self.beta):.4f}; "
                "transition probability p would exceed 1"
            )

    @property
    def q(self) -> float:
        return 1.0 - 1.0 / self.beta

    @property
    def p(self) -> float:
        return self.alpha / (self.beta * (1.0 - self.alpha))

    def simulate(self, n: int, rng) -> np.ndarray:
        """Simulate n traces left to right; True = missing."""
        u = rng.random(n)
        out = np.empty(n, dtype=bool)
        state = u[0] < self.alpha  # stationary start
        out[0] = state
        for i in range(1, n):
            state = u[i] < (self.q if state else self.p)
            out[i] = state
        return out


def burst_missing(g: Gather, alpha: float, beta: float, seed: int):
    """Markov-burst missing traces with marginal rate alpha, mean run beta."""
    chain = BurstChain(alpha, beta)
    rng = np.random.default_rng(seed)
    mask = chain.simulate(g.n_x, rng)
    return _zero_traces(g, mask)


def regular_missing(g: Gather, factor: int):
    """Keep every ``factor``-th trace (index 0 mod factor), zero the rest."""
    if factor < 2:
        raise ParameterError(f"decimation factor must be >= 2, got {factor}")
    mask = np.arange(g.n_x) % factor != 0
    return _zero_traces(g, mask)


def awgn_sigma(g: Gather, sigma: float, seed: int) -> Gather:
    """Add i.i.d. zero-mean Gaussian noise with fixed standard deviation."""
    if sigma < 0:
        raise ParameterError("sigma must be non-negative")
    rng = np.random.default_rng(seed)
    noise = rng.normal(0.0, sigma, size=g.samples.shape)
    return g.with_samples(g.samples + noise)


def awgn_snr(g: Gather, snr_db: float, seed: int) -> Gather:
    """Add white Gaussian noise reaching signal-to-noise ratio ``snr_db``.

    Noise variance is ``P_sig / 10^(S/10)`` with ``P_sig`` the mean squared
    sample of the gather.
    """
    p_sig = float(np.mean(g.samples.astype(np.float64) ** 2))
    if p_sig == 0:
        raise ParameterError("cannot set an S/N target on an all-zero gather")
    sigma = np.sqrt(p_sig / 10.0 ** (snr_db / 10.0))
    return awgn_sigma(g, sigma, seed)


def spike_noise(g: Gather, d_percent: float, f0: float, seed: int) -> Gather:
    """Spike-like noise: sparse min/max impulses convolved with a Ricker.

    Exactly ``round(d/100 * n_t * n_x)`` samples of a spike field are set to
    the gather minimum or maximum (equal probability); every noise trace is
    then convolved along time with a unit-energy Ricker of frequency f0.
    """
    if not 0 < d_percent < 100:
        raise ParameterError(f"spike density must lie in (0, 100), got {d_percent}")
    n_total = g.n_t * g.n_x
    n_spikes = int(np.floor(d_percent / 100.0 * n_total + 0.5))
    rng = np.random.default_rng(seed)
    flat_idx = rng.choice(n_total, size=n_spikes, replace=False)
    lo, hi = float(g.samples.min()), float(g.samples.max())
    values = np.where(rng.random(n_spikes) < 0.5, lo, hi)
    field = np.zeros(n_total, dtype=np.float64)
    field[flat_idx] = values
    field = field.reshape(g.n_t, g.n_x)
    wavelet = normalize_energy(ricker(f0, g.meta.dt, default_half_len(f0, g.meta.dt)))
    noise = np.empty_like(field)
    for x in range(g.n_x):
        noise[:, x] = np.convolve(field[:, x], wavelet, mode="same")
    return g.with_samples(g.samples + noise)


def lowpass_taps(cutoff_hz: float, dt: float) -> np.ndarray:
    """Unit-DC-gain FIR taps used by :func:`bandlimited_noise`."""
    nyquist = 1.0 / (2.0 * dt)
    if not 0 < cutoff_hz < nyquist:
        raise ParameterError(f"cutoff must lie in (0, {nyquist} Hz), got {cutoff_hz}")
    return firwin(LOWPASS_ORDER, cutoff_hz, window="hamming", fs=1.0 / dt)


def bandlimited_noise(g: Gather, sigma: float, cutoff_hz: float, seed: int) -> Gather:
    """Add per-trace Gaussian noise low-passed at ``cutoff_hz``."""
    taps = lowpass_taps(cutoff_hz, g.meta.dt)
    rng = np.random.default_rng(seed)
    noise = rng.normal(0.0, sigma, size=g.samples.shape)
    filtered = convolve1d(noise, taps, axis=0, mode="constant", cval=0.0)
    return g.with_samples(g.samples + filtered)


def normalize_trace_range(g: Gather) -> Gather:
    """Scale each trace so its max - min equals 1; constant traces unchanged."""
    data = g.samples.astype(np.float64)
    span = data.max(axis=0) - data.min(axis=0)
    scale = np.where(span > 0, 1.0 / np.where(span > 0, span, 1.0), 1.0)
    return g.with_samples(data * scale[None, :])


@dataclass(frozen=True)
class CorruptionSpec:
    """Tagged corruption description, serializable to/from JSON.

    Variants and parameters:
      uniform(H) | burst(alpha, beta) | regular(factor) | awgn_snr(S) |
      awgn_sigma(sigma) | spike(d, f0) | bandlimited(sigma, cutoff)
    """

    variant: str
    params: dict
    seed: int = 0

    _VARIANTS = (
        "uniform",
        "burst",
        "regular",
        "awgn_snr",
        "awgn_sigma",
        "spike",
        "bandlimited",
    )

    def __post_init__(self):
        if self.variant not in self._VARIANTS:
            raise ConfigError(f"unknown corruption variant {self.variant!r}")

    def apply(self, g: Gather, seed=None):
        """Apply to one gather; returns (corrupted, trace_mask or None)."""
        seed = self.seed if seed is None else seed
        p = self.params
        if self.variant == "uniform":
            return uniform_missing(g, p["H"], seed)
        if self.variant == "burst":
            return burst_missing(g, p["alpha"], p["beta"], seed)
        if self.variant == "regular":
            return regular_missing(g, p["factor"])
        if self.variant == "awgn_snr":
            return awgn_snr(g, p["S"], seed), None
        if self.variant == "awgn_sigma":
            return awgn_sigma(g, p["sigma"], seed), None
        if self.variant == "spike":
            return spike_noise(g, p["d"], p.get("f0", g.meta.f0), seed), None
        return bandlimited_noise(g, p["sigma"], p["cutoff"], seed), None

    def to_json(self) -> str:
        return json.dumps({"variant": self.variant, "params": self.params, "seed": self.seed})

    @classmethod
    def from_dict(cls, doc) -> "CorruptionSpec":
        try:
            return cls(doc["variant"], dict(doc["params"]), int(doc.get("seed", 0)))
        except KeyError as exc:
            raise ConfigError(f"corruption spec missing field {exc}") from exc
