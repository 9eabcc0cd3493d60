"""Tour of the corruption models and their statistics.

Covers the trace-removal family (uniform, burst, regular decimation) and the
noise family (white Gaussian by sigma or by target S/N, spiky traces,
band-limited noise), then verifies the burst model's Markov-chain statistics
against their closed forms with a quick Monte Carlo.
"""

import numpy as np

from seisrestore import (
    AcquisitionMeta,
    Gather,
    SynthConfig,
    awgn_sigma,
    awgn_snr,
    bandlimited_noise,
    burst_missing,
    make_gathers,
    regular_missing,
    snr,
    spike_noise,
    uniform_missing,
)
from seisrestore.corruption import BurstChain

g = make_gathers(SynthConfig(n_gathers=1, n_t=64, n_x=48, seed=3))[0]

# --- trace removal -------------------------------------------------------
c, m = uniform_missing(g, 30.0, seed=0)
print(f"uniform H=30%: {m.sum()} of 48 traces removed (exact count)")

c, m = burst_missing(g, alpha=0.3, beta=2.0, seed=0)
runs = np.diff(np.flatnonzero(np.diff(np.r_[0, m.view(np.int8), 0])))[::2]
print(f"burst alpha=0.3 beta=2: {m.sum()} removed, run lengths {runs.tolist()}")

c, m = regular_missing(g, 2)
print(f"decimation factor 2: every other trace, {m.sum()} removed")

# --- additive noise ------------------------------------------------------
c = awgn_sigma(g, 0.1, seed=1)
print(f"awgn sigma=0.1: S/N {snr(g, c):.2f} dB")

c = awgn_snr(g, 0.0, seed=1)
print(f"awgn target S/N 0 dB: measured {snr(g, c):.2f} dB")

c = spike_noise(g, 2.0, f0=27.0, seed=1)
print(f"spikes d=2%: S/N {snr(g, c):.2f} dB")

c = bandlimited_noise(g, 0.1, cutoff_hz=60.0, seed=1)
print(f"band-limited sigma=0.1, 60 Hz cutoff: S/N {snr(g, c):.2f} dB")

# --- burst-model statistics ---------------------------------------------
# The two-state chain with q = 1 - 1/beta and p = alpha/(beta(1-alpha)) has
# marginal missing probability alpha and geometric bursts of mean beta.
alpha, beta = 0.3, 3.0
chain = BurstChain(alpha, beta)
print(f"alpha={alpha} beta={beta}: p={chain.p:.4f} q={chain.q:.4f}")

big = Gather(np.zeros((2, 100_000), dtype=np.float32), AcquisitionMeta(dt=0.004))
_, mask = burst_missing(big, alpha, beta, seed=7)
lengths = np.diff(np.flatnonzero(np.diff(np.r_[0, mask.view(np.int8), 0])))[::2]
print(f"monte carlo over {mask.size} traces:")
print(f"  missing fraction {mask.mean():.4f} (target {alpha})")
print(f"  mean burst {lengths.mean():.3f} (target {beta})")
print(f"  burst std  {lengths.std():.3f} (geometric: {np.sqrt(1 - 1/beta) * beta:.3f})")
