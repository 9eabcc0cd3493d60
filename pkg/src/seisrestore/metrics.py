"""Quantitative metrics, Fourier panels for alias inspection, and reports."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .errors import ParameterError


def _as_array(g):
    """Accept either a Gather or a bare 2D array."""
    samples = getattr(g, "samples", g)
    return np.asarray(samples, dtype=np.float64)


def snr(clean, restored) -> float:
    """Signal-to-noise ratio in dB: 10 log10(||I||_F^2 / ||I - Ihat||_F^2).

    Returns ``math.inf`` when the reconstruction error is exactly zero.
    """
    i = _as_array(clean)
    i_hat = _as_array(restored)
    if i.shape != i_hat.shape:
        raise ParameterError(f"shape mismatch: {i.shape} vs {i_hat.shape}")
    sig = np.sum(i * i)
    if sig == 0:
        raise ParameterError("S/N is undefined for an all-zero reference")
    err = np.sum((i - i_hat) ** 2)
    if err == 0:
        return math.inf
    return 10.0 * math.log10(sig / err)


def psnr(clean, restored, s_max: float = 1.0) -> float:
    """Peak variant: 10 log10(s_max / var(I - Ihat)).

    ``s_max`` is the dynamic range of the clean signal; the variance is the
    mean squared deviation of the error from its mean.  A zero-variance
    error returns ``math.inf``.
    """
    if not s_max > 0:
        raise ParameterError("s_max must be positive")
    i = _as_array(clean)
    i_hat = _as_array(restored)
    if i.shape != i_hat.shape:
        raise ParameterError(f"shape mismatch: {i.shape} vs {i_hat.shape}")
    var = float(np.var(i - i_hat))
    if var == 0:
        return math.inf
    return 10.0 * math.log10(s_max / var)


def spectrum_mag(g) -> np.ndarray:
    """Magnitude of the 2D DFT (f-k panel), zero frequency centered."""
    data = _as_array(g)
    return np.abs(np.fft.fftshift(np.fft.fft2(data)))


def alias_energy_ratio(g, f0: float = None, dt: float = None) -> float:
    """Fraction of spectral energy in the outer wavenumber half-band.

    Factor-2 trace decimation replicates the f-k spectrum at wavenumbers
    shifted by half the sampled band, so replica energy lands at
    ``|k| >= k_nyq / 2``.  The ratio of energy in that outer half-band to
    the total is small for well-sampled low-dip data and grows when alias
    replicas appear.  When ``f0`` (and ``dt``, taken from the gather when
    available) is given, only temporal frequencies up to ``3 * f0`` are
    inspected, which is where the signal band lives.
    """
    data = _as_array(g)
    n_t, n_x = data.shape
    power = np.abs(np.fft.fft2(data)) ** 2
    f = np.fft.fftfreq(n_t, d=dt if dt else getattr(getattr(g, "meta", None), "dt", 1.0))
    k_frac = np.fft.fftfreq(n_x)  # cycles per trace, in [-0.5, 0.5)
    if f0 is not None:
        band = np.abs(f) <= 3.0 * f0
        power = power[band, :]
    outer = np.abs(k_frac) >= 0.25  # |k| >= half of the 0.5 Nyquist
    total = power.sum()
    if total == 0:
        return 0.0
    return float(power[:, outer].sum() / total)


def write_metrics_csv(rows, path, fieldnames=None):
    """Write per-gather metric rows; +inf values are flagged as ``inf``."""
    if fieldnames is None:
        fieldnames = list(rows[0].keys()) if rows else ["index", "snr_db"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames, extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            out = {}
            for key, value in row.items():
                if isinstance(value, float) and math.isinf(value):
                    out[key] = "inf"
                elif isinstance(value, float):
                    out[key] = repr(value)
                else:
                    out[key] = value
            writer.writerow(out)


def write_table_csv(row_name, row_values, col_name, col_values, values, path):
    """Grid of results, rows = one corruption parameter, columns = the other."""
    values = np.asarray(values, dtype=float)
    if values.shape != (len(row_values), len(col_values)):
        raise ParameterError(
            f"values shape {values.shape} != ({len(row_values)}, {len(col_values)})"
        )
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"{row_name}\\{col_name}"] + list(col_values))
        for label, row in zip(row_values, values):
            writer.writerow([label] + [repr(float(v)) for v in row])


def save_gather_png(g, path, vmin=None, vmax=None):
    """Grayscale raster of a gather, 8-bit, with a vmin/vmax sidecar JSON."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    data = _as_array(g)
    if vmin is None:
        vmin = float(data.min())
    if vmax is None:
        vmax = float(data.max())
    if vmax == vmin:
        vmax = vmin + 1.0
    plt.imsave(path, data, cmap="gray", vmin=vmin, vmax=vmax)
    Path(str(path) + ".json").write_text(
        json.dumps({"vmin": vmin, "vmax": vmax, "cmap": "gray"}) + "\n", encoding="utf-8"
    )


def save_error_png(clean, restored, path):
    """Error panel with a symmetric diverging colormap, clipped at p99."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    err = _as_array(restored) - _as_array(clean)
    clip = float(np.percentile(np.abs(err), 99.0))
    if clip == 0:
        clip = 1.0
    plt.imsave(path, err, cmap="seismic", vmin=-clip, vmax=clip)
    Path(str(path) + ".json").write_text(
        json.dumps({"vmin": -clip, "vmax": clip, "cmap": "seismic"}) + "\n",
        encoding="utf-8",
    )
