"""Ricker wavelet and dipping-event gather generation."""

import numpy as np
import pytest

from seisrestore import (
    EventSpec,
    ParameterError,
    SynthConfig,
    make_dataset,
    make_gathers,
    normalize_energy,
    render_event,
    ricker,
)
from seisrestore.synth import default_half_len


class TestRicker:
    def test_peak_at_center(self):
        w = ricker(27.0, 0.006, 16)
        assert w[16] == 1.0

    def test_even_symmetry(self):
        w = ricker(27.0, 0.006, 20)
        assert np.allclose(w, w[::-1])

    def test_zero_crossings(self):
        # roots of 1 - 2*pi^2*f0^2*t^2 at t = +-1/(pi*f0*sqrt(2));
        # for f0 = 27 Hz that is +-8.34 ms
        f0 = 27.0
        t_cross = 1.0 / (np.pi * f0 * np.sqrt(2.0))
        assert t_cross == pytest.approx(0.00834, abs=5e-6)
        dt = 1e-5
        half = 2000
        w = ricker(f0, dt, half)
        t = (np.arange(2 * half + 1) - half) * dt
        sign_flips = t[:-1][np.diff(np.sign(w)) != 0]
        assert np.any(np.abs(sign_flips - t_cross) < 2 * dt)
        assert np.any(np.abs(sign_flips + t_cross) < 2 * dt)

    def test_nyquist_guard(self):
        with pytest.raises(ParameterError):
            ricker(90.0, 0.006, 16)

    def test_near_zero_mean(self):
        w = ricker(27.0, 0.002, default_half_len(27.0, 0.002))
        assert abs(np.sum(w) * 0.002) < 1e-3 * np.max(np.abs(w))


class TestNormalizeEnergy:
    def test_three_four_five(self):
        assert np.allclose(normalize_energy([3.0, 4.0]), [0.6, 0.8])

    def test_idempotent(self):
        w = normalize_energy(np.random.default_rng(0).normal(size=50))
        assert np.allclose(normalize_energy(w), w, rtol=1e-12)

    def test_unit_energy_ricker(self):
        w = normalize_energy(ricker(27.0, 0.006, 32))
        assert np.sum(w * w) == pytest.approx(1.0, rel=1e-6)

    def test_zero_signal_rejected(self):
        with pytest.raises(ParameterError):
            normalize_energy(np.zeros(5))


class TestRenderEvent:
    def test_flat_event_identical_traces(self):
        g = render_event(64, 16, 0.006, EventSpec(slope=0.0, t0=0.2), 27.0)
        assert np.allclose(g.samples, g.samples[:, :1])

    def test_zero_amplitude(self):
        g = render_event(64, 16, 0.006, EventSpec(slope=0.0, t0=0.2, amplitude=0.0), 27.0)
        assert not g.samples.any()

    def test_unit_slope_placement(self):
        # slope of one sample per trace puts the event peak on row
        # round(t0/dt) + x of trace x
        dt = 0.006
        g = render_event(128, 8, dt, EventSpec(slope=dt, t0=0.3), 27.0)
        base = round(0.3 / dt)
        for x in range(8):
            assert np.argmax(g.samples[:, x]) == base + x

    def test_amplitude_scaling(self):
        a = render_event(64, 8, 0.006, EventSpec(slope=0.0, t0=0.2, amplitude=1.0), 27.0)
        b = render_event(64, 8, 0.006, EventSpec(slope=0.0, t0=0.2, amplitude=2.5), 27.0)
        assert np.allclose(b.samples, 2.5 * a.samples, rtol=1e-6)


class TestMakeGathers:
    def test_shapes_and_count(self):
        cfg = SynthConfig(n_gathers=5, n_t=128, n_x=64, seed=0)
        gathers = make_gathers(cfg)
        assert len(gathers) == 5
        assert all(g.samples.shape == (128, 64) for g in gathers)

    def test_deterministic(self):
        cfg = SynthConfig(n_gathers=3, n_t=64, n_x=32, seed=12)
        a = make_gathers(cfg)
        b = make_gathers(cfg)
        for ga, gb in zip(a, b):
            assert ga.samples.tobytes() == gb.samples.tobytes()

    def test_degenerate_ranges_match_render(self):
        cfg = SynthConfig(
            n_gathers=1,
            n_t=64,
            n_x=16,
            slope_range=(0.006, 0.006),
            t0_range=(0.2, 0.2),
            seed=0,
        )
        (g,) = make_gathers(cfg)
        direct = render_event(64, 16, cfg.dt, EventSpec(slope=0.006, t0=0.2), cfg.f0)
        assert np.array_equal(g.samples, direct.samples)

    def test_every_gather_nonzero_and_finite(self):
        for g in make_gathers(SynthConfig(n_gathers=20, n_t=96, n_x=48, seed=5)):
            assert np.all(np.isfinite(g.samples))
            assert g.samples.any()


class TestMakeDataset:
    def test_paper_scale_shape_claim(self):
        cfg = SynthConfig(n_gathers=251, n_t=512, n_x=256, seed=0)
        ds = make_dataset(cfg, n_trainval=251, trainval_ratio=0.75)
        assert len(ds.gathers) == 251
        assert ds.gathers[0].samples.shape == (512, 256)
        assert len(ds.split.train) == 188

    def test_default_split_all_evaluation(self):
        ds = make_dataset(SynthConfig(n_gathers=3, n_t=32, n_x=32, seed=0))
        assert len(ds.split.evaluation) == 3
