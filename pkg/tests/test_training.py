"""Losses, Adam, the plateau schedule and the training loop."""

import numpy as np
import pytest

from seisrestore import (
    Adam,
    AcquisitionMeta,
    Gather,
    ParameterError,
    TrainConfig,
    build_unet,
    masked_mse_loss,
    mse_loss,
    plan_patches,
    train,
    write_history,
)
from seisrestore.errors import ConfigError
from seisrestore.training import EpochRecord


class TestLosses:
    def test_identical_patches(self):
        p = np.random.default_rng(0).normal(size=(4, 4))
        assert mse_loss(p, p) == 0.0

    def test_hand_value(self):
        p = np.array([[1.0, 2.0], [3.0, 4.0]])
        assert mse_loss(p, np.zeros((2, 2))) == 30.0  # 1+4+9+16

    def test_quadratic_homogeneity(self):
        rng = np.random.default_rng(1)
        a, b = rng.normal(size=(2, 5, 5))
        assert mse_loss(3 * a, 3 * b) == pytest.approx(9 * mse_loss(a, b))

    def test_masked_all_ones_equals_plain(self):
        rng = np.random.default_rng(2)
        a, b = rng.normal(size=(2, 6, 6))
        assert masked_mse_loss(a, b, np.ones((6, 6))) == pytest.approx(mse_loss(a, b))

    def test_masked_all_zeros(self):
        rng = np.random.default_rng(3)
        a, b = rng.normal(size=(2, 6, 6))
        assert masked_mse_loss(a, b, np.zeros((6, 6))) == 0.0

    def test_masked_hand_value(self):
        p = np.array([[1.0, 2.0], [3.0, 4.0]])
        m = np.array([[1.0, 0.0], [0.0, 1.0]])
        assert masked_mse_loss(p, np.zeros((2, 2)), m) == 17.0  # 1+16

    def test_shape_guard(self):
        with pytest.raises(ParameterError):
            mse_loss(np.zeros((2, 2)), np.zeros((3, 3)))


class TestAdam:
    def test_zero_gradient_no_change(self):
        p = {"w": np.array([1.0, 2.0])}
        opt = Adam(p.keys())
        opt.step(p, {"w": np.zeros(2)}, lr=0.1)
        assert np.array_equal(p["w"], [1.0, 2.0])

    def test_first_step_magnitude(self):
        # bias-corrected first step with g=1 moves by ~lr
        p = {"w": np.array([0.0])}
        opt = Adam(p.keys(), eps=1e-8)
        opt.step(p, {"w": np.array([1.0])}, lr=0.5)
        assert p["w"][0] == pytest.approx(-0.5, rel=1e-6)

    def test_deterministic(self):
        def run():
            p = {"w": np.array([1.0, -2.0])}
            opt = Adam(p.keys())
            rng = np.random.default_rng(0)
            for _ in range(20):
                opt.step(p, {"w": rng.normal(size=2)}, lr=0.01)
            return p["w"]

        assert np.array_equal(run(), run())

    def test_non_finite_gradient_rejected(self):
        p = {"w": np.array([1.0])}
        opt = Adam(p.keys())
        with pytest.raises(ParameterError):
            opt.step(p, {"w": np.array([np.nan])}, lr=0.1)


class TestTrainConfig:
    def test_defaults_follow_schedule_constants(self):
        cfg = TrainConfig(task="denoise")
        assert cfg.lr0 == 0.01
        assert cfg.patience0 == 10
        assert cfg.max_epochs == 100
        assert cfg.gain == 2000.0

    def test_bad_task(self):
        with pytest.raises(ConfigError):
            TrainConfig(task="upsample")

    def test_bad_lr(self):
        with pytest.raises(ConfigError):
            TrainConfig(task="denoise", lr0=0.0)


def make_pairs(n, seed, noisy=True):
    rng = np.random.default_rng(seed)
    pairs = []
    for _ in range(n):
        clean = rng.normal(size=(16, 16)).astype(np.float32) * 0.01
        meta = AcquisitionMeta(dt=0.006)
        g = Gather(clean, meta)
        corrupted = Gather(clean + (0.002 * rng.normal(size=(16, 16))).astype(np.float32), meta) if noisy else g
        pairs.append((g, corrupted, None))
    return pairs


class TestTrainLoop:
    def test_interpolate_with_empty_mask_keeps_initial_model(self):
        # no missing traces: the masked loss is zero at every step
        rng = np.random.default_rng(0)
        meta = AcquisitionMeta(dt=0.006)
        pairs = []
        for _ in range(3):
            g = Gather(rng.normal(size=(16, 16)).astype(np.float32), meta)
            pairs.append((g, g, np.zeros(16, dtype=bool)))
        grid = plan_patches((16, 16), 16, 16, 16)
        model = build_unet(16, base_channels=1, seed=2)
        before = model.snapshot()
        cfg = TrainConfig(task="interpolate", max_epochs=3, seed=0)
        result = train(model, pairs[:2], pairs[2:], grid, cfg)
        assert result.best_val_loss == 0.0
        after = model.state_tensors()
        for name, arr in before.items():
            if "running" in name:
                continue  # BN statistics still update in train mode
            assert np.array_equal(arr, after[name]), name

    def test_history_and_best_checkpoint(self):
        pairs = make_pairs(4, 1)
        grid = plan_patches((16, 16), 16, 16, 16)
        model = build_unet(16, base_channels=2, seed=0)
        cfg = TrainConfig(task="denoise", max_epochs=5, seed=1)
        result = train(model, pairs[:3], pairs[3:], grid, cfg)
        assert len(result.history) <= 5
        vals = [r.val_loss for r in result.history]
        assert result.best_val_loss == min(vals)
        assert result.history[result.best_epoch - 1].val_loss == result.best_val_loss

    def test_training_reduces_loss(self):
        pairs = make_pairs(4, 2)
        grid = plan_patches((16, 16), 16, 16, 16)
        model = build_unet(16, base_channels=2, seed=1)
        cfg = TrainConfig(task="denoise", max_epochs=5, seed=0)
        result = train(model, pairs[:3], pairs[3:], grid, cfg)
        assert result.history[-1].train_loss < result.history[0].train_loss

    def test_deterministic(self):
        pairs = make_pairs(3, 3)
        grid = plan_patches((16, 16), 16, 16, 16)

        def run():
            model = build_unet(16, base_channels=1, seed=4)
            cfg = TrainConfig(task="denoise", max_epochs=3, seed=5)
            result = train(model, pairs[:2], pairs[2:], grid, cfg)
            return result, model.snapshot()

        r1, s1 = run()
        r2, s2 = run()
        assert [vars(a) for a in r1.history] == [vars(b) for b in r2.history]
        for name in s1:
            assert np.array_equal(s1[name], s2[name]), name

    def test_empty_split_rejected(self):
        grid = plan_patches((16, 16), 16, 16, 16)
        model = build_unet(16, base_channels=1, seed=0)
        with pytest.raises(ConfigError):
            train(model, [], make_pairs(1, 0), grid, TrainConfig(task="denoise"))

    def test_interpolate_requires_mask(self):
        pairs = make_pairs(2, 0)
        grid = plan_patches((16, 16), 16, 16, 16)
        model = build_unet(16, base_channels=1, seed=0)
        cfg = TrainConfig(task="interpolate", max_epochs=1)
        with pytest.raises(ConfigError):
            train(model, pairs[:1], pairs[1:], grid, cfg)


class TestPlateauSchedule:
    def _run_schedule(self, val_losses, patience0=2):
        """Replay the plateau state machine against a fixed loss sequence."""
        from seisrestore.training import LR_DECIMATION, MAX_LR_DROPS, PLATEAU_REL_IMPROVEMENT

        lr = 0.01
        patience = patience0
        drops = 0
        plateau = 0
        best = np.inf
        trace = []
        for v in val_losses:
            if v <= best * (1 - PLATEAU_REL_IMPROVEMENT) or best is np.inf:
                best = v
                plateau = 0
            else:
                plateau += 1
            if plateau >= patience:
                if patience == 1 and drops >= MAX_LR_DROPS:
                    trace.append((lr, patience, "stop"))
                    break
                lr *= LR_DECIMATION
                drops += 1
                patience = max(1, patience // 2)
                plateau = 0
            trace.append((lr, patience, "run"))
        return trace

    def test_first_plateau_decimates_lr_and_halves_patience(self):
        trace = self._run_schedule([1.0, 1.0, 1.0], patience0=2)
        # epoch 3: two plateau epochs at patience 2 -> lr 0.001, patience 1
        assert trace[-1][0] == pytest.approx(0.001)
        assert trace[-1][1] == 1

    def test_training_schedule_fields_recorded(self):
        pairs = make_pairs(3, 7)
        grid = plan_patches((16, 16), 16, 16, 16)
        model = build_unet(16, base_channels=1, seed=0)
        cfg = TrainConfig(task="denoise", max_epochs=4, patience0=1, seed=0)
        result = train(model, pairs[:2], pairs[2:], grid, cfg)
        assert result.history[0].lr == 0.01
        assert result.history[0].patience == 1
        # patience0 = 1 keeps halving at 1; lr decimates on every plateau
        lrs = {r.lr for r in result.history}
        assert 0.01 in lrs


class TestHistoryFile:
    def test_write_history_csv(self, tmp_path):
        hist = [
            EpochRecord(1, 0.5, 0.6, 0.01, 10),
            EpochRecord(2, 0.25, 0.3, 0.01, 10),
        ]
        path = tmp_path / "history.csv"
        write_history(hist, path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "epoch,train_loss,val_loss,lr,patience"
        assert lines[1].startswith("1,0.5,0.6,0.01,10")
        assert len(lines) == 3
