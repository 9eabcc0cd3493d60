"""Deployment pipeline: patches through the network and back to a gather."""

import numpy as np
import pytest

from seisrestore import (
    AcquisitionMeta,
    Gather,
    RestoreJob,
    build_unet,
    restore_dataset,
    restore_gather,
    uniform_missing,
    write_restore_report,
)
from seisrestore.errors import ConfigError


def random_gather(shape, seed):
    rng = np.random.default_rng(seed)
    return Gather(rng.normal(size=shape).astype(np.float32) * 0.01, AcquisitionMeta(dt=0.006))


def job_for(gather, task, mask=None, model=None, n=16):
    if model is None:
        model = build_unet(n, base_channels=1, seed=0)
    return RestoreJob(
        model=model,
        task=task,
        n=n,
        stride_t=n,
        stride_x=n,
        gain=2000.0,
        gather=gather,
        trace_mask=mask,
    )


class TestRestoreJob:
    def test_bad_task(self):
        with pytest.raises(ConfigError):
            job_for(random_gather((16, 16), 0), "sharpen")

    def test_patch_size_mismatch(self):
        model = build_unet(32, base_channels=1, seed=0)
        with pytest.raises(ConfigError):
            job_for(random_gather((16, 16), 0), "denoise", model=model)

    def test_interpolate_needs_mask(self):
        with pytest.raises(ConfigError):
            job_for(random_gather((16, 16), 0), "interpolate")


class TestRestoreGather:
    def test_interpolate_empty_mask_is_identity(self):
        g = random_gather((16, 16), 1)
        out = restore_gather(job_for(g, "interpolate", mask=np.zeros(16, dtype=bool)))
        assert out.samples.tobytes() == g.samples.tobytes()

    def test_known_trace_passthrough_bit_exact(self):
        g = random_gather((32, 32), 2)
        corrupted, mask = uniform_missing(g, 30.0, seed=3)
        model = build_unet(16, base_channels=1, seed=0)
        job = RestoreJob(
            model=model,
            task="interpolate",
            n=16,
            stride_t=8,
            stride_x=8,
            gain=2000.0,
            gather=corrupted,
            trace_mask=mask,
        )
        out = restore_gather(job)
        keep = ~mask
        assert out.samples[:, keep].tobytes() == corrupted.samples[:, keep].tobytes()
        # masked traces come from the network, not the (zero) input
        assert out.samples.shape == corrupted.samples.shape

    def test_denoise_output_shape_and_determinism(self):
        g = random_gather((32, 16), 4)
        job = job_for(g, "denoise")
        a = restore_gather(job)
        b = restore_gather(job)
        assert a.samples.shape == g.samples.shape
        assert a.samples.tobytes() == b.samples.tobytes()

    def test_joint_ignores_mask_at_merge(self):
        g = random_gather((16, 16), 5)
        mask = np.zeros(16, dtype=bool)
        mask[3] = True
        out_with = restore_gather(job_for(g, "joint", mask=mask))
        out_without = restore_gather(job_for(g, "joint"))
        assert out_with.samples.tobytes() == out_without.samples.tobytes()


class TestRestoreDataset:
    def test_empty_jobs(self):
        restored, rows = restore_dataset([])
        assert restored == []
        assert rows == []

    def test_single_job_report(self):
        g = random_gather((16, 16), 6)
        restored, rows = restore_dataset([job_for(g, "denoise")], clean_gathers=[g])
        assert len(restored) == 1
        assert len(rows) == 1
        assert rows[0]["index"] == 0
        assert "snr_db" in rows[0]
        assert rows[0]["seconds"] > 0

    def test_report_csv(self, tmp_path):
        rows = [{"index": 0, "seconds": 0.5, "snr_db": 21.5}]
        path = tmp_path / "report.csv"
        write_restore_report(rows, path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "index,snr_db"  # timings opt-in
        write_restore_report(rows, path, include_seconds=True)
        assert path.read_text().splitlines()[0] == "index,seconds,snr_db"
