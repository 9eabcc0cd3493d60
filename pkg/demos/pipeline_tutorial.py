"""End-to-end walkthrough: synthesize, corrupt, train, restore, evaluate.

Everything here is deliberately tiny (16x16 gathers, a one-channel-base
network, a handful of epochs) so the whole script finishes in well under a
minute on one CPU core. Scale the knobs up for real experiments; the code
path is identical.
"""

import numpy as np

from seisrestore import (
    RestoreJob,
    SynthConfig,
    TrainConfig,
    build_unet,
    make_gathers,
    plan_patches,
    restore_gather,
    snr,
    split_dataset,
    train,
    uniform_missing,
)

# 1. A small synthetic dataset of dipping-event shot gathers.
cfg = SynthConfig(n_gathers=8, n_t=16, n_x=16, dt=0.004, f0=27.0, seed=0)
gathers = make_gathers(cfg)
split = split_dataset(len(gathers), n_trainval=6, trainval_ratio=0.8, seed=1)
print(f"gathers: {len(gathers)}  train/val/eval: "
      f"{len(split.train)}/{len(split.validation)}/{len(split.evaluation)}")

# 2. Knock out 25% of the traces in every gather, uniformly at random.
#    Missing traces are zero-filled; the boolean mask records which ones.
corrupted, masks = [], []
for i, g in enumerate(gathers):
    c, m = uniform_missing(g, 25.0, seed=100 + i)
    corrupted.append(c)
    masks.append(m)
print(f"missing traces in gather 0: {masks[0].sum()} of {cfg.n_x}")

# 3. Train an interpolation network on (clean, corrupted, mask) triples.
#    The masked loss only scores samples the corruption removed, so known
#    samples never drive the weights.
grid = plan_patches((cfg.n_t, cfg.n_x), n=16, stride_t=16, stride_x=16)
model = build_unet(16, base_channels=2, seed=0)
tcfg = TrainConfig(task="interpolate", max_epochs=5, seed=2)
triples = [(gathers[i], corrupted[i], masks[i]) for i in range(len(gathers))]
result = train(
    model,
    [triples[i] for i in split.train],
    [triples[i] for i in split.validation],
    grid,
    tcfg,
)
for rec in result.history:
    print(f"  epoch {rec.epoch}: train {rec.train_loss:.3e} "
          f"val {rec.val_loss:.3e} lr {rec.lr:g}")
print(f"best epoch {result.best_epoch} (val {result.best_val_loss:.3e})")

# 4. Restore the held-out gathers. Known traces pass through bit-exactly;
#    only the masked traces are filled in by the network.
for i in split.evaluation:
    job = RestoreJob(model=model, task="interpolate", n=16, stride_t=16,
                     stride_x=16, gain=tcfg.gain, gather=corrupted[i],
                     trace_mask=masks[i])
    restored = restore_gather(job)
    kept = ~masks[i]
    assert np.array_equal(restored.samples[:, kept], corrupted[i].samples[:, kept])
    print(f"eval gather {i}: corrupted {snr(gathers[i], corrupted[i]):6.2f} dB"
          f" -> restored {snr(gathers[i], restored):6.2f} dB")
