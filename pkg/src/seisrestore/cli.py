"""Command-line workflow: synth | corrupt | train | restore | eval | spectrum | report.

Every subcommand takes all randomness from an explicit ``--seed``, writes a
``manifest.json`` describing the run into its output directory, and exits
nonzero with a one-line ``error: <category>: <message>`` on failure.
Wall-clock timings are recorded only with ``--timings`` so that reruns with
identical seeds produce byte-identical output trees.
"""

from __future__ import annotations

import functools
import json
import math
import sys
import time
from pathlib import Path

import click
import numpy as np

from . import __version__
from .corruption import CorruptionSpec
from .errors import ConfigError, FormatError, MissingInputError, ParameterError, SeisError
from .gather import (
    Split,
    load_gather,
    load_manifest,
    load_mask,
    save_gather,
    save_manifest,
    save_mask,
    split_dataset,
    trace_to_sample_mask,
)
from .metrics import (
    alias_energy_ratio,
    psnr,
    save_gather_png,
    snr,
    spectrum_mag,
    write_metrics_csv,
)
from .patches import plan_patches
from .restoration import RestoreJob, restore_gather
from .synth import SynthConfig, make_gathers
from .training import TrainConfig, train, write_history
from .unet import build_unet, load_checkpoint, save_checkpoint

EXIT_CONFIG = 3
EXIT_MISSING = 4
EXIT_FORMAT = 5
EXIT_PARAMETER = 6
EXIT_INTERNAL = 10

_EXIT_CODES = {
    ConfigError: EXIT_CONFIG,
    MissingInputError: EXIT_MISSING,
    FormatError: EXIT_FORMAT,
    ParameterError: EXIT_PARAMETER,
}


def _handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except SeisError as exc:
            click.echo(f"error: {exc.category}: {exc}", err=True)
            sys.exit(_EXIT_CODES.get(type(exc), EXIT_INTERNAL))

    return wrapper


def _write_experiment_manifest(out_dir, subcommand, config, seed, timings=None):
    doc = {
        "tool_version": __version__,
        "subcommand": subcommand,
        "config": config,
        "seed": seed,
    }
    if timings is not None:
        doc["timings"] = timings
    path = Path(out_dir) / "manifest.json"
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _gather_name(i):
    return f"g{i:04d}.sgth"


def _mask_name(i):
    return f"g{i:04d}.smsk"


@click.group()
@click.version_option(__version__)
def main():
    """Seismic shot-gather interpolation and denoising toolkit."""


@main.command()
@click.option("--out-dir", type=click.Path(), required=True)
@click.option("--n", "n_gathers", type=int, required=True, help="Number of gathers.")
@click.option("--nt", type=int, required=True, help="Time samples per trace.")
@click.option("--nx", type=int, required=True, help="Traces per gather.")
@click.option("--dt", type=float, default=0.006, show_default=True)
@click.option("--f0", type=float, default=27.0, show_default=True)
@click.option("--amplitude", type=float, default=1.0, show_default=True)
@click.option("--events", type=int, default=1, show_default=True, help="Events per gather.")
@click.option("--trainval", type=int, default=None, help="Gathers reserved for train+val.")
@click.option("--ratio", type=float, default=0.75, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--timings", is_flag=True, default=False)
@_handle_errors
def synth(out_dir, n_gathers, nt, nx, dt, f0, amplitude, events, trainval, ratio, seed, timings):
    """Generate a synthetic dipping-event dataset."""
    t0 = time.perf_counter()
    cfg = SynthConfig(
        n_gathers=n_gathers, n_t=nt, n_x=nx, dt=dt, f0=f0, amplitude=amplitude,
        n_events=events, seed=seed
    )
    gathers = make_gathers(cfg)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, g in enumerate(gathers):
        name = _gather_name(i)
        save_gather(g, out / name)
        paths.append(name)
    if trainval is None:
        split = Split((), (), tuple(range(n_gathers)))
    else:
        split = split_dataset(n_gathers, trainval, ratio, seed)
    save_manifest(paths, split, seed, out / "dataset.json")
    elapsed = {"seconds": time.perf_counter() - t0} if timings else None
    _write_experiment_manifest(
        out,
        "synth",
        {
            "n": n_gathers,
            "nt": nt,
            "nx": nx,
            "dt": dt,
            "f0": f0,
            "amplitude": amplitude,
            "events": events,
            "trainval": trainval,
            "ratio": ratio,
        },
        seed,
        elapsed,
    )
    click.echo(f"wrote {n_gathers} gathers to {out}")


@main.command()
@click.option("--dataset", type=click.Path(), required=True, help="Dataset manifest JSON.")
@click.option("--out-dir", type=click.Path(), required=True)
@click.option(
    "--variant",
    type=click.Choice(
        ["uniform", "burst", "regular", "awgn_snr", "awgn_sigma", "spike", "bandlimited"]
    ),
    required=True,
)
@click.option("--H", "h_percent", type=float, default=None, help="Missing-trace percentage.")
@click.option("--alpha", type=float, default=None, help="Burst marginal missing probability.")
@click.option("--beta", type=float, default=None, help="Burst mean length.")
@click.option("--factor", type=int, default=None, help="Regular decimation factor.")
@click.option("--snr-db", type=float, default=None, help="AWGN target S/N in dB.")
@click.option("--sigma", type=float, default=None, help="Noise standard deviation.")
@click.option("--density", type=float, default=None, help="Spike density percentage.")
@click.option("--cutoff", type=float, default=None, help="Low-pass cutoff in Hz.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--timings", is_flag=True, default=False)
@_handle_errors
def corrupt(
    dataset, out_dir, variant, h_percent, alpha, beta, factor, snr_db, sigma, density,
    cutoff, seed, timings,
):
    """Corrupt every gather of a dataset with one corruption model."""
    t0 = time.perf_counter()
    params = _corruption_params(
        variant, h_percent, alpha, beta, factor, snr_db, sigma, density, cutoff
    )
    spec = CorruptionSpec(variant, params, seed)
    paths, split, ds_seed = load_manifest(dataset)
    base = Path(dataset).parent
    out = Path(out_dir)
    (out / "masks").mkdir(parents=True, exist_ok=True)
    names = []
    for i, rel in enumerate(paths):
        rel = Path(rel)
        g = load_gather(rel if rel.is_absolute() else base / rel)
        sub_seed = int(np.random.SeedSequence([seed, i]).generate_state(1)[0])
        corrupted, trace_mask = spec.apply(g, seed=sub_seed)
        name = _gather_name(i)
        save_gather(corrupted, out / name)
        names.append(name)
        if trace_mask is not None:
            save_mask(trace_to_sample_mask(trace_mask, g.n_t), out / "masks" / _mask_name(i))
    save_manifest(names, split, ds_seed, out / "dataset.json")
    (out / "provenance.json").write_text(
        json.dumps({"corruption": {"variant": variant, "params": params, "seed": seed}},
                   indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    elapsed = {"seconds": time.perf_counter() - t0} if timings else None
    _write_experiment_manifest(
        out, "corrupt", {"dataset": str(dataset), "variant": variant, "params": params},
        seed, elapsed,
    )
    click.echo(f"wrote {len(names)} corrupted gathers to {out}")


def _corruption_params(variant, h_percent, alpha, beta, factor, snr_db, sigma, density, cutoff):
    required = {
        "uniform": {"H": h_percent},
        "burst": {"alpha": alpha, "beta": beta},
        "regular": {"factor": factor},
        "awgn_snr": {"S": snr_db},
        "awgn_sigma": {"sigma": sigma},
        "spike": {"d": density},
        "bandlimited": {"sigma": sigma, "cutoff": cutoff},
    }[variant]
    missing = [k for k, v in required.items() if v is None]
    if missing:
        raise ConfigError(f"variant {variant!r} requires parameters: {', '.join(missing)}")
    return required


@main.command(name="train")
@click.option("--clean", type=click.Path(), required=True, help="Clean dataset manifest.")
@click.option("--corrupted", type=click.Path(), required=True, help="Corrupted dataset dir.")
@click.option("--out-dir", type=click.Path(), required=True)
@click.option("--task", type=click.Choice(["denoise", "interpolate", "joint"]), required=True)
@click.option("--patch", "patch_n", type=int, default=128, show_default=True)
@click.option("--stride-t", type=int, default=None, help="Default: patch size.")
@click.option("--stride-x", type=int, default=None, help="Default: patch size.")
@click.option("--epochs", type=int, default=100, show_default=True)
@click.option("--lr", type=float, default=0.01, show_default=True)
@click.option("--patience", type=int, default=10, show_default=True)
@click.option("--gain", type=float, default=2000.0, show_default=True)
@click.option("--base-channels", type=int, default=64, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--timings", is_flag=True, default=False)
@_handle_errors
def train_cmd(
    clean, corrupted, out_dir, task, patch_n, stride_t, stride_x, epochs, lr, patience,
    gain, base_channels, seed, timings,
):
    """Train a U-net on corrupted/clean gather pairs."""
    t0 = time.perf_counter()
    stride_t = stride_t or patch_n
    stride_x = stride_x or patch_n
    clean_paths, split, _ = load_manifest(clean)
    corr_paths, corr_split, _ = load_manifest(Path(corrupted) / "dataset.json")
    if len(clean_paths) != len(corr_paths):
        raise ConfigError("clean and corrupted datasets have different sizes")
    clean_base = Path(clean).parent
    corr_base = Path(corrupted)

    def pair(i):
        cp = Path(clean_paths[i])
        g_clean = load_gather(cp if cp.is_absolute() else clean_base / cp)
        g_corr = load_gather(corr_base / corr_paths[i])
        mask_path = corr_base / "masks" / _mask_name(i)
        trace_mask = None
        if mask_path.exists():
            trace_mask = load_mask(mask_path).any(axis=0)
        return g_clean, g_corr, trace_mask

    train_pairs = [pair(i) for i in split.train]
    val_pairs = [pair(i) for i in split.validation]
    if not train_pairs or not val_pairs:
        raise ConfigError("dataset manifest has empty train or validation split")
    shape = train_pairs[0][0].samples.shape
    grid = plan_patches(shape, patch_n, stride_t, stride_x)
    if not grid.fully_covered():
        click.echo("warning: patch grid does not cover the full gather", err=True)

    model = build_unet(patch_n, base_channels=base_channels, seed=seed)
    cfg = TrainConfig(
        task=task, lr0=lr, patience0=patience, max_epochs=epochs, gain=gain, seed=seed
    )
    result = train(model, train_pairs, val_pairs, grid, cfg)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_checkpoint(model, out / "best.ckpt", metadata=result.metadata)
    write_history(result.history, out / "history.csv")
    elapsed = {"seconds": time.perf_counter() - t0} if timings else None
    _write_experiment_manifest(
        out,
        "train",
        {
            "clean": str(clean), "corrupted": str(corrupted), "task": task,
            "patch": patch_n, "stride_t": stride_t, "stride_x": stride_x,
            "epochs": epochs, "lr": lr, "patience": patience, "gain": gain,
            "base_channels": base_channels,
        },
        seed,
        elapsed,
    )
    click.echo(
        f"best epoch {result.best_epoch}, validation loss {result.best_val_loss:.6g}"
    )


@main.command()
@click.option("--checkpoint", type=click.Path(), required=True)
@click.option("--dataset", type=click.Path(), required=True, help="Corrupted dataset dir.")
@click.option("--mask-dir", type=click.Path(), default=None,
              help="Default: <dataset>/masks.")
@click.option("--task", type=click.Choice(["denoise", "interpolate", "joint"]), required=True)
@click.option("--patch", "patch_n", type=int, default=128, show_default=True)
@click.option("--stride-t", type=int, default=None)
@click.option("--stride-x", type=int, default=None)
@click.option("--gain", type=float, default=2000.0, show_default=True)
@click.option("--split", "which_split", type=click.Choice(["all", "train", "validation", "evaluation"]),
              default="all", show_default=True)
@click.option("--out-dir", type=click.Path(), required=True)
@click.option("--timings", is_flag=True, default=False)
@_handle_errors
def restore(checkpoint, dataset, mask_dir, task, patch_n, stride_t, stride_x, gain,
            which_split, out_dir, timings):
    """Restore corrupted gathers with a trained checkpoint."""
    t0 = time.perf_counter()
    stride_t = stride_t or patch_n
    stride_x = stride_x or patch_n
    model = load_checkpoint(checkpoint)
    base = Path(dataset)
    paths, split, ds_seed = load_manifest(base / "dataset.json")
    mask_base = Path(mask_dir) if mask_dir else base / "masks"
    if which_split == "all":
        indices = list(range(len(paths)))
    else:
        indices = list(getattr(split, which_split))
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    names = []
    for i in indices:
        g = load_gather(base / paths[i])
        trace_mask = None
        mask_path = mask_base / _mask_name(i)
        if mask_path.exists():
            trace_mask = load_mask(mask_path).any(axis=0)
        job = RestoreJob(model, task, patch_n, stride_t, stride_x, gain, g, trace_mask)
        restored_g = restore_gather(job)
        name = _gather_name(i)
        save_gather(restored_g, out / name)
        names.append(name)
    save_manifest(names, Split((), (), tuple(range(len(names)))), ds_seed,
                  out / "dataset.json")
    (out / "restored_indices.json").write_text(
        json.dumps(indices) + "\n", encoding="utf-8"
    )
    elapsed = {"seconds": time.perf_counter() - t0} if timings else None
    _write_experiment_manifest(
        out,
        "restore",
        {
            "checkpoint": str(checkpoint), "dataset": str(dataset), "task": task,
            "patch": patch_n, "stride_t": stride_t, "stride_x": stride_x,
            "gain": gain, "split": which_split,
        },
        ds_seed,
        elapsed,
    )
    click.echo(f"restored {len(names)} gathers to {out}")


@main.command(name="eval")
@click.option("--clean", type=click.Path(), required=True,
              help="Clean gather file or dataset dir.")
@click.option("--restored", type=click.Path(), required=True,
              help="Restored gather file or dataset dir.")
@click.option("--out", type=click.Path(), required=True, help="Metrics CSV path.")
@click.option("--with-psnr", is_flag=True, default=False)
@click.option("--s-max", type=float, default=1.0, show_default=True)
@_handle_errors
def eval_cmd(clean, restored, out, with_psnr, s_max):
    """Compute per-gather S/N (and optionally PS/N) against clean references."""
    pairs = _resolve_eval_pairs(Path(clean), Path(restored))
    rows = []
    for i, (cp, rp) in enumerate(pairs):
        g_clean = load_gather(cp)
        g_rest = load_gather(rp)
        row = {"index": i, "clean": cp.name, "restored": rp.name,
               "snr_db": snr(g_clean, g_rest)}
        if with_psnr:
            row["psnr_db"] = psnr(g_clean, g_rest, s_max)
        rows.append(row)
    fields = ["index", "clean", "restored", "snr_db"] + (["psnr_db"] if with_psnr else [])
    write_metrics_csv(rows, out, fieldnames=fields)
    finite = [r["snr_db"] for r in rows if not math.isinf(r["snr_db"])]
    mean = sum(finite) / len(finite) if finite else math.inf
    click.echo(f"{len(rows)} gathers, mean S/N {mean:.2f} dB")


def _resolve_eval_pairs(clean, restored):
    if clean.is_file() and restored.is_file():
        return [(clean, restored)]
    if clean.is_dir() and restored.is_dir():
        # align on the restored side: restored dirs may hold a subset
        rest_files = sorted(restored.glob("g*.sgth"))
        if not rest_files:
            raise MissingInputError(f"no gather files in {restored}")
        indices_file = restored / "restored_indices.json"
        if indices_file.exists():
            indices = json.loads(indices_file.read_text(encoding="utf-8"))
        else:
            indices = [int(p.stem[1:]) for p in rest_files]
        pairs = []
        for p, idx in zip(rest_files, indices):
            cp = clean / _gather_name(idx)
            if not cp.exists():
                raise MissingInputError(f"clean gather not found: {cp}")
            pairs.append((cp, p))
        return pairs
    raise MissingInputError(
        "clean and restored must both be files or both be dataset directories"
    )


@main.command()
@click.option("--gather", "gather_path", type=click.Path(), required=True)
@click.option("--out-dir", type=click.Path(), required=True)
@click.option("--f0", type=float, default=None,
              help="Restrict alias inspection to the signal band around f0.")
@_handle_errors
def spectrum(gather_path, out_dir, f0):
    """Write the f-k magnitude panel of a gather plus its alias energy ratio."""
    g = load_gather(gather_path)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    mag = spectrum_mag(g)
    stem = Path(gather_path).stem
    save_gather_png(np.log1p(mag), out / f"{stem}_spectrum.png")
    ratio = alias_energy_ratio(g, f0=f0)
    (out / f"{stem}_spectrum.json").write_text(
        json.dumps({"alias_energy_ratio": ratio, "f0": f0}, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    click.echo(f"alias energy ratio {ratio:.6f}")


@main.command()
@click.option("--metrics", "metrics_files", type=click.Path(), multiple=True, required=True)
@click.option("--out", type=click.Path(), required=True, help="Summary CSV path.")
@_handle_errors
def report(metrics_files, out):
    """Summarize one or more metrics CSVs into a single table."""
    import csv as _csv

    rows = []
    for mf in metrics_files:
        path = Path(mf)
        if not path.exists():
            raise MissingInputError(f"metrics file not found: {path}")
        with open(path, newline="", encoding="utf-8") as fh:
            values = [
                float(r["snr_db"]) for r in _csv.DictReader(fh)
                if r.get("snr_db") not in (None, "", "inf")
            ]
        mean = sum(values) / len(values) if values else math.nan
        rows.append({"source": path.name, "gathers": len(values), "mean_snr_db": mean})
    with open(out, "w", newline="", encoding="utf-8") as fh:
        writer = _csv.DictWriter(fh, fieldnames=["source", "gathers", "mean_snr_db"])
        writer.writeheader()
        writer.writerows(rows)
    click.echo(f"summarized {len(rows)} metric files to {out}")


if __name__ == "__main__":
    main()
