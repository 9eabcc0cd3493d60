"""U-net construction, forward/backward passes and checkpoint files.

The network maps a single-channel N x N patch to a patch of the same size.
The encoder halves the spatial side at every stage down to 1x1 (depth
log2(N)); channels double from ``base_channels`` and saturate at
``8 * base_channels``.  The decoder mirrors the ladder, concatenating the
matching encoder activation at every resolution from 2x2 outward (the 1x1
code feeds the first decoder stage alone).  Batch normalization is skipped
on the outermost encoder stage, on the stage producing the hidden code, and
on the last decoder stage; dropout (50%) runs in decoder stages whose
output side is below N/16.  The final output is linear.

Checkpoint file: ``SCKP`` magic, u32 header length, JSON header (spec, init
recipe, named tensor table with shapes and byte offsets, metadata), then a
raw little-endian float32 blob.  Round trips are bit-exact.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import ConfigError, FormatError, MissingInputError, ParameterError
from .layers import BatchNorm2d, Conv2d, Dropout, LeakyReLU, ReLU, TConv2d

CHECKPOINT_MAGIC = b"SCKP"
CHECKPOINT_VERSION = 1

LEAKY_SLOPE = 0.2
DROPOUT_RATE = 0.5
BN_EPS = 1e-5
BN_MOMENTUM = 0.9
DEFAULT_INIT_STD = 0.02


def channel_ladder(depth: int, base: int):
    """Encoder output channels per stage: base, 2*base, ..., capped at 8*base."""
    return [min(base * 2**i, base * 8) for i in range(depth)]


class _Stage:
    """An ordered run of layers sharing one name prefix."""

    def __init__(self, named_layers):
        self.named_layers = named_layers  # list of (short_name, layer)

    def forward(self, x, mode, rng):
        for _, layer in self.named_layers:
            x = layer.forward(x, mode, rng)
        return x

    def backward(self, gy):
        for _, layer in reversed(self.named_layers):
            gy = layer.backward(gy)
        return gy


class UnetModel:
    """Full parameter set plus topology; built by :func:`build_unet`."""

    def __init__(self, n, base_channels, dtype, seed, init_std):
        self.n = n
        self.base_channels = base_channels
        self.dtype = dtype
        self.init_seed = seed
        self.init_std = init_std
        self.depth = int(np.log2(n))
        rng = np.random.default_rng(seed)
        ladder = channel_ladder(self.depth, base_channels)
        d = self.depth

        self.encoder = []
        in_ch = 1
        for i in range(1, d + 1):
            out_ch = ladder[i - 1]
            layers = [("conv", Conv2d(in_ch, out_ch, rng, dtype, init_std))]
            if 1 < i < d:
                layers.append(("bn", BatchNorm2d(out_ch, dtype, BN_EPS, BN_MOMENTUM)))
            if i < d:
                layers.append(("lrelu", LeakyReLU(LEAKY_SLOPE)))
            self.encoder.append(_Stage(layers))
            in_ch = out_ch

        self.decoder = []
        self.dec_out_ch = []
        in_ch = ladder[d - 1]  # the hidden code
        for j in range(1, d + 1):
            out_ch = 1 if j == d else ladder[d - j - 1]
            layers = [
                ("relu", ReLU()),
                ("tconv", TConv2d(in_ch, out_ch, rng, dtype, init_std)),
            ]
            if j < d:
                layers.append(("bn", BatchNorm2d(out_ch, dtype, BN_EPS, BN_MOMENTUM)))
                if 2**j < n / 16:
                    layers.append(("drop", Dropout(DROPOUT_RATE)))
            self.decoder.append(_Stage(layers))
            self.dec_out_ch.append(out_ch)
            # concatenated skip widens the next stage's input
            in_ch = out_ch + (ladder[d - j - 1] if j < d else 0)

    # -- parameter registry -------------------------------------------------

    def _named_stages(self):
        for i, stage in enumerate(self.encoder, 1):
            yield f"enc{i}", stage
        for j, stage in enumerate(self.decoder, 1):
            yield f"dec{j}", stage

    def parameters(self):
        """Ordered name -> array view of every trainable tensor."""
        out = {}
        for prefix, stage in self._named_stages():
            for short, layer in stage.named_layers:
                for pname, arr in layer.params.items():
                    out[f"{prefix}.{short}.{pname}"] = arr
        return out

    def gradients(self):
        out = {}
        for prefix, stage in self._named_stages():
            for short, layer in stage.named_layers:
                for pname, arr in layer.grads.items():
                    out[f"{prefix}.{short}.{pname}"] = arr
        return out

    def state_tensors(self):
        """Parameters plus BN running statistics, in checkpoint order."""
        out = dict(self.parameters())
        for prefix, stage in self._named_stages():
            for short, layer in stage.named_layers:
                if isinstance(layer, BatchNorm2d):
                    out[f"{prefix}.{short}.running_mean"] = layer.running_mean
                    out[f"{prefix}.{short}.running_var"] = layer.running_var
        return out

    def load_state(self, tensors):
        current = self.state_tensors()
        missing = set(current) - set(tensors)
        if missing:
            raise ConfigError(f"state is missing tensors: {sorted(missing)[:4]}...")
        for prefix, stage in self._named_stages():
            for short, layer in stage.named_layers:
                for pname in layer.params:
                    src = tensors[f"{prefix}.{short}.{pname}"]
                    layer.params[pname][...] = src.astype(self.dtype)
                if isinstance(layer, BatchNorm2d):
                    layer.running_mean = tensors[f"{prefix}.{short}.running_mean"].astype(
                        self.dtype
                    )
                    layer.running_var = tensors[f"{prefix}.{short}.running_var"].astype(
                        self.dtype
                    )

    def snapshot(self):
        return {k: v.copy() for k, v in self.state_tensors().items()}

    def param_count(self) -> int:
        return sum(v.size for v in self.parameters().values())

    def zero_grads(self):
        for _, stage in self._named_stages():
            for _, layer in stage.named_layers:
                layer.zero_grads()

    # -- forward / backward -------------------------------------------------

    def forward(self, x, mode="infer", seed=0):
        """Run the network; returns (output, hidden_code).

        ``x`` is (batch, 1, N, N).  Train mode draws dropout masks from
        ``seed`` and normalizes with batch statistics; infer mode is a pure
        deterministic function of (parameters, input).
        """
        x = np.asarray(x, dtype=self.dtype)
        if x.ndim != 4 or x.shape[1] != 1 or x.shape[2:] != (self.n, self.n):
            raise ParameterError(
                f"input must be (batch, 1, {self.n}, {self.n}), got {x.shape}"
            )
        rng = np.random.default_rng(seed) if mode == "train" else None
        d = self.depth
        enc_out = []
        a = x
        for stage in self.encoder:
            a = stage.forward(a, mode, rng)
            enc_out.append(a)
        h = enc_out[-1]
        y = h
        for j, stage in enumerate(self.decoder, 1):
            y = stage.forward(y, mode, rng)
            if j < d:
                y = np.concatenate([y, enc_out[d - j - 1]], axis=1)
        return y, h

    def backward(self, gy):
        """Reverse pass for the most recent forward; accumulates into grads."""
        d = self.depth
        skip_grads = [None] * (d - 1)  # grad into enc_out[idx] via the skip
        g = gy
        for j in range(d, 0, -1):
            if j < d:
                n_dec = self.dec_out_ch[j - 1]
                skip_grads[d - j - 1] = g[:, n_dec:]
                g = g[:, :n_dec]
            g = self.decoder[j - 1].backward(g)
        for i in range(d, 0, -1):
            g = self.encoder[i - 1].backward(g)
            if i >= 2:
                g = g + skip_grads[i - 2]
        return g


def build_unet(n, base_channels=64, dtype=np.float32, seed=0, init_std=DEFAULT_INIT_STD):
    """Construct a freshly initialized model for N x N patches.

    ``n`` must be a power of two in [16, 256].  ``base_channels`` below 64
    yields width-reduced models for tests and gradient checks.
    """
    if n < 16 or n > 256 or (n & (n - 1)) != 0:
        raise ParameterError(f"patch side must be a power of two in [16, 256], got {n}")
    return UnetModel(n, base_channels, dtype, seed, init_std)


def unet_forward(model: UnetModel, x, seed=0, mode="infer"):
    return model.forward(x, mode=mode, seed=seed)


def unet_loss_and_gradients(model: UnetModel, x, target, mask=None, seed=0):
    """Loss (mean per-patch squared error, optionally masked) and gradients.

    Runs a train-mode forward and a full reverse pass; returns
    ``(loss, grads)`` with grads keyed like :meth:`UnetModel.parameters`.
    """
    x = np.asarray(x, dtype=model.dtype)
    target = np.asarray(target, dtype=model.dtype)
    y, _ = model.forward(x, mode="train", seed=seed)
    diff = y - target
    if mask is not None:
        diff = diff * np.asarray(mask, dtype=model.dtype)
    batch = x.shape[0]
    loss = float(np.sum(diff.astype(np.float64) ** 2)) / batch
    if not np.isfinite(loss):
        raise ParameterError("loss is non-finite")
    model.zero_grads()
    model.backward((2.0 / batch) * diff)
    return loss, model.gradients()


# -- checkpoints -----------------------------------------------------------


def save_checkpoint(model: UnetModel, path, metadata=None):
    """Serialize spec, init recipe, parameters and BN statistics to one file."""
    tensors = model.state_tensors()
    table = []
    blob = bytearray()
    for name, arr in tensors.items():
        data = np.ascontiguousarray(arr, dtype="<f4").tobytes()
        table.append(
            {
                "name": name,
                "shape": list(arr.shape),
                "offset": len(blob),
                "nbytes": len(data),
            }
        )
        blob.extend(data)
    header = {
        "format_version": CHECKPOINT_VERSION,
        "spec": {
            "n": model.n,
            "base_channels": model.base_channels,
            "init": {"kind": "gaussian", "std": model.init_std, "seed": model.init_seed},
            "bn": {"eps": BN_EPS, "momentum": BN_MOMENTUM},
            "leaky_slope": LEAKY_SLOPE,
            "dropout_rate": DROPOUT_RATE,
        },
        "tensors": table,
        "metadata": metadata or {},
    }
    head = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<I", len(head)))
        fh.write(head)
        fh.write(bytes(blob))


def read_checkpoint_header(path):
    path = Path(path)
    if not path.exists():
        raise MissingInputError(f"checkpoint not found: {path}")
    raw = path.read_bytes()
    if len(raw) < 8 or raw[:4] != CHECKPOINT_MAGIC:
        raise FormatError("bad-magic", f"{path}: not a checkpoint file")
    (head_len,) = struct.unpack("<I", raw[4:8])
    if len(raw) < 8 + head_len:
        raise FormatError("truncated", f"{path}: truncated header")
    header = json.loads(raw[8 : 8 + head_len].decode("utf-8"))
    if header.get("format_version") != CHECKPOINT_VERSION:
        raise FormatError("bad-version", f"{path}: unsupported checkpoint version")
    return header, raw[8 + head_len :]


def load_checkpoint(path, dtype=np.float32) -> UnetModel:
    """Rebuild a model from a checkpoint; float32 state round-trips bit-exactly."""
    header, blob = read_checkpoint_header(path)
    spec = header["spec"]
    model = build_unet(
        spec["n"],
        base_channels=spec["base_channels"],
        dtype=dtype,
        seed=spec["init"]["seed"],
        init_std=spec["init"]["std"],
    )
    tensors = {}
    for entry in header["tensors"]:
        lo, hi = entry["offset"], entry["offset"] + entry["nbytes"]
        if hi > len(blob):
            raise FormatError("truncated", f"{path}: tensor {entry['name']} out of range")
        arr = np.frombuffer(blob[lo:hi], dtype="<f4").reshape(entry["shape"])
        if not np.all(np.isfinite(arr)):
            raise FormatError("non-finite", f"{path}: tensor {entry['name']} non-finite")
        tensors[entry["name"]] = arr
    model.load_state(tensors)
    return model
