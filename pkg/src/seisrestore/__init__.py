"""Patch-based U-net interpolation and denoising of 2D seismic shot gathers."""

from .errors import (
    ConfigError,
    FormatError,
    MissingInputError,
    ParameterError,
    SeisError,
)
from .gather import (
    AcquisitionMeta,
    Dataset,
    Gather,
    Split,
    apply_gain,
    load_dataset,
    load_gather,
    load_manifest,
    load_mask,
    remove_gain,
    save_gather,
    save_manifest,
    save_mask,
    split_dataset,
    trace_to_sample_mask,
)
from .synth import (
    EventSpec,
    SynthConfig,
    make_dataset,
    make_gathers,
    normalize_energy,
    render_event,
    ricker,
)
from .corruption import (
    BurstChain,
    CorruptionSpec,
    awgn_sigma,
    awgn_snr,
    bandlimited_noise,
    burst_missing,
    normalize_trace_range,
    regular_missing,
    spike_noise,
    uniform_missing,
)
from .patches import PatchGrid, assemble, build_mask, extract, merge_known, plan_patches
from .unet import (
    UnetModel,
    build_unet,
    load_checkpoint,
    save_checkpoint,
    unet_forward,
    unet_loss_and_gradients,
)
from .training import (
    Adam,
    TrainConfig,
    TrainResult,
    masked_mse_loss,
    mse_loss,
    train,
    write_history,
)
from .restoration import RestoreJob, restore_dataset, restore_gather, write_restore_report
from .metrics import (
    alias_energy_ratio,
    psnr,
    save_error_png,
    save_gather_png,
    snr,
    spectrum_mag,
    write_metrics_csv,
    write_table_csv,
)

__version__ = "0.1.0"
