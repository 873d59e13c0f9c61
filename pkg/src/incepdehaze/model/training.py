"""Alternating discriminator/generator updates, epoch loop and checkpoints."""

from __future__ import annotations

import json
import logging
import math
import struct
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .._rng import stream
from ..autodiff import Tape, Tensor, backward
from ..exceptions import ConfigError, NonFiniteError, ShapeError, ValidationError
from .discriminator import discriminator_forward
from .generator import generator_forward
from .losses import discriminator_loss, generator_loss
from .optim import AdamState, adam_step, grad_norm
from .params import DiscriminatorConfig, GeneratorConfig, ModelParams, init_model

log = logging.getLogger(__name__)

CHECKPOINT_MAGIC = b"IDGCKPT1"


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 50
    batch_size: int = 4
    lambda_l1: float = 100.0
    learning_rate: float = 2e-4
    beta1: float = 0.5
    beta2: float = 0.999
    seed: int = 0
    init_stddev: float = 0.02
    generator: GeneratorConfig = field(default_factory=GeneratorConfig)
    discriminator: DiscriminatorConfig = field(default_factory=DiscriminatorConfig)

    def __post_init__(self):
        if self.epochs < 0:
            raise ConfigError("epochs must be non-negative")
        if self.batch_size <= 0:
            raise ConfigError("batch_size must be positive")
        if self.lambda_l1 < 0:
            raise ConfigError("lambda_l1 must be non-negative")

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["generator"] = GeneratorConfig(**d.get("generator", {}))
        disc = dict(d.get("discriminator", {}))
        if "strides" in disc:
            disc["strides"] = tuple(disc["strides"])
        d["discriminator"] = DiscriminatorConfig(**disc)
        return cls(**d)

    def new_optimizer(self):
        return AdamState(lr=self.learning_rate, beta1=self.beta1, beta2=self.beta2)

    def init_params(self, dtype=np.float32):
        return init_model(self.generator, self.discriminator, self.seed, self.init_stddev, dtype)


@dataclass(frozen=True)
class StepReport:
    g_total: float
    g_adv: float
    g_l1: float
    d_loss: float
    g_grad_norm: float
    d_grad_norm: float


@dataclass
class PairedDataset:
    """Hazy/clear training pairs as ``N x 3 x H x W`` float arrays in [0, 1].

    ``val_hazy``/``val_clear`` are optional; when present the loop reports
    validation SSIM/PSNR after every epoch.
    """

    hazy: np.ndarray
    clear: np.ndarray
    val_hazy: np.ndarray | None = None
    val_clear: np.ndarray | None = None

    def __post_init__(self):
        if self.hazy.shape != self.clear.shape or self.hazy.ndim != 4:
            raise ShapeError(f"paired arrays must share an N x C x H x W shape: {self.hazy.shape} vs {self.clear.shape}")

    def __len__(self):
        return self.hazy.shape[0]


def _check_finite(value, what, tape, rerun=None):
    """Raise naming the first op whose output went non-finite."""
    if math.isfinite(value):
        return
    hit = tape.first_nonfinite()
    if rerun is not None:
        # the bad value came from an untaped producer; replay it under a tape
        with Tape() as inner:
            rerun()
        hit = inner.first_nonfinite() or hit
    where = f"op #{hit[0]} '{hit[1]}'" if hit else "no recorded op (non-finite input?)"
    raise NonFiniteError(f"{what} is {value}; first non-finite output at {where}")


def train_step(batch, params: ModelParams, opt: AdamState, cfg: TrainConfig) -> StepReport:
    """One discriminator update followed by one generator update."""
    hazy_np, clear_np = batch
    if len(hazy_np) == 0:
        raise ValidationError("empty batch")
    dtype = params["gen.out.w"].dtype
    hazy = Tensor(hazy_np, dtype=dtype)
    clear = Tensor(clear_np, dtype=dtype)
    gcfg, dcfg = cfg.generator, cfg.discriminator
    gen_names, disc_names = params.names("gen."), params.names("disc.")

    # discriminator: the generator runs without a tape, so no G gradients exist
    fake = generator_forward(hazy, params, gcfg).detach()
    params.zero_grad("disc.")
    with Tape() as tape:
        d_real = discriminator_forward(clear, params, dcfg)
        d_fake = discriminator_forward(fake, params, dcfg)
        d_loss = discriminator_loss(d_real, d_fake)
    rerun = None if np.isfinite(fake.data).all() else (lambda: generator_forward(hazy, params, gcfg))
    _check_finite(d_loss.item(), "discriminator loss", tape, rerun)
    backward(d_loss, tape)
    d_norm = grad_norm(params, disc_names)
    adam_step(params, disc_names, opt)

    params.zero_grad()
    with Tape() as tape:
        fake = generator_forward(hazy, params, gcfg)
        d_fake = discriminator_forward(fake, params, dcfg)
        total, adv, l1 = generator_loss(d_fake, fake, clear, cfg.lambda_l1)
    _check_finite(total.item(), "generator loss", tape)
    backward(total, tape)
    g_norm = grad_norm(params, gen_names)
    adam_step(params, gen_names, opt)
    params.zero_grad()

    return StepReport(
        g_total=total.item(),
        g_adv=adv.item(),
        g_l1=l1.item(),
        d_loss=d_loss.item(),
        g_grad_norm=g_norm,
        d_grad_norm=d_norm,
    )


def batches_per_epoch(n, batch_size):
    return -(-n // batch_size)


def epoch_order(seed, epoch, n):
    """Seeded permutation of ``range(n)`` for one epoch."""
    return stream(seed, "shuffle", epoch).permutation(n)


def dehaze_array(params, cfg: GeneratorConfig, hazy, batch_size=4):
    """Run the generator over ``N x 3 x H x W`` images; returns a float array."""
    dtype = params["gen.out.w"].dtype
    out = []
    for i in range(0, len(hazy), batch_size):
        out.append(generator_forward(Tensor(hazy[i : i + batch_size], dtype=dtype), params, cfg).data)
    return np.concatenate(out, axis=0)


def _validation_scores(params, cfg, dataset):
    from ..metrics import psnr, ssim

    if dataset.val_hazy is None or len(dataset.val_hazy) == 0:
        return None, None
    pred = dehaze_array(params, cfg.generator, dataset.val_hazy, cfg.batch_size)
    ssims, psnrs = [], []
    for p, c in zip(pred, dataset.val_clear):
        p = p.transpose(1, 2, 0).astype(np.float64)
        c = c.transpose(1, 2, 0).astype(np.float64)
        ssims.append(ssim(p, c))
        value = psnr(p, c)
        if math.isfinite(value):
            psnrs.append(value)
    return float(np.mean(ssims)), (float(np.mean(psnrs)) if psnrs else math.inf)


def train_loop(
    dataset: PairedDataset,
    cfg: TrainConfig,
    params: ModelParams | None = None,
    opt: AdamState | None = None,
    start_epoch: int = 0,
    checkpoint_dir=None,
    log_path=None,
):
    """Train for ``cfg.epochs`` epochs; returns ``(params, opt, epoch_log)``.

    Each epoch draws a fresh seeded permutation, runs ``ceil(N / batch)``
    steps, writes ``epoch_XXXX.ckpt`` into ``checkpoint_dir`` and appends one
    JSON line to ``log_path``.
    """
    if len(dataset) == 0:
        raise ConfigError("training dataset is empty")
    params = params if params is not None else cfg.init_params()
    opt = opt if opt is not None else cfg.new_optimizer()
    history = []
    if checkpoint_dir is not None:
        Path(checkpoint_dir).mkdir(parents=True, exist_ok=True)
    n = len(dataset)
    for epoch in range(start_epoch, cfg.epochs):
        order = epoch_order(cfg.seed, epoch, n)
        reports = []
        for b in range(batches_per_epoch(n, cfg.batch_size)):
            idx = np.sort(order[b * cfg.batch_size : (b + 1) * cfg.batch_size])
            reports.append(train_step((dataset.hazy[idx], dataset.clear[idx]), params, opt, cfg))
        val_ssim, val_psnr = _validation_scores(params, cfg, dataset)
        record = {
            "epoch": epoch,
            "g_total": float(np.mean([r.g_total for r in reports])),
            "g_adv": float(np.mean([r.g_adv for r in reports])),
            "g_l1": float(np.mean([r.g_l1 for r in reports])),
            "d_loss": float(np.mean([r.d_loss for r in reports])),
            "val_ssim": val_ssim,
            "val_psnr": val_psnr,
        }
        history.append(record)
        log.info("epoch %d: %s", epoch, record)
        if log_path is not None:
            with open(log_path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(_jsonable(record)) + "\n")
        if checkpoint_dir is not None:
            save_checkpoint(Path(checkpoint_dir) / f"epoch_{epoch:04d}.ckpt", params, opt, cfg, epoch + 1)
    return params, opt, history


def _jsonable(record):
    return {k: ("inf" if isinstance(v, float) and math.isinf(v) else v) for k, v in record.items()}


# ---------------------------------------------------------------------------
# checkpoints: magic, little-endian u64 header length, JSON header, raw payload


def save_checkpoint(path, params: ModelParams, opt: AdamState, cfg: TrainConfig, next_epoch=0):
    entries, chunks, offset = [], [], 0

    def put(kind, name, arr):
        nonlocal offset
        arr = np.ascontiguousarray(arr)
        le = arr.astype(arr.dtype.newbyteorder("<"), copy=False)
        raw = le.tobytes()
        entries.append(
            {"kind": kind, "name": name, "shape": list(arr.shape), "dtype": le.dtype.str, "offset": offset, "nbytes": len(raw)}
        )
        chunks.append(raw)
        offset += len(raw)

    for name, t in params.tensors.items():
        put("param", name, t.data)
    for name, arr in params.buffers.items():
        put("buffer", name, arr)
    for name in opt.m:
        put("adam_m", name, opt.m[name])
        put("adam_v", name, opt.v[name])
    header = {
        "format": 1,
        "entries": entries,
        "train_config": cfg.to_dict(),
        "adam": {"lr": opt.lr, "beta1": opt.beta1, "beta2": opt.beta2, "eps": opt.eps, "step": opt.step},
        "rng": {"seed": cfg.seed, "next_epoch": next_epoch},
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<Q", len(blob)))
        fh.write(blob)
        for raw in chunks:
            fh.write(raw)
    tmp.replace(path)


def load_checkpoint(path):
    """Return ``(params, opt, cfg, next_epoch)`` exactly as saved."""
    data = Path(path).read_bytes()
    if not data.startswith(CHECKPOINT_MAGIC):
        raise ValidationError(f"{path}: not a checkpoint file")
    (hlen,) = struct.unpack_from("<Q", data, len(CHECKPOINT_MAGIC))
    start = len(CHECKPOINT_MAGIC) + 8
    header = json.loads(data[start : start + hlen].decode("utf-8"))
    payload = memoryview(data)[start + hlen :]
    params, opt = ModelParams(), None
    a = header["adam"]
    opt = AdamState(a["lr"], a["beta1"], a["beta2"], a["eps"], {k: int(v) for k, v in a["step"].items()})
    for e in header["entries"]:
        raw = payload[e["offset"] : e["offset"] + e["nbytes"]]
        if len(raw) != e["nbytes"]:
            raise ValidationError(f"{path}: truncated payload for {e['name']}")
        dt = np.dtype(e["dtype"])
        arr = np.frombuffer(raw, dtype=dt).reshape(e["shape"]).astype(dt.newbyteorder("="))
        if e["kind"] == "param":
            params.tensors[e["name"]] = Tensor(arr, requires_grad=True, dtype=arr.dtype)
        elif e["kind"] == "buffer":
            params.buffers[e["name"]] = arr.copy()
        elif e["kind"] == "adam_m":
            opt.m[e["name"]] = arr.copy()
        elif e["kind"] == "adam_v":
            opt.v[e["name"]] = arr.copy()
    cfg = TrainConfig.from_dict(header["train_config"])
    return params, opt, cfg, int(header["rng"]["next_epoch"])


def with_overrides(cfg: TrainConfig, **kwargs):
    return replace(cfg, **kwargs)
