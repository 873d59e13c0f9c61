"""Generator, discriminator, objectives and training for haze removal."""

from .discriminator import discriminator_forward, patch_probabilities
from .generator import decoder_forward, encoder_forward, generator_forward, inception_block
from .losses import discriminator_loss, generator_loss
from .optim import AdamState, adam_step
from .params import (
    DiscriminatorConfig,
    GeneratorConfig,
    ModelParams,
    init_discriminator,
    init_generator,
    init_model,
)
from .training import (
    PairedDataset,
    StepReport,
    TrainConfig,
    batches_per_epoch,
    dehaze_array,
    load_checkpoint,
    save_checkpoint,
    train_loop,
    train_step,
)

__all__ = [
    "AdamState",
    "DiscriminatorConfig",
    "GeneratorConfig",
    "ModelParams",
    "PairedDataset",
    "StepReport",
    "TrainConfig",
    "adam_step",
    "batches_per_epoch",
    "decoder_forward",
    "dehaze_array",
    "discriminator_forward",
    "discriminator_loss",
    "encoder_forward",
    "generator_forward",
    "generator_loss",
    "inception_block",
    "init_discriminator",
    "init_generator",
    "init_model",
    "load_checkpoint",
    "patch_probabilities",
    "save_checkpoint",
    "train_loop",
    "train_step",
]
