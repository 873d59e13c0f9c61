"""Adversarial, reconstruction and combined GAN objectives."""

import numpy as np

from ..autodiff import Tensor, add, scale
from ..nn import bce_with_logits, l1_loss


def generator_loss(d_logits_fake: Tensor, fake: Tensor, target: Tensor, lambda_l1=100.0):
    """Return ``(total, adversarial, l1)`` with ``total = adv + lambda_l1 * l1``."""
    adv = bce_with_logits(d_logits_fake, np.ones(d_logits_fake.shape, dtype=d_logits_fake.dtype))
    l1 = l1_loss(fake, target)
    total = add(adv, scale(l1, lambda_l1))
    return total, adv, l1


def discriminator_loss(d_logits_real: Tensor, d_logits_fake: Tensor) -> Tensor:
    """Mean of the real-vs-ones and fake-vs-zeros cross-entropies."""
    real = bce_with_logits(d_logits_real, np.ones(d_logits_real.shape, dtype=d_logits_real.dtype))
    fake = bce_with_logits(d_logits_fake, np.zeros(d_logits_fake.shape, dtype=d_logits_fake.dtype))
    return scale(add(real, fake), 0.5)
