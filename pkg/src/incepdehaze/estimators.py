"""scikit-learn compatible wrappers around the haze synthesiser and the GAN.

Both follow the usual contracts: hyperparameters are stored verbatim in
``__init__``, fitted state lives in trailing-underscore attributes, and
``get_params``/``set_params``/``clone`` work as for any estimator. Images
are channel-last ``N x H x W x 3`` arrays in [0, 1].
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_image, check_image_batch, check_paired, to_nchw, to_nhwc
from .exceptions import ShapeError
from .haze import synthesize_variants
from .metrics import ssim
from .model import (
    DiscriminatorConfig,
    GeneratorConfig,
    PairedDataset,
    TrainConfig,
    dehaze_array,
    train_loop,
)


class HazeSynthesizer(TransformerMixin, BaseEstimator):
    """Render ``k`` hazy variants of each clear image from its depth map.

    Stateless: ``fit`` only validates. ``transform(X, depth)`` returns an
    array of shape ``(N, k, H, W, C)``; :meth:`synthesize` additionally
    returns the sampled :class:`~incepdehaze.haze.HazeParams`.
    """

    def __init__(self, k=3, seed=0):
        self.k = k
        self.seed = seed

    def fit(self, X, y=None):
        check_image_batch(X)
        self.n_features_in_ = int(np.prod(np.shape(X)[1:]))
        return self

    def synthesize(self, X, depth, image_ids=None):
        X = check_image_batch(X)
        depth = np.asarray(depth, dtype=np.float64)
        if depth.ndim == 2:
            depth = depth[None]
        if depth.shape != X.shape[:3]:
            raise ShapeError(f"depth {depth.shape} does not match images {X.shape[:3]}")
        ids = image_ids if image_ids is not None else [str(i) for i in range(len(X))]
        return [
            synthesize_variants(check_image(x), d, self.k, self.seed, image_id)
            for x, d, image_id in zip(X, depth, ids)
        ]

    def transform(self, X, depth, image_ids=None):
        results = self.synthesize(X, depth, image_ids)
        return np.stack([np.stack([img for img, _ in variants]) for variants in results])


class IncepDehazeGAN(TransformerMixin, BaseEstimator):
    """Inception encoder-decoder GAN mapping hazy images to clear ones.

    ``fit(X_hazy, y_clear)`` trains with the adversarial + weighted L1
    objective; ``predict``/``transform`` return dehazed images. ``score``
    is the mean SSIM between predictions and references.
    """

    def __init__(
        self,
        base_width=64,
        num_stages=4,
        disc_base_width=64,
        disc_strides=(2, 2, 2, 2, 1, 1),
        epochs=50,
        batch_size=4,
        lambda_l1=100.0,
        learning_rate=2e-4,
        beta1=0.5,
        beta2=0.999,
        init_stddev=0.02,
        seed=0,
    ):
        self.base_width = base_width
        self.num_stages = num_stages
        self.disc_base_width = disc_base_width
        self.disc_strides = disc_strides
        self.epochs = epochs
        self.batch_size = batch_size
        self.lambda_l1 = lambda_l1
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.init_stddev = init_stddev
        self.seed = seed

    def _train_config(self):
        return TrainConfig(
            epochs=self.epochs,
            batch_size=self.batch_size,
            lambda_l1=self.lambda_l1,
            learning_rate=self.learning_rate,
            beta1=self.beta1,
            beta2=self.beta2,
            seed=self.seed,
            init_stddev=self.init_stddev,
            generator=GeneratorConfig(self.base_width, self.num_stages),
            discriminator=DiscriminatorConfig(self.disc_base_width, tuple(self.disc_strides)),
        )

    def fit(self, X, y, X_val=None, y_val=None):
        X, y = check_paired(X, y)
        cfg = self._train_config()
        val = (None, None)
        if X_val is not None:
            X_val, y_val = check_paired(X_val, y_val)
            val = (to_nchw(X_val), to_nchw(y_val))
        dataset = PairedDataset(to_nchw(X), to_nchw(y), *val)
        self.params_, self.optimizer_, self.history_ = train_loop(dataset, cfg)
        self.config_ = cfg
        self.n_features_in_ = int(np.prod(X.shape[1:]))
        return self

    def predict(self, X):
        check_is_fitted(self, "params_")
        X = check_image_batch(X)
        out = dehaze_array(self.params_, self.config_.generator, to_nchw(X), self.batch_size)
        return to_nhwc(out).astype(np.float64)

    def transform(self, X):
        return self.predict(X)

    def score(self, X, y):
        pred = self.predict(X)
        y = check_image_batch(y, "y")
        return float(np.mean([ssim(p, t) for p, t in zip(pred, y)]))
