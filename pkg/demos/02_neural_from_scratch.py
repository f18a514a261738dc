#!/usr/bin/env python3
"""The numpy MLP: gradient check, a toy classifier and a toy GAN."""

# %%
import numpy as np

from aml5g.neural import (
    LabeledDataset,
    MlpSpec,
    TrainConfig,
    accuracy,
    classifier_spec,
    grad_check,
    mlp_init,
    train_classifier,
)

rng = np.random.default_rng(0)

# %% [markdown]
# The classifier used by both scenarios: three hidden ReLU layers of 512 with dropout.

# %%
m = mlp_init(classifier_spec(400), rng)
print("parameters:", m.spec.n_params())
x = rng.standard_normal(400)
print("relative gradient error:", grad_check(m, (x, 1), rng))

# %% [markdown]
# Two Gaussian blobs are an easy sanity target.

# %%
n = 600
y = rng.integers(0, 2, n)
feats = rng.standard_normal((n, 8)) + 2.0 * y[:, None]
data = LabeledDataset(feats, y)
train, test = data.split()
small = mlp_init(MlpSpec((8, 32, 2)), rng)
small, hist = train_classifier(small, train, TrainConfig(batch_size=50, n_steps=300, seed=1))
print("loss first/last:", round(hist[0], 3), round(hist[-1], 3))
print("test accuracy:", accuracy(small, test))
