#!/usr/bin/env python3
"""Flipping the most confident decisions to poison what an eavesdropper learns."""

# %%
import numpy as np

from aml5g.defense import DefensePolicy, Scope, apply_defense

rng = np.random.default_rng(3)
labels = rng.integers(0, 2, 12)
conf = np.round(rng.uniform(0.5, 1.0, 12), 3)
decisions = list(zip(labels.tolist(), conf.tolist()))

# %% [markdown]
# p_d = 0.25 over the Intended decisions: a quarter of them, the most confident, become Other.

# %%
out, flips = apply_defense(decisions, DefensePolicy(0.25, scope=Scope.AUTH))
for i, (a, b) in enumerate(zip(decisions, out)):
    print(i, a, "->", b, "*" if i in flips else "")

# %% [markdown]
# The same policy in the spectrum-sharing scope withholds Idle (transmit) decisions.

# %%
_, flips = apply_defense(decisions, DefensePolicy(0.25, scope=Scope.TRANSMIT))
print("withheld transmissions at slots", flips.tolist())

# %% [markdown]
# A small end-to-end run: attack success against p_d for one seed.

# %%
from aml5g.harness import parse_config, run_experiment

cfg = parse_config(
    """
scenario = Defense2
pd_values = 0, 0.05, 0.2
"""
)
report = run_experiment(cfg)
for row in report.rows:
    print(f"p_d {row['p_d']:.2f}  success {row['attack_success_probability']:.3f}")
