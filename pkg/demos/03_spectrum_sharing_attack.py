#!/usr/bin/env python3
"""Spectrum sharing with a radar, and an adversary that learns when to jam.

Runs at reduced size (a few hundred slots) so it finishes in about a minute.
"""

# %%
from aml5g.neural import TrainConfig
from aml5g.scenario1 import (
    SharingWorld,
    SlotTiming,
    build_adversary_dataset,
    build_defender_dataset,
    jamming_budget,
    run_attack,
    run_baseline,
    throughput_reduction,
    train_sensing_classifier,
    train_surrogate,
)

SEED = 0
N_SLOTS = 400
quick = TrainConfig(n_steps=300, seed=SEED)
world = SharingWorld()

# %% [markdown]
# T learns to tell Idle from Busy (radar present) from RSSI samples.

# %%
train, _ = build_defender_dataset(world, 600, SEED).split()
c_t = train_sensing_classifier(train, quick)
trace, base = run_baseline(world, c_t, N_SLOTS, SEED)
print(f"idle detection {base.idle_detection_rate:.3f}  busy error {base.busy_detection_error:.3f}")
print(f"throughput {base.normalized_throughput:.3f}  successes {base.successes}")

# %% [markdown]
# A listens to the channel and learns to predict whether R will ACK.

# %%
adv, info = build_adversary_dataset(world, c_t, 600, SEED)
c_a, rep = train_surrogate(adv, quick)
print(f"ACK detection {rep['ack_detection']:.3f}  no-ACK error {rep['no_ack_error']:.3f}")

# %% [markdown]
# With energy for 20% of the data phases, A jams either the data or the next sensing period.

# %%
timing = SlotTiming()
for mode in ("JamData", "JamSensing"):
    _, m = run_attack(world, c_t, c_a, mode, jamming_budget(N_SLOTS, timing), timing, N_SLOTS, SEED)
    print(f"{mode:10s} reduction {throughput_reduction(base, m):.3f}  jams {m.n_jams}  energy {m.energy_spent:.0f}")
