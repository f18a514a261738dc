#!/usr/bin/env python3
"""Spoofing a signal classifier with a GAN trained on over-the-air feedback.

Takes about a minute per gamma on one core.
"""

# %%
from aml5g.neural import TrainConfig
from aml5g.scenario2 import (
    AuthConfig,
    AuthWorld,
    build_auth_dataset,
    collect_adversary_observations,
    feedback_labels,
    replay_attack_baseline,
    run_spoofing_attack,
    train_auth_classifier,
    train_spoofer,
)

SEED = 0

for gamma in (-3.0, 3.0):
    world = AuthWorld(auth=AuthConfig(gamma))

    # %% the gNodeB learns the intended UE's waveform
    data = build_auth_dataset(world.auth, world.ofdm, SEED, world)
    c_s, rep = train_auth_classifier(data, TrainConfig(seed=SEED))

    # %% A watches transmissions and the gNodeB's accept/reject feedback
    obs = collect_adversary_observations(world, 1000, SEED)
    labels, _ = feedback_labels(c_s, obs)
    gan = train_spoofer(world, obs, labels, SEED)

    spoof = run_spoofing_attack(c_s, gan, world, 500, SEED)
    replay = replay_attack_baseline(c_s, world, 500, SEED)
    print(
        f"gamma {gamma:+.0f} dB: C_S accuracy {rep['test_accuracy']:.3f}  "
        f"GAN spoof {spoof.success_probability:.3f}  replay {replay.success_probability:.3f}"
    )
