"""Proactive defense: deliberately flip a small share of the defender's most
confident decisions so that an adversary learning from them is misled."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np


class Scope(str, enum.Enum):
    AUTH = "AuthDecisions"  # flip Intended (label 1) to Other
    TRANSMIT = "TransmitDecisions"  # flip Idle (label 0) to Busy


@dataclass(frozen=True)
class DefensePolicy:
    p_d: float = 0.0
    selection: str = "TopConfidence"
    scope: Scope = Scope.AUTH
    all_time: bool = False  # keep defending after the adversary's collection window

    def __post_init__(self):
        if not 0.0 <= self.p_d <= 1.0:
            raise ValueError(f"p_d = {self.p_d} outside [0, 1]")
        if self.selection != "TopConfidence":
            raise ValueError(f"unknown selection {self.selection!r}")
        object.__setattr__(self, "scope", Scope(self.scope))

    @property
    def flippable_label(self) -> int:
        return 1 if self.scope is Scope.AUTH else 0


def n_flips(p_d: float, n_flippable: int) -> int:
    # guard against 0.07 * 100 = 7.000000000000001 style round-up
    return min(n_flippable, math.ceil(round(p_d * n_flippable, 9)))


def apply_defense(decisions, policy: DefensePolicy, rng=None, rank_key=None):
    """Flip the ``ceil(p_d * N)`` most confident flippable decisions.

    ``decisions`` is a sequence of ``(label, confidence)``; N counts the
    entries carrying the flippable label for ``policy.scope``.  Ties are
    broken by lower index.  ``rank_key`` optionally replaces the confidence
    as the ranking score (useful when softmax outputs saturate at 1.0).
    ``rng`` is accepted for interface symmetry; selection is deterministic.

    Returns ``(flipped decisions, flip indices)`` with indices ascending.
    """
    decisions = list(decisions)
    labels = np.array([int(d[0]) for d in decisions], np.int64)
    conf = np.array([float(d[1]) for d in decisions], float)
    if conf.size and (np.any(conf < 0.5 - 1e-12) or np.any(conf > 1.0 + 1e-12)):
        raise ValueError("confidences must lie in [0.5, 1]")
    target = policy.flippable_label
    cand = np.flatnonzero(labels == target)
    k = n_flips(policy.p_d, cand.size)
    if k == 0:
        return decisions, np.zeros(0, np.int64)
    score = conf if rank_key is None else np.asarray(rank_key, float)
    if score.shape != conf.shape:
        raise ValueError("rank_key must have one entry per decision")
    # stable sort on -score keeps lower indices first among ties
    order = cand[np.argsort(-score[cand], kind="stable")]
    flips = np.sort(order[:k])
    out = list(decisions)
    for i in flips:
        out[i] = (1 - target, decisions[i][1])
    return out, flips


# ---------------------------------------------------------------------------
# scenario-level evaluation


def evaluate_defense_scenario2(pd_values, gamma_db: float, n_trials: int, seed: int, cfg=None, world=None):
    """Attack success probability for each ``p_d`` (one seed).

    The gNodeB's classifier, the adversary's observations and the GAN's
    random stream are shared across ``p_d`` values, so rows differ only by
    the flipped feedback labels.  Returns ``[(p_d, success_probability)]``.
    """
    from .neural import TrainConfig
    from .scenario2 import (
        AuthConfig,
        AuthWorld,
        build_auth_dataset,
        collect_adversary_observations,
        feedback_labels,
        run_spoofing_attack,
        train_auth_classifier,
        train_spoofer,
    )

    if cfg is not None:
        world = cfg.auth_world(gamma_db)
        train_cfg = cfg.train(seed, "C_S")
        n_obs = cfg["n_observations"]
        all_time = cfg["defense_all_time"]
    else:
        world = world or AuthWorld(auth=AuthConfig(gamma_db))
        train_cfg = TrainConfig(seed=seed)
        n_obs = world.auth.n_samples
        all_time = False
    data = build_auth_dataset(world.auth, world.ofdm, seed, world)
    c_s, _ = train_auth_classifier(data, train_cfg)
    obs = collect_adversary_observations(world, n_obs, seed)
    out = []
    for p in pd_values:
        policy = DefensePolicy(float(p), scope=Scope.AUTH, all_time=all_time)
        labels, _ = feedback_labels(c_s, obs, policy if p > 0 else None)
        gan = train_spoofer(world, obs, labels, seed)
        if policy.all_time and p > 0:
            res = _spoof_with_live_defense(c_s, gan, world, n_trials, seed, policy)
        else:
            res = run_spoofing_attack(c_s, gan, world, n_trials, seed)
        out.append((float(p), res.success_probability))
    return out


def _spoof_with_live_defense(c_s, gan, world, n_trials, seed, policy):
    """Spoof trials judged with the defense still active: the spoofed
    requests compete with an equal number of genuine UE requests for the
    flips."""
    from .neural import generate_spoof, predict_batch
    from .scenario2 import SpoofResult, _to_complex, auth_margin, receive, ue_rows
    from .streams import stream

    rows = generate_spoof(gan.generator, stream(seed, "spoof", "noise"), n_trials)
    spoof = receive(world, _to_complex(rows), world.gamma_db, stream(seed, "spoof", "channel"))
    genuine = ue_rows(world, n_trials, world.gamma_db, stream(seed, "spoof", "genuine"))
    both = np.concatenate([spoof, genuine])
    lab, conf = predict_batch(c_s, both)
    _, flips = apply_defense(list(zip(lab, conf)), policy, rank_key=auth_margin(c_s, both))
    lab[flips] = 0
    return SpoofResult(n_trials, int(lab[:n_trials].sum()))


def evaluate_defense_scenario1(pd_values, world, n_slots: int, seed: int, c_t=None, cfg=None):
    """Surrogate degradation, residual attack impact and defender cost per ``p_d``.

    T withholds its most confident Idle decisions while A collects its
    training data.  Returns a list of dicts with keys ``p_d``,
    ``no_ack_error``, ``ack_detection``, ``jamdata_reduction``,
    ``jamsensing_reduction`` and ``defender_cost``.
    """
    from .neural import TrainConfig, predict_batch
    from .scenario1 import (
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

    n_collect = cfg["n_adversary_samples"] if cfg is not None else 1000
    timing = cfg.timing() if cfg is not None else SlotTiming()
    fraction = cfg["budget_fraction"] if cfg is not None else 0.2
    if c_t is None:
        tr, _ = build_defender_dataset(world, 1000, seed).split()
        c_t = train_sensing_classifier(tr, TrainConfig(seed=seed))
    _, base = run_baseline(world, c_t, n_slots, seed)
    out = []
    for p in pd_values:
        policy = DefensePolicy(float(p), scope=Scope.TRANSMIT)
        data, info = build_adversary_dataset(world, c_t, n_collect, seed, defense=policy if p > 0 else None)
        c_a, rep = train_surrogate(data, cfg.train(seed, "C_A") if cfg is not None else TrainConfig(seed=seed))
        row = {
            "p_d": float(p),
            "no_ack_error": rep["no_ack_error"],
            "ack_detection": rep["ack_detection"],
            "defender_cost": info["defender_cost"],
        }
        for mode, key in (("JamData", "jamdata_reduction"), ("JamSensing", "jamsensing_reduction")):
            _, m = run_attack(world, c_t, c_a, mode, jamming_budget(n_slots, timing, fraction), timing, n_slots, seed)
            row[key] = throughput_reduction(base, m)
        out.append(row)
    return out


def defense_table_csv(rows) -> str:
    """``rows`` of ``(p_d, attack_success_probability)``."""
    lines = ["p_d,attack_success_probability"]
    lines += [f"{float(p)!r},{float(s)!r}" for p, s in rows]
    return "\n".join(lines) + "\n"
