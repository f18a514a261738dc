import math

import numpy as np
import pytest

from aml5g.neural import LabeledDataset, TrainConfig, predict_batch
from aml5g.scenario1 import (
    ACK,
    BUSY,
    IDLE,
    AttackMode,
    EnergyBudget,
    OccupancyModel,
    SharingWorld,
    SlotTiming,
    SlotTrace,
    build_adversary_dataset,
    build_defender_dataset,
    jamming_budget,
    observe_at_a,
    reception_ok,
    run_attack,
    run_baseline,
    sense_at_t,
    slot_metrics,
    t_features,
    throughput_reduction,
    train_surrogate,
)

import stacks

# ---------------------------------------------------------------------------
# model pieces


def test_iid_occupancy_rate():
    busy = OccupancyModel("Iid", p_busy=0.3).sample(20000, np.random.default_rng(0))
    assert busy.mean() == pytest.approx(0.3, abs=0.015)


def test_markov_occupancy_stationary_share_and_runs():
    m = OccupancyModel("Markov", p_idle_to_busy=0.05, p_busy_to_idle=0.2)
    busy = m.sample(50000, np.random.default_rng(1))
    assert busy.mean() == pytest.approx(0.05 / 0.25, abs=0.03)
    # mean busy run length is 1 / p_busy_to_idle
    edges = np.diff(np.r_[0, busy.astype(int), 0])
    runs = np.flatnonzero(edges == -1) - np.flatnonzero(edges == 1)
    assert runs.mean() == pytest.approx(5.0, rel=0.1)


def test_occupancy_validation():
    with pytest.raises(ValueError):
        OccupancyModel("Poisson")
    with pytest.raises(ValueError):
        OccupancyModel(p_busy=1.5)


def test_energy_budget():
    b = jamming_budget(2000, SlotTiming(), 0.2)
    assert b.total_units == pytest.approx(3600)
    n = 0
    while b.try_spend(9.0):
        n += 1
    assert n == 400
    assert b.remaining == pytest.approx(0.0)
    assert not b.try_spend(1.0)
    with pytest.raises(ValueError):
        EnergyBudget(-1)
    with pytest.raises(ValueError):
        SlotTiming(0, 9)


def test_geometry():
    w = SharingWorld()
    assert math.dist(w.radar_pos, w.t_pos) == pytest.approx(1000.0)
    assert math.dist(w.radar_pos, w.a_pos) == pytest.approx(1010.0)


def test_link_budget_decides_reception():
    w = SharingWorld()
    assert w.sinr_at_r_db(False, False) >= w.sinr_threshold_db
    assert w.sinr_at_r_db(True, False) < w.sinr_threshold_db
    assert w.sinr_at_r_db(False, True) < w.sinr_threshold_db


def test_ber_rule_agrees_with_sinr_rule():
    w = SharingWorld(success_rule="ber")
    for busy, jammed, want in ((False, False, True), (True, False, False), (False, True, False)):
        assert reception_ok(w, busy, jammed, 0, "check", 3) is want


def test_world_validation():
    with pytest.raises(ValueError):
        SharingWorld(success_rule="magic")
    with pytest.raises(ValueError):
        SharingWorld(window_samples=100)


def test_colocated_adversary_sees_t_plus_own_noise():
    w = SharingWorld()
    w2 = SharingWorld(a_pos=w.t_pos)
    n = w.window_samples
    at_t = sense_at_t(w2, True, 5, "p", 7)
    at_a = observe_at_a(w2, True, False, 5, "p", 7)[:n]
    from aml5g.scenario1 import _noise

    diff = (at_a - _noise(w2, 5, "p", 7, "A", 2 * n)[:n]) - (at_t - _noise(w2, 5, "p", 7, "T", n))
    assert np.allclose(diff, 0.0, atol=1e-9)
    assert not np.allclose(at_a, at_t)


def test_radar_raises_every_pulse_bin():
    w = SharingWorld(noise_power=1e-12, radar_inr_db=130.0, fading=False)
    quiet = t_features(w, sense_at_t(w, False, 0, "p", 0))
    loud = t_features(w, sense_at_t(w, True, 0, "p", 0))
    from aml5g.scenario1 import _radar_wave

    pulse = np.abs(_radar_wave(w, 0, "p", 0)[: w.window_samples]) > 0
    bins = pulse.reshape(w.n_bins, -1).any(axis=1)
    assert bins.any()
    assert np.all(loud[bins] > quiet[bins])


def test_throughput_reduction_arithmetic():
    def m(s):
        t = SlotTrace(np.zeros(s, bool), [IDLE] * s, np.ones(s, bool), ["None"] * s, np.ones(s, bool), [""] * s)
        return slot_metrics(t)

    assert throughput_reduction(m(500), m(500)) == 0.0
    assert throughput_reduction(m(500), m(0)) == 1.0
    assert throughput_reduction(m(500), m(400)) == pytest.approx(0.2)
    with pytest.raises(ValueError):
        throughput_reduction(m(0), m(0))


def test_trace_invariants_and_csv():
    t = SlotTrace([0, 1, 0], [IDLE, BUSY, IDLE], [1, 0, 1], ["JamData", "None", "None"], [0, 0, 1], [ACK, "NoAck", ACK])
    back = SlotTrace.from_csv(t.to_csv())
    assert back.to_csv() == t.to_csv()
    assert t.to_csv().splitlines()[0] == ",".join(SlotTrace.COLUMNS)
    with pytest.raises(ValueError):
        SlotTrace([0], [BUSY], [1], ["None"], [0], [""])
    with pytest.raises(ValueError):
        SlotTrace([0], [IDLE], [0], ["None"], [1], [""])


# ---------------------------------------------------------------------------
# datasets and classifiers


def test_defender_dataset_split_and_balance():
    d = stacks.sharing_stack()["data"]
    assert len(d) == 1000 and d.features.shape[1] == 200
    tr, te = d.split()
    assert len(tr) == len(te) == 500
    assert d.labels.sum() == 500


def test_defender_dataset_deterministic():
    w = SharingWorld()
    a = build_defender_dataset(w, 20, 3)
    b = build_defender_dataset(w, 20, 3)
    assert np.array_equal(a.features, b.features) and np.array_equal(a.labels, b.labels)
    assert not np.array_equal(a.features, build_defender_dataset(w, 20, 4).features)


def test_sensing_classifier_quality():
    s = stacks.sharing_stack()
    lab, _ = predict_batch(s["c_t"], s["test"].features)
    y = s["test"].labels
    assert np.mean(lab[y == 0] == 0) == 1.0
    assert np.mean(lab[y == 1] == 0) <= 0.10


def test_baseline_defaults():
    s = stacks.sharing_stack()
    _, m = run_baseline(s["world"], s["c_t"], 2000, 0)
    assert m.normalized_throughput >= 0.95
    assert m.busy_detection_error <= 0.10
    assert m.n_slots == 2000


def test_baseline_all_idle_throughput_is_idle_detection():
    s = stacks.sharing_stack()
    w = SharingWorld(occupancy=OccupancyModel(p_busy=0.0))
    _, m = run_baseline(w, s["c_t"], 200, 1)
    assert m.n_busy == 0
    assert m.normalized_throughput == m.idle_detection_rate


def test_baseline_all_busy_transmits_only_on_misses():
    s = stacks.sharing_stack()
    w = SharingWorld(occupancy=OccupancyModel(p_busy=1.0))
    trace, m = run_baseline(w, s["c_t"], 200, 1)
    assert m.n_idle == 0
    assert m.n_transmitted == int(np.sum(trace.ct_decision == IDLE))
    assert m.n_transmitted == round(m.busy_detection_error * 200)
    assert m.successes == 0


def test_adversary_dataset():
    s = stacks.sharing_stack()
    d = s["adv"]
    assert len(d) == 1000 and d.features.shape[1] == 400
    assert 0 < d.labels.mean() < 1
    again, _ = build_adversary_dataset(s["world"], s["c_t"], 1000, 0)
    assert np.array_equal(again.features, d.features)


def test_surrogate_learns_acks():
    rep = stacks.sharing_stack()["report"]
    assert rep["ack_detection"] >= 0.95
    assert rep["test_accuracy"] >= 0.9


def test_surrogate_on_shuffled_labels_is_chance():
    d = stacks.sharing_stack()["adv"]
    # balance the classes so that chance is 50%
    rng = np.random.default_rng(0)
    y = rng.permutation(np.arange(len(d)) % 2)
    _, rep = train_surrogate(LabeledDataset(d.features, y, d.label_semantics), TrainConfig(seed=1))
    assert rep["test_accuracy"] == pytest.approx(0.5, abs=0.05)


# ---------------------------------------------------------------------------
# attacks


def test_zero_budget_attack_equals_baseline():
    s = stacks.sharing_stack()
    base, _ = run_baseline(s["world"], s["c_t"], 300, 2, c_a=s["c_a"])
    for mode in ("JamData", "JamSensing"):
        trace, m = run_attack(s["world"], s["c_t"], s["c_a"], mode, EnergyBudget(0), SlotTiming(), 300, 2)
        assert trace.to_csv() == base.to_csv()
        assert m.n_jams == 0 and m.energy_spent == 0


def test_jamming_respects_budget_and_targets_predicted_acks():
    s = stacks.sharing_stack()
    n = 500
    for mode, unit in (("JamData", 9.0), ("JamSensing", 1.0)):
        budget = jamming_budget(n, SlotTiming(), 0.2)
        trace, m = run_attack(s["world"], s["c_t"], s["c_a"], mode, budget, SlotTiming(), n, 3)
        jams = trace.jam_action == mode
        assert m.energy_spent == pytest.approx(jams.sum() * unit)
        assert m.energy_spent <= budget.total_units + 1e-9
        assert np.all(trace.adversary_prediction[jams] == ACK)
        assert not np.any(trace.ack[jams])  # every jam lands
    # JamData buys 0.2 * n jams exactly, JamSensing can afford one per slot
    assert m.n_jams == int(np.sum(trace.adversary_prediction == ACK))


def test_jam_sensing_flips_decisions_to_busy():
    s = stacks.sharing_stack()
    trace, _ = run_attack(s["world"], s["c_t"], s["c_a"], "JamSensing", EnergyBudget(1e9), SlotTiming(), 200, 4)
    jams = trace.jam_action == AttackMode.JAM_SENSING.value
    assert jams.any()
    assert np.all(trace.ct_decision[jams] == BUSY)


def test_unknown_attack_mode():
    s = stacks.sharing_stack()
    with pytest.raises(ValueError):
        run_attack(s["world"], s["c_t"], s["c_a"], "JamEverything", EnergyBudget(10), SlotTiming(), 10, 0)
