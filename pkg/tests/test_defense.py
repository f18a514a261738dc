import math

import numpy as np
import pytest

from aml5g.defense import DefensePolicy, Scope, apply_defense, defense_table_csv, n_flips
from aml5g.neural import classifier_spec, mlp_init
from aml5g.scenario2 import AuthConfig, AuthWorld, collect_adversary_observations, feedback_labels


def auth(p, **kw):
    return DefensePolicy(p, scope=Scope.AUTH, **kw)


def test_zero_pd_is_identity():
    d = [(1, 0.9), (0, 0.8), (1, 0.7)]
    out, flips = apply_defense(d, auth(0.0))
    assert out == d and flips.size == 0


def test_full_pd_flips_every_intended():
    d = [(1, c) for c in (0.6, 0.7, 0.8)]
    out, flips = apply_defense(d, auth(1.0))
    assert [x[0] for x in out] == [0, 0, 0]
    assert flips.tolist() == [0, 1, 2]


def test_top_confidence_selection():
    conf = [0.91, 0.92, 0.93, 0.94, 0.95, 0.96, 0.97, 0.98, 0.99, 0.6]
    order = [3, 9, 0, 7, 5, 1, 8, 2, 6, 4]  # shuffled positions
    d = [None] * 10
    for pos, c in zip(order, conf):
        d[pos] = (1, c)
    out, flips = apply_defense(d, auth(0.2))
    assert sorted(flips.tolist()) == sorted([order[8], order[7]])  # 0.99 and 0.98
    assert all(out[i][0] == (0 if i in flips else 1) for i in range(10))
    # confidences are carried through unchanged
    assert [x[1] for x in out] == [x[1] for x in d]


def test_only_flippable_class_is_touched():
    rng = np.random.default_rng(0)
    labels = rng.integers(0, 2, 200)
    conf = rng.uniform(0.5, 1.0, 200)
    d = list(zip(labels, conf))
    for scope in Scope:
        pol = DefensePolicy(0.3, scope=scope)
        out, flips = apply_defense(d, pol)
        after = np.array([x[0] for x in out])
        changed = np.flatnonzero(after != labels)
        assert np.array_equal(changed, flips)
        assert np.all(labels[changed] == pol.flippable_label)
        assert flips.size == math.ceil(0.3 * np.sum(labels == pol.flippable_label))


def test_transmit_scope_flips_idle():
    d = [(0, 0.99), (1, 0.99), (0, 0.7)]
    out, flips = apply_defense(d, DefensePolicy(0.5, scope=Scope.TRANSMIT))
    assert flips.tolist() == [0]
    assert out[0][0] == 1


def test_ties_go_to_lower_index():
    d = [(1, 0.9)] * 5
    _, flips = apply_defense(d, auth(0.4))
    assert flips.tolist() == [0, 1]


def test_rank_key_overrides_confidence():
    d = [(1, 1.0), (1, 1.0), (1, 1.0)]
    _, flips = apply_defense(d, auth(0.34), rank_key=[1.0, 7.0, 3.0])
    assert flips.tolist() == [1, 2]
    with pytest.raises(ValueError):
        apply_defense(d, auth(0.5), rank_key=[1.0])


def test_flip_count_is_exact():
    assert n_flips(0.07, 100) == 7
    assert n_flips(0.01, 250) == 3
    assert n_flips(0.2, 0) == 0
    assert n_flips(1e-9, 10) == 1


@pytest.mark.parametrize("bad", [0.4, 1.2])
def test_confidence_range_checked(bad):
    with pytest.raises(ValueError):
        apply_defense([(1, bad)], auth(0.5))


def test_policy_validation():
    with pytest.raises(ValueError):
        DefensePolicy(1.5)
    with pytest.raises(ValueError):
        DefensePolicy(0.1, selection="Random")
    assert DefensePolicy(0.1, scope="TransmitDecisions").scope is Scope.TRANSMIT


def test_deterministic():
    rng = np.random.default_rng(1)
    d = list(zip(rng.integers(0, 2, 50), rng.uniform(0.5, 1, 50)))
    assert apply_defense(d, auth(0.1))[1].tolist() == apply_defense(d, auth(0.1))[1].tolist()


def test_feedback_flips_only_accepted_frames():
    world = AuthWorld(auth=AuthConfig(0.0))
    c_s = mlp_init(classifier_spec(400), np.random.default_rng(0))
    obs = collect_adversary_observations(world, 300, 0)
    clean, _ = feedback_labels(c_s, obs)
    for p in (0.01, 0.05, 0.2):
        lab, flips = feedback_labels(c_s, obs, auth(p))
        changed = np.flatnonzero(lab != clean)
        assert np.array_equal(changed, flips)
        assert np.all(clean[changed] == 1) and np.all(lab[changed] == 0)
        assert flips.size == math.ceil(round(p * clean.sum(), 9))


def test_defense_table_csv():
    text = defense_table_csv([(0.0, 0.9), (0.01, 0.682)])
    assert text.splitlines() == ["p_d,attack_success_probability", "0.0,0.9", "0.01,0.682"]


# ---------------------------------------------------------------------------
# scenario-level behaviour


def test_zero_pd_adversary_data_matches_undefended():
    from aml5g.scenario1 import build_adversary_dataset

    import stacks

    s = stacks.sharing_stack(0)
    a, _ = build_adversary_dataset(s["world"], s["c_t"], 300, 4)
    b, info = build_adversary_dataset(s["world"], s["c_t"], 300, 4, defense=DefensePolicy(0.0, scope=Scope.TRANSMIT))
    assert np.array_equal(a.features, b.features) and np.array_equal(a.labels, b.labels)
    assert info["defender_cost"] == 0.0


@pytest.mark.slow
@pytest.mark.parametrize("p_d", [0.01, 0.05, 0.1])
def test_defender_cost_tracks_pd(p_d):
    from aml5g.scenario1 import build_adversary_dataset

    import stacks

    s = stacks.sharing_stack(0)
    pol = DefensePolicy(p_d, scope=Scope.TRANSMIT)
    costs = [build_adversary_dataset(s["world"], s["c_t"], 1000, seed, defense=pol)[1]["defender_cost"] for seed in range(10)]
    assert 0.8 * p_d <= np.mean(costs) <= 1.2 * p_d


@pytest.mark.slow
@pytest.mark.xfail(
    strict=False,
    reason="A's features include the data window, so a withheld transmission is seen as no-ACK "
    "and is correctly labelled; the surrogate is not degraded (see the decisions ledger)",
)
def test_surrogate_error_rises_with_defense():
    from aml5g.neural import TrainConfig
    from aml5g.scenario1 import build_adversary_dataset, train_surrogate

    import stacks

    s = stacks.sharing_stack(0)
    err = {0.0: [], 0.05: []}
    for seed in range(10):
        for p in err:
            pol = DefensePolicy(p, scope=Scope.TRANSMIT) if p else None
            data, _ = build_adversary_dataset(s["world"], s["c_t"], 1000, seed, defense=pol)
            err[p].append(train_surrogate(data, TrainConfig(seed=seed))[1]["no_ack_error"])
    assert np.mean(err[0.05]) > np.mean(err[0.0])


@pytest.mark.slow
def test_zero_pd_row_reproduces_undefended_attack():
    import stacks

    d = stacks.defense2().per_seed("attack_success_probability", p_d=0.0)
    s = stacks.spoof2().per_seed("success_probability", gamma_db=-3.0)
    assert d == s and len(d) == 10
