import numpy as np
import pytest

from aml5g.neural import (
    GanPair,
    LabeledDataset,
    LabelSemantics,
    Mlp,
    MlpSpec,
    Role,
    TrainConfig,
    accuracy,
    backward,
    classifier_spec,
    cross_entropy,
    discriminator_spec,
    dumps_mlp,
    forward,
    gan_init,
    generate_spoof,
    generator_spec,
    grad_check,
    load_mlp,
    loads_mlp,
    mlp_init,
    predict,
    predict_batch,
    save_mlp,
    softmax,
    train_classifier,
    train_gan,
)
from aml5g.signal import unit_power_rows

# Gaussian noise on discriminator inputs; without it the discriminator
# separates a point mass from any generated spread and the generator oscillates
INSTANCE_NOISE = 1.0


def zero_net(sizes=(3, 4, 2)):
    s = MlpSpec(sizes)
    return Mlp(s, [np.zeros((b, a)) for a, b in zip(sizes[:-1], sizes[1:])], [np.zeros(b) for b in sizes[1:]])


def blobs(n, seed):
    rng = np.random.default_rng(seed)
    y = rng.integers(0, 2, n)
    x = rng.standard_normal((n, 2)) * 0.5 + np.where(y[:, None] == 1, [2.0, 2.0], [-2.0, -2.0])
    return LabeledDataset(x, y)


# specs and init


def test_classifier_parameter_count():
    expect = 200 * 512 + 512 + 512 * 512 + 512 + 512 * 2 + 2
    assert expect == 366_594
    assert classifier_spec(200).n_params() == expect
    m = mlp_init(classifier_spec(200), np.random.default_rng(0))
    assert sum(p.size for p in m.params()) == expect


def test_reference_architectures():
    assert classifier_spec(400).layer_sizes == (400, 512, 512, 2)
    assert classifier_spec(400).dropout_after == {1: 0.2, 2: 0.2}
    assert generator_spec().layer_sizes == (400, 128, 128, 128, 400)
    assert discriminator_spec().layer_sizes == (400, 128, 128, 128, 2)


def test_init_deterministic():
    a = mlp_init(classifier_spec(10), np.random.default_rng(3))
    b = mlp_init(classifier_spec(10), np.random.default_rng(3))
    assert all(np.array_equal(p, q) for p, q in zip(a.params(), b.params()))


@pytest.mark.parametrize(
    "sizes, kw",
    [((5,), {}), ((5, 0, 2), {}), ((5, 3, 2), {"dropout_after": {2: 0.1}}), ((5, 3, 2), {"dropout_after": {1: 1.0}})],
)
def test_invalid_specs(sizes, kw):
    with pytest.raises(ValueError):
        MlpSpec(sizes, **kw)


def test_mismatched_parameters_rejected():
    with pytest.raises(ValueError):
        Mlp(MlpSpec((3, 2)), [np.zeros((3, 2))], [np.zeros(2)])


# forward


def test_softmax_rows_sum_to_one():
    z = np.random.default_rng(0).standard_normal((1000, 2)) * 50
    assert np.max(np.abs(softmax(z).sum(axis=1) - 1)) <= 1e-9
    m = mlp_init(classifier_spec(20), np.random.default_rng(1))
    out, _ = forward(m, np.random.default_rng(2).standard_normal((500, 20)) * 10)
    assert np.max(np.abs(out.sum(axis=1) - 1)) <= 1e-9


def test_zero_network_is_undecided():
    out, _ = forward(zero_net(), np.ones((4, 3)))
    assert np.all(out == 0.5)
    label, conf = predict(zero_net(), np.ones(3))
    assert (label, conf) == (0, 0.5)


def test_train_equals_eval_without_dropout():
    m = mlp_init(MlpSpec((6, 8, 8, 2)), np.random.default_rng(0))
    x = np.random.default_rng(1).standard_normal((5, 6))
    a, _ = forward(m, x, "eval")
    b, _ = forward(m, x, "train", np.random.default_rng(2))
    assert np.array_equal(a, b)


def test_dropout_preserves_expectation():
    spec = MlpSpec((4, 256, 2), dropout_after={1: 0.2})
    m = mlp_init(spec, np.random.default_rng(0))
    x = np.abs(np.random.default_rng(1).standard_normal((1, 4)))
    _, ce = forward(m, x, "eval")
    rng = np.random.default_rng(2)
    acts = np.mean([forward(m, x, "train", rng)[1]["acts"][1] for _ in range(2000)], axis=0)
    assert acts.sum() == pytest.approx(ce["acts"][1].sum(), rel=0.02)


def test_forward_rejects_wrong_width_and_mode():
    m = mlp_init(MlpSpec((3, 2)), np.random.default_rng(0))
    with pytest.raises(ValueError):
        forward(m, np.ones((1, 4)))
    with pytest.raises(ValueError):
        forward(m, np.ones((1, 3)), "bogus")


def test_predict_is_repeatable():
    m = mlp_init(classifier_spec(7), np.random.default_rng(0))
    x = np.random.default_rng(1).standard_normal(7)
    assert predict(m, x) == predict(m, x)
    with pytest.raises(ValueError):
        predict(m, np.ones((2, 7)))


# gradients


@pytest.mark.parametrize(
    "spec",
    [classifier_spec(200), generator_spec(), discriminator_spec(), MlpSpec((4, 8, 2))],
    ids=["classifier", "generator", "discriminator", "small"],
)
def test_grad_check(spec):
    rng = np.random.default_rng(0)
    m = mlp_init(spec, rng)
    x = rng.standard_normal(spec.layer_sizes[0])
    target = 1 if spec.output_activation == "softmax" else rng.standard_normal(spec.layer_sizes[-1])
    assert grad_check(m, (x, target), np.random.default_rng(1)) <= 1e-4


def test_grad_check_reproducible():
    m = mlp_init(MlpSpec((4, 8, 2)), np.random.default_rng(0))
    s = (np.ones(4), 0)
    assert grad_check(m, s, np.random.default_rng(5)) == grad_check(m, s, np.random.default_rng(5))


def test_zero_input_gives_zero_first_layer_gradient():
    m = mlp_init(MlpSpec((5, 6, 2)), np.random.default_rng(0))
    m.biases[0][:] = 0.3
    out, cache = forward(m, np.zeros((1, 5)))
    _, g = cross_entropy(out, np.array([1]))
    dws, dbs, _ = backward(m, cache, g)
    assert not np.any(dws[0])
    assert np.any(dbs[0])


def test_backward_input_gradient_matches_finite_differences():
    m = mlp_init(MlpSpec((5, 7, 2)), np.random.default_rng(0))
    x = np.random.default_rng(1).standard_normal((1, 5))

    def loss(v):
        out, _ = forward(m, v)
        return cross_entropy(out, np.array([1]))[0]

    out, cache = forward(m, x)
    _, g = cross_entropy(out, np.array([1]))
    _, _, gx = backward(m, cache, g)
    e = np.eye(5) * 1e-6
    num = np.array([(loss(x + e[i]) - loss(x - e[i])) / 2e-6 for i in range(5)])
    assert np.allclose(gx[0], num, atol=1e-6)


# training


def test_separable_blobs():
    m = mlp_init(classifier_spec(2, hidden=32), np.random.default_rng(0))
    trained, hist = train_classifier(m, blobs(1000, 1), TrainConfig(n_steps=1000))
    assert accuracy(trained, blobs(1000, 2)) >= 0.99
    assert hist[-1] < hist[0]
    # stored parameters are float64 and independent arrays
    assert all(p.dtype == np.float64 and p.base is None for p in trained.params())
    # the input model is untouched
    assert np.array_equal(m.weights[0], mlp_init(classifier_spec(2, hidden=32), np.random.default_rng(0)).weights[0])


def test_training_deterministic():
    m = mlp_init(classifier_spec(2, hidden=16), np.random.default_rng(0))
    cfg = TrainConfig(n_steps=50, seed=3)
    a, _ = train_classifier(m, blobs(300, 1), cfg)
    b, _ = train_classifier(m, blobs(300, 1), cfg)
    assert dumps_mlp(a) == dumps_mlp(b)


def test_float64_training_agrees_with_float32():
    m = mlp_init(classifier_spec(2, hidden=16), np.random.default_rng(0))
    a, _ = train_classifier(m, blobs(300, 1), TrainConfig(n_steps=100))
    b, _ = train_classifier(m, blobs(300, 1), TrainConfig(n_steps=100, precision="float64"))
    x = blobs(300, 2).features
    assert np.array_equal(predict_batch(a, x)[0], predict_batch(b, x)[0])


def test_sgd_optimizer_trains():
    m = mlp_init(classifier_spec(2, hidden=16), np.random.default_rng(0))
    trained, _ = train_classifier(m, blobs(500, 1), TrainConfig(n_steps=300, optimizer="sgd", learning_rate=0.05))
    assert accuracy(trained, blobs(500, 2)) >= 0.99


def test_zero_steps_invalid_for_classifier():
    m = mlp_init(classifier_spec(2, hidden=8), np.random.default_rng(0))
    with pytest.raises(ValueError):
        train_classifier(m, blobs(100, 0), TrainConfig(n_steps=0))


def test_single_class_dataset_rejected():
    m = mlp_init(classifier_spec(2, hidden=8), np.random.default_rng(0))
    d = LabeledDataset(np.ones((10, 2)), np.zeros(10))
    with pytest.raises(ValueError):
        train_classifier(m, d, TrainConfig(n_steps=5))


@pytest.mark.parametrize("kw", [{"batch_size": 0}, {"learning_rate": 0}, {"optimizer": "rmsprop"}, {"precision": "half"}])
def test_train_config_validation(kw):
    with pytest.raises(ValueError):
        TrainConfig(**kw)


def test_dataset_validation_and_split():
    with pytest.raises(ValueError):
        LabeledDataset(np.ones((3, 2)), [0, 1])
    with pytest.raises(ValueError):
        LabeledDataset(np.ones((2, 2)), [0, 2])
    with pytest.raises(ValueError):
        LabeledDataset(np.array([[np.inf, 0.0]]), [0])
    tr, te = LabeledDataset(np.arange(20.0).reshape(10, 2), np.r_[np.zeros(5), np.ones(5)], LabelSemantics.ACK_NOACK).split()
    assert len(tr) == len(te) == 5
    assert tr.features[0, 0] == 0 and te.features[0, 0] == 10
    assert te.label_semantics is LabelSemantics.ACK_NOACK


# persistence


def test_model_blob_round_trip(tmp_path):
    m = mlp_init(classifier_spec(6, hidden=5), np.random.default_rng(0), Role.C_T)
    m, _ = train_classifier(m, LabeledDataset(np.random.default_rng(1).standard_normal((200, 6)), np.arange(200) % 2), TrainConfig(n_steps=3))
    save_mlp(m, tmp_path / "c_t.bin")
    back = load_mlp(tmp_path / "c_t.bin")
    assert back.role is Role.C_T
    assert dumps_mlp(back) == dumps_mlp(m)
    x = np.random.default_rng(2).standard_normal((4, 6))
    assert np.array_equal(forward(back, x)[0], forward(m, x)[0])


def test_corrupt_blob_rejected():
    blob = dumps_mlp(mlp_init(MlpSpec((3, 2)), np.random.default_rng(0)))
    with pytest.raises(ValueError):
        loads_mlp(b"XXXXXXXX" + blob[8:])
    with pytest.raises(ValueError):
        loads_mlp(blob + b"\0")


# GAN


def test_generate_spoof_shape_power_and_determinism():
    pair = gan_init(np.random.default_rng(0))
    assert generate_spoof(pair.generator, np.random.default_rng(1), 0).shape == (0, 400)
    a = generate_spoof(pair.generator, np.random.default_rng(1), 8)
    b = generate_spoof(pair.generator, np.random.default_rng(1), 8)
    assert np.array_equal(a, b)
    assert np.allclose(np.mean(a[:, 0::2] ** 2 + a[:, 1::2] ** 2, axis=1), 1.0, atol=1e-9)
    with pytest.raises(ValueError):
        generate_spoof(pair.discriminator, np.random.default_rng(1), 2)


def test_gan_zero_steps_returns_pair_unchanged():
    pair = gan_init(np.random.default_rng(0), 8, 4)
    out, acc = train_gan(pair, np.ones((10, 8)), TrainConfig(n_steps=0), np.random.default_rng(1))
    assert acc.size == 0
    assert dumps_mlp(out.generator) == dumps_mlp(pair.generator)
    assert dumps_mlp(out.discriminator) == dumps_mlp(pair.discriminator)


def test_gan_pair_width_mismatch():
    g = mlp_init(generator_spec(8, 4), np.random.default_rng(0), Role.GENERATOR)
    d = mlp_init(discriminator_spec(6, 4), np.random.default_rng(0), Role.DISCRIMINATOR)
    with pytest.raises(ValueError):
        GanPair(g, d, 8)


@pytest.mark.slow
def test_gan_learns_constant_vector():
    rng = np.random.default_rng(0)
    c = unit_power_rows(rng.standard_normal(400))[0]
    cfg = TrainConfig(100, 2000, 1e-3, "adam", 0, 0.5)
    pair, _ = train_gan(gan_init(rng), np.tile(c, (200, 1)), cfg, rng, instance_noise=INSTANCE_NOISE)
    x = generate_spoof(pair.generator, rng, 500)
    assert np.linalg.norm(x.mean(axis=0) - c) <= 0.1 * np.sqrt(400)


def _held_out_d_accuracy(seed):
    rng = np.random.default_rng(seed)
    width = 16
    mu = unit_power_rows(rng.standard_normal(width))[0]

    def real(n):
        return unit_power_rows(mu + 0.3 * rng.standard_normal((n, width)))

    cfg = TrainConfig(100, 1500, 1e-3, "adam", 0, 0.5)
    pair, _ = train_gan(gan_init(rng, width, 32), real(1000), cfg, rng, instance_noise=0.3)
    x = np.concatenate([real(500), generate_spoof(pair.generator, rng, 500)])
    y = np.r_[np.ones(500), np.zeros(500)]
    return float(np.mean(predict_batch(pair.discriminator, x)[0] == y))


@pytest.mark.slow
def test_discriminator_near_chance_after_training():
    accs = [_held_out_d_accuracy(s) for s in range(5)]
    assert 0.4 <= np.mean(accs) <= 0.7, accs
