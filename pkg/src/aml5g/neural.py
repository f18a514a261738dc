"""Small dense networks in numpy: forward/backward, Adam, training, GAN.

Weights follow the ``(fan_out, fan_in)`` convention and batches are rows, so
a dense layer computes ``x @ W.T + b``.
"""

from __future__ import annotations

import copy
import enum
import io
import json
import logging
import math
import struct
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .signal import unit_power_rows

log = logging.getLogger(__name__)

MAGIC = b"AML5GNN1"


class Role(str, enum.Enum):
    C_T = "C_T"
    C_A = "C_A"
    C_S = "C_S"
    GENERATOR = "Generator"
    DISCRIMINATOR = "Discriminator"
    OTHER = "Other"


class LabelSemantics(str, enum.Enum):
    # label 1 means: Busy / ACK / Intended / Real
    IDLE_BUSY = "IdleBusy"
    ACK_NOACK = "AckNoAck"
    INTENDED_OTHER = "IntendedOther"
    REAL_SPOOF = "RealSpoof"


@dataclass(frozen=True)
class MlpSpec:
    layer_sizes: tuple
    output_activation: str = "softmax"
    dropout_after: dict = field(default_factory=dict)
    hidden_activation: str = "relu"

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.layer_sizes)
        object.__setattr__(self, "layer_sizes", sizes)
        object.__setattr__(self, "dropout_after", {int(k): float(v) for k, v in self.dropout_after.items()})
        if len(sizes) < 2:
            raise ValueError("an MLP needs at least an input and an output layer")
        if min(sizes) < 1:
            raise ValueError("layer sizes must be >= 1")
        if self.hidden_activation != "relu":
            raise ValueError("only ReLU hidden layers are supported")
        if self.output_activation not in ("softmax", "linear", "tanh"):
            raise ValueError(f"unknown output activation {self.output_activation!r}")
        for k, r in self.dropout_after.items():
            if not 1 <= k <= len(sizes) - 2:
                raise ValueError(f"dropout index {k} is not a hidden layer")
            if not 0.0 <= r < 1.0:
                raise ValueError(f"dropout ratio {r} outside [0, 1)")

    @property
    def n_layers(self) -> int:
        return len(self.layer_sizes) - 1

    def n_params(self) -> int:
        s = self.layer_sizes
        return sum(s[i] * s[i + 1] + s[i + 1] for i in range(len(s) - 1))


def classifier_spec(n_inputs: int, hidden: int = 512, dropout: float = 0.2) -> MlpSpec:
    """Two dense ReLU layers with dropout after each, softmax over two classes."""
    return MlpSpec((n_inputs, hidden, hidden, 2), "softmax", {1: dropout, 2: dropout})


def generator_spec(width: int = 400, hidden: int = 128) -> MlpSpec:
    return MlpSpec((width, hidden, hidden, hidden, width), "linear")


def discriminator_spec(width: int = 400, hidden: int = 128) -> MlpSpec:
    return MlpSpec((width, hidden, hidden, hidden, 2), "softmax")


@dataclass
class Mlp:
    spec: MlpSpec
    weights: list
    biases: list
    role: Role = Role.OTHER
    x_mean: np.ndarray | None = None
    x_std: np.ndarray | None = None
    train_accuracy: float | None = None

    def __post_init__(self):
        self.role = Role(self.role)
        s = self.spec.layer_sizes
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (s[i + 1], s[i]) or b.shape != (s[i + 1],):
                raise ValueError(f"layer {i} parameters do not match spec {s}")

    @property
    def n_inputs(self) -> int:
        return self.spec.layer_sizes[0]

    def params(self) -> list:
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def copy(self) -> "Mlp":
        return copy.deepcopy(self)

    def pack(self) -> np.ndarray:
        """Rebind all parameters as views of one flat buffer and return it."""
        ps = self.params()
        flat = np.concatenate([p.ravel() for p in ps])
        views, i = [], 0
        for p in ps:
            views.append(flat[i : i + p.size].reshape(p.shape))
            i += p.size
        self.weights = views[0::2]
        self.biases = views[1::2]
        return flat


@dataclass
class LabeledDataset:
    features: np.ndarray
    labels: np.ndarray
    label_semantics: LabelSemantics = LabelSemantics.IDLE_BUSY

    def __post_init__(self):
        self.features = np.atleast_2d(np.asarray(self.features, dtype=float))
        self.labels = np.asarray(self.labels, dtype=np.int64).ravel()
        self.label_semantics = LabelSemantics(self.label_semantics)
        if self.features.shape[0] != self.labels.size:
            raise ValueError("features and labels disagree on sample count")
        if not np.all(np.isfinite(self.features)):
            raise ValueError("dataset contains non-finite features")
        if np.any((self.labels != 0) & (self.labels != 1)):
            raise ValueError("labels must be binary")

    def __len__(self) -> int:
        return self.labels.size

    def split(self):
        """First half for training, second half for testing."""
        h = len(self) // 2
        s = self.label_semantics
        return (
            LabeledDataset(self.features[:h], self.labels[:h], s),
            LabeledDataset(self.features[h:], self.labels[h:], s),
        )


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 100
    n_steps: int = 1000
    learning_rate: float = 1e-3
    optimizer: str = "adam"
    seed: int = 0
    beta1: float = 0.9
    precision: str = "float32"  # arithmetic during training; stored models are float64

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.n_steps < 0:
            raise ValueError("n_steps must be >= 0")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if self.precision not in ("float32", "float64"):
            raise ValueError(f"precision must be float32 or float64, got {self.precision!r}")


# ---------------------------------------------------------------------------
# core maths


def mlp_init(spec: MlpSpec, rng, role=Role.OTHER) -> Mlp:
    """He-uniform weights, zero biases."""
    ws, bs = [], []
    s = spec.layer_sizes
    for i in range(len(s) - 1):
        lim = np.sqrt(6.0 / s[i])
        ws.append(rng.uniform(-lim, lim, size=(s[i + 1], s[i])))
        bs.append(np.zeros(s[i + 1]))
    return Mlp(spec, ws, bs, role)


def softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _activate_output(spec: MlpSpec, z):
    if spec.output_activation == "softmax":
        return softmax(z)
    if spec.output_activation == "tanh":
        return np.tanh(z)
    return z


def forward(m: Mlp, batch, mode: str = "eval", rng=None):
    """Run a batch through ``m``.  Returns ``(outputs, cache)``.

    ``mode="train"`` applies inverted dropout and needs ``rng``.
    """
    x = np.atleast_2d(np.asarray(batch, dtype=float))
    dtype = m.weights[0].dtype
    if x.shape[1] != m.n_inputs:
        raise ValueError(f"batch width {x.shape[1]} != input size {m.n_inputs}")
    if mode not in ("train", "eval"):
        raise ValueError(f"unknown mode {mode!r}")
    if m.x_mean is not None:
        x = (x - m.x_mean) / m.x_std
    x = x.astype(dtype, copy=False)
    acts, masks = [x], []
    a = x
    n = m.spec.n_layers
    for i in range(n):
        z = a @ m.weights[i].T + m.biases[i]
        if i == n - 1:
            break
        a = np.maximum(z, 0.0)
        p = m.spec.dropout_after.get(i + 1, 0.0)
        if mode == "train" and p > 0:
            mask = (rng.random(a.shape) >= p).astype(dtype) * dtype.type(1.0 / (1.0 - p))
            a = a * mask
        else:
            mask = None
        masks.append(mask)
        acts.append(a)
    out = _activate_output(m.spec, z)
    return out, {"acts": acts, "masks": masks, "logits": z, "out": out}


def backward(m: Mlp, cache, grad_logits, need_dx: bool = True):
    """Gradients of a loss w.r.t. parameters and (unnormalised) input.

    ``grad_logits`` is dL/d(final pre-activation).  With ``need_dx=False``
    the input gradient is skipped and returned as None.
    """
    acts, masks = cache["acts"], cache["masks"]
    n = m.spec.n_layers
    dws, dbs = [None] * n, [None] * n
    g = np.asarray(grad_logits).astype(m.weights[0].dtype, copy=False)
    for i in range(n - 1, -1, -1):
        dws[i] = g.T @ acts[i]
        dbs[i] = g.sum(axis=0)
        if i == 0 and not need_dx:
            return dws, dbs, None
        g = g @ m.weights[i]
        if i > 0:
            if masks[i - 1] is not None:
                g = g * masks[i - 1]
            g = g * (acts[i] > 0)
    if m.x_mean is not None:
        g = g / m.x_std
    return dws, dbs, g


def output_to_logit_grad(m: Mlp, cache, grad_out):
    """Chain dL/d(output) back through the output activation."""
    act = m.spec.output_activation
    y = cache["out"]
    if act == "linear":
        return grad_out
    if act == "tanh":
        return grad_out * (1.0 - y**2)
    return y * (grad_out - np.sum(grad_out * y, axis=1, keepdims=True))


def cross_entropy(probs: np.ndarray, labels: np.ndarray):
    """Mean cross-entropy and its gradient w.r.t. softmax logits."""
    n = labels.size
    p = np.clip(probs[np.arange(n), labels], 1e-300, None)
    loss = float(-np.mean(np.log(p)))
    g = probs.copy()
    g[np.arange(n), labels] -= 1.0
    return loss, g / n


def _packed_base(params):
    """The flat buffer ``params`` tile in order (see ``Mlp.pack``), or None."""
    base = params[0].base
    if base is None or base.ndim != 1 or sum(p.size for p in params) != base.size:
        return None
    addr = base.__array_interface__["data"][0]
    for p in params:
        if p.base is not base or p.__array_interface__["data"][0] != addr:
            return None
        addr += p.nbytes
    return base


class Adam:
    """Adam over a list of arrays, updated in place.

    Packed parameters (``Mlp.pack``) are updated with a single vector op.
    """

    def __init__(self, params, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.b1, self.b2, self.eps = lr, beta1, beta2, eps
        n = sum(p.size for p in params)
        dt = params[0].dtype
        self.m = np.zeros(n, dt)
        self.v = np.zeros(n, dt)
        self._g = np.empty(n, dt)
        self._tmp = np.empty(n, dt)
        self.t = 0

    def step(self, params, grads):
        self.t += 1
        g, tmp = self._g, self._tmp
        np.concatenate([x.ravel() for x in grads], out=g)
        self.m *= self.b1
        np.multiply(g, 1.0 - self.b1, out=tmp)
        self.m += tmp
        self.v *= self.b2
        np.multiply(g, g, out=tmp)
        tmp *= 1.0 - self.b2
        self.v += tmp
        c1 = 1.0 - self.b1**self.t
        c2 = 1.0 - self.b2**self.t
        np.sqrt(self.v, out=tmp)
        tmp *= 1.0 / math.sqrt(c2)
        tmp += self.eps
        np.divide(self.m, tmp, out=tmp)
        tmp *= self.lr / c1
        base = _packed_base(params)
        if base is not None:
            base -= tmp
            return
        i = 0
        for p in params:
            p -= tmp[i : i + p.size].reshape(p.shape)
            i += p.size


class Sgd:
    def __init__(self, params, lr=1e-2):
        self.lr = lr

    def step(self, params, grads):
        for p, g in zip(params, grads):
            p -= self.lr * g


def make_optimizer(params, cfg: TrainConfig):
    if cfg.optimizer == "sgd":
        return Sgd(params, cfg.learning_rate)
    return Adam(params, cfg.learning_rate, beta1=cfg.beta1)


def _interleave(dws, dbs):
    out = []
    for w, b in zip(dws, dbs):
        out += [w, b]
    return out


# ---------------------------------------------------------------------------
# classifiers


def _working_copy(m: Mlp, cfg: TrainConfig) -> Mlp:
    """Packed copy of ``m`` in the training precision."""
    m = m.copy()
    dt = np.dtype(cfg.precision)
    m.weights = [w.astype(dt) for w in m.weights]
    m.biases = [b.astype(dt) for b in m.biases]
    m.pack()
    return m


def _finish(m: Mlp) -> Mlp:
    """Back to independent float64 parameters after training."""
    m.weights = [np.array(w, dtype=np.float64) for w in m.weights]
    m.biases = [np.array(b, dtype=np.float64) for b in m.biases]
    return m


def fit_normalization(m: Mlp, features: np.ndarray) -> None:
    m.x_mean = features.mean(axis=0)
    std = features.std(axis=0)
    m.x_std = np.where(std > 1e-12, std, 1.0)


def _batches(n: int, batch_size: int, rng):
    """Endless minibatch index stream, reshuffled every pass."""
    while True:
        perm = rng.permutation(n)
        for i in range(0, n - batch_size + 1, batch_size):
            yield perm[i : i + batch_size]
        if n < batch_size:
            yield perm


def train_classifier(m: Mlp, data: LabeledDataset, cfg: TrainConfig, normalize: bool = True):
    """Minibatch cross-entropy training.  Returns ``(trained copy, loss history)``.

    With ``normalize`` the per-feature mean/std of ``data`` are stored in the
    model and applied on every forward pass.
    """
    if cfg.n_steps < 1:
        raise ValueError("classifier training needs n_steps >= 1")
    if m.spec.output_activation != "softmax":
        raise ValueError("classifier training needs a softmax output")
    if data.features.shape[1] != m.n_inputs:
        raise ValueError("dataset width does not match the network input")
    present = set(np.unique(data.labels).tolist())
    if present != {0, 1}:
        raise ValueError(f"both classes are needed for training, found only {sorted(present)}")
    m = _working_copy(m, cfg)
    if normalize:
        fit_normalization(m, data.features)
    rng = np.random.default_rng(cfg.seed)
    opt = make_optimizer(m.params(), cfg)
    history = np.empty(cfg.n_steps)
    batches = _batches(len(data), cfg.batch_size, rng)
    for step in range(cfg.n_steps):
        idx = next(batches)
        probs, cache = forward(m, data.features[idx], "train", rng)
        loss, g = cross_entropy(probs, data.labels[idx])
        if not np.isfinite(loss):
            raise FloatingPointError(f"non-finite loss at step {step} (role {m.role.value})")
        dws, dbs, _ = backward(m, cache, g, need_dx=False)
        opt.step(m.params(), _interleave(dws, dbs))
        history[step] = loss
    labels, _ = predict_batch(m, data.features)
    m.train_accuracy = float(np.mean(labels == data.labels))
    log.debug("%s trained: final loss %.4g, train accuracy %.4f", m.role.value, history[-1], m.train_accuracy)
    return _finish(m), history


def predict_batch(m: Mlp, x):
    """Labels (argmax, ties to 0) and confidences (max probability)."""
    probs, _ = forward(m, x, "eval")
    labels = (probs[:, 1] > probs[:, 0]).astype(np.int64)
    return labels, probs.max(axis=1)


def predict(m: Mlp, x):
    x = np.asarray(x, float)
    if x.ndim != 1:
        raise ValueError("predict takes a single feature vector")
    labels, conf = predict_batch(m, x[None, :])
    return int(labels[0]), float(conf[0])


def accuracy(m: Mlp, data: LabeledDataset) -> float:
    labels, _ = predict_batch(m, data.features)
    return float(np.mean(labels == data.labels))


def _loss_and_grads(m: Mlp, x, target):
    out, cache = forward(m, x, "eval")
    if m.spec.output_activation == "softmax":
        loss, g = cross_entropy(out, np.array([int(target)]))
    else:
        diff = out - np.asarray(target, float).reshape(out.shape)
        loss = 0.5 * float(np.sum(diff**2))
        g = output_to_logit_grad(m, cache, diff)
    dws, dbs, _ = backward(m, cache, g)
    return loss, _interleave(dws, dbs)


def grad_check(m: Mlp, sample, rng=None, n_params: int = 100, step: float = 1e-5) -> float:
    """Max relative error between backprop and central differences.

    ``sample`` is ``(x, target)``: a class index for softmax networks, an
    output vector (squared-error loss) otherwise.  Dropout is off.  Pairs
    where both gradients are below 1e-10 count as exact.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    x, target = sample
    x = np.atleast_2d(np.asarray(x, float))
    _, grads = _loss_and_grads(m, x, target)
    params = m.params()
    sizes = [p.size for p in params]
    total = sum(sizes)
    picks = rng.choice(total, size=min(n_params, total), replace=False)
    offsets = np.cumsum([0] + sizes)
    worst = 0.0
    for flat in np.sort(picks):
        k = int(np.searchsorted(offsets, flat, side="right") - 1)
        j = flat - offsets[k]
        p = params[k].reshape(-1)
        orig = p[j]
        p[j] = orig + step
        lp, _ = _loss_and_grads(m, x, target)
        p[j] = orig - step
        lm, _ = _loss_and_grads(m, x, target)
        p[j] = orig
        num = (lp - lm) / (2 * step)
        ana = grads[k].reshape(-1)[j]
        denom = abs(num) + abs(ana)
        if denom < 1e-10:
            continue
        worst = max(worst, abs(num - ana) / denom)
    return worst


# ---------------------------------------------------------------------------
# GAN


@dataclass
class GanPair:
    generator: Mlp
    discriminator: Mlp
    noise_dim: int = 400

    def __post_init__(self):
        if self.generator.spec.layer_sizes[-1] != self.discriminator.n_inputs:
            raise ValueError("generator output width must equal discriminator input width")
        if self.generator.n_inputs != self.noise_dim:
            raise ValueError("generator input width must equal noise_dim")


def gan_init(rng, width: int = 400, hidden: int = 128) -> GanPair:
    g = mlp_init(generator_spec(width, hidden), rng, Role.GENERATOR)
    d = mlp_init(discriminator_spec(width, hidden), rng, Role.DISCRIMINATOR)
    return GanPair(g, d, width)


def _unit_power_backward(raw: np.ndarray, grad_y: np.ndarray) -> np.ndarray:
    # y = sqrt(n/2) * g / |g| per row
    norm = np.linalg.norm(raw, axis=1, keepdims=True)
    u = raw / norm
    scale = np.sqrt(raw.shape[1] / 2.0) / norm
    return scale * (grad_y - u * np.sum(u * grad_y, axis=1, keepdims=True))


def _generate(g: Mlp, z, mode="eval", rng=None):
    raw, cache = forward(g, z, mode, rng)
    return unit_power_rows(raw), raw, cache


def generate_spoof(g: Mlp, rng, n: int) -> np.ndarray:
    """``n`` generated rows from standard-normal noise, at unit average power."""
    if g.role != Role.GENERATOR:
        raise ValueError(f"expected a generator, got role {g.role.value}")
    if n == 0:
        return np.zeros((0, g.spec.layer_sizes[-1]))
    z = rng.standard_normal((n, g.n_inputs))
    rows, _, _ = _generate(g, z)
    return rows


def train_gan(
    pair: GanPair,
    real_data,
    cfg: TrainConfig,
    rng,
    fake_data=None,
    air=None,
    instance_noise: float = 0.0,
):
    """Alternating discriminator / non-saturating generator updates.

    The generator output is scaled to unit average power, matching the
    ``iq_features`` convention of the real rows.

    ``air`` is an optional differentiable propagation layer (``forward(rows,
    rng)`` / ``backward(grad)``) applied to generated rows before the
    discriminator sees them, so the generator learns what to *transmit*.
    ``fake_data`` holds observed rows the discriminator must also reject;
    they fill the fake half of each batch in proportion to their share of
    all observed rows.  ``instance_noise`` adds Gaussian noise of that
    standard deviation to every discriminator input.

    Returns ``(trained pair, per-step discriminator accuracy)``.
    """
    if cfg.n_steps == 0:
        return GanPair(pair.generator.copy(), pair.discriminator.copy(), pair.noise_dim), np.zeros(0)
    real = np.atleast_2d(np.asarray(real_data, float))
    if real.shape[0] < 2 * cfg.batch_size:
        raise ValueError("need at least two batches of real rows")
    if real.shape[1] != pair.discriminator.n_inputs:
        raise ValueError("real rows do not match the discriminator width")
    pair = GanPair(_working_copy(pair.generator, cfg), _working_copy(pair.discriminator, cfg), pair.noise_dim)
    g, d = pair.generator, pair.discriminator
    g_opt = make_optimizer(g.params(), cfg)
    d_opt = make_optimizer(d.params(), cfg)
    b = cfg.batch_size
    extra = None
    n_extra = 0
    if fake_data is not None and len(fake_data):
        extra = np.atleast_2d(np.asarray(fake_data, float))
        n_extra = min(b - 1, int(round(b * len(extra) / (len(real) + len(extra)))))
    labels = np.concatenate([np.ones(b, np.int64), np.zeros(b, np.int64)])
    d_acc = np.empty(cfg.n_steps)

    def emit(n):
        z = rng.standard_normal((n, pair.noise_dim))
        raw, cache = forward(g, z, "train", rng)
        rows = unit_power_rows(raw)
        sent = air.forward(rows, rng) if air is not None else rows
        return sent, raw, cache

    def jitter(x):
        return x + instance_noise * rng.standard_normal(x.shape) if instance_noise else x

    for step in range(cfg.n_steps):
        fake, _, _ = emit(b - n_extra)
        if n_extra:
            fake = np.concatenate([fake, extra[rng.integers(0, len(extra), n_extra)]])
        xr = real[rng.integers(0, len(real), b)]
        probs, cache = forward(d, jitter(np.concatenate([xr, fake])), "train", rng)
        d_loss, grad = cross_entropy(probs, labels)
        dws, dbs, _ = backward(d, cache, grad, need_dx=False)
        d_opt.step(d.params(), _interleave(dws, dbs))
        d_acc[step] = np.mean((probs[:, 1] > probs[:, 0]) == labels)

        fake, raw, g_cache = emit(b)
        if np.mean(np.var(fake, axis=0)) < 1e-6:
            warnings.warn(f"generator output variance collapsed at step {step}", RuntimeWarning)
        probs, cache = forward(d, jitter(fake), "eval")
        g_loss, grad = cross_entropy(probs, np.ones(b, np.int64))
        if not (np.isfinite(d_loss) and np.isfinite(g_loss)):
            raise FloatingPointError(f"non-finite GAN loss at step {step}")
        _, _, gx = backward(d, cache, grad)
        if air is not None:
            gx = air.backward(gx)
        dws, dbs, _ = backward(g, g_cache, _unit_power_backward(raw, gx))
        g_opt.step(g.params(), _interleave(dws, dbs))
    _finish(g)
    _finish(d)
    return pair, d_acc


# ---------------------------------------------------------------------------
# persistence


def _header(m: Mlp) -> dict:
    s = m.spec
    return {
        "layer_sizes": list(s.layer_sizes),
        "output_activation": s.output_activation,
        "hidden_activation": s.hidden_activation,
        "dropout_after": {str(k): v for k, v in sorted(s.dropout_after.items())},
        "role": m.role.value,
        "normalized": m.x_mean is not None,
    }


def dumps_mlp(m: Mlp) -> bytes:
    """Binary blob: magic, u32 header length, JSON header, float64 LE params."""
    head = json.dumps(_header(m), sort_keys=True).encode()
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<I", len(head)))
    buf.write(head)
    arrays = m.params()
    if m.x_mean is not None:
        arrays += [m.x_mean, m.x_std]
    for a in arrays:
        buf.write(np.ascontiguousarray(a, dtype="<f8").tobytes())
    return buf.getvalue()


def loads_mlp(blob: bytes) -> Mlp:
    if blob[:8] != MAGIC:
        raise ValueError("not an AML5GNN1 model blob")
    (n,) = struct.unpack("<I", blob[8:12])
    head = json.loads(blob[12 : 12 + n])
    spec = MlpSpec(
        tuple(head["layer_sizes"]),
        head["output_activation"],
        {int(k): v for k, v in head["dropout_after"].items()},
        head["hidden_activation"],
    )
    pos = 12 + n

    def take(shape):
        nonlocal pos
        k = int(np.prod(shape))
        a = np.frombuffer(blob, dtype="<f8", count=k, offset=pos).reshape(shape).astype(np.float64)
        pos += 8 * k
        return a

    s = spec.layer_sizes
    ws, bs = [], []
    for i in range(len(s) - 1):
        ws.append(take((s[i + 1], s[i])))
        bs.append(take((s[i + 1],)))
    m = Mlp(spec, ws, bs, head["role"])
    if head["normalized"]:
        m.x_mean = take((s[0],))
        m.x_std = take((s[0],))
    if pos != len(blob):
        raise ValueError("trailing bytes in model blob")
    return m


def save_mlp(m: Mlp, path) -> None:
    Path(path).write_bytes(dumps_mlp(m))


def load_mlp(path) -> Mlp:
    return loads_mlp(Path(path).read_bytes())
