"""Physical-layer authentication at the gNodeB and the adversary pair's
over-the-air GAN spoofing attack.

The target UE opens every transmission with a UE-specific OFDM reference
symbol; the gNodeB's classifier C_S sees the first ``n_complex`` received
samples (after a fading TDL channel and AWGN at SNR ``gamma_db``) and decides
Intended vs Other.  The adversary receiver A_R overhears the same UE at a
lower SNR (``gamma_db + adversary_offset_db``) and trains a GAN whose
generator output is passed through a differentiable copy of that channel, so
that the generator learns what the adversary transmitter A_T should send.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .neural import (
    GanPair,
    LabeledDataset,
    LabelSemantics,
    Mlp,
    Role,
    TrainConfig,
    _unit_power_backward,
    classifier_spec,
    forward,
    gan_init,
    generate_spoof,
    mlp_init,
    predict_batch,
    train_classifier,
    train_gan,
)
from .signal import (
    OfdmConfig,
    TdlProfile,
    complex_noise,
    gen_ofdm_frame,
    tdl_taps,
    unit_power_rows,
)
from .streams import stream


@dataclass(frozen=True)
class AuthConfig:
    gamma_db: float = 0.0
    n_samples: int = 1000
    feature_len: int = 400

    def __post_init__(self):
        if self.n_samples < 2 or self.n_samples % 2:
            raise ValueError("n_samples must be even and >= 2")
        if self.feature_len != 400:
            raise ValueError("feature_len is fixed at 400")
        if math.isnan(self.gamma_db) or self.gamma_db == -math.inf:
            raise ValueError("gamma_db must be a number or +inf")


@dataclass(frozen=True)
class SpoofResult:
    n_trials: int
    n_accepted: int

    def __post_init__(self):
        if not 0 <= self.n_accepted <= self.n_trials:
            raise ValueError("n_accepted must lie in [0, n_trials]")

    @property
    def success_probability(self) -> float:
        return self.n_accepted / self.n_trials if self.n_trials else float("nan")


@dataclass(frozen=True)
class OtaFeedback:
    """Side channel from A_T to A_R marking the adversary's own frames."""

    flag: bool = True


@dataclass
class AuthWorld:
    auth: AuthConfig = field(default_factory=AuthConfig)
    ofdm: OfdmConfig = field(default_factory=OfdmConfig)
    tdl: TdlProfile = field(default_factory=TdlProfile.exponential)
    adversary_offset_db: float = -10.0  # A_R's SNR relative to the gNodeB's
    ue_id: int = 1
    fading: bool = True
    gan: TrainConfig = field(default_factory=lambda: TrainConfig(learning_rate=2e-4, beta1=0.5))

    @property
    def n_complex(self) -> int:
        return self.auth.feature_len // 2

    @property
    def gamma_db(self) -> float:
        return self.auth.gamma_db

    @property
    def adversary_snr_db(self) -> float:
        return self.gamma_db + self.adversary_offset_db

    @property
    def fs(self) -> float:
        return self.ofdm.sample_rate_hz


@lru_cache(maxsize=8)
def _reference_symbol(ofdm: OfdmConfig, ue_id: int) -> np.ndarray:
    bits = stream(ue_id, "ue-reference").integers(0, 2, ofdm.bits_per_ofdm_symbol)
    x = gen_ofdm_frame(ofdm, bits).samples
    x.setflags(write=False)
    return x


def ue_waveform(world: AuthWorld) -> np.ndarray:
    """Leading ``n_complex`` samples of the UE's reference symbol (unit power)."""
    return _reference_symbol(world.ofdm, world.ue_id)[: world.n_complex]


def _to_complex(rows: np.ndarray) -> np.ndarray:
    rows = np.atleast_2d(rows)
    return rows[:, 0::2] + 1j * rows[:, 1::2]


def _to_rows(z: np.ndarray) -> np.ndarray:
    out = np.empty((z.shape[0], 2 * z.shape[1]))
    out[:, 0::2] = z.real
    out[:, 1::2] = z.imag
    return out


def _taps(world, n, rng) -> np.ndarray:
    hs = [tdl_taps(world.tdl, world.fs, rng, world.fading) for _ in range(n)]
    width = max(h.size for h in hs)
    return np.stack([np.pad(h, (0, width - h.size)) for h in hs])


def _convolve_rows(x: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Per-row causal convolution truncated to the input length."""
    y = np.zeros_like(x)
    n = x.shape[1]
    for d in np.flatnonzero(np.any(h != 0, axis=0)):
        y[:, d:] += h[:, d : d + 1] * x[:, : n - d]
    return y


def _awgn_rows(y: np.ndarray, snr_db: float, rng) -> np.ndarray:
    """Complex noise at ``snr_db`` below each row's own mean power."""
    if math.isinf(snr_db) and snr_db > 0:
        return y
    p = np.mean(np.abs(y) ** 2, axis=1, keepdims=True)
    if np.any(p == 0):
        raise ValueError("cannot set a finite SNR on a zero-power frame")
    nv = p / 10.0 ** (snr_db / 10.0)
    return y + np.sqrt(nv / 2) * (rng.standard_normal(y.shape) + 1j * rng.standard_normal(y.shape))


def receive(world: AuthWorld, tx: np.ndarray, snr_db: float, rng) -> np.ndarray:
    """Pass complex transmissions (one per row) through fading TDL + AWGN
    and return unit-power interleaved I/Q feature rows."""
    tx = np.atleast_2d(tx)
    y = _convolve_rows(tx, _taps(world, tx.shape[0], rng))
    return unit_power_rows(_to_rows(_awgn_rows(y, snr_db, rng)))


def ue_rows(world: AuthWorld, n: int, snr_db: float, rng) -> np.ndarray:
    return receive(world, np.tile(ue_waveform(world), (n, 1)), snr_db, rng)


def noise_rows(world: AuthWorld, n: int, rng) -> np.ndarray:
    z = complex_noise(n * world.n_complex, 1.0, rng).reshape(n, world.n_complex)
    return unit_power_rows(_to_rows(z))


# ---------------------------------------------------------------------------
# the gNodeB's classifier


def build_auth_dataset(cfg: AuthConfig, ofdm: OfdmConfig, seed: int, world: AuthWorld | None = None) -> LabeledDataset:
    """UE rows (label 1 = Intended) and complex Gaussian noise rows (label 0),
    half each, in shuffled order."""
    world = world or AuthWorld(auth=cfg, ofdm=ofdm)
    n = cfg.n_samples
    labels = np.zeros(n, np.int64)
    labels[: n // 2] = 1
    labels = stream(seed, "auth-data", "labels").permutation(labels)
    rows = np.empty((n, cfg.feature_len))
    pos = labels == 1
    rows[pos] = ue_rows(world, int(pos.sum()), cfg.gamma_db, stream(seed, "auth-data", "ue"))
    rows[~pos] = noise_rows(world, int((~pos).sum()), stream(seed, "auth-data", "noise"))
    return LabeledDataset(rows, labels, LabelSemantics.INTENDED_OTHER)


def train_auth_classifier(data: LabeledDataset, cfg: TrainConfig | None = None):
    """Train C_S on the first half; returns ``(C_S, report)`` scored on the second."""
    cfg = cfg or TrainConfig()
    train, test = data.split()
    m = mlp_init(classifier_spec(data.features.shape[1]), np.random.default_rng(cfg.seed), Role.C_S)
    m, _ = train_classifier(m, train, cfg)
    lab, _ = predict_batch(m, test.features)
    y = test.labels
    report = {
        "test_accuracy": float(np.mean(lab == y)),
        "true_positive_rate": float(np.mean(lab[y == 1] == 1)) if np.any(y == 1) else float("nan"),
        "false_accept_rate": float(np.mean(lab[y == 0] == 1)) if np.any(y == 0) else float("nan"),
    }
    return m, report


def auth_margin(c_s: Mlp, rows) -> np.ndarray:
    _, cache = forward(c_s, rows, "eval")
    z = cache["logits"]
    return z[:, 1] - z[:, 0]


# ---------------------------------------------------------------------------
# the adversary


@dataclass
class AdversaryObservations:
    rows: np.ndarray  # frames as heard at A_R
    gnb_rows: np.ndarray  # the same frames as heard at the gNodeB
    is_ue: np.ndarray  # ground truth, unknown to the adversary

    def __len__(self) -> int:
        return self.rows.shape[0]


def collect_adversary_observations(world: AuthWorld, n_samples: int, seed: int) -> AdversaryObservations:
    """Overheard frames, half from the target UE and half other (random)
    signals, in shuffled order.

    Each frame is recorded twice: A_R's copy (own channel, SNR
    ``gamma + adversary_offset``) and the gNodeB's copy (independent channel,
    SNR ``gamma``) whose authentication outcome A monitors.
    """
    if n_samples < 2:
        raise ValueError("n_samples must be >= 2")
    is_ue = np.zeros(n_samples, bool)
    is_ue[: n_samples // 2] = True
    is_ue = stream(seed, "collect", "order").permutation(is_ue)
    n_ue = int(is_ue.sum())
    tx = np.empty((n_samples, world.n_complex), complex)
    tx[is_ue] = ue_waveform(world)
    tx[~is_ue] = complex_noise((n_samples - n_ue) * world.n_complex, 1.0, stream(seed, "collect", "other")).reshape(
        -1, world.n_complex
    )
    rows = receive(world, tx, world.adversary_snr_db, stream(seed, "collect", "adversary"))
    gnb = receive(world, tx, world.gamma_db, stream(seed, "collect", "gnb"))
    return AdversaryObservations(rows, gnb, is_ue)


def feedback_labels(c_s: Mlp, obs: AdversaryObservations, defense=None):
    """gNodeB decisions on the observed frames, as A learns them.

    With a :class:`~aml5g.defense.DefensePolicy` the most confident
    Intended decisions are flipped to Other before A sees them.
    Returns ``(labels, flip indices)``.
    """
    margin = auth_margin(c_s, obs.gnb_rows)
    labels = (margin > 0).astype(np.int64)
    if defense is None:
        return labels, np.zeros(0, np.int64)
    from .defense import apply_defense

    conf = 1.0 / (1.0 + np.exp(-np.abs(margin)))
    out, flips = apply_defense(list(zip(labels, conf)), defense, rank_key=margin)
    return np.array([d[0] for d in out], np.int64), flips


class OverTheAir:
    """Differentiable stand-in for the A_T -> A_R link used in GAN training:
    fading TDL, AWGN at the adversary's SNR and unit-power scaling.

    The noise scale is treated as a constant in the backward pass.
    """

    def __init__(self, world: AuthWorld, snr_db: float):
        self.world = world
        self.snr_db = snr_db

    def forward(self, rows, rng):
        x = _to_complex(rows)
        self.h = _taps(self.world, x.shape[0], rng)
        y = _awgn_rows(_convolve_rows(x, self.h), self.snr_db, rng)
        self.raw = _to_rows(y)
        return unit_power_rows(self.raw)

    def backward(self, grad):
        g = _to_complex(_unit_power_backward(self.raw, grad))
        n = g.shape[1]
        gx = np.zeros_like(g)
        for d in np.flatnonzero(np.any(self.h != 0, axis=0)):
            gx[:, : n - d] += np.conj(self.h[:, d : d + 1]) * g[:, d:]
        return _to_rows(gx)


def train_spoofer(world: AuthWorld, obs: AdversaryObservations, labels, seed: int) -> GanPair:
    """Train the adversary's GAN on its observations.

    Frames the gNodeB authenticated form the real set; frames it rejected
    join A_T's own flagged transmissions on the fake side.
    """
    labels = np.asarray(labels)
    real = obs.rows[labels == 1]
    rejected = obs.rows[labels == 0]
    rng = stream(seed, "gan")
    pair = gan_init(rng, world.auth.feature_len)
    air = OverTheAir(world, world.adversary_snr_db)
    pair, _ = train_gan(pair, real, world.gan, rng, fake_data=rejected if len(rejected) else None, air=air)
    return pair


def _authenticate(c_s, world, tx, seed, tag) -> SpoofResult:
    rows = receive(world, tx, world.gamma_db, stream(seed, tag, "channel"))
    lab, _ = predict_batch(c_s, rows)
    return SpoofResult(int(lab.size), int(lab.sum()))


def run_spoofing_attack(c_s: Mlp, gan: GanPair, world: AuthWorld, n_trials: int, seed: int) -> SpoofResult:
    """Transmit ``n_trials`` generated frames to the gNodeB and count acceptances."""
    if n_trials == 0:
        return SpoofResult(0, 0)
    rows = generate_spoof(gan.generator, stream(seed, "spoof", "noise"), n_trials)
    return _authenticate(c_s, world, _to_complex(rows), seed, "spoof")


def replay_attack_baseline(c_s: Mlp, world: AuthWorld, n_trials: int, seed: int) -> SpoofResult:
    """Amplify-and-forward: A re-sends its own noisy received copies of UE frames."""
    if n_trials == 0:
        return SpoofResult(0, 0)
    heard = ue_rows(world, n_trials, world.adversary_snr_db, stream(seed, "replay", "heard"))
    return _authenticate(c_s, world, _to_complex(heard), seed, "replay")


@dataclass
class SpoofRun:
    c_s_report: dict
    spoof: SpoofResult
    replay: SpoofResult
    untrained: SpoofResult


def run_scenario(world: AuthWorld, seed: int, n_trials: int = 500, train_cfg: TrainConfig | None = None) -> SpoofRun:
    """Full pipeline for one seed: C_S, observations, GAN, spoof and replay trials."""
    cfg = train_cfg or TrainConfig(seed=seed)
    data = build_auth_dataset(world.auth, world.ofdm, seed, world)
    c_s, report = train_auth_classifier(data, cfg)
    obs = collect_adversary_observations(world, world.auth.n_samples, seed)
    labels, _ = feedback_labels(c_s, obs)
    gan = train_spoofer(world, obs, labels, seed)
    untrained = gan_init(stream(seed, "gan"), world.auth.feature_len)
    return SpoofRun(
        report,
        run_spoofing_attack(c_s, gan, world, n_trials, seed),
        replay_attack_baseline(c_s, world, n_trials, seed),
        run_spoofing_attack(c_s, untrained, world, n_trials, seed),
    )


def spoof_table_csv(rows) -> str:
    """``rows`` of ``(gamma_db, n_trials, success_probability)``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["gamma_db", "n_trials", "success_probability"])
    for g, n, p in rows:
        w.writerow([repr(float(g)), int(n), repr(float(p))])
    return buf.getvalue()
