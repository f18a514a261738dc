"""Spectrum sharing between a radar incumbent and a 5G link, and the
adversary's surrogate-model jamming attack.

Geometry: the radar B sits at the origin, the 5G transmitter T and receiver
R are on the x axis and the adversary A is placed 1010 m from B.  Every slot
has a sensing window (T decides Idle/Busy with C_T) followed by a data
window (T transmits when Idle, R acknowledges a clean reception).

All per-slot randomness comes from named streams keyed by
``(seed, phase, component, slot, ...)``, so a baseline run and an attacked
run with the same seed see the same radar, fading and noise draws.
"""

from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .neural import (
    LabeledDataset,
    LabelSemantics,
    Mlp,
    Role,
    TrainConfig,
    classifier_spec,
    forward,
    mlp_init,
    predict_batch,
    train_classifier,
)
from .signal import (
    IqFrame,
    LinkGeometry,
    OfdmConfig,
    Origin,
    RadarConfig,
    TdlProfile,
    complex_noise,
    demod_ofdm,
    gen_ofdm_frame,
    gen_radar_pulse,
    path_gain,
    rssi_features,
    tdl_taps,
)
from .streams import stream

IDLE, BUSY = "Idle", "Busy"
ACK, NO_ACK = "Ack", "NoAck"


class AttackMode(str, enum.Enum):
    NONE = "None"
    JAM_DATA = "JamData"
    JAM_SENSING = "JamSensing"


@dataclass(frozen=True)
class OccupancyModel:
    kind: str = "Iid"
    p_busy: float = 0.1
    p_idle_to_busy: float = 0.05
    p_busy_to_idle: float = 0.45

    def __post_init__(self):
        if self.kind not in ("Iid", "Markov"):
            raise ValueError(f"occupancy kind must be Iid or Markov, got {self.kind!r}")
        for name in ("p_busy", "p_idle_to_busy", "p_busy_to_idle"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} = {v} outside [0, 1]")

    def sample(self, n: int, rng) -> np.ndarray:
        """Boolean busy sequence of length ``n``."""
        if self.kind == "Iid":
            return rng.random(n) < self.p_busy
        u = rng.random(n)
        out = np.empty(n, bool)
        a, b = self.p_idle_to_busy, self.p_busy_to_idle
        # start from the stationary distribution
        pi = a / (a + b) if a + b > 0 else 0.0
        state = u[0] < pi
        for i in range(n):
            if i:
                state = (u[i] >= b) if state else (u[i] < a)
            out[i] = state
        return out


@dataclass(frozen=True)
class SlotTiming:
    sensing_units: float = 1.0
    data_units: float = 9.0

    def __post_init__(self):
        if not (self.sensing_units > 0 and self.data_units > 0):
            raise ValueError("slot timing units must be positive")


@dataclass
class EnergyBudget:
    total_units: float
    spent_units: float = 0.0

    def __post_init__(self):
        if self.total_units < 0:
            raise ValueError("total_units must be >= 0")
        if not 0 <= self.spent_units <= self.total_units:
            raise ValueError("spent_units must lie in [0, total_units]")

    @property
    def remaining(self) -> float:
        return self.total_units - self.spent_units

    def try_spend(self, cost: float) -> bool:
        # small tolerance so that 0.2*n*9 style budgets are not lost to rounding
        if cost <= self.remaining + 1e-9 * max(1.0, self.total_units):
            self.spent_units = min(self.total_units, self.spent_units + cost)
            return True
        return False


@dataclass
class SharingWorld:
    """Everything about the physical set-up that is fixed within a run."""

    ofdm: OfdmConfig = field(default_factory=OfdmConfig)
    radar: RadarConfig = field(default_factory=RadarConfig)
    tdl: TdlProfile = field(default_factory=TdlProfile.exponential)
    occupancy: OccupancyModel = field(default_factory=OccupancyModel)
    radar_pos: tuple = (0.0, 0.0)
    t_pos: tuple = (1000.0, 0.0)
    r_pos: tuple = (500.0, 0.0)
    a_pos: tuple = (1005.0, math.sqrt(1010.0**2 - 1005.0**2))
    noise_power: float = 1.0
    radar_inr_db: float = 10.0  # radar peak power over noise at T
    t_snr_db: float = 25.0  # T's signal over noise at R
    sensing_jam_db: float = 10.0  # jam over noise at T
    data_jam_db: float = 20.0  # jam over noise at R
    sinr_threshold_db: float = 10.0
    success_rule: str = "sinr"
    window_samples: int = 6400
    n_bins: int = 200
    fading: bool = True
    los_short_links: bool = True  # A and T are ~100 m apart: no Rayleigh fading between them
    ack_miss_prob: float = 0.0

    def __post_init__(self):
        if self.window_samples < self.n_bins:
            raise ValueError("window_samples must be >= n_bins")
        if self.success_rule not in ("sinr", "ber"):
            raise ValueError(f"success_rule must be 'sinr' or 'ber', got {self.success_rule!r}")
        if not 0.0 <= self.ack_miss_prob <= 1.0:
            raise ValueError("ack_miss_prob outside [0, 1]")
        if not self.noise_power > 0:
            raise ValueError("noise_power must be positive")

    @property
    def fs(self) -> float:
        return self.ofdm.sample_rate_hz

    def gain(self, p, q) -> float:
        d = max(math.dist(p, q), 1.0)
        return path_gain(LinkGeometry(d, self.ofdm.carrier_hz))

    def _tx_power(self, src, dst, over_noise_db) -> float:
        return self.noise_power * 10 ** (over_noise_db / 10) / self.gain(src, dst)

    @property
    def radar_power(self) -> float:
        return self._tx_power(self.radar_pos, self.t_pos, self.radar_inr_db)

    @property
    def t_power(self) -> float:
        return self._tx_power(self.t_pos, self.r_pos, self.t_snr_db)

    @property
    def sensing_jam_power(self) -> float:
        return self._tx_power(self.a_pos, self.t_pos, self.sensing_jam_db)

    @property
    def data_jam_power(self) -> float:
        return self._tx_power(self.a_pos, self.r_pos, self.data_jam_db)

    def sinr_at_r_db(self, busy: bool, jammed: bool) -> float:
        s = self.t_power * self.gain(self.t_pos, self.r_pos)
        i = self.noise_power
        if busy:
            i += self.radar_power * self.gain(self.radar_pos, self.r_pos)
        if jammed:
            i += self.data_jam_power * self.gain(self.a_pos, self.r_pos)
        return 10 * math.log10(s / i)


# ---------------------------------------------------------------------------
# per-slot signals


def _pos_key(p) -> str:
    return f"{p[0]:.3f},{p[1]:.3f}"


def _propagate(world, x, power, src, dst, seed, phase, slot, tag):
    """Scale, fade and truncate a unit-amplitude waveform from src to dst."""
    amp = math.sqrt(power * world.gain(src, dst))
    rng = stream(seed, phase, "fading", slot, tag, _pos_key(src), _pos_key(dst))
    fading = world.fading
    if world.los_short_links and {_pos_key(src), _pos_key(dst)} == {_pos_key(world.a_pos), _pos_key(world.t_pos)}:
        fading = False
    h = tdl_taps(world.tdl, world.fs, rng, fading)
    return amp * np.convolve(x, h)[: x.size]


def _radar_wave(world, seed, phase, slot) -> np.ndarray:
    cfg = replace(world.radar, peak_power_lin=1.0)
    rng = stream(seed, phase, "radar", slot)
    return gen_radar_pulse(cfg, 2 * world.window_samples, world.fs, rng).samples


def _noise(world, seed, phase, slot, who, n) -> np.ndarray:
    return complex_noise(n, world.noise_power, stream(seed, phase, "noise", slot, who))


def _data_wave(world, seed, phase, slot) -> np.ndarray:
    cfg = world.ofdm
    n_sym = -(-world.window_samples // cfg.symbol_len)
    bits = stream(seed, phase, "payload", slot).integers(0, 2, n_sym * cfg.bits_per_ofdm_symbol)
    return gen_ofdm_frame(cfg, bits).samples[: world.window_samples]


def _sensing_jam_wave(world, seed, phase, slot) -> np.ndarray:
    # mimic the incumbent: a pulse train with the radar's width and PRI
    cfg = replace(world.radar, peak_power_lin=1.0)
    rng = stream(seed, phase, "jam", slot)
    return gen_radar_pulse(cfg, world.window_samples, world.fs, rng).samples


def sense_at_t(world, busy, seed, phase, slot, jammed=False) -> np.ndarray:
    """Sensing-window samples at T."""
    n = world.window_samples
    y = _noise(world, seed, phase, slot, "T", n)
    if busy:
        r = _radar_wave(world, seed, phase, slot)
        y = y + _propagate(world, r, world.radar_power, world.radar_pos, world.t_pos, seed, phase, slot, "radar")[:n]
    if jammed:
        j = _sensing_jam_wave(world, seed, phase, slot)
        y = y + _propagate(world, j, world.sensing_jam_power, world.a_pos, world.t_pos, seed, phase, slot, "jam")
    return y


def observe_at_a(world, busy, transmitted, seed, phase, slot) -> np.ndarray:
    """Sensing window followed by the first data window samples, as heard by A."""
    n = world.window_samples
    y = _noise(world, seed, phase, slot, "A", 2 * n)
    if busy:
        r = _radar_wave(world, seed, phase, slot)
        y = y + _propagate(world, r, world.radar_power, world.radar_pos, world.a_pos, seed, phase, slot, "radar")
    if transmitted:
        d = _data_wave(world, seed, phase, slot)
        y[n:] += _propagate(world, d, world.t_power, world.t_pos, world.a_pos, seed, phase, slot, "data")
    return y


def t_features(world, samples) -> np.ndarray:
    return rssi_features(IqFrame(samples, world.fs, Origin.MIXTURE), world.n_bins)


def a_features(world, samples) -> np.ndarray:
    n = world.window_samples
    return np.concatenate([t_features(world, samples[:n]), t_features(world, samples[n:])])


def reception_ok(world, busy, jammed, seed, phase, slot) -> bool:
    """Does R decode T's data in this slot?"""
    if world.success_rule == "sinr":
        return world.sinr_at_r_db(busy, jammed) >= world.sinr_threshold_db
    # "ber": demodulate the payload through a flat channel with the actual
    # radar pulses and Gaussian jamming as interference
    n = world.window_samples
    cfg = world.ofdm
    n_sym = n // cfg.symbol_len
    bits = stream(seed, phase, "payload", slot).integers(0, 2, max(n_sym, 1) * cfg.bits_per_ofdm_symbol)
    x = gen_ofdm_frame(cfg, bits)
    scale = math.sqrt(world.t_power * world.gain(world.t_pos, world.r_pos))
    y = scale * x.samples + _noise(world, seed, phase, slot, "R", len(x))
    if busy:
        r = _radar_wave(world, seed, phase, slot)[n : n + len(x)]
        r = np.pad(r, (0, len(x) - r.size))
        y += math.sqrt(world.radar_power * world.gain(world.radar_pos, world.r_pos)) * r
    if jammed:
        p = world.data_jam_power * world.gain(world.a_pos, world.r_pos)
        y += complex_noise(len(x), p, stream(seed, phase, "jam-data", slot))
    got = demod_ofdm(IqFrame(y / scale, world.fs, Origin.MIXTURE, dict(x.meta)), cfg)
    return bool(np.mean(got != bits) <= 1e-3)


# ---------------------------------------------------------------------------
# traces and metrics


@dataclass
class SlotTrace:
    truth_busy: np.ndarray
    ct_decision: np.ndarray
    transmitted: np.ndarray
    jam_action: np.ndarray
    ack: np.ndarray
    adversary_prediction: np.ndarray

    COLUMNS = ("slot", "truth_busy", "ct_decision", "transmitted", "jam_action", "ack", "adversary_prediction")

    def __post_init__(self):
        self.truth_busy = np.asarray(self.truth_busy, bool)
        self.transmitted = np.asarray(self.transmitted, bool)
        self.ack = np.asarray(self.ack, bool)
        self.ct_decision = np.asarray(self.ct_decision, dtype="<U4")
        self.jam_action = np.asarray(self.jam_action, dtype="<U10")
        self.adversary_prediction = np.asarray(self.adversary_prediction, dtype="<U5")
        n = self.truth_busy.size
        for name in self.COLUMNS[2:]:
            if getattr(self, name).size != n:
                raise ValueError(f"column {name} has the wrong length")
        if np.any(self.transmitted & (self.ct_decision != IDLE)):
            raise ValueError("a slot transmitted without an Idle decision")
        if np.any(self.ack & ~self.transmitted):
            raise ValueError("ACK recorded for a slot that did not transmit")

    def __len__(self) -> int:
        return self.truth_busy.size

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.COLUMNS)
        for i in range(len(self)):
            w.writerow(
                [
                    i,
                    int(self.truth_busy[i]),
                    self.ct_decision[i],
                    int(self.transmitted[i]),
                    self.jam_action[i],
                    int(self.ack[i]),
                    self.adversary_prediction[i],
                ]
            )
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "SlotTrace":
        rows = list(csv.DictReader(io.StringIO(text)))
        col = lambda k: [r[k] for r in rows]  # noqa: E731
        return cls(
            np.array(col("truth_busy"), int) == 1,
            col("ct_decision"),
            np.array(col("transmitted"), int) == 1,
            col("jam_action"),
            np.array(col("ack"), int) == 1,
            col("adversary_prediction"),
        )


@dataclass
class SlotMetrics:
    n_slots: int
    n_idle: int
    n_busy: int
    n_transmitted: int
    successes: int
    idle_detection_rate: float
    busy_detection_error: float
    normalized_throughput: float
    protection_rate: float
    n_jams: int = 0
    energy_spent: float = 0.0
    unnecessary_jamming_rate: float = 0.0
    baseline_successes: int | None = None

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def _ratio(a, b) -> float:
    return float(a) / b if b else float("nan")


def slot_metrics(trace: SlotTrace, energy_spent=0.0, baseline_ack=None, baseline_successes=None) -> SlotMetrics:
    busy = trace.truth_busy
    idle = ~busy
    said_busy = trace.ct_decision == BUSY
    jams = trace.jam_action != AttackMode.NONE.value
    unnecessary = 0.0
    if baseline_ack is not None and jams.any():
        unnecessary = float(np.mean(~np.asarray(baseline_ack)[jams]))
    succ = int(trace.ack.sum())
    return SlotMetrics(
        n_slots=len(trace),
        n_idle=int(idle.sum()),
        n_busy=int(busy.sum()),
        n_transmitted=int(trace.transmitted.sum()),
        successes=succ,
        idle_detection_rate=_ratio(np.sum(idle & ~said_busy), idle.sum()),
        busy_detection_error=_ratio(np.sum(busy & ~said_busy), busy.sum()),
        normalized_throughput=_ratio(succ, idle.sum()),
        protection_rate=_ratio(np.sum(busy & ~trace.transmitted), busy.sum()),
        n_jams=int(jams.sum()),
        energy_spent=float(energy_spent),
        unnecessary_jamming_rate=unnecessary,
        baseline_successes=baseline_successes,
    )


def throughput_reduction(baseline: SlotMetrics, attacked: SlotMetrics) -> float:
    """Fraction of the baseline's successful slots lost under attack."""
    if baseline.successes == 0:
        raise ValueError("baseline has zero successes")
    return (baseline.successes - attacked.successes) / baseline.successes


# ---------------------------------------------------------------------------
# datasets and classifiers


def build_defender_dataset(world: SharingWorld, n_samples: int, seed: int, phase: str = "sensing-data") -> LabeledDataset:
    """RSSI sensing samples at T, labelled with the true occupancy (1 = Busy).

    Classes are balanced by construction: the labels are a shuffled
    half/half vector, independent of the occupancy model.
    """
    if n_samples < 2:
        raise ValueError("n_samples must be >= 2")
    labels = np.zeros(n_samples, np.int64)
    labels[: n_samples // 2] = 1
    labels = stream(seed, phase, "labels").permutation(labels)
    feats = np.stack([t_features(world, sense_at_t(world, bool(labels[i]), seed, phase, i)) for i in range(n_samples)])
    return LabeledDataset(feats, labels, LabelSemantics.IDLE_BUSY)


def train_sensing_classifier(data: LabeledDataset, cfg: TrainConfig | None = None) -> Mlp:
    cfg = cfg or TrainConfig()
    m = mlp_init(classifier_spec(data.features.shape[1]), np.random.default_rng(cfg.seed), Role.C_T)
    m, _ = train_classifier(m, data, cfg)
    return m


def logit_margin(m: Mlp, x) -> np.ndarray:
    """logit(label 1) - logit(label 0); an unsaturated confidence ranking."""
    _, cache = forward(m, x, "eval")
    z = cache["logits"]
    return z[:, 1] - z[:, 0]


@dataclass
class _Pass:
    busy: np.ndarray
    t_feats: np.ndarray
    decision_busy: np.ndarray
    confidence: np.ndarray
    margin: np.ndarray


def _sense_pass(world, c_t, busy, seed, phase) -> _Pass:
    feats = np.stack([t_features(world, sense_at_t(world, bool(b), seed, phase, i)) for i, b in enumerate(busy)])
    lab, conf = predict_batch(c_t, feats)
    return _Pass(busy, feats, lab == 1, conf, logit_margin(c_t, feats))


def _occupancy(world, n, seed, phase):
    return world.occupancy.sample(n, stream(seed, phase, "occupancy"))


def _acks(world, busy, transmitted, jammed, seed, phase) -> np.ndarray:
    ack = np.zeros(busy.size, bool)
    for i in np.flatnonzero(transmitted):
        ack[i] = reception_ok(world, bool(busy[i]), bool(jammed[i]), seed, phase, i)
    return ack


def run_baseline(world: SharingWorld, c_t: Mlp, n_slots: int, seed: int, phase: str = "operate", c_a: Mlp | None = None):
    """Sense, classify, transmit on Idle, record ACKs.  Returns ``(trace, metrics)``.

    With ``c_a`` the adversary's predictions are recorded too (it does not act).
    """
    busy = _occupancy(world, n_slots, seed, phase)
    sp = _sense_pass(world, c_t, busy, seed, phase)
    tx = ~sp.decision_busy
    ack = _acks(world, busy, tx, np.zeros(n_slots, bool), seed, phase)
    pred = np.full(n_slots, "", "<U5")
    if c_a is not None:
        pred = _predict_acks(world, c_a, busy, tx, seed, phase)
    trace = SlotTrace(busy, np.where(sp.decision_busy, BUSY, IDLE), tx, np.full(n_slots, "None"), ack, pred)
    return trace, slot_metrics(trace)


def _adversary_features(world, busy, tx, seed, phase) -> np.ndarray:
    return np.stack([a_features(world, observe_at_a(world, bool(b), bool(t), seed, phase, i)) for i, (b, t) in enumerate(zip(busy, tx))])


def _predict_acks(world, c_a, busy, tx, seed, phase) -> np.ndarray:
    lab, _ = predict_batch(c_a, _adversary_features(world, busy, tx, seed, phase))
    return np.where(lab == 1, ACK, NO_ACK)


def build_adversary_dataset(world: SharingWorld, c_t: Mlp, n_samples: int, seed: int, phase: str = "collect", defense=None):
    """A's observations of the running system, labelled by the ACKs it overhears.

    ``defense`` (a :class:`~aml5g.defense.DefensePolicy` with scope
    TransmitDecisions) makes T withhold its most confident Idle decisions
    during the collection window.  Returns ``(dataset, info)`` where ``info``
    carries the flip indices and the defender's throughput cost.
    """
    if n_samples < 2:
        raise ValueError("n_samples must be >= 2")
    busy = _occupancy(world, n_samples, seed, phase)
    sp = _sense_pass(world, c_t, busy, seed, phase)
    tx = ~sp.decision_busy
    flips = np.zeros(0, np.int64)
    cost = 0.0
    if defense is not None:
        from .defense import apply_defense

        labels = np.where(sp.decision_busy, 1, 0)
        # Idle is label 0, so rank Idle decisions by how negative the margin is
        _, flips = apply_defense(list(zip(labels, sp.confidence)), defense, rank_key=-sp.margin)
        full = _acks(world, busy, tx, np.zeros(n_samples, bool), seed, phase).sum()
        tx = tx.copy()
        tx[flips] = False
    ack = _acks(world, busy, tx, np.zeros(n_samples, bool), seed, phase)
    if defense is not None:
        cost = _ratio(full - ack.sum(), full)
    if world.ack_miss_prob > 0:
        ack &= stream(seed, phase, "ack-miss").random(n_samples) >= world.ack_miss_prob
    feats = _adversary_features(world, busy, tx, seed, phase)
    data = LabeledDataset(feats, ack.astype(np.int64), LabelSemantics.ACK_NOACK)
    return data, {"flips": flips, "defender_cost": cost, "busy": busy}


def train_surrogate(data: LabeledDataset, cfg: TrainConfig | None = None):
    """Train C_A on the first half and score it on the second.

    Returns ``(C_A, report)`` with ACK-detection rate and no-ACK error.
    """
    cfg = cfg or TrainConfig()
    train, test = data.split()
    m = mlp_init(classifier_spec(data.features.shape[1]), np.random.default_rng(cfg.seed), Role.C_A)
    m, _ = train_classifier(m, train, cfg)
    lab, _ = predict_batch(m, test.features)
    y = test.labels
    report = {
        "test_accuracy": float(np.mean(lab == y)),
        "ack_detection": _ratio(np.sum((lab == 1) & (y == 1)), np.sum(y == 1)),
        "no_ack_error": _ratio(np.sum((lab == 1) & (y == 0)), np.sum(y == 0)),
    }
    return m, report


def run_attack(
    world: SharingWorld,
    c_t: Mlp,
    c_a: Mlp,
    mode,
    budget: EnergyBudget,
    timing: SlotTiming,
    n_slots: int,
    seed: int,
    phase: str = "operate",
):
    """Budgeted jamming guided by C_A.  Returns ``(trace, metrics)``.

    A predicts Ack/NoAck for every slot from its un-attacked observation of
    that slot and jams, in slot order, while energy remains.  ``budget`` is
    updated in place.
    """
    try:
        mode = AttackMode(mode)
    except ValueError:
        raise ValueError(f"unknown attack mode {mode!r}") from None
    busy = _occupancy(world, n_slots, seed, phase)
    sp = _sense_pass(world, c_t, busy, seed, phase)
    tx0 = ~sp.decision_busy
    nojam = np.zeros(n_slots, bool)
    ack0 = _acks(world, busy, tx0, nojam, seed, phase)
    pred = _predict_acks(world, c_a, busy, tx0, seed, phase)

    cost = {AttackMode.JAM_DATA: timing.data_units, AttackMode.JAM_SENSING: timing.sensing_units}.get(mode)
    jam = np.zeros(n_slots, bool)
    if mode is not AttackMode.NONE:
        for i in range(n_slots):
            if pred[i] == ACK and budget.try_spend(cost):
                jam[i] = True

    decision_busy = sp.decision_busy.copy()
    if mode is AttackMode.JAM_SENSING and jam.any():
        idx = np.flatnonzero(jam)
        feats = np.stack([t_features(world, sense_at_t(world, bool(busy[i]), seed, phase, i, jammed=True)) for i in idx])
        lab, _ = predict_batch(c_t, feats)
        decision_busy[idx] = lab == 1
    tx = ~decision_busy
    data_jam = jam if mode is AttackMode.JAM_DATA else nojam
    ack = ack0.copy()
    changed = (tx != tx0) | data_jam
    ack[changed] = _acks(world, busy, tx & changed, data_jam, seed, phase)[changed]

    actions = np.where(jam, mode.value, AttackMode.NONE.value)
    trace = SlotTrace(busy, np.where(decision_busy, BUSY, IDLE), tx, actions, ack, pred)
    return trace, slot_metrics(trace, budget.spent_units, ack0, int(ack0.sum()))


def jamming_budget(n_slots: int, timing: SlotTiming, fraction: float = 0.2) -> EnergyBudget:
    """Energy to jam the data phase of ``fraction`` of all slots."""
    return EnergyBudget(fraction * n_slots * timing.data_units)
