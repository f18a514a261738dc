"""Experiment configuration, seeded orchestration and report emission.

Configuration grammar (``.ini``-like, one statement per line)::

    # comment            ; comment
    [section]
    key = value

* Keys are unique across sections, so a key may also appear before any
  section header.  A key inside a section must belong to that section.
* Values: integers, reals (``1e-3``, ``inf``), booleans (``true``/``false``),
  bare words, or comma-separated lists for list-valued keys.
* A key may be set only once.  An empty document is the all-defaults
  Baseline1 experiment.
"""

from __future__ import annotations

import csv
import hashlib
import io
import math
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .neural import TrainConfig, predict_batch
from .streams import stream

SCENARIOS = ("Baseline1", "Attack1", "Defense1", "Auth2", "Spoof2", "Defense2")


class ConfigError(ValueError):
    pass


class ConfigParseError(ConfigError):
    def __init__(self, line: int, msg: str):
        self.line = line
        super().__init__(f"line {line}: {msg}")


class ConfigValidationError(ConfigError):
    def __init__(self, field_name: str, msg: str, line: int | None = None):
        self.field = field_name
        self.line = line
        where = f"line {line}: " if line else ""
        super().__init__(f"{where}{field_name}: {msg}")


# ---------------------------------------------------------------------------
# schema


@dataclass(frozen=True)
class Key:
    section: str
    name: str
    kind: str  # int, float, bool, word, floats, words
    default: object
    lo: float | None = None
    hi: float | None = None
    choices: tuple = ()
    lo_open: bool = False


_F = float("inf")

SCHEMA = [
    Key("experiment", "scenario", "word", "Baseline1", choices=SCENARIOS),
    Key("experiment", "seed", "int", 0, lo=0),
    Key("experiment", "n_seeds", "int", 1, lo=1),
    Key("ofdm", "subcarrier_spacing_hz", "float", 15e3, lo=0, lo_open=True),
    Key("ofdm", "n_resource_blocks", "int", 52, lo=1),
    Key("ofdm", "fft_size", "int", 1024, lo=2),
    Key("ofdm", "cp_len", "int", 72, lo=1),
    Key("ofdm", "bits_per_symbol", "int", 4, choices=(2, 4, 6)),
    Key("ofdm", "carrier_hz", "float", 4e9, lo=0, lo_open=True),
    Key("channel", "delay_spread_s", "float", 300e-9, lo=0, lo_open=True),
    Key("channel", "fading", "bool", True),
    Key("train", "batch_size", "int", 100, lo=1),
    Key("train", "n_steps", "int", 1000, lo=1),
    Key("train", "learning_rate", "float", 1e-3, lo=0, lo_open=True),
    Key("train", "optimizer", "word", "adam", choices=("adam", "sgd")),
    Key("gan", "gan_batch_size", "int", 100, lo=1),
    Key("gan", "gan_steps", "int", 1000, lo=1),
    Key("gan", "gan_learning_rate", "float", 2e-4, lo=0, lo_open=True),
    Key("gan", "gan_beta1", "float", 0.5, lo=0, hi=1),
    Key("occupancy", "occupancy", "word", "Iid", choices=("Iid", "Markov")),
    Key("occupancy", "p_busy", "float", 0.1, lo=0, hi=1),
    Key("occupancy", "p_idle_to_busy", "float", 0.05, lo=0, hi=1),
    Key("occupancy", "p_busy_to_idle", "float", 0.45, lo=0, hi=1),
    Key("sharing", "n_sensing_samples", "int", 1000, lo=4),
    Key("sharing", "n_adversary_samples", "int", 1000, lo=4),
    Key("sharing", "n_slots", "int", 2000, lo=1),
    Key("sharing", "radar_inr_db", "float", 10.0),
    Key("sharing", "t_snr_db", "float", 25.0),
    Key("sharing", "sensing_jam_db", "float", 10.0),
    Key("sharing", "data_jam_db", "float", 20.0),
    Key("sharing", "sinr_threshold_db", "float", 10.0),
    Key("sharing", "success_rule", "word", "sinr", choices=("sinr", "ber")),
    Key("sharing", "window_samples", "int", 6400, lo=200),
    Key("sharing", "ack_miss_prob", "float", 0.0, lo=0, hi=1),
    Key("timing", "sensing_units", "float", 1.0, lo=0, lo_open=True),
    Key("timing", "data_units", "float", 9.0, lo=0, lo_open=True),
    Key("budget", "budget_fraction", "float", 0.2, lo=0),
    Key("attack", "attack_modes", "words", ("JamData", "JamSensing"), choices=("JamData", "JamSensing")),
    Key("auth", "gamma_db", "floats", (-3.0, 0.0, 3.0)),
    Key("auth", "n_auth_samples", "int", 1000, lo=2),
    Key("auth", "n_observations", "int", 1000, lo=4),
    Key("auth", "n_trials", "int", 500, lo=1),
    Key("auth", "adversary_offset_db", "float", -10.0),
    Key("defense", "p_d", "float", 0.0, lo=0, hi=1),
    Key("defense", "pd_values", "floats", (0.0, 0.01, 0.02, 0.05, 0.1, 0.2), lo=0, hi=1),
    Key("defense", "defense_gamma_db", "float", -3.0),
    Key("defense", "defense_all_time", "bool", False),
]
KEYS = {k.name: k for k in SCHEMA}
SECTIONS = tuple(dict.fromkeys(k.section for k in SCHEMA))


def _convert(k: Key, raw: str, line):
    def one(text, kind):
        t = text.strip()
        if kind == "int":
            try:
                f = float(t)
            except ValueError:
                raise ConfigValidationError(k.name, f"expected an integer, got {t!r}", line) from None
            if not f.is_integer():
                raise ConfigValidationError(k.name, f"expected an integer, got {t!r}", line)
            return int(f)
        if kind == "float":
            try:
                v = float(t)
            except ValueError:
                raise ConfigValidationError(k.name, f"expected a number, got {t!r}", line) from None
            if math.isnan(v):
                raise ConfigValidationError(k.name, "NaN is not allowed", line)
            return v
        if kind == "bool":
            low = t.lower()
            if low in ("true", "yes", "on", "1"):
                return True
            if low in ("false", "no", "off", "0"):
                return False
            raise ConfigValidationError(k.name, f"expected true/false, got {t!r}", line)
        if not t or any(c.isspace() for c in t):
            raise ConfigValidationError(k.name, f"expected a single word, got {t!r}", line)
        return t

    if k.kind in ("floats", "words"):
        parts = [p for p in raw.split(",")]
        if not raw.strip():
            raise ConfigValidationError(k.name, "list must not be empty", line)
        return tuple(one(p, "float" if k.kind == "floats" else "word") for p in parts)
    return one(raw, k.kind)


def _check(k: Key, value, line=None):
    vals = value if isinstance(value, tuple) else (value,)
    for v in vals:
        if k.choices and v not in k.choices:
            raise ConfigValidationError(k.name, f"{v!r} is not one of {', '.join(map(str, k.choices))}", line)
        if k.lo is not None and (v < k.lo or (k.lo_open and v == k.lo)):
            op = ">" if k.lo_open else ">="
            raise ConfigValidationError(k.name, f"{v} must be {op} {k.lo}", line)
        if k.hi is not None and v > k.hi:
            raise ConfigValidationError(k.name, f"{v} must be <= {k.hi}", line)


# ---------------------------------------------------------------------------
# configuration object


@dataclass
class ExperimentConfig:
    values: dict = field(default_factory=lambda: {k.name: k.default for k in SCHEMA})

    def __post_init__(self):
        full = {k.name: k.default for k in SCHEMA}
        for name, v in self.values.items():
            if name not in KEYS:
                raise ConfigValidationError(name, "unknown key")
            full[name] = tuple(v) if isinstance(v, list) else v
        self.values = full
        for k in SCHEMA:
            _check(k, self.values[k.name])
        self._validate_blocks()

    def __getitem__(self, name):
        return self.values[name]

    def replace(self, **changes) -> "ExperimentConfig":
        v = dict(self.values)
        v.update(changes)
        return ExperimentConfig(v)

    @property
    def scenario(self) -> str:
        return self.values["scenario"]

    @property
    def seed(self) -> int:
        return self.values["seed"]

    @property
    def n_seeds(self) -> int:
        return self.values["n_seeds"]

    @property
    def seeds(self) -> list:
        return list(range(self.seed, self.seed + self.n_seeds))

    # typed blocks -------------------------------------------------------

    def ofdm(self):
        from .signal import OfdmConfig

        v = self.values
        return OfdmConfig(
            v["subcarrier_spacing_hz"], v["n_resource_blocks"], v["fft_size"], v["cp_len"], v["bits_per_symbol"], v["carrier_hz"]
        )

    def tdl(self):
        from .signal import TdlProfile

        return TdlProfile.exponential(self.values["delay_spread_s"])

    def train(self, seed: int, role: str) -> TrainConfig:
        v = self.values
        s = int(stream(seed, "train-seed", role).integers(0, 2**31))
        return TrainConfig(v["batch_size"], v["n_steps"], v["learning_rate"], v["optimizer"], s)

    def gan(self) -> TrainConfig:
        v = self.values
        return TrainConfig(v["gan_batch_size"], v["gan_steps"], v["gan_learning_rate"], "adam", 0, v["gan_beta1"])

    def occupancy(self):
        from .scenario1 import OccupancyModel

        v = self.values
        return OccupancyModel(v["occupancy"], v["p_busy"], v["p_idle_to_busy"], v["p_busy_to_idle"])

    def timing(self):
        from .scenario1 import SlotTiming

        return SlotTiming(self.values["sensing_units"], self.values["data_units"])

    def budget(self):
        from .scenario1 import jamming_budget

        return jamming_budget(self.values["n_slots"], self.timing(), self.values["budget_fraction"])

    def defense(self, p_d=None, scope="AuthDecisions"):
        from .defense import DefensePolicy

        p = self.values["p_d"] if p_d is None else p_d
        return DefensePolicy(p, scope=scope, all_time=self.values["defense_all_time"])

    def sharing_world(self):
        from .scenario1 import SharingWorld

        v = self.values
        return SharingWorld(
            ofdm=self.ofdm(),
            tdl=self.tdl(),
            occupancy=self.occupancy(),
            radar_inr_db=v["radar_inr_db"],
            t_snr_db=v["t_snr_db"],
            sensing_jam_db=v["sensing_jam_db"],
            data_jam_db=v["data_jam_db"],
            sinr_threshold_db=v["sinr_threshold_db"],
            success_rule=v["success_rule"],
            window_samples=v["window_samples"],
            fading=v["fading"],
            ack_miss_prob=v["ack_miss_prob"],
        )

    def auth_world(self, gamma_db: float):
        from .scenario2 import AuthConfig, AuthWorld

        v = self.values
        return AuthWorld(
            auth=AuthConfig(gamma_db, v["n_auth_samples"]),
            ofdm=self.ofdm(),
            tdl=self.tdl(),
            adversary_offset_db=v["adversary_offset_db"],
            fading=v["fading"],
            gan=self.gan(),
        )

    def _validate_blocks(self):
        v = self.values
        checks = [
            ("subcarrier_spacing_hz", self.ofdm),
            ("delay_spread_s", self.tdl),
            ("p_busy", self.occupancy),
            ("sensing_units", self.timing),
            ("window_samples", self.sharing_world),
        ]
        for name, build in checks:
            try:
                build()
            except ConfigError:
                raise
            except ValueError as e:
                raise ConfigValidationError(_blame(str(e), name), str(e)) from None
        if v["n_auth_samples"] % 2:
            raise ConfigValidationError("n_auth_samples", "must be even (half train, half test)")
        if v["n_sensing_samples"] % 2:
            raise ConfigValidationError("n_sensing_samples", "must be even (half train, half test)")
        if v["n_adversary_samples"] % 2:
            raise ConfigValidationError("n_adversary_samples", "must be even (half train, half test)")


def _blame(message: str, fallback: str) -> str:
    """Best guess at which key a block constructor complained about."""
    for k in SCHEMA:
        if k.name in message:
            return k.name
    return fallback


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate a configuration document (grammar in the module docstring)."""
    section = None
    seen = {}
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigParseError(lineno, f"malformed section header {line!r}")
            section = line[1:-1].strip()
            if section not in SECTIONS:
                raise ConfigParseError(lineno, f"unknown section [{section}]")
            continue
        if "=" not in line:
            raise ConfigParseError(lineno, f"expected 'key = value', got {line!r}")
        name, _, raw_value = line.partition("=")
        name = name.strip()
        value_text = raw_value.split(" #", 1)[0].split(" ;", 1)[0].strip()
        if not name:
            raise ConfigParseError(lineno, "missing key before '='")
        if name not in KEYS:
            raise ConfigParseError(lineno, f"unknown key {name!r}")
        k = KEYS[name]
        if section is not None and k.section != section:
            raise ConfigParseError(lineno, f"key {name!r} belongs in [{k.section}], not [{section}]")
        if name in seen:
            raise ConfigParseError(lineno, f"key {name!r} already set on line {seen[name]}")
        seen[name] = lineno
        value = _convert(k, value_text, lineno)
        _check(k, value, lineno)
        values[name] = value
    try:
        return ExperimentConfig(values)
    except ConfigValidationError as e:
        if e.line is None and e.field in seen:
            raise ConfigValidationError(e.field, str(e).split(": ", 1)[-1], seen[e.field]) from None
        raise


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        return ", ".join(_fmt(x) for x in v)
    return str(v)


def format_config(cfg: ExperimentConfig) -> str:
    """Canonical echo of every key; ``parse_config`` round-trips it exactly."""
    out = []
    for sec in SECTIONS:
        out.append(f"[{sec}]")
        for k in SCHEMA:
            if k.section == sec:
                out.append(f"{k.name} = {_fmt(cfg.values[k.name])}")
        out.append("")
    return "\n".join(out)


def config_hash(cfg: ExperimentConfig) -> str:
    return hashlib.sha256(format_config(cfg).encode("utf-8")).hexdigest()


# ---------------------------------------------------------------------------
# reports


@dataclass
class MetricsReport:
    scenario: str
    group_keys: tuple
    metric_names: tuple
    rows: list  # dicts with "seed", group keys and metrics
    config_hash: str = ""
    seeds: tuple = ()
    version: str = __version__
    config_text: str = ""

    def groups(self) -> list:
        out = []
        for r in self.rows:
            g = tuple(r[k] for k in self.group_keys)
            if g not in out:
                out.append(g)
        return out

    def aggregate(self) -> list:
        """Per group: ``(group values, {metric: (mean, sample std, n)})``."""
        agg = []
        for g in self.groups():
            sel = [r for r in self.rows if tuple(r[k] for k in self.group_keys) == g]
            stats = {}
            for m in self.metric_names:
                x = np.array([float(r[m]) for r in sel])
                std = float(np.std(x, ddof=1)) if x.size > 1 else float("nan")
                stats[m] = (float(np.mean(x)), std, int(x.size))
            agg.append((g, stats))
        return agg

    def mean(self, metric: str, **group) -> float:
        for g, stats in self.aggregate():
            if all(g[self.group_keys.index(k)] == v for k, v in group.items()):
                return stats[metric][0]
        raise KeyError(f"no group matching {group}")

    def per_seed(self, metric: str, **group) -> list:
        return [
            r[metric]
            for r in self.rows
            if all(r[k] == v for k, v in group.items())
        ]


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def emit_report(r: MetricsReport, fmt: str = "csv") -> bytes:
    """CSV (header, per-seed rows, AGGREGATE rows, provenance comments) or
    Markdown tables."""
    if fmt in ("csv", "Csv"):
        return _emit_csv(r).encode("utf-8")
    if fmt in ("md", "markdown", "Markdown"):
        return _emit_markdown(r).encode("utf-8")
    raise ValueError(f"unknown report format {fmt!r}")


def _emit_csv(r: MetricsReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["row", "stat", *r.group_keys, *r.metric_names])
    for row in r.rows:
        w.writerow([row["seed"], "value", *(_cell(row[k]) for k in r.group_keys), *(_cell(row[m]) for m in r.metric_names)])
    for g, stats in r.aggregate():
        for i, stat in enumerate(("mean", "std")):
            w.writerow(["AGGREGATE", stat, *(_cell(x) for x in g), *(_cell(stats[m][i]) for m in r.metric_names)])
    if not r.rows:
        w.writerow(["AGGREGATE", "mean", *([""] * (len(r.group_keys) + len(r.metric_names)))])
    buf.write(f"# scenario={r.scenario}\n")
    buf.write(f"# config_hash={r.config_hash}\n")
    buf.write(f"# seeds={' '.join(map(str, r.seeds))}\n")
    buf.write(f"# version={r.version}\n")
    return buf.getvalue()


def parse_report_csv(text: str):
    """Inverse of the CSV layout: ``(header, value rows, aggregate rows, provenance)``."""
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    prov = dict(ln[2:].split("=", 1) for ln in text.splitlines() if ln.startswith("# "))
    rows = list(csv.reader(lines))
    header, body = rows[0], rows[1:]
    values = [b for b in body if b[0] != "AGGREGATE"]
    agg = [b for b in body if b[0] == "AGGREGATE"]
    return header, values, agg, prov


_TITLES = {
    "Spoof2": "Spoofing attack performance",
    "Defense2": "Defense against spoofing attack",
    "Auth2": "Authentication classifier accuracy",
    "Baseline1": "Spectrum sharing without attack",
    "Attack1": "Surrogate model and budgeted jamming",
    "Defense1": "Defense against the surrogate-model attack",
}

_LABELS = {
    "gamma_db": "γ (dB)",
    "p_d": "P_d",
    "success_probability": "Attack success probability",
    "attack_success_probability": "Attack success probability",
}


def _emit_markdown(r: MetricsReport) -> str:
    out = [f"### {_TITLES.get(r.scenario, r.scenario)}", ""]
    cols = [*r.group_keys, *r.metric_names]
    out.append("| " + " | ".join(_LABELS.get(c, c) for c in cols) + " |")
    out.append("|" + "---|" * len(cols))
    for g, stats in r.aggregate():
        cells = [_cell(x) for x in g]
        for m in r.metric_names:
            mean, std, n = stats[m]
            cells.append(f"{mean:.4f}" if n < 2 else f"{mean:.4f} ± {std:.4f}")
        out.append("| " + " | ".join(cells) + " |")
    out.append("")
    n = len(r.seeds)
    out.append(f"Mean ± sample standard deviation over {n} seed{'s' if n != 1 else ''} ({', '.join(map(str, r.seeds))}).")
    out.append("")
    out.append(f"config hash `{r.config_hash}`, version {r.version}")
    out.append("")
    return "\n".join(out)


# ---------------------------------------------------------------------------
# per-seed pipelines


def _sensing_stack(cfg: ExperimentConfig, seed: int):
    from .scenario1 import build_defender_dataset, train_sensing_classifier

    world = cfg.sharing_world()
    data = build_defender_dataset(world, cfg["n_sensing_samples"], seed)
    train, test = data.split()
    c_t = train_sensing_classifier(train, cfg.train(seed, "C_T"))
    lab, _ = predict_batch(c_t, test.features)
    y = test.labels
    sens = {
        "idle_detection": float(np.mean(lab[y == 0] == 0)),
        "busy_detection_error": float(np.mean(lab[y == 1] == 0)),
    }
    return world, c_t, sens


def _seed_baseline1(cfg, seed):
    from .scenario1 import run_baseline

    world, c_t, sens = _sensing_stack(cfg, seed)
    _, m = run_baseline(world, c_t, cfg["n_slots"], seed)
    row = dict(sens)
    row.update(normalized_throughput=m.normalized_throughput, protection_rate=m.protection_rate)
    return [({}, row)]


def _attack_stack(cfg, seed, world, c_t, defense=None):
    from .scenario1 import build_adversary_dataset, train_surrogate

    data, info = build_adversary_dataset(world, c_t, cfg["n_adversary_samples"], seed, defense=defense)
    c_a, rep = train_surrogate(data, cfg.train(seed, "C_A"))
    return c_a, rep, info


def _jam_rows(cfg, seed, world, c_t, c_a):
    from .scenario1 import run_attack, run_baseline, throughput_reduction

    n = cfg["n_slots"]
    _, base = run_baseline(world, c_t, n, seed)
    row = {}
    for mode in ("JamData", "JamSensing"):
        if mode not in cfg["attack_modes"]:
            continue
        _, m = run_attack(world, c_t, c_a, mode, cfg.budget(), cfg.timing(), n, seed)
        key = "jamdata" if mode == "JamData" else "jamsensing"
        row[f"{key}_reduction"] = throughput_reduction(base, m)
        row[f"{key}_unnecessary_rate"] = m.unnecessary_jamming_rate
        row[f"{key}_energy"] = m.energy_spent
    return row


def _seed_attack1(cfg, seed):
    world, c_t, sens = _sensing_stack(cfg, seed)
    pol = cfg.defense(scope="TransmitDecisions") if cfg["p_d"] > 0 else None
    c_a, rep, _ = _attack_stack(cfg, seed, world, c_t, pol)
    row = dict(sens)
    row.update(ack_detection=rep["ack_detection"], no_ack_error=rep["no_ack_error"])
    row.update(_jam_rows(cfg, seed, world, c_t, c_a))
    return [({}, row)]


def _seed_defense1(cfg, seed):
    from .defense import evaluate_defense_scenario1

    world, c_t, _ = _sensing_stack(cfg, seed)
    table = evaluate_defense_scenario1(cfg["pd_values"], world, cfg["n_slots"], seed, c_t=c_t, cfg=cfg)
    return [({"p_d": row.pop("p_d")}, row) for row in table]


def _seed_auth2(cfg, seed):
    from .scenario2 import build_auth_dataset, train_auth_classifier

    out = []
    for g in cfg["gamma_db"]:
        world = cfg.auth_world(g)
        data = build_auth_dataset(world.auth, world.ofdm, seed, world)
        _, rep = train_auth_classifier(data, cfg.train(seed, "C_S"))
        out.append(({"gamma_db": g}, rep))
    return out


def _seed_spoof2(cfg, seed):
    from .scenario2 import (
        build_auth_dataset,
        collect_adversary_observations,
        feedback_labels,
        replay_attack_baseline,
        run_spoofing_attack,
        train_auth_classifier,
        train_spoofer,
    )

    out = []
    pol = cfg.defense() if cfg["p_d"] > 0 else None
    for g in cfg["gamma_db"]:
        world = cfg.auth_world(g)
        data = build_auth_dataset(world.auth, world.ofdm, seed, world)
        c_s, rep = train_auth_classifier(data, cfg.train(seed, "C_S"))
        obs = collect_adversary_observations(world, cfg["n_observations"], seed)
        labels, _ = feedback_labels(c_s, obs, pol)
        gan = train_spoofer(world, obs, labels, seed)
        n = cfg["n_trials"]
        spoof = run_spoofing_attack(c_s, gan, world, n, seed)
        replay = replay_attack_baseline(c_s, world, n, seed)
        out.append(
            (
                {"gamma_db": g},
                {
                    "n_trials": n,
                    "success_probability": spoof.success_probability,
                    "replay_success_probability": replay.success_probability,
                    "auth_test_accuracy": rep["test_accuracy"],
                },
            )
        )
    return out


def _seed_defense2(cfg, seed):
    from .defense import evaluate_defense_scenario2

    table = evaluate_defense_scenario2(
        cfg["pd_values"], cfg["defense_gamma_db"], cfg["n_trials"], seed, cfg=cfg
    )
    return [({"p_d": p}, {"attack_success_probability": s}) for p, s in table]


_PIPELINES = {
    "Baseline1": ((), _seed_baseline1),
    "Attack1": ((), _seed_attack1),
    "Defense1": (("p_d",), _seed_defense1),
    "Auth2": (("gamma_db",), _seed_auth2),
    "Spoof2": (("gamma_db",), _seed_spoof2),
    "Defense2": (("p_d",), _seed_defense2),
}


class SeedError(RuntimeError):
    def __init__(self, seed: int, index: int, cause: Exception):
        self.seed, self.index = seed, index
        super().__init__(f"seed {seed} (index {index}): {type(cause).__name__}: {cause}")


def run_seed(cfg: ExperimentConfig, seed: int) -> list:
    """Rows for one seed; depends on nothing but ``cfg`` and ``seed``."""
    keys, fn = _PIPELINES[cfg.scenario]
    rows = []
    for group, metrics in fn(cfg, seed):
        row = {"seed": seed}
        row.update({k: group[k] for k in keys})
        row.update(metrics)
        rows.append(row)
    return rows


def run_experiment(cfg: ExperimentConfig, progress=None) -> MetricsReport:
    """Run the scenario once per seed (seed .. seed + n_seeds - 1) and aggregate."""
    keys, _ = _PIPELINES[cfg.scenario]
    rows = []
    for i, s in enumerate(cfg.seeds):
        try:
            rows.extend(run_seed(cfg, s))
        except Exception as e:  # annotate with the seed, keep the cause
            raise SeedError(s, i, e) from e
        if progress:
            progress(s)
    metric_names = tuple(k for k in (rows[0] if rows else {}) if k != "seed" and k not in keys)
    return MetricsReport(
        cfg.scenario, keys, metric_names, rows, config_hash(cfg), tuple(cfg.seeds), __version__, format_config(cfg)
    )
