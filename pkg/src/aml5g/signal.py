"""Baseband waveforms, channel effects and feature extraction.

Frames are complex128 sample vectors.  Powers are in linear units relative
to whatever reference the caller uses; the simulation worlds use a receiver
noise floor of 1.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0
RSSI_FLOOR_DB = -120.0


class Origin(str, enum.Enum):
    RADAR = "Radar"
    UE = "UeSignal"
    JAMMER = "Jammer"
    NOISE = "Noise"
    SPOOF = "Spoof"
    MIXTURE = "Mixture"


@dataclass
class IqFrame:
    samples: np.ndarray
    sample_rate_hz: float
    origin: Origin = Origin.MIXTURE
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.complex128).ravel()
        if not self.sample_rate_hz > 0:
            raise ValueError("sample_rate_hz must be positive")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("frame contains non-finite samples")
        self.origin = Origin(self.origin)

    def __len__(self) -> int:
        return self.samples.size

    @property
    def power(self) -> float:
        """Mean |x|^2 over the frame (0 for an empty frame)."""
        if self.samples.size == 0:
            return 0.0
        return float(np.mean(np.abs(self.samples) ** 2))


# ---------------------------------------------------------------------------
# configuration types


@dataclass(frozen=True)
class OfdmConfig:
    subcarrier_spacing_hz: float = 15e3
    n_resource_blocks: int = 52
    fft_size: int = 1024
    cp_len: int = 72
    bits_per_symbol: int = 4
    carrier_hz: float = 4e9

    def __post_init__(self):
        if self.n_resource_blocks < 1:
            raise ValueError("n_resource_blocks must be >= 1")
        if self.fft_size < self.n_active + 1:
            raise ValueError(
                f"fft_size {self.fft_size} cannot hold {self.n_active} active subcarriers plus DC"
            )
        if not 1 <= self.cp_len < self.fft_size:
            raise ValueError("cp_len must lie in [1, fft_size)")
        if self.bits_per_symbol not in (2, 4, 6):
            raise ValueError("bits_per_symbol must be 2, 4 or 6")
        if self.subcarrier_spacing_hz <= 0 or self.carrier_hz <= 0:
            raise ValueError("subcarrier spacing and carrier must be positive")

    @property
    def n_active(self) -> int:
        return 12 * self.n_resource_blocks

    @property
    def sample_rate_hz(self) -> float:
        return self.fft_size * self.subcarrier_spacing_hz

    @property
    def symbol_len(self) -> int:
        return self.fft_size + self.cp_len

    @property
    def bits_per_ofdm_symbol(self) -> int:
        return self.n_active * self.bits_per_symbol

    def active_bins(self) -> np.ndarray:
        # symmetric around DC, DC left empty
        half = self.n_active // 2
        neg = np.arange(-(self.n_active - half), 0) % self.fft_size
        pos = np.arange(1, half + 1)
        return np.concatenate([neg, pos])


@dataclass(frozen=True)
class TdlProfile:
    tap_delays_s: tuple
    tap_powers_lin: tuple
    delay_spread_s: float

    def __post_init__(self):
        d = np.asarray(self.tap_delays_s, dtype=float)
        p = np.asarray(self.tap_powers_lin, dtype=float)
        if d.ndim != 1 or d.size == 0 or d.size != p.size:
            raise ValueError("need matching, non-empty delay and power vectors")
        if np.any(d < 0) or np.any(np.diff(d) < 0):
            raise ValueError("tap delays must be ascending and non-negative")
        if np.any(p <= 0):
            raise ValueError("tap powers must be positive")
        p = p / p.sum()
        object.__setattr__(self, "tap_delays_s", tuple(d.tolist()))
        object.__setattr__(self, "tap_powers_lin", tuple(p.tolist()))
        rms = self.rms_delay_spread()
        if self.delay_spread_s == 0:
            if rms > 1e-15:
                raise ValueError("taps have non-zero delay spread but delay_spread_s is 0")
        elif abs(rms - self.delay_spread_s) > 0.05 * self.delay_spread_s:
            raise ValueError(
                f"RMS delay spread {rms:.3e} s is not within 5% of {self.delay_spread_s:.3e} s"
            )

    def rms_delay_spread(self) -> float:
        d = np.asarray(self.tap_delays_s)
        p = np.asarray(self.tap_powers_lin)
        mean = np.sum(p * d)
        return float(math.sqrt(max(np.sum(p * d**2) - mean**2, 0.0)))

    @classmethod
    def from_taps(cls, delays_s, powers_lin) -> "TdlProfile":
        p = np.asarray(powers_lin, float)
        d = np.asarray(delays_s, float)
        p = p / p.sum()
        mean = np.sum(p * d)
        rms = math.sqrt(max(np.sum(p * d**2) - mean**2, 0.0))
        return cls(tuple(d), tuple(p), rms)

    @classmethod
    def exponential(
        cls,
        delay_spread_s: float = 300e-9,
        relative_delays=(0.0, 1.0, 3.0),
        decay_db_per_unit: float = 3.0,
    ) -> "TdlProfile":
        """Exponential power-delay profile scaled to an exact RMS delay spread."""
        rel = np.asarray(relative_delays, float)
        p = 10.0 ** (-decay_db_per_unit * rel / 10.0)
        p /= p.sum()
        mean = np.sum(p * rel)
        unit_rms = math.sqrt(np.sum(p * rel**2) - mean**2)
        if unit_rms == 0:
            raise ValueError("relative delays must not all coincide")
        scale = delay_spread_s / unit_rms
        return cls(tuple(rel * scale), tuple(p), delay_spread_s)


@dataclass(frozen=True)
class RadarConfig:
    pulse_width_s: float = 10e-6
    pulse_repetition_interval_s: float = 100e-6
    peak_power_lin: float = 1.0

    def __post_init__(self):
        if self.pulse_width_s <= 0:
            raise ValueError("pulse width must be positive")
        if self.pulse_width_s >= self.pulse_repetition_interval_s:
            raise ValueError("pulse width must be shorter than the PRI")
        if self.peak_power_lin < 0:
            raise ValueError("peak power must be non-negative")


@dataclass(frozen=True)
class LinkGeometry:
    distance_m: float
    carrier_hz: float = 4e9

    def __post_init__(self):
        if not self.distance_m > 0:
            raise ValueError("distance_m must be positive")
        if not self.carrier_hz > 0:
            raise ValueError("carrier_hz must be positive")


# ---------------------------------------------------------------------------
# waveforms


def gen_radar_pulse(cfg: RadarConfig, n_samples: int, sample_rate_hz: float, rng=None) -> IqFrame:
    """Rectangular pulse train with a random start offset and carrier phase.

    The offset is drawn so that every pulse lies fully inside the frame
    (when the frame spans whole PRIs).  ``rng=None`` means offset 0, phase 0.
    """
    if n_samples <= 0:
        raise ValueError("n_samples must be positive")
    width = int(round(cfg.pulse_width_s * sample_rate_hz))
    pri = int(round(cfg.pulse_repetition_interval_s * sample_rate_hz))
    if width < 1:
        raise ValueError("pulse shorter than one sample at this sample rate")
    if width >= pri:
        raise ValueError("pulse width must be shorter than the PRI")
    if rng is None:
        offset, phase = 0, 0.0
    else:
        offset = int(rng.integers(0, pri - width + 1))
        phase = float(rng.uniform(0, 2 * np.pi))
    on = ((np.arange(n_samples) - offset) % pri) < width
    on[:offset] = False
    x = np.zeros(n_samples, dtype=np.complex128)
    x[on] = math.sqrt(cfg.peak_power_lin) * np.exp(1j * phase)
    return IqFrame(x, sample_rate_hz, Origin.RADAR)


def _axis_levels(bits_per_axis: int):
    """Amplitude levels per axis and the Gray word for each level."""
    n = 1 << bits_per_axis
    levels = 2.0 * np.arange(n) - (n - 1)
    gray = np.arange(n) ^ (np.arange(n) >> 1)
    return levels, gray


def _qam_scale(bits_per_symbol: int) -> float:
    m = 1 << bits_per_symbol
    return math.sqrt(2.0 * (m - 1) / 3.0)


def qam_modulate(bits: np.ndarray, bits_per_symbol: int) -> np.ndarray:
    """Square Gray-mapped QAM with unit average symbol energy."""
    k = bits_per_symbol // 2
    b = np.asarray(bits, dtype=np.int64).reshape(-1, bits_per_symbol)
    weights = 1 << np.arange(k - 1, -1, -1)
    gi = b[:, :k] @ weights
    gq = b[:, k:] @ weights
    levels, gray = _axis_levels(k)
    level_of_gray = np.empty_like(levels)
    level_of_gray[gray] = levels
    return (level_of_gray[gi] + 1j * level_of_gray[gq]) / _qam_scale(bits_per_symbol)


def qam_demodulate(symbols: np.ndarray, bits_per_symbol: int) -> np.ndarray:
    """Hard nearest-point decisions; exact ties go to the lowest Gray word."""
    k = bits_per_symbol // 2
    levels, gray = _axis_levels(k)
    order = np.argsort(gray)  # candidate levels listed by ascending Gray word
    cand = levels[order]
    s = np.asarray(symbols) * _qam_scale(bits_per_symbol)

    def axis(v):
        idx = np.argmin(np.abs(v[:, None] - cand[None, :]), axis=1)
        g = gray[order][idx]
        return (g[:, None] >> np.arange(k - 1, -1, -1)) & 1

    return np.concatenate([axis(s.real), axis(s.imag)], axis=1).ravel().astype(np.uint8)


def ofdm_padding(cfg: OfdmConfig, n_bits: int) -> int:
    per = cfg.bits_per_ofdm_symbol
    return (-n_bits) % per


def gen_ofdm_frame(cfg: OfdmConfig, payload_bits) -> IqFrame:
    """Gray-QAM on the active subcarriers, IFFT, cyclic prefix.

    The payload is zero-padded to whole OFDM symbols; the pad length is kept
    in ``frame.meta["pad_bits"]``.  Time-domain samples are scaled to unit
    average power.
    """
    bits = np.asarray(payload_bits, dtype=np.uint8).ravel()
    if np.any(bits > 1):
        raise ValueError("payload must be a bit vector")
    pad = ofdm_padding(cfg, bits.size)
    if bits.size == 0:
        return IqFrame(np.zeros(0), cfg.sample_rate_hz, Origin.UE, {"pad_bits": 0})
    bits = np.concatenate([bits, np.zeros(pad, np.uint8)])
    n_sym = bits.size // cfg.bits_per_ofdm_symbol
    qam = qam_modulate(bits, cfg.bits_per_symbol).reshape(n_sym, cfg.n_active)
    grid = np.zeros((n_sym, cfg.fft_size), dtype=np.complex128)
    grid[:, cfg.active_bins()] = qam
    scale = math.sqrt(cfg.fft_size / cfg.n_active)
    body = np.fft.ifft(grid, axis=1, norm="ortho") * scale
    sym = np.concatenate([body[:, -cfg.cp_len:], body], axis=1)
    return IqFrame(sym.ravel(), cfg.sample_rate_hz, Origin.UE, {"pad_bits": pad})


def demod_ofdm(frame: IqFrame, cfg: OfdmConfig) -> np.ndarray:
    """Strip CP, FFT and slice.  No equalisation.

    Trailing pad bits recorded by :func:`gen_ofdm_frame` are dropped.
    """
    x = frame.samples
    if x.size % cfg.symbol_len:
        raise ValueError(
            f"frame length {x.size} is not a multiple of the OFDM symbol length {cfg.symbol_len}"
        )
    if x.size == 0:
        return np.zeros(0, np.uint8)
    sym = x.reshape(-1, cfg.symbol_len)[:, cfg.cp_len:]
    scale = math.sqrt(cfg.fft_size / cfg.n_active)
    grid = np.fft.fft(sym, axis=1, norm="ortho") / scale
    bits = qam_demodulate(grid[:, cfg.active_bins()].ravel(), cfg.bits_per_symbol)
    pad = int(frame.meta.get("pad_bits", 0))
    return bits[: bits.size - pad] if pad else bits


# ---------------------------------------------------------------------------
# channel


def free_space_loss_db(g: LinkGeometry) -> float:
    return 20.0 * math.log10(4.0 * math.pi * g.distance_m * g.carrier_hz / SPEED_OF_LIGHT)


def path_gain(g: LinkGeometry) -> float:
    """Linear power gain of a free-space link."""
    return 10.0 ** (-free_space_loss_db(g) / 10.0)


def tdl_taps(p: TdlProfile, sample_rate_hz: float, rng=None, fading: bool = True) -> np.ndarray:
    """Discrete-time impulse response; taps landing on the same sample add."""
    delays = np.rint(np.asarray(p.tap_delays_s) * sample_rate_hz).astype(int)
    powers = np.asarray(p.tap_powers_lin)
    if fading:
        g = (rng.standard_normal(powers.size) + 1j * rng.standard_normal(powers.size)) * np.sqrt(
            powers / 2
        )
    else:
        g = np.sqrt(powers).astype(np.complex128)
    h = np.zeros(delays.max() + 1, dtype=np.complex128)
    np.add.at(h, delays, g)
    return h


def apply_tdl_channel(frame: IqFrame, p: TdlProfile, rng=None, fading: bool = True) -> IqFrame:
    """Convolve with one TDL realisation; output grows by the maximum tap delay."""
    if len(frame) == 0:
        raise ValueError("cannot pass an empty frame through the channel")
    if fading and rng is None:
        raise ValueError("fading channel needs a random stream")
    h = tdl_taps(p, frame.sample_rate_hz, rng, fading)
    return IqFrame(np.convolve(frame.samples, h), frame.sample_rate_hz, frame.origin, dict(frame.meta))


def complex_noise(n: int, power: float, rng) -> np.ndarray:
    return (rng.standard_normal(n) + 1j * rng.standard_normal(n)) * math.sqrt(power / 2.0)


def add_awgn(frame: IqFrame, snr_db: float, rng) -> IqFrame:
    """Add complex white noise at ``snr_db`` relative to the frame's measured power."""
    if math.isinf(snr_db) and snr_db > 0:
        return frame
    p = frame.power
    if p == 0:
        raise ValueError("cannot set a finite SNR on a zero-power frame")
    nv = p / 10.0 ** (snr_db / 10.0)
    y = frame.samples + complex_noise(len(frame), nv, rng)
    return IqFrame(y, frame.sample_rate_hz, frame.origin, dict(frame.meta))


def superpose(frames, gains_lin) -> IqFrame:
    """Sample-wise weighted sum; shorter frames are zero-padded."""
    frames = list(frames)
    gains = list(gains_lin)
    if not frames:
        raise ValueError("nothing to superpose")
    if len(gains) != len(frames):
        raise ValueError("need one gain per frame")
    fs = frames[0].sample_rate_hz
    if any(f.sample_rate_hz != fs for f in frames):
        raise ValueError("frames have mismatched sample rates")
    n = max(len(f) for f in frames)
    out = np.zeros(n, dtype=np.complex128)
    for f, g in zip(frames, gains):
        out[: len(f)] += g * f.samples
    return IqFrame(out, fs, Origin.MIXTURE)


# ---------------------------------------------------------------------------
# features


def rssi_features(frame: IqFrame, n_bins: int) -> np.ndarray:
    """Mean power of ``n_bins`` equal contiguous windows, in dB.

    Samples beyond ``n_bins * (len // n_bins)`` are ignored.
    """
    if n_bins < 1:
        raise ValueError("n_bins must be >= 1")
    if len(frame) < n_bins:
        raise ValueError(f"frame of {len(frame)} samples is too short for {n_bins} bins")
    w = len(frame) // n_bins
    p = np.mean(np.abs(frame.samples[: n_bins * w].reshape(n_bins, w)) ** 2, axis=1)
    with np.errstate(divide="ignore"):
        db = 10.0 * np.log10(p)
    return np.maximum(db, RSSI_FLOOR_DB)


def unit_power_rows(x: np.ndarray) -> np.ndarray:
    """Scale interleaved I/Q rows so that mean(re^2 + im^2) = 1 per row."""
    x = np.atleast_2d(np.asarray(x, float))
    p = np.sum(x**2, axis=1, keepdims=True) / (x.shape[1] / 2)
    if np.any(p == 0):
        raise ValueError("cannot normalise a zero-power row")
    return x / np.sqrt(p)


def iq_features(frame: IqFrame, n_complex: int) -> np.ndarray:
    """First ``n_complex`` samples as [re0, im0, re1, im1, ...] at unit average power."""
    if n_complex < 1:
        raise ValueError("n_complex must be >= 1")
    if len(frame) < n_complex:
        raise ValueError(f"frame of {len(frame)} samples is too short for {n_complex} samples")
    z = frame.samples[:n_complex]
    v = np.empty(2 * n_complex)
    v[0::2] = z.real
    v[1::2] = z.imag
    return unit_power_rows(v)[0]


def frame_from_iq(row, sample_rate_hz: float, origin=Origin.SPOOF) -> IqFrame:
    """Inverse of :func:`iq_features` layout (no power change)."""
    row = np.asarray(row, float)
    if row.size % 2:
        raise ValueError("interleaved I/Q row must have even length")
    return IqFrame(row[0::2] + 1j * row[1::2], sample_rate_hz, origin)


# ---------------------------------------------------------------------------
# raw I/Q export


def write_iq(path, frame: IqFrame) -> Path:
    """Write little-endian float32 [re, im] pairs plus a ``.meta`` sidecar."""
    path = Path(path)
    v = np.empty(2 * len(frame), dtype="<f4")
    v[0::2] = frame.samples.real
    v[1::2] = frame.samples.imag
    path.write_bytes(v.tobytes())
    meta = path.with_name(path.name + ".meta")
    meta.write_text(f"sample_rate_hz = {frame.sample_rate_hz!r}\norigin = {frame.origin.value}\n")
    return path


def read_iq(path) -> IqFrame:
    path = Path(path)
    v = np.frombuffer(path.read_bytes(), dtype="<f4").astype(np.float64)
    fields = {}
    for line in path.with_name(path.name + ".meta").read_text().splitlines():
        if "=" in line:
            k, val = line.split("=", 1)
            fields[k.strip()] = val.strip()
    return IqFrame(v[0::2] + 1j * v[1::2], float(fields["sample_rate_hz"]), Origin(fields["origin"]))
