#!/usr/bin/env python3
"""Waveforms and channels: radar pulses, OFDM frames, fading and noise."""

# %%
import numpy as np

from aml5g.signal import (
    LinkGeometry,
    OfdmConfig,
    RadarConfig,
    TdlProfile,
    add_awgn,
    apply_tdl_channel,
    demod_ofdm,
    free_space_loss_db,
    gen_ofdm_frame,
    gen_radar_pulse,
    rssi_features,
)

rng = np.random.default_rng(0)

# %% [markdown]
# A radar with 10 us pulses every 100 us, sampled at 10 MHz.

# %%
radar = gen_radar_pulse(RadarConfig(), 10_000, 10e6)
on = np.abs(radar.samples) > 0
print("radar samples:", radar.samples.size, "pulses:", int(np.sum(np.diff(on.astype(int)) == 1) + on[0]))

# %% [markdown]
# One OFDM symbol carries 624 subcarriers of 16-QAM.

# %%
cfg = OfdmConfig()
bits = rng.integers(0, 2, 3 * cfg.bits_per_ofdm_symbol).astype(np.uint8)
frame = gen_ofdm_frame(cfg, bits)
print("bits per symbol:", cfg.bits_per_ofdm_symbol, "frame samples:", frame.samples.size)
print("noiseless round trip ok:", np.array_equal(demod_ofdm(frame, cfg), bits))

for snr in (5, 10, 15, 20):
    noisy = add_awgn(frame, snr, rng)
    ber = np.mean(demod_ofdm(noisy, cfg) != bits)
    print(f"AWGN {snr:2d} dB  BER {ber:.4f}")

# %% [markdown]
# Fading spreads the symbol over several taps; the average power is kept.

# %%
tdl = TdlProfile.exponential()
powers = [np.mean(np.abs(apply_tdl_channel(frame, tdl, rng).samples) ** 2) for _ in range(200)]
print("mean received power over 200 fades:", round(float(np.mean(powers)), 3))

# %%
print("free-space loss at 1 km, 4 GHz:", round(free_space_loss_db(LinkGeometry(1000.0, 4e9)), 2), "dB")
print("RSSI bins of the radar frame:", np.round(rssi_features(radar, 10), 3))
