#!/usr/bin/env python3
"""Config files, seeded runs and report output, from Python and from the shell."""

# %%
import subprocess
import sys
import tempfile
from pathlib import Path

from aml5g.harness import emit_report, format_config, parse_config, run_experiment

text = """
scenario = Baseline1
n_seeds = 2
[sharing]
n_sensing_samples = 200
n_slots = 100
[train]
n_steps = 100
"""
cfg = parse_config(text)
print(format_config(cfg).splitlines()[:4])

# %%
report = run_experiment(cfg)
print(emit_report(report, "md").decode())

# %% [markdown]
# The same run through the command line; a second run gives identical bytes.

# %%
with tempfile.TemporaryDirectory() as d:
    path = Path(d) / "baseline.ini"
    path.write_text(text)
    outs = []
    for i in range(2):
        out = Path(d) / f"out{i}"
        subprocess.run([sys.executable, "-m", "aml5g", "run", str(path), "--out", str(out)], check=True)
        outs.append((out / "Baseline1_s0_n2.csv").read_bytes())
    print("identical:", outs[0] == outs[1])
    path.write_text("p_d = 1.5\n")
    bad = subprocess.run([sys.executable, "-m", "aml5g", "validate", str(path)], capture_output=True, text=True)
    print("exit", bad.returncode, bad.stderr.strip())
