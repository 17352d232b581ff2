"""Regenerates the reference fixtures with SciPy (independent implementation).

    python3 generate.py
"""
import json

import numpy as np
from scipy import stats
from scipy.signal import butter, sosfiltfilt, sosfreqz

rng = np.random.default_rng(20240601)
samples = {
    "n12_normal": np.round(rng.normal(0.557, 0.039, 12), 4),
    "n3": np.array([1.0, 2.0, 4.0]),
    "n5": np.round(rng.normal(0, 1, 5), 4),
    "n8_skew": np.round(rng.exponential(1.0, 8), 4),
    "n11": np.round(rng.normal(10, 2, 11), 4),
    "n20_uniform": np.round(rng.uniform(0, 1, 20), 4),
    "n40_normal": np.round(rng.normal(108.1, 7.5, 40), 3),
    "n40_lognormal": np.round(rng.lognormal(0, 0.8, 40), 4),
    "n100_normal": np.round(rng.normal(0, 1, 100), 4),
}
out = []
for name, v in samples.items():
    r = stats.shapiro(v)
    out.append(dict(name=name, x=[float(a) for a in v], w=float(r.statistic), p=float(r.pvalue)))
json.dump(out, open("shapiro_wilk.json", "w"), indent=1)

flt = []
for order, fc, fs, n in [(2, 20, 1000, 400), (4, 5, 25, 120)]:
    sos = butter(order, fc, fs=fs, output="sos")
    t = np.arange(n) / fs
    x = np.sin(2 * np.pi * 1.3 * t) + 0.5 * np.cos(2 * np.pi * 0.4 * fc * t + 0.3) + 0.3 * rng.normal(size=n) + 2.0
    # odd padding of 6 * order samples, steady-state initial conditions
    y = sosfiltfilt(sos, x, padtype="odd", padlen=6 * order)
    freqs = [0.0, fc / 4, fc / 2, fc, 1.5 * fc, 0.45 * fs]
    _, h = sosfreqz(sos, worN=np.array(freqs), fs=fs)
    flt.append(dict(order=order, cutoff_hz=fc, fs_hz=fs, x=[float(a) for a in x], y=[float(a) for a in y],
                    freqs=freqs, gains=[float(abs(a)) for a in h]))
json.dump(flt, open("filtfilt.json", "w"))
