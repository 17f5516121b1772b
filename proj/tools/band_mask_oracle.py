#!/usr/bin/env python3
# Copyright 2026 The sepengine Authors
# License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

"""Ideal band-mask SDRi on two-label mixtures of the disjoint class set.

Written independently of the C++ library: its own generators (numpy RNG),
scipy's STFT/ISTFT and a direct SDR formula. Prints the mean SDR and SDRi
of the binary band mask and exits non-zero when the mean SDRi is < 20 dB.
"""

import argparse
import sys

import numpy as np
from scipy import signal

SR = 8000
N_FFT = 256
HOP = 64

# name, band (Hz), generator
CLASSES = [
    ("hum", (240, 460), "tone"),
    ("buzz", (470, 1180), "harmonic"),
    ("tick", (1350, 1750), "clicks"),
    ("hiss", (2840, 3660), "noise"),
]


def generate(kind, n, rng):
    t = np.arange(n) / SR
    if kind == "tone":
        x = np.sin(2 * np.pi * rng.uniform(300, 400) * t + rng.uniform(0, 2 * np.pi))
    elif kind == "harmonic":
        f0 = rng.uniform(520, 560)
        x = sum(np.sin(2 * np.pi * h * f0 * t + rng.uniform(0, 2 * np.pi)) / h for h in (1, 2))
    elif kind == "clicks":
        carrier, rate = rng.uniform(1500, 1600), rng.uniform(3, 6)
        length = int(round(0.032 * SR)) | 1
        burst = np.hanning(length) * np.cos(2 * np.pi * carrier * (np.arange(length) - length // 2) / SR)
        x = np.zeros(n)
        k = 0
        while True:
            c = int(round((k + 0.5) * SR / rate))
            if c + length // 2 >= n:
                break
            x[c - length // 2:c - length // 2 + length] += burst
            k += 1
    else:
        spec = rng.normal(size=n // 2 + 1) + 1j * rng.normal(size=n // 2 + 1)
        freqs = np.fft.rfftfreq(n, 1 / SR)
        spec[(freqs < 2900) | (freqs > 3600)] = 0
        x = np.fft.irfft(spec, n)
    return x * rng.uniform(0.3, 0.9) / np.max(np.abs(x))


def sdr(est, ref):
    return 10 * np.log10(np.sum(ref ** 2) / np.sum((ref - est) ** 2))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--clips", type=int, default=200)
    ap.add_argument("--seconds", type=float, default=2.0)
    ap.add_argument("--seed", type=int, default=20240917)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    n = int(round(args.seconds * SR))
    sdrs, sdris = [], []
    for _ in range(args.clips):
        a, b = rng.choice(len(CLASSES), size=2, replace=False)
        s0, s1 = generate(CLASSES[a][2], n, rng), generate(CLASSES[b][2], n, rng)
        s1 *= np.sqrt(np.sum(s0 ** 2) * 10 ** (rng.uniform(-5, 5) / 10) / np.sum(s1 ** 2))
        mix = s0 + s1
        freqs, _, spec = signal.stft(mix, SR, window="hann", nperseg=N_FFT, noverlap=N_FFT - HOP)
        for cls, ref in ((a, s0), (b, s1)):
            lo, hi = CLASSES[cls][1]
            mask = ((freqs >= lo) & (freqs <= hi))[:, None]
            _, est = signal.istft(spec * mask, SR, window="hann", nperseg=N_FFT, noverlap=N_FFT - HOP)
            est = est[:n]
            sdrs.append(sdr(est, ref))
            sdris.append(sdr(est, ref) - sdr(mix, ref))
    mean_sdri = float(np.mean(sdris))
    print(f"clips {args.clips} stems {len(sdris)} mean_sdr {np.mean(sdrs):.3f} dB "
          f"mean_sdri {mean_sdri:.3f} dB min_sdri {np.min(sdris):.3f} dB")
    return 0 if mean_sdri >= 20.0 else 1


if __name__ == "__main__":
    sys.exit(main())
