"""Pure FIR signal-processing kernels.

Signals and coefficient vectors are plain 1-D float64 arrays. Everything
here is a pure function of its inputs, safe to call concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

# Squared errors are clamped here before log10 so silent stretches come out
# as a very low finite level instead of -inf.
_POWER_FLOOR = 1e-300


@dataclass(frozen=True)
class FrequencyResponse:
    """Magnitude/phase samples of an FIR filter on a [0, fs/2) grid."""

    frequencies: np.ndarray
    magnitude: np.ndarray
    phase: np.ndarray


def fir_filter(coeffs: np.ndarray, signal_in: np.ndarray) -> np.ndarray:
    """Causal direct-form FIR filter with zero initial state.

    Output sample n is sum(coeffs[t] * signal_in[n - t]) over t with
    n - t >= 0; the output has the same length as the input.
    """
    coeffs = np.asarray(coeffs, dtype=np.float64)
    if coeffs.ndim != 1 or coeffs.size == 0:
        raise ValueError("coeffs must be a non-empty 1-D sequence")
    signal_in = np.asarray(signal_in, dtype=np.float64)
    if signal_in.size == 0:
        return np.zeros(0)
    return lfilter(coeffs, [1.0], signal_in)


def design_bandpass(order: int, f_lo: float, f_hi: float, fs: float) -> np.ndarray:
    """Design a linear-phase Hamming-windowed sinc bandpass filter.

    Returns order+1 taps, symmetric about the midpoint. The taps are scaled
    so the magnitude response is exactly 1 at the passband midpoint
    (f_lo + f_hi) / 2.
    """
    if order != int(order) or order < 2 or order % 2 != 0:
        raise ValueError("order must be an even integer >= 2")
    order = int(order)
    if not (0.0 < f_lo < f_hi < fs / 2.0):
        raise ValueError("band edges must satisfy 0 < f_lo < f_hi < fs/2")

    mid = order // 2
    w_lo = 2.0 * np.pi * f_lo / fs
    w_hi = 2.0 * np.pi * f_hi / fs

    # Build one half and mirror it so the symmetry is exact, not merely
    # up to rounding in the trig evaluations.
    offsets = np.arange(1, mid + 1, dtype=np.float64)
    half_sinc = (np.sin(w_hi * offsets) - np.sin(w_lo * offsets)) / (np.pi * offsets)
    half_win = 0.54 - 0.46 * np.cos(2.0 * np.pi * np.arange(mid + 1) / order)
    half = half_sinc * half_win[:mid][::-1]
    center = (w_hi - w_lo) / np.pi * half_win[mid]
    taps = np.concatenate([half[::-1], [center], half])

    f_mid = 0.5 * (f_lo + f_hi)
    gain = np.abs(np.sum(taps * np.exp(-2j * np.pi * f_mid * np.arange(order + 1) / fs)))
    return taps / gain


def freq_response(coeffs: np.ndarray, n_points: int, fs: float) -> FrequencyResponse:
    """Evaluate H(f) = sum(taps[t] * exp(-i 2 pi f t / fs)) on n_points
    equispaced frequencies in [0, fs/2)."""
    coeffs = np.asarray(coeffs, dtype=np.float64)
    if coeffs.ndim != 1 or coeffs.size == 0:
        raise ValueError("coeffs must be a non-empty 1-D sequence")
    if n_points < 2:
        raise ValueError("n_points must be >= 2")
    if fs <= 0:
        raise ValueError("fs must be positive")
    freqs = np.arange(n_points, dtype=np.float64) * (fs / 2.0) / n_points
    kernel = np.exp(-2j * np.pi * np.outer(freqs, np.arange(coeffs.size)) / fs)
    response = kernel @ coeffs
    return FrequencyResponse(
        frequencies=freqs,
        magnitude=np.abs(response),
        phase=np.angle(response),
    )


def smoothed_db_trace(errors: np.ndarray, window: int) -> np.ndarray:
    """Square, apply a centered moving average, and convert to dB.

    Even windows are coerced down to the next odd value. At the edges the
    symmetric window is clipped to the available samples and the average is
    taken over however many remain, so the output has the input's length.
    """
    errors = np.asarray(errors, dtype=np.float64)
    if window < 1:
        raise ValueError("window must be >= 1")
    window = int(window)
    if window % 2 == 0:
        window -= 1
    n = errors.size
    if window > n:
        raise ValueError(f"window {window} exceeds trace length {n}")

    power = np.maximum(errors * errors, _POWER_FLOOR)
    half = window // 2
    csum = np.concatenate([[0.0], np.cumsum(power)])
    idx = np.arange(n)
    lo = np.maximum(idx - half, 0)
    hi = np.minimum(idx + half, n - 1)
    mean_power = (csum[hi + 1] - csum[lo]) / (hi - lo + 1)
    return 10.0 * np.log10(np.maximum(mean_power, _POWER_FLOOR))
