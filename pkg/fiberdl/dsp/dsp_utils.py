"""
Shared signal-processing utilities: unit conversions, DFT grids,
circular filtering and seeded random substreams
"""

import math

import numpy as np
from scipy import fft as sfft


def dbm_to_watt(power_dbm: float) -> float:
    return 10.0 ** ((power_dbm - 30.0) / 10.0)


def watt_to_dbm(power_w: float) -> float:
    return 10.0 * math.log10(power_w) + 30.0


def db_to_linear(value_db: float) -> float:
    return 10.0 ** (value_db / 10.0)


def linear_to_db(value: float) -> float:
    return 10.0 * math.log10(value)


def angular_frequencies(n: int, sample_rate_hz: float) -> np.ndarray:
    """DFT angular frequencies in rad/s, ordered like the DFT bins (0, +, ..., -)"""
    return 2.0 * np.pi * sfft.fftfreq(n, d=1.0 / sample_rate_hz)


def effective_length(z_km: float, alpha_np_per_km: float) -> float:
    """(1 - exp(-alpha z)) / alpha, with the lossless limit z"""
    if alpha_np_per_km * z_km < 1e-12:
        return z_km
    return -math.expm1(-alpha_np_per_km * z_km) / alpha_np_per_km


def centered_kernel(taps: np.ndarray, n: int) -> np.ndarray:
    """
    Place an odd- or even-length filter with its center at index 0 of a
    length-n circular buffer. Filters longer than n wrap around and add up.
    """
    taps = np.asarray(taps)
    kernel = np.zeros(n, dtype=np.result_type(taps.dtype, np.float64))
    positions = (np.arange(taps.size) - taps.size // 2) % n
    np.add.at(kernel, positions, taps)
    return kernel


def circular_convolve(x: np.ndarray, taps: np.ndarray, workers=None) -> np.ndarray:
    """Zero-delay circular convolution via the DFT"""
    kernel = centered_kernel(taps, x.size)
    return sfft.ifft(sfft.fft(x, workers=workers) * sfft.fft(kernel, workers=workers), workers=workers)


def apply_response(x: np.ndarray, response: np.ndarray, workers=None) -> np.ndarray:
    """Multiply the DFT of x bin-wise by response and return to time domain"""
    return sfft.ifft(sfft.fft(x, workers=workers) * response, workers=workers)


def substream(seed: int, *keys: int) -> np.random.Generator:
    """
    Independent random generator for a named position in the experiment,
    e.g. substream(root, STREAM_TRAIN, iteration, frame). Depends only on
    (seed, keys), so results never depend on scheduling.
    """
    sequence = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.default_rng(sequence)
