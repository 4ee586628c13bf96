"""
Receiver chain around the equalizer: brick-wall low-pass and sampling,
the linear (CDC) and frequency-domain DBP reference equalizers, matched
filtering, genie phase correction and the error metrics
"""

import dataclasses
import logging
import math
from typing import Iterable, Optional, Tuple

import numpy as np
from scipy import fft as sfft

from fiberdl import constants
from fiberdl.dsp import dsp_utils
from fiberdl.dsp.objects import ComplexSignal, FiberLink, Layout, Modulation, RxConfig, SignalSpec, StepSizing, SymbolFrame
from fiberdl.dsp.transmitter import rrc_spectrum
from fiberdl.errors import DecimationError
from fiberdl.ldbp.design import step_plan

logger = logging.getLogger("RXDSP")


def lowpass_downsample(y: ComplexSignal, cfg: RxConfig, baud_rate_hz: float) -> ComplexSignal:
    """Zero every DFT bin with |f| > bandwidth / 2, then keep every ratio-th sample"""
    target_rate = cfg.digital_oversampling * baud_rate_hz
    ratio = y.sample_rate_hz / target_rate
    step = int(round(ratio))
    if step < 1 or abs(ratio - step) > 1e-9 * ratio:
        raise DecimationError(f"sample rate {y.sample_rate_hz} Hz is not an integer multiple of {target_rate} Hz")
    if len(y) % step:
        raise DecimationError(f"{len(y)} samples cannot be decimated by {step}")

    samples = y.samples
    if cfg.lpf_bandwidth_hz < y.sample_rate_hz:
        spectrum = sfft.fft(samples)
        frequencies = sfft.fftfreq(len(y), d=1.0 / y.sample_rate_hz)
        spectrum[np.abs(frequencies) > cfg.lpf_bandwidth_hz / 2.0] = 0.0
        samples = sfft.ifft(spectrum)
    return ComplexSignal(samples[::step], target_rate)


def cd_compensate(r: ComplexSignal, link: FiberLink, workers=None) -> ComplexSignal:
    """Frequency-domain inversion of the whole link's chromatic dispersion"""
    omega = dsp_utils.angular_frequencies(len(r), r.sample_rate_hz)
    response = np.exp(-0.5j * link.beta2_s2_per_km * link.length_km * omega ** 2)
    return r.with_samples(dsp_utils.apply_response(r.samples, response, workers))


def reference_dbp(
    r: ComplexSignal,
    link: FiberLink,
    steps_per_span: int,
    sizing: StepSizing = StepSizing.LOGARITHMIC,
    spans: Optional[int] = None,
    loss_aware: bool = True,
    workers=None,
) -> ComplexSignal:
    """
    Non-learned DBP: per step, exact frequency-domain CD inversion followed by
    the negated Kerr rotation, using the same step plan as the LDBP model.
    spans overrides the number of spans to backpropagate (0 is the identity).
    """
    spans = link.num_spans if spans is None else spans
    if spans < 0:
        raise ValueError(f"span count must not be negative, got {spans}")
    if spans == 0:
        return r.with_samples(r.samples.copy())

    plan = step_plan(dataclasses.replace(link, num_spans=spans), steps_per_span, Layout.ASYMMETRIC, sizing)
    alpha = link.alpha_np_per_km if loss_aware else 0.0
    omega = dsp_utils.angular_frequencies(len(r), r.sample_rate_hz)
    samples = r.samples
    for delta, z_start in zip(plan.deltas_km, plan.z_start_km):
        response = np.exp(-0.5j * link.beta2_s2_per_km * delta * omega ** 2)
        samples = dsp_utils.apply_response(samples, response, workers)
        coefficient = link.gamma_per_w_km * math.exp(-alpha * z_start) * dsp_utils.effective_length(delta, alpha)
        samples = samples * np.exp(-1j * coefficient * np.abs(samples) ** 2)
    return r.with_samples(samples).ensure_finite("DBP output")


class MatchedFilter:
    """
    Circular RRC matched filter followed by symbol-rate sampling, normalized
    so that a noiseless back-to-back frame returns its unit-power symbols.
    Being linear with real taps, its adjoint is zero-stuffing followed by the
    same filtering.
    """

    def __init__(self, spec: SignalSpec, oversampling: int, power_w: float = 1.0, workers=None):
        if power_w <= 0:
            raise ValueError("launch power must be positive")
        self.spec = spec
        self.oversampling = oversampling
        self.power_w = power_w
        self.workers = workers
        self._spectra = {}

    def _spectrum(self, n):
        if n not in self._spectra:
            self._spectra[n] = rrc_spectrum(self.spec, self.oversampling, n) / math.sqrt(self.oversampling * self.power_w)
        return self._spectra[n]

    def _filter(self, samples):
        return sfft.ifft(sfft.fft(samples, workers=self.workers) * self._spectrum(samples.size), workers=self.workers)

    def apply(self, samples: np.ndarray) -> np.ndarray:
        if samples.size % self.oversampling:
            raise DecimationError(f"{samples.size} samples are not a whole number of symbols")
        return self._filter(np.asarray(samples, dtype=np.complex128))[:: self.oversampling]

    def adjoint(self, symbol_values: np.ndarray) -> np.ndarray:
        upsampled = np.zeros(symbol_values.size * self.oversampling, dtype=np.complex128)
        upsampled[:: self.oversampling] = symbol_values
        # RRC taps are even, so the transposed filter is the filter itself
        return self._filter(upsampled)


def matched_filter_downsample(
    u: ComplexSignal,
    spec: SignalSpec,
    power_w: float = 1.0,
    modulation: Modulation = Modulation.GAUSSIAN_IID,
) -> SymbolFrame:
    oversampling = int(round(u.sample_rate_hz / spec.baud_rate_hz))
    symbols = MatchedFilter(spec, oversampling, power_w).apply(u.samples)
    return SymbolFrame(symbols, modulation, dsp_utils.watt_to_dbm(power_w))


def _values(frame):
    return frame.symbols if isinstance(frame, SymbolFrame) else np.asarray(frame)


def phase_correct(s_tilde: SymbolFrame, s_ref: SymbolFrame) -> Tuple[SymbolFrame, float]:
    """Rotate by the genie phase arg(s^H s_tilde)"""
    correlation = np.vdot(_values(s_ref), _values(s_tilde))
    phase = float(np.angle(correlation)) if correlation != 0 else 0.0
    return s_tilde.with_symbols(_values(s_tilde) * np.exp(-1j * phase)), phase


def error_energy(s_hat, s) -> float:
    return float(np.sum(np.abs(_values(s_hat) - _values(s)) ** 2))


def mse(s_hat, s) -> float:
    values = _values(s)
    return error_energy(s_hat, values) / values.size


def effective_snr(frames: Iterable[Tuple[SymbolFrame, SymbolFrame]]) -> float:
    """
    N_sym times the mean inverse per-frame error energy, in dB. Frames with
    (almost) no error report SNR_CAP_DB.
    """
    frames = list(frames)
    if not frames:
        raise ValueError("no frames to evaluate")
    count = _values(frames[0][1]).size
    energies = np.array([error_energy(s_hat, s) for s_hat, s in frames])
    if np.any(energies < constants.ERROR_ENERGY_FLOOR * count):
        return constants.SNR_CAP_DB
    return min(constants.SNR_CAP_DB, dsp_utils.linear_to_db(count * float(np.mean(1.0 / energies))))
