"""
Symbol generation, root-raised-cosine pulse shaping and WDM multiplexing.
Everything that produces the transmitted waveform.
"""

import logging
import math
from typing import List

import numpy as np
from scipy import fft as sfft

from fiberdl.dsp import dsp_utils
from fiberdl.dsp.objects import ComplexSignal, Modulation, SignalSpec, SymbolFrame
from fiberdl.errors import SpectralOverflow

logger = logging.getLogger("TX")

QAM16_LEVELS = np.array([-3.0, -1.0, 1.0, 3.0]) / math.sqrt(10.0)


def generate_symbols(count: int, modulation: Modulation, seed: int, power_dbm: float = 0.0, rng=None) -> SymbolFrame:
    """
    i.i.d. unit-power symbols. Gaussian symbols are circularly symmetric,
    16-QAM symbols are uniform over the grid with levels {+-1, +-3}/sqrt(10).
    """
    if count < 1:
        raise ValueError(f"symbol count must be at least 1, got {count}")
    if rng is None:
        rng = np.random.default_rng(seed)
    if modulation == Modulation.GAUSSIAN_IID:
        symbols = (rng.standard_normal(count) + 1j * rng.standard_normal(count)) / math.sqrt(2.0)
    elif modulation == Modulation.QAM16:
        indices = rng.integers(0, 4, size=(2, count))
        symbols = QAM16_LEVELS[indices[0]] + 1j * QAM16_LEVELS[indices[1]]
    else:
        raise ValueError(f"unsupported modulation {modulation}")
    return SymbolFrame(symbols, modulation, power_dbm, seed)


def rrc_taps(spec: SignalSpec, oversampling: int) -> np.ndarray:
    """
    Unit-energy root-raised-cosine taps of length span * oversampling + 1.
    The removable singularities at t = 0 and t = +-1/(4 beta) use their limits.
    """
    if oversampling < 1:
        raise ValueError("oversampling must be at least 1")
    if spec.rrc_span_symbols < 1:
        raise ValueError("a truncated pulse needs rrc_span_symbols of at least 1")
    beta = spec.rolloff
    length = spec.rrc_span_symbols * oversampling + 1
    t = (np.arange(length) - (length - 1) / 2.0) / oversampling

    if beta == 0.0:
        taps = np.sinc(t)
    else:
        taps = np.empty(length)
        eps = math.sqrt(np.finfo(float).eps)
        at_zero = np.abs(t) < eps
        at_edge = np.abs(np.abs(4.0 * beta * t) - 1.0) < eps
        regular = ~(at_zero | at_edge)

        taps[at_zero] = 1.0 - beta + 4.0 * beta / math.pi
        taps[at_edge] = beta / math.sqrt(2.0) * (
            (1.0 + 2.0 / math.pi) * math.sin(math.pi / (4.0 * beta))
            + (1.0 - 2.0 / math.pi) * math.cos(math.pi / (4.0 * beta))
        )
        tr = t[regular]
        taps[regular] = (
            np.sin(math.pi * tr * (1.0 - beta)) + 4.0 * beta * tr * np.cos(math.pi * tr * (1.0 + beta))
        ) / (math.pi * tr * (1.0 - (4.0 * beta * tr) ** 2))

    return taps / math.sqrt(np.sum(taps ** 2))


def raised_cosine(nu: np.ndarray, rolloff: float) -> np.ndarray:
    """Raised-cosine spectrum over frequency in units of the baud rate, 1 at DC"""
    magnitude = np.abs(nu)
    inner, outer = (1.0 - rolloff) / 2.0, (1.0 + rolloff) / 2.0
    if rolloff == 0.0:
        return np.where(magnitude < 0.5, 1.0, np.where(np.isclose(magnitude, 0.5), 0.5, 0.0))
    edge = 0.5 * (1.0 + np.cos(np.pi / rolloff * (magnitude - inner)))
    return np.where(magnitude <= inner, 1.0, np.where(magnitude < outer, edge, 0.0))


def rrc_spectrum(spec: SignalSpec, oversampling: int, n: int) -> np.ndarray:
    """
    DFT of the unit-energy shaping pulse on an n-sample periodic frame.
    With rrc_span_symbols = 0 this is the exact root-raised-cosine, which is
    free of intersymbol interference on the frame; otherwise the DFT of the
    truncated rrc_taps.
    """
    if n % oversampling:
        raise ValueError(f"{n} samples are not a whole number of symbols at oversampling {oversampling}")
    if spec.rrc_span_symbols:
        return sfft.fft(dsp_utils.centered_kernel(rrc_taps(spec, oversampling), n))
    nu = sfft.fftfreq(n, d=1.0 / oversampling)
    # the aliases of the raised cosine sum to one, so the taps carry unit energy
    return math.sqrt(oversampling) * np.sqrt(raised_cosine(nu, spec.rolloff))


def modulate(frame: SymbolFrame, spec: SignalSpec, oversampling: int) -> ComplexSignal:
    """
    Periodic (circular) pulse shaping of the frame at the given oversampling.
    The pulse is scaled by sqrt(oversampling) so the mean power equals P.
    """
    if oversampling not in (spec.analog_oversampling, spec.digital_oversampling):
        raise ValueError(
            f"oversampling {oversampling} is neither the analog ({spec.analog_oversampling}) "
            f"nor the digital ({spec.digital_oversampling}) rate"
        )
    upsampled = np.zeros(frame.count * oversampling, dtype=np.complex128)
    upsampled[::oversampling] = frame.symbols
    amplitude = math.sqrt(dsp_utils.dbm_to_watt(frame.power_dbm) * oversampling)
    shaped = dsp_utils.apply_response(upsampled, rrc_spectrum(spec, oversampling, upsampled.size))
    return ComplexSignal(amplitude * shaped, oversampling * spec.baud_rate_hz)


def wdm_multiplex(channels: List[ComplexSignal], spacing_hz: float, channel_bandwidth_hz: float = 0.0) -> ComplexSignal:
    """
    Frequency-shift channel c by (c - center) * spacing and sum. Shifts are
    snapped to the DFT grid of the frame so the composite stays periodic.
    """
    if not channels:
        raise ValueError("no channels to multiplex")
    if len(channels) % 2 == 0:
        raise ValueError(f"channel count must be odd, got {len(channels)}")
    n = len(channels[0])
    sample_rate = channels[0].sample_rate_hz
    for ch in channels:
        if len(ch) != n or ch.sample_rate_hz != sample_rate:
            raise ValueError("all channels need the same length and sample rate")

    center = len(channels) // 2
    bin_hz = sample_rate / n
    t = np.arange(n) / sample_rate
    composite = np.zeros(n, dtype=np.complex128)
    for index, ch in enumerate(channels):
        offset_hz = (index - center) * spacing_hz
        if abs(offset_hz) + channel_bandwidth_hz / 2.0 >= sample_rate / 2.0:
            raise SpectralOverflow(
                f"channel {index} at {offset_hz / 1e9:.2f} GHz with bandwidth "
                f"{channel_bandwidth_hz / 1e9:.2f} GHz exceeds the simulation band "
                f"+-{sample_rate / 2e9:.2f} GHz",
                channel=index,
            )
        snapped_hz = round(offset_hz / bin_hz) * bin_hz
        if abs(snapped_hz - offset_hz) > 1e-6 * bin_hz:
            logger.debug(f"Channel {index} offset snapped from {offset_hz} Hz to {snapped_hz} Hz")
        if snapped_hz == 0.0:
            composite += ch.samples
        else:
            composite += ch.samples * np.exp(2j * np.pi * snapped_hz * t)
    return ComplexSignal(composite, sample_rate)
