"""
Shared fixtures: a short single-span link, a small SignalSpec
and helpers for building random LDBP models.
"""

import numpy as np
import pytest

from fiberdl.dsp.objects import (
    ComplexSignal,
    FiberLink,
    Frame,
    Layout,
    RxConfig,
    SignalSpec,
    SymbolFrame,
)
from fiberdl.dsp.system import FrameSimulator
from fiberdl.ldbp.model import Layer, LdbpModel, LinearStep, NonlinearKind, NonlinearStep

BAUD = 10.7e9


@pytest.fixture
def spec():
    """2x digital / 4x analog oversampling with a short pulse"""
    return SignalSpec(BAUD, rolloff=0.1, analog_oversampling=4, digital_oversampling=2, rrc_span_symbols=8)


@pytest.fixture
def exact_pulse_spec():
    """Same rates with the untruncated periodic pulse"""
    return SignalSpec(BAUD, rolloff=0.1, analog_oversampling=4, digital_oversampling=2, rrc_span_symbols=0)


@pytest.fixture
def link():
    return FiberLink(span_km=80.0, num_spans=1)


@pytest.fixture
def linear_link():
    """Dispersive, lossy, linear"""
    return FiberLink(span_km=80.0, num_spans=2, gamma_per_w_km=0.0)


@pytest.fixture
def simulator(spec, link):
    return FrameSimulator(
        link=link,
        spec=spec,
        rx=RxConfig.from_spec(spec),
        num_symbols=32,
        steps_per_span=4,
    )


def random_model(rng, half_lengths, layout=Layout.ASYMMETRIC, essm=None, shared_eta=False, sample_rate_hz=2 * BAUD):
    """
    Random model with center taps near one. essm gives per-layer eta half
    lengths (None for standard steps). The symmetric layout gets an identity
    trailing nonlinear step.
    """
    layers = []
    count = len(half_lengths)
    for index, half_length in enumerate(half_lengths):
        taps = 0.3 * (rng.standard_normal(half_length + 1) + 1j * rng.standard_normal(half_length + 1))
        taps[0] += 1.0
        last = index == count - 1
        delta = 0.0 if (last and layout == Layout.SYMMETRIC_PLUS_HALF) else 1.0
        if essm is None or essm[index] is None:
            nonlinear = NonlinearStep(delta_km=delta, gamma_per_w_km=0.3)
        else:
            eta = 0.2 * rng.standard_normal(essm[index] + 1)
            eta[0] = 1.0
            nonlinear = NonlinearStep(NonlinearKind.ESSM, delta_km=delta, gamma_per_w_km=0.3, eta_half_taps=eta)
        layers.append(Layer(LinearStep(taps), nonlinear))
    return LdbpModel(layers, layout, sample_rate_hz, shared_eta=shared_eta)


def random_frame(rng, num_symbols, oversampling=2, power_dbm=30.0):
    """Unit-power received samples paired with unrelated unit-power symbols"""
    n = num_symbols * oversampling
    received = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2.0)
    symbols = (rng.standard_normal(num_symbols) + 1j * rng.standard_normal(num_symbols)) / np.sqrt(2.0)
    return Frame(ComplexSignal(received, oversampling * BAUD), SymbolFrame(symbols, power_dbm=power_dbm))


def band_limited(rng, n, fraction):
    """Complex white noise with every DFT bin above fraction * f_s removed"""
    spectrum = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    spectrum[np.abs(np.fft.fftfreq(n)) >= fraction] = 0.0
    return np.fft.ifft(spectrum)
