"""
Tests for symbol generation, pulse shaping and WDM multiplexing.
"""

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from fiberdl.dsp import rxdsp
from fiberdl.dsp.objects import ComplexSignal, Modulation, SignalSpec
from fiberdl.dsp.transmitter import generate_symbols, modulate, rrc_spectrum, rrc_taps, wdm_multiplex
from fiberdl.errors import SpectralOverflow


class TestSymbols:
    """Unit-power i.i.d. symbol frames"""

    def test_gaussian_unit_power(self):
        frame = generate_symbols(4096, Modulation.GAUSSIAN_IID, seed=1)
        assert frame.count == 4096
        assert abs(np.mean(np.abs(frame.symbols) ** 2) - 1.0) < 0.1

    def test_qam16_grid_and_power(self):
        frame = generate_symbols(4096, Modulation.QAM16, seed=2)
        levels = np.round(frame.symbols.real * np.sqrt(10.0))
        assert set(levels.tolist()) <= {-3.0, -1.0, 1.0, 3.0}
        assert abs(np.mean(np.abs(frame.symbols) ** 2) - 1.0) < 0.05

    def test_same_seed_same_symbols(self):
        a = generate_symbols(64, Modulation.GAUSSIAN_IID, seed=7)
        b = generate_symbols(64, Modulation.GAUSSIAN_IID, seed=7)
        assert_array_equal(a.symbols, b.symbols)

    def test_rejects_empty_frame(self):
        with pytest.raises(ValueError):
            generate_symbols(0, Modulation.GAUSSIAN_IID, seed=0)


class TestRrcTaps:
    """Root-raised-cosine pulse"""

    def test_length_energy_symmetry(self, spec):
        taps = rrc_taps(spec, 4)
        assert taps.size == spec.rrc_span_symbols * 4 + 1
        assert_allclose(np.sum(taps ** 2), 1.0, rtol=1e-12)
        assert_allclose(taps, taps[::-1], atol=1e-15)

    def test_raised_cosine_is_nearly_nyquist(self):
        taps = rrc_taps(SignalSpec(10.7e9, rolloff=0.1, rrc_span_symbols=32), 2)
        pulse = np.convolve(taps, taps)
        center = pulse.size // 2
        at_symbols = pulse[center % 2::2]
        peak_index = center // 2
        assert_allclose(at_symbols[peak_index], 1.0, atol=1e-3)
        others = np.delete(at_symbols, peak_index)
        assert np.max(np.abs(others)) < 1e-2

    def test_zero_rolloff_is_sinc(self, spec):
        spec.rolloff = 0.0
        taps = rrc_taps(spec, 2)
        assert np.all(np.isfinite(taps))
        assert_allclose(np.sum(taps ** 2), 1.0, rtol=1e-12)

    def test_untruncated_pulse_has_no_taps(self, exact_pulse_spec):
        with pytest.raises(ValueError):
            rrc_taps(exact_pulse_spec, 2)


class TestRrcSpectrum:
    """Pulse spectrum on a periodic frame"""

    @pytest.mark.parametrize("rolloff", [0.0, 0.1, 1.0])
    def test_unit_energy_and_exact_nyquist(self, exact_pulse_spec, rolloff):
        exact_pulse_spec.rolloff = rolloff
        spectrum = rrc_spectrum(exact_pulse_spec, 2, 128)
        assert_allclose(np.mean(np.abs(spectrum) ** 2), 1.0, rtol=1e-12)
        raised = np.fft.ifft(np.abs(spectrum) ** 2).real
        expected = np.zeros(64)
        expected[0] = 1.0
        assert_allclose(raised[::2], expected, atol=1e-13)

    def test_real_and_even(self, exact_pulse_spec):
        taps = np.fft.ifft(rrc_spectrum(exact_pulse_spec, 4, 256))
        assert_allclose(taps.imag, 0.0, atol=1e-15)
        assert_allclose(taps[1:], taps[1:][::-1], atol=1e-15)

    def test_truncated_pulse_uses_taps(self, spec):
        spectrum = rrc_spectrum(spec, 2, 64)
        kernel = np.zeros(64)
        taps = rrc_taps(spec, 2)
        half = taps.size // 2
        kernel[:half + 1] = taps[half:]
        kernel[-half:] = taps[:half]
        assert_allclose(spectrum, np.fft.fft(kernel), atol=1e-12)

    def test_partial_symbol_rejected(self, exact_pulse_spec):
        with pytest.raises(ValueError):
            rrc_spectrum(exact_pulse_spec, 2, 63)


class TestModulate:
    """Pulse shaping at the analog and digital rates"""

    def test_mean_power_matches_launch_power(self, spec):
        frame = generate_symbols(4096, Modulation.GAUSSIAN_IID, seed=3, power_dbm=3.0)
        x = modulate(frame, spec, spec.analog_oversampling)
        assert x.sample_rate_hz == spec.analog_rate_hz
        assert len(x) == 4096 * spec.analog_oversampling
        assert_allclose(x.mean_power, 10 ** (0.3) * 1e-3, rtol=0.1)

    def test_rejects_other_oversampling(self, spec):
        frame = generate_symbols(16, Modulation.GAUSSIAN_IID, seed=0)
        with pytest.raises(ValueError):
            modulate(frame, spec, 3)

    def test_matched_filter_recovers_symbols(self, exact_pulse_spec):
        frame = generate_symbols(256, Modulation.GAUSSIAN_IID, seed=4, power_dbm=30.0)
        x = modulate(frame, exact_pulse_spec, exact_pulse_spec.digital_oversampling)
        recovered = rxdsp.matched_filter_downsample(x, exact_pulse_spec, power_w=1.0)
        assert_allclose(recovered.symbols, frame.symbols, atol=1e-10)
        assert rxdsp.mse(recovered, frame) < 1e-20


class TestWdmMultiplex:
    """Frequency-shifted composite of odd channel counts"""

    def _channels(self, count, n=256, bins=16, seed=0):
        rng = np.random.default_rng(seed)
        channels = []
        for _ in range(count):
            spectrum = np.zeros(n, dtype=np.complex128)
            spectrum[:bins] = rng.standard_normal(bins) + 1j * rng.standard_normal(bins)
            spectrum[-bins + 1:] = rng.standard_normal(bins - 1) + 1j * rng.standard_normal(bins - 1)
            channels.append(ComplexSignal(np.fft.ifft(spectrum), 256e9))
        return channels

    def test_single_channel_passes_through(self):
        channels = self._channels(1)
        composite = wdm_multiplex(channels, 0.0)
        assert_array_equal(composite.samples, channels[0].samples)

    def test_disjoint_channels_add_energy(self):
        # 1 GHz bins, 31 GHz wide channels, 40 GHz apart
        channels = self._channels(3)
        composite = wdm_multiplex(channels, 40e9, 31e9)
        assert_allclose(composite.energy, sum(ch.energy for ch in channels), rtol=1e-9)

    def test_even_channel_count_rejected(self):
        with pytest.raises(ValueError):
            wdm_multiplex(self._channels(2), 40e9)

    def test_overflow_names_first_channel(self):
        with pytest.raises(SpectralOverflow) as info:
            wdm_multiplex(self._channels(5), 60e9, 31e9)
        assert info.value.channel == 0
