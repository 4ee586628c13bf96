"""
Forward fiber propagation: asymmetric split-step solution of the NLSE with
loss, and lumped EDFA amplification with ASE noise
"""

import logging
import math

import numpy as np
from scipy import fft as sfft

from fiberdl import constants
from fiberdl.dsp import dsp_utils
from fiberdl.dsp.objects import ComplexSignal, FiberLink, StepSizing
from fiberdl.ldbp.design import log_step_sizes

logger = logging.getLogger("CHANNEL")


def linear_response(omega: np.ndarray, link: FiberLink, z_km: float, include_loss: bool = True) -> np.ndarray:
    """Per-bin factor exp(-alpha z / 2) exp(j beta2 omega^2 z / 2)"""
    response = np.exp(0.5j * link.beta2_s2_per_km * z_km * omega ** 2)
    if include_loss:
        response *= math.exp(-0.5 * link.alpha_np_per_km * z_km)
    return response


def cd_loss_step(x: ComplexSignal, link: FiberLink, z_km: float, include_loss: bool = True) -> ComplexSignal:
    if z_km < 0:
        raise ValueError(f"step length must not be negative, got {z_km}")
    omega = dsp_utils.angular_frequencies(len(x), x.sample_rate_hz)
    return x.with_samples(dsp_utils.apply_response(x.samples, linear_response(omega, link, z_km, include_loss)))


def kerr_phase_samples(samples: np.ndarray, coefficient: float) -> np.ndarray:
    return samples * np.exp(1j * coefficient * np.abs(samples) ** 2)


def kerr_step(x: ComplexSignal, link: FiberLink, z_km: float) -> ComplexSignal:
    """Self-phase modulation over z with effective length L_eff(z)"""
    if z_km < 0:
        raise ValueError(f"step length must not be negative, got {z_km}")
    coefficient = link.gamma_per_w_km * dsp_utils.effective_length(z_km, link.alpha_np_per_km)
    return x.with_samples(kerr_phase_samples(x.samples, coefficient))


def forward_step_sizes(link: FiberLink, steps: int, sizing: StepSizing) -> np.ndarray:
    """Step lengths of one span in propagation order"""
    if steps < 1:
        raise ValueError(f"steps per span must be at least 1, got {steps}")
    if sizing == StepSizing.LOGARITHMIC:
        # log_step_sizes is in backpropagation order, largest first
        return log_step_sizes(link.span_km, steps, link.alpha_db_per_km)[::-1]
    return np.full(steps, link.span_km / steps)


def span_forward(x: ComplexSignal, link: FiberLink, steps: int, sizing: StepSizing = StepSizing.LOGARITHMIC) -> ComplexSignal:
    """
    One span of the asymmetric SSM, u_i = sigma(A u_{i-1}) with loss.
    Logarithmic steps run fine-to-coarse, tracking the attenuation.
    """
    deltas = forward_step_sizes(link, steps, sizing)
    omega = dsp_utils.angular_frequencies(len(x), x.sample_rate_hz)
    spectrum_cache = {}
    samples = x.samples
    for delta in deltas:
        key = round(float(delta), 12)
        if key not in spectrum_cache:
            spectrum_cache[key] = (
                linear_response(omega, link, delta, include_loss=True),
                link.gamma_per_w_km * dsp_utils.effective_length(delta, link.alpha_np_per_km),
            )
        response, coefficient = spectrum_cache[key]
        samples = sfft.ifft(sfft.fft(samples) * response)
        samples = kerr_phase_samples(samples, coefficient)
    return x.with_samples(samples)


def spontaneous_emission_factor(link: FiberLink) -> float:
    loss = link.alpha_np_per_km * link.span_km
    return dsp_utils.db_to_linear(link.noise_figure_db) / (2.0 * (1.0 - math.exp(-loss)))


def noise_psd(link: FiberLink) -> float:
    """ASE power spectral density of one EDFA in W/Hz"""
    loss = link.alpha_np_per_km * link.span_km
    return math.expm1(loss) * constants.PLANCK * link.carrier_hz * spontaneous_emission_factor(link)


def edfa(x: ComplexSignal, link: FiberLink, rng_seed: int, noiseless: bool = False, rng=None) -> ComplexSignal:
    """
    Restore the span loss and add white circularly-symmetric Gaussian noise
    whose total power over the simulation bandwidth is PSD * f_s.
    """
    amplified = x.samples * link.span_gain
    if noiseless:
        return x.with_samples(amplified)
    if rng is None:
        rng = np.random.default_rng(rng_seed)
    variance = noise_psd(link) * x.sample_rate_hz
    n = len(x)
    noise = math.sqrt(variance / 2.0) * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    return x.with_samples(amplified + noise)


def propagate_link(
    x: ComplexSignal,
    link: FiberLink,
    steps_per_span: int,
    rng_seed: int,
    noiseless: bool = False,
    sizing: StepSizing = StepSizing.LOGARITHMIC,
    stream: tuple = (),
) -> ComplexSignal:
    """
    N_sp repetitions of span propagation followed by amplification. Span k
    draws its noise from the substream (rng_seed, *stream, k).
    """
    signal = x
    for span in range(link.num_spans):
        signal = span_forward(signal, link, steps_per_span, sizing)
        rng = None if noiseless else dsp_utils.substream(rng_seed, *stream, span)
        signal = edfa(signal, link, rng_seed, noiseless=noiseless, rng=rng)
        logger.debug(f"Span {span + 1}/{link.num_spans} done, power {signal.mean_power:.3e} W")
    return signal.ensure_finite("channel output")
