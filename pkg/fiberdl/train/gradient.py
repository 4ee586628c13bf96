"""
Reverse-mode gradient of the phase-corrected symbol MSE through the matched
filter and every LDBP layer.

Complex signals are differentiated with the conjugate-aware chain rule:
for a real loss L and complex z, G_z = dL/dRe(z) + j dL/dIm(z), so that
dL = Re(sum conj(G_z) dz).
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import fft as sfft

from fiberdl.dsp.objects import Frame, SignalSpec
from fiberdl.dsp.rxdsp import MatchedFilter
from fiberdl.dsp import dsp_utils
from fiberdl.errors import FilterTooLong, NumericalError
from fiberdl.ldbp.model import LdbpModel, NonlinearKind, fold_symmetric


@dataclass
class LayerTrace:
    """Activations of one layer: input w, filtered v, |v|^2 and output"""
    w: np.ndarray
    v: np.ndarray
    power: np.ndarray
    phase: np.ndarray
    out: np.ndarray


def trace(model: LdbpModel, samples: np.ndarray) -> List[LayerTrace]:
    traces = []
    x = np.asarray(samples, dtype=np.complex128)
    for index, layer in enumerate(model.layers):
        if 2 * layer.linear.half_length + 1 > x.size:
            raise FilterTooLong(f"filter of layer {index} is longer than the block")
        v = fold_symmetric(x, layer.linear.half_taps)
        power = np.abs(v) ** 2
        nonlinear = layer.nonlinear
        if nonlinear.is_identity:
            phase = np.zeros(x.size)
        else:
            phase = nonlinear.coefficient * nonlinear.filtered_power(v)
        out = v * np.exp(-1j * phase)
        if not np.all(np.isfinite(out)):
            raise NumericalError(f"non-finite activations in layer {index}", layer=index)
        traces.append(LayerTrace(x, v, power, phase, out))
        x = out
    return traces


def _correlate(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """c[k] = sum_j conj(a[j - k]) b[j], circular"""
    return sfft.ifft(np.conj(sfft.fft(a)) * sfft.fft(b))


def _fold_lags(correlation: np.ndarray, half_length: int) -> np.ndarray:
    """Combine lags +k and -k of a circular correlation into half-tap order"""
    n = correlation.size
    k = np.arange(1, half_length + 1)
    return np.concatenate([correlation[:1], correlation[k] + correlation[(-k) % n]])


def symbol_loss(s_tilde: np.ndarray, symbols: np.ndarray) -> Tuple[float, complex]:
    """Phase-corrected MSE and the unit rotation exp(j phi) that achieves it"""
    correlation = np.vdot(symbols, s_tilde)
    rotation = correlation / abs(correlation) if correlation != 0 else 1.0 + 0j
    error = s_tilde * np.conj(rotation) - symbols
    return float(np.vdot(error, error).real) / symbols.size, rotation


def backward(model: LdbpModel, traces: List[LayerTrace], g_out: np.ndarray):
    """
    Propagate G through the layers in reverse. Returns per layer the complex
    half-tap gradient (G_re + j G_im) and the eta gradient (or None).
    """
    grads = [None] * len(model.layers)
    g = g_out
    for index in reversed(range(len(model.layers))):
        layer, t = model.layers[index], traces[index]
        nonlinear = layer.nonlinear
        eta_grad = None
        if nonlinear.is_identity:
            g_v = g
            if nonlinear.kind == NonlinearKind.ESSM:
                eta_grad = np.zeros(nonlinear.eta_half_taps.size)
        else:
            c = nonlinear.coefficient
            a = np.imag(np.conj(g) * t.out)
            if nonlinear.kind == NonlinearKind.ESSM:
                b = fold_symmetric(a, nonlinear.eta_half_taps)
                eta_grad = c * _fold_lags(_correlate(t.power, a).real, nonlinear.eta_half_taps.size - 1)
            else:
                b = a
            g_v = np.exp(1j * t.phase) * g + 2.0 * c * b * t.v

        linear = layer.linear
        taps_grad = _fold_lags(_correlate(t.w, g_v), linear.half_length)
        taps_grad[~linear.mask] = 0.0
        grads[index] = (taps_grad, eta_grad)
        g = fold_symmetric(g_v, np.conj(linear.half_taps))
        if not np.all(np.isfinite(g)):
            raise NumericalError(f"non-finite gradient in layer {index}", layer=index)
    return grads


def flatten(model: LdbpModel, grads) -> np.ndarray:
    """Lay per-layer gradients out in the order of model.parameters()"""
    parts = []
    for kind, index, size in model.parameter_blocks():
        if kind == "re":
            parts.append(grads[index][0].real)
        elif kind == "im":
            parts.append(grads[index][0].imag)
        elif index is None:
            shared = np.zeros(size)
            for layer_grads in grads:
                if layer_grads[1] is not None:
                    shared += layer_grads[1]
            parts.append(shared)
        else:
            parts.append(grads[index][1])
    return np.concatenate(parts)


def _oversampling(model: LdbpModel, spec: SignalSpec) -> int:
    return int(round(model.sample_rate_hz / spec.baud_rate_hz))


def frame_loss(model: LdbpModel, frame: Frame, spec: SignalSpec) -> float:
    matched = MatchedFilter(spec, _oversampling(model, spec), dsp_utils.dbm_to_watt(frame.power_dbm))
    out = trace(model, frame.received.samples)[-1].out
    return symbol_loss(matched.apply(out), frame.symbols.symbols)[0]


def frame_gradient(
    model: LdbpModel, frame: Frame, spec: SignalSpec, matched: Optional[MatchedFilter] = None
) -> Tuple[float, np.ndarray]:
    if matched is None:
        matched = MatchedFilter(spec, _oversampling(model, spec), dsp_utils.dbm_to_watt(frame.power_dbm))
    symbols = frame.symbols.symbols
    traces = trace(model, frame.received.samples)
    s_tilde = matched.apply(traces[-1].out)
    loss, rotation = symbol_loss(s_tilde, symbols)

    g_symbols = 2.0 * (s_tilde - rotation * symbols) / symbols.size
    grads = backward(model, traces, matched.adjoint(g_symbols))
    return loss, flatten(model, grads)


def gradient(model: LdbpModel, batch: Sequence[Frame], spec: SignalSpec, executor=None) -> Tuple[float, np.ndarray]:
    """
    Batch-mean loss and its gradient with respect to model.parameters().
    Per-frame work may run on an executor; the reduction is in frame order.
    """
    if not batch:
        raise ValueError("empty batch")
    work = lambda frame: frame_gradient(model, frame, spec)
    results = list(executor.map(work, batch)) if executor is not None else [work(frame) for frame in batch]

    total_loss = 0.0
    total_grad = np.zeros(model.parameter_count)
    for loss, grad in results:
        total_loss += loss
        total_grad += grad
    return total_loss / len(batch), total_grad / len(batch)
