"""
The parameterized split-step model: trainable symmetric FIR linear steps
alternated with (optionally filtered) Kerr phase rotations that invert the
fiber nonlinearity.
"""

import copy
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import List, NamedTuple

import numpy as np

from fiberdl.dsp import dsp_utils
from fiberdl.dsp.objects import ComplexSignal, Layout
from fiberdl.errors import FilterTooLong, NumericalError

logger = logging.getLogger("LDBP")


class NonlinearKind(Enum):
    STANDARD = "standard"
    ESSM = "essm"


def fold_symmetric(x: np.ndarray, half_taps: np.ndarray) -> np.ndarray:
    """Folded direct-form circular filtering with a symmetric filter"""
    y = half_taps[0] * x
    for k in range(1, half_taps.size):
        if half_taps[k] != 0:
            y = y + half_taps[k] * (np.roll(x, k) + np.roll(x, -k))
    return y


def _symmetric_response(half_taps: np.ndarray, omega: np.ndarray) -> np.ndarray:
    """DTFT of the symmetric filter: h_0 + 2 sum_k h_k cos(k omega)"""
    k = np.arange(1, half_taps.size)
    return half_taps[0] + 2.0 * np.cos(np.outer(omega, k)) @ half_taps[1:]


@dataclass
class LinearStep:
    half_taps: np.ndarray
    mask: np.ndarray = None
    delta_km: float = 0.0  # dispersion length the filter was designed to invert

    def __post_init__(self):
        self.half_taps = np.array(self.half_taps, dtype=np.complex128)
        if self.half_taps.ndim != 1 or self.half_taps.size < 1:
            raise ValueError("a linear step needs at least the center tap")
        if self.mask is None:
            self.mask = np.ones(self.half_taps.size, dtype=bool)
        self.mask = np.array(self.mask, dtype=bool)
        if self.mask.shape != self.half_taps.shape:
            raise ValueError("mask and half taps differ in shape")
        self.half_taps[~self.mask] = 0.0

    @classmethod
    def unit(cls, half_length: int, delta_km: float = 0.0):
        taps = np.zeros(half_length + 1, dtype=np.complex128)
        taps[0] = 1.0
        return cls(taps, delta_km=delta_km)

    @classmethod
    def from_full(cls, taps, mask=None, delta_km=0.0):
        taps = np.asarray(taps, dtype=np.complex128)
        if taps.size % 2 == 0:
            raise ValueError("a symmetric filter has odd length")
        center = taps.size // 2
        if not np.allclose(taps[:center][::-1], taps[center + 1:], rtol=0, atol=1e-12 * max(1.0, np.abs(taps).max())):
            raise ValueError("filter taps are not symmetric")
        return cls(taps[center:], mask, delta_km)

    @property
    def half_length(self):
        """K of the stored filter, T = 2K + 1"""
        return self.half_taps.size - 1

    @property
    def active_half_length(self):
        active = np.flatnonzero(self.mask)
        return int(active[-1]) if active.size else 0

    @property
    def length(self):
        return 2 * self.active_half_length + 1

    def full_taps(self) -> np.ndarray:
        return np.concatenate([self.half_taps[:0:-1], self.half_taps])

    def response(self, omega: np.ndarray) -> np.ndarray:
        return _symmetric_response(self.half_taps, omega)

    def scaled(self, factor):
        return LinearStep(self.half_taps * factor, self.mask.copy(), self.delta_km)


@dataclass
class NonlinearStep:
    kind: NonlinearKind = NonlinearKind.STANDARD
    delta_km: float = 0.0
    gamma_per_w_km: float = 0.0
    alpha_np_per_km: float = 0.0
    attenuation: float = 1.0
    scaling: float = 1.0
    eta_half_taps: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        if self.delta_km < 0:
            raise ValueError(f"nonlinear step length must not be negative, got {self.delta_km}")
        self.eta_half_taps = np.array(self.eta_half_taps, dtype=np.float64)
        if self.kind == NonlinearKind.STANDARD and self.eta_half_taps.size:
            raise ValueError("standard nonlinear steps carry no eta filter")
        if self.kind == NonlinearKind.ESSM and not self.eta_half_taps.size:
            self.eta_half_taps = np.ones(1)

    @property
    def coefficient(self):
        """Phase per watt: scaling * gamma * attenuation * L_eff(delta)"""
        if self.delta_km == 0.0:
            return 0.0
        length = dsp_utils.effective_length(self.delta_km, self.alpha_np_per_km)
        return self.scaling * self.gamma_per_w_km * self.attenuation * length

    @property
    def is_identity(self):
        return self.coefficient == 0.0

    def full_eta(self):
        return np.concatenate([self.eta_half_taps[:0:-1], self.eta_half_taps])

    def filtered_power(self, samples: np.ndarray) -> np.ndarray:
        power = np.abs(samples) ** 2
        if self.kind == NonlinearKind.STANDARD:
            return power
        return fold_symmetric(power, self.eta_half_taps)


@dataclass
class Layer:
    linear: LinearStep
    nonlinear: NonlinearStep


class OverallResponse(NamedTuple):
    frequencies: np.ndarray  # f / f_s in [-0.5, 0.5)
    response: np.ndarray
    total_length: int


@dataclass
class LdbpModel:
    layers: List[Layer]
    layout: Layout
    sample_rate_hz: float
    shared_eta: bool = False

    def __post_init__(self):
        if not self.layers:
            raise ValueError("a model needs at least one layer")
        if self.layout == Layout.SYMMETRIC_PLUS_HALF and not self.layers[-1].nonlinear.is_identity:
            raise ValueError("the last step of a symmetric model must be a linear half-step")
        if self.shared_eta:
            sizes = {layer.nonlinear.eta_half_taps.size for layer in self.essm_layers()}
            if len(sizes) > 1:
                raise ValueError("a shared eta filter needs equal lengths in every step")

    def __len__(self):
        return len(self.layers)

    def copy(self):
        return copy.deepcopy(self)

    def essm_layers(self):
        return [layer for layer in self.layers if layer.nonlinear.kind == NonlinearKind.ESSM]

    # Parameter vector: per layer Re(h), Im(h) and, unless shared, eta.
    # A shared eta block is appended once after all layers.
    def parameter_blocks(self):
        blocks = []
        for index, layer in enumerate(self.layers):
            size = layer.linear.half_taps.size
            blocks.append(("re", index, size))
            blocks.append(("im", index, size))
            if layer.nonlinear.kind == NonlinearKind.ESSM and not self.shared_eta:
                blocks.append(("eta", index, layer.nonlinear.eta_half_taps.size))
        if self.shared_eta and self.essm_layers():
            blocks.append(("eta", None, self.essm_layers()[0].nonlinear.eta_half_taps.size))
        return blocks

    @property
    def parameter_count(self):
        return sum(size for _, _, size in self.parameter_blocks())

    def parameters(self) -> np.ndarray:
        parts = []
        for kind, index, _ in self.parameter_blocks():
            if kind == "re":
                parts.append(self.layers[index].linear.half_taps.real)
            elif kind == "im":
                parts.append(self.layers[index].linear.half_taps.imag)
            elif index is None:
                parts.append(self.essm_layers()[0].nonlinear.eta_half_taps)
            else:
                parts.append(self.layers[index].nonlinear.eta_half_taps)
        return np.concatenate(parts).astype(np.float64)

    def parameter_mask(self) -> np.ndarray:
        parts = []
        for kind, index, size in self.parameter_blocks():
            if kind in ("re", "im"):
                parts.append(self.layers[index].linear.mask)
            else:
                parts.append(np.ones(size, dtype=bool))
        return np.concatenate(parts)

    def set_parameters(self, values: np.ndarray):
        values = np.asarray(values, dtype=np.float64)
        if values.size != self.parameter_count:
            raise ValueError(f"expected {self.parameter_count} parameters, got {values.size}")
        offset = 0
        real_parts = {}
        for kind, index, size in self.parameter_blocks():
            chunk = values[offset:offset + size]
            offset += size
            if kind == "re":
                real_parts[index] = chunk
            elif kind == "im":
                linear = self.layers[index].linear
                linear.half_taps = real_parts[index] + 1j * chunk
                linear.half_taps[~linear.mask] = 0.0
            elif index is None:
                for layer in self.essm_layers():
                    layer.nonlinear.eta_half_taps = chunk.copy()
            else:
                self.layers[index].nonlinear.eta_half_taps = chunk.copy()
        return self

    @property
    def total_taps(self):
        """Length of the filter obtained by convolving all linear steps"""
        return sum(layer.linear.length - 1 for layer in self.layers) + 1

    def forward(self, r: ComplexSignal) -> ComplexSignal:
        return forward(self, r)

    def to_dict(self):
        layers = []
        for layer in self.layers:
            linear, nonlinear = layer.linear, layer.nonlinear
            full = linear.full_taps()
            entry = {
                "delta_km": nonlinear.delta_km,
                "linear_delta_km": linear.delta_km,
                "taps_re": full.real.tolist(),
                "taps_im": full.imag.tolist(),
                "mask": linear.mask.astype(int).tolist(),
                "kind": nonlinear.kind.value,
                "gamma_per_w_km": nonlinear.gamma_per_w_km,
                "alpha_np_per_km": nonlinear.alpha_np_per_km,
                "attenuation": nonlinear.attenuation,
                "scaling": nonlinear.scaling,
            }
            if nonlinear.kind == NonlinearKind.ESSM:
                entry["eta"] = nonlinear.full_eta().tolist()
            layers.append(entry)
        return {
            "layout": self.layout.value,
            "sample_rate_hz": self.sample_rate_hz,
            "shared_eta": self.shared_eta,
            "layers": layers,
        }

    @classmethod
    def from_dict(cls, data):
        layers = []
        for entry in data["layers"]:
            taps = np.asarray(entry["taps_re"]) + 1j * np.asarray(entry["taps_im"])
            center = taps.size // 2
            mask = entry.get("mask")
            linear = LinearStep(
                taps[center:],
                None if mask is None else np.asarray(mask, dtype=bool),
                entry.get("linear_delta_km", 0.0),
            )
            kind = NonlinearKind(entry.get("kind", "standard"))
            eta = np.asarray(entry.get("eta", []), dtype=np.float64)
            nonlinear = NonlinearStep(
                kind=kind,
                delta_km=entry["delta_km"],
                gamma_per_w_km=entry.get("gamma_per_w_km", 0.0),
                alpha_np_per_km=entry.get("alpha_np_per_km", 0.0),
                attenuation=entry.get("attenuation", 1.0),
                scaling=entry.get("scaling", 1.0),
                eta_half_taps=eta[eta.size // 2:] if eta.size else np.zeros(0),
            )
            layers.append(Layer(linear, nonlinear))
        return cls(layers, Layout(data["layout"]), data["sample_rate_hz"], data.get("shared_eta", False))


def circular_conv_symmetric(x: np.ndarray, step: LinearStep) -> np.ndarray:
    """Circular convolution with the reconstructed symmetric filter (folded direct form)"""
    x = np.asarray(x, dtype=np.complex128)
    if 2 * step.half_length + 1 > x.size:
        raise FilterTooLong(f"filter of length {2 * step.half_length + 1} exceeds block length {x.size}")
    return fold_symmetric(x, step.half_taps)


def nonlinear_apply(x: np.ndarray, step: NonlinearStep) -> np.ndarray:
    """x_j exp(-j c sum_k eta_k |x_{j-k}|^2), the inverse Kerr rotation"""
    x = np.asarray(x, dtype=np.complex128)
    if step.is_identity:
        return x.copy()
    return x * np.exp(-1j * step.coefficient * step.filtered_power(x))


def _check_input(model: LdbpModel, r: ComplexSignal):
    if not math.isclose(r.sample_rate_hz, model.sample_rate_hz, rel_tol=1e-9):
        raise ValueError(f"signal rate {r.sample_rate_hz} Hz does not match model rate {model.sample_rate_hz} Hz")


def forward(model: LdbpModel, r: ComplexSignal) -> ComplexSignal:
    _check_input(model, r)
    samples = r.samples
    for index, layer in enumerate(model.layers):
        samples = nonlinear_apply(circular_conv_symmetric(samples, layer.linear), layer.nonlinear)
        if not np.all(np.isfinite(samples)):
            raise NumericalError(f"non-finite activations after layer {index}", layer=index)
    return r.with_samples(samples)


def linear_only_forward(model: LdbpModel, r: ComplexSignal) -> ComplexSignal:
    """The model with every nonlinear step replaced by the identity"""
    _check_input(model, r)
    samples = r.samples
    for layer in model.layers:
        samples = circular_conv_symmetric(samples, layer.linear)
    return r.with_samples(samples)


def overall_response(model: LdbpModel, num_points: int) -> OverallResponse:
    frequencies = (np.arange(num_points) - num_points // 2) / num_points
    omega = 2.0 * np.pi * frequencies
    response = np.ones(num_points, dtype=np.complex128)
    for layer in model.layers:
        response *= layer.linear.response(omega)
    return OverallResponse(frequencies, response, model.total_taps)


def rescale_equivalent(model: LdbpModel) -> LdbpModel:
    """
    Absorb per-step nonlinear scalings into the filters: the returned model
    has unit scalings and computes the same function.
    """
    if model.layout != Layout.SYMMETRIC_PLUS_HALF:
        raise ValueError("rescaling needs the symmetric layout with a trailing half-step")
    scalings = [layer.nonlinear.scaling for layer in model.layers[:-1]]
    for index, value in enumerate(scalings):
        if value <= 0:
            raise ValueError(f"nonlinear scaling of step {index} must be positive, got {value}")

    result = model.copy()
    previous = 1.0
    for layer, value in zip(result.layers[:-1], scalings):
        current = math.sqrt(value)
        layer.linear = layer.linear.scaled(current / previous)
        layer.nonlinear.scaling = 1.0
        previous = current
    result.layers[-1].linear = result.layers[-1].linear.scaled(1.0 / previous)
    logger.debug(f"Rescaled {len(scalings)} nonlinear steps to unit scaling")
    return result
