from dataclasses import dataclass
from enum import Enum
import math

import numpy as np

from fiberdl import constants
from fiberdl.errors import ConfigError, NumericalError


class Modulation(Enum):
    GAUSSIAN_IID = "gaussian"
    QAM16 = "qam16"


class StepSizing(Enum):
    UNIFORM = "uniform"
    LOGARITHMIC = "logarithmic"


class Layout(Enum):
    ASYMMETRIC = "asymmetric"
    SYMMETRIC_PLUS_HALF = "symmetric"


@dataclass
class SymbolFrame:
    symbols: np.ndarray
    modulation: Modulation = Modulation.GAUSSIAN_IID
    power_dbm: float = 0.0
    seed: int = 0

    def __post_init__(self):
        self.symbols = np.asarray(self.symbols, dtype=np.complex128)
        if self.symbols.ndim != 1 or self.symbols.size < 1:
            raise ValueError("a symbol frame needs at least one symbol")

    @property
    def count(self):
        return self.symbols.size

    def with_symbols(self, symbols):
        return SymbolFrame(symbols, self.modulation, self.power_dbm, self.seed)


@dataclass
class ComplexSignal:
    samples: np.ndarray
    sample_rate_hz: float

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.complex128)
        if self.samples.ndim != 1 or self.samples.size < 1:
            raise ValueError("a signal needs at least one sample")
        if self.sample_rate_hz <= 0:
            raise ValueError(f"sample rate must be positive, got {self.sample_rate_hz}")

    def __len__(self):
        return self.samples.size

    @property
    def energy(self):
        return float(np.vdot(self.samples, self.samples).real)

    @property
    def mean_power(self):
        return self.energy / self.samples.size

    def with_samples(self, samples):
        return ComplexSignal(samples, self.sample_rate_hz)

    def ensure_finite(self, where="signal", layer=None):
        if not np.all(np.isfinite(self.samples)):
            raise NumericalError(f"non-finite samples in {where}", layer=layer)
        return self


@dataclass
class SignalSpec:
    baud_rate_hz: float
    rolloff: float = constants.ROLLOFF
    analog_oversampling: int = constants.ANALOG_OVERSAMPLING
    digital_oversampling: int = constants.DIGITAL_OVERSAMPLING
    rrc_span_symbols: int = constants.RRC_SPAN_SYMBOLS

    def __post_init__(self):
        if self.baud_rate_hz <= 0:
            raise ConfigError("baud_rate_hz must be positive")
        if not 0.0 <= self.rolloff <= 1.0:
            raise ConfigError(f"rolloff must lie in [0, 1], got {self.rolloff}")
        if self.digital_oversampling < 1 or self.analog_oversampling <= self.digital_oversampling:
            raise ConfigError(
                f"need analog_oversampling > digital_oversampling >= 1, got "
                f"{self.analog_oversampling} and {self.digital_oversampling}"
            )
        if self.rrc_span_symbols < 0:
            raise ConfigError("rrc_span_symbols must not be negative")

    @property
    def analog_rate_hz(self):
        return self.analog_oversampling * self.baud_rate_hz

    @property
    def digital_rate_hz(self):
        return self.digital_oversampling * self.baud_rate_hz

    @property
    def occupied_bandwidth_hz(self):
        return (1.0 + self.rolloff) * self.baud_rate_hz


@dataclass
class FiberLink:
    """
    Fiber, amplifier and link parameters, in the units used on data sheets.
    Conversions to SI / neper quantities are exposed as properties.
    """
    span_km: float
    num_spans: int = 1
    alpha_db_per_km: float = constants.ALPHA_DB_PER_KM
    beta2_ps2_per_km: float = constants.BETA2_PS2_PER_KM
    gamma_per_w_km: float = constants.GAMMA_PER_W_KM
    noise_figure_db: float = constants.NOISE_FIGURE_DB
    carrier_hz: float = constants.CARRIER_HZ

    def __post_init__(self):
        if self.span_km <= 0:
            raise ConfigError(f"span_km must be positive, got {self.span_km}")
        if self.num_spans < 1:
            raise ConfigError(f"num_spans must be at least 1, got {self.num_spans}")
        if self.alpha_db_per_km < 0:
            raise ConfigError("alpha_db_per_km must not be negative")

    @property
    def alpha_np_per_km(self):
        # power attenuation coefficient in 1/km
        return self.alpha_db_per_km * math.log(10.0) / 10.0

    @property
    def beta2_s2_per_km(self):
        return self.beta2_ps2_per_km * 1e-24

    @property
    def length_km(self):
        return self.span_km * self.num_spans

    @property
    def span_gain(self):
        """Amplitude gain of one EDFA, compensating the span loss exactly"""
        return math.exp(0.5 * self.alpha_np_per_km * self.span_km)


@dataclass
class RxConfig:
    lpf_bandwidth_hz: float
    digital_oversampling: int = constants.DIGITAL_OVERSAMPLING

    def __post_init__(self):
        if self.lpf_bandwidth_hz <= 0:
            raise ConfigError("lpf_bandwidth_hz must be positive")
        if self.digital_oversampling < 1:
            raise ConfigError("digital_oversampling must be at least 1")

    @classmethod
    def from_spec(cls, spec, wide=False):
        """Brick-wall bandwidth f_s (or 2 f_s when wide) at the digital rate"""
        bandwidth = spec.digital_rate_hz * (2.0 if wide else 1.0)
        if bandwidth > spec.analog_rate_hz:
            raise ConfigError("low-pass bandwidth exceeds the analog sample rate")
        return cls(bandwidth, spec.digital_oversampling)


@dataclass
class WdmConfig:
    channels: int = 1
    spacing_hz: float = 0.0

    def __post_init__(self):
        if self.channels < 1 or self.channels % 2 == 0:
            raise ConfigError(f"WDM channel count must be odd, got {self.channels}")


@dataclass
class Frame:
    """One received observation together with the symbols that were sent"""
    received: ComplexSignal
    symbols: SymbolFrame

    @property
    def power_dbm(self):
        return self.symbols.power_dbm
