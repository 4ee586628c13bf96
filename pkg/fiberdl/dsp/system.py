"""
End-to-end transmission chain: symbols -> pulse shaping at the analog rate ->
optional WDM multiplexing -> fiber link -> low-pass and sampling at the
digital rate
"""

from dataclasses import dataclass, field

from fiberdl.dsp import channel, dsp_utils, rxdsp, transmitter
from fiberdl.dsp.objects import (
    FiberLink,
    Frame,
    Modulation,
    RxConfig,
    SignalSpec,
    StepSizing,
    WdmConfig,
)


@dataclass
class FrameSimulator:
    link: FiberLink
    spec: SignalSpec
    rx: RxConfig
    num_symbols: int
    steps_per_span: int
    modulation: Modulation = Modulation.GAUSSIAN_IID
    sizing: StepSizing = StepSizing.LOGARITHMIC
    wdm: WdmConfig = field(default_factory=WdmConfig)
    noiseless: bool = False

    def __post_init__(self):
        if self.num_symbols < 1:
            raise ValueError("a frame needs at least one symbol")

    @property
    def sample_rate_hz(self):
        return self.rx.digital_oversampling * self.spec.baud_rate_hz

    def matched_filter(self, power_dbm: float, workers=None) -> rxdsp.MatchedFilter:
        return rxdsp.MatchedFilter(self.spec, self.rx.digital_oversampling, dsp_utils.dbm_to_watt(power_dbm), workers)

    def simulate(self, power_dbm: float, seed: int, stream: tuple = ()) -> Frame:
        """
        One frame at the given launch power. Symbols, interfering channels and
        span noise draw from disjoint substreams under (seed, *stream).
        """
        frame = transmitter.generate_symbols(
            self.num_symbols, self.modulation, seed, power_dbm, rng=dsp_utils.substream(seed, *stream, 0)
        )
        x = transmitter.modulate(frame, self.spec, self.spec.analog_oversampling)

        if self.wdm.channels > 1:
            center = self.wdm.channels // 2
            signals = []
            for index in range(self.wdm.channels):
                if index == center:
                    signals.append(x)
                    continue
                other = transmitter.generate_symbols(
                    self.num_symbols, self.modulation, seed, power_dbm,
                    rng=dsp_utils.substream(seed, *stream, 1, index),
                )
                signals.append(transmitter.modulate(other, self.spec, self.spec.analog_oversampling))
            x = transmitter.wdm_multiplex(signals, self.wdm.spacing_hz, self.spec.occupied_bandwidth_hz)

        y = channel.propagate_link(
            x, self.link, self.steps_per_span, seed,
            noiseless=self.noiseless, sizing=self.sizing, stream=(*stream, 2),
        )
        received = rxdsp.lowpass_downsample(y, self.rx, self.spec.baud_rate_hz)
        return Frame(received, frame)
