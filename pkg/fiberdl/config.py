"""
Experiment configuration: JSON presets shipped with the package, an optional
user file overlaid on top and command line overrides applied last
"""

import copy
import json
import logging
import os
from dataclasses import dataclass, field
from typing import List, Optional, Union

from fiberdl import constants
from fiberdl.dsp.objects import FiberLink, Layout, Modulation, RxConfig, SignalSpec, StepSizing, WdmConfig
from fiberdl.dsp.system import FrameSimulator
from fiberdl.errors import ConfigError
from fiberdl.ldbp.design import InitScheme
from fiberdl.train.adam import TrainConfig

PRESETS_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "presets")

DEFAULTS = {
    "name": "experiment",
    "seed": 0,
    "threads": 1,
    "output_dir": "out",
    "link": {
        "span_km": 80.0,
        "num_spans": 1,
        "alpha_db_per_km": constants.ALPHA_DB_PER_KM,
        "beta2_ps2_per_km": constants.BETA2_PS2_PER_KM,
        "gamma_per_w_km": constants.GAMMA_PER_W_KM,
        "noise_figure_db": constants.NOISE_FIGURE_DB,
        "carrier_hz": constants.CARRIER_HZ,
    },
    "signal": {
        "baud_rate_hz": 10.7e9,
        "rolloff": constants.ROLLOFF,
        "analog_oversampling": constants.ANALOG_OVERSAMPLING,
        "digital_oversampling": constants.DIGITAL_OVERSAMPLING,
        "rrc_span_symbols": constants.RRC_SPAN_SYMBOLS,
        "num_symbols": 256,
        "modulation": Modulation.GAUSSIAN_IID.value,
    },
    "rx": {
        "lpf_bandwidth_hz": None,
        "wide_lpf": False,
    },
    "channel": {
        "steps_per_span": 50,
        "sizing": StepSizing.LOGARITHMIC.value,
        "noiseless": False,
    },
    "wdm": {
        "channels": 1,
        "spacing_hz": 0.0,
    },
    "model": {
        "layout": Layout.ASYMMETRIC.value,
        "steps_per_span": 1,
        "sizing": StepSizing.LOGARITHMIC.value,
        "half_lengths": 4,
        "init": InitScheme.LEAST_SQUARES.value,
        "loss_aware": True,
        "essm_half_lengths": None,
        "shared_eta": False,
        "max_oob_gain": 1.0,
        "multiobjective_weights": None,
    },
    "train": {
        "learning_rate": constants.LEARNING_RATE,
        "batch_size": constants.BATCH_SIZE,
        "iterations": 1000,
        "power_set_dbm": [0.0],
        "adam_beta1": constants.ADAM_BETA1,
        "adam_beta2": constants.ADAM_BETA2,
        "adam_eps": constants.ADAM_EPS,
        "eval_interval": 0,
        "eval_frames": 10,
        "log_interval": 100,
    },
    "prune": {
        "target_half_lengths": None,
        "fraction": constants.PRUNE_FRACTION,
        "checkpoint_interval": 100,
    },
    "evaluate": {
        "powers_dbm": [0.0],
        "num_frames": 20,
        "dbp_steps_per_span": [1],
        "response_points": constants.RESPONSE_POINTS,
    },
}


def deep_merge(base: dict, overlay: dict, path: str = "") -> dict:
    """Merge overlay into a copy of base. Keys absent from base are rejected."""
    merged = copy.deepcopy(base)
    for key, value in overlay.items():
        where = f"{path}.{key}" if path else key
        if key not in base:
            raise ConfigError(f"unknown configuration key '{where}'")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"'{where}' must be a section")
            merged[key] = deep_merge(base[key], value, where)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


@dataclass
class ModelSettings:
    layout: Layout
    steps_per_span: int
    sizing: StepSizing
    half_lengths: Union[int, List[int]]
    init: InitScheme
    loss_aware: bool
    essm_half_lengths: Optional[Union[int, List[int]]]
    shared_eta: bool
    max_oob_gain: float
    multiobjective_weights: Optional[List[float]]


@dataclass
class PruneSettings:
    target_half_lengths: Optional[Union[int, List[int]]]
    fraction: float
    checkpoint_interval: int

    def __post_init__(self):
        if not 0.0 < self.fraction <= 1.0:
            raise ConfigError(f"prune fraction must lie in (0, 1], got {self.fraction}")
        if self.checkpoint_interval < 1:
            raise ConfigError("checkpoint_interval must be at least 1")


@dataclass
class EvaluationSettings:
    powers_dbm: List[float]
    num_frames: int
    dbp_steps_per_span: List[int]
    response_points: int

    def __post_init__(self):
        if not self.powers_dbm:
            raise ConfigError("evaluate.powers_dbm must not be empty")
        if self.num_frames < 1:
            raise ConfigError("evaluate.num_frames must be at least 1")
        if self.response_points < constants.RESPONSE_POINTS:
            raise ConfigError(f"response_points must be at least {constants.RESPONSE_POINTS}")


@dataclass
class ExperimentConfig:
    name: str
    seed: int
    threads: int
    output_dir: str
    link: FiberLink
    spec: SignalSpec
    rx: RxConfig
    wdm: WdmConfig
    num_symbols: int
    modulation: Modulation
    forward_steps_per_span: int
    forward_sizing: StepSizing
    noiseless: bool
    model: ModelSettings
    train: TrainConfig
    prune: PruneSettings
    evaluation: EvaluationSettings
    resolved: dict = field(repr=False, default_factory=dict)

    def simulator(self) -> FrameSimulator:
        return FrameSimulator(
            link=self.link,
            spec=self.spec,
            rx=self.rx,
            num_symbols=self.num_symbols,
            steps_per_span=self.forward_steps_per_span,
            modulation=self.modulation,
            sizing=self.forward_sizing,
            wdm=self.wdm,
            noiseless=self.noiseless,
        )

    def manifest_config(self) -> dict:
        """The resolved configuration without settings that cannot change results"""
        data = copy.deepcopy(self.resolved)
        data.pop("threads", None)
        return data


def _widest(half_lengths) -> int:
    if half_lengths is None:
        return 0
    if isinstance(half_lengths, (int, float)):
        return int(half_lengths)
    return max((int(k) for k in half_lengths), default=0)


def _check_fits(spec: SignalSpec, wdm: WdmConfig, model: ModelSettings, num_symbols: int):
    """Reject WDM grids and filters that cannot fit the simulated frame"""
    if wdm.channels > 1:
        outer = (wdm.channels // 2) * wdm.spacing_hz + spec.occupied_bandwidth_hz / 2.0
        if outer >= spec.analog_rate_hz / 2.0:
            raise ConfigError(
                f"WDM channel 0 reaches {outer / 1e9:.2f} GHz, beyond the simulation band "
                f"+-{spec.analog_rate_hz / 2e9:.2f} GHz; raise signal.analog_oversampling"
            )
    block = num_symbols * spec.digital_oversampling
    for name, half_lengths in (("half_lengths", model.half_lengths), ("essm_half_lengths", model.essm_half_lengths)):
        length = 2 * _widest(half_lengths) + 1
        if length > block:
            raise ConfigError(f"model.{name} gives {length}-tap filters, longer than the {block}-sample block")


def _build(data: dict) -> ExperimentConfig:
    signal = data["signal"]
    spec = SignalSpec(
        baud_rate_hz=float(signal["baud_rate_hz"]),
        rolloff=float(signal["rolloff"]),
        analog_oversampling=int(signal["analog_oversampling"]),
        digital_oversampling=int(signal["digital_oversampling"]),
        rrc_span_symbols=int(signal["rrc_span_symbols"]),
    )
    link = FiberLink(**data["link"])
    rx_section = data["rx"]
    if rx_section["lpf_bandwidth_hz"] is None:
        rx = RxConfig.from_spec(spec, wide=bool(rx_section["wide_lpf"]))
    else:
        if rx_section["lpf_bandwidth_hz"] > spec.analog_rate_hz:
            raise ConfigError("rx.lpf_bandwidth_hz exceeds the analog sample rate")
        rx = RxConfig(float(rx_section["lpf_bandwidth_hz"]), spec.digital_oversampling)

    m = data["model"]
    model = ModelSettings(
        layout=Layout(m["layout"]),
        steps_per_span=int(m["steps_per_span"]),
        sizing=StepSizing(m["sizing"]),
        half_lengths=m["half_lengths"],
        init=InitScheme(m["init"]),
        loss_aware=bool(m["loss_aware"]),
        essm_half_lengths=m["essm_half_lengths"],
        shared_eta=bool(m["shared_eta"]),
        max_oob_gain=float(m["max_oob_gain"]),
        multiobjective_weights=m["multiobjective_weights"],
    )
    if model.steps_per_span < 1:
        raise ConfigError("model.steps_per_span must be at least 1")

    channel = data["channel"]
    if int(channel["steps_per_span"]) < 1:
        raise ConfigError("channel.steps_per_span must be at least 1")
    if int(data["threads"]) < 1:
        raise ConfigError("threads must be at least 1")
    if int(signal["num_symbols"]) < 1:
        raise ConfigError("signal.num_symbols must be at least 1")
    wdm = WdmConfig(**data["wdm"])
    _check_fits(spec, wdm, model, int(signal["num_symbols"]))

    return ExperimentConfig(
        name=str(data["name"]),
        seed=int(data["seed"]),
        threads=int(data["threads"]),
        output_dir=str(data["output_dir"]),
        link=link,
        spec=spec,
        rx=rx,
        wdm=wdm,
        num_symbols=int(signal["num_symbols"]),
        modulation=Modulation(signal["modulation"]),
        forward_steps_per_span=int(channel["steps_per_span"]),
        forward_sizing=StepSizing(channel["sizing"]),
        noiseless=bool(channel["noiseless"]),
        model=model,
        train=TrainConfig(seed=int(data["seed"]), **data["train"]),
        prune=PruneSettings(**data["prune"]),
        evaluation=EvaluationSettings(**data["evaluate"]),
        resolved=data,
    )


class ConfigManager:
    """Resolves preset, user file and overrides into an ExperimentConfig"""

    def __init__(self, presets_dir: str = PRESETS_DIR):
        self.presets_dir = presets_dir
        self.logger = logging.getLogger("CONFIG")

    def available_presets(self) -> List[str]:
        if not os.path.isdir(self.presets_dir):
            return []
        return sorted(name[:-5] for name in os.listdir(self.presets_dir) if name.endswith(".json"))

    def _read_json(self, path: str) -> dict:
        try:
            with open(path, "r") as f:
                data = json.load(f)
        except FileNotFoundError:
            raise ConfigError(f"configuration file not found: {path}")
        except json.JSONDecodeError as e:
            raise ConfigError(f"invalid JSON in {path}: {e}")
        if not isinstance(data, dict):
            raise ConfigError(f"{path} does not contain a JSON object")
        return data

    def read_preset(self, name: str) -> dict:
        path = os.path.join(self.presets_dir, f"{name}.json")
        if not os.path.exists(path):
            raise ConfigError(f"unknown preset '{name}', available: {', '.join(self.available_presets())}")
        return self._read_json(path)

    def load(self, preset: Optional[str] = None, config_path: Optional[str] = None, overrides: Optional[dict] = None) -> ExperimentConfig:
        data = copy.deepcopy(DEFAULTS)
        if preset:
            self.logger.debug(f"Loading preset {preset}")
            data = deep_merge(data, self.read_preset(preset))
        if config_path:
            self.logger.debug(f"Overlaying {config_path}")
            data = deep_merge(data, self._read_json(config_path))
        if overrides:
            data = deep_merge(data, overrides)
        try:
            return _build(data)
        except ConfigError:
            raise
        except (TypeError, ValueError, KeyError) as e:
            raise ConfigError(f"invalid configuration: {e}")
