"""
Tests for preset loading, overlays and configuration validation.
"""

import json

import pytest

from fiberdl.config import ConfigManager, deep_merge
from fiberdl.dsp.objects import Layout
from fiberdl.errors import ConfigError
from fiberdl.ldbp import design


class TestPresets:
    """Shipped presets"""

    def test_all_presets_load(self):
        manager = ConfigManager()
        names = manager.available_presets()
        assert {"desk-10g7", "desk-10g7-alt53", "desk-essm", "desk-32g", "desk-wdm"} <= set(names)
        for name in names:
            config = manager.load(name)
            assert config.name == name
            assert config.simulator().sample_rate_hz == config.spec.digital_rate_hz

    def test_alternating_targets_give_77_taps(self):
        config = ConfigManager().load("desk-10g7-alt53")
        plan = design.step_plan(config.link, config.model.steps_per_span, config.model.layout)
        targets = config.prune.target_half_lengths
        assert len(targets) == plan.num_layers == 25
        assert sum(2 * k for k in targets) + 1 == 77

    def test_symmetric_preset(self):
        config = ConfigManager().load("desk-32g")
        assert config.model.layout == Layout.SYMMETRIC_PLUS_HALF

    def test_unknown_preset(self):
        with pytest.raises(ConfigError):
            ConfigManager().load("no-such-preset")


class TestOverlays:
    """Preset, file and override precedence"""

    def test_precedence(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"seed": 5, "train": {"iterations": 7}}))
        config = ConfigManager().load("desk-10g7", str(path), {"seed": 9})
        assert config.seed == 9
        assert config.train.seed == 9
        assert config.train.iterations == 7
        assert config.link.num_spans == 5

    def test_unknown_keys_rejected(self):
        with pytest.raises(ConfigError):
            ConfigManager().load(overrides={"bogus": 1})
        with pytest.raises(ConfigError):
            ConfigManager().load(overrides={"link": {"span": 80.0}})

    def test_section_replaced_by_value(self):
        with pytest.raises(ConfigError):
            deep_merge({"link": {"span_km": 1.0}}, {"link": 3})

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError):
            ConfigManager().load(config_path=str(path))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            ConfigManager().load(config_path=str(tmp_path / "absent.json"))

    def test_manifest_drops_threads(self):
        config = ConfigManager().load("desk-10g7", overrides={"threads": 4})
        assert config.threads == 4
        assert "threads" not in config.manifest_config()
        assert config.manifest_config()["seed"] == config.seed


class TestValidation:
    """Invariants checked while building the configuration"""

    @pytest.mark.parametrize("overrides", [
        {"signal": {"analog_oversampling": 2, "digital_oversampling": 2}},
        {"link": {"span_km": 0.0}},
        {"wdm": {"channels": 2}},
        {"train": {"learning_rate": -1.0}},
        {"prune": {"fraction": 0.0}},
        {"evaluate": {"powers_dbm": []}},
        {"model": {"layout": "diagonal"}},
        {"threads": 0},
        {"wdm": {"channels": 5, "spacing_hz": 100e9}},
        {"signal": {"num_symbols": 16}, "model": {"half_lengths": 40}},
        {"model": {"half_lengths": [4, 300]}},
        {"model": {"essm_half_lengths": 300}},
    ])
    def test_rejected(self, overrides):
        with pytest.raises(ConfigError):
            ConfigManager().load(overrides=overrides)

    def test_lowpass_wider_than_analog_band(self):
        with pytest.raises(ConfigError):
            ConfigManager().load(overrides={"rx": {"lpf_bandwidth_hz": 1e12}})
