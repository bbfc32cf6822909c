"""Run configuration parsing, coercion, and collected validation."""

from __future__ import annotations

import pytest

from vadbench.config import ConfigError, RunConfig, load_config, parse_config_file
from vadbench.corpus import NOISE_TYPES, SNR_LEVELS_DB


class TestDefaults:
    def test_defaults_valid(self):
        assert RunConfig().validate() == []

    def test_default_values(self):
        cfg = RunConfig()
        assert cfg.master_seed == 12345
        assert cfg.snr_levels_db == SNR_LEVELS_DB
        assert cfg.noise_types == NOISE_TYPES
        assert cfg.feature_kind == "mfcc"
        assert cfg.hidden_units == (512, 512)
        assert (cfg.context_left, cfg.context_right) == (9, 19)
        assert cfg.learning_rate == 0.001
        assert cfg.batch_size == 512
        assert cfg.silence_ratio == 0.25


class TestParseFile:
    def test_comments_and_blanks(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text(
            "# full comment\n"
            "\n"
            "master_seed = 7   # inline comment\n"
            "feature_kind=gfcc\n")
        assert parse_config_file(path) == {"master_seed": "7",
                                           "feature_kind": "gfcc"}

    def test_malformed_line(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("master_seed 7\n")
        with pytest.raises(ValueError, match="expected 'key = value'"):
            parse_config_file(path)


class TestLoadConfig:
    def test_no_inputs_gives_defaults(self):
        assert load_config() == RunConfig()

    def test_file_then_override_precedence(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("master_seed = 1\nstride = 4\n")
        cfg = load_config(path, overrides={"master_seed": 2})
        assert cfg.master_seed == 2
        assert cfg.stride == 4

    def test_none_overrides_skipped(self):
        cfg = load_config(overrides={"master_seed": None, "stride": None})
        assert cfg == RunConfig()

    def test_unknown_key(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("no_such_option = 3\n")
        with pytest.raises(ConfigError) as err:
            load_config(path)
        assert any("unknown config key 'no_such_option'" in e
                   for e in err.value.errors)

    def test_bad_value(self):
        with pytest.raises(ConfigError) as err:
            load_config(overrides={"master_seed": "abc"})
        assert any("bad value for 'master_seed'" in e for e in err.value.errors)

    def test_all_violations_collected(self):
        with pytest.raises(ConfigError) as err:
            load_config(overrides={"stride": 0, "workers": 0,
                                   "feature_kind": "plp"})
        joined = "\n".join(err.value.errors)
        assert len(err.value.errors) >= 3
        assert "stride" in joined
        assert "workers" in joined
        assert "feature_kind" in joined


class TestCoercion:
    def test_snr_list_from_string(self):
        cfg = load_config(overrides={"snr_levels_db": "-5,0,5"})
        assert cfg.snr_levels_db == (-5.0, 0.0, 5.0)

    def test_hidden_units_from_string(self):
        cfg = load_config(overrides={"hidden_units": "256,128"})
        assert cfg.hidden_units == (256, 128)

    def test_single_noise_type(self):
        cfg = load_config(overrides={"noise_types": "SSN"})
        assert cfg.noise_types == ("SSN",)

    def test_pretyped_sequence(self):
        cfg = load_config(overrides={"snr_levels_db": ["-5", "10"]})
        assert cfg.snr_levels_db == (-5.0, 10.0)

    def test_scalar_strings(self):
        cfg = load_config(overrides={"learning_rate": "0.01", "stride": "10"})
        assert cfg.learning_rate == 0.01
        assert cfg.stride == 10


class TestValidation:
    def test_fft_smaller_than_window(self):
        with pytest.raises(ConfigError) as err:
            load_config(overrides={"fft_size": 256})
        assert any("smaller than the analysis window" in e
                   for e in err.value.errors)

    @pytest.mark.parametrize("epochs", [0, 51])
    def test_epoch_budget(self, epochs):
        with pytest.raises(ConfigError) as err:
            load_config(overrides={"max_epochs": epochs})
        assert any("max_epochs" in e for e in err.value.errors)

    def test_duplicate_noise_types(self):
        with pytest.raises(ConfigError) as err:
            load_config(overrides={"noise_types": "SSN,SSN"})
        assert any("duplicates" in e for e in err.value.errors)

    def test_hop_exceeds_window(self):
        with pytest.raises(ConfigError) as err:
            load_config(overrides={"hop_seconds": "0.05"})
        assert any("hop_seconds" in e for e in err.value.errors)


class TestRoundTrip:
    def test_file_text_reload(self, tmp_path):
        cfg = RunConfig(master_seed=7, snr_levels_db=(-5.0, 0.0),
                        noise_types=("SSN", "Babble"), hidden_units=(64,),
                        feature_kind="gfcc", stride=10)
        path = tmp_path / "run.cfg"
        path.write_text(cfg.to_file_text())
        assert load_config(path) == cfg
