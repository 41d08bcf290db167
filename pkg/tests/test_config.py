import numpy as np
import pytest

from decoder.config import SCHEMA, load_config, read_config_file
from decoder.errors import ConfigError
from decoder.validators import resource_value, validate_run_config

BASE = {"predictors": "fst", "fst_path": "lat/%d.fst.txt", "src_test": "src.txt"}


def fields(excinfo):
    return {e["field"] for e in excinfo.value.errors}


class TestLoadConfig:
    def test_defaults(self):
        config = load_config(BASE)
        assert config.decoder == "beam"
        assert config.beam == 4
        assert config.predictor_weights == [1.0]
        assert config.outputs == ["text"]
        assert config.max_len(4) == 22
        assert config.names == ["fst"]

    def test_flag_overrides_file(self, tmp_path):
        conf = tmp_path / "run.conf"
        conf.write_text("beam = 4\ndecoder = greedy  # comment\n", encoding="utf-8")
        config = load_config({**BASE, "beam": "20"}, str(conf))
        assert config.beam == 20
        assert config.decoder == "greedy"

    def test_yaml_file(self, tmp_path):
        conf = tmp_path / "run.yaml"
        conf.write_text("predictors: fst,lm\npredictor_weights: [1.0, 0.5]\nlm_path: lm.arpa\nbeam: 8\n", encoding="utf-8")
        config = load_config({"fst_path": "a.fst", "src_test": "src.txt"}, str(conf))
        assert config.names == ["fst", "lm"]
        assert config.predictor_weights == [1.0, 0.5]
        assert config.beam == 8

    def test_precedence_for_random_key_subsets(self, tmp_path):
        rng = np.random.default_rng(41)
        candidates = {
            "beam": ("3", "9", 9),
            "decoder": ("greedy", "dfs", "dfs"),
            "max_len_offset": ("5", "7", 7),
            "nbest_size": ("2", "6", 6),
            "output_dir": ("a", "b", "b"),
            "jobs": ("2", "3", 3),
        }
        for i in range(20):
            in_file = {k for k in candidates if rng.random() < 0.5}
            in_flags = {k for k in candidates if rng.random() < 0.5}
            conf = tmp_path / f"{i}.conf"
            conf.write_text("".join(f"{k} = {candidates[k][0]}\n" for k in in_file), encoding="utf-8")
            flags = {**BASE, **{k: candidates[k][1] for k in in_flags}}
            config = load_config(flags, str(conf))
            for key, (file_value, _, flag_value) in candidates.items():
                if key in in_flags:
                    assert getattr(config, key) == flag_value
                elif key in in_file:
                    assert str(getattr(config, key)) == file_value
                else:
                    assert getattr(config, key) == SCHEMA[key][1]

    def test_invalid_decoder(self, tmp_path):
        conf = tmp_path / "run.conf"
        conf.write_text("decoder = beem\n", encoding="utf-8")
        with pytest.raises(ConfigError) as excinfo:
            load_config(BASE, str(conf))
        assert fields(excinfo) == {"decoder"}
        assert "beem" in str(excinfo.value)

    def test_src_test_required(self):
        with pytest.raises(ConfigError) as excinfo:
            load_config({})
        assert {"src_test", "predictors"} <= fields(excinfo)

    def test_all_offending_keys_listed(self):
        with pytest.raises(ConfigError) as excinfo:
            load_config({**BASE, "beam": "many", "bogus": "1", "ngram_order": "9"})
        assert fields(excinfo) == {"beam", "bogus", "ngram_order"}

    def test_weight_mismatch(self):
        with pytest.raises(ConfigError) as excinfo:
            load_config({**BASE, "predictors": "fst,lm", "lm_path": "lm.arpa", "predictor_weights": "1.0"})
        assert fields(excinfo) == {"predictor_weights"}

    def test_missing_resource(self):
        with pytest.raises(ConfigError) as excinfo:
            load_config({"predictors": "lm", "src_test": "src.txt"})
        assert fields(excinfo) == {"lm_path1"}

    def test_indexed_resources(self):
        config = load_config(
            {**BASE, "predictors": "lm,lm,wc", "lm_path1": "a.arpa", "lm_path2": "b.arpa", "lm_floor2": "5", "wc_penalty": "-0.5"}
        )
        assert config.names == ["lm", "lm2", "wc"]
        first, second, wc = config.predictors
        assert first.options == {"path": "a.arpa", "floor": 20.0}
        assert second.options == {"path": "b.arpa", "floor": 5.0}
        assert wc.options == {"penalty": -0.5}

    def test_range(self):
        assert load_config({**BASE, "range": "2:5"}).range == (2, 5)
        assert load_config({**BASE, "range": "3"}).range == (3, 3)
        with pytest.raises(ConfigError):
            load_config({**BASE, "range": "5:2"})

    def test_missing_config_file(self, tmp_path):
        with pytest.raises(ConfigError) as excinfo:
            load_config(BASE, str(tmp_path / "nope.conf"))
        assert fields(excinfo) == {"config"}


class TestConfigFile:
    def test_key_value_lines(self, tmp_path):
        conf = tmp_path / "a.conf"
        conf.write_text("# header\n\nbeam = 12\noutputs = text,nbest\n", encoding="utf-8")
        values, errors = read_config_file(str(conf))
        assert values == {"beam": "12", "outputs": "text,nbest"}
        assert errors == []

    def test_malformed_line(self, tmp_path):
        conf = tmp_path / "a.conf"
        conf.write_text("beam 12\n", encoding="utf-8")
        _, errors = read_config_file(str(conf))
        assert "line 1" in errors[0]["message"]


class TestValidators:
    def test_resource_fallback(self):
        payload = {"lm_path": "x", "lm_path2": "y"}
        assert resource_value(payload, "lm_path", 1) == "x"
        assert resource_value(payload, "lm_path", 2) == "y"

    def test_strategies(self):
        payload = {
            "predictors": ["wc"], "decoder": "beam", "src_test": "s",
            "strategies": ["greedy", "beam4", "beam0", "bfs"],
        }
        ok, errors = validate_run_config(payload)
        assert not ok
        assert [e["field"] for e in errors] == ["strategies", "strategies"]
