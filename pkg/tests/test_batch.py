import io
import math

import numpy as np
import pytest

from conftest import CHAIN_ATT, DIAMOND_ATT, enumerate_paths
from decoder.arpa import arpa_load, lm_cost
from decoder.automata import load_att, write_att
from decoder.batch import BatchDecoder, parse_strategy
from decoder.config import load_config
from decoder.errors import ParseError
from decoder.output_store import OutputStore, SentenceOutput
from decoder.predictor_registry import PredictorRegistry
from decoder.synthetic import random_bigram_arpa, random_layered_lattice
from decoder.utils import EOS_ID, UNK_ID, fill_template, load_wmap, parse_token, render_tokens


@pytest.fixture
def lattices(tmp_path):
    (tmp_path / "1.fst.txt").write_text(CHAIN_ATT, encoding="utf-8")
    (tmp_path / "2.fst.txt").write_text(DIAMOND_ATT, encoding="utf-8")
    return tmp_path


def config_for(root, **flags):
    return load_config({
        "predictors": "fst,wc",
        "fst_path": str(root / "%d.fst.txt"),
        "wc_penalty": "0.5",
        "src_test": str(root / "src.txt"),
        "output_dir": str(root / "out"),
        **flags,
    })


class TestRegistry:
    def test_fixed_paths_are_shared(self, lattices):
        registry = PredictorRegistry(config_for(lattices, fst_path=str(lattices / "2.fst.txt")))
        first = registry.build(0)
        second = registry.build(1)
        assert first[0] is not second[0]
        assert first[0].automaton is second[0].automaton
        assert len(registry._resources) == 1

    def test_templated_paths_are_not_cached(self, lattices):
        registry = PredictorRegistry(config_for(lattices))
        first = registry.build(1)
        second = registry.build(1)
        assert first[0].automaton is not second[0].automaton
        assert first[0].automaton == second[0].automaton
        registry.build(0)
        assert registry._resources == {}

    def test_sparse_lattice_weights(self, lattices):
        (lattices / "sparse.fst.txt").write_text("0 1 3 0:1.0,1:2.0\n1 1:0.5\n", encoding="utf-8")
        config = config_for(lattices, fst_path=str(lattices / "sparse.fst.txt"), fst_weights="1.0,0.5")
        automaton = PredictorRegistry(config).build(0)[0].automaton
        assert automaton.arcs[0][0].weight == pytest.approx(2.0)
        assert automaton.finals[1] == pytest.approx(0.25)

    def test_sentence_id_and_names(self, lattices):
        predictors = PredictorRegistry(config_for(lattices)).build(1)
        assert [p.kind for p in predictors] == ["fst", "wc"]
        assert all(p.current_sen_id == 1 for p in predictors)
        assert predictors[1].penalty == 0.5

    def test_preload_skips_templates(self, lattices):
        registry = PredictorRegistry(config_for(lattices, fst_path=str(lattices / "%d.missing")))
        registry.preload()
        with pytest.raises(ParseError):
            registry.build(0)


class TestBatchDecoder:
    def test_in_order_results_with_threads(self, lattices):
        corpus = [(i % 2, [7]) for i in range(12)]
        sequential = BatchDecoder(config_for(lattices), PredictorRegistry(config_for(lattices)))
        threaded_config = config_for(lattices, jobs="4")
        threaded = BatchDecoder(threaded_config, PredictorRegistry(threaded_config))
        expected = [sequential.decode_sentence(i, src).hypotheses for i, src in corpus]
        got = [r.hypotheses for r in threaded.map(threaded.decode_sentence, corpus)]
        assert got == expected

    def test_format_sentence(self, lattices):
        config = config_for(lattices, outputs="text,nbest,sfst,ngram", ngram_order="2")
        out = BatchDecoder(config, PredictorRegistry(config)).format_sentence(1, [7])
        assert out.text == "3 5"
        assert out.nbest[0].startswith("1 ||| 3 5 ||| fst= 1.500000 wc= 1.000000 ||| 2.500000")
        assert "3 5 : " in out.files["ngram"]
        assert set(out.files) == {"sfst", "ngram"}

    def test_empty_result_writes_empty_files(self, tmp_path):
        (tmp_path / "1.fst.txt").write_text("0 1 3 0.5\n", encoding="utf-8")
        config = config_for(tmp_path, outputs="text,fst,ngram")
        out = BatchDecoder(config, PredictorRegistry(config)).format_sentence(0, [7])
        assert out.text == ""
        assert out.files == {"fst": "", "ngram": ""}

    def test_greedy_dead_end_writes_empty_files(self, tmp_path):
        (tmp_path / "1.fst.txt").write_text("0 1 3 0.5\n2\n", encoding="utf-8")
        config = config_for(tmp_path, decoder="greedy", outputs="text,ngram,fst")
        out = BatchDecoder(config, PredictorRegistry(config)).format_sentence(0, [7])
        assert out.text == "3"
        assert out.files == {"fst": "", "ngram": ""}

    def test_silenced_predictor_lattice(self, tmp_path):
        (tmp_path / "1.fst.txt").write_text("0 1 3 0.5\n1\n", encoding="utf-8")
        config = config_for(tmp_path, predictor_weights="0,1", outputs="fst,sfst", max_len_offset="2")
        out = BatchDecoder(config, PredictorRegistry(config)).format_sentence(0, [])
        assert "0:" not in out.files["fst"]
        assert out.files["sfst"]

    def test_compare_sentence(self, lattices):
        config = config_for(lattices)
        batch = BatchDecoder(config, PredictorRegistry(config))
        strategies = [parse_strategy(s, 4) for s in ("greedy", "beam2", "dfs", "exhaustive")]
        results = batch.compare_sentence(1, [7], strategies)
        assert list(results) == ["greedy", "beam2", "dfs", "exhaustive"]
        assert all(r.best_cost == pytest.approx(2.5) for r in results.values())

    def test_parse_strategy(self):
        assert parse_strategy("beam20", 4) == ("beam20", "beam", 20)
        assert parse_strategy("beam", 4) == ("beam", "beam", 4)
        assert parse_strategy("dfs", 4) == ("dfs", "dfs", 4)


class TestOutputStore:
    def test_layout(self, tmp_path):
        with OutputStore(str(tmp_path), ["text", "nbest", "sfst"]) as store:
            for sen_id in range(2):
                out = SentenceOutput(sen_id)
                out.text = f"line {sen_id}"
                out.nbest = [f"{sen_id} ||| x"]
                out.files["sfst"] = "0\n"
                store.commit(out)
        assert (tmp_path / "out.text").read_text(encoding="utf-8") == "line 0\nline 1\n"
        assert (tmp_path / "out.nbest").read_text(encoding="utf-8") == "0 ||| x\n1 ||| x\n"
        assert sorted(p.name for p in (tmp_path / "out.sfst").iterdir()) == ["1.fst.txt", "2.fst.txt"]

    def test_refuses_out_of_order(self, tmp_path):
        with OutputStore(str(tmp_path), ["text"]) as store:
            store.commit(SentenceOutput(1))
            with pytest.raises(RuntimeError):
                store.commit(SentenceOutput(0))


class TestSynthetic:
    def test_layered_lattice(self):
        rng = np.random.default_rng(3)
        a = random_layered_lattice(rng, list(range(3, 11)))
        paths = enumerate_paths(a)
        assert len(paths) == 4 ** 5
        assert all(len(labels) == 5 for labels in paths)
        for state_arcs in a.arcs[:-4]:
            labels = [arc.label for arc in state_arcs]
            assert len(set(labels)) == 4
            assert all(0.5 <= arc.weight <= 1.5 for arc in state_arcs)

    def test_lattice_round_trips(self):
        a = random_layered_lattice(np.random.default_rng(4), list(range(3, 11)))
        assert enumerate_paths(load_att(io.StringIO(write_att(a)))) == pytest.approx(enumerate_paths(a))

    def test_width_exceeds_vocabulary(self):
        with pytest.raises(ValueError):
            random_layered_lattice(np.random.default_rng(0), [3, 4], width=4)

    def test_bigram_model_is_normalized(self):
        vocab = list(range(3, 11))
        model = arpa_load(io.StringIO(random_bigram_arpa(np.random.default_rng(5), vocab)))
        for context in [[]] + [[w] for w in vocab]:
            history = [1] + context
            total = math.fsum(math.exp(-lm_cost(model, history, t)) for t in vocab + [EOS_ID])
            assert total == pytest.approx(1.0, abs=1e-4)


class TestUtils:
    def test_fill_template(self):
        assert fill_template("lat/%d.fst.txt", 0) == "lat/1.fst.txt"
        assert fill_template("lat/all.fst.txt", 5) == "lat/all.fst.txt"

    def test_parse_token(self):
        assert parse_token("</s>") == EOS_ID
        assert parse_token("17") == 17
        assert parse_token("haus", {"das": 3}) == UNK_ID
        with pytest.raises(ValueError):
            parse_token("-1")

    def test_render_tokens(self):
        assert render_tokens([3, 9, EOS_ID], {3: "das"}) == "das <unk>"
        assert render_tokens([3, EOS_ID]) == "3"

    def test_load_wmap(self, tmp_path):
        path = tmp_path / "wmap"
        path.write_text("das 3\n\nhaus 4\n", encoding="utf-8")
        assert load_wmap(str(path)) == {"das": 3, "haus": 4}
        path.write_text("das 3\nhaus four\n", encoding="utf-8")
        with pytest.raises(ParseError) as excinfo:
            load_wmap(str(path))
        assert excinfo.value.line == 2
