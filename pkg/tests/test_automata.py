import io

import numpy as np
import pytest

from conftest import att, enumerate_paths, random_dag
from decoder.automata import (
    SparseTupleWeight,
    load_att,
    load_sparse_att,
    parse_sparse_tuple,
    serialize_sparse_tuple,
    shortest_cost,
    validate_deterministic,
    write_att,
    write_sparse_att,
)
from decoder.errors import AutomatonError, ParseError
from decoder.utils import INF


class TestLoadAtt:
    def test_chain(self, chain):
        assert chain.num_states == 2
        assert chain.start == 0
        assert chain.arcs[0][0].label == 3
        assert chain.arcs[0][0].weight == 0.7
        assert chain.finals == {1: 0.0}

    def test_first_line_source_is_start(self):
        a = att("5 7 3 1.0\n7\n")
        assert a.num_states == 2
        assert a.start == 0
        assert a.arcs[0][0].next_state == 1

    def test_weight_defaults_to_zero(self):
        a = att("0 1 4\n1 2.5\n")
        assert a.arcs[0][0].weight == 0.0
        assert a.finals == {1: 2.5}

    @pytest.mark.parametrize(
        "text, error",
        [
            ("", ParseError),
            ("0 1 x 1.0\n1\n", ParseError),
            ("0 1 3 abc\n1\n", ParseError),
            ("0 -1 3 1.0\n", ParseError),
            ("0 1 3 1.0\n1\n1\n", ParseError),
            ("0 1 3 1.0 7 8\n", ParseError),
            ("0 1 2 1.0\n1\n", AutomatonError),
        ],
    )
    def test_rejects_malformed(self, text, error):
        with pytest.raises(error):
            att(text)

    def test_error_carries_line(self):
        with pytest.raises(ParseError) as excinfo:
            att("0 1 3 1.0\n1 2 z\n")
        assert excinfo.value.line == 2

    def test_eos_arcs_allowed_on_request(self):
        a = load_att(io.StringIO("0 1 3 1.0\n1 2 2 0.5\n2\n"), allow_eos=True)
        assert a.arcs[1][0].label == 2


class TestWriteAtt:
    def test_format(self, diamond):
        assert write_att(diamond) == (
            "0 1 3 1.000000\n0 2 4 2.000000\n1 3 5 0.500000\n2 3 5 0.200000\n3\n"
        )

    def test_warns_without_finals(self, caplog):
        a = att("0 1 3 1.0\n")
        write_att(a)
        assert "no final state" in caplog.text

    def test_round_trip_preserves_path_costs(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            a = random_dag(rng)
            b = load_att(io.StringIO(write_att(a)))
            assert enumerate_paths(b) == enumerate_paths(a)


class TestDeterminism:
    def test_ok(self, diamond):
        assert validate_deterministic(diamond).ok

    def test_reports_first_violation(self):
        report = validate_deterministic(att("0 1 3 1.0\n0 2 3 2.0\n1\n2\n"))
        assert not report.ok
        assert (report.state, report.label) == (0, 3)

    def test_injected_duplicates_are_found(self):
        rng = np.random.default_rng(9)
        for _ in range(50):
            a = random_dag(rng)
            assert validate_deterministic(a).ok
            lines = write_att(a).splitlines()
            arc_lines = [l for l in lines if len(l.split()) == 4]
            src, dst, label, weight = arc_lines[int(rng.integers(len(arc_lines)))].split()
            lines.append(f"{src} {dst} {label} {float(weight) + 1.0:.6f}")
            report = validate_deterministic(load_att(io.StringIO("\n".join(lines) + "\n")))
            assert not report.ok


class TestShortestCost:
    def test_chain_and_diamond(self, chain, diamond):
        assert shortest_cost(chain) == pytest.approx(0.7)
        assert shortest_cost(diamond) == pytest.approx(1.5)

    def test_parallel_paths(self):
        assert shortest_cost(att("0 1 3 1.0\n0 1 4 0.6\n1\n")) == pytest.approx(0.6)

    def test_no_reachable_final(self, caplog):
        assert shortest_cost(att("0 1 3 1.0\n2\n")) == INF

    def test_negative_weights_rejected(self):
        with pytest.raises(AutomatonError):
            shortest_cost(att("0 1 3 -1.0\n1\n"))

    def test_matches_path_enumeration(self):
        rng = np.random.default_rng(13)
        for _ in range(100):
            a = random_dag(rng)
            paths = enumerate_paths(a)
            expected = min(paths.values()) if paths else INF
            assert shortest_cost(a) == pytest.approx(expected, abs=1e-9)


class TestSparseTuple:
    def test_serialize(self):
        assert serialize_sparse_tuple(SparseTupleWeight({2: 1.25, 0: 0.5})) == "0:0.500000,2:1.250000"
        assert serialize_sparse_tuple(SparseTupleWeight()) == "-"

    def test_parse_inverts_serialize(self):
        rng = np.random.default_rng(17)
        for _ in range(1000):
            k = int(rng.integers(0, 5))
            indices = rng.choice(8, size=k, replace=False)
            w = SparseTupleWeight({int(i): round(float(rng.uniform(-5, 5)), 6) for i in indices})
            assert parse_sparse_tuple(serialize_sparse_tuple(w)) == w

    @pytest.mark.parametrize("text", ["0:1.0,0:2.0", "0=1.0", "a:1.0", "1:x", "-1:1.0"])
    def test_parse_rejects(self, text):
        with pytest.raises(ParseError):
            parse_sparse_tuple(text)

    def test_scalar(self):
        w = SparseTupleWeight({0: 0.5, 2: 1.0})
        assert w.scalar([2.0, 9.0, 0.5]) == pytest.approx(1.5)

    def test_sparse_lattice_round_trip(self):
        text = "0 1 3 0:0.500000,1:1.000000\n1 2 4 1:0.250000\n2 0:0.100000\n"
        a = load_sparse_att(io.StringIO(text), [1.0, 2.0])
        assert a.arcs[0][0].weight == pytest.approx(2.5)
        assert a.arcs[1][0].weight == pytest.approx(0.5)
        assert a.finals[2] == pytest.approx(0.1)
        assert write_sparse_att(a) == text
