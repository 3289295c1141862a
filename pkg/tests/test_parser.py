import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _helpers import ADDER_SOURCE, HTH_CNOT_SOURCE, random_circuit
from deskqc.circuit import Circuit, CircuitBuilder, GateOp
from deskqc.gates import Gate
from deskqc.parser import (
    ParseError,
    UnsupportedGateError,
    parse_angle,
    parse_circuit,
    read_circuit,
    serialize_circuit,
    write_circuit,
)


class TestParse:
    def test_hth_cnot(self):
        c = parse_circuit(HTH_CNOT_SOURCE)
        assert c == CircuitBuilder(2).h(0).t(0).h(0).cnot(0, 1).build()

    def test_rk_with_header(self):
        c = parse_circuit("QUBITS 3\nR 2 3")
        assert c.num_qubits == 3
        assert c.ops == (GateOp(Gate("Rk", (3,)), (2,)),)

    @pytest.mark.parametrize(
        "line,gate,qubits",
        [
            ("S+ 0", Gate("Sdg"), (0,)),
            ("sdg 0", Gate("Sdg"), (0,)),
            ("T+ 1", Gate("Tdg"), (1,)),
            ("+X 0", Gate("PlusX"), (0,)),
            ("-X 0", Gate("MinusX"), (0,)),
            ("+Y 0", Gate("PlusY"), (0,)),
            ("-Y 0", Gate("MinusY"), (0,)),
            ("R 0 -2", Gate("Rkdg", (2,)), (0,)),
            ("R 0 -0", Gate("Rkdg", (0,)), (0,)),
            ("U 1 0 3", Gate("CU_k", (3,)), (1, 0)),
            ("U 0 1 -3", Gate("CU_kdg", (3,)), (0, 1)),
            ("U1 0 pi/4", Gate("U1", (math.pi / 4,)), (0,)),
            ("U2 0 0.5 -pi", Gate("U2", (0.5, -math.pi)), (0,)),
            ("U3 0 2*pi 0 1e-3", Gate("U3", (2 * math.pi, 0.0, 1e-3)), (0,)),
            ("rx 0 0.25", Gate("Rx", (0.25,)), (0,)),
            ("cx 0 1", Gate("CNOT"), (0, 1)),
            ("Toffoli 2 0 1", Gate("Toffoli"), (2, 0, 1)),
            ("ccx 0 1 2", Gate("Toffoli"), (0, 1, 2)),
        ],
    )
    def test_mnemonics(self, line, gate, qubits):
        c = parse_circuit("QUBITS 3\n" + line)
        assert c.ops == (GateOp(gate, qubits),)

    def test_comments_blank_lines_and_crlf(self):
        c = parse_circuit("# header\r\n\r\nH 0   # trailing\r\n  X 1\r\n")
        assert [op.gate.name for op in c.ops] == ["H", "X"]
        assert c.num_qubits == 2

    def test_width_without_header(self):
        assert parse_circuit("H 4").num_qubits == 5

    def test_barrier_and_measure(self):
        c = parse_circuit(ADDER_SOURCE)
        assert c.measure_all
        assert c.num_qubits == 4
        assert sum(op.barrier for op in c.ops) == 1
        assert len(c.gate_ops()) == 21

    @pytest.mark.parametrize(
        "text,value",
        [("0.5", 0.5), ("-2", -2.0), ("pi", math.pi), ("-pi/4", -math.pi / 4),
         ("2*pi", 2 * math.pi), ("0.5*pi/3", 0.5 * math.pi / 3), ("1e-3", 1e-3), ("+PI", math.pi)],
    )
    def test_angles(self, text, value):
        assert parse_angle(text) == pytest.approx(value, rel=1e-15)


class TestErrors:
    @pytest.mark.parametrize(
        "source,line,column,fragment",
        [
            ("FOO 0", 1, 1, "unknown"),
            ("H 0\n  BAR 1", 2, 3, "unknown"),
            ("H -1", 1, 3, "negative"),
            ("QUBITS 2\nH 2", 2, 3, ">="),
            ("CNOT 0", 1, 7, "qubit"),
            ("CNOT 1 1", 1, 8, "distinct"),
            ("H 0 1", 1, 5, "extra"),
            ("RX 0 abc", 1, 6, "angle"),
            ("R 0 x", 1, 5, "integer"),
            ("H 0\nQUBITS 2", 2, 1, "QUBITS"),
            ("", 1, 1, "QUBITS"),
        ],
    )
    def test_located_errors(self, source, line, column, fragment):
        with pytest.raises(ParseError) as info:
            parse_circuit(source)
        err = info.value
        assert (err.line, err.column) == (line, column)
        assert fragment.lower() in str(err).lower()

    def test_fail_fast_reports_first(self):
        with pytest.raises(ParseError) as info:
            parse_circuit("H 0\nFOO 1\nBAR 2")
        assert info.value.line == 2
        assert info.value.token == "FOO"


class TestSerialize:
    def test_hth_cnot(self):
        text = serialize_circuit(parse_circuit(HTH_CNOT_SOURCE))
        assert text.splitlines() == ["QUBITS 2", "H 0", "T 0", "H 0", "CNOT 0 1"]

    def test_custom_rejected_with_index(self):
        c = Circuit(1, (GateOp(Gate("H"), (0,)), GateOp(Gate("Custom1Q", np.eye(2)), (0,))))
        with pytest.raises(UnsupportedGateError) as info:
            serialize_circuit(c)
        assert info.value.index == 1

    def test_adder_round_trip(self):
        c = parse_circuit(ADDER_SOURCE)
        assert parse_circuit(serialize_circuit(c)) == c

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 6), st.integers(0, 2**32 - 1))
    def test_round_trip_random(self, n, seed):
        c = random_circuit(np.random.default_rng(seed), n, 50)
        assert parse_circuit(serialize_circuit(c)) == c

    def test_file_round_trip(self, tmp_path):
        c = parse_circuit(ADDER_SOURCE)
        path = tmp_path / "adder.jq"
        write_circuit(c, path)
        assert read_circuit(path) == c

    def test_reads_bom(self, tmp_path):
        path = tmp_path / "bom.jq"
        path.write_bytes(b"\xef\xbb\xbfH 0\n")
        assert read_circuit(path).ops == (GateOp(Gate("H"), (0,)),)
