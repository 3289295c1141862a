"""Reader and writer for the line-oriented ``.jq`` circuit language.

One instruction per line, whitespace-separated tokens, ``#`` to end of line
is a comment. Mnemonics are case-insensitive::

    QUBITS 4            # optional register width
    H 0
    S+ 1                # S dagger; T+ likewise
    +X 2                # also -X, +Y, -Y
    R 2 3               # phase 2*pi/2**3 on qubit 2; "R 2 -3" is its dagger
    U 0 1 2             # controlled R(2), control 0, target 1
    U3 0 pi/2 0 -pi     # U1 n l, U2 n p l, U3 n t p l
    CNOT 0 1
    TOFFOLI 0 1 2
    RX 0 0.25           # RX/RY/RZ n theta
    BARRIER             # optional qubit list; no effect on the state
    MEASURE             # sets Circuit.measure_all

Angles are decimal literals or pi multiples such as ``pi``, ``-pi/4``,
``2*pi`` or ``0.5*pi/3``. The aliases SDG, TDG, CX and CCX are accepted.
"""
from __future__ import annotations

import math
import os
import re
from dataclasses import dataclass

from .circuit import Circuit, GateOp
from .errors import DeskQCError
from .gates import Gate

__all__ = ["ParseError", "UnsupportedGateError", "parse_circuit", "serialize_circuit", "read_circuit", "write_circuit"]


class ParseError(DeskQCError, ValueError):
    """Syntax or semantic error at a 1-based ``line``/``column`` of the source."""

    def __init__(self, line: int, column: int, message: str, token: str = ""):
        self.line = line
        self.column = column
        self.message = message
        self.token = token
        where = f"line {line}, column {column}"
        super().__init__(f"{where}: {message}" + (f" (got {token!r})" if token else ""))


class UnsupportedGateError(DeskQCError, ValueError):
    """A circuit op has no textual form."""

    def __init__(self, index: int, name: str):
        self.index = index
        self.name = name
        super().__init__(f"op {index} ({name}) cannot be written in the text format")


_DECIMAL = re.compile(r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?$")
_PI_FORM = re.compile(r"([+-]?)(?:((?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)\*)?pi(?:/((?:\d+\.?\d*|\.\d+)))?$", re.I)
_INT = re.compile(r"[+-]?\d+$")


@dataclass
class _Token:
    text: str
    column: int


def _tokenize(line: str) -> list[_Token]:
    code = line.split("#", 1)[0]
    return [_Token(m.group(), m.start() + 1) for m in re.finditer(r"\S+", code)]


def parse_angle(text: str) -> float:
    """Parse a decimal or pi-scaled angle literal; raise ``ValueError`` otherwise."""
    if _DECIMAL.match(text):
        return float(text)
    m = _PI_FORM.match(text)
    if m:
        sign, coef, denom = m.groups()
        value = math.pi * (float(coef) if coef else 1.0)
        if denom:
            d = float(denom)
            if d == 0:
                raise ValueError("division by zero in angle")
            value /= d
        return -value if sign == "-" else value
    raise ValueError(f"not an angle: {text!r}")


# mnemonic -> (gate name or special marker, qubit count, argument kinds)
_FIXED = {
    "I": "I", "H": "H", "X": "X", "Y": "Y", "Z": "Z", "S": "S", "T": "T",
    "S+": "Sdg", "SDG": "Sdg", "T+": "Tdg", "TDG": "Tdg",
    "+X": "PlusX", "-X": "MinusX", "+Y": "PlusY", "-Y": "MinusY",
}
_ANGLE_GATES = {"U1": ("U1", 1), "U2": ("U2", 2), "U3": ("U3", 3), "RX": ("Rx", 1), "RY": ("Ry", 1), "RZ": ("Rz", 1)}


class _LineParser:
    def __init__(self, lineno: int, tokens: list[_Token]):
        self.lineno = lineno
        self.tokens = tokens
        self.pos = 1
        self.qubit_tokens: list[tuple[int, _Token]] = []

    def error(self, message: str, tok: _Token | None = None) -> ParseError:
        if tok is None:
            last = self.tokens[-1]
            return ParseError(self.lineno, last.column + len(last.text), message)
        return ParseError(self.lineno, tok.column, message, tok.text)

    def next(self, what: str) -> _Token:
        if self.pos >= len(self.tokens):
            raise self.error(f"expected {what}")
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def qubit(self) -> int:
        tok = self.next("qubit index")
        if not _INT.match(tok.text):
            raise self.error("expected qubit index (non-negative integer)", tok)
        q = int(tok.text)
        if q < 0:
            raise self.error("negative qubit index", tok)
        self.qubit_tokens.append((q, tok))
        return q

    def angle(self) -> float:
        tok = self.next("angle")
        try:
            return parse_angle(tok.text)
        except ValueError:
            raise self.error("expected angle (decimal or pi-multiple)", tok) from None

    def signed_k(self) -> tuple[int, bool]:
        """Integer k for the R/U family; a leading minus selects the dagger."""
        tok = self.next("integer k")
        if not _INT.match(tok.text):
            raise self.error("expected integer k", tok)
        return abs(int(tok.text)), tok.text.startswith("-")

    def done(self):
        if self.pos < len(self.tokens):
            raise self.error("unexpected extra argument", self.tokens[self.pos])


def parse_circuit(source: str) -> Circuit:
    """Parse program text into a :class:`Circuit`; fail fast on the first error."""
    declared: int | None = None
    header_tok: tuple[int, _Token] | None = None
    ops: list[tuple[int, GateOp | None, tuple[int, ...], list[tuple[int, _Token]]]] = []
    measure = False
    max_index = -1

    for lineno, raw in enumerate(source.splitlines(), start=1):
        tokens = _tokenize(raw)
        if not tokens:
            continue
        p = _LineParser(lineno, tokens)
        head = tokens[0]
        mnem = head.text.upper()

        if mnem == "QUBITS":
            if declared is not None or ops or measure:
                raise p.error("QUBITS header must come first and only once", head)
            tok = p.next("qubit count")
            if not _INT.match(tok.text) or int(tok.text) < 1:
                raise p.error("expected positive qubit count", tok)
            p.done()
            declared = int(tok.text)
            header_tok = (lineno, tok)
            continue
        if mnem == "MEASURE":
            p.done()
            measure = True
            continue
        if mnem == "BARRIER":
            qubits = []
            while p.pos < len(tokens):
                qubits.append(p.qubit())
            ops.append((lineno, None, tuple(qubits), p.qubit_tokens))
            max_index = max([max_index, *qubits])
            continue

        if mnem in _FIXED:
            gate = Gate(_FIXED[mnem])
            qubits = (p.qubit(),)
        elif mnem in _ANGLE_GATES:
            name, nargs = _ANGLE_GATES[mnem]
            qubits = (p.qubit(),)
            gate = Gate(name, tuple(p.angle() for _ in range(nargs)))
        elif mnem == "R":
            qubits = (p.qubit(),)
            k, dag = p.signed_k()
            gate = Gate("Rkdg" if dag else "Rk", (k,))
        elif mnem == "U":
            qubits = (p.qubit(), p.qubit())
            k, dag = p.signed_k()
            gate = Gate("CU_kdg" if dag else "CU_k", (k,))
        elif mnem in ("CNOT", "CX"):
            qubits = (p.qubit(), p.qubit())
            gate = Gate("CNOT")
        elif mnem in ("TOFFOLI", "CCX"):
            qubits = (p.qubit(), p.qubit(), p.qubit())
            gate = Gate("Toffoli")
        else:
            raise p.error("unknown mnemonic", head)
        p.done()
        if len(set(qubits)) != len(qubits):
            repeat = next(tok for i, (q, tok) in enumerate(p.qubit_tokens) if q in qubits[:i])
            raise p.error("qubit indices must be distinct", repeat)
        max_index = max(max_index, *qubits)
        ops.append((lineno, GateOp(gate, qubits), qubits, p.qubit_tokens))

    if declared is None:
        if max_index < 0:
            raise ParseError(1, 1, "empty program needs a QUBITS header")
        num_qubits = max_index + 1
    else:
        num_qubits = declared
        for lineno, _, _, located in ops:
            for q, tok in located:
                if q >= declared:
                    raise ParseError(lineno, tok.column, f"qubit index {q} >= QUBITS {declared}", tok.text)

    final = []
    for _, op, qubits, _ in ops:
        if op is None:
            op = GateOp.make_barrier(qubits or range(num_qubits))
        final.append(op)
    return Circuit(num_qubits, tuple(final), measure)


_WRITE_FIXED = {
    "I": "I", "H": "H", "X": "X", "Y": "Y", "Z": "Z", "S": "S", "T": "T",
    "Sdg": "S+", "Tdg": "T+", "PlusX": "+X", "MinusX": "-X", "PlusY": "+Y", "MinusY": "-Y",
    "CNOT": "CNOT", "Toffoli": "TOFFOLI",
}
_WRITE_ANGLE = {"U1": "U1", "U2": "U2", "U3": "U3", "Rx": "RX", "Ry": "RY", "Rz": "RZ"}


def _fmt_angle(x: float) -> str:
    return format(x, ".17g")


def serialize_circuit(circuit: Circuit) -> str:
    """Emit text that :func:`parse_circuit` maps back to an equal circuit."""
    lines = [f"QUBITS {circuit.num_qubits}"]
    for index, op in enumerate(circuit.ops):
        qs = " ".join(str(q) for q in op.qubits)
        if op.barrier:
            lines.append(f"BARRIER {qs}")
            continue
        name, params = op.gate.name, op.gate.params
        if name in _WRITE_FIXED:
            lines.append(f"{_WRITE_FIXED[name]} {qs}")
        elif name in _WRITE_ANGLE:
            lines.append(" ".join([_WRITE_ANGLE[name], qs, *map(_fmt_angle, params)]))
        elif name in ("Rk", "CU_k"):
            lines.append(f"{'R' if name == 'Rk' else 'U'} {qs} {params[0]}")
        elif name in ("Rkdg", "CU_kdg"):
            lines.append(f"{'R' if name == 'Rkdg' else 'U'} {qs} -{params[0]}")
        else:
            raise UnsupportedGateError(index, name)
    if circuit.measure_all:
        lines.append("MEASURE")
    return "\n".join(lines) + "\n"


def read_circuit(path: str | os.PathLike) -> Circuit:
    """Read a UTF-8 ``.jq`` file (LF or CRLF line endings)."""
    with open(path, encoding="utf-8-sig") as fh:
        return parse_circuit(fh.read())


def write_circuit(circuit: Circuit, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(serialize_circuit(circuit))
