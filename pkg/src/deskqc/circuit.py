"""Circuit representation, simulation and dense-unitary extraction."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence, overload

import numpy as np

from .errors import CapacityError
from .gates import Gate, dagger, kernel_form
from .state import SampleRow, SampleSet, StateVector, _check_qubits, apply_gate, apply_to_tensor, new_zero_state

__all__ = [
    "GateOp",
    "Circuit",
    "MAX_UNITARY_QUBITS",
    "simulate",
    "to_unitary",
    "inverse",
    "compose",
    "reverse_bit_ordering",
]

#: to_unitary refuses registers wider than this (4096 x 4096 complex = 256 MiB).
MAX_UNITARY_QUBITS = 12


@dataclass(frozen=True)
class GateOp:
    """One gate applied to an ordered qubit list (controls before targets).

    A barrier is a ``GateOp`` with ``barrier=True`` and no gate; it has no
    numerical effect.
    """

    gate: Gate | None
    qubits: tuple[int, ...]
    barrier: bool = False

    def __post_init__(self):
        qubits = tuple(int(q) for q in self.qubits)
        object.__setattr__(self, "qubits", qubits)
        if len(set(qubits)) != len(qubits):
            raise IndexError(f"duplicate qubit indices {qubits}")
        if any(q < 0 for q in qubits):
            raise IndexError(f"negative qubit index in {qubits}")
        if self.barrier:
            if self.gate is not None:
                raise ValueError("a barrier carries no gate")
        elif self.gate is None:
            raise ValueError("GateOp needs a gate")
        elif len(qubits) != self.gate.num_qubits:
            raise ValueError(f"{self.gate.name} acts on {self.gate.num_qubits} qubit(s), got {len(qubits)}")

    @classmethod
    def make_barrier(cls, qubits: Iterable[int]) -> GateOp:
        return cls(None, tuple(qubits), barrier=True)


@dataclass(frozen=True)
class Circuit:
    num_qubits: int
    ops: tuple[GateOp, ...] = field(default=())
    measure_all: bool = False

    def __post_init__(self):
        if self.num_qubits < 1:
            raise ValueError("a circuit needs at least one qubit")
        ops = tuple(self.ops)
        object.__setattr__(self, "ops", ops)
        for op in ops:
            for q in op.qubits:
                if q >= self.num_qubits:
                    raise IndexError(f"qubit {q} out of range for {self.num_qubits} qubits")

    def __len__(self):
        return len(self.ops)

    def gate_ops(self) -> list[GateOp]:
        return [op for op in self.ops if not op.barrier]

    def append(self, gate: Gate | str, *qubits: int, params: Sequence = ()) -> Circuit:
        """Return a new circuit with one more gate."""
        if isinstance(gate, str):
            gate = Gate(gate, tuple(params))
        return Circuit(self.num_qubits, self.ops + (GateOp(gate, qubits),), self.measure_all)


class CircuitBuilder:
    """Mutable helper for assembling circuits gate by gate.

    >>> c = CircuitBuilder(2).h(0).t(0).h(0).cnot(0, 1).build()
    """

    def __init__(self, num_qubits: int):
        self.num_qubits = num_qubits
        self.ops: list[GateOp] = []
        self.measure = False

    def add(self, name: str, qubits: Sequence[int], params: Sequence = ()) -> CircuitBuilder:
        self.ops.append(GateOp(Gate(name, tuple(params)), tuple(qubits)))
        return self

    def extend(self, ops: Iterable[GateOp]) -> CircuitBuilder:
        self.ops.extend(ops)
        return self

    def barrier(self) -> CircuitBuilder:
        self.ops.append(GateOp.make_barrier(range(self.num_qubits)))
        return self

    def measure_all(self) -> CircuitBuilder:
        self.measure = True
        return self

    def build(self) -> Circuit:
        return Circuit(self.num_qubits, tuple(self.ops), self.measure)

    # single-qubit shorthands
    def i(self, q): return self.add("I", (q,))
    def h(self, q): return self.add("H", (q,))
    def x(self, q): return self.add("X", (q,))
    def y(self, q): return self.add("Y", (q,))
    def z(self, q): return self.add("Z", (q,))
    def s(self, q): return self.add("S", (q,))
    def sdg(self, q): return self.add("Sdg", (q,))
    def t(self, q): return self.add("T", (q,))
    def tdg(self, q): return self.add("Tdg", (q,))
    def rx(self, theta, q): return self.add("Rx", (q,), (theta,))
    def ry(self, theta, q): return self.add("Ry", (q,), (theta,))
    def rz(self, theta, q): return self.add("Rz", (q,), (theta,))

    # multi-qubit shorthands
    def cnot(self, c, t): return self.add("CNOT", (c, t))
    def cz(self, c, t): return self.add("CZ", (c, t))
    def cs(self, c, t): return self.add("CS", (c, t))
    def cu(self, c, t, k): return self.add("CU_k", (c, t), (k,))
    def cudg(self, c, t, k): return self.add("CU_kdg", (c, t), (k,))
    def toffoli(self, c1, c2, t): return self.add("Toffoli", (c1, c2, t))


def simulate(circuit: Circuit, initial: StateVector | None = None) -> StateVector:
    """Run ``circuit`` left to right on a copy of ``initial`` (default ``|0...0>``)."""
    if initial is None:
        state = new_zero_state(circuit.num_qubits)
    else:
        if initial.num_qubits != circuit.num_qubits:
            raise ValueError(f"size mismatch: circuit has {circuit.num_qubits} qubits, state has {initial.num_qubits}")
        state = initial.copy()
    for op in circuit.ops:
        if not op.barrier:
            apply_gate(state, op)
    return state


def to_unitary(circuit: Circuit) -> np.ndarray:
    """Dense ``2**n x 2**n`` matrix of the circuit (first op rightmost)."""
    n = circuit.num_qubits
    if n > MAX_UNITARY_QUBITS:
        raise CapacityError(f"to_unitary is capped at {MAX_UNITARY_QUBITS} qubits, circuit has {n}")
    dim = 2**n
    u = np.eye(dim, dtype=complex)
    tensor = u.reshape((2,) * n + (dim,))
    for op in circuit.ops:
        if op.barrier:
            continue
        _check_qubits(op.qubits, n)
        num_controls, matrix = kernel_form(op.gate)
        apply_to_tensor(tensor, matrix, op.qubits[:num_controls], op.qubits[num_controls:])
    return u


def inverse(circuit: Circuit) -> Circuit:
    ops = tuple(op if op.barrier else GateOp(dagger(op.gate), op.qubits) for op in reversed(circuit.ops))
    return Circuit(circuit.num_qubits, ops, circuit.measure_all)


def compose(first: Circuit, second: Circuit) -> Circuit:
    """Circuit that runs ``first`` then ``second``."""
    if first.num_qubits != second.num_qubits:
        raise ValueError("cannot compose circuits of different widths")
    return Circuit(first.num_qubits, first.ops + second.ops, first.measure_all or second.measure_all)


def _bit_reverse_permutation(n: int) -> np.ndarray:
    j = np.arange(2**n)
    out = np.zeros_like(j)
    for i in range(n):
        out |= ((j >> i) & 1) << (n - 1 - i)
    return out


@overload
def reverse_bit_ordering(x: StateVector) -> StateVector: ...
@overload
def reverse_bit_ordering(x: SampleSet) -> SampleSet: ...
@overload
def reverse_bit_ordering(x: str) -> str: ...
@overload
def reverse_bit_ordering(x: dict) -> dict: ...


def reverse_bit_ordering(x):
    """Convert between ``|q0...q(n-1)>`` and ``|q(n-1)...q0>`` orderings.

    Accepts a state vector, a sample set, a single bitstring or a
    bitstring-keyed counts dict. The operation is an involution.
    """
    if isinstance(x, StateVector):
        out = x.copy()
        out.amplitudes[_bit_reverse_permutation(x.num_qubits)] = x.amplitudes
        return out
    if isinstance(x, SampleSet):
        rows = [
            SampleRow(r.sample[::-1], r.num_occurrences, r.energy, r.chain_break_fraction)
            for r in x.rows
        ]
        return SampleSet(rows, x.num_variables, x.vartype, dict(x.info))
    if isinstance(x, str):
        return x[::-1]
    if isinstance(x, dict):
        return {k[::-1]: v for k, v in x.items()}
    raise TypeError(f"cannot reverse bit ordering of {type(x).__name__}")
