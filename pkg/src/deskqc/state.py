"""Dense state vectors, gate kernels, probabilities and seeded sampling.

Basis index ``j`` encodes ``|q0 q1 ... q(n-1)>`` with ``q0`` the most
significant bit, i.e. ``j = sum_i q_i 2**(n-i-1)``.

Spin conventions (the two are never mixed implicitly):

==========================  ============================  ======================
context                     mapping                       where
==========================  ============================  ======================
gate-based measurement      ``q = (1 - s) / 2``           :func:`ising_expectation`
annealing / QUBO            ``x = (1 + s) / 2``           :mod:`deskqc.ising`
==========================  ============================  ======================
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable, Sequence

import numpy as np

from .errors import CapacityError, ValidationError
from .gates import Gate, kernel_form

if TYPE_CHECKING:
    from .circuit import GateOp
    from .ising import IsingModel

__all__ = [
    "MAX_QUBITS",
    "StateVector",
    "BlochVector",
    "SampleRow",
    "SampleSet",
    "new_zero_state",
    "apply_gate",
    "probabilities",
    "bloch_vector",
    "inner_product",
    "sample_counts",
    "ising_expectation",
    "spins_of_basis",
    "make_rng",
]

#: Largest register new_zero_state will allocate (2**30 amplitudes = 16 GiB).
MAX_QUBITS = 30


def make_rng(seed: int | None) -> np.random.Generator:
    """The package-wide generator: numpy's PCG64 via ``default_rng``."""
    return np.random.default_rng(seed)


class StateVector:
    """Mutable pure state of ``num_qubits`` qubits."""

    __slots__ = ("num_qubits", "amplitudes")

    def __init__(self, amplitudes, num_qubits: int | None = None, *, normalize: bool = False):
        amps = np.array(amplitudes, dtype=np.complex128).reshape(-1)
        n = int(round(math.log2(amps.size))) if amps.size else 0
        if amps.size == 0 or 2**n != amps.size:
            raise ValueError(f"amplitude count {amps.size} is not a power of two")
        if num_qubits is not None and num_qubits != n:
            raise ValueError(f"expected {2**num_qubits} amplitudes, got {amps.size}")
        norm = np.linalg.norm(amps)
        if normalize:
            if norm == 0:
                raise ValueError("cannot normalize the zero vector")
            amps /= norm
        elif abs(norm - 1) > 1e-10:
            raise ValidationError(f"state is not normalized (norm {norm:.3g})")
        self.num_qubits = n
        self.amplitudes = amps

    @classmethod
    def basis(cls, bits: str | int, num_qubits: int | None = None) -> StateVector:
        """Computational basis state from a bitstring (q0 first) or an index."""
        if isinstance(bits, str):
            num_qubits = len(bits)
            index = int(bits, 2)
        else:
            if num_qubits is None:
                raise ValueError("num_qubits is required for an integer index")
            index = bits
        state = new_zero_state(num_qubits)
        state.amplitudes[0] = 0
        state.amplitudes[index] = 1
        return state

    def copy(self) -> StateVector:
        out = object.__new__(StateVector)
        out.num_qubits = self.num_qubits
        out.amplitudes = self.amplitudes.copy()
        return out

    def norm(self) -> float:
        return float(np.sqrt(np.vdot(self.amplitudes, self.amplitudes).real))

    def __len__(self):
        return self.amplitudes.size

    def __repr__(self):
        return f"StateVector(num_qubits={self.num_qubits})"


@dataclass(frozen=True)
class BlochVector:
    rx: float
    ry: float
    rz: float
    theta: float
    phi: float


@dataclass(frozen=True)
class SampleRow:
    sample: tuple[int, ...]
    num_occurrences: int
    energy: float | None = None
    chain_break_fraction: float = 0.0

    @property
    def bitstring(self) -> str:
        return "".join("1" if v > 0 else "0" for v in self.sample)


@dataclass
class SampleSet:
    """Distinct samples with occurrence counts.

    ``vartype`` is ``"BINARY"`` (values 0/1) or ``"SPIN"`` (values -1/+1).
    Rows are sorted by energy when energies are present, by sample otherwise.
    """

    rows: list[SampleRow]
    num_variables: int
    vartype: str = "BINARY"
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.vartype not in ("BINARY", "SPIN"):
            raise ValueError(f"vartype must be BINARY or SPIN, got {self.vartype!r}")
        seen = set()
        for row in self.rows:
            if row.sample in seen:
                raise ValueError(f"duplicate sample {row.sample}")
            if row.num_occurrences < 1:
                raise ValueError("num_occurrences must be >= 1")
            if len(row.sample) != self.num_variables:
                raise ValueError("sample length does not match num_variables")
            seen.add(row.sample)
        if self.rows and all(r.energy is not None for r in self.rows):
            self.rows.sort(key=lambda r: (r.energy, r.sample))
        else:
            self.rows.sort(key=lambda r: r.sample)

    @classmethod
    def from_samples(
        cls,
        samples: Iterable[Sequence[int]],
        num_variables: int,
        vartype: str = "BINARY",
        energy_fn=None,
        chain_break_fractions: Iterable[float] | None = None,
        info: dict | None = None,
    ) -> SampleSet:
        """Aggregate raw samples; chain-break fractions are averaged per distinct sample."""
        counts: dict[tuple[int, ...], int] = {}
        breaks: dict[tuple[int, ...], float] = {}
        cbf = iter(chain_break_fractions) if chain_break_fractions is not None else None
        for s in samples:
            key = tuple(int(v) for v in s)
            counts[key] = counts.get(key, 0) + 1
            if cbf is not None:
                breaks[key] = breaks.get(key, 0.0) + float(next(cbf))
        rows = [
            SampleRow(
                sample=key,
                num_occurrences=c,
                energy=None if energy_fn is None else float(energy_fn(key)),
                chain_break_fraction=breaks.get(key, 0.0) / c,
            )
            for key, c in counts.items()
        ]
        return cls(rows, num_variables, vartype, dict(info or {}))

    @property
    def num_samples(self) -> int:
        return sum(r.num_occurrences for r in self.rows)

    def counts(self) -> dict[str, int]:
        """Bitstring -> occurrences (SPIN values render +1 as '1')."""
        return {r.bitstring: r.num_occurrences for r in self.rows}

    def first(self) -> SampleRow:
        return self.rows[0]

    def to_dict(self) -> dict:
        out = {
            "vartype": self.vartype,
            "num_variables": self.num_variables,
            "num_samples": self.num_samples,
            "info": self.info,
            "rows": [
                {
                    "sample": list(r.sample),
                    "energy": r.energy,
                    "num_occurrences": r.num_occurrences,
                    "chain_break_fraction": r.chain_break_fraction,
                }
                for r in self.rows
            ],
        }
        if self.vartype == "BINARY":
            out["counts"] = self.counts()
        return out

    @classmethod
    def from_dict(cls, data: dict) -> SampleSet:
        rows = [
            SampleRow(
                sample=tuple(int(v) for v in r["sample"]),
                num_occurrences=int(r["num_occurrences"]),
                energy=None if r.get("energy") is None else float(r["energy"]),
                chain_break_fraction=float(r.get("chain_break_fraction", 0.0)),
            )
            for r in data["rows"]
        ]
        out = cls(rows, int(data["num_variables"]), data.get("vartype", "BINARY"), dict(data.get("info", {})))
        if "num_samples" in data and out.num_samples != int(data["num_samples"]):
            raise ValueError("num_samples does not match the sum of occurrences")
        return out

    def __str__(self):
        width = max(3, len(str(max(len(self.rows) - 1, 0))) + 2)
        head = " " * (width - 2) + "".join(f"{i:>3}" for i in range(self.num_variables))
        lines = [head + " energy num_oc. chain_."]
        for idx, r in enumerate(self.rows):
            vals = "".join(f"{v:>3}" for v in r.sample)
            energy = "" if r.energy is None else _short_float(r.energy)
            lines.append(f"{idx:<{width - 2}}{vals} {energy:>6} {r.num_occurrences:>7} {_short_float(r.chain_break_fraction):>7}")
        lines.append(f"['{self.vartype}', {len(self.rows)} rows, {self.num_samples} samples, {self.num_variables} variables]")
        return "\n".join(lines)


def _short_float(x: float) -> str:
    text = f"{x:.6g}"
    return text if any(c in text for c in ".einf") else text + ".0"


def new_zero_state(num_qubits: int) -> StateVector:
    if not isinstance(num_qubits, (int, np.integer)) or not 1 <= num_qubits <= MAX_QUBITS:
        raise CapacityError(f"num_qubits must be in [1, {MAX_QUBITS}] (cap {MAX_QUBITS}), got {num_qubits}")
    amps = np.zeros(2**int(num_qubits), dtype=np.complex128)
    amps[0] = 1.0
    out = object.__new__(StateVector)
    out.num_qubits = int(num_qubits)
    out.amplitudes = amps
    return out


def _check_qubits(qubits: Sequence[int], n: int) -> None:
    if len(set(qubits)) != len(qubits):
        raise IndexError(f"duplicate qubit indices {tuple(qubits)}")
    for q in qubits:
        if not 0 <= q < n:
            raise IndexError(f"qubit index {q} out of range for {n} qubits")


def _apply_1q(view: np.ndarray, u: np.ndarray, axis: int) -> None:
    """In-place 2x2 kernel along ``axis`` of a (possibly strided) view."""
    idx0: list = [slice(None)] * view.ndim
    idx1: list = [slice(None)] * view.ndim
    idx0[axis], idx1[axis] = 0, 1
    idx0, idx1 = tuple(idx0), tuple(idx1)
    if u[0, 1] == 0 and u[1, 0] == 0:
        if u[0, 0] != 1:
            view[idx0] *= u[0, 0]
        if u[1, 1] != 1:
            view[idx1] *= u[1, 1]
        return
    a0 = view[idx0].copy()
    a1 = view[idx1]
    view[idx0] = u[0, 0] * a0 + u[0, 1] * a1
    view[idx1] = u[1, 0] * a0 + u[1, 1] * a1


def apply_to_tensor(tensor: np.ndarray, matrix: np.ndarray, controls: Sequence[int], targets: Sequence[int]) -> None:
    """In-place kernel on an array whose first ``n`` axes are the qubits.

    Trailing axes (if any) are batch axes, which lets the same kernel build
    dense unitaries column-by-column. Only amplitudes with every control bit
    set are read or written.
    """
    index: list = [slice(None)] * tensor.ndim
    for c in controls:
        index[c] = 1
    sub = tensor[tuple(index)]  # basic indexing: a view
    local = [t - sum(1 for c in controls if c < t) for t in targets]
    if len(targets) == 1:
        _apply_1q(sub, matrix, local[0])
        return
    k = len(targets)
    moved = np.moveaxis(sub, local, list(range(k)))
    result = matrix @ moved.reshape(2**k, -1)
    np.copyto(moved, result.reshape(moved.shape))


def apply_matrix(state: StateVector, matrix: np.ndarray, qubits: Sequence[int], num_controls: int = 0) -> StateVector:
    """Apply ``matrix`` to ``qubits`` (controls first, then targets) in place."""
    n = state.num_qubits
    qubits = [int(q) for q in qubits]
    _check_qubits(qubits, n)
    matrix = np.asarray(matrix, dtype=complex)
    k = len(qubits) - num_controls
    if matrix.shape != (2**k, 2**k):
        raise ValueError(f"matrix shape {matrix.shape} does not match {k} target(s)")
    apply_to_tensor(state.amplitudes.reshape((2,) * n), matrix, qubits[:num_controls], qubits[num_controls:])
    return state


def apply_gate(state: StateVector, op: GateOp | Gate, qubits: Sequence[int] | None = None) -> StateVector:
    """Apply a gate operation to ``state`` in place and return it."""
    if isinstance(op, Gate):
        gate = op
        if qubits is None:
            raise ValueError("qubits are required when passing a bare Gate")
    else:
        if op.barrier:
            return state
        gate, qubits = op.gate, op.qubits
    if len(qubits) != gate.num_qubits:
        raise ValueError(f"{gate.name} acts on {gate.num_qubits} qubit(s), got {len(qubits)}")
    num_controls, matrix = kernel_form(gate)
    return apply_matrix(state, matrix, qubits, num_controls)


def probabilities(state: StateVector) -> np.ndarray:
    amps = state.amplitudes
    return amps.real**2 + amps.imag**2


def bloch_vector(state: StateVector) -> BlochVector:
    if state.num_qubits != 1:
        raise ValueError("bloch_vector needs a single-qubit state")
    a, b = state.amplitudes
    cross = np.conj(a) * b
    rx, ry = 2 * cross.real, 2 * cross.imag
    rz = abs(a) ** 2 - abs(b) ** 2
    theta = 2 * math.atan2(abs(b), abs(a))
    if math.sin(theta) < 1e-12:
        phi = 0.0
    else:
        phi = (np.angle(b) - np.angle(a)) % (2 * math.pi)
        if phi >= 2 * math.pi:
            phi = 0.0
    return BlochVector(float(rx), float(ry), float(rz), float(theta), float(phi))


def inner_product(a: StateVector, b: StateVector) -> complex:
    """``<a|b>``, conjugating ``a``."""
    if a.num_qubits != b.num_qubits:
        raise ValueError(f"size mismatch: {a.num_qubits} vs {b.num_qubits} qubits")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def sample_counts(state: StateVector, shots: int, seed: int | None) -> SampleSet:
    """Draw ``shots`` basis states by inverse-CDF sampling of ``|psi_j|^2``."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    rng = make_rng(seed)
    cdf = np.cumsum(probabilities(state))
    draws = rng.random(shots) * cdf[-1]
    indices = np.searchsorted(cdf, draws, side="right")
    np.minimum(indices, cdf.size - 1, out=indices)
    values, counts = np.unique(indices, return_counts=True)
    n = state.num_qubits
    rows = [
        SampleRow(sample=tuple(int(b) for b in format(int(j), f"0{n}b")), num_occurrences=int(c))
        for j, c in zip(values, counts)
    ]
    return SampleSet(rows, n, "BINARY", {"shots": shots, "seed": seed})


def spins_of_basis(num_qubits: int) -> np.ndarray:
    """``(2**n, n)`` array of sigma-z eigenvalues: bit 0 -> +1, bit 1 -> -1."""
    j = np.arange(2**num_qubits)[:, None]
    shifts = np.arange(num_qubits - 1, -1, -1)[None, :]
    bits = (j >> shifts) & 1
    return (1 - 2 * bits).astype(np.int8)


def ising_diagonal(model: IsingModel, num_qubits: int) -> np.ndarray:
    """Energy of every basis state under ``q = (1 - s) / 2``."""
    if model.num_variables > num_qubits:
        raise IndexError(f"model has {model.num_variables} variables but state has {num_qubits} qubits")
    n = num_qubits
    j = np.arange(2**n)
    energy = np.full(2**n, float(model.offset))

    def spin(i):
        return 1.0 - 2.0 * ((j >> (n - 1 - i)) & 1)

    for i, hi in model.h.items():
        energy += hi * spin(i)
    for (i, k), jik in model.J.items():
        energy += jik * spin(i) * spin(k)
    return energy


def ising_expectation(state: StateVector, model: IsingModel) -> float:
    """``<psi| E(sigma^z) |psi>`` with spin +1 for qubit value 0."""
    return float(probabilities(state) @ ising_diagonal(model, state.num_qubits))
