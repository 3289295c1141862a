"""QFT, the Draper adder and QAOA: circuit builders, landscape scan, optimizer."""
from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass
from typing import Sequence, TextIO

import numpy as np
from scipy.optimize import minimize

from .circuit import Circuit, CircuitBuilder, GateOp, inverse, simulate
from .errors import ValidationError
from .gates import Gate
from .ising import IsingModel
from .state import ising_diagonal, ising_expectation, probabilities

__all__ = [
    "QaoaParams",
    "QaoaResult",
    "Landscape",
    "build_qft",
    "qft_ops",
    "build_draper_adder",
    "build_qaoa_circuit",
    "qaoa_energy",
    "qaoa_landscape",
    "qaoa_optimize",
    "default_grids",
]

MAX_ADDER_BITS = 6


def qft_ops(qubits: Sequence[int], include_swaps: bool = True) -> list[GateOp]:
    """Gate list of the QFT on ``qubits`` (first entry = most significant bit)."""
    qubits = [int(q) for q in qubits]
    if not qubits:
        raise ValidationError("QFT needs at least one qubit")
    if len(set(qubits)) != len(qubits):
        raise ValidationError(f"duplicate QFT qubits {qubits}")
    ops = []
    n = len(qubits)
    for i, target in enumerate(qubits):
        ops.append(GateOp(Gate("H"), (target,)))
        for j in range(i + 1, n):
            ops.append(GateOp(Gate("CU_k", (j - i + 1,)), (qubits[j], target)))
    if include_swaps:
        for i in range(n // 2):
            a, b = qubits[i], qubits[n - 1 - i]
            ops += [GateOp(Gate("CNOT"), (a, b)), GateOp(Gate("CNOT"), (b, a)), GateOp(Gate("CNOT"), (a, b))]
    return ops


def build_qft(qubits: Sequence[int], include_swaps: bool = True, num_qubits: int | None = None) -> Circuit:
    """QFT circuit ``|j> -> 2**(-N/2) sum_k exp(2 pi i j k / 2**N) |k>``.

    Without swaps the output register comes out bit-reversed, which is
    harmless when an inverse QFT without swaps follows.
    """
    ops = qft_ops(qubits, include_swaps)
    width = num_qubits if num_qubits is not None else max(qubits) + 1
    return Circuit(width, tuple(ops))


def build_draper_adder(register_bits: int) -> Circuit:
    """Adder ``|l>|j> -> |l>|(j + l) mod 2**m>`` on ``2m`` qubits.

    Qubits ``0..m-1`` hold ``l`` and ``m..2m-1`` hold ``j``, most significant
    bit first. The sum is accumulated as controlled phases between two QFTs.
    """
    m = int(register_bits)
    if not 1 <= m <= MAX_ADDER_BITS:
        raise ValidationError(f"register_bits must be in 1..{MAX_ADDER_BITS}, got {register_bits}")
    l_reg = list(range(m))
    b_reg = list(range(m, 2 * m))
    forward = qft_ops(b_reg, include_swaps=False)
    phases = []
    for i, target in enumerate(b_reg):
        for r in range(i, m):
            phases.append(GateOp(Gate("CU_k", (r + 1 - i,)), (l_reg[r], target)))
    backward = inverse(Circuit(2 * m, tuple(forward))).ops
    return Circuit(2 * m, tuple(forward) + tuple(phases) + backward)


@dataclass(frozen=True)
class QaoaParams:
    betas: tuple[float, ...]
    gammas: tuple[float, ...]

    def __post_init__(self):
        betas = tuple(float(b) for b in self.betas)
        gammas = tuple(float(g) for g in self.gammas)
        if len(betas) != len(gammas) or not betas:
            raise ValidationError("need p >= 1 betas and the same number of gammas")
        object.__setattr__(self, "betas", betas)
        object.__setattr__(self, "gammas", gammas)

    @property
    def p(self) -> int:
        return len(self.betas)

    def to_vector(self) -> np.ndarray:
        return np.array(self.betas + self.gammas)

    @classmethod
    def from_vector(cls, x: Sequence[float]) -> QaoaParams:
        x = list(x)
        half = len(x) // 2
        return cls(tuple(x[:half]), tuple(x[half:]))

    def extend(self, beta: float, gamma: float) -> QaoaParams:
        """Append one more layer, e.g. to warm-start order ``p + 1``."""
        return QaoaParams(self.betas + (beta,), self.gammas + (gamma,))


def _check_contiguous(model: IsingModel) -> None:
    used = set(model.h) | {i for pair in model.J for i in pair}
    if used and max(used) >= model.num_variables:
        raise ValidationError("model indices must be contiguous from 0")
    if model.num_variables < 1:
        raise ValidationError("QAOA needs at least one variable")


def build_qaoa_circuit(model: IsingModel, params: QaoaParams) -> Circuit:
    """Layered QAOA circuit: H on all qubits, then ``p`` weighting/mixing blocks.

    Couplings use CNOT, Rz(2 gamma J), CNOT; zero coefficients emit nothing.
    """
    _check_contiguous(model)
    n = model.num_variables
    b = CircuitBuilder(n)
    for q in range(n):
        b.h(q)
    for beta, gamma in zip(params.betas, params.gammas):
        for i, hi in model.h.items():
            b.rz(2 * gamma * hi, i)
        for (i, j), jij in model.J.items():
            b.cnot(i, j).rz(2 * gamma * jij, j).cnot(i, j)
        for q in range(n):
            b.rx(2 * beta, q)
    return b.build()


def qaoa_energy(model: IsingModel, params: QaoaParams) -> float:
    """Exact ``<E>`` of the QAOA state (gate-based spin convention)."""
    return ising_expectation(simulate(build_qaoa_circuit(model, params)), model)


@dataclass
class Landscape:
    beta_grid: np.ndarray
    gamma_grid: np.ndarray
    energy: np.ndarray
    success_probability: np.ndarray

    def argmin_energy(self) -> tuple[float, float, float]:
        i, j = np.unravel_index(np.argmin(self.energy), self.energy.shape)
        return float(self.beta_grid[i]), float(self.gamma_grid[j]), float(self.energy[i, j])

    def argmax_success(self) -> tuple[float, float, float]:
        i, j = np.unravel_index(np.argmax(self.success_probability), self.success_probability.shape)
        return float(self.beta_grid[i]), float(self.gamma_grid[j]), float(self.success_probability[i, j])

    def write_csv(self, fh: TextIO) -> None:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["beta", "gamma", "energy", "success_probability"])
        for i, beta in enumerate(self.beta_grid):
            for j, gamma in enumerate(self.gamma_grid):
                writer.writerow([repr(float(beta)), repr(float(gamma)),
                                 repr(float(self.energy[i, j])), repr(float(self.success_probability[i, j]))])

    def to_csv(self, path: str | os.PathLike) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            self.write_csv(fh)


def default_grids(num_beta: int = 64, num_gamma: int = 128) -> tuple[np.ndarray, np.ndarray]:
    """Uniform grids over ``beta in [0, pi)`` and ``gamma in [0, 2 pi)``."""
    return np.arange(num_beta) * (math.pi / num_beta), np.arange(num_gamma) * (2 * math.pi / num_gamma)


def qaoa_landscape(model: IsingModel, beta_grid, gamma_grid, target: str) -> Landscape:
    """Simulate the ``p = 1`` circuit at every grid point.

    ``target`` is the bitstring ``q0 q1 ...`` whose probability is recorded
    as the success probability.
    """
    n = model.num_variables
    if len(target) != n or set(target) - {"0", "1"}:
        raise ValidationError(f"target must be a {n}-bit string, got {target!r}")
    t_index = int(target, 2)
    betas = np.asarray(beta_grid, dtype=float)
    gammas = np.asarray(gamma_grid, dtype=float)
    diag = ising_diagonal(model, n)
    energy = np.empty((betas.size, gammas.size))
    success = np.empty_like(energy)
    for i, beta in enumerate(betas):
        for j, gamma in enumerate(gammas):
            probs = probabilities(simulate(build_qaoa_circuit(model, QaoaParams((beta,), (gamma,)))))
            energy[i, j] = probs @ diag
            success[i, j] = probs[t_index]
    return Landscape(betas, gammas, energy, success)


@dataclass(frozen=True)
class QaoaResult:
    params: QaoaParams
    energy: float
    converged: bool
    evaluations: int
    seed: int | None


def qaoa_optimize(
    model: IsingModel,
    p: int,
    init: QaoaParams,
    max_evaluations: int = 400,
    seed: int | None = None,
    step: float = 0.1,
    xatol: float = 1e-6,
    fatol: float = 1e-9,
) -> QaoaResult:
    """Nelder-Mead over ``(beta_1..beta_p, gamma_1..gamma_p)`` minimizing ``<E>``.

    The simplex is ``init`` plus ``step`` along each axis. The search is
    deterministic; ``seed`` is recorded for bookkeeping only. The returned
    energy is the best seen and therefore never above ``energy(init)``.
    """
    if max_evaluations < 1:
        raise ValidationError("max_evaluations must be >= 1")
    if init.p != p:
        raise ValidationError(f"init has p={init.p}, expected {p}")
    x0 = init.to_vector()
    dim = x0.size
    simplex = np.vstack([x0] + [x0 + step * np.eye(dim)[k] for k in range(dim)])
    best = {"x": x0.copy(), "e": math.inf, "n": 0}

    def objective(x):
        best["n"] += 1
        e = qaoa_energy(model, QaoaParams.from_vector(x))
        if e < best["e"]:
            best["x"], best["e"] = np.array(x, copy=True), e
        return e

    res = minimize(objective, x0, method="Nelder-Mead",
                   options={"initial_simplex": simplex, "maxfev": max_evaluations,
                            "xatol": xatol, "fatol": fatol})
    return QaoaResult(QaoaParams.from_vector(best["x"]), float(best["e"]), bool(res.success), best["n"], seed)
