"""Gate definitions, rotation matrices and phase-insensitive comparison.

Matrices follow the ``|q0 q1 ... >`` ordering used throughout the package:
for multi-qubit gates the first listed qubit (the control, for controlled
gates) is the most significant bit of the matrix index.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

__all__ = [
    "Gate",
    "AxisAngle",
    "GATE_NAMES",
    "matrix_of",
    "rotation",
    "axis_angle_of",
    "equal_up_to_global_phase",
    "dagger",
    "is_unitary",
    "controlled",
    "kernel_form",
]

_SQRT1_2 = 1.0 / math.sqrt(2.0)

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY = np.eye(2, dtype=complex)

_FIXED_1Q = {
    "I": IDENTITY,
    "H": np.array([[1, 1], [1, -1]], dtype=complex) * _SQRT1_2,
    "X": PAULI_X,
    "Y": PAULI_Y,
    "Z": PAULI_Z,
    "S": np.array([[1, 0], [0, 1j]], dtype=complex),
    "Sdg": np.array([[1, 0], [0, -1j]], dtype=complex),
    "T": np.array([[1, 0], [0, (1 + 1j) * _SQRT1_2]], dtype=complex),
    "Tdg": np.array([[1, 0], [0, (1 - 1j) * _SQRT1_2]], dtype=complex),
    # +X/-X/+Y/-Y are stored verbatim rather than derived from rotation()
    "PlusX": np.array([[1, 1j], [1j, 1]], dtype=complex) * _SQRT1_2,
    "MinusX": np.array([[1, -1j], [-1j, 1]], dtype=complex) * _SQRT1_2,
    "PlusY": np.array([[1, 1], [-1, 1]], dtype=complex) * _SQRT1_2,
    "MinusY": np.array([[1, -1], [1, 1]], dtype=complex) * _SQRT1_2,
}
for _m in _FIXED_1Q.values():
    _m.setflags(write=False)

# name -> (number of qubits, number of controls, kind of params)
#   params kinds: "" none, "a" one angle, "aa" two angles, "aaa" three angles,
#   "k" non-negative integer, "m" matrix
_TABLE: dict[str, tuple[int, int, str]] = {
    **{name: (1, 0, "") for name in _FIXED_1Q},
    "U1": (1, 0, "a"),
    "U2": (1, 0, "aa"),
    "U3": (1, 0, "aaa"),
    "Rk": (1, 0, "k"),
    "Rkdg": (1, 0, "k"),
    "Rx": (1, 0, "a"),
    "Ry": (1, 0, "a"),
    "Rz": (1, 0, "a"),
    "CNOT": (2, 1, ""),
    "CU_k": (2, 1, "k"),
    "CU_kdg": (2, 1, "k"),
    "CPhase": (2, 1, "a"),
    "CZ": (2, 1, ""),
    "CS": (2, 1, ""),
    "Toffoli": (3, 2, ""),
    "Custom1Q": (1, 0, "m"),
    "Custom2Q": (2, 0, "m"),
}

GATE_NAMES = tuple(_TABLE)


def _freeze_matrix(m) -> tuple[tuple[complex, ...], ...]:
    arr = np.asarray(m, dtype=complex)
    return tuple(tuple(complex(v) for v in row) for row in arr)


@dataclass(frozen=True)
class Gate:
    """An immutable gate kind plus its parameters.

    ``params`` holds angles (radians) for rotation-like gates, a single
    non-negative integer ``k`` for the R(k)/U(k) family, and the matrix (as
    nested tuples) for the two custom kinds.
    """

    name: str
    params: tuple = field(default=())

    def __post_init__(self):
        if self.name not in _TABLE:
            raise ValueError(f"unknown gate {self.name!r}")
        _, _, kind = _TABLE[self.name]
        params = tuple(self.params)
        if kind == "m":
            if len(params) == 0:
                raise ValueError(f"{self.name} needs a matrix")
            mat = np.asarray(params, dtype=complex)
            dim = 2 ** _TABLE[self.name][0]
            if mat.shape != (dim, dim):
                raise ValueError(f"{self.name} needs a {dim}x{dim} matrix, got {mat.shape}")
            if not is_unitary(mat, 1e-12):
                raise ValidationError(f"{self.name} matrix is not unitary")
            params = _freeze_matrix(mat)
        elif kind == "k":
            if len(params) != 1:
                raise ValueError(f"{self.name} takes exactly one integer k")
            k = params[0]
            if isinstance(k, bool) or not float(k).is_integer() or k < 0:
                raise ValueError(f"{self.name} needs a non-negative integer k, got {k!r}")
            params = (int(k),)
        else:
            if len(params) != len(kind):
                raise ValueError(f"{self.name} takes {len(kind)} angle(s), got {len(params)}")
            params = tuple(float(p) for p in params)
        object.__setattr__(self, "params", params)

    @property
    def num_qubits(self) -> int:
        return _TABLE[self.name][0]

    @property
    def num_controls(self) -> int:
        return _TABLE[self.name][1]

    @property
    def is_custom(self) -> bool:
        return _TABLE[self.name][2] == "m"

    def matrix(self) -> np.ndarray:
        return matrix_of(self)

    def __repr__(self):
        if not self.params:
            return f"Gate({self.name!r})"
        if self.is_custom:
            return f"Gate({self.name!r}, <matrix>)"
        return f"Gate({self.name!r}, {self.params!r})"


@dataclass(frozen=True)
class AxisAngle:
    axis: tuple[float, float, float]
    angle: float
    global_phase: float

    def matrix(self) -> np.ndarray:
        nx, ny, nz = self.axis
        n_sigma = nx * PAULI_X + ny * PAULI_Y + nz * PAULI_Z
        half = self.angle / 2
        return cmath.exp(1j * self.global_phase) * (
            math.cos(half) * IDENTITY - 1j * math.sin(half) * n_sigma
        )


def _phase(k: int) -> complex:
    return cmath.exp(2j * math.pi / 2**k)


def rotation(axis: str, theta: float) -> np.ndarray:
    """Return ``exp(-i theta sigma_axis / 2)`` for ``axis`` in ``x``, ``y``, ``z``."""
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    if axis == "x":
        return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)
    if axis == "y":
        return np.array([[c, -s], [s, c]], dtype=complex)
    if axis == "z":
        return np.array([[cmath.exp(-0.5j * theta), 0], [0, cmath.exp(0.5j * theta)]], dtype=complex)
    raise ValueError(f"axis must be 'x', 'y' or 'z', got {axis!r}")


def _u3(theta: float, phi: float, lam: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array(
        [
            [c, -cmath.exp(1j * lam) * s],
            [cmath.exp(1j * phi) * s, cmath.exp(1j * (phi + lam)) * c],
        ],
        dtype=complex,
    )


def controlled(u: np.ndarray, num_controls: int = 1) -> np.ndarray:
    """Embed ``u`` as the bottom-right block of a controlled gate."""
    u = np.asarray(u, dtype=complex)
    dim = u.shape[0] * 2**num_controls
    out = np.eye(dim, dtype=complex)
    out[dim - u.shape[0]:, dim - u.shape[0]:] = u
    return out


def _target_matrix(gate: Gate) -> np.ndarray:
    """2x2 matrix acting on the target of a controlled gate."""
    name, p = gate.name, gate.params
    if name in ("CNOT", "Toffoli"):
        return PAULI_X
    if name == "CZ":
        return PAULI_Z
    if name == "CS":
        return _FIXED_1Q["S"]
    if name == "CU_k":
        return np.diag([1, _phase(p[0])]).astype(complex)
    if name == "CU_kdg":
        return np.diag([1, _phase(p[0]).conjugate()]).astype(complex)
    if name == "CPhase":
        return np.diag([1, cmath.exp(1j * p[0])]).astype(complex)
    raise AssertionError(name)


def kernel_form(gate: Gate) -> tuple[int, np.ndarray]:
    """Return ``(num_controls, matrix)`` where the matrix acts on the targets only."""
    if gate.num_controls:
        return gate.num_controls, _target_matrix(gate)
    return 0, matrix_of(gate)


def matrix_of(gate: Gate) -> np.ndarray:
    """Dense unitary for ``gate`` (2x2, 4x4 or 8x8)."""
    name, p = gate.name, gate.params
    if name in _FIXED_1Q:
        return _FIXED_1Q[name].copy()
    if name == "U1":
        return np.diag([1, cmath.exp(1j * p[0])]).astype(complex)
    if name == "U2":
        return _u3(math.pi / 2, p[0], p[1])
    if name == "U3":
        return _u3(*p)
    if name == "Rk":
        return np.diag([1, _phase(p[0])]).astype(complex)
    if name == "Rkdg":
        return np.diag([1, _phase(p[0]).conjugate()]).astype(complex)
    if name in ("Rx", "Ry", "Rz"):
        return rotation(name[1], p[0])
    if gate.is_custom:
        return np.array(p, dtype=complex)
    return controlled(_target_matrix(gate), gate.num_controls)


_SELF_INVERSE = {"I", "H", "X", "Y", "Z", "CNOT", "CZ", "Toffoli"}
_SWAP_NAMES = {
    "S": "Sdg", "Sdg": "S", "T": "Tdg", "Tdg": "T",
    "PlusX": "MinusX", "MinusX": "PlusX", "PlusY": "MinusY", "MinusY": "PlusY",
    "Rk": "Rkdg", "Rkdg": "Rk", "CU_k": "CU_kdg", "CU_kdg": "CU_k",
}


def dagger(gate: Gate) -> Gate:
    """Hermitian conjugate of ``gate`` expressed, where possible, as a named gate."""
    name, p = gate.name, gate.params
    if name in _SELF_INVERSE:
        return gate
    if name in _SWAP_NAMES:
        return Gate(_SWAP_NAMES[name], p)
    if name in ("U1", "Rx", "Ry", "Rz", "CPhase"):
        return Gate(name, (-p[0],))
    if name == "U2":
        # U2(phi, lam)^dagger == U2(pi - lam, pi - phi) exactly
        return Gate("U2", (math.pi - p[1], math.pi - p[0]))
    if name == "U3":
        return Gate("U3", (-p[0], -p[2], -p[1]))
    if name == "CS":
        return Gate("CU_kdg", (2,))
    if gate.is_custom:
        return Gate(name, matrix_of(gate).conj().T)
    raise AssertionError(name)


def is_unitary(m: np.ndarray, tol: float = 1e-12) -> bool:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    return bool(np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0]))) <= tol)


def axis_angle_of(u: np.ndarray, tol: float = 1e-10) -> AxisAngle:
    """Decompose a 2x2 unitary as ``e^{i alpha} (cos(t/2) I - i sin(t/2) n.sigma)``.

    The angle is normalized to ``[0, 2 pi)`` and the sign ambiguity between
    ``(alpha, t, n)`` and ``(alpha + pi, 2 pi - t, -n)`` is resolved by making
    the first nonzero axis component positive. The identity (up to phase)
    gets angle 0 and axis ``(0, 0, 1)``.
    """
    u = np.asarray(u, dtype=complex)
    if u.shape != (2, 2) or not is_unitary(u, tol):
        raise ValidationError("axis_angle_of needs a 2x2 unitary")
    alpha = cmath.phase(np.linalg.det(u)) / 2
    v = u * cmath.exp(-1j * alpha)
    a, b = v[0, 0], v[0, 1]
    cos_half = a.real
    n_sin = np.array([-b.imag, -b.real, -a.imag])
    sin_half = float(np.linalg.norm(n_sin))
    if sin_half < tol:
        if cos_half < 0:
            alpha += math.pi
        return AxisAngle((0.0, 0.0, 1.0), 0.0, _wrap_phase(alpha))
    axis = n_sin / sin_half
    half = math.atan2(sin_half, cos_half)
    first = next(c for c in axis if abs(c) > tol)
    if first < 0:
        axis = -axis
        half = math.pi - half
        alpha += math.pi
    angle = 2 * half
    axis = tuple(float(c) + 0.0 for c in axis)
    return AxisAngle(axis, angle, _wrap_phase(alpha))


def _wrap_phase(alpha: float) -> float:
    """Map an angle to (-pi, pi]."""
    wrapped = math.remainder(alpha, 2 * math.pi)
    return math.pi if wrapped == -math.pi else wrapped


def equal_up_to_global_phase(a: np.ndarray, b: np.ndarray, tol: float = 1e-12) -> bool:
    """True iff ``a == c * b`` (max-norm within ``tol``) for some unit-modulus ``c``."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    big = np.flatnonzero(np.abs(b) > tol)
    if big.size == 0:
        return bool(np.max(np.abs(a), initial=0.0) <= tol)
    idx = big[0]
    ratio = a.flat[idx] / b.flat[idx]
    if ratio == 0:
        return False
    c = ratio / abs(ratio)
    return bool(np.max(np.abs(a - c * b)) <= tol)
