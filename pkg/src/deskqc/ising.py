"""Ising and QUBO models, conversions, exact solving and problem-file I/O.

Spin and binary variables are related by ``x = (1 + s) / 2`` throughout
this module (so ``x = 0`` is spin ``-1``). Offsets are carried exactly
through every conversion so energies agree pointwise.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import CapacityError, ProblemFormatError, ValidationError

__all__ = [
    "IsingModel",
    "QuboModel",
    "BruteForceResult",
    "energy",
    "qubo_to_ising",
    "ising_to_qubo",
    "brute_force_solve",
    "rescale",
    "add_equality_penalty",
    "build_garden_model",
    "GARDEN_PLANTS",
    "GARDEN_RELATIONS",
    "GARDEN_CHIMERA_LABELS",
    "EXAMPLE_QAOA_MODEL",
    "EXAMPLE_QUBO",
    "load_problem",
    "save_problem",
    "problem_from_dict",
    "problem_to_dict",
]

MAX_BRUTE_FORCE_VARS = 24


def _pair(i, j) -> tuple[int, int]:
    i, j = int(i), int(j)
    return (i, j) if i <= j else (j, i)


def _check_index(i: int, n: int) -> None:
    if not 0 <= i < n:
        raise IndexError(f"variable {i} out of range for {n} variables")


@dataclass(frozen=True, eq=False)
class IsingModel:
    """``E(s) = sum_i h_i s_i + sum_{i<j} J_ij s_i s_j + offset``.

    ``J`` keys may be given in either order; they are stored as ``(i, j)``
    with ``i < j`` and duplicate orientations are summed. Zero
    coefficients are dropped.
    """

    num_variables: int
    h: Mapping[int, float] = field(default_factory=dict)
    J: Mapping[tuple[int, int], float] = field(default_factory=dict)
    offset: float = 0.0

    def __post_init__(self):
        n = int(self.num_variables)
        if n < 0:
            raise ValueError("num_variables must be non-negative")
        h: dict[int, float] = {}
        for i, v in dict(self.h).items():
            _check_index(int(i), n)
            h[int(i)] = h.get(int(i), 0.0) + float(v)
        J: dict[tuple[int, int], float] = {}
        for (i, j), v in dict(self.J).items():
            key = _pair(i, j)
            if key[0] == key[1]:
                raise ValidationError(f"Ising coupling on a single variable {key}")
            _check_index(key[0], n)
            _check_index(key[1], n)
            J[key] = J.get(key, 0.0) + float(v)
        object.__setattr__(self, "num_variables", n)
        object.__setattr__(self, "h", MappingProxyType({k: v for k, v in sorted(h.items()) if v != 0.0}))
        object.__setattr__(self, "J", MappingProxyType({k: v for k, v in sorted(J.items()) if v != 0.0}))
        object.__setattr__(self, "offset", float(self.offset))

    def __eq__(self, other):
        if not isinstance(other, IsingModel):
            return NotImplemented
        return (self.num_variables, dict(self.h), dict(self.J), self.offset) == (
            other.num_variables, dict(other.h), dict(other.J), other.offset)

    def __repr__(self):
        return f"IsingModel(num_variables={self.num_variables}, h={dict(self.h)}, J={dict(self.J)}, offset={self.offset})"

    def linear_vector(self) -> np.ndarray:
        vec = np.zeros(self.num_variables)
        for i, v in self.h.items():
            vec[i] = v
        return vec

    def coupling_matrix(self) -> np.ndarray:
        """Strictly upper-triangular ``J`` as a dense array."""
        mat = np.zeros((self.num_variables, self.num_variables))
        for (i, j), v in self.J.items():
            mat[i, j] = v
        return mat

    def neighbors(self) -> list[list[tuple[int, float]]]:
        adj: list[list[tuple[int, float]]] = [[] for _ in range(self.num_variables)]
        for (i, j), v in self.J.items():
            adj[i].append((j, v))
            adj[j].append((i, v))
        return adj


@dataclass(frozen=True, eq=False)
class QuboModel:
    """``E(x) = sum_{i<=j} Q_ij x_i x_j + offset`` over ``x_i`` in {0, 1}."""

    num_variables: int
    Q: Mapping[tuple[int, int], float] = field(default_factory=dict)
    offset: float = 0.0

    def __post_init__(self):
        n = int(self.num_variables)
        if n < 0:
            raise ValueError("num_variables must be non-negative")
        Q: dict[tuple[int, int], float] = {}
        for (i, j), v in dict(self.Q).items():
            key = _pair(i, j)
            _check_index(key[0], n)
            _check_index(key[1], n)
            Q[key] = Q.get(key, 0.0) + float(v)
        object.__setattr__(self, "num_variables", n)
        object.__setattr__(self, "Q", MappingProxyType({k: v for k, v in sorted(Q.items()) if v != 0.0}))
        object.__setattr__(self, "offset", float(self.offset))

    def __eq__(self, other):
        if not isinstance(other, QuboModel):
            return NotImplemented
        return (self.num_variables, dict(self.Q), self.offset) == (other.num_variables, dict(other.Q), other.offset)

    def __repr__(self):
        return f"QuboModel(num_variables={self.num_variables}, Q={dict(self.Q)}, offset={self.offset})"

    @property
    def linear(self) -> dict[int, float]:
        return {i: v for (i, j), v in self.Q.items() if i == j}

    @property
    def quadratic(self) -> dict[tuple[int, int], float]:
        return {k: v for k, v in self.Q.items() if k[0] != k[1]}

    def linear_vector(self) -> np.ndarray:
        vec = np.zeros(self.num_variables)
        for i, v in self.linear.items():
            vec[i] = v
        return vec

    def coupling_matrix(self) -> np.ndarray:
        mat = np.zeros((self.num_variables, self.num_variables))
        for (i, j), v in self.quadratic.items():
            mat[i, j] = v
        return mat


Model = IsingModel | QuboModel


def energy(model: Model, config) -> float | np.ndarray:
    """Energy of one configuration, or of each row of a 2-D array of them.

    Ising configurations hold spins in {-1, +1}; QUBO configurations hold
    bits in {0, 1}.
    """
    c = np.asarray(config, dtype=float)
    if c.shape[-1:] != (model.num_variables,):
        raise ValueError(f"configuration length {c.shape[-1:]} != num_variables {model.num_variables}")
    lin = model.linear_vector()
    quad = model.coupling_matrix()
    e = c @ lin + np.einsum("...i,ij,...j->...", c, quad, c) + model.offset
    return float(e) if c.ndim == 1 else e


def qubo_to_ising(q: QuboModel) -> IsingModel:
    """Substitute ``x_i = (1 + s_i) / 2``."""
    h: dict[int, float] = {}
    J: dict[tuple[int, int], float] = {}
    offset = q.offset
    for (i, j), v in q.Q.items():
        if i == j:
            h[i] = h.get(i, 0.0) + v / 2
            offset += v / 2
        else:
            J[(i, j)] = J.get((i, j), 0.0) + v / 4
            h[i] = h.get(i, 0.0) + v / 4
            h[j] = h.get(j, 0.0) + v / 4
            offset += v / 4
    return IsingModel(q.num_variables, h, J, offset)


def ising_to_qubo(m: IsingModel) -> QuboModel:
    """Substitute ``s_i = 2 x_i - 1``."""
    Q: dict[tuple[int, int], float] = {}
    offset = m.offset
    for i, v in m.h.items():
        Q[(i, i)] = Q.get((i, i), 0.0) + 2 * v
        offset -= v
    for (i, j), v in m.J.items():
        Q[(i, j)] = Q.get((i, j), 0.0) + 4 * v
        Q[(i, i)] = Q.get((i, i), 0.0) - 2 * v
        Q[(j, j)] = Q.get((j, j), 0.0) - 2 * v
        offset += v
    return QuboModel(m.num_variables, Q, offset)


@dataclass(frozen=True)
class BruteForceResult:
    configs: tuple[tuple[int, ...], ...]
    energy: float
    degeneracy: int


def _config_block(start: int, stop: int, n: int, spin: bool) -> np.ndarray:
    j = np.arange(start, stop, dtype=np.int64)[:, None]
    bits = (j >> np.arange(n - 1, -1, -1)[None, :]) & 1
    # bit 1 <-> x = 1 <-> s = +1
    return (2 * bits - 1).astype(np.int8) if spin else bits.astype(np.int8)


def brute_force_solve(model: Model, max_vars: int = MAX_BRUTE_FORCE_VARS, tol: float = 1e-9) -> BruteForceResult:
    """Exhaustively enumerate all ``2**n`` configurations.

    Every configuration within ``tol * max(1, |E_min|)`` of the minimum is
    reported; ``configs`` are sorted lexicographically.
    """
    n = model.num_variables
    if n > max_vars:
        raise CapacityError(f"brute force is capped at {max_vars} variables, model has {n}")
    spin = isinstance(model, IsingModel)
    lin = model.linear_vector()
    quad = model.coupling_matrix()
    total = 2**n
    chunk = 1 << 18
    best = np.inf
    hits: list[np.ndarray] = []
    for start in range(0, total, chunk):
        block = _config_block(start, min(total, start + chunk), n, spin)
        c = block.astype(float)
        e = c @ lin + ((c @ quad) * c).sum(axis=1) + model.offset
        lo = e.min()
        if lo < best - tol * max(1.0, abs(lo)):
            best = lo
            hits = []
        cut = best + tol * max(1.0, abs(best))
        if lo <= cut:
            best = min(best, lo)
            hits.append(block[e <= cut])
    cut = best + tol * max(1.0, abs(best))
    configs = sorted(tuple(int(v) for v in row) for h in hits for row in h if energy(model, row) <= cut)
    return BruteForceResult(tuple(configs), float(best), len(configs))


def rescale(model: IsingModel, h_range: Sequence[float], j_range: Sequence[float]) -> tuple[IsingModel, float]:
    """Shrink coefficients into hardware ranges.

    ``r`` is the largest of ``max(h)/hmax``, ``min(h)/hmin``, ``max(J)/Jmax``
    and ``min(J)/Jmin``, each clipped at 0. If ``r > 1`` every ``h`` and ``J``
    is divided by ``r`` (the offset is left alone); otherwise the model is
    returned unchanged.
    """
    hmin, hmax = map(float, h_range)
    jmin, jmax = map(float, j_range)
    if not (hmin < 0 < hmax and jmin < 0 < jmax):
        raise ValidationError("ranges must satisfy min < 0 < max")
    terms = [0.0]
    if model.h:
        hv = list(model.h.values())
        terms += [max(hv) / hmax, min(hv) / hmin]
    if model.J:
        jv = list(model.J.values())
        terms += [max(jv) / jmax, min(jv) / jmin]
    r = max(max(t, 0.0) for t in terms)
    if r <= 1.0:
        return model, r
    return (
        IsingModel(
            model.num_variables,
            {i: v / r for i, v in model.h.items()},
            {k: v / r for k, v in model.J.items()},
            model.offset,
        ),
        r,
    )


def add_equality_penalty(q: QuboModel, coeffs: Mapping[int, float], c: float, lam: float) -> QuboModel:
    """Add ``lam * (sum_i a_i x_i - c)**2`` using ``x_i**2 = x_i``."""
    if not coeffs:
        raise ValidationError("constraint needs at least one coefficient")
    if lam < 0:
        raise ValidationError("penalty multiplier must be non-negative")
    if lam == 0:
        return q
    Q = dict(q.Q)
    items = sorted((int(i), float(a)) for i, a in coeffs.items())
    for idx, (i, a) in enumerate(items):
        _check_index(i, q.num_variables)
        Q[(i, i)] = Q.get((i, i), 0.0) + lam * (a * a - 2 * c * a)
        for j, b in items[idx + 1:]:
            Q[(i, j)] = Q.get((i, j), 0.0) + 2 * lam * a * b
    return QuboModel(q.num_variables, Q, q.offset + lam * c * c)


GARDEN_PLANTS = ("leek", "celery", "peas", "corn")
GARDEN_RELATIONS = {
    ("leek", "celery"): "good",
    ("peas", "corn"): "good",
    ("leek", "peas"): "bad",
    ("celery", "corn"): "bad",
    ("leek", "corn"): "neutral",
    ("celery", "peas"): "neutral",
}
#: Qubit labels that place the four plants on one unit cell of a chimera graph.
GARDEN_CHIMERA_LABELS = {"leek": 0, "corn": 3, "celery": 4, "peas": 7}

_RELATION_COUPLING = {"good": -1.0, "neutral": 0.0, "bad": 1.0}


def build_garden_model(
    relations: Mapping[tuple[str, str], str] = GARDEN_RELATIONS,
    prior_placements: Mapping[str, int] | None = None,
    replant_cost: float = 0.0,
    labels: Mapping[str, int] | None = None,
) -> IsingModel:
    """Two-pot planting problem: ``s_i`` is the pot (-1 or +1) of plant ``i``.

    Companion plants get ``J = -1`` so sharing a pot lowers the energy,
    antagonists get ``J = +1`` and neutral pairs get nothing. A plant
    already sitting in pot ``p`` adds ``h = -replant_cost * p``, which
    rewards leaving it where it is.

    ``labels`` maps plant names to variable indices; by default the plants
    are numbered in the order leek, celery, peas, corn followed by any
    others alphabetically.
    """
    seen: dict[frozenset, str] = {}
    for (a, b), kind in relations.items():
        if kind not in _RELATION_COUPLING:
            raise ValidationError(f"unknown relation {kind!r} for {a}-{b}")
        if a == b:
            raise ValidationError(f"plant {a!r} related to itself")
        key = frozenset((a, b))
        if key in seen and seen[key] != kind:
            raise ValidationError(f"conflicting relations for {a}-{b}: {seen[key]} vs {kind}")
        seen[key] = kind
    plants = {p for key in seen for p in key} | set(prior_placements or {})
    if labels is None:
        ordered = [p for p in GARDEN_PLANTS if p in plants] + sorted(plants - set(GARDEN_PLANTS))
        labels = {p: i for i, p in enumerate(ordered)}
    missing = plants - set(labels)
    if missing:
        raise ValidationError(f"no label for plants {sorted(missing)}")
    n = max(labels.values()) + 1 if labels else 0
    J = {}
    for key, kind in seen.items():
        a, b = sorted(key)
        if _RELATION_COUPLING[kind]:
            J[_pair(labels[a], labels[b])] = _RELATION_COUPLING[kind]
    h = {}
    for plant, pot in (prior_placements or {}).items():
        if pot not in (-1, 1):
            raise ValidationError(f"pot for {plant!r} must be -1 or +1, got {pot!r}")
        h[labels[plant]] = -replant_cost * pot
    return IsingModel(n, h, J)


EXAMPLE_QAOA_MODEL = IsingModel(3, {0: -1.0, 1: 0.5, 2: -0.5}, {(0, 1): 0.5, (1, 2): 0.5})
EXAMPLE_QUBO = QuboModel(3, {(0, 0): 1.0, (0, 1): 1.0, (0, 2): -1.0, (1, 2): -0.8})


def problem_to_dict(model: Model) -> dict:
    if isinstance(model, IsingModel):
        linear = {str(i): v for i, v in model.h.items()}
        quadratic = {f"{i},{j}": v for (i, j), v in model.J.items()}
        kind = "ising"
    else:
        linear = {str(i): v for i, v in model.linear.items()}
        quadratic = {f"{i},{j}": v for (i, j), v in model.quadratic.items()}
        kind = "qubo"
    return {"type": kind, "num_variables": model.num_variables, "linear": linear,
            "quadratic": quadratic, "offset": model.offset}


def problem_from_dict(data: Mapping) -> Model:
    try:
        kind = data["type"]
        n = data["num_variables"]
    except (KeyError, TypeError) as exc:
        raise ProblemFormatError(f"problem is missing field {exc}") from None
    if kind not in ("ising", "qubo"):
        raise ProblemFormatError(f"type must be 'ising' or 'qubo', got {kind!r}")
    if not isinstance(n, int) or isinstance(n, bool) or n < 0:
        raise ProblemFormatError("num_variables must be a non-negative integer")
    unknown = set(data) - {"type", "num_variables", "linear", "quadratic", "offset"}
    if unknown:
        raise ProblemFormatError(f"unknown fields {sorted(unknown)}")
    try:
        linear = {int(k): float(v) for k, v in dict(data.get("linear", {})).items()}
        quadratic = {}
        for k, v in dict(data.get("quadratic", {})).items():
            i, j = (int(part) for part in str(k).split(","))
            if i > j or (i == j and kind == "ising"):
                raise ProblemFormatError(f"quadratic key {k!r} must have i < j")
            quadratic[(i, j)] = quadratic.get((i, j), 0.0) + float(v)
        offset = float(data.get("offset", 0.0))
    except ProblemFormatError:
        raise
    except (ValueError, TypeError, AttributeError) as exc:
        raise ProblemFormatError(f"malformed coefficients: {exc}") from None
    try:
        if kind == "ising":
            return IsingModel(n, linear, quadratic, offset)
        Q = dict(quadratic)
        for i, v in linear.items():
            Q[(i, i)] = Q.get((i, i), 0.0) + v
        return QuboModel(n, Q, offset)
    except (IndexError, ValidationError) as exc:
        raise ProblemFormatError(str(exc)) from None


def load_problem(path: str | os.PathLike) -> Model:
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ProblemFormatError(f"invalid JSON: {exc}") from None
    return problem_from_dict(data)


def save_problem(model: Model, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(problem_to_dict(model), fh, indent=2)
        fh.write("\n")


def configs_to_bits(configs: Iterable[Sequence[int]]) -> list[tuple[int, ...]]:
    """Map spin rows to binary rows with ``x = (1 + s) / 2``."""
    return [tuple((1 + int(s)) // 2 for s in row) for row in configs]
