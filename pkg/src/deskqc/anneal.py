"""Quantum annealing in a closed system, spectral diagnostics, Landau-Zener
sweeps and a classical simulated-annealing sampler.

The annealing Hamiltonian is

    H(s) = A(s) * (-sum_i sigma^x_i) + B(s) * (sum_i h_i sigma^z_i + sum_ij J_ij sigma^z_i sigma^z_j)

with ``hbar = 1`` and ``s = t / t_max``. Basis state ``|0>`` carries spin
``+1``, so the diagonal of the problem part is the Ising energy of
``s_i = 1 - 2 q_i``. Samples are reported as spins; a QUBO bit is
``x = (1 + s) / 2``.
"""
from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import expm_multiply

from .errors import CapacityError, ProblemFormatError, ValidationError
from .ising import IsingModel, QuboModel, energy, qubo_to_ising
from .state import SampleSet, StateVector, ising_diagonal, make_rng

__all__ = [
    "Schedule",
    "SCHEDULES",
    "get_schedule",
    "hamiltonian_at",
    "evolve_closed",
    "ground_subspace_probability",
    "SpectrumSample",
    "GapResult",
    "min_gap",
    "adiabatic_time_estimate",
    "LandauZenerParams",
    "LandauZenerResult",
    "landau_zener_probability",
    "default_t_span",
    "simulated_annealing",
]

MAX_DENSE_SPINS = 12
MAX_SPINS = 14
_DENSE_EVOLVE_SPINS = 8
DEGENERACY_TOL = 1e-12


@dataclass(frozen=True)
class Schedule:
    """Piecewise-linear annealing functions ``A(s)`` and ``B(s)`` on [0, 1]."""

    points: tuple[tuple[float, float, float], ...]
    name: str = "custom"

    def __post_init__(self):
        pts = tuple((float(s), float(a), float(b)) for s, a, b in self.points)
        if len(pts) < 2:
            raise ValidationError("a schedule needs at least two points")
        s = [p[0] for p in pts]
        if s[0] != 0.0 or s[-1] != 1.0:
            raise ValidationError("schedule must start at s=0 and end at s=1")
        if any(b <= a for a, b in zip(s, s[1:])):
            raise ValidationError("schedule s values must be strictly increasing")
        if any(p[1] < 0 or p[2] < 0 for p in pts):
            raise ValidationError("A(s) and B(s) must be non-negative")
        if not pts[0][1] > pts[0][2]:
            raise ValidationError("need A(0) > B(0)")
        if not pts[-1][2] > pts[-1][1]:
            raise ValidationError("need B(1) > A(1)")
        object.__setattr__(self, "points", pts)

    @classmethod
    def linear(cls) -> Schedule:
        return cls(((0.0, 1.0, 0.0), (1.0, 0.0, 1.0)), "linear")

    @property
    def _arrays(self):
        arr = np.array(self.points)
        return arr[:, 0], arr[:, 1], arr[:, 2]

    def A(self, s):
        grid, a, _ = self._arrays
        return np.interp(s, grid, a)

    def B(self, s):
        grid, _, b = self._arrays
        return np.interp(s, grid, b)

    def slopes(self, s: float) -> tuple[float, float]:
        """``(A'(s), B'(s))`` of the segment containing ``s`` (left segment at s = 1)."""
        grid, a, b = self._arrays
        k = int(np.clip(np.searchsorted(grid, s, side="right") - 1, 0, len(grid) - 2))
        ds = grid[k + 1] - grid[k]
        return (a[k + 1] - a[k]) / ds, (b[k + 1] - b[k]) / ds

    @classmethod
    def from_csv(cls, path: str | os.PathLike) -> Schedule:
        """Read a ``s,A,B`` CSV file (values in energy units, hbar = 1)."""
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or [h.strip() for h in header] != ["s", "A", "B"]:
                raise ProblemFormatError(f"schedule CSV header must be 's,A,B', got {header}")
            rows = []
            for lineno, row in enumerate(reader, start=2):
                if not row or all(not c.strip() for c in row):
                    continue
                if len(row) != 3:
                    raise ProblemFormatError(f"line {lineno}: expected 3 columns")
                try:
                    rows.append(tuple(float(c) for c in row))
                except ValueError:
                    raise ProblemFormatError(f"line {lineno}: non-numeric value") from None
        try:
            return cls(tuple(rows), os.path.basename(str(path)))
        except ValidationError as exc:
            raise ProblemFormatError(str(exc)) from None

    def to_csv(self, path: str | os.PathLike) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["s", "A", "B"])
            for row in self.points:
                writer.writerow([repr(v) for v in row])


SCHEDULES = {"linear": Schedule.linear}


def get_schedule(name_or_path: str) -> Schedule:
    """Built-in schedule by name, or a CSV file path."""
    if name_or_path in SCHEDULES:
        return SCHEDULES[name_or_path]()
    if os.path.exists(name_or_path):
        return Schedule.from_csv(name_or_path)
    raise ValidationError(f"unknown schedule {name_or_path!r}; built-ins: {', '.join(sorted(SCHEDULES))}")


def _check_size(model: IsingModel, cap: int) -> int:
    n = model.num_variables
    if n < 1:
        raise ValidationError("model has no variables")
    if n > cap:
        raise CapacityError(f"annealing simulation is capped at {cap} spins, model has {n}")
    return n


def _driver(n: int) -> sp.csr_matrix:
    """Sparse ``-sum_i sigma^x_i``."""
    dim = 2**n
    rows = np.tile(np.arange(dim), n)
    cols = np.concatenate([np.arange(dim) ^ (1 << (n - 1 - i)) for i in range(n)])
    return sp.csr_matrix((-np.ones(n * dim), (rows, cols)), shape=(dim, dim))


def _parts(model: IsingModel):
    n = model.num_variables
    return _driver(n), ising_diagonal(model, n)


def hamiltonian_at(model: IsingModel, schedule: Schedule, s: float, sparse: bool | None = None):
    """``H(s)`` as a dense array, or a CSR matrix when ``sparse`` (default above 12 spins)."""
    if not 0.0 <= s <= 1.0:
        raise ValidationError(f"s must lie in [0, 1], got {s}")
    n = _check_size(model, MAX_SPINS)
    if sparse is None:
        sparse = n > MAX_DENSE_SPINS
    if not sparse and n > MAX_DENSE_SPINS:
        raise CapacityError(f"dense Hamiltonians are capped at {MAX_DENSE_SPINS} spins")
    driver, diag = _parts(model)
    h = float(schedule.A(s)) * driver + sp.diags(float(schedule.B(s)) * diag)
    return h.tocsr() if sparse else h.toarray()


def _initial_state(model: IsingModel, schedule: Schedule) -> np.ndarray:
    n = model.num_variables
    if schedule.B(0.0) == 0.0:
        return np.full(2**n, 2 ** (-n / 2), dtype=complex)
    h0 = hamiltonian_at(model, schedule, 0.0, sparse=False) if n <= MAX_DENSE_SPINS else None
    if h0 is None:
        from scipy.sparse.linalg import eigsh

        _, vecs = eigsh(hamiltonian_at(model, schedule, 0.0, sparse=True), k=1, which="SA")
        vec = vecs[:, 0]
    else:
        vec = np.linalg.eigh(h0)[1][:, 0]
    return vec.astype(complex) / np.linalg.norm(vec)


def evolve_closed(
    model: IsingModel,
    schedule: Schedule,
    t_max: float,
    steps: int = 1000,
    initial: StateVector | None = None,
) -> StateVector:
    """Integrate ``i d|psi>/dt = H(t / t_max) |psi>`` from the ``s = 0`` ground state.

    Each of ``steps`` intervals applies ``exp(-i H(s_k) dt)`` with ``H``
    frozen at the interval midpoint ``s_k = (k + 1/2) / steps``. Up to 8
    spins the exponential comes from a dense eigendecomposition; larger
    models use a sparse Krylov action.
    """
    n = _check_size(model, MAX_SPINS)
    if steps < 100:
        raise ValidationError("steps must be >= 100")
    if t_max < 0:
        raise ValidationError("t_max must be non-negative")
    if initial is not None:
        if initial.num_qubits != n:
            raise ValueError("initial state size does not match the model")
        psi = initial.amplitudes.copy()
    else:
        psi = _initial_state(model, schedule)
    dt = t_max / steps
    if dt == 0:
        return StateVector(psi)
    driver, diag = _parts(model)
    s_mid = (np.arange(steps) + 0.5) / steps
    a_vals, b_vals = schedule.A(s_mid), schedule.B(s_mid)
    if n <= _DENSE_EVOLVE_SPINS:
        dense_driver = driver.toarray()
        for a, b in zip(a_vals, b_vals):
            w, v = np.linalg.eigh(a * dense_driver + np.diag(b * diag))
            psi = v @ (np.exp(-1j * w * dt) * (v.conj().T @ psi))
    else:
        for a, b in zip(a_vals, b_vals):
            h = (a * driver + sp.diags(b * diag)).tocsr()
            psi = expm_multiply(-1j * dt * h, psi)
    return StateVector(psi)


def ground_subspace_probability(state: StateVector, model: IsingModel, tol: float = 1e-9) -> float:
    """Total probability on all basis states of minimal Ising energy."""
    diag = ising_diagonal(model, state.num_qubits)
    lo = diag.min()
    mask = diag <= lo + tol * max(1.0, abs(lo))
    return float(np.sum(np.abs(state.amplitudes[mask]) ** 2))


@dataclass(frozen=True)
class SpectrumSample:
    s: float
    eigenvalues: tuple[float, ...]
    gap: float


@dataclass(frozen=True)
class GapResult:
    s: float
    gap: float
    samples: tuple[SpectrumSample, ...]
    sector: str


def _resolve_sector(model: IsingModel, sector: str) -> str:
    if sector not in ("auto", "all", "even"):
        raise ValidationError(f"sector must be 'auto', 'all' or 'even', got {sector!r}")
    if sector == "auto":
        return "even" if not model.h else "all"
    if sector == "even" and model.h:
        raise ValidationError("the even sector is only invariant when all h_i are zero")
    return sector


def _even_basis(n: int) -> np.ndarray:
    """Columns span states symmetric under flipping every spin."""
    dim = 2**n
    half = dim // 2
    v = np.zeros((dim, half))
    j = np.arange(half)
    v[j, np.arange(half)] = math.sqrt(0.5)
    v[(dim - 1) ^ j, np.arange(half)] = math.sqrt(0.5)
    return v


class _Spectrum:
    """Dense eigensolver of ``H(s)``, optionally restricted to the even sector."""

    def __init__(self, model: IsingModel, schedule: Schedule, sector: str):
        n = _check_size(model, MAX_DENSE_SPINS)
        driver, diag = _parts(model)
        self.driver = driver.toarray()
        self.final = np.diag(diag)
        self.sector = _resolve_sector(model, sector)
        if self.sector == "even" and n > 1:
            basis = _even_basis(n)
            self.driver = basis.T @ self.driver @ basis
            self.final = basis.T @ self.final @ basis
        elif self.sector == "even":
            self.sector = "all"
        self.schedule = schedule

    def at(self, s: float):
        h = float(self.schedule.A(s)) * self.driver + float(self.schedule.B(s)) * self.final
        return np.linalg.eigh(h)


def _gap(w: np.ndarray) -> float:
    above = w[w - w[0] >= DEGENERACY_TOL]
    return float(above[0] - w[0]) if above.size else 0.0


def min_gap(
    model: IsingModel,
    schedule: Schedule,
    s_grid: Sequence[float],
    levels: int = 4,
    sector: str = "auto",
) -> GapResult:
    """Smallest ``E_1 - E_0`` of ``H(s)`` over ``s_grid``.

    Levels within 1e-12 of the ground energy count as part of the ground
    space, so the gap is measured to the first level above it. With
    ``sector="auto"`` a model without local fields is diagonalized only in
    the spin-flip-symmetric sector, the one reached from the ``s = 0``
    ground state; ``"all"`` uses the full spectrum.
    """
    spectrum = _Spectrum(model, schedule, sector)
    samples = []
    for s in s_grid:
        w, _ = spectrum.at(float(s))
        samples.append(SpectrumSample(float(s), tuple(float(x) for x in w[:levels]), _gap(w)))
    if not samples:
        raise ValidationError("s_grid is empty")
    best = min(samples, key=lambda x: x.gap)
    return GapResult(best.s, best.gap, tuple(samples), spectrum.sector)


@dataclass(frozen=True)
class AdiabaticEstimate:
    value: float
    s: float
    level: int


def adiabatic_time_estimate(
    model: IsingModel,
    schedule: Schedule,
    s_grid: Sequence[float],
    levels: int = 1,
    sector: str = "auto",
) -> AdiabaticEstimate:
    """Largest ``|<E_n| dH/ds |E_0>| / (E_n - E_0)**2`` over the grid, ``1 <= n <= levels``.

    ``n`` counts levels above the (possibly degenerate) ground space. A
    vanishing gap gives ``value = inf`` at the offending ``s``.
    """
    spectrum = _Spectrum(model, schedule, sector)
    best = AdiabaticEstimate(0.0, float(s_grid[0]) if len(s_grid) else 0.0, 0)
    for s in s_grid:
        s = float(s)
        w, v = spectrum.at(s)
        da, db = schedule.slopes(s)
        dh = da * spectrum.driver + db * spectrum.final
        excited = np.flatnonzero(w - w[0] >= DEGENERACY_TOL)[:levels]
        if excited.size == 0:
            return AdiabaticEstimate(math.inf, s, 1)
        ground = v[:, 0]
        for rank, idx in enumerate(excited, start=1):
            gap = w[idx] - w[0]
            elem = abs(v[:, idx].conj() @ dh @ ground)
            value = math.inf if gap == 0 else elem / gap**2
            if value > best.value:
                best = AdiabaticEstimate(float(value), s, rank)
    return best


@dataclass(frozen=True)
class LandauZenerParams:
    h_x: float
    v: float
    t_span: float | None = None

    def __post_init__(self):
        if self.h_x <= 0 or self.v <= 0:
            raise ValidationError("h_x and v must be positive")
        if self.t_span is not None and self.t_span <= 0:
            raise ValidationError("t_span must be positive")

    @property
    def span(self) -> float:
        return default_t_span(self.h_x, self.v) if self.t_span is None else float(self.t_span)


@dataclass(frozen=True)
class LandauZenerResult:
    p_up: float
    p_down: float
    span_ok: bool
    t_span: float
    steps: int


def default_t_span(h_x: float, v: float) -> float:
    """Smallest half-window meeting the ``20 max(1, h_x) / sqrt(v)`` sufficiency rule."""
    return 20.0 * max(1.0, h_x) / math.sqrt(v)


def _product(mats: np.ndarray) -> np.ndarray:
    """``mats[-1] @ ... @ mats[0]`` by pairwise reduction."""
    while mats.shape[0] > 1:
        if mats.shape[0] % 2:
            mats = np.concatenate([mats, np.eye(2, dtype=complex)[None]], axis=0)
        mats = mats[1::2] @ mats[0::2]
    return mats[0]


def _lz_eigvecs(h_x: float, h_z: float) -> np.ndarray:
    return np.linalg.eigh(np.array([[-h_z, -h_x], [-h_x, h_z]], dtype=complex))[1]


def landau_zener_probability(params: LandauZenerParams, steps: int = 200_000) -> LandauZenerResult:
    """Sweep ``H(t) = -h_x sigma^x - v t sigma^z`` over ``[-t_span, t_span]``.

    The system starts in the adiabatic state that coincides with spin down
    as ``t -> -inf`` (the ground state at ``-t_span``). Populations are read
    in the instantaneous eigenbasis at ``+t_span``: ``p_down`` is the weight
    left in the diabatic down level (the excited state there). Reading in
    that basis removes the slowly decaying finite-window oscillations of the
    bare sigma^z populations.
    """
    h_x, v, t = params.h_x, params.v, params.span
    if steps < 100:
        raise ValidationError("steps must be >= 100")
    dt = 2 * t / steps
    mids = -t + (np.arange(steps) + 0.5) * dt
    # H = -(h_x sigma^x + v t sigma^z); exp(-i H dt) = cos(w dt) + i sin(w dt) (n . sigma)
    nz = v * mids
    w = np.hypot(h_x, nz)
    c, s = np.cos(w * dt), np.sin(w * dt) / w
    mats = np.empty((steps, 2, 2), dtype=complex)
    mats[:, 0, 0] = c + 1j * s * nz
    mats[:, 1, 1] = c - 1j * s * nz
    mats[:, 0, 1] = 1j * s * h_x
    mats[:, 1, 0] = 1j * s * h_x
    u = _product(mats)
    psi0 = _lz_eigvecs(h_x, -v * t)[:, 0]
    psi = u @ psi0
    final = _lz_eigvecs(h_x, v * t)
    amps = final.conj().T @ psi
    p_up, p_down = float(abs(amps[0]) ** 2), float(abs(amps[1]) ** 2)
    return LandauZenerResult(p_up, p_down, t >= default_t_span(h_x, v) * (1 - 1e-12), t, steps)


def _default_betas(model: IsingModel) -> tuple[float, float]:
    h = np.abs(model.linear_vector())
    jm = np.abs(model.coupling_matrix())
    jm = jm + jm.T
    field_max = h + jm.sum(axis=1)
    hi = 2 * float(field_max.max()) if field_max.size else 0.0
    coeffs = np.concatenate([h[h > 0], jm[jm > 0]])
    lo = 2 * float(coeffs.min()) if coeffs.size else 0.0
    if hi == 0:
        return 0.1, 1.0
    return math.log(2) / hi, math.log(100) / lo


def simulated_annealing(
    model: IsingModel | QuboModel,
    reads: int = 100,
    sweeps: int = 1000,
    beta_range: tuple[float, float] | None = None,
    seed: int | None = None,
) -> SampleSet:
    """Single-spin-flip Metropolis with a geometric inverse-temperature ramp.

    All reads advance together; each sweep visits every spin once in a
    fresh random order. A QUBO is solved through its Ising form and
    reported back in bits.
    """
    if reads < 1 or sweeps < 1:
        raise ValidationError("reads and sweeps must be >= 1")
    ising = qubo_to_ising(model) if isinstance(model, QuboModel) else model
    n = ising.num_variables
    rng = make_rng(seed)
    b0, b1 = beta_range if beta_range is not None else _default_betas(ising)
    if b0 <= 0 or b1 <= 0:
        raise ValidationError("inverse temperatures must be positive")
    betas = np.geomspace(b0, b1, sweeps)
    h = ising.linear_vector()
    jm = ising.coupling_matrix()
    jsym = jm + jm.T
    spins = rng.choice(np.array([-1.0, 1.0]), size=(reads, n))
    for beta in betas:
        for i in rng.permutation(n):
            local = h[i] + spins @ jsym[:, i]
            delta = -2.0 * spins[:, i] * local
            accept = (delta <= 0) | (rng.random(reads) < np.exp(-beta * np.maximum(delta, 0.0)))
            spins[accept, i] *= -1
    info = {"seed": seed, "reads": reads, "sweeps": sweeps, "beta_range": [float(b0), float(b1)]}
    if isinstance(model, QuboModel):
        bits = ((1 + spins) // 2).astype(int)
        return SampleSet.from_samples(bits, n, "BINARY", lambda x: energy(model, x), info=info)
    return SampleSet.from_samples(spins.astype(int), n, "SPIN", lambda s: energy(ising, s), info=info)
