import csv
import math
from functools import reduce

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from _helpers import dft_matrix
from deskqc.algorithms import (
    QaoaParams,
    build_draper_adder,
    build_qaoa_circuit,
    build_qft,
    default_grids,
    qaoa_energy,
    qaoa_landscape,
    qaoa_optimize,
)
from deskqc.circuit import CircuitBuilder, compose, inverse, reverse_bit_ordering, simulate, to_unitary
from deskqc.errors import ValidationError
from deskqc.gates import Gate
from deskqc.ising import EXAMPLE_QAOA_MODEL, IsingModel
from deskqc.state import StateVector, probabilities, sample_counts

X = np.array([[0, 1], [1, 0]])
Z = np.diag([1.0, -1.0])


def bit_reversal(n):
    dim = 2**n
    perm = np.zeros((dim, dim))
    for j in range(dim):
        perm[int(format(j, f"0{n}b")[::-1], 2), j] = 1
    return perm


def register_state(m, l_amps, j_amps):
    return StateVector(np.kron(l_amps, j_amps))


def basis(m, *values):
    v = np.zeros(2**m)
    for x in values:
        v[x] = 1
    return v / np.linalg.norm(v)


def qaoa_oracle_state(model, betas, gammas):
    """QAOA state from matrix exponentials of the cost and mixer Hamiltonians."""
    n = model.num_variables
    spins = [[1 - 2 * ((j >> (n - 1 - i)) & 1) for i in range(n)] for j in range(2**n)]
    cost = np.array([
        model.offset
        + sum(h * s[i] for i, h in model.h.items())
        + sum(c * s[i] * s[k] for (i, k), c in model.J.items())
        for s in spins
    ])
    mixer = sum(
        reduce(np.kron, [X if q == i else np.eye(2) for q in range(n)]) for i in range(n)
    )
    psi = np.full(2**n, 2 ** (-n / 2), dtype=complex)
    for beta, gamma in zip(betas, gammas):
        psi = np.exp(-1j * gamma * (cost - model.offset)) * psi
        psi = expm(-1j * beta * mixer) @ psi
    return psi, cost


class TestQft:
    def test_single_qubit_is_h(self):
        c = build_qft([0])
        assert [op.gate for op in c.ops] == [Gate("H")]

    def test_two_qubits_on_one(self):
        state = simulate(build_qft([0, 1]), StateVector.basis("01"))
        np.testing.assert_allclose(state.amplitudes, np.array([1, 1j, -1, -1j]) / 2, atol=1e-12)

    @pytest.mark.parametrize("n", range(1, 7))
    def test_matches_dft(self, n):
        np.testing.assert_allclose(to_unitary(build_qft(range(n))), dft_matrix(n), atol=1e-10)

    @pytest.mark.parametrize("n", range(1, 7))
    def test_without_swaps_is_bit_reversed(self, n):
        u = to_unitary(build_qft(range(n), include_swaps=False))
        np.testing.assert_allclose(bit_reversal(n) @ u, dft_matrix(n), atol=1e-12)

    @pytest.mark.parametrize("n", range(1, 5))
    def test_explicit_reversal_of_output_state(self, n):
        rng = np.random.default_rng(n)
        psi = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
        psi = StateVector(psi / np.linalg.norm(psi))
        no_swap = reverse_bit_ordering(simulate(build_qft(range(n), include_swaps=False), psi))
        np.testing.assert_allclose(no_swap.amplitudes, simulate(build_qft(range(n)), psi).amplitudes, atol=1e-12)

    @pytest.mark.parametrize("n", [2, 4, 6])
    def test_inverse_is_identity(self, n):
        c = build_qft(range(n))
        np.testing.assert_allclose(to_unitary(compose(c, inverse(c))), np.eye(2**n), atol=1e-10)

    def test_quadratic_gate_count(self):
        for n in range(1, 9):
            gates = build_qft(range(n), include_swaps=False).gate_ops()
            assert len(gates) == n * (n + 1) // 2

    def test_subset_of_wider_register(self):
        c = build_qft([3, 1], num_qubits=4)
        assert c.num_qubits == 4
        assert {q for op in c.ops for q in op.qubits} == {1, 3}

    def test_duplicates_rejected(self):
        with pytest.raises(ValidationError):
            build_qft([0, 0])


class TestDraperAdder:
    @pytest.mark.parametrize("m", [1, 2, 3])
    def test_is_classical_permutation(self, m):
        u = to_unitary(build_draper_adder(m))
        dim = 2**m
        expected = np.zeros((dim * dim, dim * dim))
        for l in range(dim):
            for j in range(dim):
                expected[l * dim + (j + l) % dim, l * dim + j] = 1
        np.testing.assert_allclose(u, expected, atol=1e-10)

    def test_two_plus_one(self):
        out = simulate(build_draper_adder(2), register_state(2, basis(2, 2), basis(2, 1)))
        np.testing.assert_allclose(out.amplitudes, np.kron(basis(2, 2), basis(2, 3)), atol=1e-12)

    def test_adds_superposition(self):
        out = simulate(build_draper_adder(2), register_state(2, basis(2, 2), basis(2, 0, 1)))
        np.testing.assert_allclose(out.amplitudes, np.kron(basis(2, 2), basis(2, 2, 3)), atol=1e-12)

    def test_wraps_around(self):
        # (|0> + |3>)/sqrt2 (x) (|1> + |2> + |3>)/sqrt3
        out = simulate(build_draper_adder(2), register_state(2, basis(2, 0, 3), basis(2, 1, 2, 3)))
        expected = (np.kron(basis(2, 0), basis(2, 1, 2, 3)) + np.kron(basis(2, 3), basis(2, 0, 1, 2))) / math.sqrt(2)
        np.testing.assert_allclose(out.amplitudes, expected, atol=1e-12)

    @pytest.mark.parametrize("m", [0, 7])
    def test_range(self, m):
        with pytest.raises(ValidationError):
            build_draper_adder(m)

    def test_uses_only_serializable_gates(self):
        from deskqc.parser import parse_circuit, serialize_circuit

        c = build_draper_adder(3)
        assert parse_circuit(serialize_circuit(c)) == c


class TestQaoaCircuit:
    def test_example_gate_layout(self):
        beta, gamma = 0.3, 0.9
        c = build_qaoa_circuit(EXAMPLE_QAOA_MODEL, QaoaParams((beta,), (gamma,)))
        expected = CircuitBuilder(3)
        for q in range(3):
            expected.h(q)
        for q, h in enumerate((-1.0, 0.5, -0.5)):
            expected.rz(2 * gamma * h, q)
        expected.cnot(0, 1).rz(2 * gamma * 0.5, 1).cnot(0, 1)
        expected.cnot(1, 2).rz(2 * gamma * 0.5, 2).cnot(1, 2)
        for q in range(3):
            expected.rx(2 * beta, q)
        assert c == expected.build()

    def test_zero_model_has_no_weighting(self):
        c = build_qaoa_circuit(IsingModel(3), QaoaParams((0.1,), (0.2,)))
        assert [op.gate.name for op in c.ops] == ["H"] * 3 + ["Rx"] * 3

    def test_p2_doubles_blocks(self):
        one = build_qaoa_circuit(EXAMPLE_QAOA_MODEL, QaoaParams((0.1,), (0.2,)))
        two = build_qaoa_circuit(EXAMPLE_QAOA_MODEL, QaoaParams((0.1, 0.3), (0.2, 0.4)))
        assert len(two.ops) - 3 == 2 * (len(one.ops) - 3)

    def test_params_validation(self):
        with pytest.raises(ValidationError):
            QaoaParams((0.1, 0.2), (0.3,))
        with pytest.raises(ValidationError):
            QaoaParams((), ())

    @settings(max_examples=30, deadline=None)
    @given(
        st.lists(st.floats(-math.pi, math.pi), min_size=1, max_size=3),
        st.integers(0, 2**32 - 1),
        st.integers(1, 4),
    )
    def test_matches_hamiltonian_oracle(self, betas, seed, n):
        rng = np.random.default_rng(seed)
        gammas = list(rng.uniform(0, 2 * math.pi, len(betas)))
        h = {i: float(v) for i, v in enumerate(rng.normal(size=n))}
        J = {(i, k): float(rng.normal()) for i in range(n) for k in range(i + 1, n) if rng.random() < 0.7}
        model = IsingModel(n, h, J, offset=0.25)
        psi, cost = qaoa_oracle_state(model, betas, gammas)
        state = simulate(build_qaoa_circuit(model, QaoaParams(tuple(betas), tuple(gammas))))
        np.testing.assert_allclose(state.amplitudes, psi, atol=1e-10)
        assert qaoa_energy(model, QaoaParams(tuple(betas), tuple(gammas))) == pytest.approx(
            float(np.abs(psi) ** 2 @ cost), abs=1e-10
        )


class TestQaoaValues:
    def test_reference_point(self):
        params = QaoaParams((2.5,), (0.7,))
        assert qaoa_energy(EXAMPLE_QAOA_MODEL, params) == pytest.approx(-1.69, abs=0.01)
        p = probabilities(simulate(build_qaoa_circuit(EXAMPLE_QAOA_MODEL, params)))
        assert p[0b010] == pytest.approx(0.589, abs=0.001)

    def test_coarse_grid_best_point(self):
        land = qaoa_landscape(EXAMPLE_QAOA_MODEL, [2.0, 2.5], [0.5, 0.7, 1.0], "010")
        beta, gamma, _ = land.argmin_energy()
        assert (beta, gamma) == (2.5, 0.7)
        assert land.argmax_success()[:2] == (2.5, 0.7)

    def test_periodicity(self):
        land = qaoa_landscape(EXAMPLE_QAOA_MODEL, [0.4, 0.4 + 2 * math.pi], [1.1, 1.1 + 2 * math.pi], "010")
        assert np.ptp(land.energy) < 1e-10

    def test_sampled_energy_within_binomial_bounds(self):
        params = QaoaParams((2.5,), (0.7,))
        state = simulate(build_qaoa_circuit(EXAMPLE_QAOA_MODEL, params))
        shots = 100_000
        counts = sample_counts(state, shots, seed=11).counts()
        from deskqc.state import ising_diagonal

        diag = ising_diagonal(EXAMPLE_QAOA_MODEL, 3)
        samples = np.concatenate([np.full(c, diag[int(b, 2)]) for b, c in counts.items()])
        exact = qaoa_energy(EXAMPLE_QAOA_MODEL, params)
        sigma = math.sqrt(probabilities(state) @ (diag - exact) ** 2 / shots)
        assert abs(samples.mean() - exact) < 3 * sigma

    def test_landscape_csv(self, tmp_path):
        land = qaoa_landscape(EXAMPLE_QAOA_MODEL, [0.0, 1.0], [0.5], "010")
        path = tmp_path / "land.csv"
        land.to_csv(path)
        rows = list(csv.reader(path.open()))
        assert rows[0] == ["beta", "gamma", "energy", "success_probability"]
        assert [float(r[0]) for r in rows[1:]] == [0.0, 1.0]
        assert float(rows[1][2]) == land.energy[0, 0]

    def test_landscape_shapes_and_range(self):
        betas, gammas = default_grids(8, 16)
        land = qaoa_landscape(EXAMPLE_QAOA_MODEL, betas, gammas, "010")
        assert land.energy.shape == land.success_probability.shape == (8, 16)
        assert np.all((land.success_probability >= 0) & (land.success_probability <= 1))
        assert betas[-1] < math.pi and gammas[-1] < 2 * math.pi

    def test_bad_target(self):
        with pytest.raises(ValidationError):
            qaoa_landscape(EXAMPLE_QAOA_MODEL, [0.0], [0.0], "01")


class TestQaoaOptimize:
    def test_p1_from_reference_neighbourhood(self):
        init = QaoaParams((2.4,), (0.6,))
        res = qaoa_optimize(EXAMPLE_QAOA_MODEL, 1, init, seed=3)
        assert res.energy <= -1.69
        assert res.energy <= qaoa_energy(EXAMPLE_QAOA_MODEL, init)
        assert res.converged
        assert res.seed == 3

    def test_p2_warm_start_improves(self):
        p1 = qaoa_optimize(EXAMPLE_QAOA_MODEL, 1, QaoaParams((2.4,), (0.6,)))
        p2 = qaoa_optimize(EXAMPLE_QAOA_MODEL, 2, p1.params.extend(2.5, 0.7))
        assert p2.energy < p1.energy - 0.5

    def test_deterministic(self):
        a = qaoa_optimize(EXAMPLE_QAOA_MODEL, 1, QaoaParams((1.0,), (1.0,)), max_evaluations=50, seed=1)
        b = qaoa_optimize(EXAMPLE_QAOA_MODEL, 1, QaoaParams((1.0,), (1.0,)), max_evaluations=50, seed=1)
        assert a == b

    def test_budget_exhausted_returns_best_so_far(self):
        init = QaoaParams((1.0,), (1.0,))
        res = qaoa_optimize(EXAMPLE_QAOA_MODEL, 1, init, max_evaluations=5)
        assert not res.converged
        assert res.evaluations <= 6
        assert res.energy <= qaoa_energy(EXAMPLE_QAOA_MODEL, init)

    @pytest.mark.parametrize("start", [(0.3, 0.2), (1.2, 2.0), (2.9, 5.0)])
    def test_single_spin_spectral_bound(self, start):
        model = IsingModel(1, {0: -1.0})
        res = qaoa_optimize(model, 1, QaoaParams((start[0],), (start[1],)), max_evaluations=200)
        assert res.energy >= -1 - 1e-12

    def test_bad_arguments(self):
        with pytest.raises(ValidationError):
            qaoa_optimize(EXAMPLE_QAOA_MODEL, 1, QaoaParams((1.0,), (1.0,)), max_evaluations=0)
        with pytest.raises(ValidationError):
            qaoa_optimize(EXAMPLE_QAOA_MODEL, 2, QaoaParams((1.0,), (1.0,)))
