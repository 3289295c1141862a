"""Desk-scale quantum computing toolkit.

Gate-based state-vector simulation with a small text circuit format, QFT,
adder and QAOA builders, Ising/QUBO modeling, closed-system annealing,
simulated annealing and Chimera minor embedding.
"""

__version__ = "0.1.0"

from .algorithms import (
    Landscape,
    QaoaParams,
    build_draper_adder,
    build_qaoa_circuit,
    build_qft,
    qaoa_energy,
    qaoa_landscape,
    qaoa_optimize,
)
from .anneal import (
    LandauZenerParams,
    Schedule,
    adiabatic_time_estimate,
    evolve_closed,
    hamiltonian_at,
    landau_zener_probability,
    min_gap,
    simulated_annealing,
)
from .circuit import Circuit, CircuitBuilder, GateOp, compose, inverse, reverse_bit_ordering, simulate, to_unitary
from .embed import (
    Embedding,
    HardwareGraph,
    chimera_graph,
    embed_model,
    find_embedding,
    unembed,
    validate_embedding,
)
from .errors import CapacityError, DeskQCError, EmbeddingNotFound, ProblemFormatError, ValidationError
from .gates import Gate, axis_angle_of, dagger, equal_up_to_global_phase, matrix_of
from .ising import (
    IsingModel,
    QuboModel,
    add_equality_penalty,
    brute_force_solve,
    build_garden_model,
    energy,
    ising_to_qubo,
    qubo_to_ising,
    rescale,
)
from .parser import ParseError, parse_circuit, serialize_circuit
from .state import SampleSet, StateVector, bloch_vector, ising_expectation, probabilities, sample_counts
