"""``deskqc`` command line: run circuits, scan/optimize QAOA, anneal, solve, embed.

Exit codes: 0 success, 1 usage, 2 bad input, 3 size cap exceeded,
4 no solution (e.g. no embedding found).
"""
from __future__ import annotations

import argparse
import json
import sys
from typing import Sequence

import numpy as np

from . import __version__
from .algorithms import QaoaParams, default_grids, qaoa_landscape, qaoa_optimize
from .anneal import evolve_closed, get_schedule, ground_subspace_probability, simulated_annealing
from .circuit import simulate
from .embed import Embedding, chimera_graph, embed_model, find_embedding, load_edge_list, problem_edges, validate_embedding
from .errors import CapacityError, EmbeddingNotFound, ProblemFormatError, ValidationError
from .ising import IsingModel, QuboModel, brute_force_solve, energy, load_problem, problem_to_dict, qubo_to_ising
from .parser import ParseError, read_circuit
from .state import SampleRow, SampleSet, ising_diagonal, probabilities, sample_counts

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_CAPACITY, EXIT_NO_SOLUTION = 0, 1, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _emit(text: str, output: str | None) -> None:
    if output:
        with open(output, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json(data) -> str:
    return json.dumps(data, indent=2) + "\n"


def _as_ising(model: IsingModel | QuboModel) -> IsingModel:
    return qubo_to_ising(model) if isinstance(model, QuboModel) else model


def cmd_run(args) -> int:
    circuit = read_circuit(args.circuit)
    state = simulate(circuit)
    if args.format == "statevector":
        n = circuit.num_qubits
        lines = [
            f"{j:0{n}b} {a.real:.17g} {a.imag:.17g}"
            for j, a in enumerate(state.amplitudes)
            if abs(a) > 1e-12
        ]
        _emit("\n".join(lines) + "\n", args.output)
    else:
        counts = sample_counts(state, args.shots, args.seed)
        _emit(_json(counts.to_dict()), args.output)
    return EXIT_OK


def _parse_grid(text: str) -> tuple[int, int]:
    try:
        nb, ng = (int(x) for x in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must look like 64x128, got {text!r}") from None
    if nb < 1 or ng < 1:
        raise argparse.ArgumentTypeError("grid sizes must be positive")
    return nb, ng


def _default_target(model: IsingModel) -> str:
    """Bitstring of the first brute-force ground state, with qubit 0 <-> spin +1."""
    best = brute_force_solve(model).configs[0]
    return "".join("0" if s > 0 else "1" for s in best)


def cmd_qaoa(args) -> int:
    model = _as_ising(load_problem(args.problem))
    if args.optimize:
        betas = args.init_beta or [2.4] * args.p
        gammas = args.init_gamma or [0.6] * args.p
        if len(betas) != args.p or len(gammas) != args.p:
            raise ValidationError(f"need {args.p} initial betas and gammas")
        result = qaoa_optimize(model, args.p, QaoaParams(tuple(betas), tuple(gammas)),
                               args.max_evals, seed=args.seed)
        _emit(_json({
            "betas": list(result.params.betas),
            "gammas": list(result.params.gammas),
            "energy": result.energy,
            "converged": result.converged,
            "evaluations": result.evaluations,
            "seed": args.seed,
        }), args.output)
        return EXIT_OK
    if args.p != 1:
        raise ValidationError("grid scans are defined for p = 1 only")
    target = args.target or _default_target(model)
    landscape = qaoa_landscape(model, *default_grids(*args.grid), target)
    if args.output:
        landscape.to_csv(args.output)
    else:
        landscape.write_csv(sys.stdout)
    return EXIT_OK


def cmd_anneal(args) -> int:
    model = _as_ising(load_problem(args.problem))
    schedule = get_schedule(args.schedule)
    state = evolve_closed(model, schedule, args.t_max, args.steps)
    probs = probabilities(state)
    diag = ising_diagonal(model, state.num_qubits)
    n = model.num_variables
    order = np.lexsort((np.arange(probs.size), -np.round(probs, 15)))[:8]
    top = [
        {
            "bitstring": f"{j:0{n}b}",
            "spins": [1 - 2 * int(b) for b in f"{j:0{n}b}"],
            "probability": float(probs[j]),
            "energy": float(diag[j]),
        }
        for j in order
    ]
    _emit(_json({
        "ground_probability": ground_subspace_probability(state, model),
        "top": top,
        "schedule": schedule.name,
        "t_max": args.t_max,
        "steps": args.steps,
        "seed": args.seed,
    }), args.output)
    return EXIT_OK


def cmd_solve(args) -> int:
    model = load_problem(args.problem)
    vartype = "BINARY" if isinstance(model, QuboModel) else "SPIN"
    if args.method == "brute":
        result = brute_force_solve(model)
        rows = [SampleRow(c, 1, result.energy) for c in result.configs]
        samples = SampleSet(rows, model.num_variables, vartype,
                            {"method": "brute", "degeneracy": result.degeneracy, "seed": args.seed})
    else:
        samples = simulated_annealing(model, args.reads, args.sweeps, seed=args.seed)
        samples.info["method"] = "sa"
    if args.format == "table":
        _emit(str(samples) + "\n", args.output)
    else:
        _emit(_json(samples.to_dict()), args.output)
    return EXIT_OK


def cmd_embed(args) -> int:
    model = _as_ising(load_problem(args.problem))
    if args.edge_list:
        hw = load_edge_list(args.edge_list)
    else:
        hw = chimera_graph(*args.chimera)
    variables = range(model.num_variables)
    edges = problem_edges(model)
    emb = find_embedding(edges, hw, seed=args.seed, tries=args.tries, variables=variables)
    violations = validate_embedding(edges, hw, emb, variables)
    if violations:
        raise EmbeddingNotFound("; ".join(map(str, violations)))
    physical = embed_model(model, emb, hw, args.chain_strength)
    emb.save(args.embedding_out)
    with open(args.physical_out, "w", encoding="utf-8") as fh:
        fh.write(_json(problem_to_dict(physical)))
    _emit(_json({
        "embedding": emb.to_dict(),
        "chain_lengths": {str(k): v for k, v in emb.chain_lengths().items()},
        "hardware": hw.layout,
        "chain_strength": args.chain_strength,
        "embedding_file": args.embedding_out,
        "physical_file": args.physical_out,
        "seed": args.seed,
    }), args.output)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="deskqc", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, formats=None):
        p.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
        p.add_argument("--output", "-o", help="write to this file instead of stdout")
        if formats:
            p.add_argument("--format", choices=formats, default=formats[0])

    p = sub.add_parser("run", help="simulate a .jq circuit")
    p.add_argument("circuit")
    p.add_argument("--shots", type=int, default=1000)
    common(p, ["counts", "statevector"])
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("qaoa", help="QAOA grid scan (CSV) or optimization (JSON)")
    p.add_argument("problem")
    p.add_argument("--p", type=int, default=1)
    p.add_argument("--grid", type=_parse_grid, default=(64, 128), help="beta x gamma points, e.g. 64x128")
    p.add_argument("--target", help="success bitstring q0..q(n-1); default: a brute-force ground state")
    p.add_argument("--optimize", action="store_true")
    p.add_argument("--init-beta", type=float, nargs="+")
    p.add_argument("--init-gamma", type=float, nargs="+")
    p.add_argument("--max-evals", type=int, default=400)
    common(p)
    p.set_defaults(func=cmd_qaoa)

    p = sub.add_parser("anneal", help="closed-system annealing simulation")
    p.add_argument("problem")
    p.add_argument("--schedule", default="linear", help="built-in name or s,A,B CSV file")
    p.add_argument("--t-max", type=float, default=100.0)
    p.add_argument("--steps", type=int, default=1000)
    common(p)
    p.set_defaults(func=cmd_anneal)

    p = sub.add_parser("solve", help="brute force or simulated annealing")
    p.add_argument("problem")
    p.add_argument("--method", choices=["brute", "sa"], default="brute")
    p.add_argument("--reads", type=int, default=100)
    p.add_argument("--sweeps", type=int, default=1000)
    common(p, ["json", "table"])
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("embed", help="embed a problem onto a hardware graph")
    p.add_argument("problem")
    hw = p.add_mutually_exclusive_group()
    hw.add_argument("--chimera", type=int, nargs=3, metavar=("M", "N", "T"), default=(1, 1, 4))
    hw.add_argument("--edge-list", help="hardware graph as 'u v' lines")
    p.add_argument("--tries", type=int, default=10)
    p.add_argument("--chain-strength", type=float, default=2.0)
    p.add_argument("--embedding-out", default="embedding.json")
    p.add_argument("--physical-out", default="physical.json")
    common(p)
    p.set_defaults(func=cmd_embed)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, ProblemFormatError, ValidationError, json.JSONDecodeError, OSError) as exc:
        print(f"deskqc: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except CapacityError as exc:
        print(f"deskqc: error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except EmbeddingNotFound as exc:
        print(f"deskqc: no solution: {exc}", file=sys.stderr)
        return EXIT_NO_SOLUTION


if __name__ == "__main__":
    sys.exit(main())
