import csv
import json
import math

import numpy as np
import pytest

from _helpers import HTH_CNOT_SOURCE, HTH_CNOT_STATE
from deskqc.cli import main
from deskqc.embed import Embedding, chimera_graph, validate_embedding
from deskqc.gates import equal_up_to_global_phase
from deskqc.ising import (
    EXAMPLE_QAOA_MODEL,
    EXAMPLE_QUBO,
    IsingModel,
    build_garden_model,
    load_problem,
    save_problem,
)
from deskqc.state import SampleSet


@pytest.fixture
def files(tmp_path):
    def write(name, model):
        path = tmp_path / name
        save_problem(model, path)
        return str(path)

    circuit = tmp_path / "hth_cnot.jq"
    circuit.write_text(HTH_CNOT_SOURCE)
    return {
        "dir": tmp_path,
        "circuit": str(circuit),
        "example": write("example.json", EXAMPLE_QAOA_MODEL),
        "qubo": write("qubo.json", EXAMPLE_QUBO),
        "garden": write("garden.json", build_garden_model()),
        "triangle": write("triangle.json", IsingModel(3, {}, {(0, 1): 1.0, (0, 2): 1.0, (1, 2): 1.0})),
        "k6": write("k6.json", IsingModel(6, {}, {(i, j): 1.0 for i in range(6) for j in range(i + 1, 6)})),
    }


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


class TestRun:
    def test_counts(self, capsys, files):
        code, out, _ = run(capsys, "run", files["circuit"], "--shots", 1000)
        assert code == 0
        ss = SampleSet.from_dict(json.loads(out))
        assert set(ss.counts()) <= {"00", "11"}
        assert ss.num_samples == 1000

    def test_statevector(self, capsys, files):
        code, out, _ = run(capsys, "run", files["circuit"], "--format", "statevector")
        assert code == 0
        lines = [line.split() for line in out.splitlines()]
        assert [parts[0] for parts in lines] == ["00", "11"]
        amps = np.zeros(4, dtype=complex)
        for bits, re, im in lines:
            amps[int(bits, 2)] = complex(float(re), float(im))
        assert equal_up_to_global_phase(amps, HTH_CNOT_STATE, 1e-12)

    def test_empty_file(self, capsys, files):
        path = files["dir"] / "empty.jq"
        path.write_text("")
        code, _, err = run(capsys, "run", path)
        assert code == 2 and "line 1" in err

    def test_parse_error_located(self, capsys, files):
        path = files["dir"] / "bad.jq"
        path.write_text("H 0\nFOO 1\n")
        code, _, err = run(capsys, "run", path)
        assert code == 2 and "line 2" in err and "FOO" in err

    def test_capacity(self, capsys, files):
        path = files["dir"] / "wide.jq"
        path.write_text("H 30\n")
        assert run(capsys, "run", path)[0] == 3

    def test_output_file_and_determinism(self, capsys, files):
        outs = [files["dir"] / f"counts{i}.json" for i in range(2)]
        for out in outs:
            assert run(capsys, "run", files["circuit"], "--seed", 5, "-o", out)[0] == 0
        assert outs[0].read_bytes() == outs[1].read_bytes()
        assert json.loads(outs[0].read_text())["info"]["seed"] == 5


class TestQaoa:
    def test_grid_row_near_reference_point(self, capsys, files):
        out = files["dir"] / "landscape.csv"
        assert run(capsys, "qaoa", files["example"], "--grid", "64x128", "-o", out)[0] == 0
        with open(out, newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 64 * 128
        nearest = min(rows, key=lambda r: math.hypot(float(r["beta"]) - 2.5, float(r["gamma"]) - 0.7))
        assert float(nearest["energy"]) == pytest.approx(-1.69, abs=0.01)

    def test_grid_to_stdout_matches_file(self, capsys, files):
        out = files["dir"] / "small.csv"
        run(capsys, "qaoa", files["example"], "--grid", "4x8", "-o", out)
        code, printed, _ = run(capsys, "qaoa", files["example"], "--grid", "4x8")
        assert code == 0
        assert printed == out.read_text()
        rows = list(csv.reader(printed.splitlines()))
        assert len(rows) == 1 + 32
        # |E| is bounded by the sum of |h| and |J|, which is 3 for the example model
        assert all(len(r) == 4 and abs(float(r[2])) <= 3 for r in rows[1:])

    def test_optimize(self, capsys, files):
        code, out, _ = run(capsys, "qaoa", files["example"], "--optimize",
                           "--init-beta", 2.4, "--init-gamma", 0.6)
        assert code == 0
        data = json.loads(out)
        assert data["energy"] <= -1.69
        assert set(data) >= {"betas", "gammas", "energy", "converged", "seed"}

    def test_malformed_problem_names_field(self, capsys, files):
        path = files["dir"] / "bad.json"
        path.write_text(json.dumps({"type": "ising"}))
        code, _, err = run(capsys, "qaoa", path)
        assert code == 2 and "num_variables" in err

    def test_bad_grid_is_usage_error(self, capsys, files):
        with pytest.raises(SystemExit) as info:
            main(["qaoa", files["example"], "--grid", "64by128"])
        assert info.value.code == 1


class TestAnneal:
    def test_large_t_max(self, capsys, files):
        code, out, _ = run(capsys, "anneal", files["garden"], "--t-max", 100)
        assert code == 0
        data = json.loads(out)
        assert data["ground_probability"] >= 0.9
        assert len(data["top"]) == 8
        assert {tuple(r["spins"]) for r in data["top"][:2]} == {(-1, -1, 1, 1), (1, 1, -1, -1)}

    def test_tiny_t_max(self, capsys, files):
        data = json.loads(run(capsys, "anneal", files["garden"], "--t-max", 1e-9, "--steps", 100)[1])
        assert data["ground_probability"] == pytest.approx(2 / 16, abs=1e-9)

    def test_unknown_schedule(self, capsys, files):
        code, _, err = run(capsys, "anneal", files["garden"], "--schedule", "nope")
        assert code == 2 and "linear" in err

    def test_capacity(self, capsys, files):
        path = files["dir"] / "big.json"
        save_problem(IsingModel(15), path)
        assert run(capsys, "anneal", path)[0] == 3


class TestSolve:
    def test_brute_qubo(self, capsys, files):
        code, out, _ = run(capsys, "solve", files["qubo"])
        assert code == 0
        top = json.loads(out)["rows"][0]
        assert top["sample"] == [0, 1, 1] and top["energy"] == pytest.approx(-0.8)

    def test_brute_garden(self, capsys, files):
        rows = json.loads(run(capsys, "solve", files["garden"])[1])["rows"]
        assert [r["energy"] for r in rows] == [-4.0, -4.0]

    def test_sa_byte_identical(self, capsys, files):
        outs = [files["dir"] / f"sa{i}.json" for i in range(2)]
        for out in outs:
            run(capsys, "solve", files["qubo"], "--method", "sa", "--seed", 3, "-o", out)
        assert outs[0].read_bytes() == outs[1].read_bytes()
        ss = SampleSet.from_dict(json.loads(outs[0].read_text()))
        assert ss.first().sample == (0, 1, 1)

    def test_table(self, capsys, files):
        out = run(capsys, "solve", files["qubo"], "--format", "table")[1]
        assert out.splitlines()[1].split()[1:5] == ["0", "1", "1", "-0.8"]

    def test_unknown_method(self):
        with pytest.raises(SystemExit) as info:
            main(["solve", "x.json", "--method", "qpu"])
        assert info.value.code == 1


class TestEmbed:
    def embed(self, capsys, files, name, *extra):
        emb_out = files["dir"] / f"{name}-emb.json"
        phys_out = files["dir"] / f"{name}-phys.json"
        code, out, err = run(capsys, "embed", files[name], "--embedding-out", emb_out,
                             "--physical-out", phys_out, *extra)
        return code, out, err, emb_out, phys_out

    def test_triangle(self, capsys, files):
        code, out, _, emb_out, phys_out = self.embed(capsys, files, "triangle", "--chain-strength", 2.5)
        assert code == 0
        emb = Embedding.load(emb_out)
        assert sorted(emb.chain_lengths().values()) == [1, 1, 2]
        assert validate_embedding({(0, 1), (0, 2), (1, 2)}, chimera_graph(1, 1, 4), emb) == []
        physical = load_problem(phys_out)
        (chain,) = [sorted(c) for c in emb.chains.values() if len(c) == 2]
        assert physical.J[tuple(chain)] == -2.5
        assert json.loads(out)["seed"] == 0

    def test_garden_direct(self, capsys, files):
        code, _, _, emb_out, _ = self.embed(capsys, files, "garden")
        assert code == 0
        assert set(Embedding.load(emb_out).chain_lengths().values()) == {1}

    def test_k6_no_solution(self, capsys, files):
        code, _, err, emb_out, _ = self.embed(capsys, files, "k6", "--tries", 2)
        assert code == 4 and "no embedding" in err
        assert not emb_out.exists()

    def test_deterministic(self, capsys, files):
        first = self.embed(capsys, files, "triangle", "--seed", 9)[3].read_bytes()
        second = self.embed(capsys, files, "triangle", "--seed", 9)[3].read_bytes()
        assert first == second

    def test_missing_file(self, capsys, files):
        assert run(capsys, "embed", files["dir"] / "absent.json")[0] == 2


def test_requires_subcommand():
    with pytest.raises(SystemExit) as info:
        main([])
    assert info.value.code == 1
