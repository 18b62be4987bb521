import json

import numpy as np
import pytest

from nnqst import fileio
from nnqst.cli import build_parser, run
from nnqst.errors import FormatError, ValidationError, VersionMismatch
from nnqst.measurement import pauli_set, simulate_counts
from nnqst.nne import TrainingConfig, generate_training_set, init_model, save_model
from nnqst.rng import seeded_rng
from nnqst.states import sample_bures

from conftest import H

SUBCOMMANDS = [
    "gen-states", "gen-trainset", "train", "estimate", "simulate-measure", "mle",
    "evaluate", "werner", "mixed", "bench", "fit-scaling",
]


class TestFiles:
    def test_states_round_trip(self, tmp_path, rng):
        states = [sample_bures(2, rng) for _ in range(5)]
        path = tmp_path / "s.jsonl"
        fileio.save_states(path, states, 2, seed=9)
        header, back = fileio.load_states(path)
        assert header["count"] == 5 and header["seed"] == 9
        for a, b in zip(states, back):
            np.testing.assert_array_equal(a, b)

    def test_freq_round_trip(self, tmp_path, rng):
        values = simulate_counts(sample_bures(2, rng), pauli_set(2), 333, rng)
        path = tmp_path / "f.json"
        fileio.save_freq(path, values, 2, 333)
        back, n, n0 = fileio.load_freq(path)
        np.testing.assert_array_equal(back, values)
        assert (n, n0) == (2, 333)

    def test_training_set_round_trip(self, tmp_path, rng):
        ts = generate_training_set(1, 20, rng, seed=4)
        path = tmp_path / "t.jsonl"
        fileio.save_training_set(path, ts)
        back = fileio.load_training_set(path)
        np.testing.assert_array_equal(back.features, ts.features)
        np.testing.assert_array_equal(back.targets, ts.targets)
        assert back.seed == 4 and back.n_qubits == 1

    def test_order_tag_checked(self, tmp_path):
        doc = fileio.freq_to_json(np.full(6, 0.5), 1, 10)
        doc["order"] = "base6-HVRLDA"
        with pytest.raises(FormatError):
            fileio.freq_from_json(doc)

    def test_bad_version(self, tmp_path):
        doc = fileio.freq_to_json(np.full(6, 0.5), 1, 10)
        doc["version"] = 7
        with pytest.raises(VersionMismatch):
            fileio.freq_from_json(doc)

    def test_bad_magic_and_length(self, tmp_path):
        path = tmp_path / "s.jsonl"
        fileio.save_states(path, [H], 1)
        text = path.read_text().replace("QSTSTATES", "QSTFREQ")
        path.write_text(text)
        with pytest.raises(FormatError):
            fileio.load_states(path)
        doc = fileio.freq_to_json(np.full(6, 0.5), 1, 10)
        doc["values"] = doc["values"][:-1]
        with pytest.raises(FormatError):
            fileio.freq_from_json(doc)

    def test_unphysical_state_rejected(self, tmp_path):
        path = tmp_path / "rho.json"
        path.write_text(json.dumps({"n_qubits": 1, "re": [[1.5, 0], [0, -0.5]], "im": [[0, 0], [0, 0]]}))
        with pytest.raises(ValidationError):
            fileio.load_density(path)

    def test_atomic_write_leaves_old_file(self, tmp_path, monkeypatch):
        path = tmp_path / "x.txt"
        path.write_text("old")

        def boom(*args):
            raise OSError("disk full")

        monkeypatch.setattr(fileio.os, "replace", boom)
        with pytest.raises(OSError):
            fileio.atomic_write_text(path, "new")
        assert path.read_text() == "old"
        assert [p.name for p in tmp_path.iterdir()] == ["x.txt"]

    def test_csv(self, tmp_path):
        rows = [{"n": 2, "step1_seconds": 0.5, "extra": 1}]
        text = fileio.rows_to_csv(rows, ["n", "step1_seconds"])
        assert text.splitlines()[0] == "n,step1_seconds"
        path = tmp_path / "b.csv"
        path.write_text(text)
        assert fileio.read_csv_rows(path)[0]["n"] == "2"


class TestCli:
    @pytest.mark.parametrize("cmd", SUBCOMMANDS)
    def test_help(self, cmd, capsys):
        assert run([cmd, "--help"]) == 0
        text = capsys.readouterr().out
        sub = build_parser()._subparsers._group_actions[0].choices[cmd]
        for action in sub._actions:
            for flag in action.option_strings:
                assert flag in text

    def test_usage_errors(self, capsys):
        assert run([]) == 1
        assert run(["gen-states", "--qubits", "1", "--count", "3"]) == 1  # no --seed
        assert run(["nonsense"]) == 1
        assert run(["mixed", "--model", "no-equals-sign", "--qubits", "1", "--seed", "1"]) == 1

    def test_gen_states(self, tmp_path):
        out = tmp_path / "s.jsonl"
        assert run(["gen-states", "--qubits", "1", "--count", "4", "--seed", "3", "--out", str(out)]) == 0
        header, states = fileio.load_states(out)
        assert len(states) == 4 and header["seed"] == 3

    def test_gen_trainset_default_count(self, tmp_path):
        out = tmp_path / "t.jsonl"
        assert run(["gen-trainset", "--qubits", "1", "--seed", "7", "--out", str(out)]) == 0
        assert len(fileio.load_training_set(out)) == 10000

    def test_measure_mle_estimate(self, tmp_path, rng):
        state, freq = tmp_path / "rho.json", tmp_path / "f.json"
        fileio.save_density(state, sample_bures(1, rng))
        assert run(["simulate-measure", "--state", str(state), "--n0", "1000", "--seed", "1",
                    "--out", str(freq)]) == 0
        assert run(["mle", "--freq", str(freq), "--out", str(tmp_path / "mle.json")]) == 0
        assert fileio.load_density(tmp_path / "mle.json").shape == (2, 2)
        model = tmp_path / "m.json"
        save_model(init_model(1, TrainingConfig(hidden=(4, 4)), seeded_rng(0)), model)
        assert run(["estimate", "--model", str(model), "--freq", str(freq), "--out", str(tmp_path / "e.json")]) == 0
        assert fileio.load_density(tmp_path / "e.json").shape == (2, 2)

    def test_estimate_order_mismatch_exits_1(self, tmp_path):
        model, freq, out = tmp_path / "m.json", tmp_path / "f.json", tmp_path / "rho.json"
        save_model(init_model(1, TrainingConfig(hidden=(4, 4)), seeded_rng(0)), model)
        doc = fileio.freq_to_json(np.full(6, 0.5), 1, 100)
        doc["order"] = "other"
        freq.write_text(json.dumps(doc))
        assert run(["estimate", "--model", str(model), "--freq", str(freq), "--out", str(out)]) == 1
        assert not out.exists()

    def test_model_qubit_mismatch_exits_1(self, tmp_path):
        model, freq = tmp_path / "m.json", tmp_path / "f.json"
        save_model(init_model(2, TrainingConfig(hidden=(4, 4)), seeded_rng(0)), model)
        fileio.save_freq(freq, np.full(6, 0.5), 1, 100)
        assert run(["estimate", "--model", str(model), "--freq", str(freq)]) == 1

    def test_missing_file_exits_1(self, tmp_path):
        assert run(["mle", "--freq", str(tmp_path / "nope.json")]) == 1

    def test_bench_and_fit(self, tmp_path, capsys):
        bench = tmp_path / "b.csv"
        assert run(["bench", "--min-qubits", "2", "--max-qubits", "5", "--repeats", "3", "--seed", "0",
                    "--out", str(bench)]) == 0
        capsys.readouterr()
        assert run(["fit-scaling", "--in", str(bench)]) == 0
        fit = json.loads(capsys.readouterr().out)
        assert set(fit) == {"A", "x", "residual", "n_points", "rejected"}

    def test_fit_scaling_bad_input(self, tmp_path):
        path = tmp_path / "b.csv"
        path.write_text("n,step1_seconds\n2,0.1\n")
        assert run(["fit-scaling", "--in", str(path)]) == 1
        path.write_text("q,z\n1,2\n")
        assert run(["fit-scaling", "--in", str(path)]) == 1

    def test_studies_json(self, tmp_path, capsys):
        assert run(["werner", "--mle", "--q-values", "0", "1", "--n0", "200", "--repeats", "2",
                    "--seed", "1", "--json"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert [json.loads(x)["q"] for x in lines] == [0.0, 1.0]
        assert run(["mixed", "--mle", "--qubits", "1", "--repeats", "2", "--seed", "1"]) == 0
        assert capsys.readouterr().out.startswith("n,estimator,n0")
        assert run(["mixed", "--qubits", "1", "--seed", "1"]) == 1  # no estimator for n=1

    def test_evaluate_needs_estimator(self, tmp_path):
        assert run(["evaluate", "--qubits", "1", "--count", "2", "--seed", "0"]) == 1
