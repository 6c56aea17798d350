import subprocess
import sys

import pytest

from arnsim import cli, dataio


@pytest.fixture(scope="module")
def csv_path(tmp_path_factory, mnist5k):
    idx = dataio.sample_indices(mnist5k, dataio.SampleSpec(30, seed=9))
    p = tmp_path_factory.mktemp("cli") / "digits.csv"
    dataio.save_csv(mnist5k.subset(idx), p)
    return p


def files(d):
    return {p.name: p.read_bytes() for p in sorted(d.iterdir())}


def run(*argv):
    return cli.main([str(a) for a in argv])


class TestTrainTest:
    def test_round(self, csv_path, tmp_path, capsys):
        a, b = tmp_path / "a", tmp_path / "b"
        for d in (a, b):
            assert run("train", "--data", csv_path, "--train-size", 10, "--out", d) == 0
            assert run("test", "--data", csv_path, "--model", d / "model.arn", "--test-size", 5,
                       "--same-pool", "--policy", "relax-rho", "--out", d) == 0
        assert files(a) == files(b)
        assert set(files(a)) == {"model.arn", "node_counts.txt", "confusion.csv",
                                 "accuracy.txt", "verdicts.csv"}
        out = capsys.readouterr().out
        assert "L1 nodes: " in out and "accuracy: " in out
        rows = (a / "confusion.csv").read_text().splitlines()
        assert len(rows) == 11
        assert all(r.endswith(",5") for r in rows[1:])
        assert len((a / "verdicts.csv").read_text().splitlines()) == 51

    def test_hex_model(self, csv_path, tmp_path):
        assert run("train", "--data", csv_path, "--train-size", 3, "--hex", "--out", tmp_path) == 0
        m = dataio.load_model(tmp_path / "model.arn")
        assert "encoding hex" in (tmp_path / "model.arn").read_text()
        assert m.config.train_size == 3

    def test_missing_file(self, tmp_path, capsys):
        assert run("train", "--data", tmp_path / "nope.csv", "--out", tmp_path) == 2
        assert "nope.csv" in capsys.readouterr().err

    def test_bad_model(self, csv_path, tmp_path, capsys):
        bad = tmp_path / "bad.arn"
        bad.write_text("not a model\n")
        assert run("test", "--data", csv_path, "--model", bad, "--out", tmp_path) == 2
        assert "ARNMODEL" in capsys.readouterr().err

    def test_usage_errors(self, csv_path, tmp_path):
        for argv in (["train", "--data", csv_path, "--threshold", "1.5"],
                     ["train", "--data", csv_path, "--train-size", "0"],
                     ["train"],
                     ["frobnicate"]):
            with pytest.raises(SystemExit) as e:
                run(*argv)
            assert e.value.code == 2

    def test_too_large_sample(self, csv_path, tmp_path):
        assert run("train", "--data", csv_path, "--train-size", 31, "--out", tmp_path) == 2


class TestOtherCommands:
    def test_eval_approx(self, tmp_path, capsys):
        assert run("eval-approx", "--curve", "sigmoid", "--method", "pwl",
                   "--spacing", "nonuniform", "--out", tmp_path) == 0
        assert "max rel error 0.02" in capsys.readouterr().out
        names = set(files(tmp_path))
        tag = "sigmoid_pwl_nonuniform"
        assert {f"errors_{tag}.csv", f"lut_{tag}.txt", f"fx_{tag}.csv",
                f"summary_{tag}.txt"} == names

    def test_eval_approx_resonator(self, tmp_path):
        assert run("eval-approx", "--curve", "resonator", "--method", "soi", "--out", tmp_path) == 0

    def test_verify_adder(self, tmp_path, capsys):
        code = run("verify-adder", "--base", 2, "--max-n", 64, "--operands",
                   "0A1A", "0FFF", "0A2D", "01CD", "--random-vectors", 200, "--out", tmp_path)
        assert code == 0
        out = capsys.readouterr().out
        assert "sum: 2613" in out and "violations: 0" in out
        rows = (tmp_path / "transitions.csv").read_text().splitlines()
        assert "2,3,4,19,19" in rows

    def test_bench(self, tmp_path, capsys):
        assert run("bench-throughput", "--out", tmp_path) == 0
        out = capsys.readouterr().out
        assert "R_A=12 R_T=17: serial_wins=false" in out
        assert "R_A=32 R_T=17: serial_wins=true" in out

    def test_neuron_sim(self, tmp_path, capsys):
        assert run("neuron-sim", "--kind", "arn", "--out", tmp_path) == 0
        assert run("neuron-sim", "--kind", "mlp", "--out", tmp_path) == 0
        out = capsys.readouterr().out
        # exact values are computed from the encoded inputs
        assert "exact 3.815" in out and "exact 0.594" in out
        csv = (tmp_path / "neuron_arn.csv").read_text().splitlines()
        assert csv[1].startswith("0.500000,0800,0.250000,0400,0.228")

    def test_neuron_sim_hex_count(self, tmp_path):
        with pytest.raises(SystemExit):
            run("neuron-sim", "--x", "0800", "--out", tmp_path)

    def test_deterministic_reports(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for d in (a, b):
            run("eval-approx", "--curve", "tanh", "--method", "soi", "--out", d)
            run("verify-adder", "--random-vectors", 50, "--out", d)
            run("neuron-sim", "--kind", "mlp", "--out", d)
        assert files(a) == files(b)


def test_module_entry(tmp_path):
    r = subprocess.run([sys.executable, "-m", "arnsim", "bench-throughput", "--out", str(tmp_path)],
                       capture_output=True, text=True)
    assert r.returncode == 0 and "serial_wins" in r.stdout
