import json
import re
import subprocess
import sys

import numpy as np
import pytest

from pertfool.attacks import AttackSpec
from pertfool.bench import (DEFAULT_EPS_GRID, parse_method_token, report_json,
                            run_report, run_sweep, sweep_csv)
from pertfool.cli import main
from pertfool.data import gen_blobs, save_dataset
from pertfool.metrics import rho2
from pertfool.network import Layer, Network, load_model, save_model

from test_metrics import axis_data, axis_net


class TestRunSweep:
    def test_cardinality_and_order(self):
        net, data = axis_net(), axis_data([0.02, 0.05, 0.2])
        spec = AttackSpec(method="alg1", proxy="logits", seed=1)
        records = run_sweep(net, data, ["random", "alg1"], [0.3, 0.01, 0.1], spec)
        assert len(records) == 6
        keys = [(r.method, r.eps) for r in records]
        assert keys == sorted(keys)

    def test_method_token_iteration_suffix(self):
        assert parse_method_token("alg1n:5") == ("alg1n", 5)
        assert parse_method_token("deepfool") == ("deepfool", None)
        with pytest.raises(ValueError):
            parse_method_token("alg1n:0")
        with pytest.raises(ValueError):
            parse_method_token("bogus")

    def test_parallel_equals_serial(self):
        net, data = axis_net(), axis_data(list(np.linspace(0.01, 0.3, 12)))
        spec = AttackSpec(method="alg1", proxy="logits", seed=7)
        methods = ["alg1", "alg1n:3", "random"]
        grid = [0.02, 0.07, 0.25]
        serial = run_sweep(net, data, methods, grid, spec, jobs=1)
        parallel = run_sweep(net, data, methods, grid, spec, jobs=2)
        assert sweep_csv(serial, {"seed": 7}) == sweep_csv(parallel, {"seed": 7})

    def test_csv_shape_and_reproducibility(self):
        net, data = axis_net(), axis_data([0.02, 0.05])
        spec = AttackSpec(method="alg1", proxy="logits", seed=3)
        payloads = []
        for _ in range(2):
            records = run_sweep(net, data, ["alg1", "random"], [0.01, 0.1], spec)
            payloads.append(sweep_csv(records, {"seed": 3, "p": "inf"}))
        assert payloads[0] == payloads[1]
        lines = payloads[0].splitlines()
        assert lines[0].startswith("# pertfool-sweep")
        assert lines[1].startswith("# config: ")
        json.loads(lines[1].removeprefix("# config: "))
        assert lines[2] == "method,eps,fooling_ratio,mean_iterations,samples"
        assert len(lines) == 3 + 4
        # full-precision numbers round-trip
        eps_cell = lines[3].split(",")[1]
        assert float(eps_cell) == 0.01


class TestRunReport:
    def test_fields_present_and_consistent(self):
        net, data = axis_net(), axis_data([0.03, 0.06, 0.1, 0.2])
        report = run_report(net, data, seed=0, proxy="logits",
                            eps_grid=[0.01, 0.05, 0.3],
                            curve_methods=("alg1", "random"))
        assert report.test_error == 0.0
        assert np.isfinite(report.rho1) and np.isfinite(report.rho2)
        assert report.min_eps_99 is not None
        assert len(report.fooling_curve) == 6
        for _, _, ratio in report.fooling_curve:
            assert 0.0 <= ratio <= 1.0
        # the report's rho2 is the metrics value, bit for bit
        assert report.rho2 == rho2(net, data, p=np.inf, proxy="logits")

    def test_json_artifact_reproducible_and_versioned(self):
        net, data = axis_net(), axis_data([0.03, 0.08])
        blobs = []
        for _ in range(2):
            report = run_report(net, data, seed=5, proxy="logits",
                                eps_grid=[0.02, 0.2], curve_methods=("alg1",))
            blobs.append(report_json(report, {"seed": 5}))
        assert blobs[0] == blobs[1]
        doc = json.loads(blobs[0])
        assert doc["report_version"] == 1
        assert doc["config"] == {"seed": 5}
        assert set(doc["versions"]) == {"pertfool", "numpy", "python"}
        assert doc["min_eps_99"] is not None

    def test_differently_trained_nets_both_reported(self):
        # ordering between the two nets is informative output, not asserted
        data = gen_blobs(n_samples=160, n_classes=2, dim=6, seed=2,
                         separation=0.5, noise=0.07)
        from pertfool.network import TrainConfig, random_network, train_sgd
        base = random_network([6, 8, 2], "tanh", seed=2)
        short = train_sgd(base, data, TrainConfig(seed=2, epochs=2))
        long = train_sgd(base, data, TrainConfig(seed=2, epochs=20))
        rows = {}
        for name, net in (("short", short), ("long", long)):
            rep = run_report(net, data, seed=1, eps_grid=[0.02, 0.1],
                             curve_methods=("alg1",))
            assert np.isfinite(rep.rho2)
            rows[name] = rep.rho2
        print(f"rho2 short-training {rows['short']:.5f} "
              f"vs long-training {rows['long']:.5f}")


@pytest.fixture
def cli_workspace(tmp_path):
    data = gen_blobs(n_samples=160, n_classes=2, dim=6, seed=11,
                     separation=0.6, noise=0.07)
    train, test = data.split(120)
    train_path, test_path = tmp_path / "train.npz", tmp_path / "test.npz"
    save_dataset(train, train_path)
    save_dataset(test, test_path)
    return tmp_path, train_path, test_path


class TestCli:
    def run(self, *argv):
        return main([str(a) for a in argv])

    def test_full_pipeline(self, cli_workspace, capsys):
        tmp, train_path, test_path = cli_workspace
        model = tmp / "model.json"
        assert self.run("train", "--data", train_path, "--hidden", "10",
                        "--epochs", "8", "--seed", "4", "--out", model) == 0
        net = load_model(model.read_bytes())
        assert net.input_dim == 6 and net.output_dim == 2

        out = tmp / "attack.json"
        assert self.run("attack", "--model", model, "--data", test_path,
                        "--index", "0", "--method", "alg1", "--eps", "0.05",
                        "--seed", "1", "--out", out) == 0
        doc = json.loads(out.read_text())
        assert doc["clean_class"] in (0, 1)
        assert len(doc["eta"]) == 6
        assert abs(max(doc["eta"], key=abs)) <= 0.05 + 1e-12

        csv_path = tmp / "sweep.csv"
        assert self.run("sweep", "--model", model, "--data", test_path,
                        "--methods", "alg1,random", "--eps-grid", "0.01,0.08",
                        "--seed", "2", "--out", csv_path) == 0
        lines = csv_path.read_text().splitlines()
        assert lines[2] == "method,eps,fooling_ratio,mean_iterations,samples"
        assert len(lines) == 3 + 4

        report_path = tmp / "report.json"
        assert self.run("report", "--model", model, "--data", test_path,
                        "--eps-grid", "0.01,0.08", "--methods", "alg1,random",
                        "--seed", "2", "--out", report_path) == 0
        doc = json.loads(report_path.read_text())
        assert doc["report_version"] == 1
        assert doc["config"]["seed"] == 2

        op_path = tmp / "opnorm.json"
        assert self.run("opnorm-attack", "--model", model, "--data", test_path,
                        "--p", "1", "--eps", "0.1", "--out", op_path) == 0
        doc = json.loads(op_path.read_text())
        assert sum(1 for v in doc["eta"] if v != 0.0) == 1

    def test_gen_data_round_trip(self, tmp_path):
        out = tmp_path / "rings.npz"
        assert self.run("gen-data", "--kind", "rings", "--n", "60",
                        "--classes", "2", "--seed", "3", "--out", out) == 0
        from pertfool.data import load_dataset
        assert len(load_dataset(out)) == 60

    def test_sweep_byte_identical_and_parallel(self, cli_workspace):
        tmp, train_path, test_path = cli_workspace
        model = tmp / "model.json"
        self.run("train", "--data", train_path, "--hidden", "8", "--epochs",
                 "5", "--seed", "9", "--out", model)
        outs = []
        for name, jobs in (("a.csv", 1), ("b.csv", 1), ("c.csv", 2)):
            path = tmp / name
            args = ["sweep", "--model", model, "--data", test_path,
                    "--methods", "alg1,alg1n:3,random",
                    "--eps-grid", "0.01,0.05,0.2", "--seed", "5",
                    "--jobs", str(jobs), "--out", path]
            assert self.run(*args) == 0
            outs.append(path.read_bytes())
        # identical bytes apart from the echoed jobs/out fields in the header
        strip = lambda b: b.split(b"\n", 2)[2]
        assert strip(outs[0]) == strip(outs[1]) == strip(outs[2])
        assert outs[0] == outs[1].replace(b"b.csv", b"a.csv")

    def test_error_line_is_machine_parsable(self, cli_workspace, capsys):
        tmp, train_path, _ = cli_workspace
        code = self.run("attack", "--model", tmp / "missing.json", "--data",
                        train_path, "--method", "alg1", "--eps", "0.1",
                        "--seed", "0")
        assert code == 2
        err = capsys.readouterr().err.strip()
        assert re.fullmatch(r"pertfool: error \[[A-Z]+\] .+", err)

    def test_malformed_model_reports_parse_code(self, cli_workspace, capsys):
        tmp, train_path, _ = cli_workspace
        bad = tmp / "bad.json"
        bad.write_text("{not json")
        code = self.run("attack", "--model", bad, "--data", train_path,
                        "--method", "alg1", "--eps", "0.1", "--seed", "0")
        assert code == 2
        assert "[PARSE]" in capsys.readouterr().err

    def test_bad_index_reports_config_code(self, cli_workspace, capsys):
        tmp, train_path, test_path = cli_workspace
        model = tmp / "m.json"
        net = Network([Layer(w=np.zeros((2, 6)), b=np.zeros(2))])
        model.write_bytes(save_model(net))
        code = self.run("attack", "--model", model, "--data", test_path,
                        "--index", "10000", "--method", "alg1", "--eps", "0.1",
                        "--seed", "0")
        assert code == 2
        assert "[CONFIG]" in capsys.readouterr().err

    def test_module_entrypoint_subprocess(self, tmp_path):
        out = tmp_path / "blobs.npz"
        proc = subprocess.run(
            [sys.executable, "-m", "pertfool.cli", "gen-data", "--kind",
             "blobs", "--n", "30", "--dim", "4", "--classes", "2",
             "--seed", "1", "--out", str(out)],
            capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
        assert out.exists()

    def test_default_eps_grid_has_twenty_log_points(self):
        assert len(DEFAULT_EPS_GRID) == 20
        assert DEFAULT_EPS_GRID[0] == pytest.approx(1e-3)
        assert DEFAULT_EPS_GRID[-1] == pytest.approx(0.5)
        logs = np.diff(np.log(DEFAULT_EPS_GRID))
        assert np.allclose(logs, logs[0])
