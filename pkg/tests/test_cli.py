import json

import numpy as np
import pytest

from consensus_lab import cli
from consensus_lab import scenario_io as sio

ALL_OUTPUTS = ("trace.csv", "summary.json") + cli.FIG_FILES


def load_builtin_doc(name):
    return json.loads(sio.builtin_scenario_text(name))


def write_doc(tmp_path, doc, name="scenario.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc), encoding="utf-8")
    return str(path)


class TestRunCommand:
    def test_short_run_writes_all_outputs(self, tmp_path):
        out = tmp_path / "out"
        code = cli.main(["run", "--scenario", "builtin:close_pair",
                         "--out", str(out), "--duration", "0.5"])
        assert code == 0
        for name in ALL_OUTPUTS:
            assert (out / name).exists(), name
        header = (out / "trace.csv").read_text().splitlines()[0]
        assert header.split(",") == cli.trace_columns(2, 2)
        summary = json.loads((out / "summary.json").read_text())
        assert summary["aborted"] is None
        assert summary["records"] == 51  # 500 steps at stride 10, plus t=0

    def test_zero_duration_single_row(self, tmp_path):
        out = tmp_path / "out"
        code = cli.main(["run", "--scenario", "builtin:close_pair",
                         "--out", str(out), "--duration", "0"])
        assert code == 0
        rows = (out / "trace.csv").read_text().splitlines()
        assert len(rows) == 2  # header + single record

    def test_malformed_json_names_location(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text('{"schema": 1,,}', encoding="utf-8")
        code = cli.main(["run", "--scenario", str(path), "--out", str(tmp_path / "o")])
        assert code == 1
        err = capsys.readouterr().err
        assert "line" in err and "column" in err

    def test_missing_file(self, tmp_path, capsys):
        code = cli.main(["run", "--scenario", str(tmp_path / "nope.json"),
                         "--out", str(tmp_path / "o")])
        assert code == 1
        assert "not found" in capsys.readouterr().err

    def test_validation_error_names_json_path(self, tmp_path, capsys):
        doc = load_builtin_doc("close_pair")
        doc["gains"]["chi"] = -1.0
        code = cli.main(["run", "--scenario", write_doc(tmp_path, doc),
                         "--out", str(tmp_path / "o")])
        assert code == 1
        assert "gains" in capsys.readouterr().err

    def test_aborted_run_exits_two(self, tmp_path, capsys):
        doc = load_builtin_doc("close_pair")
        doc["agents"][0]["drift"] = {"expr": "100*v**3 + 10"}
        doc["gains"]["c"] = [0.0, 0.0]
        doc["gains"]["lambda_xi"] = [0.001]
        doc["sim"]["duration"] = 5.0
        out = tmp_path / "o"
        code = cli.main(["run", "--scenario", write_doc(tmp_path, doc), "--out", str(out)])
        assert code == 2
        assert "aborted" in capsys.readouterr().err
        summary = json.loads((out / "summary.json").read_text())
        assert summary["aborted"] is not None
        assert (out / "trace.csv").exists()  # partial trace stays inspectable

    def test_usage_error_exit_code_one(self):
        with pytest.raises(SystemExit) as exc:
            cli.main(["run", "--scenario", "builtin:close_pair"])  # missing --out
        assert exc.value.code == 1


class TestCheckCommand:
    def test_bundled_scenario_passes(self, capsys):
        assert cli.main(["check", "--scenario", "builtin:vehicle_platoon"]) == 0
        out = capsys.readouterr().out
        for name in ("leader spanning tree", "pinned laplacian conditioning",
                     "graph Lyapunov certificate", "Hurwitz lambda_bar",
                     "companion Lyapunov solve"):
            assert f"{name}: PASS" in out

    def test_unpinned_scenario_fails_spanning_tree(self, tmp_path, capsys):
        doc = load_builtin_doc("close_pair")
        doc["topology"]["leader_weights"] = [0.0, 0.0]
        code = cli.main(["check", "--scenario", write_doc(tmp_path, doc)])
        assert code == 1
        captured = capsys.readouterr()
        assert "spanning tree" in captured.out + captured.err

    def test_non_hurwitz_lambda_fails(self, tmp_path, capsys):
        doc = load_builtin_doc("close_pair")
        doc["gains"].pop("lambda_xi")
        doc["gains"]["lambda_bar"] = [-1.0]
        code = cli.main(["check", "--scenario", write_doc(tmp_path, doc)])
        assert code == 1
        captured = capsys.readouterr()
        assert "Hurwitz" in captured.out + captured.err


class TestDiagnoseCommand:
    def test_passing_bounds(self, tmp_path, capsys):
        bounds = {"beta": 1.0, "kappa": 1.0, "kappaw": 1.0, "kappa0": 1.0,
                  "phi_f": 0.0, "phi_w": 0.0, "phi_leader": 0.0,
                  "theta_f": 1.0, "theta_w": 1.0, "theta_leader": 1.0,
                  "t_m": 0.1, "t_n": 0.1, "e0_bound": 0.0}
        bpath = tmp_path / "bounds.json"
        bpath.write_text(json.dumps(bounds), encoding="utf-8")
        code = cli.main(["diagnose", "--scenario", "builtin:obstacle_gate",
                         "--bounds", str(bpath)])
        out = capsys.readouterr().out
        assert code == 0
        assert "B_d" in out and "minor 5" in out and "positive definite" in out

    def test_embedded_bounds_fail_fifth_minor(self, capsys):
        # the platoon's embedded bounds violate the mu1 requirement
        code = cli.main(["diagnose", "--scenario", "builtin:vehicle_platoon"])
        assert code == 1
        captured = capsys.readouterr()
        assert "minor 5" in captured.out
        assert "NotPositiveDefinite" in captured.err

    def test_zero_bounds_reduce_omega_to_lambda(self, tmp_path, capsys):
        bounds = {"beta": 1.0, "kappa": 1.0, "kappaw": 1.0, "kappa0": 1.0,
                  "phi_f": 0.0, "phi_w": 0.0, "phi_leader": 0.0,
                  "theta_f": 0.0, "theta_w": 0.0, "theta_leader": 0.0,
                  "t_m": 0.0, "t_n": 0.0, "e0_bound": 0.0}
        bpath = tmp_path / "bounds.json"
        bpath.write_text(json.dumps(bounds), encoding="utf-8")
        jpath = tmp_path / "report.json"
        code = cli.main(["diagnose", "--scenario", "builtin:obstacle_gate",
                         "--bounds", str(bpath), "--json", str(jpath)])
        assert code == 0
        report = json.loads(jpath.read_text())
        assert report["omega"][:4] == [0.0, 0.0, 0.0, 0.0]
        assert report["omega_l1"] == report["graph_quantities"]["Lambda"]
        assert report["b_d"] == report["omega_l1"] / report["sigma_min_k"]

    def test_no_bounds_anywhere(self, capsys):
        code = cli.main(["diagnose", "--scenario", "builtin:close_pair"])
        assert code == 1
        assert "bounds" in capsys.readouterr().err


class TestSweepCommand:
    def test_kappa_sweep_rows(self, tmp_path):
        doc = load_builtin_doc("close_pair")
        doc["sim"]["duration"] = 0.5
        spath = write_doc(tmp_path, doc)
        out = tmp_path / "sweep_out"
        code = cli.main(["sweep", "--scenario", spath, "--param", "kappa",
                         "--values", "0.01,0.05,0.1", "--out", str(out)])
        assert code == 0
        rows = (out / "sweep.csv").read_text().splitlines()
        assert rows[0] == "value,settling_time,ultimate_bound,min_pair_distance"
        assert len(rows) == 4
        assert [float(r.split(",")[0]) for r in rows[1:]] == [0.01, 0.05, 0.1]

    def test_dotted_param_avoidance_ordering(self, tmp_path, monkeypatch):
        # long enough for the unprotected pair to collapse; exercises the
        # parallel executor path as well
        monkeypatch.setenv(cli.THREADS_ENV, "2")
        doc = load_builtin_doc("close_pair")
        doc["sim"]["duration"] = 6.0
        spath = write_doc(tmp_path, doc)
        out = tmp_path / "o"
        code = cli.main(["sweep", "--scenario", spath, "--param", "gains.gamma1",
                         "--values", "0.0,4.0", "--out", str(out)])
        assert code == 0
        rows = (out / "sweep.csv").read_text().splitlines()
        assert len(rows) == 3
        dist_off = float(rows[1].split(",")[3])
        dist_on = float(rows[2].split(",")[3])
        assert dist_off < dist_on

    def test_empty_values(self, tmp_path, capsys):
        code = cli.main(["sweep", "--scenario", "builtin:close_pair",
                         "--param", "kappa", "--values", "", "--out", str(tmp_path)])
        assert code == 1
        assert "empty" in capsys.readouterr().err

    def test_unknown_field(self, tmp_path, capsys):
        code = cli.main(["sweep", "--scenario", "builtin:close_pair",
                         "--param", "warpdrive", "--values", "1,2", "--out", str(tmp_path)])
        assert code == 1
        assert "unknown" in capsys.readouterr().err

    def test_ambiguous_bare_name(self, tmp_path, capsys):
        # both sim and topology could own a field named "seed"? use a real clash:
        doc = load_builtin_doc("close_pair")
        doc["topology"]["kappa"] = 1.0  # contrive a clash with nn.kappa
        code = cli.main(["sweep", "--scenario", write_doc(tmp_path, doc),
                         "--param", "kappa", "--values", "0.1", "--out", str(tmp_path / "o")])
        assert code == 1
        assert "ambiguous" in capsys.readouterr().err


class TestCsvFormat:
    def test_17_digit_roundtrip(self, tmp_path):
        out = tmp_path / "out"
        cli.main(["run", "--scenario", "builtin:close_pair",
                  "--out", str(out), "--duration", "0.1"])
        rows = (out / "trace.csv").read_text().splitlines()
        values = [float(v) for v in rows[5].split(",")]
        rendered = ",".join(cli._fmt(v) for v in values)
        assert rendered == rows[5]

    def test_figure_headers(self, tmp_path):
        out = tmp_path / "out"
        cli.main(["run", "--scenario", "builtin:close_pair",
                  "--out", str(out), "--duration", "0.1"])
        assert (out / "fig_positions.csv").read_text().splitlines()[0] == "t,x1_0,x1_1,x1_2"
        assert (out / "fig_controls.csv").read_text().splitlines()[0] == "t,u_1,u_2"
        assert (out / "fig_pos_error.csv").read_text().splitlines()[0] == "t,E1_1,E1_2"
