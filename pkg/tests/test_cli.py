import csv
import json

import numpy as np
import pytest

from hkit.cli import EXIT_CONFIG, EXIT_FAILURE, EXIT_MAX_ITER, EXIT_OK, TRACE_HEADER, main, thread_count
from hkit.config import ConfigError, build_problem, load_config, load_config_text, locate
from hkit.expressions import ExpressionError, parse_expression, parse_nonlinearity


def write_config(tmp_path, config, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(config, indent=2))
    return str(path)


class TestExpressions:
    @pytest.mark.parametrize(
        "text, s, expected",
        [("s**3 + s - 1", 2.0, 9.0), ("x*exp(s)", 0.0, 0.5), ("atan(s) + pi*x", 0.0, np.pi / 2), ("s/2 + 1e-3", 1.0, 0.501)],
    )
    def test_values_at_half(self, text, s, expected):
        assert float(parse_nonlinearity(text).f(0.5, s)) == pytest.approx(expected)

    def test_exact_derivative(self):
        nl = parse_nonlinearity("s**3 + x*s")
        np.testing.assert_allclose(nl.df_ds(np.array([0.5, 1.0]), np.array([1.0, 2.0])), [3.5, 13.0])

    def test_vectorizes_constant_expressions(self):
        nl = parse_nonlinearity("2")
        assert nl.f(np.zeros(4), np.zeros(4)).shape == (4,)

    @pytest.mark.parametrize(
        "text",
        ["sin(s)", "s**(1/2)", "exp(x)", "y + s", "s.func", "__import__('os')", "s[0]", "1/s", "", "   "],
    )
    def test_rejected(self, text):
        with pytest.raises(ExpressionError):
            parse_expression(text)


class TestConfig:
    def test_defaults_fill_in(self):
        loaded = load_config_text('{"problem": "zero", "grid": {"n": 9}}')
        assert loaded.data["grid"] == {"rule": "trapezoid", "n": 9}
        assert loaded.data["schedule"] == {"a": 0.6, "b": 0.3}

    def test_schema_error_has_line(self):
        text = '{\n  "problem": "zero",\n  "max_iter": -4\n}'
        with pytest.raises(ConfigError) as info:
            load_config_text(text, "cfg.json")
        assert str(info.value).startswith("cfg.json:3: max_iter")
        assert info.value.line == 3

    def test_json_error_has_line(self):
        with pytest.raises(ConfigError) as info:
            load_config_text('{\n  "problem": "zero",\n}', "cfg.json")
        assert info.value.line == 3

    def test_unknown_key(self):
        with pytest.raises(ConfigError, match="Additional properties"):
            load_config_text('{"problem": "zero", "tolerance": 1}')

    def test_locate_nested(self):
        text = '{\n "a": 1,\n "problem": {\n  "kernel": {"type": "min"}\n }\n}'
        assert locate(text, ["problem", "kernel", "type"]) == 4

    def test_inline_problem(self):
        text = json.dumps({"problem": {"nonlinearity": "s - x", "kernel": {"type": "gaussian", "width": 0.5}}, "p": 1.5})
        problem, is_gallery = build_problem(load_config_text(text))
        assert not is_gallery and problem.p == 1.5

    def test_bad_expression_points_at_line(self):
        text = '{\n  "problem": {\n    "kernel": {"type": "min"},\n    "nonlinearity": "sin(s)"\n  }\n}'
        with pytest.raises(ConfigError) as info:
            build_problem(load_config_text(text, "c.json"))
        assert info.value.line == 4

    def test_gallery_exponent_override(self):
        problem, is_gallery = build_problem(load_config_text('{"problem": "linear-affine", "p": 3}'))
        assert is_gallery and problem.p == 3.0 and problem.name == "linear-affine"

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            load_config(tmp_path / "absent.json")


class TestRunCommand:
    def test_converged_run_writes_outputs(self, tmp_path):
        trace, summary = tmp_path / "t.csv", tmp_path / "s.json"
        cfg = write_config(
            tmp_path,
            {"problem": "linear-affine", "grid": {"n": 9}, "residual_tol": 1e-2, "record_every": 10,
             "output": {"trace_csv": str(trace), "summary_json": str(summary)}},
        )
        assert main(["run", cfg]) == EXIT_OK
        rows = list(csv.reader(trace.open()))
        assert rows[0] == TRACE_HEADER and rows[1][0] == "1"
        data = json.loads(summary.read_text())
        assert data["termination"] == "converged" and data["final_residual"] <= 1e-2

    def test_iteration_cap(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {"problem": "cubic-green", "grid": {"n": 9}, "max_iter": 50, "residual_tol": 1e-12})
        assert main(["run", cfg]) == EXIT_MAX_ITER
        assert json.loads(capsys.readouterr().out)["iterations"] == 50

    def test_config_error(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {"problem": "linear-affine", "p": 0.5})
        assert main(["run", cfg]) == EXIT_CONFIG
        assert f"{cfg}:" in capsys.readouterr().err

    def test_failing_schedule_is_a_config_error(self, tmp_path):
        cfg = write_config(tmp_path, {"problem": "zero", "schedule": {"a": 0.7, "b": 0.4}, "max_iter": 10})
        assert main(["run", cfg]) == EXIT_CONFIG

    def test_variant_misuse_is_a_config_error(self, tmp_path):
        cfg = write_config(tmp_path, {"problem": "zero", "p": 1.5, "variant": "chidume_idu_p2"})
        assert main(["run", cfg]) == EXIT_CONFIG

    def test_probe_rejection(self, tmp_path):
        cfg = write_config(tmp_path, {"problem": {"nonlinearity": "-s", "kernel": {"type": "min"}}, "grid": {"n": 9}})
        assert main(["run", cfg]) == EXIT_FAILURE

    def test_divergence(self, tmp_path, capsys):
        cfg = write_config(
            tmp_path, {"problem": {"nonlinearity": "1e200*s**9 - 1", "kernel": {"type": "identity"}}, "grid": {"n": 5}, "max_iter": 100}
        )
        assert main(["run", cfg]) == EXIT_FAILURE
        assert json.loads(capsys.readouterr().out)["termination"] == "diverged"

    def test_reruns_are_byte_identical(self, tmp_path):
        outputs = []
        for k in range(2):
            out = tmp_path / f"t{k}.csv"
            cfg = write_config(
                tmp_path, {"problem": "hilbert-smooth", "grid": {"n": 9}, "max_iter": 300, "output": {"trace_csv": str(out)}},
                f"c{k}.json",
            )
            main(["run", cfg])
            outputs.append(out.read_bytes())
        assert outputs[0] == outputs[1]


class TestOtherCommands:
    def test_validate_schedule(self, capsys):
        assert main(["validate-schedule", "--a", "0.6", "--b", "0.3", "--horizon", "10000"]) == EXIT_OK
        captured = capsys.readouterr()
        assert json.loads(captured.out)["passed"] is True
        assert "sum_lambda_finite_clause_ignored" in captured.err

    @pytest.mark.parametrize("argv", [["--a", "0.3", "--b", "0.6"], ["--a", "0.7", "--b", "0.4"], ["--a", "0.6", "--b", "0.3", "--horizon", "10"]])
    def test_validate_schedule_failures(self, argv, capsys):
        assert main(["validate-schedule", *argv]) == EXIT_CONFIG
        assert json.loads(capsys.readouterr().out)["passed"] is False

    def test_path_distances_decrease(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {"problem": "linear-affine", "grid": {"n": 9}})
        assert main(["path", cfg, "--theta", "1e-1", "1e-3", "1e-5"]) == EXIT_OK
        rows = list(csv.DictReader(capsys.readouterr().out.splitlines()))
        distances = [float(r["distance"]) for r in rows]
        assert distances == sorted(distances, reverse=True) and distances[-1] < 1e-4

    def test_path_anchored_at_solution(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {"problem": "cubic-green", "grid": {"n": 9}})
        assert main(["path", cfg, "--theta", "0.5", "--start-at-solution"]) == EXIT_OK
        rows = list(csv.DictReader(capsys.readouterr().out.splitlines()))
        assert float(rows[0]["distance"]) < 1e-10

    @pytest.mark.parametrize("thetas", [[], ["2.0"], ["0"]])
    def test_path_bad_thetas(self, tmp_path, thetas):
        cfg = write_config(tmp_path, {"problem": "zero"})
        assert main(["path", cfg, "--theta", *thetas]) == EXIT_CONFIG

    def test_probe_reports_all_operators(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {"problem": "exp-paper", "grid": {"n": 9}})
        assert main(["probe", cfg, "--samples", "100"]) == EXIT_OK
        report = json.loads(capsys.readouterr().out)
        assert set(report) == {"F", "K", "A"} and all(r["violations"] == 0 for r in report.values())

    def test_gallery_listing(self, capsys):
        assert main(["gallery", "--json"]) == EXIT_OK
        names = [e["name"] for e in json.loads(capsys.readouterr().out)]
        assert "cubic-green" in names

    def test_thread_count(self, monkeypatch):
        monkeypatch.setenv("HKIT_THREADS", "3")
        assert thread_count() == 3
        monkeypatch.setenv("HKIT_THREADS", "lots")
        assert thread_count() >= 1
