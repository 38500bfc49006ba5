import json
import math
import os

import numpy as np
import pytest

from holdergrad import cli
from holdergrad.errors import ConfigError
from holdergrad.harness import (
    CSV_HEADER,
    ExperimentConfig,
    build_problem,
    build_solver,
    build_stop,
    determinism_experiments,
    emit_plot,
    read_trace_csv,
    resolve_x0,
    run_experiment,
    suite,
    summary_table,
    write_trace_csv,
)
from holdergrad.sampling import rng_from_seed
from holdergrad.sga import StopRule
from holdergrad.trace import RunStatus, Trace


def quad_config(tmp_path, **overrides):
    data = {
        "problem": {"kind": "quadratic", "A": [[1.0, 0.0], [0.0, 10.0]], "b": [0.0, 0.0]},
        "solver": {
            "kind": "sga",
            "nu": 1.0,
            "L": 10.0,
            "policy": {"kind": "constant", "alpha": 0.099},
        },
        "x0": [1.3, -0.7],
        "stop": {"grad_tol": 1e-10, "max_iter": 400},
        "seed": 11,
        "output_dir": str(tmp_path),
        "name": "quad_demo",
    }
    data.update(overrides)
    return data


class TestExperimentConfig:
    def test_round_trip(self, tmp_path):
        data = quad_config(tmp_path, claims=["q_linear_f"], eps=1e-4)
        cfg = ExperimentConfig.from_dict(data)
        assert cfg.to_dict() == data
        assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg

    def test_unknown_field(self, tmp_path):
        data = quad_config(tmp_path)
        data["verbose"] = True
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict(data)

    @pytest.mark.parametrize("missing", ["problem", "solver", "x0", "seed"])
    def test_missing_required(self, tmp_path, missing):
        data = quad_config(tmp_path)
        del data[missing]
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict(data)

    def test_seed_must_be_int(self, tmp_path):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict(quad_config(tmp_path, seed="11"))

    def test_load_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            ExperimentConfig.load(tmp_path / "absent.json")

    def test_load_bad_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError):
            ExperimentConfig.load(path)

    def test_run_name(self, tmp_path):
        named = ExperimentConfig.from_dict(quad_config(tmp_path))
        assert named.run_name() == "quad_demo"
        data = quad_config(tmp_path)
        del data["name"]
        assert ExperimentConfig.from_dict(data).run_name() == "quadratic_sga"


class TestBuilders:
    def test_build_problem_kinds(self):
        obj, region = build_problem({"kind": "builtin", "name": "quadratic_well"})
        assert region is not None
        obj, region = build_problem({"kind": "power_norm", "nu": 0.5, "dim": 3})
        assert obj.dim == 3 and region is None
        obj, _ = build_problem({"kind": "poisson", "A": [[1.0]], "b": [1.0]})
        assert obj.truth.f_star == pytest.approx(1.0)

    def test_build_problem_rejections(self):
        with pytest.raises(ConfigError):
            build_problem({"kind": "builtin", "name": "nope"})
        with pytest.raises(ConfigError):
            build_problem({"kind": "quadratic", "A": [[1.0]], "b": [0.0], "extra": 1})
        with pytest.raises(ConfigError):
            build_problem({"kind": "rosenbrock"})
        with pytest.raises(ConfigError):
            build_problem("quadratic")

    def test_build_solver_sga(self):
        kind, cfg = build_solver(
            {"kind": "sga", "nu": 1.0, "L": 10.0, "policy": {"kind": "constant", "alpha": 0.05}},
            StopRule(), seed=0)
        assert kind == "sga"
        assert cfg.policy.alpha == 0.05

    def test_build_solver_adasga_defaults(self):
        kind, cfg = build_solver({"kind": "adasga"}, StopRule(), seed=42)
        assert kind == "adasga"
        assert cfg.seed == 42
        assert cfg.tau == 1.2

    def test_build_solver_rejections(self):
        with pytest.raises(ConfigError):
            build_solver({"kind": "sgd"}, StopRule(), 0)
        with pytest.raises(ConfigError):
            build_solver({"kind": "sga", "nu": 1.0, "L": 1.0}, StopRule(), 0)  # policy missing
        with pytest.raises(ConfigError):
            build_solver({"kind": "sga", "nu": 1.0, "L": 1.0,
                          "policy": {"kind": "constant", "alpha": 0.1}, "momentum": 0.9},
                         StopRule(), 0)
        with pytest.raises(ConfigError):
            build_solver({"kind": "sga", "nu": 1.0, "L": 1.0,
                          "policy": {"kind": "interval", "alpha_bar": 0.5, "mode": "warp"}},
                         StopRule(), 0)
        with pytest.raises(ConfigError):
            build_solver({"kind": "adasga", "gamma": {"kind": "bb3"}}, StopRule(), 0)
        with pytest.raises(ConfigError):
            build_solver({"kind": "adasga", "gamma": {"kind": "bb1", "value": 2.0}}, StopRule(), 0)

    def test_build_stop(self):
        rule = build_stop({"grad_tol": 1e-6, "max_iter": 50})
        assert rule.grad_tol == 1e-6 and rule.max_iter == 50
        assert build_stop(None) == StopRule()
        with pytest.raises(ConfigError):
            build_stop({"grad_tol": 1e-6, "patience": 5})

    def test_resolve_x0(self):
        obj, region = build_problem({"kind": "builtin", "name": "quadratic_well"})
        rng = rng_from_seed(0)
        np.testing.assert_array_equal(resolve_x0([1.0, 2.0], obj, region, rng), [1.0, 2.0])
        ball = resolve_x0({"kind": "ball", "center": [0.0, 0.0], "radius": 0.5}, obj, region, rng)
        assert np.linalg.norm(ball) <= 0.5
        inside = resolve_x0({"kind": "region"}, obj, region, rng)
        assert region.contains(inside)

    def test_resolve_x0_rejections(self):
        obj, region = build_problem({"kind": "builtin", "name": "quadratic_well"})
        rng = rng_from_seed(0)
        with pytest.raises(ConfigError):
            resolve_x0([1.0], obj, region, rng)  # wrong length
        with pytest.raises(ConfigError):
            resolve_x0({"kind": "grid"}, obj, region, rng)
        with pytest.raises(ConfigError):
            resolve_x0("origin", obj, region, rng)
        obj2, _ = build_problem({"kind": "power_norm", "nu": 0.5, "dim": 2})
        with pytest.raises(ConfigError):
            resolve_x0({"kind": "region"}, obj2, None, rng)


class TestTraceCsv:
    def synthetic(self):
        return Trace(
            f=np.array([3.295, 1.0, 0.25]),
            grad_norm=np.array([7.119691004531025, 1.0, 0.5]),
            alpha=np.array([0.1, 0.1, 0.1]),
            gap=np.array([3.295, 1.0, 0.25]),
            dist_opt=np.array([1.47648230602334, 1.0, 0.5]),
            lyap=np.array([math.nan, 2.0, 1.0]),
            status=RunStatus.MAX_ITER,
        )

    def test_header_and_cells(self, tmp_path):
        path = tmp_path / "t.csv"
        write_trace_csv(self.synthetic(), path)
        lines = path.read_text().splitlines()
        assert lines[0] == "k,f,gap,grad_norm,alpha,gamma,theta,L_k,dist_opt,lyap"
        # absent columns and nan cells are written as empty fields
        assert lines[1] == "0,3.295,3.295,7.119691004531025,0.1,,,,1.47648230602334,"
        assert len(lines) == 4

    def test_round_trip(self, tmp_path):
        path = tmp_path / "t.csv"
        src = self.synthetic()
        write_trace_csv(src, path)
        back = read_trace_csv(path)
        np.testing.assert_array_equal(back.f, src.f)
        np.testing.assert_array_equal(back.grad_norm, src.grad_norm)
        np.testing.assert_array_equal(back.dist_opt, src.dist_opt)
        assert back.gamma is None and back.theta is None and back.lip is None
        assert math.isnan(back.lyap[0])
        np.testing.assert_array_equal(back.lyap[1:], src.lyap[1:])
        assert back.meta["source"] == str(path)

    def test_read_rejections(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("k,f\n0,1.0\n")
        with pytest.raises(ConfigError):
            read_trace_csv(path)

        header = ",".join(CSV_HEADER)
        path.write_text(f"{header}\n0,1.0,,1.0,0.1,,,,,\n2,0.5,,0.5,0.1,,,,,\n")
        with pytest.raises(ConfigError):
            read_trace_csv(path)  # k jumps from 0 to 2

        path.write_text(f"{header}\n0,abc,,1.0,0.1,,,,,\n")
        with pytest.raises(ConfigError):
            read_trace_csv(path)  # non-float cell

        path.write_text(f"{header}\n0,1.0\n")
        with pytest.raises(ConfigError):
            read_trace_csv(path)  # short row

        path.write_text(header + "\n")
        with pytest.raises(ConfigError):
            read_trace_csv(path)  # no data rows

        with pytest.raises(ConfigError):
            read_trace_csv(tmp_path / "absent.csv")


class TestRunExperiment:
    def test_runs_and_writes(self, tmp_path):
        cfg = ExperimentConfig.from_dict(quad_config(tmp_path))
        trace, csv_path, report = run_experiment(cfg)
        assert trace.status == RunStatus.CONVERGED
        assert report is None
        assert os.path.basename(csv_path) == "quad_demo.csv"
        back = read_trace_csv(csv_path)
        assert back.n_rows == trace.n_rows

    def test_claims_verified(self, tmp_path):
        cfg = ExperimentConfig.from_dict(
            quad_config(tmp_path, claims=["q_linear_f", "q_linear_x"]))
        _, _, report = run_experiment(cfg)
        assert report is not None and report.passed

    def test_auto_claims(self, tmp_path):
        cfg = ExperimentConfig.from_dict(quad_config(tmp_path, claims="auto", eps=1e-4))
        _, _, report = run_experiment(cfg)
        assert report.passed
        assert set(report.bound_satisfied) == {
            "q_linear_f", "q_linear_x", "k0_count", "mn_count_f", "mn_count_x", "kl_linear_f",
        }

    def test_constants_override_can_fail_claims(self, tmp_path):
        cfg = ExperimentConfig.from_dict(
            quad_config(tmp_path, claims=["q_linear_x"], constants={"mu": 9.0}))
        _, _, report = run_experiment(cfg)
        assert not report.passed

    def test_unknown_constants_key(self, tmp_path):
        cfg = ExperimentConfig.from_dict(
            quad_config(tmp_path, claims=["q_linear_f"], constants={"lipschitz": 10.0}))
        with pytest.raises(ConfigError):
            run_experiment(cfg)

    def test_byte_determinism(self, tmp_path):
        data = quad_config(tmp_path)
        a = run_experiment(ExperimentConfig.from_dict(data), csv_path=str(tmp_path / "a.csv"))[1]
        b = run_experiment(ExperimentConfig.from_dict(data), csv_path=str(tmp_path / "b.csv"))[1]
        assert open(a, "rb").read() == open(b, "rb").read()
        assert os.path.getsize(a) > 0

    def test_env_seed_override(self, tmp_path, monkeypatch):
        data = quad_config(tmp_path, x0={"kind": "ball", "center": [1.0, 1.0], "radius": 0.5})
        monkeypatch.setenv("HOLDERGRAD_SEED", "7")
        a = run_experiment(ExperimentConfig.from_dict(dict(data, seed=1)),
                           csv_path=str(tmp_path / "a.csv"))[1]
        b = run_experiment(ExperimentConfig.from_dict(dict(data, seed=2)),
                           csv_path=str(tmp_path / "b.csv"))[1]
        # the env seed replaces both config seeds, so the runs coincide
        assert open(a, "rb").read() == open(b, "rb").read()
        monkeypatch.delenv("HOLDERGRAD_SEED")
        c = run_experiment(ExperimentConfig.from_dict(dict(data, seed=1)),
                           csv_path=str(tmp_path / "c.csv"))[1]
        assert open(a, "rb").read() != open(c, "rb").read()

    def test_bad_env_seed(self, tmp_path, monkeypatch):
        monkeypatch.setenv("HOLDERGRAD_SEED", "lucky")
        with pytest.raises(ConfigError):
            run_experiment(ExperimentConfig.from_dict(quad_config(tmp_path)))

    def test_determinism_experiment_set(self):
        cfgs = determinism_experiments()
        names = [c.run_name() for c in cfgs]
        assert len(names) == len(set(names)) == 5
        for cfg in cfgs:
            assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg


class TestPlot:
    def trace_csv(self, tmp_path):
        cfg = ExperimentConfig.from_dict(quad_config(tmp_path))
        return run_experiment(cfg)[1]

    def test_emit_svg(self, tmp_path):
        csv_path = self.trace_csv(tmp_path)
        out = emit_plot(csv_path, "gap")
        assert out.endswith(".gap.svg")
        head = open(out).read(200)
        assert head.startswith("<?xml")
        assert os.path.getsize(out) > 1000

    def test_log_scale_with_zeros(self, tmp_path):
        path = tmp_path / "z.csv"
        trace = Trace(f=np.array([1.0, 0.5, 0.0]), grad_norm=np.ones(3), alpha=np.ones(3),
                      gap=np.array([1.0, 0.5, 0.0]))
        write_trace_csv(trace, path)
        out = emit_plot(path, "gap", log_scale=True, out_path=str(tmp_path / "z.svg"))
        assert os.path.exists(out)

    def test_unknown_column(self, tmp_path):
        with pytest.raises(ConfigError):
            emit_plot(self.trace_csv(tmp_path), "momentum")

    def test_empty_column(self, tmp_path):
        # an SGA trace has no gamma data at all
        with pytest.raises(ConfigError):
            emit_plot(self.trace_csv(tmp_path), "gamma")


class TestSuitePlumbing:
    def test_unknown_criterion(self, tmp_path):
        with pytest.raises(ConfigError):
            suite(str(tmp_path), only=["c99_not_a_criterion"])

    def test_single_criterion_summary(self, tmp_path):
        summary = suite(str(tmp_path), only=["c01_power_closed_form"])
        assert summary["passed"] is True
        assert summary["criteria"][0]["name"] == "c01_power_closed_form"
        saved = json.loads((tmp_path / "summary.json").read_text())
        assert saved == summary
        table = summary_table(summary)
        assert "PASS" in table and "overall" in table


class TestCli:
    def write_config(self, tmp_path, data):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(data))
        return str(path)

    def test_run_ok(self, tmp_path, capsys):
        rc = cli.main(["run", self.write_config(tmp_path, quad_config(tmp_path))])
        assert rc == 0
        assert "status converged" in capsys.readouterr().out

    def test_run_with_claims_report(self, tmp_path, capsys):
        cfg = quad_config(tmp_path, claims=["q_linear_f"])
        rc = cli.main(["run", self.write_config(tmp_path, cfg)])
        assert rc == 0
        assert '"passed": true' in capsys.readouterr().out

    def test_config_error_is_1(self, tmp_path):
        cfg = quad_config(tmp_path)
        cfg["solver"]["kind"] = "sgd"
        assert cli.main(["run", self.write_config(tmp_path, cfg)]) == 1

    def test_domain_violation_is_2(self, tmp_path):
        cfg = {
            "problem": {"kind": "builtin", "name": "poisson_unit"},
            "solver": {"kind": "adasga"},
            "x0": [-2.0],
            "seed": 0,
            "output_dir": str(tmp_path),
        }
        assert cli.main(["run", self.write_config(tmp_path, cfg)]) == 2

    def test_failed_claim_is_3(self, tmp_path):
        cfg = quad_config(tmp_path, claims=["q_linear_x"], constants={"mu": 9.0})
        assert cli.main(["run", self.write_config(tmp_path, cfg)]) == 3

    def test_rates_subcommand(self, tmp_path, capsys):
        csv_path = run_experiment(ExperimentConfig.from_dict(quad_config(tmp_path)))[1]
        constants = tmp_path / "constants.json"
        constants.write_text(json.dumps({"mu": 1.0, "L": 10.0, "alpha_bar": 0.099}))
        rc = cli.main(["rates", csv_path, "--constants", str(constants),
                       "--claims", "q_linear_f", "q_linear_x"])
        assert rc == 0
        assert '"q_linear_x": true' in capsys.readouterr().out

    def test_rates_unknown_constant_key(self, tmp_path):
        csv_path = run_experiment(ExperimentConfig.from_dict(quad_config(tmp_path)))[1]
        constants = tmp_path / "constants.json"
        constants.write_text(json.dumps({"kappa": 10.0}))
        assert cli.main(["rates", csv_path, "--constants", str(constants)]) == 1

    def test_check_subcommand(self, tmp_path, capsys):
        cfg = {
            "problem": {"kind": "builtin", "name": "quadratic_well"},
            "solver": {"kind": "adasga"},
            "x0": {"kind": "region"},
            "seed": 5,
            "output_dir": str(tmp_path),
        }
        rc = cli.main(["check", self.write_config(tmp_path, cfg), "--pairs", "200"])
        assert rc == 0
        out = json.loads(capsys.readouterr().out)
        assert out["holder"]["passed"] is True
        assert out["smooth"]["passed"] is True
        assert out["L"] == pytest.approx(10.0, rel=1e-3)

    def test_check_needs_region(self, tmp_path):
        cfg = {
            "problem": {"kind": "power_norm", "nu": 0.5, "dim": 2},
            "solver": {"kind": "adasga"},
            "x0": [1.0, 1.0],
            "seed": 5,
        }
        assert cli.main(["check", self.write_config(tmp_path, cfg)]) == 1

    def test_plot_subcommand(self, tmp_path, capsys):
        csv_path = run_experiment(ExperimentConfig.from_dict(quad_config(tmp_path)))[1]
        out = str(tmp_path / "gap.svg")
        rc = cli.main(["plot", csv_path, "--y", "gap", "--log", "--out", out])
        assert rc == 0
        assert os.path.exists(out)

    def test_suite_subcommand(self, tmp_path, capsys):
        rc = cli.main(["suite", "--output", str(tmp_path / "out"),
                       "--only", "c01_power_closed_form"])
        assert rc == 0
        assert "PASS" in capsys.readouterr().out
