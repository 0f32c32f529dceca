"""CLI tests: subcommand behavior, exit codes, reproducibility."""

import json

import pytest

from proxybias.cli import main
from proxybias.dataio import write_dataset
from proxybias.simulate import SimParams, sample_records


def run(capsys, argv):
    code = main(argv)
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip() else None)


def payload_of(report):
    clean = dict(report)
    clean.pop("wall_time_s")
    return json.dumps(clean, sort_keys=True)


@pytest.fixture
def perfect_csv(tmp_path):
    records = sample_records(SimParams(seed=61, g1=0.0, g2=0.0), 2000)
    path = tmp_path / "perfect.csv"
    write_dataset(path, records)
    return path


@pytest.fixture
def noisy_csv(tmp_path):
    records = sample_records(SimParams(seed=62, coupling=0.2), 5000)
    path = tmp_path / "noisy.csv"
    write_dataset(path, records)
    return path


class TestAudit:
    def test_perfect_proxy_all_estimators_agree(self, capsys, perfect_csv):
        code, report = run(
            capsys,
            ["audit", str(perfect_csv), "--estimator", "all", "--common-data", str(perfect_csv)],
        )
        assert code == 0
        p = report["payload"]
        assert p["gamma"] == 1.0
        truth = p["true_bias_abs"]
        assert p["naive_abs"] == pytest.approx(truth, abs=1e-12)
        assert p["corrected_abs"] == pytest.approx(truth, abs=1e-12)
        assert p["general_abs"] == pytest.approx(truth, abs=1e-12)
        assert p["direct_abs"] == pytest.approx(truth, abs=1e-12)
        assert p["estimators_produced"] == ["naive", "corrected", "general", "direct"]

    def test_labeled_fraction_mode(self, capsys, noisy_csv):
        code, report = run(
            capsys,
            ["audit", str(noisy_csv), "--estimator", "all", "--labeled-fraction", "0.1",
             "--seed", "5"],
        )
        assert code == 0
        p = report["payload"]
        assert p["n_labeled"] == 500
        assert p["plug_in_abs"] is not None
        assert p["corrected_abs"] is not None

    def test_degenerate_gamma_is_warning_not_failure(self, capsys, tmp_path, noisy_csv):
        # common data with g1 + g2 = 1 exactly: half of each group mislabeled
        from proxybias.core import PredictionRecord

        common = []
        for i in range(40):
            a = i % 2 == 0
            ahat = (i // 2) % 2 == 0
            common.append(
                PredictionRecord(id=f"c{i}", y=True, y_hat=i % 3 == 0, a=a, a_hat=ahat)
            )
        common_path = tmp_path / "common.csv"
        write_dataset(common_path, common)
        code, report = run(
            capsys,
            ["audit", str(noisy_csv), "--estimator", "all", "--common-data", str(common_path)],
        )
        assert code == 0  # naive still succeeded
        assert report["payload"]["corrected_abs"] is None
        assert any("UninvertibleDistortion" in w for w in report["warnings"])

    def test_estimator_requiring_common_data_is_usage_error(self, capsys, noisy_csv):
        code, _ = run(capsys, ["audit", str(noisy_csv), "--estimator", "corrected"])
        assert code == 2

    def test_config_file_supplies_flags(self, capsys, noisy_csv, tmp_path):
        config = tmp_path / "cfg.json"
        config.write_text(json.dumps({"estimator": "all", "labeled_fraction": 0.1, "seed": 5}))
        code, report = run(capsys, ["audit", str(noisy_csv), "--config", str(config)])
        assert code == 0
        assert report["payload"]["n_labeled"] == 500

    def test_cli_overrides_config(self, capsys, noisy_csv, tmp_path):
        config = tmp_path / "cfg.json"
        config.write_text(json.dumps({"estimator": "naive", "labeled_fraction": 0.1, "seed": 5}))
        code, report = run(
            capsys, ["audit", str(noisy_csv), "--config", str(config), "--estimator", "all"]
        )
        assert code == 0
        assert report["payload"]["estimators_requested"] == [
            "naive", "corrected", "general", "direct",
        ]

    def test_naive_only_on_proxy_only_file(self, capsys, tmp_path):
        records = [r for r in sample_records(SimParams(seed=9), 500)]
        from dataclasses import replace

        records = [replace(r, a=None) for r in records]
        path = tmp_path / "proxyonly.csv"
        write_dataset(path, records)
        code, report = run(capsys, ["audit", str(path), "--estimator", "naive"])
        assert code == 0
        assert report["payload"]["naive_signed"] is not None
        assert report["payload"]["true_bias_signed"] is None


class TestSimulate:
    def test_deterministic_dataset(self, capsys, tmp_path):
        args = ["simulate", "-n", "500", "--seed", "3", "-o", str(tmp_path / "a.csv")]
        code, _ = run(capsys, args)
        assert code == 0
        args2 = ["simulate", "-n", "500", "--seed", "3", "-o", str(tmp_path / "b.csv")]
        run(capsys, args2)
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()

    def test_zero_n_usage_error(self, capsys, tmp_path):
        code, _ = run(capsys, ["simulate", "-n", "0", "--seed", "1", "-o", str(tmp_path / "x.csv")])
        assert code == 2

    def test_report_echoes_exact_quantities(self, capsys, tmp_path):
        code, report = run(
            capsys, ["simulate", "-n", "100", "--seed", "8", "-o", str(tmp_path / "d.csv")]
        )
        assert code == 0
        exact = report["payload"]["exact"]
        # defaults: alpha=0.6, beta=0.4 so the exact true gap is 0.2
        assert exact["true_signed"] == pytest.approx(0.2, abs=1e-12)
        assert exact["naive_signed"] == pytest.approx(0.101, abs=1e-3)
        assert exact["ci_violation"] == pytest.approx(0.0, abs=1e-12)


class TestSample:
    def test_active_on_perfect_proxy(self, capsys, perfect_csv):
        code, report = run(
            capsys,
            ["sample", str(perfect_csv), "--strategy", "active", "--seed", "2",
             "-b", "50", "-w", "50", "--epsilon", "0.01"],
        )
        assert code == 0
        p = report["payload"]
        assert p["trace"]["reason"] == "converged"
        last = p["trace"]["steps"][-1]
        assert (last["g1"], last["g2"], last["delta1"], last["delta2"]) == (0, 0, 0, 0)

    def test_epsilon_one_single_iteration(self, capsys, noisy_csv):
        code, report = run(
            capsys,
            ["sample", str(noisy_csv), "--strategy", "active", "--seed", "4", "--epsilon", "1"],
        )
        assert code == 0
        assert len(report["payload"]["trace"]["steps"]) == 1

    def test_uniform_with_target_and_trace_csv(self, capsys, noisy_csv, tmp_path):
        trace_csv = tmp_path / "trace.csv"
        code, report = run(
            capsys,
            ["sample", str(noisy_csv), "--strategy", "uniform", "--seed", "6",
             "-b", "200", "--target", "1000", "--trace-csv", str(trace_csv)],
        )
        assert code == 0
        assert report["payload"]["trace"]["reason"] == "target_reached"
        assert report["payload"]["queries_used"] == 1000
        lines = trace_csv.read_text().strip().splitlines()
        assert len(lines) == 1 + len(report["payload"]["trace"]["steps"])

    def test_budget_flag(self, capsys, noisy_csv):
        code, report = run(
            capsys,
            ["sample", str(noisy_csv), "--strategy", "positive", "--seed", "6",
             "-b", "100", "--budget", "250"],
        )
        assert code == 0
        assert report["payload"]["queries_used"] == 250
        assert report["payload"]["trace"]["reason"] == "budget_exhausted"

    def test_direct_strategy(self, capsys, noisy_csv):
        code, report = run(
            capsys,
            ["sample", str(noisy_csv), "--strategy", "direct", "--seed", "6",
             "-b", "200", "--target", "600"],
        )
        assert code == 0
        assert report["payload"]["trace"]["steps"][-1]["estimator"] == "direct"


class TestScanGamma:
    def test_scan_with_curve(self, capsys, tmp_path):
        curve = tmp_path / "curve.csv"
        code, report = run(
            capsys,
            ["scan-gamma", "--r", "0.25", "--U", "0.1", "--step", "0.001", "-o", str(curve)],
        )
        assert code == 0
        p = report["payload"]
        argmax_g1 = sorted(round(pt["g1"], 9) for pt in p["argmax"])
        assert argmax_g1 == [0.0, 0.4]
        assert curve.exists()

    def test_infeasible_budget_fails(self, capsys):
        code, _ = run(capsys, ["scan-gamma", "--r", "0.2", "--s", "0.1", "--U", "0.9"])
        assert code == 1

    def test_missing_required_flag_usage_error(self, capsys):
        code, _ = run(capsys, ["scan-gamma", "--r", "0.2"])
        assert code == 2


class TestCounterexample:
    def test_exact_report(self, capsys):
        code, report = run(capsys, ["counterexample"])
        assert code == 0
        p = report["payload"]
        assert p["true_bias_signed"] == 0.0
        assert p["naive_signed"] == 1.0
        assert (p["g1"], p["g2"]) == (0.5, 0.5)
        assert (p["delta1"], p["delta2"]) == (1.0, 0.0)
        assert "DegenerateDeltas" in p["degenerate"]["general"]
        assert len(p["rows"]) == 6


class TestDeterminism:
    @pytest.mark.parametrize(
        "argv",
        [
            ["counterexample"],
            ["scan-gamma", "--r", "0.25", "--U", "0.2"],
        ],
    )
    def test_unseeded_commands_reproducible(self, capsys, argv):
        _, r1 = run(capsys, argv)
        _, r2 = run(capsys, argv)
        assert payload_of(r1) == payload_of(r2)

    def test_seeded_commands_reproducible(self, capsys, noisy_csv, tmp_path):
        for argv in (
            ["audit", str(noisy_csv), "--estimator", "all", "--labeled-fraction", "0.05",
             "--seed", "13"],
            ["simulate", "-n", "300", "--seed", "13", "-o", str(tmp_path / "s.csv")],
            ["sample", str(noisy_csv), "--strategy", "active", "--seed", "13", "-b", "60",
             "-w", "60", "--epsilon", "0.005"],
            ["sample", str(noisy_csv), "--strategy", "uniform", "--seed", "13", "-b", "100",
             "--target", "600"],
        ):
            _, r1 = run(capsys, argv)
            _, r2 = run(capsys, argv)
            assert payload_of(r1) == payload_of(r2), argv

    def test_output_file_matches_stdout_payload(self, capsys, tmp_path):
        out = tmp_path / "report.json"
        code, _ = run(capsys, ["counterexample", "-o", str(out)])
        assert code == 0
        on_disk = json.loads(out.read_text())
        assert on_disk["payload"]["naive_signed"] == 1.0


class TestAuditMonteCarlo:
    def test_corrected_close_to_truth_on_large_simulated_pool(self, capsys, tmp_path):
        data = tmp_path / "big.csv"
        code, _ = run(capsys, ["simulate", "-n", "200000", "--seed", "77", "-o", str(data)])
        assert code == 0
        code, report = run(
            capsys,
            ["audit", str(data), "--estimator", "all", "--labeled-fraction", "0.01",
             "--seed", "78"],
        )
        assert code == 0
        p = report["payload"]
        assert abs(p["corrected_abs"] - p["true_bias_abs"]) < 0.02
