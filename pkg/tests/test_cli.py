# tests/test_cli.py
import csv
import json

import pytest

from config import DATA_DIR
from conftest import simulate_weibull
from errors import ConfigError, DataError
from main import RunConfig, main, parse_args, parse_flag, run, split_names

EXAMPLE = str(DATA_DIR / "example.csv")
PRED = str(DATA_DIR / "pred.csv")


def base_args(outdir, *extra):
    return ["--data", EXAMPLE, "--t1", "time", "--censor", "delta", "--outdir", str(outdir), "--quiet", *extra]


def test_full_run_writes_all_outputs(outdir):
    code = main(base_args(
        outdir, "--dist", "exp", "--covars", "age sex", "--refgrp", "male",
        "--pred", PRED, "--pred-max-time", "5",
    ))
    assert code == 0
    names = sorted(p.name for p in outdir.iterdir())
    assert names == ["curves.csv", "haz.svg", "report.txt", "results.json", "surv.svg"]

    results = json.loads((outdir / "results.json").read_text(encoding="utf-8"))
    assert [row["label"] for row in results["fit"]["estimates"]] == ["Intercept", "age", "sex_female"]
    assert results["run"]["n_used"] == 10
    assert results["run"]["manifest"] == ["report.txt", "results.json", "curves.csv", "surv.svg", "haz.svg"]
    assert len(results["predictions"]) == 2

    with open(outdir / "curves.csv", encoding="utf-8", newline="") as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 200
    assert rows[0]["group"] == "sex=female, age=0"
    assert float(rows[99]["time"]) == pytest.approx(5.0)

    report = (outdir / "report.txt").read_text(encoding="utf-8")
    assert "Parameter Estimates" in report and "Prediction" in report


def test_results_are_deterministic(outdir):
    args = base_args(outdir, "--dist", "weibull", "--covars", "age")
    main(args)
    first = (outdir / "results.json").read_bytes()
    main(args)
    assert (outdir / "results.json").read_bytes() == first


def test_missing_data_file_writes_nothing(outdir, capsys):
    code = main(["--data", str(outdir / "nope.csv"), "--t1", "time", "--censor", "delta",
                 "--dist", "exp", "--outdir", str(outdir)])
    assert code == 1
    assert not outdir.exists()
    assert capsys.readouterr().err


@pytest.mark.parametrize("extra", [
    ["--dist", "exp", "--t2", "age"],
    ["--dist", "exp", "--hazard", "exp(-beta)", "--survival", "exp(-time)"],
    ["--dist", "exp", "--pred-max-time", "5"],
    ["--dist", "cauchy"],
    ["--dist", "exp", "--robust", "maybe"],
    ["--dist", "exp", "--no-such-option", "1"],
    ["--dist", "exp", "--algorithm", "simplex"],
    ["--dist", "weibull", "--anc", "lambda(age)"],
    ["--dist", "exp", "--covars", "height"],
])
def test_input_errors_exit_with_one(outdir, extra):
    assert main(base_args(outdir, *extra)) == 1
    assert not outdir.exists()


def test_nonconvergence_exits_with_two_and_still_reports(outdir):
    code = main(base_args(outdir, "--dist", "weibull", "--covars", "age sex", "--max-iter", "1"))
    assert code == 2
    report = (outdir / "report.txt").read_text(encoding="utf-8")
    assert "Convergence: not_converged" in report


def test_robust_flag(outdir):
    main(base_args(outdir, "--dist", "exp", "--robust", "t"))
    results = json.loads((outdir / "results.json").read_text(encoding="utf-8"))
    assert results["fit"]["covariance_kind"] == "sandwich"
    assert results["config"]["robust"] is True


def test_compare_distributions(outdir):
    code = main(base_args(outdir, "--dist", "exp", "--compare", "exp weibull"))
    assert code in (0, 2)
    results = json.loads((outdir / "results.json").read_text(encoding="utf-8"))
    assert [row["distribution"] for row in results["comparison"]] == ["Exponential", "Weibull"]


def test_custom_distribution_run(outdir):
    code = main(base_args(
        outdir,
        "--hazard", "alpha * exp(-beta) * (time * exp(-beta)) ** (alpha - 1)",
        "--survival", "exp(-(time * exp(-beta)) ** alpha)",
        "--param-anc", "alpha", "--log-transf-param", "alpha",
    ))
    assert code in (0, 2)
    results = json.loads((outdir / "results.json").read_text(encoding="utf-8"))
    assert [row["label"] for row in results["fit"]["estimates"]] == ["Intercept", "ALPHA"]


def test_list_distributions(capsys):
    assert main(["--list-dists"]) == 0
    assert "gengamma" in capsys.readouterr().out


def test_run_returns_report(outdir):
    config = parse_args(base_args(outdir, "--dist", "exp", "--nlp_print", "0"))
    report, code = run(config, printer=lambda line: None)
    assert code == report.exit_code == 0
    assert report.n_input == 10
    assert report.rows[0].label == "Intercept"


def test_run_config_validation():
    with pytest.raises(ConfigError):
        RunConfig(t1="time", censor="delta", dist="exp")
    with pytest.raises(ConfigError):
        RunConfig(data="d.csv", t1="time", censor="delta")
    with pytest.raises(ConfigError):
        RunConfig(data="d.csv", t1="time", censor="delta", dist="exp", pred="p.csv", pred_max_time=-1.0)
    with pytest.raises(ConfigError):
        RunConfig(data="d.csv", t1="time", censor="delta", hazard="1", survival="1", compare=("exp",))
    assert RunConfig(list_dists=True).list_dists


def test_helpers():
    assert parse_flag("Yes") is True
    assert parse_flag("f") is False
    assert split_names("age, sex  grp") == ("age", "sex", "grp")
    assert split_names(None) == ()
    config = parse_args(["--data", "d.csv", "--t1", "time", "--censor", "delta", "--dist", "exp",
                         "--class_cov", "grp", "--init", "beta=0.5", "--missing", "NA ."])
    assert config.class_cov == ("grp",)
    assert config.init == {"beta": 0.5}
    assert config.missing == ("NA", ".")


def test_plot_failure_leaves_no_partial_output(outdir, monkeypatch):
    def broken(*args, **kwargs):
        raise DataError("Нет точек для графика")

    monkeypatch.setattr("main.render_plots", broken)
    code = main(base_args(outdir, "--dist", "exp", "--covars", "age sex",
                          "--pred", PRED, "--pred-max-time", "5"))
    assert code == 1
    assert not outdir.exists()


def test_stratified_run_notes_pooled_intervals(tmp_path, outdir, rng):
    first = simulate_weibull(rng, 60, 0.5, -0.7, 0.8)
    second = simulate_weibull(rng, 60, 1.0, -0.7, 0.8)
    path = tmp_path / "strata.csv"
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["time", "delta", "grp"])
        for label, table in (("a", first), ("b", second)):
            for t, d in zip(table.column("time"), table.column("delta")):
                writer.writerow([repr(float(t)), int(d), label])

    code = main(["--data", str(path), "--t1", "time", "--censor", "delta", "--dist", "weibull",
                 "--strata", "grp", "--outdir", str(outdir), "--quiet"])
    assert code == 0
    report = (outdir / "report.txt").read_text(encoding="utf-8")
    assert "Note: Интервалы SIGMA объединены по стратам" in report
    results = json.loads((outdir / "results.json").read_text(encoding="utf-8"))
    assert any("SIGMA" in note for note in results["run"]["notes"])


def test_unstratified_run_has_no_pooling_note(outdir):
    main(base_args(outdir, "--dist", "weibull"))
    report = (outdir / "report.txt").read_text(encoding="utf-8")
    assert "объединены по стратам" not in report
