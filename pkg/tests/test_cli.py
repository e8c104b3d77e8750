import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from conftest import synthetic_csv
from stochastic_lr import cli
from stochastic_lr.cli import ConfigError, RunConfig, main, read_config_file
from stochastic_lr.trainer import SWEEP_COLUMNS, SweepCurve, load_model

FAST = ["--max-groups", "4"]


@pytest.fixture(scope="module")
def data(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    csv_path = synthetic_csv(root / "d.csv", n=120, seed=3)  # a seed where SLR wins
    cfg = root / "c.cfg"
    cfg.write_text("anneal.max_evals = 12\nwrite_trace = true  # keep the walk\n")
    return root, csv_path, cfg


@pytest.fixture(scope="module")
def trained(data):
    root, csv_path, cfg = data
    out = root / "run"
    assert main(["train", "--data", str(csv_path), "--config", str(cfg), "--out", str(out)]
                + FAST) == 0
    return out


def test_train_outputs(trained):
    names = sorted(p.name for p in trained.iterdir())
    model = load_model(trained / "model.json")
    # the trace belongs to the winning group count, so it needs an SLR winner
    trace = [] if model.baseline_won else ["anneal_trace.csv"]
    assert names == sorted(trace + ["model.json", "report.json", "sweep.csv"])
    assert model.metadata["seed"] == 0 and model.metadata["anneal"]["max_evals"] == 12
    report = json.loads((trained / "report.json").read_text(encoding="utf-8"))
    assert set(report) == {"baseline", "winner", "winner_info", "sweep", "metadata"}
    assert report["winner"]["accuracy"] == model.selection_metric
    with open(trained / "sweep.csv", encoding="utf-8") as fh:
        assert next(csv.reader(fh)) == SWEEP_COLUMNS
    assert len(SweepCurve.from_csv(trained / "sweep.csv").entries) == 4


def test_evaluate_reproduces_training_report(data, trained, capsys):
    _, csv_path, _ = data
    code = main(["evaluate", "--model", str(trained / "model.json"), "--data", str(csv_path),
                 "--subset", "validation", "--out", str(trained / "ev")])
    assert code == 0
    printed = json.loads(capsys.readouterr().out)
    report = json.loads((trained / "report.json").read_text())
    assert printed == report["winner"]
    assert json.loads((trained / "ev" / "evaluation.json").read_text()) == printed


def test_evaluate_threshold_monotone(data, trained, capsys):
    _, csv_path, _ = data
    recalls = []
    for t in ("0.5", "0.9"):
        main(["evaluate", "--model", str(trained / "model.json"), "--data", str(csv_path),
              "--threshold", t])
        recalls.append(json.loads(capsys.readouterr().out)["sensitivity_tpr"])
    assert recalls[1] <= recalls[0]


def test_evaluate_feature_mismatch(data, trained, tmp_path, capsys):
    _, csv_path, _ = data
    text = csv_path.read_text().replace("x1,", "other,", 1)
    (tmp_path / "m.csv").write_text(text)
    code = main(["evaluate", "--model", str(trained / "model.json"), "--data",
                 str(tmp_path / "m.csv")])
    assert code == cli.EXIT_DATA
    err = capsys.readouterr().err
    assert "missing ['x1']" in err and "unexpected ['other']" in err


def test_evaluate_reordered_columns(data, trained, tmp_path, capsys):
    _, csv_path, _ = data
    rows = list(csv.reader(open(csv_path)))
    with open(tmp_path / "r.csv", "w", newline="") as fh:
        csv.writer(fh).writerows([[r[2], r[0], r[3], r[1]] for r in rows])
    main(["evaluate", "--model", str(trained / "model.json"), "--data", str(csv_path)])
    a = capsys.readouterr().out
    main(["evaluate", "--model", str(trained / "model.json"), "--data", str(tmp_path / "r.csv")])
    assert capsys.readouterr().out == a


def test_missing_data_leaves_nothing(tmp_path):
    out = tmp_path / "o"
    assert main(["train", "--data", str(tmp_path / "nope.csv"), "--out", str(out)]) == 3
    assert not out.exists()


def test_config_errors(data, tmp_path):
    _, csv_path, _ = data
    bad = tmp_path / "bad.cfg"
    for text in ("colour = red\n", "anneal.speed = 2\n", "threshold = 2\n", "not a pair\n",
                 '{"seed": "x"}', "[1, 2]"):
        bad.write_text(text)
        assert main(["train", "--data", str(csv_path), "--config", str(bad),
                     "--out", str(tmp_path / "o")]) == cli.EXIT_CONFIG, text
    assert main(["train", "--data", str(csv_path), "--method", "other"]) == cli.EXIT_CONFIG
    assert main(["train", "--out", str(tmp_path / "o")]) == cli.EXIT_CONFIG
    assert main(["train", "--data", str(csv_path), "--max-groups", "500",
                 "--out", str(tmp_path / "o")]) == cli.EXIT_CONFIG
    assert not (tmp_path / "o").exists()


def test_solver_failure_exit_code(data, tmp_path, monkeypatch):
    _, csv_path, _ = data

    def boom(*a, **k):
        raise RuntimeError("every group count was skipped; nothing to select")

    monkeypatch.setattr(cli, "sweep", boom)
    assert main(["train", "--data", str(csv_path), "--out", str(tmp_path / "o")]) == 4
    assert not (tmp_path / "o").exists()


def test_config_formats_and_override(tmp_path):
    kv = tmp_path / "a.cfg"
    kv.write_text("method = quantile\nseed = 3\nanneal.cooling = 0.5\npositive_class = 1\n")
    js = tmp_path / "b.json"
    js.write_text(json.dumps({"method": "quantile", "seed": 3, "anneal": {"cooling": 0.5},
                              "positive_class": "1"}))
    assert read_config_file(kv) == read_config_file(js)
    cfg = RunConfig.from_mapping({**read_config_file(kv), "seed": 7})
    assert cfg.seed == 7 and cfg.schedule().seed == 7 and cfg.schedule().cooling == 0.5
    rice = RunConfig(layout="rice")
    assert (rice.label_column, rice.positive_class, rice.train_fraction, rice.max_groups) == \
        ("Class", "Cammeo", 0.75, 31)
    with pytest.raises(ConfigError):
        RunConfig(layout="wine")


def test_compare_single_execution_matches_train(data, trained, tmp_path):
    _, csv_path, cfg = data
    out = tmp_path / "cmp"
    assert main(["compare", "--data", str(csv_path), "--config", str(cfg), "--out", str(out),
                 "--executions", "1"] + FAST) == 0
    rep = json.loads((out / "report.json").read_text())
    train_rep = json.loads((trained / "report.json").read_text())
    for c in rep["columns"]:
        assert rep["executions"][0]["slr"][c] == train_rep["winner"][c]
        assert rep["executions"][0]["baseline"][c] == train_rep["baseline"][c]
        assert rep["mean"]["slr"][c] == train_rep["winner"][c]
    assert (out / "sweep_seed0.csv").read_bytes() == (trained / "sweep.csv").read_bytes()


def test_compare_means_and_parallel(data, tmp_path):
    root, csv_path, _ = data
    cfg = root / "rice.cfg"
    cfg.write_text("label_column = DEATH_EVENT\npositive_class = 1\nanneal.max_evals = 12\n")
    reports = []
    for jobs in ("1", "3"):
        out = tmp_path / f"c{jobs}"
        assert main(["compare", "--data", str(csv_path), "--config", str(cfg), "--out", str(out),
                     "--executions", "3", "--n-jobs", jobs, "--layout", "rice"] + FAST) == 0
        reports.append(json.loads((out / "report.json").read_text()))
    a, b = reports
    assert [e["seed"] for e in a["executions"]] == [0, 1, 2]
    assert a["columns"][0] == "accuracy" and "npv" in a["columns"]
    for side in ("baseline", "slr"):
        for c in a["columns"]:
            vals = [e[side][c] for e in a["executions"] if e[side][c] is not None]
            if vals:
                assert abs(a["mean"][side][c] - float(np.mean(vals))) <= 1e-12
    a.pop("metadata"), b.pop("metadata")
    assert a == b


def test_module_entry_point(data, tmp_path):
    _, csv_path, _ = data
    proc = subprocess.run([sys.executable, "-m", "stochastic_lr", "train", "--data",
                           str(tmp_path / "none.csv")], capture_output=True, text=True,
                          env={"SLR_LOG": "DEBUG", "PATH": ""})
    assert proc.returncode == 3 and "data error" in proc.stderr
