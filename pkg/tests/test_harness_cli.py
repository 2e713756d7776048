import csv
from dataclasses import replace

import numpy as np
import pytest
from sklearn.base import clone

from conftest import random_complex
from sparse_support import cli
from sparse_support.autoencoder import SupportAutoencoder
from sparse_support.datagen import Case, ScenarioConfig, load_dataset
from sparse_support.exceptions import ConfigError, TrainingError
from sparse_support.harness import (
    ExperimentPlan,
    ResultRow,
    default_methods,
    desk_train_config,
    load_plan,
    read_results,
    run_plan,
    save_plan,
    time_inference,
)

TINY = {"train": 400, "validation": 200, "test": 200}


def tiny_plan(tmp_path, **kw):
    base = dict(scenario=ScenarioConfig(N=10, L=4, p=0.2), train=replace(desk_train_config(), max_epochs=2),
                methods=("lasso",), sweep_values=(0.4,), output_dir=str(tmp_path / "out"),
                sizes=TINY, n_calibration=100, timing_samples=5)
    base.update(kw)
    return ExperimentPlan(**base)


# --- plan validation --------------------------------------------------------------

def test_plan_rejects_unknown_axis(tmp_path):
    with pytest.raises(ConfigError):
        tiny_plan(tmp_path, sweep_axis="bogus")


def test_plan_rejects_axis_for_wrong_case(tmp_path):
    with pytest.raises(ConfigError):
        tiny_plan(tmp_path, sweep_axis="p_u", sweep_values=(0.5,))


def test_plan_rejects_invalid_value(tmp_path):
    with pytest.raises(ConfigError):
        tiny_plan(tmp_path, sweep_values=(1.5,))
    with pytest.raises(ConfigError):
        tiny_plan(tmp_path, sweep_axis="p", sweep_values=(-0.1,))


def test_plan_rejects_unknown_method(tmp_path):
    with pytest.raises(ConfigError):
        tiny_plan(tmp_path, methods=("magic",))


def test_default_methods_follow_case():
    assert "group_lasso" not in default_methods(ScenarioConfig())
    grouped = ScenarioConfig(N=40, case=Case.GROUP_CORRELATED, group_count=8, p_u=1.0)
    assert "group_lasso" in default_methods(grouped)
    partial = grouped.with_(p_u=0.5)
    assert "sparse_group_lasso" in default_methods(partial)


def test_plan_ini_round_trip(tmp_path):
    plan = tiny_plan(tmp_path, methods=("lasso", "amp"), sweep_values=(0.3, 0.5))
    path = tmp_path / "plan.ini"
    save_plan(plan, path)
    again = load_plan(path)
    assert again == plan


def test_plan_ini_unknown_key(tmp_path):
    path = tmp_path / "plan.ini"
    path.write_text("[scenario]\nN = 10\nbogus = 1\n")
    with pytest.raises(ConfigError):
        load_plan(path)


# --- running -----------------------------------------------------------------------

def test_single_value_sweep_one_row(tmp_path):
    rows = run_plan(tiny_plan(tmp_path))
    assert len(rows) == 1 and rows[0].status == "ok"
    assert 0.0 <= rows[0].error_rate <= 1.0
    on_disk = read_results(tmp_path / "out" / "results.csv")
    assert len(on_disk) == 1
    assert list(on_disk[0]) == ResultRow.columns()
    assert load_dataset(tmp_path / "out" / "test_00.ssup").fingerprint() == rows[0].test_hash


def test_failing_method_recorded(tmp_path, monkeypatch):
    import sparse_support.harness as harness

    def boom(*a, **k):
        raise TrainingError("loss became non-finite at epoch 1", [])

    monkeypatch.setattr(harness, "train", boom)
    rows = run_plan(tiny_plan(tmp_path, methods=("proposed", "lasso")))
    assert rows[0].status.startswith("error: TrainingError")
    assert rows[1].status == "ok"


def test_time_inference_noop_is_tiny():
    assert time_inference(lambda v: None, list(range(200))) < 1e-6


def test_time_inference_empty():
    with pytest.raises(ValueError):
        time_inference(lambda v: None, [])


# --- CLI -----------------------------------------------------------------------------

SCEN = ["--N", "10", "--L", "4", "--p", "0.2"]


def test_cli_gen_train_calibrate_eval(tmp_path, capsys, monkeypatch):
    import sparse_support.datagen as datagen
    monkeypatch.setattr(cli, "DESK_SIZES", TINY)
    monkeypatch.setattr(datagen, "DESK_SIZES", TINY)
    data, out = tmp_path / "data", tmp_path / "model"
    assert cli.main(["gen", *SCEN, "--out", str(data)]) == 0
    assert cli.main(["train", *SCEN, "--data", str(data), "--max-epochs", "2", "--out", str(out)]) == 0
    ckpt = out / "proposed.ssae"
    assert cli.main(["calibrate", "--checkpoint", str(ckpt), "--dataset", str(data / "validation.ssup")]) == 0
    assert cli.main(["eval", "--checkpoint", str(ckpt), "--dataset", str(data / "test.ssup")]) == 0
    assert cli.main(["eval", "--method", "lasso", "--L", "4", "--dataset", str(data / "test.ssup"),
                     "--calibration", str(data / "validation.ssup"), "--n-calibration", "50"]) == 0
    assert cli.main(["time", *SCEN, "--checkpoint", str(ckpt), "--samples", "5",
                     "--n-calibration", "50", "--methods", "amp"]) == 0
    text = capsys.readouterr().out
    assert "error rate" in text and "s/sample" in text


def test_cli_sweep_from_plan(tmp_path, capsys):
    path = tmp_path / "plan.ini"
    save_plan(tiny_plan(tmp_path), path)
    assert cli.main(["sweep", "--plan", str(path), "--out", str(tmp_path / "s")]) == 0
    assert len(read_results(tmp_path / "s" / "results.csv")) == 1


def test_cli_config_error_exit_code(tmp_path, capsys):
    assert cli.main(["gen", "--p", "2", "--out", str(tmp_path)]) == 2
    assert "error" in capsys.readouterr().err


def test_cli_baseline_eval_needs_calibration(tmp_path, capsys):
    assert cli.main(["gen", *SCEN, "--out", str(tmp_path)]) == 0
    assert cli.main(["eval", "--method", "lasso", "--dataset", str(tmp_path / "test.ssup")]) == 2


def test_cli_training_error_exit_code(tmp_path, monkeypatch, capsys):
    def boom(*a, **k):
        raise TrainingError("loss became non-finite at epoch 3", [])

    monkeypatch.setattr(cli, "train", boom)
    monkeypatch.setattr(cli, "build_datasets", lambda *a, **k: {"train": None, "validation": None})
    assert cli.main(["train", *SCEN, "--out", str(tmp_path)]) == 2
    assert "non-finite" in capsys.readouterr().err


# --- estimator API ---------------------------------------------------------------------

def test_autoencoder_estimator_api(rng, tmp_path):
    est = SupportAutoencoder(n_measurements=4, max_epochs=3, random_state=0)
    assert clone(est).get_params() == est.get_params()
    alpha = (rng.random((300, 10)) < 0.2).astype(int)
    X = alpha * random_complex(rng, 300, 10)
    est.fit(X)
    norms = np.linalg.norm(est.measurement_matrix_, axis=0)
    np.testing.assert_allclose(norms, 2.0, atol=1e-12)
    Y = est.transform(X, random_state=1)
    assert Y.shape == (300, 4)
    est.calibrate(Y, alpha)
    assert 0.0 <= est.score(Y, alpha) <= 1.0
    est.save(tmp_path / "m.ssae")
    again = SupportAutoencoder.load(tmp_path / "m.ssae")
    np.testing.assert_array_equal(again.predict(Y), est.predict(Y))


def test_autoencoder_rejects_real_shape_mismatch(rng):
    est = SupportAutoencoder(n_measurements=4, max_epochs=1, random_state=0)
    with pytest.raises(ValueError):
        est.fit(np.zeros(5))


def test_time_inference_is_stable(rng):
    from sparse_support.baselines import LassoConfig, lasso_solve
    A = random_complex(rng, 8, 20)
    ys = list(random_complex(rng, 30, 8))
    cfg = LassoConfig(lam=1e-3, max_iters=50, tol=1e-300)  # fixed amount of work per call
    t1 = time_inference(lambda y: lasso_solve(A, y, cfg), ys)
    t2 = time_inference(lambda y: lasso_solve(A, y, cfg), ys)
    assert abs(t1 - t2) / min(t1, t2) < 0.5
