"""Command-line entry point: ``sparse-support {gen,train,calibrate,eval,sweep,time}``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .autoencoder.network import decoder_forward, encoder_forward
from .autoencoder.training import train
from .checkpoint import load_checkpoint, save_checkpoint
from .core import MeasurementMatrix
from .datagen import DESK_SIZES, PAPER_SIZES, ScenarioConfig, build_datasets, load_dataset, role_rng, save_dataset
from .exceptions import ConfigError, FormatError, TrainingError
from .harness import (
    ExperimentPlan,
    desk_train_config,
    load_plan,
    paper_train_config,
    prepare_data,
    run_plan,
    shared_pilots,
    time_inference,
    make_baseline,
)
from .metrics import calibrate_threshold, error_rate, hard_threshold

logger = logging.getLogger("sparse_support")


def _add_scenario_args(p):
    g = p.add_argument_group("scenario")
    g.add_argument("--case", default="IID", help="IID, TWO_GROUP or GROUP_CORRELATED (or 1/2/3)")
    g.add_argument("--N", type=int, default=40)
    g.add_argument("--L", type=int, default=12)
    g.add_argument("--p", type=float, default=0.1)
    g.add_argument("--ratio", dest="ratio_p1_p2", type=float, default=1.0)
    g.add_argument("--p-u", dest="p_u", type=float, default=1.0)
    g.add_argument("--group-count", type=int, default=1)
    g.add_argument("--sigma2", type=float, default=0.1)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--profile", choices=("desk", "paper"), default="desk")


def _add_train_args(p):
    g = p.add_argument_group("training")
    g.add_argument("--Q", type=int, default=None, help="hidden width (default 8L)")
    g.add_argument("--lr", type=float, default=None)
    g.add_argument("--batch-size", type=int, default=None)
    g.add_argument("--max-epochs", type=int, default=None)
    g.add_argument("--patience", type=int, default=None)
    g.add_argument("--freeze-matrix", action="store_true",
                   help="train the decoder only, on the shared Gaussian pilot matrix")


def _scenario(args) -> ScenarioConfig:
    return ScenarioConfig(N=args.N, L=args.L, case=args.case, p=args.p,
                          ratio_p1_p2=args.ratio_p1_p2, p_u=args.p_u,
                          group_count=args.group_count, sigma2=args.sigma2, seed=args.seed)


def _sizes(args, scenario):
    return dict(DESK_SIZES if args.profile == "desk" else PAPER_SIZES[scenario.case])


def _train_config(args):
    base = desk_train_config(args.seed) if args.profile == "desk" else paper_train_config(args.seed)
    changes = {k: getattr(args, k) for k in ("Q", "lr", "batch_size", "max_epochs", "patience")
               if getattr(args, k) is not None}
    return replace(base, freeze_matrix=args.freeze_matrix, **changes)


def _measure(A, ds, sigma2, seed):
    return encoder_forward(A, ds.x, sigma2, role_rng(seed, f"{ds.role}-noise-{A.L}"))


def cmd_gen(args):
    scenario = _scenario(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for role, ds in build_datasets(scenario, _sizes(args, scenario)).items():
        save_dataset(out / f"{role}.ssup", ds)
        print(f"{role}: {len(ds)} samples -> {out / f'{role}.ssup'}")


def _load_or_build(args, scenario):
    if args.data:
        d = Path(args.data)
        return {r: load_dataset(d / f"{r}.ssup", role=r) for r in ("train", "validation", "test")}
    return build_datasets(scenario, _sizes(args, scenario))


def cmd_train(args):
    scenario = _scenario(args)
    cfg = _train_config(args)
    ds = _load_or_build(args, scenario)
    init_A = MeasurementMatrix.from_complex(shared_pilots(scenario)) if cfg.freeze_matrix else None
    result = train(ds["train"], ds["validation"], cfg, scenario.sigma2, scenario.L, init_A=init_A)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ckpt = out / ("dl_fixed_matrix.ssae" if cfg.freeze_matrix else "proposed.ssae")
    save_checkpoint(ckpt, result.A, result.W, 0.5)
    (out / f"{ckpt.stem}_log.json").write_text(json.dumps(result.log, indent=1))
    print(f"best epoch {result.best_epoch}, val loss {result.best_val_loss:.6f} -> {ckpt}")


def cmd_calibrate(args):
    A, W, _ = load_checkpoint(args.checkpoint)
    ds = load_dataset(args.dataset, role="validation")
    scores, _ = decoder_forward(W, _measure(A, ds, args.sigma2, args.seed))
    cal = calibrate_threshold(scores, ds.alpha)
    save_checkpoint(args.checkpoint, A, W, cal.r_star)
    csv_path = Path(args.report or Path(args.checkpoint).with_suffix(".calibration.csv"))
    cal.write_csv(csv_path)
    print(f"r* = {cal.r_star:.2f}, P_E* = {cal.pe_star:.6f}; report -> {csv_path}")


def cmd_eval(args):
    ds = load_dataset(args.dataset, role="test")
    if args.method == "proposed":
        A, W, r = load_checkpoint(args.checkpoint)
        scores, _ = decoder_forward(W, _measure(A, ds, args.sigma2, args.seed))
        err = error_rate(hard_threshold(scores, r), ds.alpha)
        print(f"error rate {err:.6f} (r = {r:.2f})")
        return
    if args.calibration is None:
        raise ConfigError("baseline evaluation needs --calibration <validation.ssup>")
    cal = load_dataset(args.calibration, role="validation")
    scenario = ScenarioConfig(N=ds.N, L=args.L, sigma2=args.sigma2, seed=args.seed,
                              case=args.case, group_count=args.group_count)
    pilots = shared_pilots(scenario)
    A = MeasurementMatrix.from_complex(pilots)
    det = make_baseline(args.method, pilots, scenario)
    y_cal = _measure(A, cal, args.sigma2, args.seed).to_complex()[: args.n_calibration]
    det.fit(y_cal, cal.alpha[: args.n_calibration])
    err = error_rate(det.predict(_measure(A, ds, args.sigma2, args.seed).to_complex()), ds.alpha)
    print(f"{args.method}: error rate {err:.6f}, lambda {det.lambda_}, tau {det.threshold_:.4g}")


def cmd_sweep(args):
    if args.plan:
        plan = load_plan(args.plan, output_dir=args.out)
    else:
        scenario = _scenario(args)
        plan = ExperimentPlan(
            scenario=scenario, train=_train_config(args),
            methods=tuple(args.methods.split(",")) if args.methods else None,
            sweep_axis=args.axis, sweep_values=tuple(float(v) for v in args.values.split(",")),
            output_dir=args.out or "results", profile=args.profile,
        )
    rows = run_plan(plan)
    for r in rows:
        print(f"{r.sweep_axis}={r.sweep_value:<6g} {r.method:<20s} P_E={r.error_rate:.5f}  {r.status}")
    print(f"results -> {Path(plan.output_dir) / 'results.csv'}")


def cmd_time(args):
    scenario = _scenario(args)
    sizes = {"train": 1, "validation": args.n_calibration, "test": args.samples}
    data = prepare_data(scenario, sizes)
    report = {}
    if args.checkpoint:
        A, W, r = load_checkpoint(args.checkpoint, expect_shape=(scenario.N, scenario.L, None))
        y = data.measure(A, "test")
        report["proposed"] = time_inference(
            lambda v: hard_threshold(decoder_forward(W, v)[0], r), [y[i] for i in range(len(y))])
    A = MeasurementMatrix.from_complex(data.pilots)
    y_val = data.measure(A, "validation").to_complex()
    y_test = data.measure(A, "test").to_complex()
    for method in args.methods.split(","):
        if method == "proposed":
            continue
        det = make_baseline(method, data.pilots, scenario).fit(y_val, data.datasets["validation"].alpha)
        report[method] = time_inference(det.predict, list(y_test))
    for k, v in report.items():
        print(f"{k:<20s} {v:.3e} s/sample")


def build_parser():
    parser = argparse.ArgumentParser(prog="sparse-support", description=__doc__)
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate train/validation/test .ssup files")
    _add_scenario_args(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("train", help="train the auto-encoder and write a .ssae checkpoint")
    _add_scenario_args(p)
    _add_train_args(p)
    p.add_argument("--data", help="directory with train/validation/test .ssup files")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("calibrate", help="choose the hard threshold on a validation file")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--sigma2", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--report", help="CSV path for the (r, P_E) table")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("eval", help="error rate of a method on a test file")
    p.add_argument("--method", default="proposed",
                   choices=("proposed", "lasso", "group_lasso", "sparse_group_lasso", "amp"))
    p.add_argument("--checkpoint")
    p.add_argument("--dataset", required=True)
    p.add_argument("--calibration", help="validation .ssup for baseline tuning")
    p.add_argument("--n-calibration", type=int, default=2000)
    p.add_argument("--case", default="IID")
    p.add_argument("--L", type=int, default=12)
    p.add_argument("--group-count", type=int, default=1)
    p.add_argument("--sigma2", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="run an experiment plan and write results.csv")
    _add_scenario_args(p)
    _add_train_args(p)
    p.add_argument("--plan", help="INI plan file (overrides the flags)")
    p.add_argument("--axis", default="L_over_N")
    p.add_argument("--values", default="0.3")
    p.add_argument("--methods", help="comma-separated; default picks per scenario")
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("time", help="per-sample inference time of each method")
    _add_scenario_args(p)
    p.add_argument("--checkpoint", help="trained .ssae for the proposed method")
    p.add_argument("--methods", default="lasso,amp")
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--n-calibration", type=int, default=500)
    p.set_defaults(func=cmd_time)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * args.verbose,
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")
    try:
        args.func(args)
    except (ConfigError, FormatError, TrainingError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
