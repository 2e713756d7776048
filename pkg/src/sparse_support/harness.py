"""Experiment runner: datasets, training, calibration, baselines, timing and CSV output."""
from __future__ import annotations

import configparser
import csv
import logging
import time
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from .autoencoder.network import decoder_forward, encoder_forward
from .autoencoder.training import TrainConfig, train
from .baselines import AmpDetector, GroupLassoDetector, LassoDetector, SparseGroupLassoDetector
from .checkpoint import save_checkpoint
from .core import Dataset, MeasurementMatrix, SplitComplexVector
from .datagen import DESK_SIZES, PAPER_SIZES, Case, ScenarioConfig, build_datasets, role_rng, save_dataset
from .exceptions import ConfigError
from .metrics import calibrate_threshold, error_rate, hard_threshold

logger = logging.getLogger(__name__)

__all__ = [
    "METHODS",
    "SWEEP_AXES",
    "ResultRow",
    "ExperimentPlan",
    "PreparedData",
    "default_methods",
    "desk_train_config",
    "paper_train_config",
    "shared_pilots",
    "prepare_data",
    "make_baseline",
    "time_inference",
    "run_plan",
    "write_results",
    "read_results",
    "load_plan",
    "save_plan",
]

METHODS = ("proposed", "dl_fixed_matrix", "lasso", "group_lasso", "sparse_group_lasso", "amp")
SWEEP_AXES = ("L_over_N", "p", "ratio_p1_p2", "p_u")
TIMING_COLUMNS = ("train_seconds", "infer_seconds_per_sample")


def desk_train_config(seed: int = 0) -> TrainConfig:
    """Desk profile: published optimiser settings with a 300-epoch cap."""
    return TrainConfig(max_epochs=300, seed=seed)


def paper_train_config(seed: int = 0) -> TrainConfig:
    return TrainConfig(seed=seed)


def default_methods(scenario: ScenarioConfig) -> tuple:
    """The proposed model, the frozen-matrix ablation, LASSO and AMP, plus the
    group-aware LASSO variant that matches a correlated-activity scenario."""
    methods = ["proposed", "dl_fixed_matrix", "lasso", "amp"]
    if scenario.case is Case.GROUP_CORRELATED:
        if scenario.p_u == 1.0:
            methods.insert(3, "group_lasso")
        elif 0.0 < scenario.p_u < 1.0:
            methods.insert(3, "sparse_group_lasso")
    return tuple(methods)


@dataclass
class ResultRow:
    method: str
    sweep_axis: str
    sweep_value: float
    case: int
    N: int
    L: int
    p: float
    ratio_p1_p2: float
    p_u: float
    group_count: int
    sigma2: float
    lambda1: float
    lambda2: float
    threshold: float
    error_rate: float
    train_seconds: float
    infer_seconds_per_sample: float
    seed: int
    test_hash: str
    status: str = "ok"

    @classmethod
    def columns(cls) -> list:
        return [f.name for f in fields(cls)]


@dataclass
class ExperimentPlan:
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    train: TrainConfig = field(default_factory=desk_train_config)
    methods: tuple | None = None
    sweep_axis: str = "L_over_N"
    sweep_values: tuple = (0.3,)
    output_dir: str = "results"
    profile: str = "desk"
    sizes: dict | None = None
    n_calibration: int = 2000
    timing_samples: int = 100

    def __post_init__(self):
        self.sweep_values = tuple(float(v) for v in self.sweep_values)
        if self.methods is not None:
            self.methods = tuple(self.methods)
        self.validate()

    def validate(self):
        if self.sweep_axis not in SWEEP_AXES:
            raise ConfigError(f"sweep axis must be one of {SWEEP_AXES}, got {self.sweep_axis!r}")
        if not self.sweep_values:
            raise ConfigError("sweep needs at least one value")
        if self.profile not in ("desk", "paper"):
            raise ConfigError("profile must be 'desk' or 'paper'")
        if self.methods is not None:
            unknown = set(self.methods) - set(METHODS)
            if unknown:
                raise ConfigError(f"unknown methods {sorted(unknown)}")
        case = self.scenario.case
        if self.sweep_axis == "p_u" and case is not Case.GROUP_CORRELATED:
            raise ConfigError("a p_u sweep needs the GROUP_CORRELATED case")
        if self.sweep_axis == "ratio_p1_p2" and case is not Case.TWO_GROUP:
            raise ConfigError("a ratio_p1_p2 sweep needs the TWO_GROUP case")
        if self.n_calibration < 1 or self.timing_samples < 1:
            raise ConfigError("n_calibration and timing_samples must be positive")
        for v in self.sweep_values:
            self.scenario_at(v)  # raises ConfigError for invalid values

    def scenario_at(self, value: float) -> ScenarioConfig:
        s = self.scenario
        if self.sweep_axis == "L_over_N":
            L = int(round(value * s.N))
            if not 1 <= L < s.N:
                raise ConfigError(f"L/N={value} gives L={L}, outside [1, N)")
            return s.with_(L=L)
        try:
            return s.with_(**{self.sweep_axis: value})
        except ConfigError as exc:
            raise ConfigError(f"sweep value {self.sweep_axis}={value}: {exc}") from None

    def dataset_sizes(self) -> dict:
        if self.sizes is not None:
            return dict(self.sizes)
        return dict(DESK_SIZES if self.profile == "desk" else PAPER_SIZES[self.scenario.case])

    def methods_for(self, scenario: ScenarioConfig) -> tuple:
        return self.methods if self.methods is not None else default_methods(scenario)


# ---------------------------------------------------------------------------
# data shared by every method at one sweep point


@dataclass
class PreparedData:
    scenario: ScenarioConfig
    datasets: dict
    pilots: np.ndarray
    val_noise: SplitComplexVector
    test_noise: SplitComplexVector

    def measure(self, A: MeasurementMatrix, role: str) -> SplitComplexVector:
        """Noisy measurements of one split through ``A``; the noise is shared across methods."""
        noise = self.val_noise if role == "validation" else self.test_noise
        return encoder_forward(A, self.datasets[role].x, 0.0) + noise


def shared_pilots(scenario: ScenarioConfig) -> np.ndarray:
    """Fixed ``CN(0, 1)`` pilot matrix used by every baseline at this scenario."""
    rng = role_rng(scenario.seed, f"pilots-{scenario.L}x{scenario.N}")
    s = np.sqrt(0.5)
    return rng.normal(0.0, s, (scenario.L, scenario.N)) + 1j * rng.normal(0.0, s, (scenario.L, scenario.N))


def _noise(scenario, role, count):
    rng = role_rng(scenario.seed, f"{role}-noise-{scenario.L}")
    s = np.sqrt(scenario.sigma2 / 2)
    shape = (count, scenario.L)
    return SplitComplexVector(rng.normal(0.0, s, shape), rng.normal(0.0, s, shape))


def prepare_data(scenario: ScenarioConfig, sizes: dict) -> PreparedData:
    ds = build_datasets(scenario, sizes)
    return PreparedData(
        scenario, ds, shared_pilots(scenario),
        _noise(scenario, "validation", len(ds["validation"])),
        _noise(scenario, "test", len(ds["test"])),
    )


# ---------------------------------------------------------------------------
# timing


def time_inference(detect_one, inputs, warmup: int = 10) -> float:
    """Mean wall-clock seconds of ``detect_one(inputs[i])`` over all inputs.

    The first ``warmup`` inputs are run once untimed.  Runs single-threaded.
    """
    n = len(inputs)
    if n == 0:
        raise ValueError("no inputs to time")
    with threadpool_limits(limits=1):
        for i in range(min(warmup, n)):
            detect_one(inputs[i])
        start = time.perf_counter()
        for i in range(n):
            detect_one(inputs[i])
        elapsed = time.perf_counter() - start
    return elapsed / n


# ---------------------------------------------------------------------------
# methods


def _row(plan, scenario, method, value, test_hash, **kw) -> ResultRow:
    base = dict(
        method=method, sweep_axis=plan.sweep_axis, sweep_value=value,
        case=int(scenario.case), N=scenario.N, L=scenario.L, p=scenario.p,
        ratio_p1_p2=scenario.ratio_p1_p2, p_u=scenario.p_u,
        group_count=scenario.group_count, sigma2=scenario.sigma2,
        lambda1=float("nan"), lambda2=float("nan"), threshold=float("nan"),
        error_rate=float("nan"), train_seconds=0.0, infer_seconds_per_sample=0.0,
        seed=scenario.seed, test_hash=test_hash,
    )
    base.update(kw)
    return ResultRow(**base)


def _run_network(plan, data: PreparedData, frozen: bool, tag: str, out: Path):
    sc = data.scenario
    cfg = replace(plan.train, freeze_matrix=frozen)
    init_A = MeasurementMatrix.from_complex(data.pilots) if frozen else None
    t0 = time.perf_counter()
    with threadpool_limits(limits=1):
        result = train(data.datasets["train"], data.datasets["validation"], cfg, sc.sigma2,
                       sc.L, init_A=init_A)
    train_seconds = time.perf_counter() - t0

    scores_val, _ = decoder_forward(result.W, data.measure(result.A, "validation"))
    cal = calibrate_threshold(scores_val, data.datasets["validation"].alpha)
    y_test = data.measure(result.A, "test")
    scores, _ = decoder_forward(result.W, y_test)
    err = error_rate(hard_threshold(scores, cal.r_star), data.datasets["test"].alpha)

    save_checkpoint(out / f"{tag}.ssae", result.A, result.W, cal.r_star)
    cal.write_csv(out / f"{tag}_calibration.csv")
    n = min(plan.timing_samples, len(y_test))
    singles = [y_test[i] for i in range(n)]
    W, r = result.W, cal.r_star
    infer = time_inference(lambda y: hard_threshold(decoder_forward(W, y)[0], r), singles)
    return dict(threshold=cal.r_star, error_rate=err, train_seconds=train_seconds,
                infer_seconds_per_sample=infer)


def make_baseline(method, pilots, scenario):
    if method == "lasso":
        return LassoDetector(pilots)
    if method == "amp":
        return AmpDetector(pilots)
    group_size = scenario.group_size if scenario.case is Case.GROUP_CORRELATED else scenario.N
    if method == "group_lasso":
        return GroupLassoDetector(pilots, group_size=group_size)
    if method == "sparse_group_lasso":
        return SparseGroupLassoDetector(pilots, group_size=group_size)
    raise ConfigError(f"unknown baseline {method!r}")


def _run_baseline(plan, data: PreparedData, method: str):
    A = MeasurementMatrix.from_complex(data.pilots)
    y_val = data.measure(A, "validation").to_complex()
    y_test = data.measure(A, "test").to_complex()
    ncal = min(plan.n_calibration, len(y_val))
    det = make_baseline(method, data.pilots, data.scenario)
    t0 = time.perf_counter()
    with threadpool_limits(limits=1):
        det.fit(y_val[:ncal], data.datasets["validation"].alpha[:ncal])
        fit_seconds = time.perf_counter() - t0
        err = error_rate(det.predict(y_test), data.datasets["test"].alpha)
    lam = det.lambda_
    if lam is None:
        lam1 = lam2 = float("nan")
    elif isinstance(lam, tuple):
        lam1, lam2 = lam
    else:
        lam1, lam2 = float(lam), 0.0
    n = min(plan.timing_samples, len(y_test))
    infer = time_inference(lambda y: det.predict(y), [y_test[i] for i in range(n)])
    return dict(lambda1=lam1, lambda2=lam2, threshold=det.threshold_, error_rate=err,
                train_seconds=fit_seconds, infer_seconds_per_sample=infer)


def run_plan(plan: ExperimentPlan) -> list:
    """Run every method at every sweep value and write ``results.csv``.

    All methods at one sweep value see the same test signals and the same
    noise draws.  A failing method is recorded with ``status`` set to the
    error message and the sweep continues.
    """
    out = Path(plan.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for i, value in enumerate(plan.sweep_values):
        scenario = plan.scenario_at(value)
        data = prepare_data(scenario, plan.dataset_sizes())
        test_hash = data.datasets["test"].fingerprint()
        save_dataset(out / f"test_{i:02d}.ssup", data.datasets["test"])
        for method in plan.methods_for(scenario):
            logger.info("sweep %s=%s method %s", plan.sweep_axis, value, method)
            try:
                if method in ("proposed", "dl_fixed_matrix"):
                    stats = _run_network(plan, data, method == "dl_fixed_matrix",
                                         f"{method}_{i:02d}", out)
                else:
                    stats = _run_baseline(plan, data, method)
                rows.append(_row(plan, scenario, method, value, test_hash, **stats))
            except Exception as exc:  # recorded per row; the sweep goes on
                logger.exception("method %s failed at %s=%s", method, plan.sweep_axis, value)
                rows.append(_row(plan, scenario, method, value, test_hash,
                                 status=f"error: {type(exc).__name__}: {exc}"))
        write_results(out / "results.csv", rows)
    write_results(out / "results.csv", rows)
    return rows


def write_results(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=ResultRow.columns())
        w.writeheader()
        for r in rows:
            d = asdict(r)
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in d.items()})


def read_results(path, drop_timing: bool = False) -> list:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if drop_timing:
        for r in rows:
            for c in TIMING_COLUMNS:
                r.pop(c, None)
    return rows


# ---------------------------------------------------------------------------
# plan files (INI): sections [scenario], [train], [plan]


def _coerce(value: str, kind):
    if kind is bool:
        return value.strip().lower() in ("1", "true", "yes", "on")
    if kind is int:
        return int(value)
    if kind is float:
        return float(value)
    return value.strip()


_SCENARIO_TYPES = {"N": int, "L": int, "case": str, "p": float, "ratio_p1_p2": float,
                   "p_u": float, "group_count": int, "sigma2": float, "seed": int}
_TRAIN_TYPES = {"Q": int, "lr": float, "batch_size": int, "max_epochs": int, "patience": int,
                "loss_change_tol": float, "freeze_matrix": bool, "seed": int}


def load_plan(path, **overrides) -> ExperimentPlan:
    """Read an INI plan file; keyword overrides replace ``[plan]`` entries."""
    cp = configparser.ConfigParser()
    cp.optionxform = str
    if not cp.read(path):
        raise ConfigError(f"cannot read plan file {path}")
    raw = dict(cp["scenario"]) if cp.has_section("scenario") else {}
    unknown = set(raw) - set(_SCENARIO_TYPES)
    if unknown:
        raise ConfigError(f"unknown scenario keys {sorted(unknown)}")
    scen = {k: _coerce(v, _SCENARIO_TYPES[k]) for k, v in raw.items()}
    profile = cp.get("plan", "profile", fallback="desk")
    base_train = desk_train_config() if profile == "desk" else paper_train_config()
    tr = {}
    if cp.has_section("train"):
        for k, v in cp["train"].items():
            if k not in _TRAIN_TYPES:
                raise ConfigError(f"unknown train key {k!r}")
            tr[k] = None if k == "Q" and v.strip().lower() in ("", "none", "auto") else _coerce(v, _TRAIN_TYPES[k])
    p = dict(cp["plan"]) if cp.has_section("plan") else {}
    p.update({k: v for k, v in overrides.items() if v is not None})

    def _list(v, conv):
        if isinstance(v, (list, tuple)):
            return tuple(conv(x) for x in v)
        return tuple(conv(x) for x in str(v).replace(",", " ").split())

    sizes = None
    if any(k in p for k in ("train_size", "validation_size", "test_size")):
        d = DESK_SIZES if profile == "desk" else PAPER_SIZES[Case.parse(scen.get("case", 1))]
        sizes = {r: int(p.get(f"{r}_size", d[r])) for r in ("train", "validation", "test")}
    return ExperimentPlan(
        scenario=ScenarioConfig(**scen),
        train=replace(base_train, **tr),
        methods=_list(p["methods"], str) if p.get("methods") else None,
        sweep_axis=p.get("sweep_axis", "L_over_N"),
        sweep_values=_list(p.get("sweep_values", "0.3"), float),
        output_dir=str(p.get("output_dir", "results")),
        profile=profile,
        sizes=sizes,
        n_calibration=int(p.get("n_calibration", 2000)),
        timing_samples=int(p.get("timing_samples", 100)),
    )


def save_plan(plan: ExperimentPlan, path) -> None:
    cp = configparser.ConfigParser()
    cp.optionxform = str
    s = asdict(plan.scenario)
    s["case"] = plan.scenario.case.name
    cp["scenario"] = {k: str(v) for k, v in s.items()}
    cp["train"] = {k: ("auto" if v is None else str(v)) for k, v in asdict(plan.train).items()}
    p = {
        "profile": plan.profile,
        "sweep_axis": plan.sweep_axis,
        "sweep_values": ", ".join(repr(v) for v in plan.sweep_values),
        "output_dir": plan.output_dir,
        "n_calibration": str(plan.n_calibration),
        "timing_samples": str(plan.timing_samples),
    }
    if plan.methods is not None:
        p["methods"] = ", ".join(plan.methods)
    if plan.sizes is not None:
        p.update({f"{k}_size": str(v) for k, v in plan.sizes.items()})
    cp["plan"] = p
    with open(path, "w") as fh:
        cp.write(fh)
