"""Configuration-driven experiment runner: fit one or more regressors on a
benchmark model, certify each on a shared certification sample, and emit
report rows with the main and appendix columns."""

from __future__ import annotations

import csv
import io
import json
import math
import time
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from cecert import regress_linear, regress_nn
from cecert.estimators import EstimateReport, certify
from cecert.examples import describe_examples, get_example, EXAMPLE_IDS
from cecert.model import DistortionSpec, StructuralModel, eval_feature, sample_pairs
from cecert.reference_tables import REFERENCE_ROWS, TABLE_SCALES
from cecert.regress_linear import FeatureSpec
from cecert.regress_nn import NetworkSpec, TrainSchedule, DEFAULT_LR_STAGES
from cecert.sampling import RngStream, norm_quantile

# Stream id layout: certification streams are shared across regressors within a
# run; each regressor gets its own disjoint block of training streams.
_CERT_X, _CERT_V, _CERT_VTILDE = 1_000_000, 1_000_001, 1_000_002
_TRAIN_BLOCK = 10


class ConfigError(ValueError):
    """Raised for invalid experiment configurations."""


@dataclass(frozen=True)
class RegressorConfig:
    kind: str  # linear | poly2 | nn
    include_additional: bool = False
    activation: str = "tanh"          # nn only
    widths: tuple[int, ...] = (32, 32, 32)
    steps: int = 20_000
    minibatch: int = 2**10
    solver: str = "auto"              # linear/poly2 only
    cutoff: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("linear", "poly2", "nn"):
            raise ConfigError(f"unknown regressor kind {self.kind!r}")

    @property
    def label(self) -> str:
        if self.kind == "linear":
            base = "lin. regr."
        elif self.kind == "poly2":
            base = "poly. regr."
        else:
            name = {"tanh": "tanh", "relu": "ReLU", "lse": "LSE"}[self.activation]
            base = f"NN {name}"
        return base + (", add. feature" if self.include_additional else "")


@dataclass(frozen=True)
class ExperimentConfig:
    example_id: str
    regressors: tuple[RegressorConfig, ...]
    m: int = 100_000
    n: int = 1_000_000
    batch_size: int = 100_000
    ci_level: float = 0.95
    seed: int = 0
    market_d: int = 10
    distortion: DistortionSpec = field(default_factory=DistortionSpec.none)
    output_path: Optional[str] = None
    fmt: str = "pretty"  # csv | json | pretty

    def __post_init__(self):
        if self.example_id not in EXAMPLE_IDS:
            raise ConfigError(f"unknown example {self.example_id!r}")
        if not self.regressors:
            raise ConfigError("regressor list must not be empty")
        if self.m < 2 or self.n < 2:
            raise ConfigError("M and N must both be at least 2")
        if not (2 <= self.batch_size <= self.n):
            raise ConfigError("need N >= batch_size >= 2")
        if self.fmt not in ("csv", "json", "pretty"):
            raise ConfigError(f"unknown output format {self.fmt!r}")


@dataclass(frozen=True)
class ReportRow:
    label: str
    ci_u_lo: float
    ci_u_hi: float
    ci_d_lo: float
    ci_d_hi: float
    rel_err: float
    rel_err_upper: float
    fit_seconds: float
    u_n: float
    stderr_u: float
    d_n: float
    stderr_d: float
    f_n: float
    stderr_f: float
    c_n: float
    stderr_c: float
    seed: int
    m: int
    n: int
    distortion: str
    error: str = ""


COLUMNS = [
    "label", "ci_u_lo", "ci_u_hi", "ci_d_lo", "ci_d_hi", "rel_err",
    "rel_err_upper", "fit_seconds", "u_n", "stderr_u", "d_n", "stderr_d",
    "f_n", "stderr_f", "c_n", "stderr_c", "seed", "m", "n", "distortion",
    "error",
]


class OracleRegressor:
    """Wraps a model's known conditional-mean function as a candidate."""

    label = "oracle"

    def __init__(self, model: StructuralModel):
        if model.oracle_fbar is None:
            raise ConfigError(f"model {model.name!r} has no known conditional mean")
        self._fbar = model.oracle_fbar

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.asarray(self._fbar(X), dtype=np.float64)


class LinearRegressor:
    """Fitted linear/polynomial candidate bound to its model's extra feature."""

    def __init__(self, fitted: regress_linear.LinearModelFit, model: StructuralModel, label: str):
        self.fitted = fitted
        self.model = model
        self.label = label

    def predict(self, X: np.ndarray) -> np.ndarray:
        a = eval_feature(self.model, X) if self.fitted.spec.include_additional else None
        return regress_linear.predict(self.fitted, X, a)


class NetworkRegressor:
    """Trained network candidate, optionally fed the extra feature column."""

    def __init__(self, net: regress_nn.TrainedNetwork, model: StructuralModel,
                 include_additional: bool, label: str):
        self.net = net
        self.model = model
        self.include_additional = include_additional
        self.label = label

    def _inputs(self, X: np.ndarray) -> np.ndarray:
        if not self.include_additional:
            return X
        return np.column_stack([X, eval_feature(self.model, X)])

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.net.predict(self._inputs(X))


def desk_schedule(total_steps: int, minibatch: int) -> TrainSchedule:
    """The staged learning-rate recipe with stage thresholds scaled from the
    full 250,000-step schedule down to the requested step count."""
    scale = total_steps / 250_000
    stages = [(0, DEFAULT_LR_STAGES[0][1])]
    for threshold, rate in DEFAULT_LR_STAGES[1:]:
        scaled = int(round(threshold * scale))
        if scaled <= stages[-1][0] or scaled >= total_steps:
            continue
        stages.append((scaled, rate))
    return TrainSchedule(total_steps=total_steps, minibatch_size=minibatch,
                         lr_stages=tuple(stages))


def certification_streams(seed: int) -> tuple[RngStream, RngStream, RngStream]:
    return (RngStream(seed, _CERT_X), RngStream(seed, _CERT_V), RngStream(seed, _CERT_VTILDE))


def training_streams(seed: int, regressor_index: int) -> tuple[RngStream, RngStream, RngStream]:
    base = _TRAIN_BLOCK * (regressor_index + 1)
    return (RngStream(seed, base), RngStream(seed, base + 1), RngStream(seed, base + 2))


def fit_regressor(
    rc: RegressorConfig,
    model: StructuralModel,
    config: ExperimentConfig,
    regressor_index: int,
):
    """Fit one candidate on M fresh training samples under the run's measure."""
    x_stream, v_stream, init_stream = training_streams(config.seed, regressor_index)
    if rc.kind in ("linear", "poly2"):
        X, y = sample_pairs(model, config.distortion, config.m, (x_stream, v_stream))
        spec = FeatureSpec(degree=1 if rc.kind == "linear" else 2, d=model.d,
                           include_additional=rc.include_additional)
        a = eval_feature(model, X) if rc.include_additional else None
        fitted = regress_linear.fit(spec, X, y, a_values=a, cutoff=rc.cutoff, solver=rc.solver)
        return LinearRegressor(fitted, model, rc.label), fitted.fit_seconds
    input_dim = model.d + (1 if rc.include_additional else 0)
    net_spec = NetworkSpec(input_dim=input_dim, depth=len(rc.widths) + 1,
                           hidden_widths=tuple(rc.widths), activation=rc.activation)
    schedule = desk_schedule(rc.steps, rc.minibatch)
    input_fn = None
    if rc.include_additional:
        def input_fn(X, _model=model):
            return np.column_stack([X, eval_feature(_model, X)])
    net = regress_nn.train(net_spec, schedule, model, config.distortion,
                           (init_stream, x_stream, v_stream), input_fn=input_fn)
    return NetworkRegressor(net, model, rc.include_additional, rc.label), net.fit_seconds


def describe_distortion(distortion: DistortionSpec) -> str:
    if distortion.kind == "none":
        return "none"
    if distortion.kind == "gaussian_shift_scale":
        mean = np.asarray(distortion.mean).ravel()
        stdev = np.asarray(distortion.stdev).ravel()
        fmt = lambda a: a[0] if a.size == 1 else list(a)
        return f"gaussian_shift_scale(mean={fmt(mean)!r}, stdev={fmt(stdev)!r})"
    if distortion.kind == "tail_tilt":
        return f"tail_tilt(level={distortion.level!r})"
    return (f"point_concentration(center={list(distortion.center)!r}, "
            f"radius_scale={distortion.radius_scale!r})")


def make_row(label: str, report: EstimateReport, fit_seconds: float,
             config: ExperimentConfig) -> ReportRow:
    return ReportRow(
        label=label,
        ci_u_lo=report.ci_u[0], ci_u_hi=report.ci_u[1],
        ci_d_lo=report.ci_d[0], ci_d_hi=report.ci_d[1],
        rel_err=math.nan if report.rel_err is None else report.rel_err,
        rel_err_upper=math.nan if report.rel_err_upper is None else report.rel_err_upper,
        fit_seconds=fit_seconds,
        u_n=report.u_n, stderr_u=report.stderr_u,
        d_n=report.d_n, stderr_d=report.stderr_d,
        f_n=report.f_n, stderr_f=report.stderr_f,
        c_n=report.c_n, stderr_c=report.stderr_c,
        seed=config.seed, m=config.m, n=report.n_total,
        distortion=describe_distortion(config.distortion),
    )


def _error_row(label: str, config: ExperimentConfig, exc: Exception) -> ReportRow:
    nan = math.nan
    return ReportRow(label=label, ci_u_lo=nan, ci_u_hi=nan, ci_d_lo=nan, ci_d_hi=nan,
                     rel_err=nan, rel_err_upper=nan, fit_seconds=nan, u_n=nan,
                     stderr_u=nan, d_n=nan, stderr_d=nan, f_n=nan, stderr_f=nan,
                     c_n=nan, stderr_c=nan, seed=config.seed, m=config.m, n=config.n,
                     distortion=describe_distortion(config.distortion),
                     error=f"{type(exc).__name__}: {exc}")


def validate_row(row: ReportRow, ci_level: float) -> None:
    """Check that the appendix columns reproduce the main columns."""
    if row.error:
        return
    q = norm_quantile(0.5 + ci_level / 2.0)
    for lo, hi, point, se in ((row.ci_u_lo, row.ci_u_hi, row.u_n, row.stderr_u),
                              (row.ci_d_lo, row.ci_d_hi, row.d_n, row.stderr_d)):
        if abs(lo - (point - q * se)) > 1e-12 * max(1.0, abs(point)):
            raise AssertionError(f"inconsistent CI endpoint in row {row.label!r}")
        if abs(hi - (point + q * se)) > 1e-12 * max(1.0, abs(point)):
            raise AssertionError(f"inconsistent CI endpoint in row {row.label!r}")
    if not math.isnan(row.rel_err):
        if abs(row.rel_err**2 * row.c_n - abs(row.f_n)) > 1e-10 * max(1.0, abs(row.f_n)):
            raise AssertionError(f"inconsistent relative error in row {row.label!r}")


def run(config: ExperimentConfig) -> list[ReportRow]:
    """Fit every configured regressor on its own fresh training streams, then
    certify all of them on the shared certification sample.

    Certification streams are recreated per regressor from the same seed and
    stream ids, so every row sees the identical triples and the D column is
    constant down the run. Fit or certification failures are recorded on the
    affected row without aborting the remaining rows.
    """
    model = get_example(config.example_id, market_d=config.market_d)
    rows: list[ReportRow] = []
    for idx, rc in enumerate(config.regressors):
        try:
            regressor, fit_seconds = fit_regressor(rc, model, config, idx)
            report = certify(model, config.distortion, regressor, config.n,
                             config.batch_size, certification_streams(config.seed),
                             config.ci_level)
            row = make_row(rc.label, report, fit_seconds, config)
        except Exception as exc:  # recorded per row
            row = _error_row(rc.label, config, exc)
        validate_row(row, config.ci_level)
        rows.append(row)
    return rows


def in_the_money_fraction(config: ExperimentConfig, n: int = 100_000) -> Optional[float]:
    """Empirical fraction of simulated payoffs ending in the money, for the
    market examples (used to re-tune the strike)."""
    if config.example_id not in ("maxcall", "binary"):
        return None
    model = get_example(config.example_id, market_d=config.market_d)
    streams = (RngStream(config.seed, 2_000_000), RngStream(config.seed, 2_000_001))
    _, y = sample_pairs(model, config.distortion, n, streams)
    threshold = 0.0 if config.example_id == "maxcall" else 5.0
    return float(np.mean(y > threshold))


# ---------------------------------------------------------------------------
# Serialization

def _sig17(value) -> str:
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def rows_to_csv(rows: list[ReportRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS)
    for row in rows:
        writer.writerow([_sig17(getattr(row, c)) for c in COLUMNS])
    return buf.getvalue()


def rows_to_json(rows: list[ReportRow]) -> str:
    payload = [{c: getattr(row, c) for c in COLUMNS} for row in rows]
    return json.dumps(payload, indent=2, allow_nan=True) + "\n"


def rows_to_pretty(rows: list[ReportRow], ci_level: float = 0.95) -> str:
    header = (f"{'regressor':<28} {'CI U':>22} {'CI D':>22} "
              f"{'rel err':>9} {'rel err CB':>11} {'fit [s]':>9}")
    lines = [header, "-" * len(header)]
    for row in rows:
        if row.error:
            lines.append(f"{row.label:<28} ERROR: {row.error}")
            continue
        ci_u = f"[{row.ci_u_lo:.5f}, {row.ci_u_hi:.5f}]"
        ci_d = f"[{row.ci_d_lo:.5f}, {row.ci_d_hi:.5f}]"
        lines.append(f"{row.label:<28} {ci_u:>22} {ci_d:>22} "
                     f"{100 * row.rel_err:>8.2f}% {100 * row.rel_err_upper:>10.2f}% "
                     f"{row.fit_seconds:>9.1f}")
    if rows:
        lines.append(f"(seed={rows[0].seed}, M={rows[0].m}, N={rows[0].n}, "
                     f"distortion={rows[0].distortion}, {100 * ci_level:g}% CIs)")
    return "\n".join(lines) + "\n"


def write_outputs(rows: list[ReportRow], output_path: str) -> tuple[Path, Path]:
    base = Path(output_path)
    csv_path = base.with_name(base.name + ".csv")
    json_path = base.with_name(base.name + ".json")
    csv_path.write_text(rows_to_csv(rows))
    json_path.write_text(rows_to_json(rows))
    return csv_path, json_path


# ---------------------------------------------------------------------------
# Config file parsing (TOML)

def _distortion_from_dict(data: dict) -> DistortionSpec:
    kind = data.get("kind", "none")
    try:
        if kind == "none":
            return DistortionSpec.none()
        if kind == "gaussian_shift_scale":
            return DistortionSpec.gaussian_shift_scale(data["mean"], data["stdev"])
        if kind == "tail_tilt":
            return DistortionSpec.tail_tilt(data["level"])
        if kind == "point_concentration":
            return DistortionSpec.point_concentration(data["center"], data["radius_scale"])
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"invalid [distortion] section: {exc}") from exc
    raise ConfigError(f"unknown distortion kind {kind!r}")


def _regressor_from_dict(index: int, data: dict) -> RegressorConfig:
    known = {"type", "include_additional", "activation", "widths", "steps",
             "minibatch", "solver", "cutoff"}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"regressor #{index}: unknown fields {sorted(unknown)}")
    if "type" not in data:
        raise ConfigError(f"regressor #{index}: missing 'type'")
    kwargs = {}
    if "widths" in data:
        kwargs["widths"] = tuple(int(w) for w in data["widths"])
    for key in ("include_additional", "activation", "steps", "minibatch", "solver", "cutoff"):
        if key in data:
            kwargs[key] = data[key]
    try:
        return RegressorConfig(kind=data["type"], **kwargs)
    except (ConfigError, ValueError, TypeError) as exc:
        raise ConfigError(f"regressor #{index}: {exc}") from exc


def load_config(path) -> ExperimentConfig:
    """Parse an experiment description from a TOML file."""
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config parse error in {path}: {exc}") from exc
    if "example" not in data:
        raise ConfigError("config must set 'example'")
    regressors = tuple(
        _regressor_from_dict(i, rd) for i, rd in enumerate(data.get("regressor", [])))
    kwargs = dict(
        example_id=data["example"],
        regressors=regressors,
        distortion=_distortion_from_dict(data.get("distortion", {})),
    )
    for cfg_key, field_name in (("m", "m"), ("n", "n"), ("batch_size", "batch_size"),
                                ("ci_level", "ci_level"), ("seed", "seed"),
                                ("market_d", "market_d"), ("output_path", "output_path"),
                                ("format", "fmt")):
        if cfg_key in data:
            kwargs[field_name] = data[cfg_key]
    try:
        return ExperimentConfig(**kwargs)
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc


# ---------------------------------------------------------------------------
# Benchmark table reproduction at desk scale

def _table_regressors(table_id: int) -> tuple[RegressorConfig, ...]:
    if table_id == 1:
        return (RegressorConfig("linear"), RegressorConfig("poly2"),
                RegressorConfig("nn", activation="tanh"),
                RegressorConfig("nn", activation="relu"),
                RegressorConfig("nn", activation="lse"))
    rows = [RegressorConfig("linear"), RegressorConfig("linear", include_additional=True),
            RegressorConfig("poly2"), RegressorConfig("poly2", include_additional=True)]
    for act in ("tanh", "relu", "lse"):
        rows.append(RegressorConfig("nn", activation=act))
        rows.append(RegressorConfig("nn", activation=act, include_additional=True))
    return tuple(rows)


def table_config(
    table_id: int,
    m: int = 100_000,
    n: int = 1_000_000,
    seed: int = 0,
    market_d: int = 10,
    nn_steps: Optional[int] = None,
    batch_size: Optional[int] = None,
    output_path: Optional[str] = None,
) -> ExperimentConfig:
    """Desk-scale configuration mirroring one of the six benchmark tables."""
    if table_id not in range(1, 7):
        raise ConfigError(f"table id must be 1..6, got {table_id}")
    example = {1: "poly4", 2: "nonpoly5", 3: "nonpoly5",
               4: "maxcall", 5: "binary", 6: "binary"}[table_id]
    if table_id == 3:
        distortion = DistortionSpec.gaussian_shift_scale(
            np.ones(5), np.full(5, np.sqrt(0.1)))
    elif table_id == 6:
        distortion = DistortionSpec.tail_tilt(0.99)
    else:
        distortion = DistortionSpec.none()
    regressors = _table_regressors(table_id)
    if nn_steps is not None:
        regressors = tuple(
            replace(rc, steps=nn_steps) if rc.kind == "nn" else rc for rc in regressors)
    return ExperimentConfig(
        example_id=example, regressors=regressors, m=m, n=n,
        batch_size=batch_size if batch_size is not None else min(100_000, n),
        seed=seed, market_d=market_d, distortion=distortion, output_path=output_path)


def reproduce_table(table_id: int, **overrides) -> tuple[ExperimentConfig, list[ReportRow]]:
    config = table_config(table_id, **overrides)
    return config, run(config)


def format_table_comparison(table_id: int, rows: list[ReportRow]) -> str:
    """Desk-scale results next to the published full-scale reference values."""
    reference = REFERENCE_ROWS[table_id]
    scale = TABLE_SCALES[table_id]
    lines = [f"table {table_id}: desk-scale rerun vs full-scale reference "
             f"(reference: M={scale['m']:.0e}, N={scale['n']:.0e}"
             + (f", d={scale['d']}" if scale['d'] else "") + ")"]
    header = (f"{'regressor':<28} {'CI U (desk)':>22} {'CI U (ref)':>22} "
              f"{'rel err (desk)':>15} {'rel err (ref)':>14}")
    lines += [header, "-" * len(header)]
    for row, (label, ci_u, _ci_d, rel_pct, _cb, _t) in zip(rows, reference):
        if row.error:
            lines.append(f"{row.label:<28} ERROR: {row.error}")
            continue
        desk_ci = f"[{row.ci_u_lo:.5f}, {row.ci_u_hi:.5f}]"
        ref_ci = f"[{ci_u[0]:.5f}, {ci_u[1]:.5f}]"
        lines.append(f"{row.label:<28} {desk_ci:>22} {ref_ci:>22} "
                     f"{100 * row.rel_err:>14.2f}% {rel_pct:>13.2f}%")
    return "\n".join(lines) + "\n"


def list_examples(market_d: int = 10) -> list[tuple[str, str]]:
    return describe_examples(market_d=market_d)
