"""CSV panel ingestion, experiment configuration, and serialization.

The on-disk panel schema is a flat CSV with header ``unit,time,y,x1..xK``
(K detected from the header).  Units and periods keep their order of
first appearance; nothing is sorted behind the caller's back.  Floats
are written with ``repr`` so a write/read round trip is exact.

Experiment configurations are JSON documents mirroring the simulation
module's dataclasses; ``parse_config(serialize_config(cfg))`` returns an
equal config, and unknown keys fail loudly with the offending name.
"""

import csv
import dataclasses
import json
from dataclasses import dataclass

import numpy as np

from .errors import (
    ConfigError,
    DataError,
    DuplicateCell,
    MissingColumn,
    NonNumericCell,
    UnbalancedPanel,
)
from .panel import PanelData
from .simulation import CONTAMINATION_KINDS, ERROR_DISTS


def _detect_k(header):
    k = 0
    while "x%d" % (k + 1) in header:
        k += 1
    return k


def read_panel_csv(path):
    """Read a balanced panel from ``unit,time,y,x1..xK`` CSV."""
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as err:
        raise DataError("cannot read %s: %s" % (path, err)) from None
    if not rows:
        raise MissingColumn("%s is empty; expected header unit,time,y,x1..xK" % (path,))
    header = [name.strip() for name in rows[0]]
    for required in ("unit", "time", "y"):
        if required not in header:
            raise MissingColumn("missing required column %r" % (required,))
    k = _detect_k(header)
    if k == 0:
        raise MissingColumn("missing required column 'x1' (need at least one regressor)")
    cols = {name: header.index(name) for name in ("unit", "time", "y")}
    xcols = [header.index("x%d" % (j + 1)) for j in range(k)]

    units, periods = [], []  # first-appearance order
    seen = {}
    for row_no, row in enumerate(rows[1:], start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        unit = row[cols["unit"]].strip()
        time = row[cols["time"]].strip()
        if (unit, time) in seen:
            raise DuplicateCell(
                "duplicate row for unit %r, time %r (rows %d and %d)"
                % (unit, time, seen[(unit, time)][0], row_no)
            )
        values = []
        for name, idx in [("y", cols["y"])] + [("x%d" % (j + 1), xcols[j]) for j in range(k)]:
            cell = row[idx].strip()
            try:
                values.append(float(cell))
            except ValueError:
                raise NonNumericCell(
                    "row %d, column %s: %r is not numeric" % (row_no, name, cell)
                ) from None
        seen[(unit, time)] = (row_no, values)
        if unit not in units:
            units.append(unit)
        if time not in periods:
            periods.append(time)

    n, t = len(units), len(periods)
    y = np.empty((n, t))
    x = np.empty((n, t, k))
    for i, unit in enumerate(units):
        for s, time in enumerate(periods):
            if (unit, time) not in seen:
                raise UnbalancedPanel("missing row for unit %r, time %r" % (unit, time))
            _, values = seen[(unit, time)]
            y[i, s] = values[0]
            x[i, s] = values[1:]
    return PanelData(y, x, unit_labels=tuple(units), period_labels=tuple(periods))


def write_panel_csv(panel, path):
    """Write a panel in the same schema ``read_panel_csv`` accepts."""
    k = panel.x.shape[2]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["unit", "time", "y"] + ["x%d" % (j + 1) for j in range(k)])
        for i, unit in enumerate(panel.unit_labels):
            for s, time in enumerate(panel.period_labels):
                writer.writerow(
                    [unit, time, repr(float(panel.y[i, s]))]
                    + [repr(float(v)) for v in panel.x[i, s]]
                )


@dataclass(frozen=True)
class OutlierStudyConfig:
    """One Table-style grid: every contamination kind at every m level."""

    n_units: int = 120
    n_periods: int = 2
    kinds: tuple = CONTAMINATION_KINDS
    m_levels: tuple = (12, 24)
    n_test: int = 50

    def __post_init__(self):
        for kind in self.kinds:
            if kind not in CONTAMINATION_KINDS:
                raise ConfigError("unknown contamination kind %r" % (kind,))


@dataclass(frozen=True)
class ConsistencyStudyConfig:
    n_values: tuple = (50, 100, 150, 200, 250)
    t_fixed: int = 3
    t_values: tuple = (4, 6, 9, 12, 24)
    n_fixed: int = 50


@dataclass(frozen=True)
class ErrorDistStudyConfig:
    pairs: tuple = ((30, 20), (75, 8), (200, 3))


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything `simulate` needs: estimators, replication count, seeds,
    the data-generating parameters, and which studies to run."""

    estimators: tuple = ("ls", "huber", "tukey", "esl")
    s: int = 50
    master_seed: int = 0
    beta: tuple = (2.4, -1.2)
    gamma: tuple = (2.0, 4.0)
    error_dist: str = "normal"
    outlier_study: OutlierStudyConfig = None
    consistency_study: ConsistencyStudyConfig = None
    error_dist_study: ErrorDistStudyConfig = None

    def __post_init__(self):
        if self.s < 1:
            raise ConfigError("s must be a positive replication count")
        if self.error_dist not in ERROR_DISTS:
            raise ConfigError("unknown error_dist %r" % (self.error_dist,))
        if len(self.beta) != len(self.gamma):
            raise ConfigError("beta and gamma must have equal length")


_SECTION_TYPES = {
    "outlier_study": OutlierStudyConfig,
    "consistency_study": ConsistencyStudyConfig,
    "error_dist_study": ErrorDistStudyConfig,
}


def _build_section(name, cls, data):
    if data is None:
        return None
    if not isinstance(data, dict):
        raise ConfigError("%s must be an object, got %r" % (name, type(data).__name__))
    allowed = {f.name for f in dataclasses.fields(cls)}
    for key in data:
        if key not in allowed:
            raise ConfigError("unknown key %r in %s" % (key, name))
    kwargs = {}
    for key, value in data.items():
        if isinstance(value, list):
            value = tuple(tuple(v) if isinstance(v, list) else v for v in value)
        kwargs[key] = value
    return cls(**kwargs)


def parse_config(text):
    """Parse an ExperimentConfig from its JSON form."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError("config is not valid JSON: %s" % (err,)) from None
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    allowed = {f.name for f in dataclasses.fields(ExperimentConfig)}
    for key in data:
        if key not in allowed:
            raise ConfigError("unknown key %r in config" % (key,))
    kwargs = {}
    for key, value in data.items():
        if key in _SECTION_TYPES:
            kwargs[key] = _build_section(key, _SECTION_TYPES[key], value)
        elif isinstance(value, list):
            kwargs[key] = tuple(tuple(v) if isinstance(v, list) else v for v in value)
        else:
            kwargs[key] = value
    return ExperimentConfig(**kwargs)


def serialize_config(config):
    """JSON form of an ExperimentConfig; parse_config inverts this."""
    return json.dumps(dataclasses.asdict(config), indent=2, sort_keys=True) + "\n"


def fit_report_json(fit):
    """JSON document for one fitted model."""
    report = {
        "estimator": fit.estimator,
        "beta": [float(b) for b in fit.beta],
        "std_errors": None
        if fit.std_errors is None
        else [float(s) for s in fit.std_errors],
        "sigma_hat": float(fit.sigma_hat),
        "c_selected": None if fit.c_selected is None else float(fit.c_selected),
        "iterations": int(fit.iterations),
        "converged": bool(fit.converged),
    }
    return json.dumps(report, indent=2) + "\n"


def write_weights_csv(panel, fit, path):
    """Per-observation weights of a fit; LS is unweighted, so all ones."""
    n, t = panel.y.shape
    w = fit.weights if fit.weights is not None else np.ones((n, t))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["unit", "time", "weight"])
        for i, unit in enumerate(panel.unit_labels):
            for s, time in enumerate(panel.period_labels):
                writer.writerow([unit, time, repr(float(w[i, s]))])
