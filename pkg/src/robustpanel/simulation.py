"""Monte Carlo harness: panel generation, outlier contamination schemes,
and replication studies of estimation and prediction error.

The data generating process is

    y_it = x_it' beta + alpha_i + eps_it,
    alpha_i = sum_t x_it' gamma / sqrt(T) + eta_i,   eta_i ~ U(0, 12),

with odd-numbered regressors drawn chi-square(2) - 2 and even-numbered
standard normal, so the design is deliberately asymmetric.  Four error
laws are supported plus a "none" hook for exact-recovery tests.

Contamination kinds:
  random_vertical        m uniformly chosen cells get y ~ U(20, 80)
  random_leverage        same cells also get every regressor ~ N(8, sd 2)
  concentrated_vertical  blocks of ceil(T/2) periods in m / ceil(T/2)
                         units get y ~ U(79, 80)
  concentrated_leverage  those blocks also get regressors ~ N(8, sd 2)

Concentrated blocks cover half of each hit unit's periods (rounded up),
never the whole unit: within-group centering absorbs any value that is
constant inside a unit, so whole-unit blocks would vanish from the
centered data and leave nothing for the estimators to disagree about.

Per-replication randomness is derived as
SeedSequence(master_seed, spawn_key=(s,)), so replication s is the same
no matter how many replications surround it.
"""

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from .errors import BlockPolicyError, EstimationError
from .estimators import fit_esl, fit_mestimator, high_breakdown_init
from .panel import PanelData, predict, within_ls, within_transform

ERROR_DISTS = ("normal", "t5", "chisq4", "cauchy", "none")
CONTAMINATION_KINDS = (
    "random_vertical",
    "random_leverage",
    "concentrated_vertical",
    "concentrated_leverage",
)


@dataclass(frozen=True)
class DgpConfig:
    n_units: int
    n_periods: int
    beta: tuple = (2.4, -1.2)
    gamma: tuple = (2.0, 4.0)
    error_dist: str = "normal"
    seed: int = 0

    def __post_init__(self):
        if self.n_units < 2 or self.n_periods < 2:
            raise ValueError("need at least 2 units and 2 periods")
        if len(self.beta) != len(self.gamma):
            raise ValueError(
                "beta and gamma must have equal length, got %d and %d"
                % (len(self.beta), len(self.gamma))
            )
        if self.error_dist not in ERROR_DISTS:
            raise ValueError(
                "error_dist must be one of %s" % (ERROR_DISTS,)
            )


@dataclass(frozen=True)
class ContaminationScheme:
    kind: str
    m: int
    seed: int = 0

    def __post_init__(self):
        if self.kind not in CONTAMINATION_KINDS:
            raise ValueError("kind must be one of %s" % (CONTAMINATION_KINDS,))
        if self.m < 0:
            raise ValueError("m must be nonnegative")


def _draw_errors(rng, dist, shape):
    if dist == "normal":
        return rng.standard_normal(shape)
    if dist == "t5":
        return rng.standard_t(5, shape)
    if dist == "chisq4":
        return rng.chisquare(4, shape)  # used as generated, mean 4
    if dist == "cauchy":
        return rng.standard_cauchy(shape)
    return np.zeros(shape)


def _draw_x(rng, n, t, k):
    x = np.empty((n, t, k))
    for j in range(k):
        if j % 2 == 0:  # regressors 1, 3, ... in 1-based counting
            x[:, :, j] = rng.chisquare(2, (n, t)) - 2.0
        else:
            x[:, :, j] = rng.standard_normal((n, t))
    return x


def gen_panel(config):
    """Generate one panel.  Draw order is x, then eta, then errors."""
    rng = np.random.default_rng(config.seed)
    n, t = config.n_units, config.n_periods
    beta = np.asarray(config.beta, dtype=float)
    gamma = np.asarray(config.gamma, dtype=float)
    x = _draw_x(rng, n, t, beta.size)
    eta = rng.uniform(0.0, 12.0, n)
    eps = _draw_errors(rng, config.error_dist, (n, t))
    alpha = (x @ gamma).sum(axis=1) / math.sqrt(t) + eta
    y = x @ beta + alpha[:, None] + eps
    return PanelData(y, x)


def gen_holdout_panel(config, n_test, seed, test_effects="cell"):
    """Clean evaluation panel of n_test units from the same regressor and
    error laws.

    test_effects "cell" draws the heterogeneity term freshly per cell as
    alpha_it = z_it' gamma + eta_it, where z_it is an independent draw
    from the regressor laws: held-out units are strangers whose effects
    carry the same variance as the training construction but are pure,
    unexplainable noise to the fitted model.  (Building alpha from the
    test panel's own regressors would instead reward any fit whose
    coefficients drift toward beta + gamma, inverting the comparison
    between clean and contaminated fits.)  "unit" reuses the training
    construction (per-unit alpha_i), which own-means prediction cancels
    almost entirely.
    """
    if test_effects not in ("cell", "unit"):
        raise ValueError("test_effects must be 'cell' or 'unit'")
    cfg = dataclasses.replace(config, n_units=n_test, seed=seed)
    if test_effects == "unit":
        return gen_panel(cfg)
    rng = np.random.default_rng(seed)
    t = cfg.n_periods
    beta = np.asarray(cfg.beta, dtype=float)
    gamma = np.asarray(cfg.gamma, dtype=float)
    x = _draw_x(rng, n_test, t, beta.size)
    z = _draw_x(rng, n_test, t, gamma.size)
    eta = rng.uniform(0.0, 12.0, (n_test, t))
    eps = _draw_errors(rng, cfg.error_dist, (n_test, t))
    y = x @ beta + (z @ gamma + eta) + eps
    return PanelData(y, x)


def block_length(t):
    """Periods per concentrated block: half the panel length, rounded up."""
    return (t + 1) // 2


def contaminate(panel, scheme):
    """Apply one contamination scheme; untouched cells stay bitwise equal."""
    if scheme.m == 0:
        return panel
    n, t = panel.n_units, panel.n_periods
    k = panel.n_regressors
    nt = n * t
    if scheme.m > nt:
        raise ValueError("m = %d exceeds the %d panel cells" % (scheme.m, nt))
    rng = np.random.default_rng(scheme.seed)
    y = panel.y.copy()
    x = panel.x.copy()

    if scheme.kind in ("random_vertical", "random_leverage"):
        cells = rng.choice(nt, scheme.m, replace=False)
        y.ravel()[cells] = rng.uniform(20.0, 80.0, scheme.m)
        if scheme.kind == "random_leverage":
            x.reshape(nt, k)[cells] = rng.normal(8.0, 2.0, (scheme.m, k))
    else:
        b = block_length(t)
        if scheme.m % b != 0:
            lower = (scheme.m // b) * b
            upper = lower + b
            nearest = lower if (scheme.m - lower) <= (upper - scheme.m) and lower > 0 else upper
            raise BlockPolicyError(
                "m = %d does not split into blocks of %d periods; "
                "nearest valid m is %d" % (scheme.m, b, nearest)
            )
        n_blocks = scheme.m // b
        if n_blocks > n:
            raise ValueError(
                "m = %d needs %d contaminated units but the panel has %d"
                % (scheme.m, n_blocks, n)
            )
        units = rng.choice(n, n_blocks, replace=False)
        y[units, :b] = rng.uniform(79.0, 80.0, (n_blocks, b))
        if scheme.kind == "concentrated_leverage":
            x[units, :b, :] = rng.normal(8.0, 2.0, (n_blocks, b, k))
    return PanelData(y, x, unit_labels=panel.unit_labels, period_labels=panel.period_labels)


@dataclass(frozen=True)
class SimulationReport:
    """Replication study results for one ( dgp, scheme, estimators ) cell."""

    estimator_names: tuple
    s_requested: int
    se_samples: dict  # estimator -> array of ||beta_hat - beta||^2, successes only
    mse: dict  # estimator -> mean of se_samples
    n_failed: int
    failures: tuple  # (replication index, message) pairs
    degraded: bool
    dgp: DgpConfig
    scheme: object = None
    rmse_samples: dict = None
    rmse: dict = None


def _replication_seeds(master_seed, s, n_streams):
    state = np.random.SeedSequence(master_seed, spawn_key=(s,)).generate_state(n_streams)
    return [int(v) for v in state]


def _fit_one(name, cp, fit_seed):
    if name == "ls":
        return within_ls(cp)
    if name in ("huber", "tukey"):
        # The studies run under heavy, sometimes concentrated contamination,
        # where the printed LS starting point leaves the redescending fits in
        # the contaminated local minimum (the outliers look like the fit and
        # the clean data like outliers).  The harness therefore supplies the
        # high-breakdown start through the estimator's beta_init override.
        beta0 = high_breakdown_init(cp, seed=fit_seed)
        return fit_mestimator(cp, name, beta_init=beta0)
    if name == "esl":
        return fit_esl(cp, seed=fit_seed)
    raise ValueError("unknown estimator %r" % (name,))


def _study(dgp, scheme, estimators, s_total, master_seed, n_test=None,
           test_effects="cell"):
    if not estimators:
        raise ValueError("estimators must be nonempty")
    names = tuple(estimators)
    beta_true = np.asarray(dgp.beta, dtype=float)
    se = {name: [] for name in names}
    rmse = {name: [] for name in names} if n_test else None
    failures = []
    for s in range(s_total):
        seeds = _replication_seeds(master_seed, s, 4)
        panel = gen_panel(dataclasses.replace(dgp, seed=seeds[0]))
        if scheme is not None:
            panel = contaminate(panel, dataclasses.replace(scheme, seed=seeds[1]))
        cp = within_transform(panel)
        if n_test:
            test_panel = gen_holdout_panel(dgp, n_test, seeds[3], test_effects)
        try:
            fits = {name: _fit_one(name, cp, seeds[2]) for name in names}
        except EstimationError as err:
            failures.append((s, "%s: %s" % (type(err).__name__, err)))
            continue
        for name in names:
            se[name].append(float(np.sum((fits[name].beta - beta_true) ** 2)))
            if n_test:
                yhat = predict(test_panel, fits[name].beta)
                rmse[name].append(
                    float(np.sqrt(np.sum((test_panel.y - yhat) ** 2) / test_panel.y.size))
                )
    n_failed = len(failures)
    report = SimulationReport(
        estimator_names=names,
        s_requested=s_total,
        se_samples={name: np.asarray(v) for name, v in se.items()},
        mse={name: float(np.mean(v)) if v else float("nan") for name, v in se.items()},
        n_failed=n_failed,
        failures=tuple(failures),
        degraded=n_failed > 0.05 * s_total,
        dgp=dgp,
        scheme=scheme,
        rmse_samples={n_: np.asarray(v) for n_, v in rmse.items()} if n_test else None,
        rmse={n_: float(np.mean(v)) if v else float("nan") for n_, v in rmse.items()}
        if n_test
        else None,
    )
    return report


def run_mc(dgp, scheme, estimators, s_total, master_seed):
    """Estimation-error study: S replications of generate, contaminate,
    fit; records the squared coefficient error of every estimator."""
    return _study(dgp, scheme, estimators, s_total, master_seed)


def rmse_prediction_study(dgp, scheme, estimators, s_total, n_test, master_seed,
                          test_effects="cell"):
    """Prediction study: each replication also generates a clean test
    panel of n_test units and records root mean squared prediction error
    under own-means intercept recovery."""
    if n_test < 1:
        raise ValueError("n_test must be at least 1")
    return _study(dgp, scheme, estimators, s_total, master_seed,
                  n_test=n_test, test_effects=test_effects)


def error_dist_study(pairs, estimators, s_total, master_seed):
    """Clean-data squared-error samples for every error law and panel size.

    Returns {(error_dist, (n, t)): SimulationReport} with the sub-study
    master seed derived deterministically from the law and pair indices.
    """
    if not pairs:
        raise ValueError("pairs must be nonempty")
    dists = ("normal", "t5", "chisq4", "cauchy")
    out = {}
    for di, dist in enumerate(dists):
        for pi, (n, t) in enumerate(pairs):
            sub_seed = int(
                np.random.SeedSequence(master_seed, spawn_key=(di, pi)).generate_state(1)[0]
            )
            dgp = DgpConfig(n_units=n, n_periods=t, error_dist=dist)
            out[(dist, (n, t))] = run_mc(dgp, None, estimators, s_total, sub_seed)
    return out
