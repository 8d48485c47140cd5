"""Robust M-estimation of the within-transformed panel model.

The solvers here share one engine, iteratively reweighted least squares
with the scale held fixed, and differ in how they choose the tuning
constant and the starting point:

* ``fit_mestimator`` runs the four-step Huber/Tukey procedure: within
  LS, median-based residual scale, efficiency-factor grid search for c,
  then IRLS at the chosen c.
* ``fit_esl`` runs the exponential-squared procedure: high-breakdown
  initial fit, pseudo-outlier screening and det(V) minimization for c,
  IRLS update, iterated up to three times.

``sandwich_se`` provides asymptotic standard errors of the familiar
(E psi^2 / (E psi')^2) * sigma^2 * (X''X'')^{-1} form for any of them.
"""

import dataclasses
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateDesign,
    SingularWeightedDesign,
    UnstableCurvature,
)
from .losses import LossSpec, psi, psi_prime, weight
from .panel import FitResult, _as_centered, within_ls
from .scale import initial_scale, mad_scale
from .tuning import (
    HUBER_GRID,
    TUKEY_GRID,
    default_esl_grid,
    esl_select_c,
    select_c_grid,
)

TUKEY_REFERENCE_C = 4.685  # 95% normal efficiency, used for refinement passes


@dataclass(frozen=True)
class IrlsConfig:
    tol: float = 1e-8
    max_iter: int = 100
    rescale_each_iter: bool = False

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")


def _weighted_solve(xdd, ydd, w):
    """Solve the weighted normal equations via sqrt-weight row scaling."""
    root = np.sqrt(w)
    sol, _, rank, _ = np.linalg.lstsq(xdd * root[:, None], ydd * root, rcond=None)
    if rank < xdd.shape[1]:
        raise SingularWeightedDesign(
            "weighted cross-product is rank %d < %d; the current weights "
            "reject too much of the sample" % (rank, xdd.shape[1])
        )
    return sol


def irls_fit(panel, spec, beta_init, sigma, config=None):
    """Iteratively reweighted LS at a fixed loss and fixed scale.

    Repeats w_it = weight(spec, (ydd - xdd beta)/sigma) followed by a
    weighted LS solve until the max-norm coefficient change drops below
    config.tol or config.max_iter is reached.
    """
    if config is None:
        config = IrlsConfig()
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    cp = _as_centered(panel)
    nt = cp.y.size
    k = cp.x.shape[2]
    xdd = cp.x.reshape(nt, k)
    ydd = cp.y.ravel()

    beta = np.asarray(beta_init, dtype=float).copy()
    sig = float(sigma)
    converged = False
    iterations = 0
    w = weight(spec, (ydd - xdd @ beta) / sig)
    for iterations in range(1, config.max_iter + 1):
        new_beta = _weighted_solve(xdd, ydd, w)
        delta = np.max(np.abs(new_beta - beta))
        beta = new_beta
        if config.rescale_each_iter:
            sig = initial_scale(ydd - xdd @ beta).value
        w = weight(spec, (ydd - xdd @ beta) / sig)
        if delta < config.tol:
            converged = True
            break
    return FitResult(
        estimator=spec.family,
        beta=beta,
        sigma_hat=sig,
        iterations=iterations,
        converged=converged,
        c_selected=spec.c,
        weights=w.reshape(cp.y.shape),
    )


def fit_mestimator(panel, family, c="auto", config=None, beta_init=None):
    """Four-step Huber/Tukey fit: LS start, robust scale, tuned c, IRLS.

    `c` is "auto" (grid search by efficiency factor) or a fixed positive
    number, in which case the grid-search step is skipped.

    `beta_init` overrides the within-LS starting vector of step 1; the
    residual scale of step 2 and the grid search of step 3 then run at
    the supplied coefficients.  The default (None) follows the printed
    procedure, whose LS start is cheap but inherits its sensitivity to
    high-leverage contamination.
    """
    if family not in ("huber", "tukey"):
        raise ValueError("family must be huber or tukey, got %r" % (family,))
    cp = _as_centered(panel)
    if beta_init is None:
        beta0 = within_ls(cp).beta
    else:
        beta0 = np.asarray(beta_init, dtype=float)
        if beta0.shape != (cp.x.shape[2],):
            raise ValueError(
                "beta_init must have length %d, got shape %r"
                % (cp.x.shape[2], beta0.shape)
            )
    resid = (cp.y - cp.x @ beta0).ravel()
    sigma = initial_scale(resid).value
    if c == "auto":
        grid = HUBER_GRID if family == "huber" else TUKEY_GRID
        curve = select_c_grid(cp, family, beta0, sigma, grid)
        c_use = curve.c_star
    else:
        c_use = float(c)
        if not c_use > 0:
            raise ValueError("fixed c must be positive")
    return irls_fit(cp, LossSpec(family, c_use), beta0, sigma, config)


def high_breakdown_init(panel, n_subsamples=500, seed=0):
    """High-breakdown starting vector from an elemental-subset search.

    Draws `n_subsamples` random K-point subsets of the centered
    observations, solves each exactly, scores every candidate by the
    MAD scale of its full-sample residuals, keeps the best, and refines
    it with a single bounded-weight (Tukey, c=4.685) reweighted solve.
    Singular subsets are skipped; if every subset is singular the panel
    cannot support even an elemental fit and DegenerateDesign is raised.
    """
    cp = _as_centered(panel)
    nt = cp.y.size
    k = cp.x.shape[2]
    if nt < k + 1:
        raise DegenerateDesign("need at least K+1 observations, have %d" % nt)
    xdd = cp.x.reshape(nt, k)
    ydd = cp.y.ravel()

    rng = np.random.default_rng(seed)
    idx = np.argpartition(rng.random((n_subsamples, nt)), k - 1, axis=1)[:, :k]
    a = xdd[idx]  # (n_subsamples, K, K)
    b = ydd[idx]
    dets = np.abs(np.linalg.det(a))
    scale = np.maximum(np.abs(a).max(axis=(1, 2)), 1e-300) ** k
    good = dets > 1e-12 * scale
    if not good.any():
        raise DegenerateDesign(
            "all %d elemental subsets were singular" % n_subsamples
        )
    betas = np.linalg.solve(a[good], b[good][..., None])[..., 0]  # (G, K)

    resid = ydd[None, :] - betas @ xdd.T
    med = np.median(resid, axis=1, keepdims=True)
    mads = 1.4826 * np.median(np.abs(resid - med), axis=1)
    best = int(np.argmin(mads))
    beta0 = betas[best]

    sigma = float(mads[best])
    if sigma > 0:
        w = weight(LossSpec("tukey", TUKEY_REFERENCE_C), (ydd - xdd @ beta0) / sigma)
        try:
            beta0 = _weighted_solve(xdd, ydd, w)
        except SingularWeightedDesign:
            pass  # keep the unrefined elemental winner
    return beta0


def fit_esl(panel, config=None, seed=0, max_outer=3, c="auto"):
    """Exponential-squared fit with data-driven constant selection.

    The candidate grid is built once, from the MAD scale of the
    residuals at the high-breakdown start.  Each outer pass then
    re-flags pseudo-outliers at the current coefficients, re-selects c
    by det(V) minimization over that fixed grid, and updates the
    coefficients by IRLS with the loss applied to raw residuals (the
    selected c lives on the squared raw-residual scale, so the IRLS
    standardization is fixed at 1).  The loop stops after at most
    `max_outer` passes, or earlier once both the coefficient change and
    the relative change in c are negligible.  The reported sigma_hat is
    the MAD scale at which the final selection was made.  A fixed `c`
    skips the selection step entirely.
    """
    if config is None:
        config = IrlsConfig()
    if c != "auto" and not float(c) > 0:
        raise ValueError("fixed c must be positive")
    cp = _as_centered(panel)
    beta = high_breakdown_init(cp, seed=seed)
    sigma_mad = mad_scale((cp.y - cp.x @ beta).ravel()).value
    grid = default_esl_grid(sigma_mad)

    prev_c = None
    total_iters = 0
    inner_converged = False
    outer_converged = False
    c_sel = None
    fit = None
    for _ in range(max_outer):
        if c == "auto":
            state = esl_select_c(cp, beta, grid)
            c_sel = state.c_selected
            sigma_mad = state.sigma_mad
        else:
            c_sel = float(c)
            sigma_mad = mad_scale((cp.y - cp.x @ beta).ravel()).value
        fit = irls_fit(cp, LossSpec("esl", c_sel), beta, 1.0, config)
        total_iters += fit.iterations
        inner_converged = fit.converged
        delta = np.max(np.abs(fit.beta - beta))
        beta = fit.beta
        if prev_c is not None and delta < config.tol and abs(c_sel - prev_c) / c_sel < 0.01:
            outer_converged = True
            break
        prev_c = c_sel
    return FitResult(
        estimator="esl",
        beta=beta,
        sigma_hat=sigma_mad,
        iterations=total_iters,
        converged=inner_converged and outer_converged,
        c_selected=c_sel,
        weights=fit.weights,
    )


@dataclass(frozen=True)
class SandwichCovariance:
    """Asymptotic covariance (E psi^2 / (E psi')^2) sigma^2 (X''X'')^{-1}."""

    matrix: np.ndarray
    psi_sq_mean: float
    psi_prime_mean: float
    sigma: float

    @property
    def std_errors(self):
        return np.sqrt(np.diag(self.matrix))


def sandwich_se(panel, fit, spec, sigma=None):
    """Plug-in sandwich covariance for a converged M-fit.

    `sigma` is the residual standardization used in the moments; by
    default it is fit.sigma_hat, except for exponential-squared fits
    where the loss acts on raw residuals and sigma is fixed at 1 (the
    reported sigma_hat is the MAD scale of record, not the IRLS scale).
    Raises UnstableCurvature when the mean psi' is not positive, since
    the asymptotic variance requires E[psi'] > 0.
    """
    cp = _as_centered(panel)
    if sigma is None:
        sigma = 1.0 if fit.estimator == "esl" else fit.sigma_hat
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    nt = cp.y.size
    k = cp.x.shape[2]
    xdd = cp.x.reshape(nt, k)
    e = (cp.y - cp.x @ fit.beta).ravel() / sigma

    psi_sq_mean = float(np.mean(psi(spec, e) ** 2))
    psi_prime_mean = float(np.mean(psi_prime(spec, e)))
    if psi_prime_mean <= 0:
        raise UnstableCurvature(
            "mean psi' = %g is not positive; the curvature condition "
            "E[psi'] > 0 fails at this fit" % psi_prime_mean
        )
    cross = xdd.T @ xdd
    cov = (psi_sq_mean / psi_prime_mean**2) * sigma**2 * np.linalg.inv(cross)
    cov = 0.5 * (cov + cov.T)
    return SandwichCovariance(cov, psi_sq_mean, psi_prime_mean, float(sigma))


def fit_estimator(panel, estimator, c="auto", seed=0, config=None):
    """Dispatch one named estimator and attach its standard errors.

    ls: within-group least squares with classical standard errors.
    huber / tukey: four-step M-fit with sandwich standard errors.
    esl: exponential-squared fit with sandwich standard errors.
    """
    cp = _as_centered(panel)
    if estimator == "ls":
        return within_ls(cp)
    if estimator in ("huber", "tukey"):
        fit = fit_mestimator(cp, estimator, c=c, config=config)
        cov = sandwich_se(cp, fit, LossSpec(estimator, fit.c_selected))
    elif estimator == "esl":
        fit = fit_esl(cp, config=config, seed=seed, c=c)
        cov = sandwich_se(cp, fit, LossSpec("esl", fit.c_selected))
    else:
        raise ValueError("unknown estimator %r" % (estimator,))
    return dataclasses.replace(fit, std_errors=cov.std_errors)
