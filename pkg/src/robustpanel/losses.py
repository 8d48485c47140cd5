"""Loss families for robust M-estimation: Huber, Tukey bisquare, and the
exponential squared loss.

Each family is described by a tuning constant ``c`` and exposes four views:

- ``rho``        the loss itself,
- ``psi``        the estimating-equation kernel (proportional to drho/du),
- ``psi_prime``  its derivative,
- ``weight``     the IRLS weight psi(u)/u, with the u -> 0 limit psi'(0).

The closed forms are::

    huber:  rho = u^2/2                   |u| <= c
                  c|u| - c^2/2            |u| >  c
            psi = clip(u, -c, c)

    tukey:  rho = 1 - (1 - (u/c)^2)^3     |u| <= c, else 1
            psi = u (1 - (u/c)^2)^2       |u| <= c, else 0

    esl:    rho = 1 - exp(-u^2/c)
            psi = u exp(-u^2/c)

psi is proportional to rho' rather than equal to it for the redescending
families: rho' = (6/c^2) psi for tukey and rho' = (2/c) psi for esl. The
common positive factor is immaterial to the estimating equations and drops
out of the efficiency factor.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

HUBER = "huber"
TUKEY = "tukey"
ESL = "esl"

FAMILIES = (HUBER, TUKEY, ESL)


@dataclass(frozen=True)
class LossSpec:
    """A loss family name plus its tuning constant.

    Parameters
    ----------
    family : str
        One of ``"huber"``, ``"tukey"``, ``"esl"``.
    c : float
        Tuning constant, strictly positive and finite.
    """

    family: str
    c: float

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(
                f"unknown loss family {self.family!r}; expected one of {FAMILIES}"
            )
        c = float(self.c)
        if not np.isfinite(c) or c <= 0.0:
            raise ValueError(f"tuning constant must be positive and finite, got {self.c!r}")
        object.__setattr__(self, "c", c)


def _wrap(u):
    arr = np.asarray(u, dtype=float)
    return arr, arr.ndim == 0


def _ret(out, scalar):
    return float(out[()]) if scalar else out


def rho(spec: LossSpec, u):
    """Loss value at u. Nonnegative; bounded by 1 for tukey and esl."""
    arr, scalar = _wrap(u)
    c = spec.c
    if spec.family == HUBER:
        a = np.abs(arr)
        out = np.where(a <= c, 0.5 * arr * arr, c * a - 0.5 * c * c)
    elif spec.family == TUKEY:
        v = np.minimum((arr / c) ** 2, 1.0)
        out = 1.0 - (1.0 - v) ** 3
    else:
        out = 1.0 - np.exp(-arr * arr / c)
    return _ret(out, scalar)


def psi(spec: LossSpec, u):
    """Estimating-equation kernel at u (odd in u)."""
    arr, scalar = _wrap(u)
    c = spec.c
    if spec.family == HUBER:
        out = np.clip(arr, -c, c)
    elif spec.family == TUKEY:
        v = (arr / c) ** 2
        out = np.where(v <= 1.0, arr * (1.0 - np.minimum(v, 1.0)) ** 2, 0.0)
    else:
        out = arr * np.exp(-arr * arr / c)
    return _ret(out, scalar)


def psi_prime(spec: LossSpec, u):
    """Derivative of psi at u. The Huber kink |u| == c is assigned the
    inner value 1."""
    arr, scalar = _wrap(u)
    c = spec.c
    if spec.family == HUBER:
        out = (np.abs(arr) <= c).astype(float)
    elif spec.family == TUKEY:
        v = (arr / c) ** 2
        out = np.where(v <= 1.0, (1.0 - v) * (1.0 - 5.0 * v), 0.0)
    else:
        v = arr * arr / c
        out = np.exp(-v) * (1.0 - 2.0 * v)
    return _ret(out, scalar)


def weight(spec: LossSpec, u):
    """IRLS weight psi(u)/u in [0, 1], with weight(0) = psi'(0) = 1."""
    arr, scalar = _wrap(u)
    c = spec.c
    if spec.family == HUBER:
        out = c / np.maximum(np.abs(arr), c)
    elif spec.family == TUKEY:
        v = (arr / c) ** 2
        out = np.where(v <= 1.0, (1.0 - np.minimum(v, 1.0)) ** 2, 0.0)
    else:
        out = np.exp(-arr * arr / c)
    return _ret(out, scalar)
