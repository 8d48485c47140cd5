import numpy as np
import pytest

from robustpanel.panel import PanelData

GASOLINE_CSV = "data/gasoline.csv"


def synth_panel(n=40, t=4, k=2, seed=0, beta=(2.4, -1.2), noise=1.0, alpha_spread=12.0):
    """Small fixed-effects panel: y = x @ beta + alpha_i + noise * eps."""
    rng = np.random.default_rng(seed)
    beta = np.asarray(beta, dtype=float)[:k]
    x = np.empty((n, t, k))
    for j in range(k):
        if j % 2 == 0:
            x[:, :, j] = rng.chisquare(2, (n, t)) - 2.0
        else:
            x[:, :, j] = rng.standard_normal((n, t))
    alpha = rng.uniform(0.0, alpha_spread, n)
    eps = noise * rng.standard_normal((n, t))
    y = x @ beta + alpha[:, None] + eps
    return PanelData(y, x)


@pytest.fixture
def hand_panel():
    # N=2, T=2, K=1; within-LS solves to exactly 1.0
    y = np.array([[0.0, 2.0], [11.0, 13.0]])
    x = np.array([[0.0, 2.0], [1.0, 3.0]])[:, :, None]
    return PanelData(y, x)


@pytest.fixture
def noisy_panel():
    return synth_panel(seed=11)
