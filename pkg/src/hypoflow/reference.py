"""Closed-form reference data for the three families, used by the verify suites."""
from __future__ import annotations

import numpy as np

from .liealg import LieDifferential

__all__ = ["gauge_m1", "gauge_m2", "gauge_m3", "trace_formula", "flow_m1_unprojected"]


def gauge_m1(lam, mu, h, k) -> np.ndarray:
    return 0.5 * np.array([
        [k, 0, h, -lam, 0],
        [0, -k, -lam, -h, 0],
        [h, -lam, mu, 0, 0],
        [-lam, -h, 0, -mu, 0],
        [0, 0, 0, 0, k + mu],
    ], dtype=float)


def gauge_m2(x, y, h, k, lam, mu) -> np.ndarray:
    a, b = (lam + h) / 2, (h - lam) / 2
    return np.array([
        [0, 0, a, 0, 0],
        [0, 0, 0, b, x],
        [a, 0, -(k + mu) / 2, 0, 0],
        [0, b, 0, (mu - k) / 2, -y],
        [0, x, 0, -y, (k - mu) / 2],
    ], dtype=float)


def gauge_m3(lam, mu) -> np.ndarray:
    return np.diag([-(mu + lam) / 2, -(mu + lam) / 2, (mu - lam) / 2, (mu - lam) / 2, lam]).astype(float)


def trace_formula(family: str, params) -> float:
    """tr X̂ in closed form: ½(μ+k), −½(μ+k), −λ."""
    if family == "m1":
        lam, mu, h, k = params
        return (mu + k) / 2
    if family == "m2":
        x, y, h, k, lam, mu = params
        return -(mu + k) / 2
    lam, mu = params
    return -lam


def flow_m1_unprojected(lam, mu, h, k) -> LieDifferential:
    """X̃ at an ℳ₁ point, before the su(2) correction."""
    return LieDifferential.from_terms([
        {"35": -1.5 * lam * mu, "25": lam ** 2, "15": -lam * h},
        {"15": -1.5 * k ** 2 - 0.5 * k * mu - h ** 2, "45": 0.5 * k * lam,
         "35": -1.5 * mu * h - 1.5 * k * h, "25": lam * h},
        {"15": -0.5 * k * lam},
        {"25": 1.5 * lam * mu, "35": -lam ** 2 - 0.5 * k * mu - 1.5 * mu ** 2 - h ** 2,
         "15": -1.5 * mu * h - 1.5 * k * h},
        {},
    ])
