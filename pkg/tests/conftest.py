"""Shared independent oracles for the test suite.

These deliberately avoid the package's closed forms: normalizers come
from quadrature or direct summation, discrete masses from the raw kernel,
and cumulative masses from adaptive quadrature on each cell.  Tests
compare the library's closed-form fast paths against these.
"""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from trunclap import MechanismParams


def closed_grid(B: float, p: int) -> np.ndarray:
    n = int(round(2 * B * 2**p))
    return (np.arange(n + 1) - n // 2) * 2.0**-p


def half_open_grid(B: float, p: int) -> np.ndarray:
    return closed_grid(B, p)[:-1]


def kernel(y, x, L, sigma):
    return np.exp(-np.minimum(np.abs(y - x), L) / sigma)


def lap_lambda_oracle(E, L, sigma, x) -> float:
    f = lambda y: math.exp(-min(abs(y - x), L) / sigma)
    val, _ = quad(f, -E - L, E + L, limit=500, points=[x - L, x, x + L])
    return val


def tdl_masses_oracle(x, E, L, sigma, p) -> np.ndarray:
    ys = closed_grid(L + E, p)
    w = kernel(ys, x, L, sigma)
    return w / np.sum(w)


def tcl_cell_oracle(y, x, L, sigma, h) -> float:
    f = lambda r: math.exp(-min(abs(r - x), L) / sigma)
    val, _ = quad(f, y, y + h, epsabs=1e-14, epsrel=1e-13, limit=200)
    return val


def tcl_masses_oracle(x, E, L, sigma, p) -> np.ndarray:
    h = 2.0**-p
    ys = half_open_grid(L + E, p)
    w = np.array([tcl_cell_oracle(y, x, L, sigma, h) for y in ys])
    return w / np.sum(w)


def lap_moments_oracle(x, E, L, sigma):
    lam = lap_lambda_oracle(E, L, sigma, x)
    pts = [x - L, x, x + L]
    mean, _ = quad(
        lambda y: y * math.exp(-min(abs(y - x), L) / sigma) / lam,
        -E - L, E + L, limit=500, points=pts,
    )
    mse, _ = quad(
        lambda y: (y - x) ** 2 * math.exp(-min(abs(y - x), L) / sigma) / lam,
        -E - L, E + L, limit=500, points=pts,
    )
    return mean, mse


@pytest.fixture
def small_params() -> MechanismParams:
    return MechanismParams(E=4.0, L=2.0, sigma=1.0, p=0)


@pytest.fixture
def table_params_p0() -> MechanismParams:
    return MechanismParams(E=64.0, L=32.0, sigma=8.0, p=0)


@pytest.fixture
def table_params_p2() -> MechanismParams:
    return MechanismParams(E=64.0, L=32.0, sigma=8.0, p=2)
