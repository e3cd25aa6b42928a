"""Trusted (non-MPC) reference samplers for the two mechanisms.

The centered discrete Laplace is drawn with a three-step procedure: a
Bernoulli(c0) zero flag, a bitwise-sampled truncated geometric for the
magnitude, and a fair sign.  Each binary digit of the geometric value is
an independent Bernoulli(rho^(2^i) / (1 + rho^(2^i))) draw, which makes
the whole construction a fixed sequence of word-level Bernoulli draws --
the same sequence the secure protocol evaluates obliviously.  For that
reason the samplers here consume their random words in a fixed order
regardless of which branch the outcome takes (no early exit, and the
unused branch of the noise pair is still drawn).

The centered cumulative Laplace is approximated by sampling the discrete
Laplace on a 2^-(p+gamma) lattice and flooring to the coarse grid; the
single fine point at +L is rejected and redrawn, which realizes the
half-open support exactly.

Noise bounds whose step count 2^p * L is not a power of two cannot use
the bitwise path; they fall back to exact inverse-CDF table sampling
(one word per draw), and the configuration flags which method is active.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .grids import steps_of
from .mechanisms import (
    MechanismParams,
    centered_dlap_pmf,
    lambda_clap,
    lambda_dlap,
)
from .tape import RandomTape, bernoulli_threshold


@dataclass(frozen=True)
class GeoSamplerParams:
    """Bitwise truncated-geometric sampler parameters.

    kappa is the bit length (support [0, 2^kappa)), rho = e^(-1/t) the
    per-step decay, and t the scale in grid-step units (t = 2^p * sigma).
    """

    kappa: int
    rho: float
    t: float

    def __post_init__(self):
        if self.kappa < 0:
            raise ValueError("kappa must be >= 0")
        if not 0.0 < self.rho < 1.0:
            raise ValueError("rho must lie in (0, 1)")

    def bit_probability(self, i: int) -> float:
        """P[bit i = 1] = rho^(2^i) / (1 + rho^(2^i))."""
        r = self.rho ** (2**i)
        return r / (1.0 + r)

    def bit_probabilities(self) -> list[float]:
        return [self.bit_probability(i) for i in range(self.kappa)]


def sample_geometric_bitwise(gp: GeoSamplerParams, tape: RandomTape) -> int:
    """Draw from the truncated geometric c1*(1-rho)*rho^x on [0, 2^kappa).

    Assembles the value from kappa independent Bernoulli bits, least
    significant first.
    """
    x = 0
    for i in range(gp.kappa):
        if tape.bernoulli(gp.bit_probability(i)):
            x |= 1 << i
    return x


def dlap_zero_mass(L: float, sigma: float, p: int) -> float:
    """c0 = P[0] of the centered discrete Laplace on [-L, L] at step 2^-p.

    Computed from the closed-form normalizer, not by floating summation.
    """
    h = 2.0 ** -p
    lam = 1.0 + 2.0 * (-math.expm1(-L / sigma)) / math.expm1(h / sigma)
    return 1.0 / lam


@dataclass(frozen=True)
class CenteredDlapConfig:
    """Precomputed draw plan for the centered discrete Laplace sampler."""

    L: float
    sigma: float
    p: int
    method: str                      # "bitwise" | "table"
    zero_threshold: int
    sign_threshold: int
    bit_thresholds: tuple[int, ...]  # empty in table mode
    cdf: tuple[float, ...]           # empty in bitwise mode

    @property
    def kappa(self) -> int:
        return len(self.bit_thresholds)

    @property
    def words_per_draw(self) -> int:
        return 1 if self.method == "table" else self.kappa + 2


@lru_cache(maxsize=128)
def centered_dlap_config(L: float, sigma: float, p: int) -> CenteredDlapConfig:
    steps = steps_of(L, p)
    if steps <= 0:
        raise ValueError("L must be positive on the grid")
    t = 2.0**p * sigma
    c0 = dlap_zero_mass(L, sigma, p)
    if steps & (steps - 1) == 0:
        # 2^p*L = 2^kappa, so the magnitude takes exactly kappa bits
        gp = GeoSamplerParams(kappa=steps.bit_length() - 1, rho=math.exp(-1.0 / t), t=t)
        return CenteredDlapConfig(
            L=L,
            sigma=sigma,
            p=p,
            method="bitwise",
            zero_threshold=bernoulli_threshold(c0),
            sign_threshold=bernoulli_threshold(0.5),
            bit_thresholds=tuple(
                bernoulli_threshold(q) for q in gp.bit_probabilities()
            ),
            cdf=(),
        )
    pmf = centered_dlap_pmf(L, sigma, p)
    cdf = tuple(np.cumsum(pmf.masses).tolist())
    return CenteredDlapConfig(
        L=L,
        sigma=sigma,
        p=p,
        method="table",
        zero_threshold=bernoulli_threshold(c0),
        sign_threshold=bernoulli_threshold(0.5),
        bit_thresholds=(),
        cdf=cdf,
    )


def sample_dlap_centered(L: float, sigma: float, p: int, tape: RandomTape) -> float:
    """Draw from the centered discrete Laplace on [-L, L] at step 2^-p.

    Bitwise path: (1) Bernoulli(c0) zero flag, (2) geometric magnitude
    x' in [0, 2^p*L) giving x = x'+1, (3) fair sign.  All kappa+2 words
    are consumed whatever the outcome.  If 2^p*L is not a power of two
    the exact inverse-CDF table is used instead (one word).
    """
    cfg = centered_dlap_config(L, sigma, p)
    return _dlap_draw(cfg, tape)


def _dlap_draw(cfg: CenteredDlapConfig, tape: RandomTape) -> float:
    h = 2.0 ** -cfg.p
    if cfg.method == "table":
        u = tape.word() / 2.0**64
        i = int(np.searchsorted(cfg.cdf, u, side="right"))
        i = min(i, len(cfg.cdf) - 1)
        return (i - steps_of(cfg.L, cfg.p)) * h
    zero = tape.bernoulli_thresholded(cfg.zero_threshold)
    x = 0
    for i, thr in enumerate(cfg.bit_thresholds):
        if tape.bernoulli_thresholded(thr):
            x |= 1 << i
    sign = 1 if tape.bernoulli_thresholded(cfg.sign_threshold) else -1
    if zero:
        return 0.0
    return sign * (x + 1) * h


def sample_clap_centered(
    L: float, sigma: float, p: int, gamma: int, tape: RandomTape
) -> float:
    """Approximate draw from the centered cumulative Laplace on [-L, L).

    Samples the discrete Laplace on the fine lattice 2^-(p+gamma), rejects
    the single fine point +L (the half-open support), and floors to the
    coarse grid.  Larger gamma tightens the approximation.
    """
    if gamma < 0:
        raise ValueError("gamma must be >= 0")
    h = 2.0 ** -p
    while True:
        v = sample_dlap_centered(L, sigma, p + gamma, tape)
        if v == L:
            continue
        return math.floor(v / h) * h


@dataclass(frozen=True)
class NoisePair:
    """Branch bit and payload from the two-phase noise draw.

    branch 0 carries a uniform index in [0, 2*2^p*E); branch 1 carries the
    centered noise value ([-L, L] for the discrete variant, [-L, L) for
    the cumulative one).
    """

    branch: int
    payload: float

    def __post_init__(self):
        if self.branch not in (0, 1):
            raise ValueError("branch must be 0 or 1")


def outer_count(params: MechanismParams) -> int:
    """Number of outer (uniform-tail) outcomes, 2 * 2^p * E."""
    return 2 * steps_of(params.E, params.p)


def branch_probability_d(params: MechanismParams) -> float:
    """P[inner branch] for the discrete variant: 1 - 2*2^p*E*e^(-L/s)/lambda."""
    lam = lambda_dlap(params.E, params.L, params.sigma, params.p)
    return 1.0 - outer_count(params) * math.exp(-params.L / params.sigma) / lam


def branch_probability_c(params: MechanismParams) -> float:
    """P[inner branch] for the cumulative variant: 1 - 2*E*e^(-L/s)/lambda."""
    lam = lambda_clap(params.E, params.L, params.sigma)
    return 1.0 - 2.0 * params.E * math.exp(-params.L / params.sigma) / lam


def noise_d(
    params: MechanismParams, tape: RandomTape, *, branch_prob: float | None = None
) -> NoisePair:
    """Input-independent noise draw for the discrete mechanism.

    Draw order is fixed (branch word, uniform word(s), inner draw) and the
    unused branch is still consumed, mirroring the oblivious protocol.
    `branch_prob` overrides the Bernoulli parameter (test stub injection).
    """
    prob = branch_probability_d(params) if branch_prob is None else branch_prob
    branch = tape.bernoulli_thresholded(bernoulli_threshold(prob))
    a = tape.uniform(outer_count(params))
    b = sample_dlap_centered(params.L, params.sigma, params.p, tape)
    return NoisePair(branch=branch, payload=b if branch else a)


def noise_c(
    params: MechanismParams,
    tape: RandomTape,
    gamma: int = 8,
    *,
    branch_prob: float | None = None,
) -> NoisePair:
    """Input-independent noise draw for the cumulative mechanism."""
    prob = branch_probability_c(params) if branch_prob is None else branch_prob
    branch = tape.bernoulli_thresholded(bernoulli_threshold(prob))
    a = tape.uniform(outer_count(params))
    b = sample_clap_centered(params.L, params.sigma, params.p, gamma, tape)
    return NoisePair(branch=branch, payload=b if branch else a)


def perturb_d(x: float, pair: NoisePair, params: MechanismParams) -> float:
    """Map a noise pair and input x to the perturbed value (discrete variant).

    Branch 0 splits the uniform index at 2^p*(E+x)-1 into the two flat
    tails; branch 1 adds the centered noise to x.  The composite law of
    perturb_d(noise_d()) is exactly the TDL mass function.
    """
    xs = steps_of(x, params.p)
    Es = steps_of(params.E, params.p)
    Ls = steps_of(params.L, params.p)
    if abs(xs) > Es:
        raise ValueError(f"x={x} outside [-E, E]")
    h = params.step
    if pair.branch:
        return x + pair.payload
    y = int(pair.payload)
    if not 0 <= y < 2 * Es:
        raise ValueError(f"uniform index {y} out of range")
    if y <= Es + xs - 1:
        return (-Ls - Es + y) * h
    return (Ls - Es + y + 1) * h


def perturb_c(x: float, pair: NoisePair, params: MechanismParams) -> float:
    """Cumulative-variant perturbation; the upper tail starts at x+L inclusive."""
    xs = steps_of(x, params.p)
    Es = steps_of(params.E, params.p)
    Ls = steps_of(params.L, params.p)
    if abs(xs) > Es:
        raise ValueError(f"x={x} outside [-E, E]")
    h = params.step
    if pair.branch:
        return x + pair.payload
    y = int(pair.payload)
    if not 0 <= y < 2 * Es:
        raise ValueError(f"uniform index {y} out of range")
    if y <= Es + xs - 1:
        return (-Ls - Es + y) * h
    return (Ls - Es + y) * h


def sample_tdl(x: float, params: MechanismParams, tape: RandomTape) -> float:
    return perturb_d(x, noise_d(params, tape), params)


def sample_tcl(
    x: float, params: MechanismParams, tape: RandomTape, gamma: int = 8
) -> float:
    return perturb_c(x, noise_c(params, tape, gamma), params)


def sample_tdl_batch(
    x: float, params: MechanismParams, n: int, seed: int
) -> np.ndarray:
    """Vectorized TDL sampling, word-for-word equal to the sequential path.

    Requires the bitwise inner sampler and a power-of-two outer count so
    that every sample consumes a fixed number of words; other parameter
    shapes fall back to the sequential loop.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    cfg = centered_dlap_config(params.L, params.sigma, params.p)
    M = outer_count(params)
    if cfg.method != "bitwise" or M & (M - 1) != 0:
        tape = RandomTape(seed)
        return np.array([sample_tdl(x, params, tape) for _ in range(n)])
    if n == 0:
        return np.empty(0)
    xs = steps_of(x, params.p)
    Es = steps_of(params.E, params.p)
    Ls = steps_of(params.L, params.p)
    kappa = cfg.kappa
    gen = np.random.Generator(np.random.PCG64(seed))
    w = gen.integers(0, 1 << 64, size=(n, kappa + 4), dtype=np.uint64)
    branch = w[:, 0] < np.uint64(bernoulli_threshold(branch_probability_d(params)))
    a = (w[:, 1] & np.uint64(M - 1)).astype(np.int64)
    zero = w[:, 2] < np.uint64(cfg.zero_threshold)
    mag = np.zeros(n, dtype=np.int64)
    for i, thr in enumerate(cfg.bit_thresholds):
        mag |= (w[:, 3 + i] < np.uint64(thr)).astype(np.int64) << i
    sign = np.where(w[:, 3 + kappa] < np.uint64(cfg.sign_threshold), 1, -1)
    inner = np.where(zero, 0, sign * (mag + 1))
    outer = np.where(a <= Es + xs - 1, -Ls - Es + a, Ls - Es + a + 1)
    z_steps = np.where(branch, xs + inner, outer)
    return z_steps * params.step
