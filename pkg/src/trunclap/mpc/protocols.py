"""Two-phase secure noise generation and perturbation protocols.

Everything in-protocol is carried in integer grid steps (values scaled by
2^p), so the affine maps of the perturbation phase are exact field
arithmetic and no truncation is ever needed online; the final 2^-p
rescale happens at decode time.  Shared bits are plain 0/1 field
elements.

The noise phase never sees the shared input: it draws the branch bit, a
uniform tail index, and the centered noise, then blends the two payloads
with one mux.  The perturbation phase costs exactly one shared comparison
and two multiplications (the tail-map selection and the branch blend),
independent of every distribution parameter.

Public constants (Bernoulli thresholds, bit probabilities, c0) are
precomputed once per parameter set through the same code path the
plaintext samplers use, so both parties -- and the plaintext
functionalities used as oracles -- derive bit-identical values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..grids import FieldConfig, field_for_mechanism, steps_of
from ..mechanisms import MechanismParams
from ..sampling import (
    branch_probability_c,
    branch_probability_d,
    centered_dlap_config,
    dlap_zero_mass,
    outer_count,
)
from .core import Session, SharedValue


@dataclass(frozen=True)
class SharedNoisePair:
    """Shared branch bit [i] and blended payload [y] from a noise protocol."""

    branch: SharedValue
    payload: SharedValue


def mechanism_field(
    params: MechanismParams, mechanism: str = "tdl", gamma: int = 8
) -> FieldConfig:
    """Field sized for a mechanism run.

    The cumulative variant samples on the 2^-(p+gamma) lattice first, so
    its field must hold the fine step counts without wraparound.
    """
    if mechanism == "tcl":
        return field_for_mechanism(params.E, params.L, params.p + gamma)
    return field_for_mechanism(params.E, params.L, params.p)


def make_session(
    params: MechanismParams,
    mechanism: str = "tdl",
    gamma: int = 8,
    seed0: int = 0,
    seed1: int = 1,
    **kw,
) -> Session:
    return Session(mechanism_field(params, mechanism, gamma), seed0, seed1, **kw)


def pi_dl(session: Session, t: float, c0: float, kappa: int) -> SharedValue:
    """Shared centered discrete Laplace draw over [-2^kappa, 2^kappa] steps.

    Lines of the bitwise procedure: a Bernoulli(c0) zero flag, kappa
    Bernoulli bits with probabilities rho^(2^i)/(1+rho^(2^i)) for
    rho = e^(-1/t), a fair sign s = 2d-1, then z = s*(sum 2^i z_i + 1)
    and the final blend (1-b)*z.  Two protocol multiplications.
    """
    rho = math.exp(-1.0 / t)
    b = session.pi_bersample(c0)
    u = session.share_public(1)
    for i in range(kappa):
        r = rho ** (2**i)
        zi = session.pi_bersample(r / (1.0 + r))
        u = session.add(u, session.scale_public(zi, 1 << i))
    d = session.pi_bersample(0.5)
    s = session.affine(d, 2, -1)
    z = session.mul(s, u)
    one_minus_b = session.affine(b, -1, 1)
    return session.mul(one_minus_b, z)


def _dl_plan(params: MechanismParams, p_eff: int):
    cfg = centered_dlap_config(params.L, params.sigma, p_eff)
    if cfg.method != "bitwise":
        raise ValueError(
            "secure sampling needs 2^p * L to be a power of two "
            f"(got {steps_of(params.L, p_eff)} steps)"
        )
    return cfg


def pi_dl_for(session: Session, params: MechanismParams, p_eff: int | None = None) -> SharedValue:
    """pi_dl with (t, c0, kappa) derived from mechanism parameters."""
    p_eff = params.p if p_eff is None else p_eff
    cfg = _dl_plan(params, p_eff)
    t = 2.0**p_eff * params.sigma
    c0 = dlap_zero_mass(params.L, params.sigma, p_eff)
    return pi_dl(session, t, c0, cfg.kappa)


def pi_cl(session: Session, params: MechanismParams, gamma: int) -> SharedValue:
    """Shared approximate centered cumulative Laplace draw, coarse steps.

    Runs pi_dl on the 2^-(p+gamma) lattice, rejects the single top point
    +L (only the accept bit is revealed; it is independent of all
    secrets), then floors to the coarse grid by truncating the low gamma
    bits.  gamma=0 degenerates to the pi_dl law conditioned off +L.
    """
    if gamma < 0:
        raise ValueError("gamma must be >= 0")
    p_fine = params.p + gamma
    top = steps_of(params.L, p_fine)
    while True:
        zf = pi_dl_for(session, params, p_fine)
        flag = session.pi_ge(session.add_public(zf, -top))
        if session.open(flag) == 0:
            return session.trunc_pow2(zf, gamma)


def pi_d_noise(
    session: Session, params: MechanismParams, *, branch_prob: float | None = None
) -> SharedNoisePair:
    """Offline noise protocol for the discrete mechanism (never reads [x]).

    Draws [i] with the Bernoulli success probability
    1 - 2*2^p*E*e^(-L/sigma)/lambda, [a] uniform over the tail indices,
    [b] from the centered discrete Laplace, and blends with one mux.
    `branch_prob` overrides the Bernoulli parameter (test stub injection).
    """
    prob = branch_probability_d(params) if branch_prob is None else branch_prob
    i = session.pi_bersample(prob)
    a = session.pi_uni(outer_count(params))
    b = pi_dl_for(session, params)
    y = session.mux(i, a, b)
    return SharedNoisePair(branch=i, payload=y)


def pi_c_noise(
    session: Session,
    params: MechanismParams,
    gamma: int = 8,
    *,
    branch_prob: float | None = None,
) -> SharedNoisePair:
    """Offline noise protocol for the cumulative mechanism."""
    prob = branch_probability_c(params) if branch_prob is None else branch_prob
    i = session.pi_bersample(prob)
    a = session.pi_uni(outer_count(params))
    b = pi_cl(session, params, gamma)
    y = session.mux(i, a, b)
    return SharedNoisePair(branch=i, payload=y)


def _perturb(
    session: Session,
    x: SharedValue,
    pair: SharedNoisePair,
    params: MechanismParams,
    high_offset: int,
) -> SharedValue:
    Es = steps_of(params.E, params.p)
    Ls = steps_of(params.L, params.p)
    y = pair.payload
    # b = 1 iff the uniform index falls in the upper tail: y >= 2^p(E+x)
    b = session.pi_ge(session.sub(y, session.add_public(x, Es)))
    low = session.add_public(y, -Ls - Es)
    high = session.add_public(y, Ls - Es + high_offset)
    z0 = session.mux(b, low, high)
    z1 = session.add(x, y)
    return session.mux(pair.branch, z0, z1)


def pi_d_perturb(
    session: Session, x: SharedValue, pair: SharedNoisePair, params: MechanismParams
) -> SharedValue:
    """Online perturbation for the discrete mechanism.

    Cost: exactly 1 comparison + 2 multiplications, whatever the
    parameters.  The upper tail map is z = L - E + 2^-p (y + 1).
    """
    return _perturb(session, x, pair, params, high_offset=1)


def pi_c_perturb(
    session: Session, x: SharedValue, pair: SharedNoisePair, params: MechanismParams
) -> SharedValue:
    """Online perturbation for the cumulative mechanism.

    Same structure as the discrete variant; the upper tail starts at x+L
    inclusive (z = L - E + 2^-p y).
    """
    return _perturb(session, x, pair, params, high_offset=0)


def decode_steps(z_steps: int, params: MechanismParams) -> float:
    """Deferred 2^-p rescale of an opened steps-domain value."""
    return z_steps * params.step


def run_tdl(
    session: Session, x: float, params: MechanismParams
) -> tuple[float, dict]:
    """One noise+perturb+open round trip; returns the decoded value and ledger."""
    xs = session.share(steps_of(x, params.p) % session.q)
    pair = pi_d_noise(session, params)
    z = pi_d_perturb(session, xs, pair, params)
    return decode_steps(session.open(z), params), session.ledger.as_dict()


def run_tcl(
    session: Session, x: float, params: MechanismParams, gamma: int = 8
) -> tuple[float, dict]:
    xs = session.share(steps_of(x, params.p) % session.q)
    pair = pi_c_noise(session, params, gamma)
    z = pi_c_perturb(session, xs, pair, params)
    return decode_steps(session.open(z), params), session.ledger.as_dict()


def run_batch(
    mechanism: str,
    params: MechanismParams,
    x: float,
    n: int,
    seed0: int,
    seed1: int,
    gamma: int = 8,
) -> np.ndarray:
    """n independent protocol executions inside one session.

    Each execution draws fresh noise and perturbs the same shared input;
    the outputs are i.i.d. by construction of the tapes.
    """
    session = make_session(params, mechanism, gamma, seed0, seed1)
    xs = session.share(steps_of(x, params.p) % session.q)
    out = np.empty(n)
    if mechanism == "tdl":
        for k in range(n):
            pair = pi_d_noise(session, params)
            z = pi_d_perturb(session, xs, pair, params)
            out[k] = decode_steps(session.open(z), params)
    elif mechanism == "tcl":
        for k in range(n):
            pair = pi_c_noise(session, params, gamma)
            z = pi_c_perturb(session, xs, pair, params)
            out[k] = decode_steps(session.open(z), params)
    else:
        raise ValueError(f"unknown mechanism {mechanism!r}")
    return out
