"""Exact boundary-crossing probabilities for two-point (Bernoulli) channels.

With Bernoulli observations the running log-LR of channel ``j`` after ``t``
steps is ``a_j up_j + (t - a_j) down_j`` where ``a_j`` counts the ones seen
so far.  The joint law of the integer counts ``(a_1, ..., a_K)`` is
propagated forward one step at a time; mass that meets either boundary is
booked as a decision and removed.  Counts are integers, so lattice states
never alias.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NumericError
from .models import ModelSuite, TwoPointChannel
from .sequential import TestConfig

MAX_K = 3
FLUSH = 1e-30


@dataclass(frozen=True)
class OracleResult:
    """Index ``h`` of ``ess``, ``accept1``, ``residual`` and ``horizon`` is the truth (0 = null).

    ``residual[h]`` bounds the probability mass not yet stopped at the
    horizon (including any mass flushed below ``FLUSH``); error
    probabilities are exact up to it.
    """

    accept1: np.ndarray
    ess: np.ndarray
    residual: np.ndarray
    horizon: np.ndarray

    @property
    def type1(self) -> float:
        return float(self.accept1[0])

    @property
    def type2(self) -> np.ndarray:
        return 1.0 - self.accept1[1:] - self.residual[1:]


def _convolve(mass, axis, p):
    shape = list(mass.shape)
    shape[axis] += 1
    out = np.zeros(shape)
    head = [slice(None)] * mass.ndim
    tail = [slice(None)] * mass.ndim
    head[axis] = slice(0, -1)
    tail[axis] = slice(1, None)
    out[tuple(head)] += mass * (1.0 - p)
    out[tuple(tail)] += mass * p
    return out


def _trim(mass, lo):
    for ax in range(mass.ndim):
        other = tuple(k for k in range(mass.ndim) if k != ax)
        nz = np.flatnonzero(mass.any(axis=other) if other else mass != 0)
        if nz.size == 0:
            return mass[tuple(slice(0, 0) for _ in range(mass.ndim))], lo
        sl = [slice(None)] * mass.ndim
        sl[ax] = slice(nz[0], nz[-1] + 1)
        mass = mass[tuple(sl)]
        lo[ax] += nz[0]
    return mass, lo


def _propagate(channels, config, truth, eps, max_states, max_horizon):
    K = len(channels)
    probs = [ch.p1 if truth == j + 1 else ch.p0 for j, ch in enumerate(channels)]
    steps = [ch.steps for ch in channels]
    mass = np.ones((1,) * K)
    lo = np.zeros(K, dtype=np.int64)
    accept1 = 0.0
    ess = 0.0
    flushed = 0.0
    for t in range(1, max_horizon + 1):
        for j in range(K):
            mass = _convolve(mass, j, probs[j])
        grids = np.meshgrid(*[lo[j] + np.arange(mass.shape[j]) for j in range(K)], indexing="ij")
        z = np.stack([a * steps[j][0] + (t - a) * steps[j][1] for j, a in enumerate(grids)], axis=-1)
        up, low = config.statistics(z)
        hit1 = up >= config.log_b
        stop = hit1 | (low <= -config.log_a)
        stopped = float(mass[stop].sum())
        accept1 += float(mass[hit1].sum())
        ess += t * stopped
        mass[stop] = 0.0
        tiny = (mass > 0) & (mass < FLUSH)
        if tiny.any():
            flushed += float(mass[tiny].sum())
            mass[tiny] = 0.0
        mass, lo = _trim(mass, lo)
        remaining = float(mass.sum())
        if remaining + flushed < eps:
            return accept1, ess, remaining + flushed, t
        if mass.size > max_states:
            raise NumericError(f"oracle lattice exceeds {max_states} states at t={t}",
                               achieved=remaining + flushed)
    raise NumericError(f"un-stopped mass still above {eps} after {max_horizon} steps",
                       achieved=remaining + flushed)


def bernoulli_oracle(suite: ModelSuite, config: TestConfig, horizon_eps: float = 1e-13,
                     max_states: int = 10**7, max_horizon: int = 100_000) -> OracleResult:
    """Exact ``P_h(d = 1)`` and ``E_h[T]`` for every truth ``h = 0..K``."""
    channels = suite.channels
    if not channels or not all(isinstance(ch, TwoPointChannel) for ch in channels):
        raise DomainError("the oracle needs a multichannel suite of two-point channels")
    if len(channels) > MAX_K:
        raise DomainError(f"the oracle supports K <= {MAX_K}")
    if config.K != len(channels):
        raise DomainError("test and model disagree on K")
    out = [_propagate(channels, config, h, horizon_eps, max_states, max_horizon)
           for h in range(len(channels) + 1)]
    cols = list(zip(*out))
    return OracleResult(*(np.array(c, dtype=float) for c in cols[:3]), np.array(cols[3], dtype=np.int64))


def wald_ruin(p_up: float, m: int, n: int):
    """Simple +-1 walk from 0: ``(P(hit +m before -n), E[T])``."""
    if p_up == 0.5:
        return n / (m + n), float(m * n)
    rho = (1.0 - p_up) / p_up
    prob = (1.0 - rho**n) / (1.0 - rho ** (n + m))
    ess = (prob * m - (1.0 - prob) * n) / (2.0 * p_up - 1.0)
    return prob, ess


def symmetric_lattice_config(channel: TwoPointChannel, m: int, n: int) -> TestConfig:
    """SPRT whose boundaries sit half a step inside ``+m`` and ``-n`` lattice levels.

    Requires ``p1 = 1 - p0`` so that the log-LR moves by ``+-z`` each step.
    """
    up, down = channel.steps
    if not math.isclose(up, -down, rel_tol=1e-12):
        raise DomainError("channel increments are not symmetric")
    return TestConfig.sprt(1, 1, (n - 0.5) * up, (m - 0.5) * up)
