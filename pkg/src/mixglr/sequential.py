"""Online SPRT, mixture (MiLRT) and weighted-GLR (WGLRT) tests.

Each test keeps the K running log-likelihood ratios ``z_i`` and thresholds
two summary statistics of ``log q^i + z_i``: their log-sum-exp for the
mixture test, their maximum for the weighted GLR test.  The test stops the
first time the upper statistic (weights ``q1``) reaches ``log B`` or the
lower statistic (weights ``q0``) falls to ``-log A``.  If both happen at the
same step the alternative is accepted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import logsumexp

from .errors import ConfigError, DomainError, UsageError
from .models import ModelSuite

SPRT = "sprt"
MILRT = "milrt"
WGLRT = "wglrt"
KINDS = (SPRT, MILRT, WGLRT)


@dataclass(frozen=True)
class Weights:
    """Positive weight vector ``q``."""

    q: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float).reshape(-1)
        if q.size == 0 or not np.all(np.isfinite(q)) or np.any(q <= 0):
            raise ConfigError("weights must be a non-empty vector of positive finite reals")
        q.setflags(write=False)
        object.__setattr__(self, "q", q)

    @classmethod
    def uniform(cls, K: int, value: float = 1.0) -> "Weights":
        return cls(np.full(K, float(value)))

    @property
    def log_q(self) -> np.ndarray:
        return np.log(self.q)

    @property
    def total(self) -> float:
        return float(self.q.sum())

    def __len__(self):
        return self.q.size

    def scaled(self, c: float) -> "Weights":
        return Weights(self.q * c)


@dataclass(frozen=True)
class TestConfig:
    """Thresholds in log space plus the two weight vectors.

    For ``kind="sprt"`` both statistics are ``z_{sprt_index}`` and the
    weights are ignored.
    """

    __test__ = False  # not a pytest class

    kind: str
    log_a: float
    log_b: float
    q0: Weights
    q1: Weights
    sprt_index: int = 1

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown test kind {self.kind!r}")
        if not (self.log_a > 0 and self.log_b > 0):
            raise ConfigError("thresholds must satisfy A, B > 1")
        if len(self.q0) != len(self.q1):
            raise ConfigError("q0 and q1 must have the same length")
        if self.kind == SPRT and not 1 <= self.sprt_index <= len(self.q1):
            raise ConfigError("sprt_index out of range")

    @classmethod
    def sprt(cls, K: int, i: int, log_a: float, log_b: float) -> "TestConfig":
        w = Weights.uniform(K)
        return cls(SPRT, log_a, log_b, w, w, sprt_index=i)

    @property
    def K(self) -> int:
        return len(self.q1)

    def statistics(self, z):
        """``(upper, lower)`` statistics for running log-LRs ``z`` (last axis K)."""
        z = np.asarray(z, dtype=float)
        if self.kind == SPRT:
            zi = z[..., self.sprt_index - 1]
            return zi, zi
        reduce = _mixture if self.kind == MILRT else _maximum
        return reduce(self.q1.log_q + z), reduce(self.q0.log_q + z)


def _mixture(a):
    return logsumexp(a, axis=-1)


def _maximum(a):
    return np.max(a, axis=-1)


@dataclass(frozen=True)
class TestState:
    __test__ = False

    t: int
    z: np.ndarray
    upper: float = -math.inf
    lower: float = math.inf
    ell0: float = 0.0
    stopped: bool = False
    trace: tuple | None = None

    @classmethod
    def initial(cls, K: int, keep_trace: bool = False) -> "TestState":
        return cls(t=0, z=np.zeros(K), trace=() if keep_trace else None)


@dataclass(frozen=True)
class Verdict:
    """Outcome of a stopped test: sample size, decision and overshoot (nats)."""

    T: int
    d: int
    eta: float
    trace: tuple | None = field(default=None, compare=False)


@dataclass(frozen=True)
class Truncated:
    """The test did not stop within ``max_steps``; not a decision."""

    max_steps: int
    state: TestState = field(compare=False)


def new_state(config: TestConfig, keep_trace: bool = False) -> TestState:
    return TestState.initial(config.K, keep_trace)


def step(config: TestConfig, state: TestState, x, suite: ModelSuite):
    """Consume one observation.  Returns the next ``TestState`` or a ``Verdict``."""
    if state.stopped:
        raise UsageError("cannot step a stopped test")
    suite.check_support(x)
    X = np.asarray(x, dtype=float).reshape(1, -1)
    inc = suite.loglr_matrix(X)[0]
    ell0 = state.ell0 + float(suite.logpdf(0, X)[0])
    return advance(config, state, inc, ell0)


def advance(config: TestConfig, state: TestState, increments, ell0: float = 0.0):
    """Advance by precomputed log-LR increments (length K)."""
    z = state.z + np.asarray(increments, dtype=float)
    t = state.t + 1
    upper, lower = (float(v) for v in config.statistics(z))
    trace = state.trace
    if trace is not None:
        trace = trace + ((t, *z.tolist(), upper, lower),)
    if upper >= config.log_b:
        return Verdict(T=t, d=1, eta=upper - config.log_b, trace=trace)
    if lower <= -config.log_a:
        return Verdict(T=t, d=0, eta=-(lower + config.log_a), trace=trace)
    return replace(state, t=t, z=z, upper=upper, lower=lower, ell0=ell0, trace=trace)


def run_to_verdict(config: TestConfig, suite: ModelSuite, truth: int, rng, max_steps: int = 10**6,
                   keep_trace: bool = False):
    """Sample under ``f_truth`` until the test stops; ``Truncated`` if it does not."""
    if max_steps < 1:
        raise DomainError("max_steps must be >= 1")
    if config.K != suite.K:
        raise ConfigError("test and model disagree on K")
    rng = np.random.default_rng(rng)
    state = new_state(config, keep_trace)
    truths = np.array([int(truth)])
    for _ in range(max_steps):
        inc = suite.loglr_matrix(suite.sample_paths(truths, rng))[0]
        out = advance(config, state, inc)
        if isinstance(out, Verdict):
            return out
        state = out
    return Truncated(max_steps, state)


def run_on_path(config: TestConfig, suite: ModelSuite, observations):
    """Run over a fixed observation sequence; ``None`` if it never stops."""
    state = new_state(config)
    for x in observations:
        out = step(config, state, x, suite)
        if isinstance(out, Verdict):
            return out
        state = out
    return None


def decomposition_terms(state: TestState, i: int, q: Weights, statistic: str = "mixture"):
    """``(Z_i, log q^i, Y)`` whose sum is the statistic for weight ``q``.

    ``Y`` is the log of one plus (mixture) or the max of one and (max) the
    competitors' weighted likelihood ratios relative to alternative ``i``.
    """
    if not 1 <= i <= len(q):
        raise DomainError(f"alternative index {i} outside 1..{len(q)}")
    k = i - 1
    a = q.log_q + state.z
    rel = np.delete(a - a[k], k)
    if statistic == "mixture":
        y = float(logsumexp(np.append(rel, 0.0))) if rel.size else 0.0
    elif statistic == "max":
        y = max(0.0, float(np.max(rel))) if rel.size else 0.0
    else:
        raise DomainError(f"statistic must be 'mixture' or 'max', got {statistic!r}")
    return float(state.z[k]), float(q.log_q[k]), y


def argmax_channel(config: TestConfig, state: TestState, upper: bool = True) -> int:
    """Smallest index attaining the weighted max (for trace reporting)."""
    q = config.q1 if upper else config.q0
    return int(np.argmax(q.log_q + state.z)) + 1


def trace_rows(trace, K):
    header = ["t"] + [f"z_{k}" for k in range(1, K + 1)] + ["upper", "lower"]
    return header, list(trace or ())
