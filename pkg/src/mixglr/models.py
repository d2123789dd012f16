"""Hypothesis structures: a simple null density against K alternatives.

Two constructions are supported.  The multichannel slippage model stacks K
independent channels, each carrying a null density ``g0`` and a signal
density ``g1``; alternative ``i`` puts the signal in channel ``i`` only, so
its log-likelihood ratio depends on coordinate ``i`` alone.  The generic
model takes user-supplied log-densities and samplers.

All density work happens in log space.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy import special

from .errors import ConfigError, DomainError

EXPONENTIAL = "exponential"
GAUSSIAN = "gaussian"
TWO_POINT = "two_point"


@dataclass(frozen=True)
class ChannelFamily:
    """One channel of a multichannel model, indexed by its signal strength.

    ``exponential``: null Exp(mean 1), signal Exp(mean 1 + theta).
    ``gaussian``: null N(0, 1), signal N(theta, 1).
    """

    kind: str
    theta: float

    def __post_init__(self):
        if self.kind not in (EXPONENTIAL, GAUSSIAN):
            raise ConfigError(f"unknown channel family {self.kind!r}")
        if not (np.isfinite(self.theta) and self.theta > 0):
            raise ConfigError(f"theta must be positive and finite, got {self.theta}")

    @property
    def arithmetic(self) -> bool:
        return False

    def check_support(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == EXPONENTIAL and np.any(x < 0):
            raise DomainError("exponential channel observations must be >= 0")
        if not np.all(np.isfinite(x)):
            raise DomainError("observation must be finite")

    def logpdf(self, x, signal):
        x = np.asarray(x, dtype=float)
        signal = np.asarray(signal, dtype=bool)
        if self.kind == EXPONENTIAL:
            scale = np.where(signal, 1.0 + self.theta, 1.0)
            return -np.log(scale) - x / scale
        mean = np.where(signal, self.theta, 0.0)
        return -0.5 * (x - mean) ** 2 - 0.5 * math.log(2 * math.pi)

    def loglr(self, x):
        """Per-observation ``log(g1(x) / g0(x))``."""
        x = np.asarray(x, dtype=float)
        th = self.theta
        if self.kind == EXPONENTIAL:
            return -math.log1p(th) + x * (th / (1.0 + th))
        return th * x - 0.5 * th * th

    def standard_draw(self, rng, size):
        if self.kind == EXPONENTIAL:
            return rng.standard_exponential(size)
        return rng.standard_normal(size)

    def transform(self, u, signal):
        """Map standard draws to null (``signal`` False) or signal draws."""
        if self.kind == EXPONENTIAL:
            return u * np.where(signal, 1.0 + self.theta, 1.0)
        return u + np.where(signal, self.theta, 0.0)

    def bhattacharyya(self) -> float:
        """``integral sqrt(g0 g1)``; bounds both tails of the L-number series."""
        th = self.theta
        if self.kind == EXPONENTIAL:
            return 2.0 * math.sqrt(1.0 + th) / (2.0 + th)
        return math.exp(-th * th / 8.0)

    def to_dict(self):
        return {"family": self.kind, "theta": self.theta}


@dataclass(frozen=True)
class TwoPointChannel:
    """Bernoulli channel: ``P(x = 1)`` is ``p0`` under the null, ``p1`` with signal.

    Its log-likelihood ratio is arithmetic, so renewal constants are not
    defined for it; it exists to drive the exact lattice oracle.
    """

    p0: float
    p1: float
    kind: str = field(default=TWO_POINT, init=False)

    def __post_init__(self):
        for p in (self.p0, self.p1):
            if not 0.0 < p < 1.0:
                raise ConfigError(f"two-point probabilities must lie in (0, 1), got {p}")
        if self.p0 == self.p1:
            raise ConfigError("two-point channel needs p0 != p1")

    @property
    def arithmetic(self) -> bool:
        return True

    @property
    def steps(self):
        """Log-likelihood ratio increments for ``x = 1`` and ``x = 0``."""
        return (math.log(self.p1 / self.p0), math.log((1 - self.p1) / (1 - self.p0)))

    def check_support(self, x):
        x = np.asarray(x, dtype=float)
        if not np.all((x == 0) | (x == 1)):
            raise DomainError("two-point channel observations must be 0 or 1")

    def logpdf(self, x, signal):
        x = np.asarray(x, dtype=float)
        p = np.where(np.asarray(signal, dtype=bool), self.p1, self.p0)
        return x * np.log(p) + (1 - x) * np.log1p(-p)

    def loglr(self, x):
        up, down = self.steps
        x = np.asarray(x, dtype=float)
        return x * up + (1 - x) * down

    def standard_draw(self, rng, size):
        return rng.random(size)

    def transform(self, u, signal):
        return (u < np.where(signal, self.p1, self.p0)).astype(float)

    def bhattacharyya(self) -> float:
        return math.sqrt(self.p0 * self.p1) + math.sqrt((1 - self.p0) * (1 - self.p1))

    def to_dict(self):
        return {"family": TWO_POINT, "p0": self.p0, "p1": self.p1}


@dataclass(frozen=True)
class GenericModel:
    """User-supplied densities.

    Parameters
    ----------
    logpdfs : sequence of callables
        ``logpdfs[j](X)`` returns ``log f_j`` for each row of ``X`` (shape
        ``(n, dim)``), for ``j = 0..K``.
    samplers : sequence of callables
        ``samplers[j](rng, n)`` returns ``n`` draws from ``f_j`` as ``(n, dim)``.
    support : callable
        Returns a boolean array flagging rows of ``X`` inside the common support.
    bounds : pair of floats, optional
        Integration range for one-dimensional models.
    """

    logpdfs: tuple
    samplers: tuple
    support: Callable
    dim: int = 1
    bounds: tuple = (-np.inf, np.inf)


@dataclass(frozen=True)
class ModelSuite:
    """Null density plus K alternatives.  Immutable after construction."""

    channels: tuple = ()
    generic: GenericModel | None = None

    @classmethod
    def multichannel(cls, channels: Sequence) -> "ModelSuite":
        channels = tuple(channels)
        if not channels:
            raise ConfigError("a multichannel model needs at least one channel")
        return cls(channels=channels)

    @classmethod
    def from_generic(cls, logpdfs, samplers, support, dim=1, bounds=(-np.inf, np.inf)):
        logpdfs, samplers = tuple(logpdfs), tuple(samplers)
        if len(logpdfs) < 2 or len(logpdfs) != len(samplers):
            raise ConfigError("need K + 1 >= 2 log-densities and as many samplers")
        return cls(generic=GenericModel(logpdfs, samplers, support, dim, tuple(bounds)))

    @property
    def is_multichannel(self) -> bool:
        return self.generic is None

    @property
    def K(self) -> int:
        if self.generic is not None:
            return len(self.generic.logpdfs) - 1
        return len(self.channels)

    @property
    def dim(self) -> int:
        return self.generic.dim if self.generic is not None else len(self.channels)

    def _as_rows(self, x):
        X = np.asarray(x, dtype=float)
        if X.ndim == 1:
            X = X[None, :]
        if X.ndim != 2 or X.shape[1] != self.dim:
            raise DomainError(f"observation length must be {self.dim}")
        return X

    def check_support(self, x):
        X = self._as_rows(x)
        if self.generic is None:
            for j, ch in enumerate(self.channels):
                ch.check_support(X[:, j])
        elif not np.all(self.generic.support(X)):
            raise DomainError("observation outside the common support")

    def logpdf(self, truth: int, x):
        """``log f_truth`` at each row of ``x``; ``truth`` in ``0..K``."""
        self._check_truth(truth)
        X = self._as_rows(x)
        if self.generic is not None:
            return np.asarray(self.generic.logpdfs[truth](X), dtype=float)
        out = np.zeros(X.shape[0])
        for j, ch in enumerate(self.channels):
            out += ch.logpdf(X[:, j], truth == j + 1)
        return out

    def loglr_matrix(self, X):
        """Per-alternative log-likelihood ratio increments, shape ``(n, K)``.

        No support checks; the simulation engine calls this on its own draws.
        """
        if self.generic is not None:
            g = self.generic
            base = np.asarray(g.logpdfs[0](X), dtype=float)
            return np.column_stack([np.asarray(f(X), dtype=float) - base for f in g.logpdfs[1:]])
        return np.column_stack([ch.loglr(X[:, j]) for j, ch in enumerate(self.channels)])

    def sample_paths(self, truths, rng):
        """One observation per entry of ``truths`` (each in ``0..K``), shape ``(n, dim)``."""
        truths = np.asarray(truths)
        n = truths.shape[0]
        if self.generic is not None:
            out = np.empty((n, self.dim))
            for h in np.unique(truths):
                idx = np.flatnonzero(truths == h)
                out[idx] = np.asarray(self.generic.samplers[int(h)](rng, idx.size)).reshape(idx.size, self.dim)
            return out
        out = np.empty((n, self.K))
        for j, ch in enumerate(self.channels):
            out[:, j] = ch.transform(ch.standard_draw(rng, n), truths == j + 1)
        return out

    def _check_truth(self, truth):
        if not 0 <= int(truth) <= self.K:
            raise DomainError(f"hypothesis index {truth} outside 0..{self.K}")

    def to_dict(self):
        if self.generic is not None:
            raise ConfigError("generic models have no JSON form")
        return {"kind": "multichannel", "channels": [c.to_dict() for c in self.channels]}


def loglr_increment(suite: ModelSuite, i: int, x) -> float:
    """``log(f_i(x) / f_0(x))`` for one observation, ``i`` in ``1..K``."""
    if not 1 <= i <= suite.K:
        raise DomainError(f"alternative index {i} outside 1..{suite.K}")
    X = suite._as_rows(x)
    if X.shape[0] != 1:
        raise DomainError("loglr_increment takes a single observation")
    suite.check_support(X)
    if suite.is_multichannel:
        return float(suite.channels[i - 1].loglr(X[0, i - 1]))
    return float(suite.logpdf(i, X)[0] - suite.logpdf(0, X)[0])


def sample(suite: ModelSuite, truth: int, rng, size: int | None = None):
    """Draw from ``f_truth``; one vector if ``size`` is None, else ``(size, dim)``."""
    suite._check_truth(truth)
    n = 1 if size is None else size
    X = suite.sample_paths(np.full(n, int(truth)), rng)
    return X[0] if size is None else X


def mixture_loglr(suite: ModelSuite, weights, x):
    """``log sum_i w_i f_i(x) / f_0(x)`` from full densities (no factorization)."""
    X = suite._as_rows(x)
    f0 = suite.logpdf(0, X)
    terms = np.column_stack([suite.logpdf(i, X) - f0 for i in range(1, suite.K + 1)])
    return special.logsumexp(terms + np.log(np.asarray(weights, dtype=float)), axis=1)


def channel_from_dict(d) -> ChannelFamily | TwoPointChannel:
    try:
        family = d["family"]
        if family == TWO_POINT:
            return TwoPointChannel(float(d["p0"]), float(d["p1"]))
        return ChannelFamily(family, float(d["theta"]))
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"bad channel entry {d!r}: {exc}") from None


def suite_from_dict(d) -> ModelSuite:
    if not isinstance(d, dict) or d.get("kind") != "multichannel":
        raise ConfigError('model document must have "kind": "multichannel"')
    chans = d.get("channels")
    if not isinstance(chans, list) or not chans:
        raise ConfigError('model document needs a non-empty "channels" list')
    return ModelSuite.multichannel(channel_from_dict(c) for c in chans)


def load_suite(path) -> ModelSuite:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read model {path}: {exc}") from None
    return suite_from_dict(doc)


def exponential_suite(thetas) -> ModelSuite:
    return ModelSuite.multichannel(ChannelFamily(EXPONENTIAL, float(t)) for t in thetas)


def gaussian_suite(thetas) -> ModelSuite:
    return ModelSuite.multichannel(ChannelFamily(GAUSSIAN, float(t)) for t in thetas)
