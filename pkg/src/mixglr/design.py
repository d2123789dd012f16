"""Priors, weights and thresholds for the mixture and weighted-GLR tests."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources

import numpy as np
from scipy.special import logsumexp

from .errors import ConfigError, DesignError
from .renewal import RenewalConstants
from .sequential import TestConfig, Weights

PRIOR_KINDS = {
    "uniform": "uniform", "u": "uniform",
    "kl": "kl", "i": "kl",
    "l": "l",
    "hat": "hat", "least_favorable": "hat",
}
CONSERVATIVE = "conservative"
CORRECTED = "corrected"


@dataclass(frozen=True)
class Prior:
    p: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float).reshape(-1)
        if p.size == 0 or np.any(~np.isfinite(p)) or np.any(p <= 0):
            raise ConfigError("prior entries must be positive")
        if abs(p.sum() - 1.0) > 1e-12:
            raise ConfigError(f"prior must sum to 1, sums to {p.sum()!r}")
        p.setflags(write=False)
        object.__setattr__(self, "p", p)

    @classmethod
    def from_unnormalized(cls, w) -> "Prior":
        w = np.asarray(w, dtype=float)
        if np.any(w <= 0):
            raise ConfigError("prior weights must be positive")
        return cls(w / w.sum())

    @classmethod
    def from_log(cls, logw) -> "Prior":
        logw = np.asarray(logw, dtype=float)
        return cls(np.exp(logw - logsumexp(logw)))

    def __len__(self):
        return self.p.size


@dataclass(frozen=True)
class ThresholdRule:
    rule: str
    alpha: float
    beta: float

    def __post_init__(self):
        if self.rule not in (CONSERVATIVE, CORRECTED):
            raise ConfigError(f"unknown threshold rule {self.rule!r}")
        for name in ("alpha", "beta"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ConfigError(f"{name} must lie in (0, 1), got {v}")


def make_prior(kind: str, constants: RenewalConstants) -> Prior:
    """``uniform``: ``p ∝ 1``; ``kl``: ``p ∝ I``; ``l``: ``p ∝ L``;
    ``hat``: ``p ∝ L e^kappa`` (equalizes accumulated KL information)."""
    try:
        kind = PRIOR_KINDS[kind.lower()]
    except (KeyError, AttributeError):
        raise ConfigError(f"unknown prior kind {kind!r}") from None
    if kind == "uniform":
        return Prior(np.full(constants.K, 1.0 / constants.K))
    if kind == "kl":
        return Prior.from_log(np.log(constants.I))
    if kind == "l":
        return Prior.from_log(np.log(constants.L))
    return Prior.from_log(np.log(constants.L) + constants.kappa)


def weights_from_prior(prior: Prior, constants: RenewalConstants):
    """``q0 = p L`` and ``q1 = p / L``."""
    L = np.asarray(constants.L, dtype=float)
    if len(prior) != L.size:
        raise DesignError("prior and constants disagree on K")
    if np.any(~np.isfinite(L)) or np.any(L <= 0):
        raise DesignError("L-numbers must be positive and finite")
    return Weights(prior.p * L), Weights(prior.p / L)


def reference_values() -> dict:
    """Published reference values shipped with the package (read-only)."""
    text = resources.files("mixglr").joinpath("data/reference_values.json").read_text()
    return json.loads(text)


def reference_weights():
    """``(q0, q1)`` as printed in the published parameter table (K = 3 exponential)."""
    rows = reference_values()["parameter_table"]["rows"]
    return Weights([r["q0"]["value"] for r in rows]), Weights([r["q1"]["value"] for r in rows])


def null_reference_index(constants: RenewalConstants, rtol: float = 1e-9) -> int:
    """Smallest 1-based index attaining ``min I0`` (ties at ``rtol``)."""
    I0 = np.asarray(constants.I0)
    m = I0.min()
    return int(np.flatnonzero(np.abs(I0 - m) <= rtol * abs(m))[0]) + 1


def thresholds(rule: ThresholdRule, q0: Weights, q1: Weights, constants: RenewalConstants | None = None):
    """``(log A, log B)``.

    Conservative: ``A = 1/(beta min q0)``, ``B = |q1|/alpha``; these
    guarantee both error probabilities.  Corrected: ``A`` gains the factor
    ``gamma0`` of the closest alternative and ``B`` uses ``sum q1 gamma``.
    """
    log_a = -math.log(rule.beta) - math.log(float(np.min(q0.q)))
    if rule.rule == CONSERVATIVE:
        log_b = math.log(q1.total) - math.log(rule.alpha)
    else:
        if constants is None:
            raise DesignError("the corrected rule needs renewal constants")
        k = null_reference_index(constants)
        log_a += math.log(constants.gamma0[k - 1])
        log_b = float(logsumexp(q1.log_q + np.log(constants.gamma))) - math.log(rule.alpha)
    if log_a <= 0 or log_b <= 0:
        raise DesignError(f"thresholds not above 1 (log A={log_a:.4g}, log B={log_b:.4g}); tolerances too loose for the weights")
    return log_a, log_b


@dataclass(frozen=True)
class Design:
    """A complete parameter set for both tests."""

    p: Prior | None
    q0: Weights
    q1: Weights
    log_a: float
    log_b: float

    def config(self, kind: str) -> TestConfig:
        return TestConfig(kind, self.log_a, self.log_b, self.q0, self.q1)

    def to_dict(self):
        return {
            "logA": self.log_a,
            "logB": self.log_b,
            "q0": self.q0.q.tolist(),
            "q1": self.q1.q.tolist(),
            "p": None if self.p is None else self.p.p.tolist(),
        }

    @classmethod
    def from_dict(cls, d) -> "Design":
        try:
            p = None if d.get("p") is None else Prior(np.asarray(d["p"]) / np.sum(d["p"]))
            return cls(p, Weights(d["q0"]), Weights(d["q1"]), float(d["logA"]), float(d["logB"]))
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"bad design document: {exc}") from None


def design(constants: RenewalConstants, prior="kl", rule: str = CORRECTED, alpha: float = 1e-3,
           beta: float = 1e-2, weights=None) -> Design:
    """Prior -> weights -> thresholds in one call.

    ``weights`` overrides the prior-derived ``(q0, q1)`` (e.g. the published
    table weights); thresholds are then computed from the override.
    """
    p = prior if isinstance(prior, Prior) else make_prior(prior, constants)
    q0, q1 = weights if weights is not None else weights_from_prior(p, constants)
    log_a, log_b = thresholds(ThresholdRule(rule, alpha, beta), q0, q1, constants)
    return Design(None if weights is not None else p, q0, q1, log_a, log_b)
