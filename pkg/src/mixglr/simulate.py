"""Monte Carlo engine for the sequential tests.

Replications are simulated in fixed blocks of ``BLOCK`` paths.  Block ``b``
draws from a Philox stream keyed by ``(seed, b)``, so results depend only on
the seed and the replication count, never on how blocks are scheduled.
Within a block all live paths advance together, one observation per step.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .design import Prior
from .errors import ConfigError, DomainError
from .models import ModelSuite
from .renewal import RenewalConstants
from .sequential import MILRT, SPRT, WGLRT, TestConfig

BLOCK = 8192
DIRECT = "direct"
IMPORTANCE = "importance"
TRUNCATION_LIMIT = 1e-3


def block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(block,))))


def _lse(a):
    m = a.max(axis=1)
    return m + np.log(np.exp(a - m[:, None]).sum(axis=1))


def _stats(config: TestConfig, z):
    if config.kind == SPRT:
        zi = z[:, config.sprt_index - 1]
        return zi, zi
    red = _lse if config.kind == MILRT else (lambda a: a.max(axis=1))
    return red(z + config.q1.log_q), red(z + config.q0.log_q)


@dataclass
class PathBatch:
    """Per-path outcomes.  ``d`` is -1 for truncated paths (``T = max_steps``)."""

    truth: np.ndarray
    T: np.ndarray
    d: np.ndarray
    eta: np.ndarray
    mix_upper: np.ndarray  # log sum_i q1^i Lambda^i at the stopping time

    @classmethod
    def concat(cls, parts):
        return cls(*(np.concatenate([getattr(p, f) for p in parts]) for f in
                     ("truth", "T", "d", "eta", "mix_upper")))


def simulate_paths(config: TestConfig, suite: ModelSuite, truths, rng, max_steps: int = 10**6,
                   increments=None) -> PathBatch:
    """Run one path per entry of ``truths`` until each stops or hits ``max_steps``.

    ``increments``, if given, is an ``(n, steps, K)`` array of log-LR
    increments used instead of sampling (for cross-checks against ``step``).
    """
    truths = np.asarray(truths, dtype=np.int64)
    n = truths.size
    K = config.K
    T = np.full(n, max_steps, dtype=np.int64)
    d = np.full(n, -1, dtype=np.int8)
    eta = np.full(n, np.nan)
    mix = np.full(n, np.nan)
    live = np.arange(n)
    z = np.zeros((n, K))
    log_q1 = config.q1.log_q
    for t in range(1, max_steps + 1):
        if live.size == 0:
            break
        if increments is None:
            inc = suite.loglr_matrix(suite.sample_paths(truths[live], rng))
        else:
            inc = increments[live, t - 1, :]
        z += inc
        up, lo = _stats(config, z)
        hit1 = up >= config.log_b
        hit0 = ~hit1 & (lo <= -config.log_a)
        stop = hit1 | hit0
        if stop.any():
            ids = live[stop]
            T[ids] = t
            d[ids] = hit1[stop].astype(np.int8)
            eta[ids] = np.where(hit1[stop], up[stop] - config.log_b, -(lo[stop] + config.log_a))
            mix[ids] = _lse(z[stop] + log_q1)
            keep = ~stop
            live, z = live[keep], z[keep]
    return PathBatch(truths, T, d, eta, mix)


# ------------------------------------------------------------------ plans

@dataclass(frozen=True)
class SimPlan:
    """``truth`` is a hypothesis index ``0..K`` or ``"weighted"`` (uses ``prior``)."""

    suite: ModelSuite
    config: TestConfig
    truth: object = 0
    replications: int = 10_000
    seed: int = 0
    max_steps: int = 10**6
    estimator: str = DIRECT
    prior: Prior | None = None
    workers: int = 1

    def __post_init__(self):
        if self.replications < 100:
            raise ConfigError("replications must be >= 100")
        if self.estimator not in (DIRECT, IMPORTANCE):
            raise ConfigError(f"unknown estimator {self.estimator!r}")
        if self.config.K != self.suite.K:
            raise ConfigError("test and model disagree on K")
        if self.truth == "weighted":
            if self.prior is None or len(self.prior) != self.suite.K:
                raise ConfigError("weighted truth needs a prior of length K")
        elif not (isinstance(self.truth, (int, np.integer)) and 0 <= self.truth <= self.suite.K):
            raise ConfigError(f"truth must be 0..K or 'weighted', got {self.truth!r}")
        if self.estimator == IMPORTANCE and self.truth != 0:
            raise ConfigError("importance sampling targets the type-I error (truth 0)")


def _block_sizes(n):
    full, rest = divmod(n, BLOCK)
    return [BLOCK] * full + ([rest] if rest else [])


def _run_blocks(plan: SimPlan, draw_truths):
    suite, config = plan.suite, plan.config

    def one(b_size):
        b, size = b_size
        rng = block_rng(plan.seed, b)
        truths = draw_truths(rng, size)
        return simulate_paths(config, suite, truths, rng, plan.max_steps)

    jobs = list(enumerate(_block_sizes(plan.replications)))
    if plan.workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(plan.workers) as ex:
            parts = list(ex.map(one, jobs))
    else:
        parts = [one(j) for j in jobs]
    return PathBatch.concat(parts)


def _mean_se(x):
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        return math.nan, math.nan
    se = float(x.std(ddof=1) / math.sqrt(x.size)) if x.size > 1 else math.nan
    return float(x.mean()), se


@dataclass
class SimReport:
    replications: int
    ess_mean: float
    ess_stderr: float
    decision_freq: tuple
    truncation_count: int
    type1_estimate: float | None = None
    type1_stderr: float | None = None
    type2_estimates: dict = field(default_factory=dict)
    ess_by_alternative: dict = field(default_factory=dict)
    kl_accumulated: dict = field(default_factory=dict)
    ess_invalid: bool = False
    estimator: str = DIRECT
    paths: PathBatch | None = field(default=None, repr=False, compare=False)

    def to_dict(self):
        def pairs(dct):
            return {str(k): {"estimate": v[0], "stderr": v[1]} for k, v in dct.items()}
        return {
            "replications": self.replications,
            "estimator": self.estimator,
            "ess_mean": self.ess_mean,
            "ess_stderr": self.ess_stderr,
            "decision_freq": list(self.decision_freq),
            "truncation_count": self.truncation_count,
            "ess_invalid": self.ess_invalid,
            "type1_estimate": self.type1_estimate,
            "type1_stderr": self.type1_stderr,
            "type2_estimates": pairs(self.type2_estimates),
            "ess_by_alternative": pairs(self.ess_by_alternative),
            "kl_accumulated": {str(k): v for k, v in self.kl_accumulated.items()},
        }


def run_mc(plan: SimPlan, constants: RenewalConstants | None = None, keep_paths: bool = False) -> SimReport:
    """Direct Monte Carlo (or importance sampling, per ``plan.estimator``)."""
    if plan.estimator == IMPORTANCE:
        return type1_importance_sampling(plan, keep_paths=keep_paths)
    K = plan.suite.K
    if plan.truth == "weighted":
        p = plan.prior.p

        def draw(rng, size):
            return rng.choice(np.arange(1, K + 1), size=size, p=p)
    else:
        h = int(plan.truth)

        def draw(rng, size):
            return np.full(size, h, dtype=np.int64)

    paths = _run_blocks(plan, draw)
    n = plan.replications
    trunc = int(np.sum(paths.d < 0))
    ess, ess_se = _mean_se(paths.T)
    rep = SimReport(
        replications=n, ess_mean=ess, ess_stderr=ess_se,
        decision_freq=(float(np.mean(paths.d == 0)), float(np.mean(paths.d == 1))),
        truncation_count=trunc, ess_invalid=trunc > TRUNCATION_LIMIT * n,
        paths=paths if keep_paths else None,
    )
    if plan.truth == 0:
        rep.type1_estimate, rep.type1_stderr = _mean_se(paths.d == 1)
    for i in range(1, K + 1):
        sel = paths.truth == i
        if sel.sum() > 1:
            rep.type2_estimates[i] = _mean_se(paths.d[sel] == 0)
            rep.ess_by_alternative[i] = _mean_se(paths.T[sel])
    if constants is not None:
        rep.kl_accumulated = kl_until_stopping(rep, constants)["per_alternative"]
    return rep


def type1_importance_sampling(plan: SimPlan, keep_paths: bool = False) -> SimReport:
    """Type-I error via simulation under the ``q1``-mixture of alternatives.

    Each replication draws alternative ``J`` with probability ``q1^J/|q1|``,
    runs the test under ``P_J`` and scores ``|q1| exp(-Z_T(q1)) 1{d=1}``,
    where ``Z(q1)`` is the mixture statistic for both tests.
    """
    config = plan.config
    if config.kind not in (MILRT, WGLRT):
        raise DomainError("importance sampling is defined for the mixture and weighted-GLR tests")
    K = plan.suite.K
    probs = config.q1.q / config.q1.total

    def draw(rng, size):
        return rng.choice(np.arange(1, K + 1), size=size, p=probs)

    paths = _run_blocks(plan, draw)
    hit = paths.d == 1
    w = np.zeros(paths.T.size)
    w[hit] = np.exp(math.log(config.q1.total) - paths.mix_upper[hit])
    est, se = _mean_se(w)
    n = plan.replications
    trunc = int(np.sum(paths.d < 0))
    return SimReport(
        replications=n, ess_mean=math.nan, ess_stderr=math.nan,
        decision_freq=(float(np.mean(paths.d == 0)), float(np.mean(hit))),
        truncation_count=trunc, ess_invalid=True,
        type1_estimate=est if hit.any() else 0.0,
        type1_stderr=se if hit.any() else math.nan,
        estimator=IMPORTANCE, paths=paths if keep_paths else None,
    )


def kl_until_stopping(report: SimReport, constants: RenewalConstants):
    """``I_i E_i[T]`` per alternative (nats) and their maximum."""
    per = {i: float(constants.I[i - 1] * m) for i, (m, _) in sorted(report.ess_by_alternative.items())}
    if not per:
        raise DomainError("report has no per-alternative sample sizes")
    return {"per_alternative": per, "max": max(per.values())}


def crossing_times(mix: TestConfig, mx: TestConfig, suite: ModelSuite, truths, rng, max_steps: int = 5000):
    """One-sided first-passage times on shared paths.

    Returns ``(M1, N1, M0, N0)``: first times the mixture/max upper statistic
    reaches ``log B`` and the lower statistic falls to ``-log A``.  Paths that
    never cross within ``max_steps`` get ``max_steps + 1``.
    """
    if mix.kind != MILRT or mx.kind != WGLRT:
        raise ConfigError("crossing_times needs a mixture config and a max config")
    truths = np.asarray(truths)
    n = truths.size
    out = np.full((4, n), max_steps + 1, dtype=np.int64)
    z = np.zeros((n, suite.K))
    for t in range(1, max_steps + 1):
        z += suite.loglr_matrix(suite.sample_paths(truths, rng))
        m_up, m_lo = _stats(mix, z)
        n_up, n_lo = _stats(mx, z)
        for k, hit in enumerate((m_up >= mix.log_b, n_up >= mx.log_b,
                                 m_lo <= -mix.log_a, n_lo <= -mx.log_a)):
            first = hit & (out[k] > max_steps)
            out[k, first] = t
        if np.all(out <= max_steps):
            break
    return tuple(out)
