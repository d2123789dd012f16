"""Renewal-theoretic constants of each log-likelihood-ratio random walk.

For alternative ``i`` the walk ``Z_n`` has increments ``log f_i/f_0``; it
drifts up at rate ``I_i`` under ``P_i`` and down at rate ``I0_i`` under
``P_0``.  The limiting overshoot over a far boundary has Laplace transform
``gamma`` (at 1) and mean ``kappa``, with ``L = gamma * I = gamma0 * I0``.

Built-in families use closed forms or certified series.  Every series here
is truncated with the same bound: for a log-likelihood-ratio walk,
``E exp(-W/2) = BC`` (the Bhattacharyya coefficient) on the side of positive
drift, so ``P(S_n <= 0) <= BC**n`` and ``E[S_n^-] <= 2 BC**n / e``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special, stats

from .errors import DomainError, NumericError
from .models import EXPONENTIAL, GAUSSIAN, TWO_POINT, ModelSuite

SERIES_TERM_TOL = 1e-12
N_MAX = 100_000
_CHUNK = 4096


@dataclass(frozen=True)
class RenewalConstants:
    """Per-alternative constants; arrays are indexed by ``i - 1``."""

    I: np.ndarray
    I0: np.ndarray
    gamma: np.ndarray
    gamma0: np.ndarray
    kappa: np.ndarray
    kappa0: np.ndarray
    L: np.ndarray
    theta: np.ndarray | None = None

    @property
    def K(self) -> int:
        return len(self.I)

    def check(self, tol=1e-6):
        """Assert the identities tying ``L`` to both KL numbers."""
        ok = (np.allclose(self.L, self.gamma * self.I, rtol=tol, atol=0)
              and np.allclose(self.L, self.gamma0 * self.I0, rtol=tol, atol=0))
        in_range = np.all((self.gamma > 0) & (self.gamma <= 1) & (self.gamma0 > 0) & (self.gamma0 <= 1))
        return bool(ok and in_range)

    def rows(self):
        for k in range(self.K):
            yield {
                "i": k + 1,
                "theta": float("nan") if self.theta is None else float(self.theta[k]),
                "I": float(self.I[k]), "I0": float(self.I0[k]),
                "gamma": float(self.gamma[k]), "gamma0": float(self.gamma0[k]),
                "kappa": float(self.kappa[k]), "kappa0": float(self.kappa0[k]),
                "L": float(self.L[k]),
            }


@dataclass(frozen=True)
class OvershootEstimate:
    values: np.ndarray
    gamma_hat: float
    kappa_hat: float
    gamma_se: float
    kappa_se: float
    c: float

    @property
    def weights(self):
        return np.full(self.values.size, 1.0 / self.values.size)

    @property
    def empirical_distribution(self):
        return list(zip(self.values.tolist(), self.weights.tolist()))

    @property
    def std_err(self) -> float:
        return self.kappa_se


def _check_index(suite: ModelSuite, i: int):
    if not 1 <= i <= suite.K:
        raise DomainError(f"alternative index {i} outside 1..{suite.K}")


def _channel(suite: ModelSuite, i: int):
    _check_index(suite, i)
    return suite.channels[i - 1] if suite.is_multichannel else None


# ---------------------------------------------------------------- KL numbers

def kl_numbers(suite: ModelSuite, i: int):
    """``(I_i, I0_i)``: drift of ``Z^i`` under ``P_i`` and of ``-Z^i`` under ``P_0``."""
    ch = _channel(suite, i)
    if ch is not None:
        if ch.kind == EXPONENTIAL:
            th = ch.theta
            return th - math.log1p(th), math.log1p(th) - th / (1.0 + th)
        if ch.kind == GAUSSIAN:
            v = 0.5 * ch.theta ** 2
            return v, v
        p0, p1 = ch.p0, ch.p1
        I = p1 * math.log(p1 / p0) + (1 - p1) * math.log((1 - p1) / (1 - p0))
        I0 = p0 * math.log(p0 / p1) + (1 - p0) * math.log((1 - p0) / (1 - p1))
        return I, I0
    return _generic_kl(suite, i)


def _generic_kl(suite, i, rtol=1e-8):
    g = suite.generic
    if g.dim != 1:
        rng = np.random.default_rng(20130121 + i)
        n = 1_000_000
        xi = g.samplers[i](rng, n)
        x0 = g.samplers[0](rng, n)
        zi = suite.loglr_matrix(xi)[:, i - 1]
        z0 = suite.loglr_matrix(x0)[:, i - 1]
        return float(zi.mean()), float(-z0.mean())

    def f(j):
        return lambda x: float(np.exp(g.logpdfs[j](np.array([[x]]))[0]))

    def llr(x):
        X = np.array([[x]])
        return float(g.logpdfs[i](X)[0] - g.logpdfs[0](X)[0])

    lo, hi = g.bounds
    fi, f0 = f(i), f(0)
    out = []
    for integrand in (lambda x: llr(x) * fi(x), lambda x: -llr(x) * f0(x)):
        val, err = integrate.quad(integrand, lo, hi, epsrel=rtol, epsabs=0, limit=400)
        if not np.isfinite(val) or err > max(rtol * abs(val), 1e-12):
            raise NumericError("KL quadrature did not converge", achieved=err / max(abs(val), 1e-300))
        out.append(val)
    return tuple(out)


def _generic_bhattacharyya(suite, i):
    g = suite.generic
    if g.dim == 1:
        def integrand(x):
            X = np.array([[x]])
            return float(np.exp(0.5 * (g.logpdfs[i](X)[0] + g.logpdfs[0](X)[0])))
        val, _ = integrate.quad(integrand, *g.bounds, epsrel=1e-10, limit=400)
        return float(val)
    rng = np.random.default_rng(7 + i)
    z = suite.loglr_matrix(g.samplers[0](rng, 1_000_000))[:, i - 1]
    return float(np.mean(np.exp(0.5 * z)))


def bhattacharyya(suite: ModelSuite, i: int) -> float:
    ch = _channel(suite, i)
    return ch.bhattacharyya() if ch is not None else _generic_bhattacharyya(suite, i)


# ------------------------------------------------------- closed-form overshoot

def _series_length(bc: float, tol: float) -> int:
    """Smallest N with geometric tail ``bc**(N+1) / ((N+1)(1-bc)) < tol``."""
    if bc <= 0:
        return 1
    n = max(1, int(math.ceil(math.log(tol * (1 - bc)) / math.log(bc))))
    if n > 100 * N_MAX:
        raise NumericError("series needs too many terms", achieved=None)
    return n


def _gaussian_series(theta: float):
    """``(sum_n Phi(-x_n)/n, sum_n [phi(x_n)/sqrt(n) - theta/2 Phi(-x_n)])``, ``x_n = theta sqrt(n)/2``."""
    bc = math.exp(-theta * theta / 8.0)
    n = np.arange(1, _series_length(bc, SERIES_TERM_TOL * 1e-1) + 1, dtype=float)
    x = 0.5 * theta * np.sqrt(n)
    tail = stats.norm.sf(x)
    s_gamma = math.fsum(tail / n)
    s_kappa = math.fsum(stats.norm.pdf(x) / np.sqrt(n) - 0.5 * theta * tail)
    return s_gamma, s_kappa


def overshoot_constants_closed(family):
    """``(gamma, kappa)`` of the upper overshoot for a built-in channel."""
    if family.kind == EXPONENTIAL:
        return 1.0 / (1.0 + family.theta), float(family.theta)
    if family.kind == GAUSSIAN:
        th = family.theta
        s_gamma, s_kappa = _gaussian_series(th)
        gamma = math.exp(-2.0 * s_gamma) / (0.5 * th * th)
        kappa = 1.0 + th * th / 4.0 - th * s_kappa
        return gamma, kappa
    raise DomainError(f"no overshoot constants for {family.kind} channels (arithmetic walk)")


def ladder_mean_overshoot(second_moment, drift, neg_part_mean, bc, tol=SERIES_TERM_TOL):
    """Mean limiting overshoot of a walk with positive drift.

    ``kappa = E[W^2] / (2 E[W]) - sum_n E[S_n^-] / n``, where
    ``neg_part_mean(n)`` returns ``E[S_n^-]`` for an integer array ``n``.
    """
    N = _series_length(bc, tol * (math.e / 2))
    n = np.arange(1, N + 1)
    terms = np.asarray(neg_part_mean(n), dtype=float) / n
    return second_moment / (2.0 * drift) - math.fsum(terms)


def _exponential_lower(theta: float):
    """``kappa0`` for the exponential channel: overshoot of ``-Z`` under the null."""
    a = theta / (1.0 + theta)
    b = math.log1p(theta)
    mu = b - a

    def neg_part(n):
        # S_n = n b - a G_n with G_n ~ Gamma(n, 1); S_n^- = a (G_n - n b / a)^+
        k = n * b / a
        return a * (n * special.gammaincc(n + 1, k) - k * special.gammaincc(n, k))

    bc = 2.0 * math.sqrt(1.0 + theta) / (2.0 + theta)
    return ladder_mean_overshoot(a * a + mu * mu, mu, neg_part, bc)


def _exponential_upper_series(theta: float):
    """Series route to the upper ``kappa``; equals ``theta`` (used as a self-check)."""
    b = math.log1p(theta)
    mu = theta - b

    def neg_part(n):
        # S_n = Y - n b, Y ~ Gamma(n, scale theta); S_n^- = (n b - Y)^+
        k = n * b
        u = k / theta
        return k * special.gammainc(n, u) - n * theta * special.gammainc(n + 1, u)

    bc = 2.0 * math.sqrt(1.0 + theta) / (2.0 + theta)
    return ladder_mean_overshoot(theta * theta + mu * mu, mu, neg_part, bc)


# ------------------------------------------------------------- L-number series

def _term_probabilities(ch, n):
    """``P_0(Z_n > 0)`` and ``P_i(Z_n <= 0)`` for integer array ``n``."""
    if ch.kind == GAUSSIAN:
        p = stats.norm.sf(0.5 * ch.theta * np.sqrt(n))
        return p, p
    if ch.kind == EXPONENTIAL:
        th = ch.theta
        a = th / (1.0 + th)
        k = n * math.log1p(th) / a
        return special.gammaincc(n, k), special.gammainc(n, k / (1.0 + th))
    up, down = ch.steps
    # Z_n = A up + (n - A) down with A ~ Bin(n, p) ones; Z_n > 0 is a condition on A
    t = n * (-down) / (up - down)
    t_round = np.round(t)
    t = np.where(np.abs(t - t_round) < 1e-9, t_round, t)
    if up > 0:
        k = np.floor(t)  # Z_n > 0  <=>  A > t  <=>  A >= floor(t) + 1
        return stats.binom.sf(k, n, ch.p0), stats.binom.cdf(k, n, ch.p1)
    k = np.ceil(t) - 1  # Z_n > 0  <=>  A < t  <=>  A <= ceil(t) - 1
    return stats.binom.cdf(k, n, ch.p0), stats.binom.sf(k, n, ch.p1)


def l_number_series(suite: ModelSuite, i: int, tol: float = 1e-6, reps: int = 200_000, rng=None) -> float:
    """``L_i = exp(-sum_n [P_0(Z_n > 0) + P_i(Z_n <= 0)] / n)``.

    Terms are added until the current one and the certified tail are both
    below ``tol``.  Generic models estimate each probability by Monte Carlo
    on ``reps`` shared paths per hypothesis.
    """
    ch = _channel(suite, i)
    bc = bhattacharyya(suite, i)
    if ch is None:
        return _generic_l_number(suite, i, tol, reps, rng, bc)
    total = 0.0
    start = 1
    while start <= N_MAX:
        n = np.arange(start, min(start + _CHUNK, N_MAX + 1))
        p0, pi = _term_probabilities(ch, n)
        terms = (p0 + pi) / n
        tails = 2.0 * bc ** (n + 1.0) / ((n + 1.0) * (1.0 - bc))
        done = np.flatnonzero((terms < tol) & (tails < tol))
        if done.size:
            total += math.fsum(terms[: done[0] + 1])
            return math.exp(-total)
        total += math.fsum(terms)
        start = n[-1] + 1
    raise NumericError(f"L-number series tail above {tol} after {N_MAX} terms", achieved=float(tails[-1]))


def _generic_l_number(suite, i, tol, reps, rng, bc):
    rng = np.random.default_rng(rng)
    g = suite.generic
    n_needed = _series_length(bc, tol / 2) if bc < 1 else N_MAX + 1
    if n_needed > N_MAX:
        raise NumericError("L-number tail bound unattainable within term budget", achieved=None)
    z0 = np.zeros(reps)
    zi = np.zeros(reps)
    total = 0.0
    for n in range(1, n_needed + 1):
        z0 += suite.loglr_matrix(np.asarray(g.samplers[0](rng, reps)).reshape(reps, -1))[:, i - 1]
        zi += suite.loglr_matrix(np.asarray(g.samplers[i](rng, reps)).reshape(reps, -1))[:, i - 1]
        total += (np.mean(z0 > 0) + np.mean(zi <= 0)) / n
    return math.exp(-total)


# ------------------------------------------------------------ Monte Carlo

def _increment_sampler(suite: ModelSuite, i: int, truth: int):
    if suite.is_multichannel:
        ch = suite.channels[i - 1]
        signal = truth == i
        return lambda rng, n: ch.loglr(ch.transform(ch.standard_draw(rng, n), signal))
    return lambda rng, n: suite.loglr_matrix(suite.sample_paths(np.full(n, truth), rng))[:, i - 1]


def overshoot_mc(suite: ModelSuite, i: int, c: float, reps: int, side: str = "upper", rng=None) -> OvershootEstimate:
    """Empirical overshoot of ``Z^i`` over ``c`` (``upper``, under ``P_i``) or
    below ``-c`` (``lower``, under ``P_0``)."""
    _check_index(suite, i)
    if c <= 0:
        raise DomainError("boundary level must be positive")
    if reps < 1000:
        raise DomainError("overshoot_mc needs reps >= 1000")
    if side not in ("upper", "lower"):
        raise DomainError(f"side must be 'upper' or 'lower', got {side!r}")
    rng = np.random.default_rng(rng)
    draw = _increment_sampler(suite, i, i if side == "upper" else 0)
    sign = 1.0 if side == "upper" else -1.0
    z = np.zeros(reps)
    over = np.empty(reps)
    active = np.arange(reps)
    while active.size:
        z[active] += sign * draw(rng, active.size)
        hit = z[active] >= c
        done = active[hit]
        over[done] = z[done] - c
        active = active[~hit]
    e = np.exp(-over)
    return OvershootEstimate(
        values=over,
        gamma_hat=float(e.mean()),
        kappa_hat=float(over.mean()),
        gamma_se=float(e.std(ddof=1) / math.sqrt(reps)),
        kappa_se=float(over.std(ddof=1) / math.sqrt(reps)),
        c=float(c),
    )


# --------------------------------------------------------------- assembly

def _builtin_constants(ch):
    if ch.kind == TWO_POINT:
        raise DomainError("renewal constants are undefined for arithmetic (two-point) channels")
    suite = ModelSuite.multichannel([ch])
    I, I0 = kl_numbers(suite, 1)
    gamma, kappa = overshoot_constants_closed(ch)
    if ch.kind == GAUSSIAN:
        return I, I0, gamma, gamma, kappa, kappa, gamma * I
    L = l_number_series(suite, 1, tol=1e-12)
    return I, I0, gamma, L / I0, kappa, _exponential_lower(ch.theta), L


def renewal_constants(suite: ModelSuite, reps: int = 100_000, rng=None) -> RenewalConstants:
    """All constants for every alternative of ``suite``.

    Generic models: ``L`` from the Monte Carlo series, ``gamma = L/I`` and
    ``gamma0 = L/I0``, ``kappa``/``kappa0`` from overshoot simulation at
    ``c = 50 max(1, I)``, checked for stability against ``2c``.
    """
    rows = []
    if suite.is_multichannel:
        rows = [_builtin_constants(ch) for ch in suite.channels]
        theta = np.array([getattr(ch, "theta", np.nan) for ch in suite.channels])
    else:
        rng = np.random.default_rng(rng)
        for i in range(1, suite.K + 1):
            I, I0 = kl_numbers(suite, i)
            L = l_number_series(suite, i, rng=rng)
            kap = []
            for side, drift in (("upper", I), ("lower", I0)):
                c = 50.0 * max(1.0, drift)
                a = overshoot_mc(suite, i, c, reps, side, rng)
                b = overshoot_mc(suite, i, 2 * c, reps, side, rng)
                if abs(a.kappa_hat - b.kappa_hat) > 3 * math.hypot(a.kappa_se, b.kappa_se):
                    warnings.warn(f"overshoot mean for alternative {i} ({side}) not stable under doubling c")
                kap.append(a.kappa_hat)
            rows.append((I, I0, L / I, L / I0, kap[0], kap[1], L))
        theta = None
    cols = np.array(rows, dtype=float).T
    return RenewalConstants(I=cols[0], I0=cols[1], gamma=cols[2], gamma0=cols[3],
                            kappa=cols[4], kappa0=cols[5], L=cols[6], theta=theta)


def order_alternatives(constants: RenewalConstants, rtol: float = 1e-9):
    """Alternatives (1-based) sorted by ``I0`` ascending, and the multiplicity
    ``r`` of the minimum (ties at relative tolerance ``rtol``)."""
    I0 = np.asarray(constants.I0)
    order = np.argsort(I0, kind="stable")
    m = I0[order[0]]
    r = int(np.sum(np.abs(I0 - m) <= rtol * abs(m)))
    return [int(k) + 1 for k in order], r
