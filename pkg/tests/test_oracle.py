import math

import numpy as np
import pytest

from mixglr import (
    DomainError,
    ModelSuite,
    NumericError,
    SimPlan,
    TestConfig,
    TwoPointChannel,
    Weights,
    bernoulli_oracle,
    exponential_suite,
    run_mc,
    wald_ruin,
)
from mixglr.oracle import symmetric_lattice_config
from mixglr.sequential import MILRT, WGLRT


def test_symmetric_walk_has_equal_errors():
    ch = TwoPointChannel(0.35, 0.65)
    res = bernoulli_oracle(ModelSuite.multichannel([ch]), symmetric_lattice_config(ch, 4, 4))
    assert res.type1 == pytest.approx(res.type2[0], abs=1e-13)
    assert res.ess[0] == pytest.approx(res.ess[1], rel=1e-12)


@pytest.mark.parametrize("m,n", [(3, 5), (6, 2), (7, 7)])
def test_matches_gamblers_ruin(m, n):
    ch = TwoPointChannel(0.42, 0.58)
    res = bernoulli_oracle(ModelSuite.multichannel([ch]), symmetric_lattice_config(ch, m, n))
    p0, e0 = wald_ruin(0.42, m, n)
    p1, e1 = wald_ruin(0.58, m, n)
    assert abs(res.type1 - p0) <= 1e-12
    assert abs(res.type2[0] - (1 - p1)) <= 1e-12
    assert res.ess[0] == pytest.approx(e0, rel=1e-9)
    assert res.ess[1] == pytest.approx(e1, rel=1e-9)
    assert np.all(res.residual < 1e-12)


def test_fair_walk():
    assert wald_ruin(0.5, 3, 7) == (0.7, 21.0)


def test_two_channel_against_monte_carlo():
    suite = ModelSuite.multichannel([TwoPointChannel(0.3, 0.5), TwoPointChannel(0.3, 0.6)])
    cfg = TestConfig(WGLRT, 2.5, 2.5, Weights([0.5, 0.6]), Weights([1.0, 0.8]))
    res = bernoulli_oracle(suite, cfg)
    for h in range(3):
        rep = run_mc(SimPlan(suite, cfg, h, 50_000, seed=h))
        p = rep.decision_freq[1]
        se = math.sqrt(res.accept1[h] * (1 - res.accept1[h]) / 50_000)
        assert abs(p - res.accept1[h]) < 4 * se
        assert abs(rep.ess_mean - res.ess[h]) < 4 * rep.ess_stderr


def test_oracle_rejects_bad_input():
    with pytest.raises(DomainError):
        bernoulli_oracle(exponential_suite([1.0]), TestConfig.sprt(1, 1, 1.0, 1.0))
    tp = ModelSuite.multichannel([TwoPointChannel(0.3, 0.6)] * 4)
    with pytest.raises(DomainError):
        bernoulli_oracle(tp, TestConfig(MILRT, 1.0, 1.0, Weights.uniform(4), Weights.uniform(4)))
    with pytest.raises(DomainError):
        symmetric_lattice_config(TwoPointChannel(0.3, 0.6), 2, 2)


def test_state_budget_is_enforced():
    suite = ModelSuite.multichannel([TwoPointChannel(0.49, 0.51)] * 2)
    cfg = TestConfig(MILRT, 8.0, 8.0, Weights.uniform(2), Weights.uniform(2))
    with pytest.raises(NumericError):
        bernoulli_oracle(suite, cfg, max_states=500)
