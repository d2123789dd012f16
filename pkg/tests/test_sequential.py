import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mixglr import (
    ConfigError,
    TestConfig,
    Truncated,
    UsageError,
    Verdict,
    Weights,
    decomposition_terms,
    exponential_suite,
    new_state,
    run_on_path,
    run_to_verdict,
    sample,
    step,
)
from mixglr.sequential import MILRT, WGLRT, advance

finite = st.floats(-30, 30, allow_nan=False)
positive = st.floats(0.01, 10, allow_nan=False)


def _config(kind, K=3, log_a=3.0, log_b=4.0):
    return TestConfig(kind, log_a, log_b, Weights([0.2, 0.3, 0.5][:K]), Weights([1.0, 1.5, 2.0][:K]))


def test_weights_validation():
    with pytest.raises(ConfigError):
        Weights([1.0, 0.0])
    with pytest.raises(ConfigError):
        Weights([])
    w = Weights([1.0, 3.0])
    assert w.total == 4.0
    with pytest.raises(ValueError):
        w.q[0] = 5.0


def test_config_validation():
    with pytest.raises(ConfigError):
        TestConfig("foo", 1.0, 1.0, Weights([1.0]), Weights([1.0]))
    with pytest.raises(ConfigError):
        TestConfig(MILRT, 0.0, 1.0, Weights([1.0]), Weights([1.0]))
    with pytest.raises(ConfigError):
        TestConfig(MILRT, 1.0, 1.0, Weights([1.0]), Weights([1.0, 1.0]))
    with pytest.raises(ConfigError):
        TestConfig.sprt(2, 3, 1.0, 1.0)


@given(st.lists(finite, min_size=3, max_size=3))
def test_mixture_dominates_max(z):
    mix_up, mix_lo = _config(MILRT).statistics(np.array(z))
    max_up, max_lo = _config(WGLRT).statistics(np.array(z))
    assert mix_up >= max_up - 1e-12
    assert mix_lo >= max_lo - 1e-12
    assert mix_up <= max_up + math.log(3) + 1e-12


@given(st.lists(finite, min_size=3, max_size=3), st.integers(1, 3))
def test_decomposition_identity(z, i):
    state = new_state(_config(MILRT))
    from dataclasses import replace

    state = replace(state, z=np.array(z))
    q = Weights([1.0, 1.5, 2.0])
    for kind, stat in ((MILRT, "mixture"), (WGLRT, "max")):
        zi, lq, y = decomposition_terms(state, i, q, stat)
        up = TestConfig(kind, 1.0, 1.0, q, q).statistics(np.array(z))[0]
        assert zi + lq + y == pytest.approx(float(up), abs=1e-9)
        assert y >= 0


def test_decomposition_single_alternative():
    state = new_state(TestConfig.sprt(1, 1, 1.0, 1.0))
    assert decomposition_terms(state, 1, Weights([2.0]))[2] == 0.0


def test_tie_accepts_alternative():
    # weights chosen so one observation crosses both boundaries at once
    cfg = TestConfig(WGLRT, 1.0, 1.0, Weights([math.exp(-10), math.exp(-10)]), Weights([math.exp(10), 1.0]))
    up, lo = cfg.statistics(np.array([-5.0, -5.0]))
    assert up >= 1.0 and lo <= -1.0
    out = advance(cfg, new_state(cfg), [-5.0, -5.0])
    assert isinstance(out, Verdict) and out.d == 1


def test_step_rejects_after_stop_and_bad_support(exp3):
    cfg = _config(MILRT)
    with pytest.raises(Exception):
        step(cfg, new_state(cfg), [-1.0, 1.0, 1.0], exp3)
    from dataclasses import replace

    stopped = replace(new_state(cfg), stopped=True)
    with pytest.raises(UsageError):
        step(cfg, stopped, [1.0, 1.0, 1.0], exp3)


def test_single_alternative_mixture_equals_sprt(rng):
    suite = exponential_suite([1.0])
    X = sample(suite, 1, rng, size=500)
    sprt = TestConfig.sprt(1, 1, 3.0, 3.0)
    one = TestConfig(MILRT, 3.0, 3.0, Weights([1.0]), Weights([1.0]))
    one_max = TestConfig(WGLRT, 3.0, 3.0, Weights([1.0]), Weights([1.0]))
    a, b, c = (run_on_path(cfg, suite, X) for cfg in (sprt, one, one_max))
    assert a == b == c and a is not None


def test_run_on_path_matches_manual_stepping(exp3, rng):
    cfg = _config(MILRT)
    X = sample(exp3, 3, rng, size=400)
    z = np.cumsum(exp3.loglr_matrix(X), axis=0)
    up, lo = cfg.statistics(z)
    t = int(np.flatnonzero((up >= cfg.log_b) | (lo <= -cfg.log_a))[0])
    v = run_on_path(cfg, exp3, X)
    assert v.T == t + 1
    assert v.d == int(up[t] >= cfg.log_b)
    assert v.eta >= 0


def test_trace_and_truncation(exp3):
    cfg = TestConfig(MILRT, 200.0, 200.0, Weights.uniform(3), Weights.uniform(3))
    out = run_to_verdict(cfg, exp3, 0, 1, max_steps=5, keep_trace=True)
    assert isinstance(out, Truncated)
    assert len(out.state.trace) == 5
    v = run_to_verdict(_config(MILRT), exp3, 3, 2, keep_trace=True)
    assert isinstance(v, Verdict) and len(v.trace) == v.T


@settings(max_examples=30)
@given(positive, positive, st.integers(0, 3), st.integers(0, 10_000))
def test_verdict_respects_boundaries(log_a, log_b, truth, seed):
    cfg = _config(MILRT, log_a=log_a, log_b=log_b)
    v = run_to_verdict(cfg, exponential_suite([0.5, 1.0, 2.0]), truth, seed, max_steps=100_000)
    assert isinstance(v, Verdict) and v.T >= 1 and v.eta >= 0 and v.d in (0, 1)
