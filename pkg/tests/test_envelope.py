import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cfruns.envelope import (BlockTrialConfig, CheckpointSchedule, block_configs,
                             block_trial_counts, ratio_law_report, run_experiment,
                             snapped_ceil, snapped_floor, success_probability)
from cfruns.errors import ScheduleTooLarge
from cfruns.gauss_model import centering
from cfruns.process_lab import AssumptionParams, ProcessSpec, derive_params, iid_longest_run_cdf

UNIFORM = ProcessSpec("iid", seed=31, probs=(0.5, 0.5))
ROOT2 = math.sqrt(2)


def test_schedule_thresholds_handle_exact_integers():
    s = CheckpointSchedule(4, 16)
    # at rho = sqrt 2, j = 16: b = 16 and c1 log j / log rho = 6 exactly
    assert s.k_plus(16, ROOT2) == 22 and s.k_minus(16, ROOT2) == 10
    assert s.k_minus(4, ROOT2) == 1
    for j in s.js:
        assert s.k_minus(j, ROOT2) <= s.k_plus(j, ROOT2)
    assert s.ns == [2**j for j in s.js]
    with pytest.raises(ValueError):
        CheckpointSchedule(5, 4)


def test_snapping():
    assert snapped_floor(2.9999999999999996) == 3
    assert snapped_ceil(3.0000000000000004) == 3
    assert snapped_floor(2.5) == 2 and snapped_ceil(2.5) == 3


def test_block_config_invariants():
    for j in range(4, 21):
        for theta in (0.1, 0.5, 0.9):
            b = BlockTrialConfig.build(j, 3, theta)
            assert b.gap >= 1 and b.trials * b.length <= 2**j
    b = BlockTrialConfig.build(16, 10, 0.5)
    assert (b.gap, b.length, b.trials) == (16, 26, 2520)


@given(st.floats(1.01, 10), st.integers(2, 40))
def test_centering_identity(rho, j):
    n = 2**j
    assert abs(rho ** (-2 * centering(n, rho)) * n - 1) < 1e-12


def test_block_counts_trivial_paths():
    params = derive_params(UNIFORM)
    sched = CheckpointSchedule(4, 12)
    cfgs = block_configs(params, sched)
    ones = np.ones(2**12, dtype=np.int64)
    assert block_trial_counts(ones, params, sched) == [c.trials for c in cfgs]
    twos = 2 * ones
    assert block_trial_counts(twos, params, sched) == [0] * len(cfgs)


@given(st.lists(st.integers(1, 2), min_size=2**8, max_size=2**8))
def test_block_counts_match_direct_windows(path):
    params = derive_params(UNIFORM)
    sched = CheckpointSchedule(4, 8)
    got = block_trial_counts(path, params, sched)
    arr = np.asarray(path)
    for cfg, n_j in zip(block_configs(params, sched), got):
        direct = sum(bool((arr[t:t + cfg.k] == 1).all()) for t in cfg.offsets())
        assert n_j == direct


def test_constant_process_is_flagged():
    spec = ProcessSpec("iid", probs=(1.0,))
    params = AssumptionParams(ROOT2, 1, 1.0, 1.0, 2.0, 0.0, 0.5)
    r = run_experiment(spec, params, CheckpointSchedule(4, 12), samples=3)
    assert (r.L == np.array(r.ns)).all() and (r.R == np.array(r.ns)).all()
    ns = np.array(r.ns, dtype=float)
    expected = (ns - ns * 0 - [centering(n, ROOT2) for n in r.ns]) / (np.log(np.log(ns)) / math.log(ROOT2))
    assert np.allclose(r.dev_L[0], expected)
    assert all(v[-1] == 0.0 for v in r.coverage("L").values())
    ratio = ratio_law_report(r)
    assert ratio["L"]["trend"] is False
    assert ratio["L"]["mean"][-1] > 10


def test_iid_report_properties():
    params = derive_params(UNIFORM)
    r = run_experiment(UNIFORM, params, CheckpointSchedule(4, 14), samples=60)
    for which in ("L", "R"):
        cov = r.coverage(which)
        cs = sorted(cov)
        for a, b in zip(cs, cs[1:]):
            assert all(x <= y for x, y in zip(cov[a], cov[b]))
        assert all(0 <= v <= 1 for c in cs for v in cov[c])
        assert (r.ratios(which) > 0).all()
    assert (r.L <= r.R).all()
    # N_j never exceeds the number of trials
    assert (r.N <= np.array([b.trials for b in r.blocks])).all()


def test_iid_tail_matches_exact_law():
    params = derive_params(UNIFORM)
    sched = CheckpointSchedule(4, 16)
    r = run_experiment(UNIFORM, params, sched, samples=500)
    emp = r.tail_frequency()
    for j, kp, e in zip(sched.js, r.k_plus, emp):
        p = 1 - iid_longest_run_cdf(0.5, 2**j, kp)
        se = math.sqrt(max(p * (1 - p), 1e-4) / 500)
        assert abs(e - p) <= 3 * se + 1e-12, (j, e, p)
    mean = r.N.mean(axis=0)
    se = r.N.std(axis=0, ddof=1) / math.sqrt(500)
    for m, ex, s in zip(mean, r.block_expectation(), se):
        assert abs(m - ex) <= 3 * max(s, 1e-9)


def test_success_probability_variants():
    params = derive_params(UNIFORM)
    assert success_probability(UNIFORM, params, 3) == 0.125
    assert success_probability(UNIFORM, params, 0) == 1.0
    mk = ProcessSpec("markov", matrix=((0.8, 0.2), (0.5, 0.5)))
    mp = derive_params(mk)
    assert success_probability(mk, mp, 3) == pytest.approx(mk.initial[0] * 0.64)
    g = ProcessSpec("gauss-cf")
    gp = derive_params(g, 1)
    assert success_probability(g, gp, 1) == pytest.approx(math.log2(4 / 3))


def test_errors_and_warnings():
    params = derive_params(UNIFORM)
    with pytest.raises(ScheduleTooLarge):
        run_experiment(UNIFORM, params, CheckpointSchedule(4, 30), samples=1)
    with pytest.raises(ValueError):
        run_experiment(UNIFORM, params, CheckpointSchedule(4, 6), samples=1, c_grid=(2.0, 1.0))
    with pytest.warns(UserWarning):
        run_experiment(UNIFORM, params, CheckpointSchedule(4, 6), samples=1, c_grid=(0.5, 1.0))


def test_deterministic_across_workers():
    params = derive_params(UNIFORM)
    sched = CheckpointSchedule(4, 12)
    a = run_experiment(UNIFORM, params, sched, samples=6, workers=1)
    b = run_experiment(UNIFORM, params, sched, samples=6, workers=2)
    assert a.to_csv() == b.to_csv() and a.summary_json() == b.summary_json()


def test_markov_experiment_runs():
    spec = ProcessSpec("markov", seed=3, matrix=((0.7, 0.3), (0.4, 0.6)))
    r = run_experiment(spec, derive_params(spec), CheckpointSchedule(4, 12), samples=20)
    mean = r.N.mean(axis=0)
    se = r.N.std(axis=0, ddof=1) / math.sqrt(20)
    # not independent trials, but the mean is still unbiased: M_j p_j
    for m, ex, s in zip(mean, r.block_expectation(), se):
        assert abs(m - ex) <= 4 * max(s, 0.05) + 0.1
