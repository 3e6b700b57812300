"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v -s``; the Gauss Monte
Carlo check dominates the runtime (a few minutes on one core).
"""

import io
import itertools
import json
import math
import random
import sys
import time

import numpy as np
import pytest

from cfruns.cf_engine import Convergent
from cfruns.cli import main
from cfruns.envelope import CheckpointSchedule, ratio_law_report, run_experiment
from cfruns.gauss_model import (centering, check_assumption2, check_assumption3,
                                growth_constants, tau_bracket)
from cfruns.process_lab import (ProcessSpec, brute_force_distribution, derive_params,
                                iid_longest_run_cdf, marginal_L)
from cfruns.run_stats import RunState

PI_DIGITS = [7, 15, 1, 292, 1, 1, 1, 2, 1, 3, 1, 14, 2, 1, 1, 2, 2, 2, 2, 1,
             84, 2, 1, 1, 15, 3, 13, 1, 4, 2]
PHI = (1 + math.sqrt(5)) / 2


@pytest.fixture
def verdict(capsys):
    def emit(number: int, ok: bool, detail: str) -> None:
        with capsys.disabled():
            print(f"\nCRITERION {number}: {'PASS' if ok else 'FAIL'} - {detail}")
        assert ok, detail
    return emit


def test_criterion_1_worked_example(capsys, monkeypatch, verdict):
    t0 = time.perf_counter()
    code = main(["expand", "--const", "pi-minus-3", "--count", "30"])
    line = capsys.readouterr().out.strip()
    digits = [int(t) for t in line.split()]
    monkeypatch.setattr(sys, "stdin", io.StringIO(line + "\n"))
    main(["runstats", "--symbol", "1", "--symbol", "2"])
    stats = json.loads(capsys.readouterr().out)
    elapsed = time.perf_counter() - t0
    ok = (code == 0 and digits == PI_DIGITS and stats["L"] == {"1": 3, "2": 4}
          and stats["R"] == 4 and elapsed < 1.0)
    verdict(1, ok, f"digits match={digits == PI_DIGITS}, L1={stats['L']['1']}, "
                   f"L2={stats['L']['2']}, R={stats['R']}, {elapsed:.3f}s")


def test_criterion_2_constant_word_bounds(verdict):
    t0 = time.perf_counter()
    checked = passed = 0
    worst_err = 0.0
    for lam in range(1, 11):
        report = check_assumption2(lam, 40)
        for row in report.rows:
            lower, meas, upper = row["enclosures"]
            err = float(max(meas.hi - meas.lo, lower.hi - lower.lo, upper.hi - upper.lo))
            worst_err = max(worst_err, err)
            checked += 1
            passed += bool(row["pass"]) and err <= 1e-20
    elapsed = time.perf_counter() - t0
    ok = checked == 400 and passed == 400 and elapsed < 10
    verdict(2, ok, f"{passed}/{checked} double inequalities, widest enclosure {worst_err:.1e}, "
                   f"{elapsed:.2f}s")


def test_criterion_3_summed_bound(verdict):
    t0 = time.perf_counter()
    report = check_assumption3(40, 10**5)
    elapsed = time.perf_counter() - t0
    stated = all(r["pass"] for r in report.rows)
    proof = all(r["pass_proof"] for r in report.rows if r["k"] >= 2)
    ok = len(report.rows) == 40 and stated and proof and elapsed < 60
    verdict(3, ok, f"stated bound {sum(r['pass'] for r in report.rows)}/40, sharper bound "
                   f"{sum(bool(r['pass_proof']) for r in report.rows[1:])}/39, {elapsed:.1f}s")


def _definitional(words: np.ndarray, m: int) -> np.ndarray:
    # L(m) = largest l such that some length-l window is entirely m
    hit = words == m
    n = words.shape[1]
    best = np.zeros(len(words), dtype=np.int64)
    window = hit.copy()
    for length in range(1, n + 1):
        if length > 1:
            window = window[:, :-1] & hit[:, length - 1:]
        best[window.any(axis=1)] = length
    return best


def test_criterion_4_oracle_equivalence(verdict):
    t0 = time.perf_counter()
    mismatches = 0
    total = 0
    for n in range(1, 13):
        words = np.array(list(itertools.product((1, 2, 3), repeat=n)), dtype=np.int64)
        ref = np.stack([_definitional(words, m) for m in (1, 2, 3)], axis=1)
        ref_r = ref.max(axis=1)
        ref_sym = ref.argmax(axis=1) + 1  # argmax takes the first, i.e. smallest, symbol
        for i, w in enumerate(words.tolist()):
            s = RunState().extend(w)
            if (s.longest(1), s.longest(2), s.longest(3)) != tuple(ref[i]) \
                    or s.R != ref_r[i] or s.best_symbol != ref_sym[i]:
                mismatches += 1
        total += len(words)
    worst = 0.0
    for p in (0.2, 0.5, 0.8):
        for n in range(1, 13):
            law = marginal_L(brute_force_distribution([1, 2], [p, 1 - p], n, m_star=1))
            for k in range(1, n + 2):
                brute = sum(w for l, w in law.items() if l < k)
                worst = max(worst, abs(brute - iid_longest_run_cdf(p, n, k)))
    elapsed = time.perf_counter() - t0
    ok = mismatches == 0 and total == sum(3**n for n in range(1, 13)) and worst < 1e-10 \
        and elapsed < 300
    verdict(4, ok, f"{total} words, {mismatches} mismatches; max |DP - enumeration| = "
                   f"{worst:.1e}; {elapsed:.1f}s")


def test_criterion_5_iid_calibration(verdict):
    t0 = time.perf_counter()
    spec = ProcessSpec("iid", seed=5, alphabet=(1, 2), probs=(0.5, 0.5))
    params = derive_params(spec)
    samples = 500
    report = run_experiment(spec, params, CheckpointSchedule(4, 16), samples)
    k_plus = report.k_plus[-1]
    p = 1 - iid_longest_run_cdf(0.5, 2**16, k_plus)
    emp = report.tail_frequency()[-1]
    se_tail = math.sqrt(p * (1 - p) / samples)
    n_j = report.N[:, -1]
    expected = report.block_expectation()[-1]
    se_n = n_j.std(ddof=1) / math.sqrt(samples)
    elapsed = time.perf_counter() - t0
    ok_tail = abs(emp - p) <= 3 * se_tail
    ok_n = abs(n_j.mean() - expected) <= 3 * se_n
    ok = ok_tail and ok_n and elapsed < 300
    verdict(5, ok, f"P(L >= {k_plus}): empirical {emp:.4f} vs exact {p:.4f} (3se={3 * se_tail:.4f}); "
                   f"mean N_j {n_j.mean():.3f} vs M_j p_j {expected:.3f} (3se={3 * se_n:.3f}); "
                   f"{elapsed:.1f}s")


def test_criterion_6_gauss_envelopes(verdict):
    t0 = time.perf_counter()
    spec = ProcessSpec("gauss-cf", seed=20240602)
    params = derive_params(spec, tracked=1)
    report = run_experiment(spec, params, CheckpointSchedule(4, 20), 100, tracked=1)
    ratio = ratio_law_report(report)
    mean_l, mean_r = ratio["L"]["mean"][-1], ratio["R"]["mean"][-1]
    cov_l, cov_r = report.coverage("L"), report.coverage("R")
    grid = sorted(cov_l)
    monotone = all(cov[a][i] <= cov[b][i]
                   for cov in (cov_l, cov_r) for a, b in zip(grid, grid[1:])
                   for i in range(len(report.ns)))
    elapsed = time.perf_counter() - t0
    ok = (0.4 <= mean_l <= 0.6 and 0.4 <= mean_r <= 0.6 and cov_l[1.5][-1] >= 0.95
          and cov_r[1.5][-1] >= 0.95 and monotone and elapsed < 900)
    verdict(6, ok, f"mean ratios L={mean_l:.4f} R={mean_r:.4f}; coverage(c=1.5) "
                   f"L={cov_l[1.5][-1]:.2f} R={cov_r[1.5][-1]:.2f}; monotone in c={monotone}; "
                   f"{elapsed:.0f}s")


def test_criterion_7_identities(verdict):
    t0 = time.perf_counter()
    worst_b = 0.0
    rhos = [math.sqrt(2), PHI] + [float(growth_constants(lam).tau) for lam in (2, 3, 10, 1000)]
    for rho in rhos:
        for j in range(4, 21):
            n = 2**j
            worst_b = max(worst_b, abs(rho ** (-2 * centering(n, rho)) * n - 1))
    # tau^2 = lam tau + 1 at both ends of a certified bracket, in exact integers
    bad_tau = 0
    for lam in range(1, 10**6 + 1):
        lo, hi, den = tau_bracket(lam)
        d2 = den * den
        for t in (lo, hi):
            if abs(t * t - lam * t * den - d2) * 10**25 >= d2:
                bad_tau += 1
    rng = random.Random(7)
    bad_det = 0
    for _ in range(10**4):
        w = [rng.randint(1, 1000) for _ in range(rng.randint(1, 60))]
        c = Convergent.of(w)
        bad_det += c.determinant != (-1) ** (len(w) - 1)
    elapsed = time.perf_counter() - t0
    ok = worst_b < 1e-12 and bad_tau == 0 and bad_det == 0 and elapsed < 10
    verdict(7, ok, f"max |rho^(-2b) n - 1| = {worst_b:.1e}; tau failures {bad_tau}/10^6; "
                   f"determinant failures {bad_det}/10^4; {elapsed:.1f}s")


def test_criterion_8_determinism(tmp_path, capsys, verdict):
    outs = []
    for i, workers in enumerate((1, 2, 1)):
        out = tmp_path / f"run{i}"
        code = main(["simulate", "iid_uniform2.json", "--out", str(out), "--workers", str(workers)])
        assert code == 0
        outs.append(out)
    capsys.readouterr()
    same = all((outs[0] / f).read_bytes() == (o / f).read_bytes()
               for o in outs[1:] for f in ("report.csv", "summary.json"))
    rows = len((outs[0] / "report.csv").read_text().splitlines()) - 1
    verdict(8, same, f"3 runs (workers 1, 2, 1), report.csv ({rows} rows) and summary.json "
                     f"byte-identical={same}")
