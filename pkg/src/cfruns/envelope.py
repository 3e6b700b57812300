"""Monte Carlo envelopes for longest runs, at desk scale.

Each sample path of length ``2**j_max`` is consumed once, chunk by chunk
between dyadic checkpoints.  At every checkpoint the run statistics are
recorded; the runs of the tracked symbol are kept (as start/length pairs)
so the block-trial counts for all checkpoints come out of the same pass.

Deviations are normalised: ``dev = (L - b) / (log log n / log rho)``, so an
envelope at level ``c`` is simply ``|dev| <= c``.
"""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import ScheduleTooLarge
from .gauss_model import centering, constant_word, cylinder_measure
from .process_lab import AssumptionParams, ProcessSpec, sample_path
from .run_stats import RunState, run_lengths

DEFAULT_C_GRID = (0.6, 0.75, 1.0, 1.5, 2.0)
DEFAULT_C1 = 0.75
DEFAULT_MAX_N = 1 << 24
_SNAP = 1e-9


def _snap(x: float) -> float:
    # thresholds are often exact integers (rho = sqrt 2, n = 2^j); keep float
    # noise from pushing floor/ceil across them
    r = round(x)
    return float(r) if abs(x - r) <= _SNAP * max(1.0, abs(x)) else x


def snapped_floor(x: float) -> int:
    return math.floor(_snap(x))


def snapped_ceil(x: float) -> int:
    return math.ceil(_snap(x))


@dataclass(frozen=True)
class CheckpointSchedule:
    j_min: int = 4
    j_max: int = 20

    def __post_init__(self):
        if self.j_min < 2:
            raise ValueError("j_min must be at least 2 so that log log n > 0")
        if self.j_max < self.j_min:
            raise ValueError("schedule is empty")

    @property
    def js(self) -> List[int]:
        return list(range(self.j_min, self.j_max + 1))

    @property
    def ns(self) -> List[int]:
        return [1 << j for j in self.js]

    def k_minus(self, j: int, rho: float, c1: float = DEFAULT_C1) -> int:
        b = centering(1 << j, rho)
        return max(0, snapped_floor(b - c1 * math.log(j) / math.log(rho)))

    def k_plus(self, j: int, rho: float, c1: float = DEFAULT_C1) -> int:
        b = centering(1 << j, rho)
        return snapped_ceil(b + c1 * math.log(j) / math.log(rho))


@dataclass(frozen=True)
class BlockTrialConfig:
    """Gap-separated windows at dyadic level ``j``."""

    j: int
    k: int
    gap: int
    length: int
    trials: int

    @classmethod
    def build(cls, j: int, k_minus: int, theta: float) -> "BlockTrialConfig":
        n = 1 << j
        gap = max(1, snapped_ceil(-math.log(n) / math.log(theta)))
        length = k_minus + gap
        return cls(j, k_minus, gap, length, n // length)

    def offsets(self) -> np.ndarray:
        return np.arange(self.trials, dtype=np.int64) * self.length


def block_configs(params: AssumptionParams, schedule: CheckpointSchedule,
                  c1: float = DEFAULT_C1) -> List[BlockTrialConfig]:
    return [BlockTrialConfig.build(j, schedule.k_minus(j, params.rho, c1), params.theta)
            for j in schedule.js]


def _count_in_runs(starts: np.ndarray, lengths: np.ndarray, cfg: BlockTrialConfig) -> int:
    """Windows ``[r*l, r*l + k)``, ``r < M``, lying inside one of the runs."""
    if cfg.trials == 0:
        return 0
    if cfg.k == 0:
        return cfg.trials
    ends = starts + lengths
    first = -(-starts // cfg.length)
    last = np.minimum((ends - cfg.k) // cfg.length, cfg.trials - 1)
    return int(np.clip(last - first + 1, 0, None).sum())


def block_trial_counts(path, params: AssumptionParams, schedule: CheckpointSchedule,
                       blockcfg: Optional[Sequence[BlockTrialConfig]] = None) -> List[int]:
    """``N_j`` for each checkpoint: trials whose window is all ``m_star``."""
    arr = np.asarray(path)
    if len(arr) < schedule.ns[-1]:
        raise ValueError("path is shorter than the last checkpoint")
    cfgs = blockcfg if blockcfg is not None else block_configs(params, schedule)
    values, lengths = run_lengths(arr)
    starts = np.concatenate(([0], np.cumsum(lengths)[:-1]))
    hit = values == params.m_star
    return [_count_in_runs(starts[hit], lengths[hit], c) for c in cfgs]


def success_probability(spec: ProcessSpec, params: AssumptionParams, k: int) -> float:
    """``p_j``: probability that ``k`` given consecutive symbols all equal ``m_star``."""
    if k == 0:
        return 1.0
    if spec.variant == "iid":
        p = spec.probs[spec.alphabet.index(params.m_star)]
        return p ** k
    if spec.variant == "markov":
        i = spec.alphabet.index(params.m_star)
        return spec.initial[i] * spec.matrix[i][i] ** (k - 1)
    return float(cylinder_measure(constant_word(params.m_star, k)))


@dataclass
class SampleResult:
    index: int
    L: List[int]
    R: List[int]
    N: List[int]


def _run_one(args) -> SampleResult:
    spec, params, schedule, cfgs, index = args
    ns = schedule.ns
    path = sample_path(spec, ns[-1], index)
    state = RunState()
    run_starts, run_lengths_ = [], []
    L, R = [], []
    prev = 0
    for n in ns:
        values, lengths = run_lengths(path[prev:n])
        starts = prev + np.concatenate(([0], np.cumsum(lengths)[:-1]))
        hit = values == params.m_star
        run_starts.append(starts[hit])
        run_lengths_.append(lengths[hit])
        state.feed_runs(values, lengths)
        L.append(state.longest(params.m_star))
        R.append(state.R)
        prev = n
    starts = np.concatenate(run_starts)
    lens = np.concatenate(run_lengths_)
    if len(starts):
        # glue runs split by chunk boundaries
        ends = starts + lens
        new = np.concatenate(([True], starts[1:] != ends[:-1]))
        groups = np.flatnonzero(new)
        starts = starts[groups]
        lens = np.add.reduceat(lens, groups)
    N = [_count_in_runs(starts, lens, c) for c in cfgs]
    return SampleResult(index, L, R, N)


@dataclass
class EnvelopeReport:
    spec: ProcessSpec
    params: AssumptionParams
    schedule: CheckpointSchedule
    c_grid: Tuple[float, ...]
    c1: float
    blocks: List[BlockTrialConfig]
    k_plus: List[int]
    p_block: List[float]
    samples: List[SampleResult] = field(default_factory=list)

    @property
    def ns(self) -> List[int]:
        return self.schedule.ns

    def _matrix(self, attr: str) -> np.ndarray:
        return np.array([getattr(s, attr) for s in self.samples], dtype=float)

    @property
    def L(self) -> np.ndarray:
        return self._matrix("L")

    @property
    def R(self) -> np.ndarray:
        return self._matrix("R")

    @property
    def N(self) -> np.ndarray:
        return self._matrix("N")

    def _normalise(self, values: np.ndarray, rho: float) -> np.ndarray:
        ns = np.array(self.ns, dtype=float)
        b = np.array([centering(n, rho) for n in self.ns])
        scale = np.log(np.log(ns)) / math.log(rho)
        return (values - b) / scale

    @property
    def dev_L(self) -> np.ndarray:
        return self._normalise(self.L, self.params.rho)

    @property
    def dev_R(self) -> np.ndarray:
        return self._normalise(self.R, self.params.rho_R)

    def coverage(self, which: str = "L") -> Dict[float, List[float]]:
        dev = self.dev_L if which == "L" else self.dev_R
        return {c: (np.abs(dev) <= c).mean(axis=0).tolist() for c in self.c_grid}

    def ratios(self, which: str = "L") -> np.ndarray:
        rho = self.params.rho if which == "L" else self.params.rho_R
        values = self.L if which == "L" else self.R
        return values * math.log(rho) / np.log(np.array(self.ns, dtype=float))

    def tail_frequency(self) -> List[float]:
        """Empirical ``P(L_n >= k_plus)`` per checkpoint."""
        return (self.L >= np.array(self.k_plus)).mean(axis=0).tolist()

    def block_expectation(self) -> List[float]:
        return [b.trials * p for b, p in zip(self.blocks, self.p_block)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["sample", "j", "n", "L", "R", "dev_L", "dev_R", "N_j"])
        dl, dr = self.dev_L, self.dev_R
        for s_i, s in enumerate(self.samples):
            for c_i, (j, n) in enumerate(zip(self.schedule.js, self.ns)):
                w.writerow([s.index, j, n, s.L[c_i], s.R[c_i],
                            repr(float(dl[s_i, c_i])), repr(float(dr[s_i, c_i])), s.N[c_i]])
        return buf.getvalue()

    def summary(self) -> dict:
        key = lambda c: repr(float(c))
        ratio = ratio_law_report(self)
        nb = self.N
        return {
            "process": self.spec.to_dict(),
            "params": self.params.to_dict(),
            "samples": len(self.samples),
            "c1": self.c1,
            "checkpoints": [
                {"j": j, "n": n, "k_minus": b.k, "k_plus": kp, "gap": b.gap,
                 "block_length": b.length, "trials": b.trials, "p_block": p}
                for j, n, b, kp, p in zip(self.schedule.js, self.ns, self.blocks,
                                          self.k_plus, self.p_block)
            ],
            "coverage": {
                "L": {key(c): v for c, v in self.coverage("L").items()},
                "R": {key(c): v for c, v in self.coverage("R").items()},
            },
            "ratio": ratio,
            "block_trials": {
                "mean": nb.mean(axis=0).tolist(),
                "expected": self.block_expectation(),
                "stderr": (nb.std(axis=0, ddof=1) / math.sqrt(len(nb))).tolist()
                if len(nb) > 1 else None,
            },
            "tail_frequency": self.tail_frequency(),
        }

    def summary_json(self) -> str:
        return json.dumps(self.summary(), indent=2, sort_keys=True) + "\n"


def run_experiment(spec: ProcessSpec, params: AssumptionParams,
                   schedule: CheckpointSchedule = CheckpointSchedule(),
                   samples: int = 100, c_grid: Sequence[float] = DEFAULT_C_GRID,
                   tracked: Optional[int] = None, c1: float = DEFAULT_C1,
                   workers: int = 1, max_n: int = DEFAULT_MAX_N) -> EnvelopeReport:
    """Sample ``samples`` paths and record the envelope statistics.

    ``tracked`` defaults to ``params.m_star``; when given it overrides it.
    Results are ordered by sample index whatever the worker count.
    """
    if samples < 1:
        raise ValueError("samples must be positive")
    grid = tuple(float(c) for c in c_grid)
    if not grid or any(c <= 0 for c in grid) or list(grid) != sorted(set(grid)):
        raise ValueError("c_grid must be strictly ascending positive reals")
    if any(c <= 0.5 for c in grid):
        warnings.warn("envelopes are only asserted for c > 1/2", stacklevel=2)
    if schedule.ns[-1] > max_n:
        raise ScheduleTooLarge(f"n = 2^{schedule.j_max} exceeds the budget {max_n}")
    if tracked is not None and tracked != params.m_star:
        params = AssumptionParams(**{**params.to_dict(), "m_star": tracked})
    cfgs = block_configs(params, schedule, c1)
    report = EnvelopeReport(
        spec, params, schedule, grid, c1, cfgs,
        [schedule.k_plus(j, params.rho, c1) for j in schedule.js],
        [success_probability(spec, params, b.k) for b in cfgs],
    )
    jobs = [(spec, params, schedule, cfgs, i) for i in range(samples)]
    if workers <= 1:
        report.samples = [_run_one(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            report.samples = list(pool.map(_run_one, jobs))
    return report


def ratio_law_report(report: EnvelopeReport) -> dict:
    """Per-checkpoint mean and spread of the first-order ratios, with trend flags."""
    out = {"n": report.ns}
    for which in ("L", "R"):
        r = report.ratios(which)
        mean = r.mean(axis=0)
        sd = r.std(axis=0, ddof=1) if len(r) > 1 else np.zeros_like(mean)
        dist = np.abs(mean - 0.5)
        tail = dist[-3:]
        trend = bool(len(tail) == 3 and tail[0] >= tail[1] >= tail[2])
        out[which] = {"mean": mean.tolist(), "sd": sd.tolist(), "trend": trend}
    return out
