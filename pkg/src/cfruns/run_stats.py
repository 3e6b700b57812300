"""Streaming longest-run statistics.

``L_n(m)`` is the longest block of consecutive ``m`` among the first ``n``
symbols and ``R_n`` is the longest block of any single symbol.  A
:class:`RunState` holds one counter per distinct symbol seen, so memory is
independent of ``n``.  Chunks can be consumed symbol by symbol or as
run-length encoded numpy arrays; both routes give identical states.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
from dataclasses import dataclass, field
from typing import Dict, Iterable, Iterator, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .errors import StreamEnded


@dataclass
class RunState:
    n: int = 0
    current_symbol: Optional[int] = None
    current_len: int = 0
    best_per_symbol: Dict[int, int] = field(default_factory=dict)
    best_overall: int = 0
    best_symbol: Optional[int] = None

    def copy(self) -> "RunState":
        return RunState(self.n, self.current_symbol, self.current_len,
                        dict(self.best_per_symbol), self.best_overall, self.best_symbol)

    def _record(self, symbol, length: int) -> None:
        if length > self.best_per_symbol.get(symbol, 0):
            self.best_per_symbol[symbol] = length
            if length > self.best_overall:
                self.best_overall = length
                self.best_symbol = symbol
            elif length == self.best_overall and symbol < self.best_symbol:
                self.best_symbol = symbol

    def update(self, symbol) -> "RunState":
        """Consume one symbol in place and return ``self``."""
        self.n += 1
        if symbol == self.current_symbol:
            self.current_len += 1
        else:
            self.current_symbol = symbol
            self.current_len = 1
        self._record(symbol, self.current_len)
        return self

    def extend(self, symbols: Iterable) -> "RunState":
        for s in symbols:
            self.update(s)
        return self

    def feed_runs(self, values: np.ndarray, lengths: np.ndarray) -> "RunState":
        """Consume a chunk given as its run-length encoding."""
        if len(values) == 0:
            return self
        lengths = np.asarray(lengths, dtype=np.int64)
        self.n += int(lengths.sum())
        first = values[0]
        if first == self.current_symbol:
            lengths = lengths.copy()
            lengths[0] += self.current_len
        tail_symbol, tail_len = values[-1], int(lengths[-1])
        uniq, inverse = np.unique(values, return_inverse=True)
        longest = np.zeros(len(uniq), dtype=np.int64)
        np.maximum.at(longest, inverse, lengths)
        # ascending symbol order gives the smallest-symbol tie rule for free
        for sym, length in zip(uniq.tolist(), longest.tolist()):
            self._record(sym, length)
        self.current_symbol = _plain(tail_symbol)
        self.current_len = tail_len
        return self

    def feed(self, chunk) -> "RunState":
        """Consume a chunk of symbols (any sequence; numpy arrays are fastest)."""
        values, lengths = run_lengths(chunk)
        return self.feed_runs(values, lengths)

    def longest(self, symbol) -> int:
        return self.best_per_symbol.get(symbol, 0)

    @property
    def R(self) -> int:
        return self.best_overall


def _plain(x):
    return x.item() if isinstance(x, np.generic) else x


def as_array(symbols) -> np.ndarray:
    """int64 array if every symbol fits, otherwise an object array of ints."""
    if isinstance(symbols, np.ndarray):
        return symbols
    try:
        return np.asarray(symbols, dtype=np.int64)
    except OverflowError:
        return np.asarray([int(s) for s in symbols], dtype=object)


def run_lengths(chunk) -> Tuple[np.ndarray, np.ndarray]:
    arr = as_array(chunk)
    if arr.size == 0:
        return arr, np.zeros(0, dtype=np.int64)
    breaks = np.flatnonzero(arr[1:] != arr[:-1]) + 1
    starts = np.concatenate(([0], breaks))
    lengths = np.diff(np.concatenate((starts, [arr.size])))
    return arr[starts], lengths


def update(s: RunState, symbol) -> RunState:
    return s.update(symbol)


def longest_run_fixed(w: Iterable[int], m: int) -> int:
    best = cur = 0
    for d in w:
        if d == m:
            cur += 1
            if cur > best:
                best = cur
        else:
            cur = 0
    return best


def longest_run_max(w: Iterable[int]) -> Tuple[int, Optional[int]]:
    """``(R_n, symbol)`` with the smallest symbol attaining the maximum."""
    s = RunState().extend(w)
    return s.best_overall, s.best_symbol


class CheckpointRecord(NamedTuple):
    n: int
    L: int
    R: int


def checkpoint_series(stream, checkpoints: Sequence[int], tracked: int) -> List[CheckpointRecord]:
    """``(n, L_n(tracked), R_n)`` at each checkpoint, in a single pass."""
    cps = list(checkpoints)
    if any(b <= a for a, b in zip(cps, cps[1:])):
        raise ValueError("checkpoints must be strictly ascending")
    state = RunState()
    out = []
    if isinstance(stream, (np.ndarray, list, tuple)):
        arr = as_array(stream)
        prev = 0
        for n in cps:
            if n > len(arr):
                raise StreamEnded(f"stream has {len(arr)} symbols, checkpoint {n} requested")
            state.feed(arr[prev:n])
            prev = n
            out.append(CheckpointRecord(n, state.longest(tracked), state.R))
        return out
    it = iter(stream)
    for n in cps:
        chunk = list(itertools.islice(it, n - state.n))
        state.feed(chunk)
        if state.n < n:
            raise StreamEnded(f"stream ended after {state.n} symbols, checkpoint {n} requested")
        out.append(CheckpointRecord(n, state.longest(tracked), state.R))
    return out


def dyadic_checkpoints(j_min: int, j_max: int) -> List[int]:
    return [1 << j for j in range(j_min, j_max + 1)]


def series_to_csv(series: Iterable[CheckpointRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "L", "R"])
    for rec in series:
        w.writerow([rec.n, rec.L, rec.R])
    return buf.getvalue()


def series_to_json(series: Iterable[CheckpointRecord]) -> str:
    return json.dumps([rec._asdict() for rec in series])


def summary(state: RunState, symbols: Iterable[int] = ()) -> dict:
    out = {"n": state.n}
    symbols = list(symbols)
    if symbols:
        out["L"] = {str(m): state.longest(m) for m in symbols}
    out["R"] = state.R
    if state.best_symbol is not None:
        out["best_symbol"] = state.best_symbol
    return out


def iter_tokens(fp, chunk_chars: int = 1 << 20) -> Iterator[List[str]]:
    """Yield lists of whitespace-separated tokens from a text stream."""
    carry = ""
    while True:
        block = fp.read(chunk_chars)
        if not block:
            break
        block = carry + block
        tokens = block.split()
        if tokens and not block[-1].isspace():
            carry = tokens.pop()
        else:
            carry = ""
        if tokens:
            yield tokens
    if carry:
        yield [carry]
