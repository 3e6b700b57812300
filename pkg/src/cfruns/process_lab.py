"""Symbolic processes, their assumption parameters, and exact oracles.

Three process families are supported: the continued-fraction digits of a
Gauss-distributed point (``gauss-cf``), i.i.d. symbols (``iid``) and
stationary finite Markov chains (``markov``).  Randomness comes from PCG64
generators keyed by ``SeedSequence(seed, spawn_key=(sample_index, ...))``,
so every sample path is reproducible on its own, independent of how many
other samples are drawn or in which worker.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Optional, Sequence, Tuple

import gmpy2
import numpy as np
from gmpy2 import mpq, mpz

from . import _interval as iv
from .cf_engine import CertifiedReal, expand
from .errors import AssumptionUnsatisfiable, PrecisionExhausted, TooLarge
from .gauss_model import growth_constants, sharper_sum_constant

VARIANTS = ("gauss-cf", "iid", "markov")
VARIANT_ALIASES = {"iid-with-distribution": "iid", "finite-markov": "markov"}
GAUSS_SAMPLERS = ("rejection", "inverse-cdf")
PHI = (1 + math.sqrt(5)) / 2


@dataclass(frozen=True)
class ProcessSpec:
    variant: str
    seed: int = 0
    alphabet: Tuple[int, ...] = ()
    probs: Tuple[float, ...] = ()
    tail_symbol: Optional[int] = None
    matrix: Tuple[Tuple[float, ...], ...] = ()
    initial: Tuple[float, ...] = ()
    sampler: str = "rejection"

    def __post_init__(self):
        object.__setattr__(self, "variant", VARIANT_ALIASES.get(self.variant, self.variant))
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown process variant {self.variant!r}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.variant == "iid":
            self._check_iid()
        elif self.variant == "markov":
            self._check_markov()
        elif self.sampler not in GAUSS_SAMPLERS:
            raise ValueError(f"unknown gauss sampler {self.sampler!r}")

    def _check_iid(self):
        probs = tuple(float(p) for p in self.probs)
        if not probs or any(p < 0 for p in probs):
            raise ValueError("iid probabilities must be non-negative and non-empty")
        alphabet = tuple(self.alphabet) or tuple(range(1, len(probs) + 1))
        if len(alphabet) != len(probs):
            raise ValueError("alphabet and probs differ in length")
        total = math.fsum(probs)
        if self.tail_symbol is not None:
            if total > 1 + 1e-12:
                raise ValueError("truncated probabilities exceed 1")
            if self.tail_symbol in alphabet:
                raise ValueError("tail symbol must not be listed in the alphabet")
            alphabet = alphabet + (self.tail_symbol,)
            probs = probs + (max(0.0, 1.0 - total),)
            total = math.fsum(probs)
        if abs(total - 1) > 1e-12:
            raise ValueError(f"probabilities sum to {total}, not 1")
        if len(set(alphabet)) != len(alphabet) or min(alphabet) < 1:
            raise ValueError("alphabet must be distinct positive integers")
        object.__setattr__(self, "alphabet", alphabet)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "tail_symbol", None)

    def _check_markov(self):
        P = np.asarray(self.matrix, dtype=float)
        if P.ndim != 2 or P.shape[0] != P.shape[1] or P.shape[0] == 0:
            raise ValueError("markov matrix must be square and non-empty")
        if (P < 0).any() or np.abs(P.sum(axis=1) - 1).max() > 1e-12:
            raise ValueError("markov rows must be probability vectors")
        alphabet = tuple(self.alphabet) or tuple(range(1, P.shape[0] + 1))
        if len(alphabet) != P.shape[0]:
            raise ValueError("alphabet size does not match the matrix")
        pi = np.asarray(self.initial, dtype=float) if self.initial else stationary_law(P)
        if pi.shape != (P.shape[0],) or abs(pi.sum() - 1) > 1e-12:
            raise ValueError("initial law must be a probability vector")
        if np.abs(pi @ P - pi).max() > 1e-10:
            raise ValueError("initial law is not stationary for the matrix")
        object.__setattr__(self, "alphabet", alphabet)
        object.__setattr__(self, "matrix", tuple(tuple(map(float, row)) for row in P))
        object.__setattr__(self, "initial", tuple(map(float, pi)))

    @classmethod
    def from_dict(cls, d: dict) -> "ProcessSpec":
        known = {"variant", "seed", "alphabet", "probs", "tail_symbol", "matrix", "initial", "sampler"}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown process keys: {sorted(extra)}")
        d = dict(d)
        for key in ("alphabet", "probs", "initial"):
            if key in d:
                d[key] = tuple(d[key])
        if "matrix" in d:
            d["matrix"] = tuple(tuple(r) for r in d["matrix"])
        return cls(**d)

    @classmethod
    def from_json(cls, text: str) -> "ProcessSpec":
        return cls.from_dict(json.loads(text))

    def to_dict(self) -> dict:
        d = {"variant": self.variant, "seed": self.seed}
        if self.variant == "iid":
            d.update(alphabet=list(self.alphabet), probs=list(self.probs))
        elif self.variant == "markov":
            d.update(alphabet=list(self.alphabet), matrix=[list(r) for r in self.matrix],
                     initial=list(self.initial))
        else:
            d["sampler"] = self.sampler
        return d


@dataclass(frozen=True)
class AssumptionParams:
    rho: float
    m_star: int
    c_minus: float
    c_plus: float
    C_1: float
    C_0: float
    theta: float
    # rho for which the summed bound over all symbols holds; the maximised
    # statistic is centred with it.  Defaults to ``rho``.
    rho_max: Optional[float] = None
    notes: Dict[str, str] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not self.rho > 1:
            raise ValueError("rho must exceed 1")
        if not 0 < self.c_minus <= self.c_plus:
            raise ValueError("need 0 < c_minus <= c_plus")
        if not 0 < self.theta < 1:
            raise ValueError("theta must lie in (0, 1)")
        if self.C_0 < 0 or self.C_1 <= 0:
            raise ValueError("need C_0 >= 0 and C_1 > 0")
        if self.rho_max is not None and not self.rho_max > 1:
            raise ValueError("rho_max must exceed 1")

    @property
    def rho_R(self) -> float:
        return self.rho if self.rho_max is None else self.rho_max

    def to_dict(self) -> dict:
        return {"rho": self.rho, "m_star": self.m_star, "c_minus": self.c_minus,
                "c_plus": self.c_plus, "C_1": self.C_1, "C_0": self.C_0,
                "theta": self.theta, "rho_max": self.rho_max, "notes": dict(self.notes)}


# -- randomness -------------------------------------------------------------

def seed_sequence(seed: int, *key: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=seed, spawn_key=tuple(key))


def generator(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed_sequence(seed, *key)))


class BitSource:
    """Uniform random bits, extended lazily and never revised.

    Bytes are drawn in blocks of 64, 128, 256, ... bytes, so the bit string
    is the same however far (and in whatever steps) it is extended.
    """

    def __init__(self, ss: np.random.SeedSequence):
        self._gen = np.random.Generator(np.random.PCG64(ss))
        self._value = mpz(0)
        self._nbits = 0
        self._block = 64

    def prefix(self, bits: int) -> mpz:
        """The first ``bits`` bits as an integer in ``[0, 2**bits)``."""
        while self._nbits < bits:
            raw = self._gen.bytes(self._block)
            self._value = (self._value << (8 * self._block)) | mpz(int.from_bytes(raw, "big"))
            self._nbits += 8 * self._block
            self._block *= 2
        return self._value >> (self._nbits - bits)


def _uniform_real(src: BitSource, name: str) -> CertifiedReal:
    def refine(bits: int):
        b = bits + 1
        x = src.prefix(b)
        den = mpz(1) << b
        return mpq(x, den), mpq(x + 1, den)

    lo, hi = refine(63)
    return CertifiedReal(lo, hi, refine, name)


def _rejection_gauss(seed: int, key: Tuple[int, ...]) -> CertifiedReal:
    # Accept a uniform x with probability 1/(1+x); the Gauss density is
    # proportional to 1/(1+x), so the accepted point is exactly Gauss
    # distributed.  Comparisons extend bits until decided.
    for cand in itertools.count():
        xs = BitSource(seed_sequence(seed, *key, cand, 0))
        vs = BitSource(seed_sequence(seed, *key, cand, 1))
        b = 64
        while True:
            X, V = xs.prefix(b), vs.prefix(b)
            S = mpz(1) << b
            if (V + 1) * (S + X + 1) <= S * S:
                return _uniform_real(xs, "gauss-sample")
            if V * (S + X) >= S * S:
                break
            b += 64


def gauss_inverse_cdf(u) -> CertifiedReal:
    """The point ``2**u - 1`` for an exact rational ``u`` in (0, 1)."""
    u = Fraction(u)
    if not 0 < u < 1:
        raise ValueError("u must lie strictly between 0 and 1")
    num, den = u.numerator, u.denominator

    def refine(bits: int):
        dn, up = iv.contexts(bits + 16)
        n, d = iv.exact(num), iv.exact(den)
        lo = dn.sub(dn.exp2(dn.div(n, d)), 1)
        hi = up.sub(up.exp2(up.div(n, d)), 1)
        return mpq(lo), mpq(hi)

    lo, hi = refine(64)
    return CertifiedReal(lo, hi, refine, f"2^({u})-1")


def _inverse_cdf_gauss(seed: int, key: Tuple[int, ...]) -> CertifiedReal:
    for cand in itertools.count():
        src = BitSource(seed_sequence(seed, *key, cand, 0))
        if src.prefix(64) == 0:
            continue  # x = 0 lies outside the irrationals of [0, 1)

        def refine(bits: int, src=src):
            b = bits + 2
            U = src.prefix(b)
            dn, up = iv.contexts(b + 16)
            lo = dn.sub(dn.exp2(dn.div(iv.exact(U), iv.exact(mpz(1) << b))), 1)
            hi = up.sub(up.exp2(up.div(iv.exact(U + 1), iv.exact(mpz(1) << b))), 1)
            return mpq(lo), mpq(hi)

        lo, hi = refine(64)
        return CertifiedReal(lo, hi, refine, "gauss-sample")


def sample_gauss_real(seed: int, *key: int, method: str = "rejection") -> CertifiedReal:
    """A Gauss-distributed point as a certified real, determined by ``(seed, key)``."""
    if method == "rejection":
        return _rejection_gauss(seed, key)
    if method == "inverse-cdf":
        return _inverse_cdf_gauss(seed, key)
    raise ValueError(f"unknown method {method!r}")


def sample_path(spec: ProcessSpec, n: int, index: int = 0) -> np.ndarray:
    """``(X_1, ..., X_n)`` for sample ``index``; deterministic in ``(spec, index)``."""
    if n < 1:
        raise ValueError("n must be positive")
    if spec.variant == "iid":
        rng = generator(spec.seed, index)
        return rng.choice(np.asarray(spec.alphabet, dtype=np.int64), size=n, p=spec.probs)
    if spec.variant == "markov":
        return _markov_path(spec, n, generator(spec.seed, index))
    last = None
    for attempt in range(2):
        x = sample_gauss_real(spec.seed, index, attempt, method=spec.sampler)
        try:
            digits = expand(x, n)
        except PrecisionExhausted as exc:
            last = exc
            continue
        try:
            return np.fromiter(digits, dtype=np.int64, count=n)
        except OverflowError:
            return np.asarray(digits, dtype=object)
    raise last


def _markov_path(spec: ProcessSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    cum = np.cumsum(np.asarray(spec.matrix), axis=1)
    cum[:, -1] = 1.0
    rows = [row.tolist() for row in cum]
    from bisect import bisect_right

    u = rng.random(n).tolist()
    state = bisect_right(np.cumsum(spec.initial).tolist()[:-1], u[0])
    out = [0] * n
    out[0] = state
    for i in range(1, n):
        state = bisect_right(rows[state], u[i])
        out[i] = state
    alphabet = np.asarray(spec.alphabet, dtype=np.int64)
    return alphabet[np.asarray(out)]


def write_path(path: np.ndarray, fp) -> None:
    """Dump a path as one integer per line."""
    for chunk_start in range(0, len(path), 1 << 16):
        fp.write("\n".join(map(str, path[chunk_start:chunk_start + (1 << 16)].tolist())))
        fp.write("\n")


# -- analytic parameters ------------------------------------------------------

def stationary_law(P: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eig(P.T)
    i = int(np.argmin(np.abs(w - 1)))
    pi = np.real(v[:, i])
    pi = pi / pi.sum()
    return np.clip(pi, 0, None) / np.clip(pi, 0, None).sum()


def _is_primitive(P: np.ndarray) -> bool:
    s = P.shape[0]
    A = (P > 0).astype(np.int64)
    M = np.linalg.matrix_power(A, (s - 1) ** 2 + 1)
    return bool((M > 0).all())


def _iid_params(spec: ProcessSpec) -> AssumptionParams:
    probs = np.asarray(spec.probs)
    p = float(probs.max())
    m_star = min(a for a, q in zip(spec.alphabet, spec.probs) if q == p)
    if p >= 1:
        raise AssumptionUnsatisfiable("degenerate law: constant words have measure 1, no rho > 1")
    # mu(Delta_k(m*)) = p^k = rho^-2k exactly; sum_m p_m^k <= p^(k-1) = rho^-2k / p.
    return AssumptionParams(
        rho=p ** -0.5, m_star=m_star, c_minus=1.0, c_plus=1.0, C_1=1.0 / p,
        C_0=0.0, theta=0.5,
        notes={"rho": "exact: p_max^(-1/2)", "c": "exact: mu(Delta_k) = rho^-2k",
               "C_1": "exact: sum_m p_m^k <= p_max^(k-1), sharp at k = 1",
               "C_0": "exact: independence", "theta": "arbitrary (C_0 = 0)"},
    )


def _markov_params(spec: ProcessSpec, horizon: int = 400) -> AssumptionParams:
    P = np.asarray(spec.matrix)
    pi = np.asarray(spec.initial)
    if not _is_primitive(P):
        raise AssumptionUnsatisfiable("chain is reducible or periodic; no exponential mixing")
    diag = np.diag(P)
    pmax = float(diag.max())
    if pmax <= 0:
        raise AssumptionUnsatisfiable("no self-loops: runs never exceed length 1")
    if pmax >= 1:
        raise AssumptionUnsatisfiable("absorbing constant process: no rho > 1")
    m_idx = int(np.flatnonzero(diag == pmax)[np.argmin(
        [spec.alphabet[i] for i in np.flatnonzero(diag == pmax)])])
    eig = np.sort(np.abs(np.linalg.eigvals(P)))[::-1]
    slem = float(eig[1]) if len(eig) > 1 else 0.0
    theta = slem if slem > 0 else 0.5
    # psi(g) <= max_ij |P^(g+1)_ij / pi_j - 1|; fit C_0 over a finite horizon
    Q = P.copy()
    C_0 = 0.0
    for g in range(1, horizon + 1):
        Q = Q @ P
        psi = float(np.abs(Q / pi[None, :] - 1).max())
        if psi < 1e-10:
            break  # below this, float noise dominates the ratio
        C_0 = max(C_0, psi / theta ** g)
    c = float(pi[m_idx] / pmax)
    return AssumptionParams(
        rho=pmax ** -0.5, m_star=spec.alphabet[m_idx], c_minus=c, c_plus=c,
        C_1=1.0 / pmax, C_0=C_0, theta=theta,
        notes={"rho": "exact: largest self-loop probability",
               "c": "exact: mu(Delta_k(m*)) = pi(m*) P(m*,m*)^(k-1)",
               "C_1": "exact: sum_m pi_m P_mm^(k-1) <= 1/P_max * rho^-2k",
               "C_0": f"estimated: max over g <= {horizon} of psi(g)/theta^g",
               "theta": "estimated: second largest eigenvalue modulus"},
    )


def _gauss_params(tracked: int) -> AssumptionParams:
    g = growth_constants(tracked)
    phi2 = PHI * PHI
    sharper = float(sharper_sum_constant()) * phi2
    return AssumptionParams(
        rho=float(g.tau), m_star=tracked, c_minus=float(g.c_minus.lo),
        c_plus=float(g.c_plus.hi), C_1=phi2, C_0=1.0, theta=0.5, rho_max=PHI,
        notes={"rho": "exact: tau(lambda) of the tracked digit",
               "c": "exact: constant-word cylinder bounds with the proof constants",
               "C_1": f"stated: sum bound phi^-2(k-1), relative to rho_max = phi; "
                      f"proof constant gives {sharper!r}",
               "C_0": "assumed per cited literature (configuration default)",
               "theta": "assumed per cited literature (configuration default)"},
    )


def derive_params(spec: ProcessSpec, tracked: Optional[int] = None) -> AssumptionParams:
    if spec.variant == "iid":
        return _iid_params(spec)
    if spec.variant == "markov":
        return _markov_params(spec)
    return _gauss_params(1 if tracked is None else tracked)


# -- exact oracles ------------------------------------------------------------

def iid_longest_run_cdf(p, n: int, k: int):
    """P(L_n < k) when each symbol equals m* independently with probability p.

    Runs a linear recurrence over the current run length.  Passing ``p`` as
    a :class:`~fractions.Fraction` gives an exact rational answer, but the
    denominators grow like ``den(p)**n``; use floats beyond a few thousand.
    """
    if n < 1:
        raise ValueError("n must be positive")
    if k <= 0:
        return 0
    if k > n:
        return Fraction(1) if isinstance(p, Fraction) else 1.0
    if isinstance(p, Fraction):
        state = [Fraction(1)] + [Fraction(0)] * (k - 1)
        q = 1 - p
        for _ in range(n):
            state = [q * sum(state)] + [p * s for s in state[:-1]]
        return sum(state)
    p = float(p)
    if not 0 < p < 1:
        raise ValueError("p must lie in (0, 1)")
    A = np.zeros((k, k))
    A[:, 0] = 1 - p
    for r in range(k - 1):
        A[r, r + 1] = p
    v = np.linalg.matrix_power(A, n)[0]
    return float(math.fsum(v))


def brute_force_distribution(alphabet: Sequence[int], probs: Sequence, n: int,
                             m_star: Optional[int] = None,
                             limit: int = 10**7) -> Dict[Tuple[int, int], float]:
    """Exact law of ``(L_n(m*), R_n)`` by weighted enumeration of all words."""
    alphabet = list(alphabet)
    if len(alphabet) ** n > limit:
        raise TooLarge(f"{len(alphabet)}^{n} words exceed the enumeration limit {limit}")
    if m_star is None:
        pmax = max(probs)
        m_star = min(a for a, q in zip(alphabet, probs) if q == pmax)
    dist: Dict[Tuple[int, int], object] = {}
    for idx in itertools.product(range(len(alphabet)), repeat=n):
        weight = 1
        for i in idx:
            weight = weight * probs[i]
        if not weight:
            continue
        word = [alphabet[i] for i in idx]
        best_l = best_r = cur = 0
        prev = None
        for s in word:
            cur = cur + 1 if s == prev else 1
            prev = s
            best_r = max(best_r, cur)
            if s == m_star:
                best_l = max(best_l, cur)
        key = (best_l, best_r)
        dist[key] = dist.get(key, 0) + weight
    return dist


def marginal_L(dist: Dict[Tuple[int, int], object]) -> Dict[int, object]:
    out: Dict[int, object] = {}
    for (l, _), w in dist.items():
        out[l] = out.get(l, 0) + w
    return out


def marginal_R(dist: Dict[Tuple[int, int], object]) -> Dict[int, object]:
    out: Dict[int, object] = {}
    for (_, r), w in dist.items():
        out[r] = out.get(r, 0) + w
    return out
