"""Gauss-measure arithmetic and the constant-word cylinder bounds.

Measures are certified enclosures computed with directed MPFR rounding.
``log(1+x)`` is evaluated through ``log1p`` so that tiny cylinders keep
their relative accuracy; a cylinder at depth 40 has mass near 1e-17.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, List, Optional

import gmpy2
from gmpy2 import mpfr, mpz

from . import _interval as iv
from ._interval import Enc
from .cf_engine import Word, cylinder_of
from .errors import InvalidInterval

DEFAULT_PREC = 128
DEFAULT_ERROR_BOUND = 1e-30


@dataclass(frozen=True)
class MeasureValue:
    """Certified enclosure ``[lower, upper]`` of a Gauss measure."""

    lower: mpfr
    upper: mpfr

    @property
    def value(self) -> mpfr:
        return iv.mid(self.lower, self.upper)

    @property
    def error(self) -> mpfr:
        return iv.half_width(self.lower, self.upper)

    def within(self, bound: float = DEFAULT_ERROR_BOUND) -> bool:
        return self.error <= bound

    def __float__(self) -> float:
        return float(self.value)

    @property
    def enc(self) -> Enc:
        return Enc(self.lower, self.upper)


@dataclass(frozen=True)
class GrowthConstants:
    lam: int
    tau: Enc
    c_minus: Enc
    c_plus: Enc

    @property
    def tau_float(self) -> float:
        return float(self.tau)


def _as_fraction(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


def gauss_measure_interval(a, b, prec: int = DEFAULT_PREC) -> MeasureValue:
    """Gauss measure of ``[a, b]``, i.e. ``log((1+b)/(1+a)) / log 2``."""
    a, b = _as_fraction(a), _as_fraction(b)
    if not (0 <= a < b <= 1):
        raise InvalidInterval(f"need 0 <= a < b <= 1, got a={a}, b={b}")
    delta = (b - a) / (1 + a)
    m = iv.log1p_ratio(delta.numerator, delta.denominator, prec).div(iv.log2_const(prec), prec)
    return MeasureValue(m.lo, m.hi)


def cylinder_measure(w: Iterable[int], prec: int = DEFAULT_PREC) -> MeasureValue:
    cyl = cylinder_of(w)
    return gauss_measure_interval(cyl.left, cyl.right, prec)


def growth_constants(lam: int, prec: int = DEFAULT_PREC) -> GrowthConstants:
    """tau(lam) and the constant-word bound constants c_-, c_+."""
    if lam < 1:
        raise ValueError("lambda must be a positive integer")
    two = Enc.point(2)
    one = Enc.point(1)
    ln2 = iv.log2_const(prec)
    disc = lam * lam + 4
    tau = Enc.point(lam).add(iv.sqrt_point(disc, prec), prec).div(two, prec)
    tau_ratio = tau.div(tau.add(one, prec), prec)
    c_minus = tau_ratio.div(two.mul(ln2, prec), prec)
    c_plus = Enc.point(disc).mul(tau_ratio, prec).div(Enc.point(lam * lam).mul(ln2, prec), prec)
    return GrowthConstants(lam, tau, c_minus, c_plus)


def tau_bracket(lam: int, bits: int = DEFAULT_PREC):
    """Integers ``(lo, hi, den)`` with ``lo/den <= tau(lam) <= hi/den`` and ``hi - lo = 1``.

    Pure integer square roots, so it is cheap enough to sweep millions of
    ``lam`` values.
    """
    s = gmpy2.isqrt(mpz(lam * lam + 4) << (2 * bits))
    lo = (mpz(lam) << bits) + s
    return lo, lo + 1, mpz(1) << (bits + 1)


def centering(n: int, rho: float) -> float:
    """Leading run length ``log n / (2 log rho)``."""
    if n < 2:
        raise ValueError("n must be at least 2")
    if not rho > 1:
        raise ValueError("rho must exceed 1")
    return math.log(n) / (2.0 * math.log(rho))


def _fmt(x, digits: int = 26) -> str:
    """Scientific notation with ``digits`` significant digits."""
    if not isinstance(x, type(mpfr(0))):
        x = mpfr(x, DEFAULT_PREC)
    if x == 0:
        return "0"
    mant, exp, _ = x.digits(10, digits)
    sign = ""
    if mant.startswith("-"):
        sign, mant = "-", mant[1:]
    return f"{sign}{mant[0]}.{mant[1:]}e{exp - 1:+d}"


@dataclass
class BoundReport:
    """Rows of a bound check, serialisable to CSV and JSON."""

    kind: str
    columns: List[str]
    rows: List[dict] = field(default_factory=list)
    notes: dict = field(default_factory=dict)

    @property
    def all_pass(self) -> bool:
        return all(r["pass"] for r in self.rows)

    @property
    def violations(self) -> List[dict]:
        return [r for r in self.rows if not r["pass"]]

    def _cell(self, v) -> str:
        if isinstance(v, bool):
            return "1" if v else "0"
        if v is None:
            return ""
        if isinstance(v, int):
            return str(v)
        return _fmt(v)

    def to_csv(self, fp=None) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for r in self.rows:
            writer.writerow([self._cell(r[c]) for c in self.columns])
        text = buf.getvalue()
        if fp is not None:
            fp.write(text)
        return text

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "all_pass": self.all_pass,
            "notes": self.notes,
            "rows": [{c: self._cell(r[c]) for c in self.columns} for r in self.rows],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)


def constant_word(lam: int, k: int) -> Word:
    return Word((lam,) * k)


def check_assumption2(lam: int, k_max: int, prec: int = DEFAULT_PREC) -> BoundReport:
    """Check c_- tau^-2k <= mu(Delta_k(lam)) <= c_+ tau^-2k for k <= k_max."""
    if k_max < 1:
        raise ValueError("k_max must be at least 1 (k ranges over the positive integers)")
    g = growth_constants(lam, prec)
    report = BoundReport(
        "assumption2",
        ["k", "lambda", "lower_bound", "measure", "upper_bound", "pass"],
        notes={"lambda": lam, "c_minus": _fmt(g.c_minus.lo), "c_plus": _fmt(g.c_plus.hi),
               "tau": _fmt(g.tau.lo)},
    )
    for k in range(1, k_max + 1):
        meas = cylinder_measure(constant_word(lam, k), prec).enc
        scale = g.tau.pow_neg(2 * k, prec)
        lower = g.c_minus.mul(scale, prec)
        upper = g.c_plus.mul(scale, prec)
        ok = lower.le(meas) and meas.le(upper)
        report.rows.append({
            "k": k, "lambda": lam,
            "lower_bound": lower.hi, "measure": meas.mid,
            "upper_bound": upper.lo, "pass": ok,
            "enclosures": (lower, meas, upper),
        })
    return report


def sharper_sum_constant(prec: int = DEFAULT_PREC) -> Enc:
    """(2/(3 phi) + (pi^4/90 - 1) phi^2) / log 2, the sharper summed constant."""
    phi = growth_constants(1, prec).tau
    pi = iv.pi_const(prec)
    pi4 = pi.mul(pi, prec).mul(pi.mul(pi, prec), prec)
    zeta4_minus_1 = pi4.div(Enc.point(90), prec).sub_point(1, prec)
    first = Enc.point(2).div(Enc.point(3).mul(phi, prec), prec)
    second = zeta4_minus_1.mul(phi.mul(phi, prec), prec)
    return first.add(second, prec).div(iv.log2_const(prec), prec)


def _constant_word_sums(k_max: int, truncation: int, prec: int):
    """Directed-rounding sums of log(1 + delta) over lambda <= truncation.

    For the constant word of length k the Gauss mass is
    log(1 + 1/M)/log 2 with M = q_k (q_k + q_{k-1} + p_k + p_{k-1}) for odd
    k and M = (q_k + q_{k-1})(q_k + p_k) for even k.
    """
    dn, up = iv.contexts(prec)
    exact = iv.exact
    lo_sum = [mpfr(0)] * (k_max + 1)
    hi_sum = [mpfr(0)] * (k_max + 1)
    cheap_bits = prec + 8
    for lam in range(1, truncation + 1):
        p_prev, p, q_prev, q = 1, 0, 0, 1
        for k in range(1, k_max + 1):
            p, p_prev = lam * p + p_prev, p
            q, q_prev = lam * q + q_prev, q
            if k & 1:
                m = q * (q + q_prev + p + p_prev)
            else:
                m = (q + q_prev) * (q + p)
            if m.bit_length() > cheap_bits:
                # 1/(m+1) <= log(1 + 1/m) <= 1/m, tighter than the rounding
                lo_t = dn.div(1, exact(m + 1))
                hi_t = up.div(1, exact(m))
            else:
                e = exact(m)
                lo_t = dn.log1p(dn.div(1, e))
                hi_t = up.log1p(up.div(1, e))
            lo_sum[k] = dn.add(lo_sum[k], lo_t)
            hi_sum[k] = up.add(hi_sum[k], hi_t)
    return lo_sum, hi_sum


def check_assumption3(k_max: int, truncation: int, prec: int = DEFAULT_PREC) -> BoundReport:
    """Certified upper estimate of sum_lambda mu(Delta_k(lambda)) against phi^-2(k-1).

    The partial sum over lambda <= truncation is enclosed exactly; the tail
    is bounded by sum_{lambda > T} lambda^-2k / log 2 <= T^(1-2k) / ((2k-1) log 2).
    At k = 1 the rank-one cylinders partition the space, so the sum is
    exactly 1 and the tail is the measure of (0, 1/(T+1)).
    """
    if k_max < 1:
        raise ValueError("k_max must be at least 1")
    if truncation < 2:
        raise ValueError("truncation must be at least 2")
    dn, up = iv.contexts(prec)
    ln2 = iv.log2_const(prec)
    phi = growth_constants(1, prec).tau
    proof_const = sharper_sum_constant(prec)
    lo_sum, hi_sum = _constant_word_sums(k_max, truncation, prec)

    report = BoundReport(
        "assumption3",
        ["k", "truncation", "partial_sum", "tail_bound", "certified_upper",
         "stated_bound", "proof_bound", "pass", "pass_proof"],
        notes={"proof_constant": _fmt(proof_const.lo), "truncation": truncation},
    )
    for k in range(1, k_max + 1):
        partial = Enc(dn.div(lo_sum[k], ln2.hi), up.div(hi_sum[k], ln2.lo))
        stated = phi.pow_neg(2 * (k - 1), prec) if k > 1 else Enc.point(1)
        proof = proof_const.mul(stated, prec)
        if k == 1:
            tail = gauss_measure_interval(0, Fraction(1, truncation + 1), prec).upper
            certified = mpfr(1)
            ok = True
            ok_proof = None
        else:
            denom = dn.mul(dn.mul(iv.exact(truncation ** (2 * k - 1)), 2 * k - 1), ln2.lo)
            tail = up.div(1, denom)
            certified = up.add(partial.hi, tail)
            ok = certified <= stated.lo
            ok_proof = certified <= proof.lo
        report.rows.append({
            "k": k, "truncation": truncation,
            "partial_sum": partial.mid, "tail_bound": tail,
            "certified_upper": certified, "stated_bound": stated.lo,
            "proof_bound": proof.lo, "pass": ok,
            "pass_proof": ok_proof,
        })
    return report
