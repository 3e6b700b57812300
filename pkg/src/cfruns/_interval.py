"""Outward-rounded enclosures on MPFR floats (positive quantities only)."""

from __future__ import annotations

from functools import lru_cache
from typing import NamedTuple

import gmpy2
from gmpy2 import mpfr, mpz

DEFAULT_PREC = 128


@lru_cache(maxsize=None)
def contexts(prec: int = DEFAULT_PREC):
    return (
        gmpy2.context(precision=prec, round=gmpy2.RoundDown),
        gmpy2.context(precision=prec, round=gmpy2.RoundUp),
    )


def exact(z) -> mpfr:
    """mpfr holding the integer ``z`` without rounding."""
    z = mpz(z)
    return mpfr(z, max(z.bit_length(), 2))


def mid(lo: mpfr, hi: mpfr) -> mpfr:
    ctx = gmpy2.context(precision=max(lo.precision, hi.precision) + 1)
    return ctx.div(ctx.add(lo, hi), 2)


def half_width(lo: mpfr, hi: mpfr) -> mpfr:
    ctx = gmpy2.context(precision=max(lo.precision, hi.precision), round=gmpy2.RoundUp)
    return ctx.div(ctx.sub(hi, lo), 2)


class Enc(NamedTuple):
    """Closed enclosure ``[lo, hi]`` of a positive real."""

    lo: mpfr
    hi: mpfr

    @classmethod
    def point(cls, z) -> "Enc":
        e = exact(z)
        return cls(e, e)

    @classmethod
    def ratio(cls, num, den, prec: int = DEFAULT_PREC) -> "Enc":
        dn, up = contexts(prec)
        n, d = exact(num), exact(den)
        return cls(dn.div(n, d), up.div(n, d))

    def __float__(self) -> float:
        return float(mid(self.lo, self.hi))

    @property
    def mid(self) -> mpfr:
        return mid(self.lo, self.hi)

    def add(self, other: "Enc", prec: int = DEFAULT_PREC) -> "Enc":
        dn, up = contexts(prec)
        return Enc(dn.add(self.lo, other.lo), up.add(self.hi, other.hi))

    def sub_point(self, z, prec: int = DEFAULT_PREC) -> "Enc":
        dn, up = contexts(prec)
        z = exact(z)
        return Enc(dn.sub(self.lo, z), up.sub(self.hi, z))

    def mul(self, other: "Enc", prec: int = DEFAULT_PREC) -> "Enc":
        dn, up = contexts(prec)
        return Enc(dn.mul(self.lo, other.lo), up.mul(self.hi, other.hi))

    def div(self, other: "Enc", prec: int = DEFAULT_PREC) -> "Enc":
        dn, up = contexts(prec)
        return Enc(dn.div(self.lo, other.hi), up.div(self.hi, other.lo))

    def pow_neg(self, k: int, prec: int = DEFAULT_PREC) -> "Enc":
        """``self ** -k`` for ``self >= 1``-style positive enclosures."""
        dn, up = contexts(prec)
        return Enc(dn.div(1, up.pow(self.hi, k)), up.div(1, dn.pow(self.lo, k)))

    def le(self, other: "Enc") -> bool:
        """Certified ``self <= other``."""
        return self.hi <= other.lo


def sqrt_point(z, prec: int = DEFAULT_PREC) -> Enc:
    dn, up = contexts(prec)
    e = exact(z)
    return Enc(dn.sqrt(e), up.sqrt(e))


def log2_const(prec: int = DEFAULT_PREC) -> Enc:
    dn, up = contexts(prec)
    return Enc(dn.const_log2(), up.const_log2())


def pi_const(prec: int = DEFAULT_PREC) -> Enc:
    dn, up = contexts(prec)
    return Enc(dn.const_pi(), up.const_pi())


def log1p_ratio(num, den, prec: int = DEFAULT_PREC) -> Enc:
    """Enclosure of ``log(1 + num/den)`` for positive integers."""
    dn, up = contexts(prec)
    n, d = exact(num), exact(den)
    return Enc(dn.log1p(dn.div(n, d)), up.log1p(up.div(n, d)))
