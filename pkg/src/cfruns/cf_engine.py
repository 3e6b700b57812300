"""Certified continued-fraction expansion and exact convergent geometry.

A real number enters as a :class:`CertifiedReal`: an exact rational
enclosure ``[lower, upper]`` together with a callback that produces
tighter enclosures on demand.  :func:`expand` only ever returns digits that
are shared by every point of the final enclosure, so a returned word is
correct for the number itself, not for some floating-point neighbour.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Optional

import gmpy2
from gmpy2 import mpq, mpz

from ._fastcf import expand_dyadic
from .errors import EmptyWord, PrecisionExhausted, RationalTerminated

__all__ = [
    "CertifiedReal",
    "Convergent",
    "Cylinder",
    "Word",
    "append_digit",
    "cylinder_of",
    "expand",
    "from_decimal",
    "from_rational",
    "inv_golden",
    "pi_minus_3",
    "sqrt2_minus_1",
    "BUILTIN_CONSTANTS",
]

# Bits consumed per digit for a Gauss-typical point is 2*pi^2/(12 log(2)^2),
# about 3.4237; the extra 3% absorbs fluctuations of log q_n.
BITS_PER_DIGIT = 3.53
DEFAULT_MAX_ROUNDS = 64
DEFAULT_MAX_BITS = 1 << 28
_GUARD_BITS = 32

Refine = Callable[[int], "tuple[object, object]"]


class Word(tuple):
    """A finite sequence of positive integer digits."""

    __slots__ = ()

    def __new__(cls, digits: Iterable[int] = ()):
        ds = tuple(int(d) for d in digits)
        for d in ds:
            if d < 1:
                raise ValueError(f"digits must be positive integers, got {d}")
        return super().__new__(cls, ds)

    @classmethod
    def _trusted(cls, digits) -> "Word":
        return tuple.__new__(cls, digits)

    @property
    def digits(self) -> tuple:
        return tuple(self)

    def __repr__(self) -> str:
        if len(self) > 12:
            head = ", ".join(map(str, self[:10]))
            return f"Word([{head}, ...] len={len(self)})"
        return f"Word({list(self)})"


class CertifiedReal:
    """Exact rational enclosure of a point of [0, 1), refinable on demand.

    ``refine(bits)`` must return an enclosure ``(lower, upper)`` of width at
    most ``2**-bits`` containing the number.  Each call to :meth:`refined`
    intersects the new enclosure with the current one, so successive
    enclosures are nested.  ``lower == upper`` marks an exact rational.
    """

    __slots__ = ("lower", "upper", "_refine", "name")

    def __init__(self, lower, upper, refine: Optional[Refine] = None, name: Optional[str] = None):
        lower, upper = mpq(lower), mpq(upper)
        if not (0 <= lower <= upper <= 1) or lower >= 1:
            raise ValueError(f"enclosure [{lower}, {upper}] is not inside [0, 1)")
        self.lower = lower
        self.upper = upper
        self._refine = refine
        self.name = name

    @property
    def is_exact(self) -> bool:
        return self.lower == self.upper

    @property
    def can_refine(self) -> bool:
        return self._refine is not None

    @property
    def width(self):
        return self.upper - self.lower

    def refined(self, bits: int) -> "CertifiedReal":
        """Return an enclosure of width at most ``2**-bits`` if possible."""
        if self.is_exact or self._refine is None:
            return self
        if self.width * (mpz(1) << bits) <= 1:
            return self
        lo, hi = self._refine(bits)
        lo, hi = max(mpq(lo), self.lower), min(mpq(hi), self.upper)
        if lo > hi:
            raise ValueError("refinement is not nested in the previous enclosure")
        return CertifiedReal(lo, hi, self._refine, self.name)

    def __repr__(self) -> str:
        label = f" {self.name}" if self.name else ""
        return f"<CertifiedReal{label} width~2^{-self._width_bits()}>"

    def _width_bits(self) -> int:
        w = self.width
        if w == 0:
            return 0
        return w.denominator.bit_length() - w.numerator.bit_length()


def from_rational(value, name: Optional[str] = None) -> CertifiedReal:
    """Degenerate certified real for an exact rational in [0, 1)."""
    q = mpq(Fraction(value)) if isinstance(value, (str, float)) else mpq(value)
    return CertifiedReal(q, q, None, name or str(value))


def from_decimal(text: str) -> CertifiedReal:
    """Exact rational given by a decimal literal such as ``"0.5"``."""
    return from_rational(Fraction(text), name=text)


def _dyadic_enclosure(lo_num, hi_num, bits) -> tuple:
    den = mpz(1) << bits
    return mpq(lo_num, den), mpq(hi_num, den)


def _sqrt_refine(radicand: int, offset: int, shift: int) -> Refine:
    # encloses (sqrt(radicand) - offset) / 2**shift
    def refine(bits: int):
        b = bits + shift + 2
        s = gmpy2.isqrt(mpz(radicand) << (2 * b))
        one = mpz(1) << b
        return _dyadic_enclosure(s - offset * one, s + 1 - offset * one, b + shift)

    return refine


def _atan_inv(x: int, bits: int) -> tuple:
    """Integers ``(lo, hi)`` with ``lo <= atan(1/x) * 2**bits <= hi``."""
    x2 = x * x
    pw = (mpz(1) << bits) // x
    total = mpz(0)
    k = 0
    while pw:
        t = pw // (2 * k + 1)
        total = total - t if k & 1 else total + t
        pw //= x2
        k += 1
    # each truncated term is within 2 units; the alternating tail is below 1
    err = 2 * k + 1
    return total - err, total + err


def _pi_minus_3_refine(bits: int):
    b = bits + 16 + (bits.bit_length() * 2)
    lo5, hi5 = _atan_inv(5, b)
    lo239, hi239 = _atan_inv(239, b)
    three = 3 * (mpz(1) << b)
    return _dyadic_enclosure(16 * lo5 - 4 * hi239 - three, 16 * hi5 - 4 * lo239 - three, b)


def _with_initial(refine: Refine, name: str, bits: int = 64) -> CertifiedReal:
    lo, hi = refine(bits)
    return CertifiedReal(lo, hi, refine, name)


def pi_minus_3() -> CertifiedReal:
    """pi - 3 from Machin's arctangent formula with explicit truncation bounds."""
    return _with_initial(_pi_minus_3_refine, "pi-minus-3")


def sqrt2_minus_1() -> CertifiedReal:
    return _with_initial(_sqrt_refine(2, 1, 0), "sqrt2-minus-1")


def inv_golden() -> CertifiedReal:
    """(sqrt(5) - 1) / 2, whose digits are all 1."""
    return _with_initial(_sqrt_refine(5, 1, 1), "inv-golden")


BUILTIN_CONSTANTS = {
    "pi-minus-3": pi_minus_3,
    "sqrt2-minus-1": sqrt2_minus_1,
    "inv-golden": inv_golden,
}


def _expand_rational(value, count: int) -> Word:
    num, den = int(value.numerator), int(value.denominator)
    digits = []
    while len(digits) < count:
        if num == 0:
            raise RationalTerminated(digits)
        d, r = divmod(den, num)
        digits.append(d)
        num, den = r, num
    return Word._trusted(digits)


def expand(
    x: CertifiedReal,
    count: int,
    max_rounds: int = DEFAULT_MAX_ROUNDS,
    max_bits: int = DEFAULT_MAX_BITS,
) -> Word:
    """First ``count`` partial quotients of ``x``, each one certified.

    Raises :class:`RationalTerminated` when an exact rational input runs out
    of digits, and :class:`PrecisionExhausted` when ``max_rounds``
    precision doublings (or ``max_bits``) do not separate the next digit.
    """
    if count < 1:
        raise ValueError("count must be positive")
    if x.is_exact:
        return _expand_rational(x.lower, count)

    bits = int(count * BITS_PER_DIGIT) + 64
    cur = x
    digits: list = []
    for _ in range(max_rounds):
        cur = cur.refined(bits)
        if cur.is_exact:
            return _expand_rational(cur.lower, count)
        prec = max(bits, cur._width_bits()) + _GUARD_BITS
        lo = (mpz(cur.lower.numerator) << prec) // cur.lower.denominator
        hi = -((-(mpz(cur.upper.numerator) << prec)) // cur.upper.denominator)
        digits, _ = expand_dyadic(lo, hi, prec, limit=count)
        if len(digits) >= count:
            return Word._trusted(digits[:count])
        if not cur.can_refine or bits >= max_bits:
            break
        bits = min(2 * bits, max_bits)
    raise PrecisionExhausted(
        f"certified {len(digits)} of {count} digits at {bits} bits", digits
    )


@dataclass(frozen=True)
class Convergent:
    """Recurrence state ``(p_{k-1}, p_k, q_{k-1}, q_k)`` after ``k`` digits."""

    p_prev: int
    p_cur: int
    q_prev: int
    q_cur: int
    k: int = 0

    @classmethod
    def start(cls) -> "Convergent":
        return cls(1, 0, 0, 1, 0)

    @classmethod
    def of(cls, word: Iterable[int]) -> "Convergent":
        c = cls.start()
        for d in word:
            c = c.append(d)
        return c

    def append(self, d: int) -> "Convergent":
        if d < 1:
            raise ValueError("digits must be positive")
        return Convergent(
            self.p_cur,
            d * self.p_cur + self.p_prev,
            self.q_cur,
            d * self.q_cur + self.q_prev,
            self.k + 1,
        )

    @property
    def determinant(self) -> int:
        """``p_k q_{k-1} - p_{k-1} q_k``, equal to ``(-1)**(k-1)``."""
        return self.p_cur * self.q_prev - self.p_prev * self.q_cur

    @property
    def value(self) -> Fraction:
        return Fraction(self.p_cur, self.q_cur)


def append_digit(c: Convergent, d: int) -> Convergent:
    return c.append(d)


@dataclass(frozen=True)
class Cylinder:
    word: Word
    left: Fraction
    right: Fraction
    diameter: Fraction

    def __contains__(self, x) -> bool:
        return self.left <= x <= self.right


def cylinder_of(w: Iterable[int]) -> Cylinder:
    """Interval of points whose expansion starts with ``w``."""
    word = w if isinstance(w, Word) else Word(w)
    if not word:
        raise EmptyWord("cylinder of the empty word is undefined")
    c = Convergent.of(word)
    a = Fraction(c.p_cur, c.q_cur)
    b = Fraction(c.p_cur + c.p_prev, c.q_cur + c.q_prev)
    left, right = (a, b) if a < b else (b, a)
    diameter = Fraction(1, c.q_cur * (c.q_cur + c.q_prev))
    return Cylinder(word, left, right, diameter)
