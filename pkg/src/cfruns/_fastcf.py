"""Certified continued-fraction digits of a dyadic interval.

The interval ``[lo / 2**prec, hi / 2**prec]`` is expanded by recursive
halving: digits are first extracted from a coarsened (outward-rounded)
copy of the interval, which is certified for every point of the original,
and the exact remainder interval is then mapped back through the inverse
Möbius transformation and rounded outward again.  Every digit returned is
shared by all points of the input interval.

Matrices are stored as ``(p, p_prev, q, q_prev)`` so that a point ``x`` of
the cylinder is ``(p + p_prev*y) / (q + q_prev*y)`` for its remainder ``y``.
"""

from gmpy2 import mpz

_BASE_BITS = 96
_GUARD = 32

IDENTITY = (mpz(0), mpz(1), mpz(1), mpz(0))


def compose(m1, m2):
    p1, pp1, q1, qp1 = m1
    p2, pp2, q2, qp2 = m2
    return (
        pp1 * p2 + p1 * q2,
        pp1 * pp2 + p1 * qp2,
        qp1 * p2 + q1 * q2,
        qp1 * pp2 + q1 * qp2,
    )


def _naive(a, b, c, d, digits, limit):
    """Double Euclid on ``[a/b, c/d]``; appends digits, returns the matrix."""
    p, pp, q, qp = 0, 1, 1, 0
    n = 0
    while a and n < limit:
        dl = b // a
        if d // c != dl:
            break
        digits.append(int(dl))
        p, pp = dl * p + pp, p
        q, qp = dl * q + qp, q
        # T reverses orientation on each branch.
        a, b, c, d = d - dl * c, c, b - dl * a, a
        n += 1
    return (mpz(p), mpz(pp), mpz(q), mpz(qp)), (a, b, c, d)


def _remainder(m, lo, hi, prec):
    """Outward-rounded dyadic enclosure of the remainder of ``[lo, hi]/2**prec``."""
    p, pp, q, qp = m
    scale = mpz(1) << prec
    # y = (p - q x) / (q_prev x - p_prev), x = lo / scale etc.
    n1, d1 = p * scale - q * lo, qp * lo - pp * scale
    n2, d2 = p * scale - q * hi, qp * hi - pp * scale
    if d1 < 0:
        n1, d1 = -n1, -d1
    if d2 < 0:
        n2, d2 = -n2, -d2
    # remaining width is roughly (hi - lo) * q**2 / scale
    width_bits = (hi - lo).bit_length() + 2 * q.bit_length() - prec
    r = max(_GUARD, _GUARD - width_bits)
    # which endpoint is lower: compare n1/d1 with n2/d2
    if n1 * d2 <= n2 * d1:
        ln, ld, un, ud = n1, d1, n2, d2
    else:
        ln, ld, un, ud = n2, d2, n1, d1
    new_lo = (ln << r) // ld
    new_hi = -((-(un << r)) // ud)
    if new_lo < 0:
        new_lo = mpz(0)
    top = mpz(1) << r
    if new_hi > top:
        new_hi = top
    return new_lo, new_hi, r


def expand_dyadic(lo, hi, prec, limit=None):
    """Return ``(digits, matrix)`` for the interval ``[lo, hi] / 2**prec``.

    ``limit`` caps the number of digits; ``None`` extracts every digit that
    can be certified.
    """
    digits = []
    if limit is None:
        limit = 1 << 62
    m = _expand(mpz(lo), mpz(hi), prec, digits, limit)
    return digits, m


def _expand(lo, hi, prec, digits, limit):
    m = IDENTITY
    start = len(digits)
    while len(digits) - start < limit:
        left = limit - (len(digits) - start)
        if lo <= 0:
            break
        if prec <= _BASE_BITS:
            scale = 1 << prec
            step, _ = _naive(int(lo), scale, int(hi), scale, digits, left)
            return compose(m, step)
        half = prec // 2
        shift = prec - half
        before = len(digits)
        step = _expand(lo >> shift, -((-hi) >> shift), half, digits, left)
        if len(digits) == before:
            # The coarse copy straddles a branch point; take one digit
            # at full precision, or give up.
            scale = mpz(1) << prec
            step, _ = _naive(lo, scale, hi, scale, digits, 1)
            if len(digits) == before:
                break
        m = compose(m, step)
        lo, hi, prec = _remainder(step, lo, hi, prec)
    return m
