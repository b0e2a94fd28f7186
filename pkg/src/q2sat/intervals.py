"""Rational interval arithmetic and certified complex boxes.

All endpoints are exact fractions, so every box computed here is a true
enclosure: the represented number is guaranteed to lie inside.  This is what
lets exact equality tests fall back on numerics for sign disambiguation
without ever trusting floating point.
"""

from __future__ import annotations

from fractions import Fraction
from math import isqrt
from typing import Sequence

Interval = tuple[Fraction, Fraction]
Box = tuple[Interval, Interval]  # (real part, imaginary part)

ZERO = Fraction(0)
IV_ZERO: Interval = (ZERO, ZERO)
BOX_ZERO: Box = (IV_ZERO, IV_ZERO)


def iv(lo, hi=None) -> Interval:
    lo = Fraction(lo)
    hi = lo if hi is None else Fraction(hi)
    if lo > hi:
        raise ValueError("empty interval")
    return (lo, hi)


def iv_add(a: Interval, b: Interval) -> Interval:
    return (a[0] + b[0], a[1] + b[1])


def iv_sub(a: Interval, b: Interval) -> Interval:
    return (a[0] - b[1], a[1] - b[0])


def iv_neg(a: Interval) -> Interval:
    return (-a[1], -a[0])


def iv_mul(a: Interval, b: Interval) -> Interval:
    p = (a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1])
    return (min(p), max(p))


def iv_scale(a: Interval, c: Fraction) -> Interval:
    if c >= 0:
        return (a[0] * c, a[1] * c)
    return (a[1] * c, a[0] * c)


def iv_width(a: Interval) -> Fraction:
    return a[1] - a[0]


def iv_contains_zero(a: Interval) -> bool:
    return a[0] <= 0 <= a[1]


def iv_mid(a: Interval) -> Fraction:
    return (a[0] + a[1]) / 2


def iv_recip(a: Interval) -> Interval:
    """1/a for an interval that excludes zero."""
    if iv_contains_zero(a):
        raise ZeroDivisionError("interval contains zero")
    return (1 / a[1], 1 / a[0])


def iv_intersect(a: Interval, b: Interval) -> Interval | None:
    lo, hi = max(a[0], b[0]), min(a[1], b[1])
    return None if lo > hi else (lo, hi)


def frac_floor(x: Fraction, bits: int) -> Fraction:
    scaled = x * (1 << bits)
    return Fraction(scaled.numerator // scaled.denominator, 1 << bits)


def frac_ceil(x: Fraction, bits: int) -> Fraction:
    scaled = x * (1 << bits)
    return Fraction(-((-scaled.numerator) // scaled.denominator), 1 << bits)


def iv_round_out(a: Interval, bits: int) -> Interval:
    """Outward rounding to dyadic endpoints; keeps enclosures from blowing up
    in representation size during iterated refinement."""
    return (frac_floor(a[0], bits), frac_ceil(a[1], bits))


def sqrt_bounds(q: Fraction, bits: int) -> Interval:
    """Enclosure of sqrt(q) for q >= 0, accurate to roughly 2^-bits."""
    if q < 0:
        raise ValueError("negative radicand")
    if q == 0:
        return IV_ZERO
    # sqrt(a/b) = sqrt(a*b)/b; floor integer sqrt of a scaled value gives
    # outward-rounded rational bounds.
    n = q.numerator * q.denominator
    shift = 2 * bits
    root = isqrt(n << shift)
    den = q.denominator << bits
    lo = Fraction(root, den)
    hi = Fraction(root + 1, den)
    return (lo, hi)


def iv_sqrt(a: Interval, bits: int) -> Interval:
    """Enclosure of sqrt over a nonnegative interval."""
    lo = sqrt_bounds(a[0], bits)[0] if a[0] > 0 else ZERO
    hi = sqrt_bounds(a[1], bits)[1] if a[1] > 0 else ZERO
    return (lo, hi)


# --- complex boxes ---------------------------------------------------------


def box(re, im=0) -> Box:
    return (iv(re), iv(im))


def box_add(a: Box, b: Box) -> Box:
    return (iv_add(a[0], b[0]), iv_add(a[1], b[1]))


def box_sub(a: Box, b: Box) -> Box:
    return (iv_sub(a[0], b[0]), iv_sub(a[1], b[1]))


def box_neg(a: Box) -> Box:
    return (iv_neg(a[0]), iv_neg(a[1]))


def box_mul(a: Box, b: Box) -> Box:
    re = iv_sub(iv_mul(a[0], b[0]), iv_mul(a[1], b[1]))
    im = iv_add(iv_mul(a[0], b[1]), iv_mul(a[1], b[0]))
    return (re, im)


def box_scale(a: Box, c: Fraction) -> Box:
    return (iv_scale(a[0], c), iv_scale(a[1], c))


def box_conj(a: Box) -> Box:
    return (a[0], iv_neg(a[1]))


def box_width(a: Box) -> Fraction:
    return max(iv_width(a[0]), iv_width(a[1]))


def box_contains_zero(a: Box) -> bool:
    return iv_contains_zero(a[0]) and iv_contains_zero(a[1])


def box_mid(a: Box) -> tuple[Fraction, Fraction]:
    return (iv_mid(a[0]), iv_mid(a[1]))


def box_recip(a: Box) -> Box:
    """1/a for a box that excludes zero."""
    norm = iv_add(iv_mul(a[0], a[0]), iv_mul(a[1], a[1]))
    inv = iv_recip(norm)
    return (iv_mul(a[0], inv), iv_mul(iv_neg(a[1]), inv))


def box_div(a: Box, b: Box) -> Box:
    return box_mul(a, box_recip(b))


def box_round_out(a: Box, bits: int) -> Box:
    return (iv_round_out(a[0], bits), iv_round_out(a[1], bits))


def box_intersect(a: Box, b: Box) -> Box | None:
    re = iv_intersect(a[0], b[0])
    im = iv_intersect(a[1], b[1])
    if re is None or im is None:
        return None
    return (re, im)


def boxes_disjoint(a: Box, b: Box) -> bool:
    return iv_intersect(a[0], b[0]) is None or iv_intersect(a[1], b[1]) is None


def box_abs2(a: Box) -> Interval:
    """Enclosure of |z|^2 over the box (tight on each axis separately)."""

    def sq(t: Interval) -> Interval:
        if iv_contains_zero(t):
            return (ZERO, max(t[0] * t[0], t[1] * t[1]))
        m = min(abs(t[0]), abs(t[1]))
        mm = max(abs(t[0]), abs(t[1]))
        return (m * m, mm * mm)

    return iv_add(sq(a[0]), sq(a[1]))


def poly_eval_box(coeffs: Sequence[int], z: Box) -> Box:
    """Horner evaluation of an integer polynomial c0 + c1 z + ... over a box."""
    acc: Box = BOX_ZERO
    for c in reversed(coeffs):
        acc = box_mul(acc, z)
        if c:
            acc = box_add(acc, box(c))
    return acc


def newton_sqrt_step(b: Box, rad: Box) -> Box | None:
    """One interval-Newton contraction for z^2 = rad on a box excluding 0.

    Returns the refined box, or None when the step proves no root lies in b.
    """
    m_re, m_im = box_mid(b)
    m: Box = (iv(m_re), iv(m_im))
    num = box_sub(box_mul(m, m), rad)
    denom = box_scale(b, Fraction(2))
    step = box_div(num, denom)
    cand = box_sub(m, step)
    return box_intersect(cand, b)


def isolate_poly_root(coeffs: Sequence[int], start: Box, bits: int) -> Box:
    """Shrink an isolating box of an integer polynomial root to width <= 2^-bits.

    `start` must contain exactly one root; subdivision discards subboxes on
    which the polynomial provably has no zero.
    """
    target = Fraction(1, 1 << bits)
    boxes = [start]
    while True:
        lo_re = min(b[0][0] for b in boxes)
        hi_re = max(b[0][1] for b in boxes)
        lo_im = min(b[1][0] for b in boxes)
        hi_im = max(b[1][1] for b in boxes)
        hull: Box = ((lo_re, hi_re), (lo_im, hi_im))
        if box_width(hull) <= target:
            return hull
        def halves(t: Interval) -> list[Interval]:
            if t[0] == t[1]:
                return [t]
            m = iv_mid(t)
            return [(t[0], m), (m, t[1])]

        nxt = []
        seen = set()
        for b in boxes:
            for re_part in halves(b[0]):
                for im_part in halves(b[1]):
                    q = (re_part, im_part)
                    if q in seen:
                        continue
                    seen.add(q)
                    if box_contains_zero(poly_eval_box(coeffs, q)):
                        nxt.append(q)
        if not nxt:
            raise ArithmeticError("root escaped its isolating box")
        boxes = nxt


def sturm_root_count(coeffs: Sequence[int], lo: Fraction, hi: Fraction) -> int:
    """Number of distinct real roots of the polynomial in [lo, hi]."""

    def strip(p: list[Fraction]) -> list[Fraction]:
        while p and p[-1] == 0:
            p.pop()
        return p

    def rem(a: list[Fraction], b: list[Fraction]) -> list[Fraction]:
        a = a[:]
        while len(a) >= len(b):
            f = a[-1] / b[-1]
            k = len(a) - len(b)
            for i, c in enumerate(b):
                a[i + k] -= f * c
            strip(a)
            if not a:
                break
        return a

    p0 = strip([Fraction(c) for c in coeffs])
    if len(p0) <= 1:
        return 0
    p1 = strip([Fraction(i * c) for i, c in enumerate(p0)][1:])
    chain = [p0, p1]
    while chain[-1]:
        r = rem(chain[-2], chain[-1])
        chain.append([-c for c in r])
    chain.pop()

    def signs_at(x: Fraction) -> int:
        vals = []
        for p in chain:
            acc = Fraction(0)
            for c in reversed(p):
                acc = acc * x + c
            if acc != 0:
                vals.append(1 if acc > 0 else -1)
        return sum(1 for a, b in zip(vals, vals[1:]) if a != b)

    count = signs_at(lo) - signs_at(hi)
    # Sturm counts roots in (lo, hi]; include lo if it is itself a root.
    acc = Fraction(0)
    for c in reversed(p0):
        acc = acc * lo + c
    if acc == 0:
        count += 1
    return count
