"""Exact arithmetic over Q[omega] and towers of quadratic extensions.

Scalars are kept in rationalized form: an integer polynomial in the field
generators divided by a positive integer.  Square roots are adjoined without
deciding whether they already lie in the field ("possibly redundant"
extensions), so equality testing combines an exact square identity with a
certified numeric box to pick the right branch.  Each adjoined root denotes
the principal square root (complex argument in (-pi/2, pi/2]).
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd, isqrt
from typing import Iterable, Sequence

from . import intervals as ivl
from .intervals import (
    Box,
    BOX_ZERO,
    box,
    box_add,
    box_contains_zero,
    box_mul,
    box_scale,
    box_width,
    iv_contains_zero,
    iv_sqrt,
    sturm_root_count,
)

MAX_TOWER_DEPTH = 3
_REDUCE_BITS = 512  # lazy gcd reduction threshold; representations stay unreduced below it


class FieldError(Exception):
    pass


class IncompatibleLevels(FieldError):
    """Raised when combining elements of unrelated towers."""


class TowerDepthExceeded(FieldError):
    """Raised when an adjoin would exceed the supported tower depth."""


class ConjugationUnsupported(FieldError):
    """Raised for base fields whose complex conjugate root we cannot express."""


class OpCounter:
    """Running count of field operations, for complexity accounting."""

    __slots__ = ("count",)

    def __init__(self) -> None:
        self.count = 0

    def snapshot(self) -> int:
        return self.count


counter = OpCounter()


def isqrt_exact(n: int) -> int | None:
    """Exact integer square root: s with s*s == n, or None."""
    if n < 0:
        return None
    s = isqrt(n)
    return s if s * s == n else None


# --- field specification ----------------------------------------------------


class FieldSpec:
    """A number field Q[omega] given by a monic integer polynomial and an
    embedding box isolating the intended root in the complex plane."""

    __slots__ = ("poly", "box", "_pow_table", "_box_cache", "_key")

    def __init__(self, poly: Sequence[int], embed_box=None, _validate_root=True):
        poly = tuple(int(c) for c in poly)
        if len(poly) < 2 or poly[-1] != 1:
            raise ValueError("minimal polynomial must be monic of degree >= 1")
        self.poly = poly
        if self.degree == 1:
            self.box = None
        else:
            if embed_box is None:
                raise ValueError("embedding box required for degree >= 2")
            b = tuple(Fraction(x) for x in embed_box)
            if len(b) != 4 or b[0] > b[1] or b[2] > b[3]:
                raise ValueError("embedding box must be re_lo re_hi im_lo im_hi")
            self.box = b
        self._pow_table = self._build_pow_table()
        self._box_cache: dict[int, Box] = {}
        self._key = (self.poly, self.box)
        if _validate_root and self.degree >= 2:
            self._check_single_root()

    @property
    def degree(self) -> int:
        return len(self.poly) - 1

    @property
    def is_rational(self) -> bool:
        return self.degree == 1

    @property
    def box_is_real(self) -> bool:
        return self.degree == 1 or (self.box[2] == 0 and self.box[3] == 0)

    def _build_pow_table(self):
        d = self.degree
        table = {}
        if d >= 2:
            row = [-c for c in self.poly[:d]]  # omega^d
            table[d] = tuple(row)
            for t in range(d + 1, 2 * d - 1):
                shifted = [0] + row[:-1]
                lead = row[-1]
                row = [shifted[i] + lead * table[d][i] for i in range(d)]
                table[t] = tuple(row)
        return table

    def _check_single_root(self) -> None:
        re_lo, re_hi, im_lo, im_hi = self.box
        if self.box_is_real:
            n = sturm_root_count(self.poly, re_lo, re_hi)
        else:
            import sympy

            x = sympy.Symbol("x")
            p = sympy.Poly(list(reversed(self.poly)), x)
            inf = sympy.Rational(re_lo) + sympy.Rational(im_lo) * sympy.I
            sup = sympy.Rational(re_hi) + sympy.Rational(im_hi) * sympy.I
            n = p.count_roots(inf, sup)
        if n != 1:
            raise ValueError(f"embedding box isolates {n} roots, expected exactly 1")

    def omega_value(self) -> Fraction:
        assert self.degree == 1
        return Fraction(-self.poly[0])

    def omega_box(self, bits: int) -> Box:
        if self.degree == 1:
            v = self.omega_value()
            return box(v)
        got = self._box_cache.get(bits)
        if got is None:
            start: Box = ((self.box[0], self.box[1]), (self.box[2], self.box[3]))
            got = ivl.isolate_poly_root(self.poly, start, bits)
            self._box_cache[bits] = got
        return got

    def conj_mode(self) -> str | None:
        """How complex conjugation acts on omega: identity, degree-2 swap, or None."""
        if self.box_is_real:
            return "id"
        if self.degree == 2:
            return "quad"
        return None


# --- tower levels -----------------------------------------------------------


class SqrtGen:
    """An adjoined principal square root of a (denominator-free) radicand."""

    __slots__ = ("radicand", "kind", "_init_box", "_box_cache", "_rad_num_cache", "_key")

    def __init__(self, radicand: "FieldElement", kind: str, init_box: Box | None):
        assert radicand.den == 1
        self.radicand = radicand
        self.kind = kind  # "real+", "real-", or "complex"
        self._init_box = init_box
        self._box_cache: dict[int, Box] = {}
        self._rad_num_cache: dict[int, tuple] = {}
        self._key = None

    def structure_key(self):
        if self._key is None:
            self._key = (self.radicand.level.structure_key(), self.radicand.num)
        return self._key

    def rad_num_in(self, prefix: "TowerLevel") -> tuple:
        """Radicand numerator re-indexed into the monomial layout of `prefix`."""
        got = self._rad_num_cache.get(id(prefix))
        if got is None:
            got = _remap_num(self.radicand, prefix)
            self._rad_num_cache[id(prefix)] = got
        return got

    def box(self, bits: int) -> Box:
        got = self._box_cache.get(bits)
        if got is not None:
            return got
        rad = self.radicand
        if self.kind == "real+":
            work = max(bits + 4, 16)
            while True:
                rb = _eval_num_box(rad.level, rad.num, work)
                lo, hi = rb[0]
                if lo > 0:
                    s = iv_sqrt((lo, hi), work)
                    if s[1] - s[0] <= Fraction(1, 1 << bits):
                        out: Box = (s, ivl.IV_ZERO)
                        break
                work *= 2
        elif self.kind == "real-":
            work = max(bits + 4, 16)
            while True:
                rb = _eval_num_box(rad.level, rad.num, work)
                lo, hi = (-rb[0][1], -rb[0][0])
                if lo > 0:
                    s = iv_sqrt((lo, hi), work)
                    if s[1] - s[0] <= Fraction(1, 1 << bits):
                        out = (ivl.IV_ZERO, s)
                        break
                work *= 2
        else:
            out = self._newton_box(bits)
        self._box_cache[bits] = out
        return out

    def _newton_box(self, bits: int) -> Box:
        rad = self.radicand
        best = self._init_box
        for cached_bits in self._box_cache:
            if box_width(self._box_cache[cached_bits]) < box_width(best):
                best = self._box_cache[cached_bits]
        target = Fraction(1, 1 << bits)
        work = max(bits + 8, 64)
        guard = 0
        while box_width(best) > target:
            rb = ivl.box_round_out(_eval_num_box(rad.level, rad.num, work), work + 32)
            nxt = ivl.newton_sqrt_step(best, rb)
            if nxt is None:
                raise ArithmeticError("sqrt certificate lost its root")
            nxt = ivl.box_round_out(nxt, work + 32)
            if box_width(nxt) >= box_width(best):
                work *= 2
                guard += 1
                if guard > 64:
                    raise ArithmeticError("sqrt certificate refinement stalled")
            best = nxt
        return best


class TowerLevel:
    """Base field plus an ordered tuple of adjoined square roots (depth <= 3)."""

    __slots__ = ("spec", "gens", "parent", "fast_rational", "is_real", "_skey", "_zero", "_one")

    def __init__(self, spec: FieldSpec, gens: tuple = (), parent: "TowerLevel | None" = None):
        self.spec = spec
        self.gens = gens
        self.parent = parent
        self.fast_rational = spec.degree == 1 and not gens
        self.is_real = spec.box_is_real and all(g.kind == "real+" for g in gens)
        self._skey = None
        self._zero = None
        self._one = None

    @property
    def depth(self) -> int:
        return len(self.gens)

    @property
    def width(self) -> int:
        return self.spec.degree << len(self.gens)

    def structure_key(self):
        if self._skey is None:
            self._skey = (self.spec._key, tuple(g.structure_key() for g in self.gens))
        return self._skey

    def extends(self, other: "TowerLevel") -> bool:
        if self is other:
            return True
        if self.spec._key != other.spec._key or len(self.gens) < len(other.gens):
            return False
        return all(
            a is b or a.structure_key() == b.structure_key()
            for a, b in zip(self.gens, other.gens)
        )

    def _extend(self, gen: SqrtGen) -> "TowerLevel":
        return TowerLevel(self.spec, self.gens + (gen,), parent=self)

    # -- element constructors --

    def element(self, den: int, num: Sequence[int]) -> "FieldElement":
        return FieldElement(self, den, tuple(num))

    def zero(self) -> "FieldElement":
        if self._zero is None:
            self._zero = FieldElement(self, 1, (0,) * self.width)
        return self._zero

    def one(self) -> "FieldElement":
        if self._one is None:
            self._one = self.from_int(1)
        return self._one

    def from_int(self, n: int) -> "FieldElement":
        num = [0] * self.width
        num[0] = n
        return FieldElement(self, 1, tuple(num))

    def from_fraction(self, q) -> "FieldElement":
        q = Fraction(q)
        num = [0] * self.width
        num[0] = q.numerator
        return FieldElement(self, q.denominator, tuple(num))

    def omega(self) -> "FieldElement":
        if self.spec.degree == 1:
            return self.from_fraction(self.spec.omega_value())
        num = [0] * self.width
        num[1] = 1
        return FieldElement(self, 1, tuple(num))

    def gen_element(self, j: int) -> "FieldElement":
        num = [0] * self.width
        num[(1 << j) * self.spec.degree] = 1
        return FieldElement(self, 1, tuple(num))

    def __repr__(self) -> str:
        return f"TowerLevel(d={self.spec.degree}, depth={self.depth})"


_BASE_CACHE: dict = {}


def base_level(poly: Sequence[int], embed_box=None) -> TowerLevel:
    """Interned base tower for a field spec (validation runs once per spec)."""
    key = (
        tuple(int(c) for c in poly),
        tuple(Fraction(x) for x in embed_box) if embed_box is not None else None,
    )
    lvl = _BASE_CACHE.get(key)
    if lvl is None:
        lvl = TowerLevel(FieldSpec(poly, embed_box))
        _BASE_CACHE[key] = lvl
    return lvl


def rational_field() -> TowerLevel:
    """The bare rationals: minimal polynomial x, omega = 0."""
    return base_level((0, 1))


def gaussian_field() -> TowerLevel:
    """Q[i] with the embedding picking i = +sqrt(-1)."""
    return base_level((1, 0, 1), (Fraction(-1, 2), Fraction(1, 2), Fraction(1, 2), Fraction(3, 2)))


# --- numerator arithmetic ---------------------------------------------------


def _bmul(spec: FieldSpec, a: tuple, b: tuple) -> tuple:
    d = spec.degree
    if d == 1:
        return (a[0] * b[0],)
    prod = [0] * (2 * d - 1)
    for i, ca in enumerate(a):
        if ca:
            for j, cb in enumerate(b):
                if cb:
                    prod[i + j] += ca * cb
    table = spec._pow_table
    for t in range(2 * d - 2, d - 1, -1):
        c = prod[t]
        if c:
            row = table[t]
            for i in range(d):
                if row[i]:
                    prod[i] += c * row[i]
    return tuple(prod[:d])


def _nmul(level: TowerLevel, a: tuple, b: tuple) -> tuple:
    """Multiply numerator polynomials (denominator-free) at `level`."""
    k = len(level.gens)
    if k == 0:
        return _bmul(level.spec, a, b)
    h = len(a) >> 1
    prefix = level.parent
    a0, a1 = a[:h], a[h:]
    b0, b1 = b[:h], b[h:]
    za1 = not any(a1)
    zb1 = not any(b1)
    lo = _nmul(prefix, a0, b0) if (any(a0) and any(b0)) else (0,) * h
    if not (za1 or zb1):
        hh = _nmul(prefix, a1, b1)
        rad = level.gens[-1].rad_num_in(prefix)
        hd = _nmul(prefix, hh, rad)
        lo = tuple(x + y for x, y in zip(lo, hd))
    hi = (0,) * h
    if not (za1 and zb1):
        if any(a0) and not zb1:
            hi = _nmul(prefix, a0, b1)
        if not za1 and any(b0):
            t = _nmul(prefix, a1, b0)
            hi = tuple(x + y for x, y in zip(hi, t))
    return tuple(lo) + tuple(hi)


def _remap_num(e: "FieldElement", target: TowerLevel) -> tuple:
    """Re-index e.num into target's monomial layout (target must contain e's gens)."""
    src = e.level
    if src is target or src.structure_key() == target.structure_key():
        return e.num
    d = target.spec.degree
    if src.spec._key != target.spec._key:
        raise IncompatibleLevels("different base fields")
    posmap = []
    tkeys = [g.structure_key() for g in target.gens]
    for g in src.gens:
        key = g.structure_key()
        try:
            posmap.append(tkeys.index(key))
        except ValueError:
            raise IncompatibleLevels("generator missing from target level") from None
    out = [0] * target.width
    sd = src.spec.degree
    for mask in range(1 << len(src.gens)):
        base = mask * sd
        group = e.num[base : base + sd]
        if not any(group):
            continue
        tmask = 0
        m = mask
        j = 0
        while m:
            if m & 1:
                tmask |= 1 << posmap[j]
            m >>= 1
            j += 1
        for t, c in enumerate(group):
            out[tmask * d + t] += c
    return tuple(out)


def lift(e: "FieldElement", target: TowerLevel) -> "FieldElement":
    if e.level is target:
        return e
    return FieldElement(target, e.den, _remap_num(e, target))


# --- field elements ---------------------------------------------------------


class FieldElement:
    """A scalar (1/den) * f(omega, g1, g2, g3) with integer coefficients."""

    __slots__ = ("level", "den", "num")

    def __init__(self, level: TowerLevel, den: int, num: tuple):
        if len(num) != level.width:
            raise ValueError(f"numerator needs {level.width} coefficients, got {len(num)}")
        if den < 0:
            den = -den
            num = tuple(-c for c in num)
        elif den == 0:
            raise ZeroDivisionError("zero denominator")
        if den != 1 and den.bit_length() > _REDUCE_BITS:
            g = den
            for c in num:
                if c:
                    g = gcd(g, c)
                    if g == 1:
                        break
            if g > 1:
                den //= g
                num = tuple(c // g for c in num)
        self.level = level
        self.den = den
        self.num = num

    # -- ring operations --

    def __add__(self, other: "FieldElement") -> "FieldElement":
        counter.count += 1
        a, b = _coerce(self, other)
        if a.den == b.den:
            return FieldElement(a.level, a.den, tuple(x + y for x, y in zip(a.num, b.num)))
        da, db = a.den, b.den
        return FieldElement(a.level, da * db, tuple(x * db + y * da for x, y in zip(a.num, b.num)))

    def __sub__(self, other: "FieldElement") -> "FieldElement":
        counter.count += 1
        a, b = _coerce(self, other)
        if a.den == b.den:
            return FieldElement(a.level, a.den, tuple(x - y for x, y in zip(a.num, b.num)))
        da, db = a.den, b.den
        return FieldElement(a.level, da * db, tuple(x * db - y * da for x, y in zip(a.num, b.num)))

    def __neg__(self) -> "FieldElement":
        return FieldElement(self.level, self.den, tuple(-c for c in self.num))

    def __mul__(self, other: "FieldElement") -> "FieldElement":
        counter.count += 1
        a, b = _coerce(self, other)
        lvl = a.level
        if lvl.fast_rational:
            return FieldElement(lvl, a.den * b.den, (a.num[0] * b.num[0],))
        return FieldElement(lvl, a.den * b.den, _nmul(lvl, a.num, b.num))

    def scale_int(self, n: int) -> "FieldElement":
        return FieldElement(self.level, self.den, tuple(c * n for c in self.num))

    def div_int(self, n: int) -> "FieldElement":
        if n == 0:
            raise ZeroDivisionError
        return FieldElement(self.level, self.den * n, self.num)

    # -- predicates --

    def is_zero(self) -> bool:
        """Exact test against zero (sound in redundant extensions)."""
        counter.count += 1
        return _num_is_zero(self.level, self.num)

    def equals(self, other: "FieldElement") -> bool:
        """Exact value equality."""
        a, b = _coerce(self, other)
        if a.den == b.den:
            diff = tuple(x - y for x, y in zip(a.num, b.num))
        else:
            da, db = a.den, b.den
            diff = tuple(x * db - y * da for x, y in zip(a.num, b.num))
        counter.count += 1
        return _num_is_zero(a.level, diff)

    def is_structural_rational(self) -> bool:
        """True when only the constant monomial is populated (value = num[0]/den)."""
        return not any(self.num[1:])

    def as_fraction(self) -> Fraction:
        assert self.is_structural_rational()
        return Fraction(self.num[0], self.den)

    def max_coeff_bits(self) -> int:
        bits = self.den.bit_length()
        for c in self.num:
            if c:
                b = c.bit_length()
                if b > bits:
                    bits = b
        return bits

    # -- inversion --

    def inverse(self) -> "FieldElement":
        if self.is_zero():
            raise ZeroDivisionError("inverse of zero")
        return _inverse(self)

    def __repr__(self) -> str:
        return f"FieldElement(den={self.den}, num={self.num})"


def _coerce(a: FieldElement, b: FieldElement):
    if a.level is b.level:
        return a, b
    if a.level.extends(b.level):
        return a, lift(b, a.level)
    if b.level.extends(a.level):
        return lift(a, b.level), b
    raise IncompatibleLevels("elements live in unrelated towers")


def common_level(elems: Iterable[FieldElement]) -> TowerLevel:
    lvl = None
    for e in elems:
        if lvl is None or e.level.extends(lvl):
            lvl = e.level
        elif not lvl.extends(e.level):
            raise IncompatibleLevels("elements live in unrelated towers")
    if lvl is None:
        raise ValueError("empty element list")
    return lvl


# --- exact zero test --------------------------------------------------------


def _num_is_zero(level: TowerLevel, num: tuple) -> bool:
    if not any(num):
        return True
    k = len(level.gens)
    if k == 0:
        return False
    h = len(num) >> 1
    prefix = level.parent
    lo, hi = num[:h], num[h:]
    if _num_is_zero(prefix, hi):
        return _num_is_zero(prefix, lo)
    gen = level.gens[-1]
    rad = gen.rad_num_in(prefix)
    if _num_is_zero(prefix, lo):
        return _num_is_zero(prefix, rad)
    lhs = _nmul(prefix, lo, lo)
    rhs = _nmul(prefix, _nmul(prefix, hi, hi), rad)
    if not _num_is_zero(prefix, tuple(x - y for x, y in zip(lhs, rhs))):
        return False
    # lo^2 == rad * hi^2, so exactly one of lo +/- hi*gen is zero; the numeric
    # boxes of the nonzero one eventually exclude zero.
    neg = tuple(lo) + tuple(-c for c in hi)
    bits = 32
    while True:
        if not box_contains_zero(_eval_num_box(level, num, bits)):
            return False
        if not box_contains_zero(_eval_num_box(level, neg, bits)):
            return True
        bits *= 2


# --- numeric boxes ----------------------------------------------------------


def _eval_num_box(level: TowerLevel, num: tuple, bits: int) -> Box:
    d = level.spec.degree
    wb = level.spec.omega_box(bits) if d > 1 else None
    omega_pows = [box(1)]
    if d > 1:
        for _ in range(d - 1):
            omega_pows.append(box_mul(omega_pows[-1], wb))
    gboxes = [g.box(bits) for g in level.gens]
    acc = BOX_ZERO
    for mask in range(1 << len(level.gens)):
        group = num[mask * d : (mask + 1) * d]
        if not any(group):
            continue
        if d == 1:
            s = box(group[0])
        else:
            s = BOX_ZERO
            for t, c in enumerate(group):
                if c:
                    s = box_add(s, box_scale(omega_pows[t], Fraction(c)))
        m = mask
        j = 0
        while m:
            if m & 1:
                s = box_mul(s, gboxes[j])
            m >>= 1
            j += 1
        acc = box_add(acc, s)
    return acc


def numeric_box(e: FieldElement, precision_bits: int) -> Box:
    """A certified complex box of width <= 2^-precision_bits containing e."""
    if precision_bits < 8:
        raise ValueError("precision_bits must be >= 8")
    target = Fraction(1, 1 << precision_bits)
    work = precision_bits + 8
    while True:
        b = _eval_num_box(e.level, e.num, work)
        b = box_scale(b, Fraction(1, e.den))
        if box_width(b) <= target:
            return b
        work *= 2


def _num_real_sign(e: FieldElement) -> int:
    """Sign of a known-real nonzero element via box refinement."""
    bits = 16
    while True:
        b = _eval_num_box(e.level, e.num, bits)
        if not iv_contains_zero(b[0]):
            return 1 if b[0][0] > 0 else -1
        bits *= 2


# --- adjoining square roots -------------------------------------------------


def adjoin_sqrt(level: TowerLevel, d_elem: FieldElement) -> tuple[TowerLevel, FieldElement]:
    """Return (level', sqrt) with sqrt denoting the principal root of d_elem.

    Rational radicands whose numerator*denominator is a perfect square stay at
    the same level with a rational square root; otherwise a fresh generator is
    adjoined without deciding redundancy.
    """
    d_elem = lift(d_elem, level) if d_elem.level is not level else d_elem
    if d_elem.is_zero():
        return level, level.zero()
    if d_elem.is_structural_rational():
        c, mu = d_elem.num[0], d_elem.den
        s = isqrt_exact(c * mu)
        if s is not None:
            num = [0] * level.width
            num[0] = s
            return level, FieldElement(level, mu, tuple(num))
    if level.depth >= MAX_TOWER_DEPTH:
        raise TowerDepthExceeded("tower depth would exceed 3")
    return _adjoin_gen(level, d_elem)


def _adjoin_gen(level: TowerLevel, d_elem: FieldElement, allow_deep=False) -> tuple[TowerLevel, FieldElement]:
    mu = d_elem.den
    rad = FieldElement(level, 1, tuple(c * mu for c in d_elem.num))  # mu^2 * D
    kind, init_box = _classify_radicand(rad)
    gen = SqrtGen(rad, kind, init_box)
    new_level = level._extend(gen)
    num = [0] * new_level.width
    num[(1 << level.depth) * level.spec.degree] = 1
    return new_level, FieldElement(new_level, mu, tuple(num))  # sqrt(D) = gen / mu


def _classify_radicand(rad: FieldElement) -> tuple[str, Box | None]:
    level = rad.level
    if level.is_real:
        return ("real+" if _num_real_sign(rad) > 0 else "real-"), None
    # Decide realness exactly when conjugation is expressible; otherwise fall
    # back to a complex certificate.
    known_nonreal = False
    try:
        closure = conj_closure(level)
        c = conj_into(rad, closure)
        if c.equals(lift(rad, closure.level)):
            return ("real+" if _num_real_sign(rad) > 0 else "real-"), None
        known_nonreal = True
    except (ConjugationUnsupported, TowerDepthExceeded):
        pass
    return "complex", _principal_sqrt_box(rad, known_nonreal)


def _principal_sqrt_box(rad: FieldElement, known_nonreal: bool = False) -> Box:
    """A certified box containing the principal sqrt of rad and excluding 0."""
    bits = 64
    for _ in range(40):
        rb = ivl.box_round_out(_eval_num_box(rad.level, rad.num, bits), bits + 32)
        mr, mi = ivl.box_mid(rb)
        # approximate principal sqrt of the midpoint, all in rationals
        r2 = mr * mr + mi * mi
        if r2 == 0:
            bits *= 2
            continue
        r = ivl.sqrt_bounds(r2, bits)[0]
        ure = (r + mr) / 2
        uim = (r - mr) / 2
        u = ivl.sqrt_bounds(ure, bits)[0] if ure > 0 else Fraction(0)
        v = ivl.sqrt_bounds(uim, bits)[0] if uim > 0 else Fraction(0)
        if mi < 0:
            v = -v
        mag = max(abs(u), abs(v))
        if mag == 0:
            bits *= 2
            continue
        rho = mag / 8
        cand: Box = ((u - rho, u + rho), (v - rho, v + rho))
        if box_contains_zero(cand):
            bits *= 2
            continue
        nxt = ivl.newton_sqrt_step(cand, rb)
        if nxt is None or not _box_inside(nxt, cand):
            bits *= 2
            continue
        # nxt provably contains the unique root of z^2 = rad in cand; make it
        # the principal one.
        b = ivl.box_round_out(nxt, bits + 32)
        rounds = 0
        while rounds < 60:
            rounds += 1
            if b[0][0] > 0:
                return b
            if b[0][1] < 0:
                return ivl.box_neg(b)
            if not known_nonreal and iv_contains_zero(b[0]) and not iv_contains_zero(b[1]):
                # Nearly pure imaginary root: principal iff imaginary part of
                # the radicand is >= 0 (argument pi maps to +i sqrt).
                sgn = _imag_sign_or_zero(rad)
                if sgn >= 0:
                    return b if b[1][0] > 0 else ivl.box_neg(b)
                return b if b[1][1] < 0 else ivl.box_neg(b)
            rb = ivl.box_round_out(_eval_num_box(rad.level, rad.num, bits), bits + 32)
            refined = ivl.newton_sqrt_step(b, rb)
            if refined is None or box_width(refined) >= box_width(b):
                bits *= 2
                rb = ivl.box_round_out(_eval_num_box(rad.level, rad.num, bits), bits + 32)
                refined = ivl.newton_sqrt_step(b, rb)
                if refined is None:
                    break
            b = ivl.box_round_out(refined, bits + 32)
        bits *= 2
    raise ArithmeticError("could not certify principal square root")


def _imag_sign_or_zero(e: FieldElement) -> int:
    """Sign of Im(e), with 0 meaning provably real (needs conjugation support)."""
    try:
        closure = conj_closure(e.level)
        if conj_into(e, closure).equals(lift(e, closure.level)):
            return 0
    except (ConjugationUnsupported, TowerDepthExceeded):
        raise ArithmeticError("cannot certify principal branch near the cut")
    bits = 16
    while True:
        b = _eval_num_box(e.level, e.num, bits)
        if not iv_contains_zero(b[1]):
            return 1 if b[1][0] > 0 else -1
        bits *= 2


def _box_inside(inner: Box, outer: Box) -> bool:
    return (
        outer[0][0] <= inner[0][0]
        and inner[0][1] <= outer[0][1]
        and outer[1][0] <= inner[1][0]
        and inner[1][1] <= outer[1][1]
    )


# --- conjugation ------------------------------------------------------------


class ConjClosure:
    """A level closed under conjugation, with generator partners and signs."""

    __slots__ = ("level", "partner", "sign")

    def __init__(self, level: TowerLevel, partner: tuple, sign: tuple):
        self.level = level
        self.partner = partner
        self.sign = sign


def _conj_base_group(spec: FieldSpec, group: tuple) -> tuple:
    mode = spec.conj_mode()
    if mode == "id":
        return group
    if mode == "quad":
        a, b = group
        return (a - b * spec.poly[1], -b)
    raise ConjugationUnsupported(
        "conjugation needs a real embedding or a degree-2 conjugate pair"
    )


def conj_closure(level: TowerLevel) -> ConjClosure:
    """Extend `level` (if needed) so conjugation maps it into itself."""
    if level.spec.conj_mode() is None:
        raise ConjugationUnsupported(
            "conjugation needs a real embedding or a degree-2 conjugate pair"
        )
    if level.is_real:
        n = level.depth
        return ConjClosure(level, tuple(range(n)), (1,) * n)
    out = level
    partner: list[int] = []
    sign: list[int] = []
    j = 0
    while j < len(out.gens):
        gen = out.gens[j]
        if gen.kind == "real+":
            partner.append(j)
            sign.append(1)
            j += 1
            continue
        if gen.kind == "real-":
            partner.append(j)
            sign.append(-1)
            j += 1
            continue
        sub = ConjClosure(out, tuple(partner), tuple(sign))
        c_rad = _conj_with_maps(gen.radicand, sub)
        rad_here = lift(gen.radicand, out)
        if c_rad.equals(rad_here):
            partner.append(j)
            sign.append(-1 if _num_real_sign(gen.radicand) < 0 else 1)
        else:
            found = None
            for i, g2 in enumerate(out.gens):
                if i != j and c_rad.equals(lift(g2.radicand, out)):
                    found = i
                    break
            if found is not None:
                partner.append(found)
                sign.append(1)
            else:
                if out.depth >= MAX_TOWER_DEPTH:
                    raise TowerDepthExceeded("conjugation closure exceeds tower depth")
                # conj of a non-real radicand is non-real, so the partner
                # generator is built directly with a complex certificate.
                new_gen = SqrtGen(c_rad, "complex", _principal_sqrt_box(c_rad, known_nonreal=True))
                out = out._extend(new_gen)
                partner.append(out.depth - 1)
                sign.append(1)
        j += 1
    return ConjClosure(out, tuple(partner), tuple(sign))


def _conj_with_maps(e: FieldElement, closure: ConjClosure) -> FieldElement:
    """Conjugate e into closure.level; e's generators must all be mapped."""
    lvl = closure.level
    d = lvl.spec.degree
    src = e.level
    out = lvl.zero()
    src_gen_pos = []
    tkeys = [g.structure_key() for g in lvl.gens]
    for g in src.gens:
        src_gen_pos.append(tkeys.index(g.structure_key()))
    sd = src.spec.degree
    for mask in range(1 << len(src.gens)):
        group = e.num[mask * sd : (mask + 1) * sd]
        if not any(group):
            continue
        cg = _conj_base_group(src.spec, group)
        num = [0] * lvl.width
        num[:d] = cg
        term = FieldElement(lvl, 1, tuple(num))
        m = mask
        j = 0
        while m:
            if m & 1:
                pos = src_gen_pos[j]
                pj = closure.partner[pos]
                term = term * lvl.gen_element(pj)
                if closure.sign[pos] < 0:
                    term = -term
            m >>= 1
            j += 1
        out = out + term
    return FieldElement(out.level, e.den * out.den, out.num) if e.den != 1 else out


def conj_into(e: FieldElement, closure: ConjClosure) -> FieldElement:
    return _conj_with_maps(e, closure)


# --- norms and normalization ------------------------------------------------


def hermitian_norm_square(vec: Sequence[FieldElement]) -> tuple[FieldElement, TowerLevel, tuple]:
    """<v|v> = sum conj(x) x, over a conjugation-closed level."""
    lvl = common_level(vec)
    lifted = tuple(lift(x, lvl) for x in vec)
    if lvl.is_real:
        acc = lvl.zero()
        for x in lifted:
            acc = acc + x * x
        return acc, lvl, lifted
    closure = conj_closure(lvl)
    lifted = tuple(lift(x, closure.level) for x in lifted)
    acc = closure.level.zero()
    for x in lifted:
        acc = acc + conj_into(x, closure) * x
    return acc, closure.level, lifted


def normalize_vector(vec: Sequence[FieldElement]) -> tuple[tuple[FieldElement, ...], TowerLevel]:
    """Scale vec to unit norm exactly, adjoining sqrt(<v|v>) when needed."""
    n2, lvl, lifted = hermitian_norm_square(vec)
    if n2.is_zero():
        raise ValueError("cannot normalize the zero vector")
    ext, root = adjoin_sqrt(lvl, n2)
    inv_n2 = lift(n2, ext).inverse()
    factor = root * inv_n2  # 1/sqrt(<v|v>)
    return tuple(lift(x, ext) * factor for x in lifted), ext


# --- inversion --------------------------------------------------------------


def _base_inverse(e: FieldElement) -> FieldElement:
    lvl = e.level
    d = lvl.spec.degree
    if d == 1:
        c = e.num[0]
        return FieldElement(lvl, c, (e.den,))
    # extended Euclid in Q[x] against the minimal polynomial
    p = [Fraction(c) for c in lvl.spec.poly]
    a = [Fraction(c) for c in e.num[:d]]
    r0, r1 = p, a[:]
    s0, s1 = [Fraction(0)], [Fraction(1)]

    def strip(v):
        while v and v[-1] == 0:
            v.pop()
        return v

    strip(r1)
    while True:
        if len(r1) == 1:
            break
        q, rem = _poly_divmod(r0, r1)
        r0, r1 = r1, strip(rem)
        if not r1:
            raise ZeroDivisionError("element not invertible (reducible polynomial?)")
        s0, s1 = s1, strip(_poly_sub(s0, _poly_mul(q, s1)))
    # r1 is a nonzero constant: inverse = s1 / r1
    inv = [c / r1[0] for c in s1]
    den = 1
    for c in inv:
        den = den * c.denominator // gcd(den, c.denominator)
    num = [0] * lvl.width
    for i, c in enumerate(inv):
        num[i] = int(c * den)
    return FieldElement(lvl, den, tuple(num)).scale_int(e.den)


def _poly_divmod(a, b):
    a = a[:]
    q = [Fraction(0)] * max(1, len(a) - len(b) + 1)
    while len(a) >= len(b) and any(a):
        if a[-1] == 0:
            a.pop()
            continue
        f = a[-1] / b[-1]
        k = len(a) - len(b)
        q[k] = f
        for i, c in enumerate(b):
            a[i + k] -= f * c
        a.pop()
    return q, a


def _poly_mul(a, b):
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                if y:
                    out[i + j] += x * y
    return out


def _poly_sub(a, b):
    n = max(len(a), len(b))
    out = [Fraction(0)] * n
    for i, x in enumerate(a):
        out[i] += x
    for i, y in enumerate(b):
        out[i] -= y
    return out


def _inverse(e: FieldElement) -> FieldElement:
    lvl = e.level
    if lvl.depth == 0:
        return _base_inverse(e)
    h = len(e.num) >> 1
    prefix = lvl.parent
    a0 = FieldElement(prefix, 1, e.num[:h])
    a1 = FieldElement(prefix, 1, e.num[h:])
    if a1.is_zero():
        return lift(_inverse(a0), lvl).scale_int(e.den)
    rad = FieldElement(prefix, 1, lvl.gens[-1].rad_num_in(prefix))
    nrm = a0 * a0 - rad * (a1 * a1)
    if nrm.is_zero():
        # redundant generator: gen = a0/a1 here, so e = 2*a0/den
        doubled = FieldElement(lvl, e.den, tuple(2 * c for c in e.num[:h]) + (0,) * h)
        return _inverse(doubled)
    inv_n = lift(_inverse(nrm), lvl)
    conj_g = FieldElement(lvl, 1, tuple(e.num[:h]) + tuple(-c for c in e.num[h:]))
    return (conj_g * inv_n).scale_int(e.den)


# --- cross-tower joins (verification plumbing) -------------------------------


def join_levels(la: TowerLevel, lb: TowerLevel) -> TowerLevel:
    """Smallest common tower containing both gen lists (may exceed depth 3;
    used only for verifying externally supplied assignments)."""
    if la.extends(lb):
        return la
    if lb.extends(la):
        return lb
    if la.spec._key != lb.spec._key:
        raise IncompatibleLevels("different base fields")
    out = la
    keys = {g.structure_key() for g in la.gens}
    for g in lb.gens:
        if g.structure_key() not in keys:
            out = out._extend(g)
            keys.add(g.structure_key())
    return out
