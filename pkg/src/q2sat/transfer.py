"""Transfer matrices: the directed implication operators of 2-qubit constraints.

A rank-1 constraint is held as a single row vector <eta| of four field
coefficients.  Its transfer matrix maps an assignment on one endpoint to the
forced assignment on the other:

    T |a>  =  <eta|(|a>|0>) |1>  -  <eta|(|a>|1>) |0>

Walk and cycle matrices are just products of these, and the whole module is
scalar-agnostic: everything downstream only ever uses matrices and vectors up
to a nonzero factor.
"""

from __future__ import annotations

from typing import Sequence

from .fieldarith import FieldElement, TowerLevel, adjoin_sqrt, common_level, lift

Vec2 = tuple[FieldElement, FieldElement]


class TransferMatrix:
    """2x2 matrix of field elements, row-major entries (a, b, c, d)."""

    __slots__ = ("entries", "provenance")

    def __init__(self, entries: Sequence[FieldElement], provenance=None):
        self.entries = tuple(entries)
        self.provenance = provenance

    @property
    def level(self) -> TowerLevel:
        return common_level(self.entries)

    def apply(self, v: Vec2) -> Vec2:
        a, b, c, d = self.entries
        return (a * v[0] + b * v[1], c * v[0] + d * v[1])

    def matmul(self, other: "TransferMatrix") -> "TransferMatrix":
        a, b, c, d = self.entries
        e, f, g, h = other.entries
        return TransferMatrix((a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h))

    def adjugate(self) -> "TransferMatrix":
        a, b, c, d = self.entries
        return TransferMatrix((d, -b, -c, a))

    def det(self) -> FieldElement:
        a, b, c, d = self.entries
        return a * d - b * c

    def trace(self) -> FieldElement:
        return self.entries[0] + self.entries[3]

    def is_zero(self) -> bool:
        return all(e.is_zero() for e in self.entries)

    def __repr__(self) -> str:
        return f"TransferMatrix({self.entries!r})"


def identity(level: TowerLevel) -> TransferMatrix:
    one, zero = level.one(), level.zero()
    return TransferMatrix((one, zero, zero, one))


def transfer_of(eta: Sequence[FieldElement], u_to_v: bool = True) -> TransferMatrix:
    """Transfer matrix of the constraint row (e00, e01, e10, e11)."""
    e00, e01, e10, e11 = eta
    if u_to_v:
        return TransferMatrix((-e01, -e11, e00, e10))
    return TransferMatrix((-e10, -e11, e00, e01))


def eta_from_transfer(t: Sequence[FieldElement]) -> tuple[FieldElement, ...]:
    """Constraint row whose forward transfer matrix is exactly t."""
    t00, t01, t10, t11 = t
    return (t10, -t00, t11, -t01)


def compose(walk: Sequence[TransferMatrix]) -> TransferMatrix:
    """Walk matrix: right-to-left product, first step applied first."""
    if not walk:
        raise ValueError("empty walk")
    acc = walk[0]
    for m in walk[1:]:
        acc = m.matmul(acc)
    return acc


def _flat(x) -> tuple[FieldElement, ...]:
    if isinstance(x, TransferMatrix):
        return x.entries
    return tuple(x)


def proportional(a, b) -> bool:
    """a = c*b for some nonzero c (both zero is not proportional)."""
    fa, fb = _flat(a), _flat(b)
    if len(fa) != len(fb):
        raise ValueError("shape mismatch")
    pivot = None
    for i, x in enumerate(fb):
        if not x.is_zero():
            pivot = i
            break
    if pivot is None:
        return False
    if fa[pivot].is_zero():
        return False
    pb = fb[pivot]
    pa = fa[pivot]
    for i in range(len(fa)):
        if i == pivot:
            continue
        if not (fa[i] * pb - fb[i] * pa).is_zero():
            return False
    return True


def proportional_star(a, b) -> bool:
    """a = c*b allowing c = 0 (i.e. a is zero or proportional to b)."""
    fa = _flat(a)
    if all(x.is_zero() for x in fa):
        return True
    return proportional(a, b)


class DegenerateSpectrum:
    """Marker: the matrix is proportional to the identity, every vector works."""

    def __repr__(self) -> str:
        return "DegenerateSpectrum"


DEGENERATE = DegenerateSpectrum()


def eigenvectors(t: TransferMatrix):
    """Eigenvectors of a nonzero 2x2 matrix, one per distinct eigenvalue.

    Returns DEGENERATE when t is proportional to the identity; otherwise a
    list of (vector, level) pairs over a level extended by the square root of
    the characteristic discriminant when that is not already present.
    """
    a, b, c, d = t.entries
    if t.is_zero():
        raise ValueError("zero matrix")
    if b.is_zero() and c.is_zero() and a.equals(d):
        return DEGENERATE
    level = t.level
    tr = a + d
    disc = tr * tr - (a * d - b * c).scale_int(4)
    if disc.is_zero():
        lam = tr.div_int(2)
        return [(_kernel_vector(t, lam, level), level)]
    ext, root = adjoin_sqrt(level, disc)
    tr_e = lift(tr, ext)
    lam1 = (tr_e + root).div_int(2)
    lam2 = (tr_e - root).div_int(2)
    out = []
    for lam in (lam1, lam2):
        out.append((_kernel_vector(t, lam, ext), ext))
    return out


def _kernel_vector(t: TransferMatrix, lam: FieldElement, level: TowerLevel) -> Vec2:
    """Nonzero kernel vector of (t - lam*I), which has rank 1 here."""
    a, b, c, d = (lift(e, level) for e in t.entries)
    m00, m01 = a - lam, b
    m10, m11 = c, d - lam
    if not (m00.is_zero() and m01.is_zero()):
        v = (m01, -m00)
        if not (v[0].is_zero() and v[1].is_zero()):
            return v
    return (m11, -m10)
