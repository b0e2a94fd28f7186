"""Desk-scale independent verification.

brute_kernel_dim lifts every constraint row to dense rows on the full
2^n-dimensional space and measures the intersection of kernels by exact
elimination; it is deliberately slow and trusted.  verify_assignment checks a
tensor-product assignment against every constraint exactly, plus unit norms.
classical_2sat_reference is the standard implication-graph / strongly
connected components decision for 2-CNF.
"""

from __future__ import annotations

from math import gcd
from typing import Sequence

from .fieldarith import FieldElement, IncompatibleLevels, hermitian_norm_square, join_levels, lift
from .model import Assignment, Instance

MAX_BRUTE_QUBITS = 12


class CoverageError(ValueError):
    """The assignment does not cover each qubit exactly once."""


# --- kernel dimension ---------------------------------------------------------


def brute_kernel_dim(instance: Instance) -> int:
    """Dimension of the joint kernel of all constraints (satisfiable iff > 0)."""
    n = instance.n
    if n > MAX_BRUTE_QUBITS:
        raise ValueError(f"brute force capped at {MAX_BRUTE_QUBITS} qubits")
    dim = 1 << n
    spec = instance.level.spec
    if spec.degree == 1 and instance.level.depth == 0:
        rows = _lift_rows(instance, dim, _scalar_q)
        rank = _rank_rows(rows, _q_mul, _q_sub, _q_zero, _q_strip)
    elif spec.poly == (1, 0, 1) and instance.level.depth == 0:
        rows = _lift_rows(instance, dim, _scalar_qi)
        rank = _rank_rows(rows, _qi_mul, _qi_sub, _qi_zero, _qi_strip)
    else:
        rows = _lift_rows(instance, dim, lambda e: e)
        rank = _rank_field_rows(rows, instance.level)
    return dim - rank


def _scalar_q(e: FieldElement) -> int:
    # rows are cleared of denominators afterwards; scale by den here instead
    return e.num[0]


def _scalar_qi(e: FieldElement):
    return (e.num[0], e.num[1])


def _lift_rows(instance: Instance, dim: int, conv):
    rows = []
    for c in instance.constraints:
        u, v = c.u, c.v
        # common denominator across the four row coefficients
        lcm = 1
        for e in c.eta:
            lcm = lcm * e.den // gcd(lcm, e.den)
        coeffs = []
        for e in c.eta:
            s = lcm // e.den
            if conv is _scalar_q:
                coeffs.append(e.num[0] * s)
            elif conv is _scalar_qi:
                coeffs.append((e.num[0] * s, e.num[1] * s))
            else:
                coeffs.append(e.scale_int(s))
        by_rest: dict[int, list] = {}
        mask = (1 << u) | (1 << v)
        for g in range(dim):
            rest = g & ~mask
            a = (g >> u) & 1
            b = (g >> v) & 1
            by_rest.setdefault(rest, []).append((g, 2 * a + b))
        for entries in by_rest.values():
            if conv is _scalar_q:
                row = [0] * dim
            elif conv is _scalar_qi:
                row = [(0, 0)] * dim
            else:
                row = [instance.level.zero()] * dim
            for g, k in entries:
                row[g] = coeffs[k]
            rows.append(row)
    return rows


def _q_mul(a, b):
    return a * b


def _q_sub(a, b):
    return a - b


def _q_zero(a):
    return a == 0


def _q_strip(row):
    g = 0
    for x in row:
        if x:
            g = gcd(g, x)
            if g == 1:
                return row
    if g > 1:
        return [x // g for x in row]
    return row


def _qi_mul(a, b):
    return (a[0] * b[0] - a[1] * b[1], a[0] * b[1] + a[1] * b[0])


def _qi_sub(a, b):
    return (a[0] - b[0], a[1] - b[1])


def _qi_zero(a):
    return a[0] == 0 and a[1] == 0


def _qi_strip(row):
    g = 0
    for x, y in row:
        g = gcd(g, gcd(x, y))
        if g == 1:
            return row
    if g > 1:
        return [(x // g, y // g) for x, y in row]
    return row


def _rank_rows(rows, mul, sub, is_zero, strip) -> int:
    pivots: list[tuple[int, list]] = []
    for row in rows:
        for pc, pr in pivots:
            x = row[pc]
            if not is_zero(x):
                f = pr[pc]
                row = [sub(mul(a, f), mul(b, x)) for a, b in zip(row, pr)]
        pivot = next((i for i, x in enumerate(row) if not is_zero(x)), None)
        if pivot is None:
            continue
        row = strip(row)
        pivots.append((pivot, row))
        pivots.sort(key=lambda t: t[0])
    return len(pivots)


def _rank_field_rows(rows, level) -> int:
    pivots: list[tuple[int, list]] = []
    for row in rows:
        for pc, pr in pivots:
            x = row[pc]
            if not x.is_zero():
                f = pr[pc]
                row = [a * f - b * x for a, b in zip(row, pr)]
        pivot = next((i for i, x in enumerate(row) if not x.is_zero()), None)
        if pivot is None:
            continue
        pivots.append((pivot, row))
        pivots.sort(key=lambda t: t[0])
    return len(pivots)


# --- assignment verification ---------------------------------------------------


def _mixed_mul(a: FieldElement, b: FieldElement) -> FieldElement:
    try:
        return a * b
    except IncompatibleLevels:
        target = join_levels(a.level, b.level)
        return lift(a, target) * lift(b, target)


def _mixed_add(a: FieldElement, b: FieldElement) -> FieldElement:
    try:
        return a + b
    except IncompatibleLevels:
        target = join_levels(a.level, b.level)
        return lift(a, target) + lift(b, target)


def find_violation(instance: Instance, assignment: Assignment) -> dict | None:
    """First norm or constraint violation, or None.  Raises CoverageError when
    the assignment does not assign each qubit exactly once."""
    n = instance.n
    seen: set[int] = set()
    for q in assignment.singles:
        if q in seen or not (0 <= q < n):
            raise CoverageError(f"qubit {q} assigned more than once or out of range")
        seen.add(q)
    for (u, v) in assignment.pairs:
        for q in (u, v):
            if q in seen or not (0 <= q < n):
                raise CoverageError(f"qubit {q} assigned more than once or out of range")
            seen.add(q)
    if seen != set(range(n)):
        raise CoverageError(f"qubits {sorted(set(range(n)) - seen)} unassigned")

    for q, vec in assignment.singles.items():
        norm, lvl, _ = hermitian_norm_square(vec)
        if not norm.equals(lvl.one()):
            return {"kind": "norm", "qubit": q}
    for key, vec in assignment.pairs.items():
        norm, lvl, _ = hermitian_norm_square(vec)
        if not norm.equals(lvl.one()):
            return {"kind": "norm", "pair": key}

    pair_of: dict[int, tuple[int, int]] = {}
    for key in assignment.pairs:
        pair_of[key[0]] = key
        pair_of[key[1]] = key

    for c in instance.constraints:
        if not _constraint_satisfied(c, assignment, pair_of):
            return {"kind": "constraint", "constraint": c.cid, "pair": (c.u, c.v)}
    return None


def verify_assignment(instance: Instance, assignment: Assignment) -> bool:
    """Exact check that the assignment satisfies every constraint, unit norms
    included."""
    return find_violation(instance, assignment) is None


def _pair_amp(assignment, key, first_val, second_val):
    return assignment.pairs[key][2 * first_val + second_val]


def _constraint_satisfied(c, assignment: Assignment, pair_of) -> bool:
    eta = c.eta
    u, v = c.u, c.v
    pu, pv = pair_of.get(u), pair_of.get(v)
    if pu is None and pv is None:
        psi_u = assignment.singles[u]
        psi_v = assignment.singles[v]
        # contract the u side first; a zero row satisfies the constraint
        r0 = _mixed_add(_mixed_mul(eta[0], psi_u[0]), _mixed_mul(eta[2], psi_u[1]))
        r1 = _mixed_add(_mixed_mul(eta[1], psi_u[0]), _mixed_mul(eta[3], psi_u[1]))
        if r0.is_zero() and r1.is_zero():
            return True
        total = _mixed_add(_mixed_mul(r0, psi_v[0]), _mixed_mul(r1, psi_v[1]))
        return total.is_zero()
    if pu is not None and pu == pv:
        total = None
        for a in (0, 1):
            for b in (0, 1):
                amp_uv = _pair_amp(assignment, pu, a if pu[0] == u else b, b if pu[0] == u else a)
                term = _mixed_mul(eta[2 * a + b], amp_uv)
                total = term if total is None else _mixed_add(total, term)
        return total.is_zero()
    if pu is not None and pv is None:
        psi_v = assignment.singles[v]
        partner_first = pu[0] == u  # True: u occupies the first slot of the pair
        for t in (0, 1):
            total = None
            for a in (0, 1):
                amp = _pair_amp(assignment, pu, a if partner_first else t, t if partner_first else a)
                for b in (0, 1):
                    term = _mixed_mul(_mixed_mul(eta[2 * a + b], amp), psi_v[b])
                    total = term if total is None else _mixed_add(total, term)
            if not total.is_zero():
                return False
        return True
    if pv is not None and pu is None:
        psi_u = assignment.singles[u]
        v_first = pv[0] == v
        for t in (0, 1):
            total = None
            for b in (0, 1):
                amp = _pair_amp(assignment, pv, b if v_first else t, t if v_first else b)
                for a in (0, 1):
                    term = _mixed_mul(_mixed_mul(eta[2 * a + b], amp), psi_u[a])
                    total = term if total is None else _mixed_add(total, term)
            if not total.is_zero():
                return False
        return True
    # endpoints in two different entangled pairs
    u_first = pu[0] == u
    v_first = pv[0] == v
    for t1 in (0, 1):
        for t2 in (0, 1):
            total = None
            for a in (0, 1):
                amp1 = _pair_amp(assignment, pu, a if u_first else t1, t1 if u_first else a)
                for b in (0, 1):
                    amp2 = _pair_amp(assignment, pv, b if v_first else t2, t2 if v_first else b)
                    term = _mixed_mul(_mixed_mul(eta[2 * a + b], amp1), amp2)
                    total = term if total is None else _mixed_add(total, term)
            if not total.is_zero():
                return False
    return True


# --- classical 2-SAT reference --------------------------------------------------


def classical_2sat_reference(clauses: Sequence[tuple[int, int]], nvars: int | None = None) -> bool:
    """Implication-graph decision: SAT iff no variable shares a strongly
    connected component with its negation."""
    maxvar = 0
    for a, b in clauses:
        maxvar = max(maxvar, abs(a), abs(b))
    n = nvars if nvars is not None else maxvar
    size = 2 * n
    adj: list[list[int]] = [[] for _ in range(size)]

    def node(lit: int) -> int:
        return 2 * (abs(lit) - 1) + (0 if lit > 0 else 1)

    for a, b in clauses:
        adj[node(-a)].append(node(b))
        adj[node(-b)].append(node(a))

    comp = _tarjan_scc(adj)
    return all(comp[2 * v] != comp[2 * v + 1] for v in range(n))


def _tarjan_scc(adj: list[list[int]]) -> list[int]:
    n = len(adj)
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    comp = [-1] * n
    stack: list[int] = []
    next_index = 0
    next_comp = 0
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        while work:
            v, pi = work[-1]
            if pi == 0:
                index[v] = low[v] = next_index
                next_index += 1
                stack.append(v)
                on_stack[v] = True
            advanced = False
            while pi < len(adj[v]):
                w = adj[v][pi]
                pi += 1
                if index[w] == -1:
                    work[-1] = (v, pi)
                    work.append((w, 0))
                    advanced = True
                    break
                if on_stack[w]:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if low[v] == index[v]:
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp[w] = next_comp
                    if w == v:
                        break
                next_comp += 1
            if work:
                pv = work[-1][0]
                low[pv] = min(low[pv], low[v])
    return comp
