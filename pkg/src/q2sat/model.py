"""Instance data model, file formats, CNF embedding, and instance generators.

Instance files are line oriented UTF-8 text:

    q2sat 1
    field poly <c0> <c1> ... <cd>          # monic; "field poly 0 1" means Q
    field box <re_lo> <re_hi> <im_lo> <im_hi>   # rationals a/b; omitted for Q
    qubits <n>
    constraint <u> <v> <e00> <e01> <e10> <e11>  # each e as mu:f0,f1,...,f(d-1)

Assignment files hold one line per assigned qubit or entangled pair, or the
single word UNSAT.  Scalars serialize as mu:g0/g1/... with one comma-separated
coefficient group per adjoined-root monomial.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from . import transfer
from .fieldarith import FieldElement, TowerLevel, adjoin_sqrt, base_level, gaussian_field, lift, rational_field

FORMAT_TAG = "q2sat"
FORMAT_VERSION = 1


class ParseError(ValueError):
    def __init__(self, msg: str, line: int | None = None, col: int | None = None):
        loc = ""
        if line is not None:
            loc = f" (line {line}" + (f", col {col}" if col is not None else "") + ")"
        super().__init__(msg + loc)
        self.line = line
        self.col = col


@dataclass
class Constraint:
    cid: int
    u: int
    v: int
    eta: tuple[FieldElement, FieldElement, FieldElement, FieldElement]

    def pair(self) -> tuple[int, int]:
        return (self.u, self.v) if self.u < self.v else (self.v, self.u)

    def eta_for(self, a: int, b: int):
        """Row coefficients re-ordered to the basis of qubits (a, b)."""
        if (a, b) == (self.u, self.v):
            return self.eta
        if (a, b) == (self.v, self.u):
            e = self.eta
            return (e[0], e[2], e[1], e[3])
        raise ValueError("constraint does not act on this pair")


@dataclass
class Instance:
    n: int
    constraints: list[Constraint]
    level: TowerLevel

    def validate(self) -> None:
        for c in self.constraints:
            if c.u == c.v:
                raise ValueError(f"constraint {c.cid} acts twice on qubit {c.u}")
            if not (0 <= c.u < self.n and 0 <= c.v < self.n):
                raise ValueError(f"constraint {c.cid} qubit index out of range")
            if all(x.is_zero() for x in c.eta):
                raise ValueError(f"constraint {c.cid} has a zero row")


@dataclass
class Assignment:
    """Satisfying state as single-qubit vectors plus entangled pair vectors."""

    singles: dict[int, tuple[FieldElement, FieldElement]] = field(default_factory=dict)
    pairs: dict[tuple[int, int], tuple[FieldElement, ...]] = field(default_factory=dict)

    def covered_qubits(self) -> set[int]:
        out = set(self.singles)
        for (u, v) in self.pairs:
            out.add(u)
            out.add(v)
        return out


# --- scalar and file serialization -----------------------------------------


def _serialize_elem(e: FieldElement) -> str:
    d = e.level.spec.degree
    groups = []
    for mask in range(len(e.num) // d):
        groups.append(",".join(str(c) for c in e.num[mask * d : (mask + 1) * d]))
    return f"{e.den}:" + "/".join(groups)


def _parse_elem(tok: str, level: TowerLevel, line: int, col: int) -> FieldElement:
    try:
        mu_s, rest = tok.split(":", 1)
        mu = int(mu_s)
        groups = [[int(c) for c in g.split(",")] for g in rest.split("/")]
    except ValueError:
        raise ParseError(f"malformed scalar {tok!r}", line, col) from None
    d = level.spec.degree
    if mu <= 0:
        raise ParseError("scalar denominator must be positive", line, col)
    if len(groups) > (1 << level.depth) or len(groups) & (len(groups) - 1):
        raise ParseError("bad monomial group count", line, col)
    num = [0] * level.width
    for mask, g in enumerate(groups):
        if len(g) != d:
            raise ParseError(f"expected {d} coefficients per group", line, col)
        num[mask * d : (mask + 1) * d] = g
    return FieldElement(level, mu, tuple(num))


def serialize_instance(inst: Instance) -> str:
    lines = [f"{FORMAT_TAG} {FORMAT_VERSION}"]
    spec = inst.level.spec
    lines.append("field poly " + " ".join(str(c) for c in spec.poly))
    if spec.box is not None:
        lines.append("field box " + " ".join(str(x) for x in spec.box))
    lines.append(f"qubits {inst.n}")
    for c in inst.constraints:
        lines.append(
            f"constraint {c.u} {c.v} " + " ".join(_serialize_elem(e) for e in c.eta)
        )
    return "\n".join(lines) + "\n"


def parse_instance(data) -> Instance:
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    poly = None
    boxv = None
    n = None
    constraints: list[Constraint] = []
    level: TowerLevel | None = None
    saw_tag = False
    for lineno, raw in enumerate(data.splitlines(), start=1):
        text = raw.split("#", 1)[0].strip()
        if not text:
            continue
        toks = text.split()
        kind = toks[0]
        if not saw_tag:
            if kind != FORMAT_TAG or len(toks) != 2 or toks[1] != str(FORMAT_VERSION):
                raise ParseError(f"expected header '{FORMAT_TAG} {FORMAT_VERSION}'", lineno, 1)
            saw_tag = True
            continue
        if kind == "field":
            if len(toks) < 2:
                raise ParseError("incomplete field line", lineno, 1)
            if toks[1] == "poly":
                try:
                    poly = tuple(int(t) for t in toks[2:])
                except ValueError:
                    raise ParseError("polynomial coefficients must be integers", lineno, 3) from None
                if len(poly) < 2 or poly[-1] != 1:
                    raise ParseError("field polynomial must be monic of degree >= 1", lineno, 3)
            elif toks[1] == "box":
                try:
                    boxv = tuple(Fraction(t) for t in toks[2:])
                except (ValueError, ZeroDivisionError):
                    raise ParseError("box entries must be rationals", lineno, 3) from None
                if len(boxv) != 4:
                    raise ParseError("box needs 4 entries", lineno, 3)
            else:
                raise ParseError(f"unknown field directive {toks[1]!r}", lineno, 2)
        elif kind == "qubits":
            if len(toks) != 2 or not toks[1].isdigit():
                raise ParseError("qubits line needs one nonnegative integer", lineno, 2)
            n = int(toks[1])
        elif kind == "constraint":
            if poly is None:
                raise ParseError("constraint before field declaration", lineno, 1)
            if n is None:
                raise ParseError("constraint before qubits declaration", lineno, 1)
            if level is None:
                try:
                    level = base_level(poly, boxv)
                except ValueError as exc:
                    raise ParseError(str(exc), lineno, 1) from None
            if len(toks) != 7:
                raise ParseError("constraint needs u v and 4 scalars", lineno, 1)
            try:
                u, v = int(toks[1]), int(toks[2])
            except ValueError:
                raise ParseError("qubit indices must be integers", lineno, 2) from None
            if u == v or not (0 <= u < n and 0 <= v < n):
                raise ParseError("constraint endpoints out of range or equal", lineno, 2)
            eta = tuple(_parse_elem(t, level, lineno, 3 + i) for i, t in enumerate(toks[3:]))
            if all(x.is_zero() for x in eta):
                raise ParseError("constraint row is zero", lineno, 3)
            constraints.append(Constraint(len(constraints), u, v, eta))
        else:
            raise ParseError(f"unknown directive {kind!r}", lineno, 1)
    if not saw_tag:
        raise ParseError("empty instance file", 1, 1)
    if poly is None or n is None:
        raise ParseError("missing field or qubits declaration", 1, 1)
    if level is None:
        level = base_level(poly, boxv)
    return Instance(n, constraints, level)


def _serialize_level_spec(level: TowerLevel) -> str:
    if level.depth == 0:
        return "base"
    return "sqrt:" + ";".join(_serialize_elem(g.radicand) for g in level.gens)


def _parse_level_spec(tok: str, base: TowerLevel, line: int) -> TowerLevel:
    if tok == "base":
        return base
    if not tok.startswith("sqrt:"):
        raise ParseError(f"bad level spec {tok!r}", line)
    level = base
    for part in tok[5:].split(";"):
        rad = _parse_elem(part, level, line, 0)
        level, _ = adjoin_sqrt(level, rad)
    return level


def serialize_assignment(assignment: Assignment | None) -> str:
    if assignment is None:
        return "UNSAT\n"
    lines = []
    for q in sorted(assignment.singles):
        vec = assignment.singles[q]
        lvl = vec[0].level
        lines.append(
            f"qubit {q} {_serialize_level_spec(lvl)} "
            + " ".join(_serialize_elem(lift(e, lvl)) for e in vec)
        )
    for (u, v) in sorted(assignment.pairs):
        vec = assignment.pairs[(u, v)]
        lvl = vec[0].level
        lines.append(
            f"pair {u} {v} {_serialize_level_spec(lvl)} "
            + " ".join(_serialize_elem(lift(e, lvl)) for e in vec)
        )
    return "\n".join(lines) + "\n"


def parse_assignment(data, base: TowerLevel) -> Assignment | None:
    """Parse an assignment file; returns None for an UNSAT marker."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    out = Assignment()
    for lineno, raw in enumerate(data.splitlines(), start=1):
        text = raw.split("#", 1)[0].strip()
        if not text:
            continue
        toks = text.split()
        if toks[0] == "UNSAT":
            return None
        if toks[0] == "qubit":
            if len(toks) != 5:
                raise ParseError("qubit line needs index, level, 2 scalars", lineno)
            q = int(toks[1])
            lvl = _parse_level_spec(toks[2], base, lineno)
            out.singles[q] = tuple(_parse_elem(t, lvl, lineno, i) for i, t in enumerate(toks[3:]))
        elif toks[0] == "pair":
            if len(toks) != 8:
                raise ParseError("pair line needs two indices, level, 4 scalars", lineno)
            u, v = int(toks[1]), int(toks[2])
            lvl = _parse_level_spec(toks[3], base, lineno)
            key = (u, v) if u < v else (v, u)
            out.pairs[key] = tuple(_parse_elem(t, lvl, lineno, i) for i, t in enumerate(toks[4:]))
        else:
            raise ParseError(f"unknown assignment directive {toks[0]!r}", lineno)
    return out


# --- classical 2-CNF embedding ----------------------------------------------


def parse_dimacs(data) -> tuple[int, list[tuple[int, int]]]:
    """DIMACS CNF restricted to 2-literal clauses; returns (nvars, clauses)."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    nvars = None
    clauses: list[tuple[int, int]] = []
    for lineno, raw in enumerate(data.splitlines(), start=1):
        text = raw.strip()
        if not text or text.startswith("c"):
            continue
        if text.startswith("p"):
            toks = text.split()
            if len(toks) != 4 or toks[1] != "cnf":
                raise ParseError("bad problem line", lineno)
            nvars = int(toks[2])
            continue
        lits = [int(t) for t in text.split()]
        if lits and lits[-1] == 0:
            lits = lits[:-1]
        if not lits:
            continue
        if len(lits) != 2:
            raise ParseError(f"clause has {len(lits)} literals, need exactly 2", lineno)
        clauses.append((lits[0], lits[1]))
    if nvars is None:
        raise ParseError("missing problem line", 1)
    return nvars, clauses


def embed_cnf(clauses: Sequence[tuple[int, int]], nvars: int | None = None) -> Instance:
    """One product constraint per clause: row <c_a| x <c_b|, c = 1 for negated."""
    level = rational_field()
    one, zero = level.one(), level.zero()
    rows = {0: (one, zero), 1: (zero, one)}
    maxvar = 0
    for a, b in clauses:
        maxvar = max(maxvar, abs(a), abs(b))
    n = nvars if nvars is not None else maxvar
    if maxvar > n:
        raise ValueError("clause variable exceeds declared count")
    constraints = []
    for a, b in clauses:
        if a == 0 or b == 0:
            raise ValueError("zero literal")
        if abs(a) == abs(b):
            raise ValueError("unit or tautological clause rejected")
        ca = rows[1 if a < 0 else 0]
        cb = rows[1 if b < 0 else 0]
        eta = (ca[0] * cb[0], ca[0] * cb[1], ca[1] * cb[0], ca[1] * cb[1])
        constraints.append(Constraint(len(constraints), abs(a) - 1, abs(b) - 1, eta))
    return Instance(n, constraints, level)


# --- instance generators ------------------------------------------------------


def _instance_from_transfers(n: int, entries: list[tuple[int, int, tuple[int, int, int, int]]]) -> Instance:
    level = rational_field()
    constraints = []
    for (u, v, t) in entries:
        eta = transfer.eta_from_transfer(tuple(level.from_int(x) for x in t))
        constraints.append(Constraint(len(constraints), u, v, eta))
    return Instance(n, constraints, level)


def _check_odd_nbit(m: int, name: str) -> int:
    if m <= 0 or m % 2 == 0:
        raise ValueError(f"{name} must be a positive odd integer")
    return m.bit_length()


def gen_lowerbound_full(m_int: int, n_int: int) -> Instance:
    """Chain of 2n+2 qubits whose unique product solution encodes m_int*n_int.

    The walk operator over the whole chain has first column
    (M, 2^n + M*N); qubit 2n+1 is forced to that ray.
    """
    nbits = _check_odd_nbit(m_int, "M")
    if _check_odd_nbit(n_int, "N") != nbits:
        raise ValueError("M and N must have the same bit length")
    n = nbits
    entries = []
    for i in range(1, n + 1):
        bit = (m_int >> (n - i)) & 1
        entries.append((i - 1, i, (1, 0, bit, 2)))
    entries.append((n, n + 1, (0, 1, 1, 0)))
    for i in range(1, n + 1):
        bit = (n_int >> (n - i)) & 1
        entries.append((n + i, n + 1 + i, (1, 0, bit, 2)))
    top_bit = (m_int >> (n - 1)) & 1
    entries.append((0, 1, (0, 1, 0, top_bit)))
    return _instance_from_transfers(2 * n + 2, entries)


def gen_lowerbound_chain(m_int: int) -> Instance:
    """Truncated chain on qubits 0..n; qubit i is forced to |0> + M^(i)|1>."""
    n = _check_odd_nbit(m_int, "M")
    entries = []
    for i in range(1, n + 1):
        bit = (m_int >> (n - i)) & 1
        entries.append((i - 1, i, (1, 0, bit, 2)))
    top_bit = (m_int >> (n - 1)) & 1
    entries.append((0, 1, (0, 1, 0, top_bit)))
    return _instance_from_transfers(n + 1, entries)


def gen_random(
    n: int,
    m: int,
    seed: int,
    product_fraction: float = 0.5,
    field: str = "q",
    coeff_bound: int = 2,
) -> Instance:
    """Random instance with small-integer coefficients over Q or Q[i]."""
    if n < 2:
        raise ValueError("need at least 2 qubits")
    rng = random.Random(seed)
    if field == "q":
        level = rational_field()
    elif field == "qi":
        level = gaussian_field()
    else:
        raise ValueError("field must be 'q' or 'qi'")

    def scalar():
        if field == "q":
            return level.from_int(rng.randint(-coeff_bound, coeff_bound))
        re = rng.randint(-coeff_bound, coeff_bound)
        im = rng.randint(-coeff_bound, coeff_bound)
        return level.element(1, (re, im))

    def nonzero_vec2():
        while True:
            v = (scalar(), scalar())
            if not (v[0].is_zero() and v[1].is_zero()):
                return v

    constraints = []
    for cid in range(m):
        u = rng.randrange(n)
        v = rng.randrange(n - 1)
        if v >= u:
            v += 1
        if rng.random() < product_fraction:
            gu = nonzero_vec2()
            gv = nonzero_vec2()
            eta = (gu[0] * gv[0], gu[0] * gv[1], gu[1] * gv[0], gu[1] * gv[1])
        else:
            while True:
                eta = (scalar(), scalar(), scalar(), scalar())
                if not all(x.is_zero() for x in eta):
                    break
        constraints.append(Constraint(cid, u, v, eta))
    return Instance(n, constraints, level)


# --- interaction graph --------------------------------------------------------


class InteractionGraph:
    """Per-qubit adjacency over live constraints, with set-and-forget removal."""

    def __init__(self, instance: Instance):
        self.n = instance.n
        self.constraints = instance.constraints
        self.adj: list[list[tuple[int, int, bool]]] = [[] for _ in range(instance.n)]
        for c in instance.constraints:
            self.adj[c.u].append((c.cid, c.v, True))
            self.adj[c.v].append((c.cid, c.u, False))
        self.qubit_live = [True] * instance.n
        self.constraint_live = [True] * len(instance.constraints)
        self.live_qubit_count = instance.n

    def kill_constraint(self, cid: int) -> None:
        self.constraint_live[cid] = False

    def live_entries(self, q: int):
        alive = self.constraint_live
        return [e for e in self.adj[q] if alive[e[0]]]

    def remove_assigned(self, qubits: Iterable[int]) -> None:
        """Mark qubits dead, kill incident constraints, compact neighbors."""
        affected = set()
        for q in qubits:
            if not self.qubit_live[q]:
                continue
            self.qubit_live[q] = False
            self.live_qubit_count -= 1
            for (cid, other, _) in self.adj[q]:
                if self.constraint_live[cid]:
                    self.constraint_live[cid] = False
                    affected.add(other)
            self.adj[q] = []
        alive = self.constraint_live
        for w in affected:
            if self.qubit_live[w]:
                self.adj[w] = [e for e in self.adj[w] if alive[e[0]]]

    def live_constraint_ids(self) -> list[int]:
        return [i for i, ok in enumerate(self.constraint_live) if ok]
