"""Chain reactions and the main solve loop.

A chain reaction (CR) propagates a trial single-qubit state through transfer
matrices by depth-first search, recording the forced state at each qubit it
reaches.  Visiting a qubit twice with non-proportional states is a conflict
and certifies the seed cannot extend to a satisfying product state; a
conflict-free CR is committed wholesale and its qubits deleted, which
preserves satisfiability of the remainder.

Trial seeds come from three discretizing sources: product constraints (the
two perpendicular states), cycle matrices that are not proportional to the
identity (their eigenvectors), and free choice (|0>) when neither applies.
Candidate pairs of CRs are simulated interleaved, one edge traversal each in
turn, so the committed work is proportional to the winner's size.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

from . import fieldarith, transfer
from .fieldarith import FieldElement, normalize_vector
from .model import Assignment, Instance, InteractionGraph

RUNNING = "running"
COMPLETE = "complete"
CONFLICT = "conflict"


@dataclass
class SolveMetrics:
    edge_traversals: int = 0
    field_ops: int = 0
    max_coeff_bits: int = 0

    def as_dict(self) -> dict:
        return {
            "edge_traversals": self.edge_traversals,
            "field_ops": self.field_ops,
            "max_coeff_bits": self.max_coeff_bits,
        }


@dataclass
class SolveResult:
    sat: bool
    assignment: Assignment | None
    metrics: SolveMetrics
    unsat_phase: str | None = None
    witness: dict | None = None


class _ConstraintInfo:
    """Cached classification of one constraint row."""

    __slots__ = ("eta", "is_product", "gu", "gv", "perp_u", "perp_v")

    def __init__(self, eta):
        e00, e01, e10, e11 = eta
        self.eta = eta
        det = e00 * e11 - e01 * e10
        self.is_product = det.is_zero()
        if self.is_product:
            r0 = (e00, e01)
            r1 = (e10, e11)
            gv = r0 if not (r0[0].is_zero() and r0[1].is_zero()) else r1
            c0 = (e00, e10)
            c1 = (e01, e11)
            gu = c0 if not (c0[0].is_zero() and c0[1].is_zero()) else c1
            self.gu = gu
            self.gv = gv
            self.perp_u = (-gu[1], gu[0])
            self.perp_v = (-gv[1], gv[0])
        else:
            self.gu = self.gv = self.perp_u = self.perp_v = None


class SolveState:
    """All solve-local mutable state: graph, partial assignment, metrics."""

    def __init__(self, instance: Instance, fastpath: bool = True, metrics: SolveMetrics | None = None):
        self.instance = instance
        self.graph = InteractionGraph(instance)
        self.singles: dict[int, tuple[FieldElement, FieldElement]] = {}
        self.pairs: dict[tuple[int, int], tuple[FieldElement, ...]] = {}
        self.pair_member: dict[int, tuple[int, int]] = {}
        self.fastpath = fastpath
        self.metrics = metrics or SolveMetrics()
        self._info: list[_ConstraintInfo | None] = [None] * len(instance.constraints)

    def info(self, cid: int) -> _ConstraintInfo:
        got = self._info[cid]
        if got is None:
            got = _ConstraintInfo(self.instance.constraints[cid].eta)
            self._info[cid] = got
        return got

    def sample_bits(self, vec: Sequence[FieldElement]) -> None:
        m = self.metrics
        for e in vec:
            b = e.max_coeff_bits()
            if b > m.max_coeff_bits:
                m.max_coeff_bits = b


def _apply_transfer(eta, from_u: bool, psi):
    e00, e01, e10, e11 = eta
    if from_u:
        return (-(e01 * psi[0]) - e11 * psi[1], e00 * psi[0] + e10 * psi[1])
    return (-(e10 * psi[0]) - e11 * psi[1], e00 * psi[0] + e01 * psi[1])


def _proportional2(a, b) -> bool:
    """Proportionality of two known-nonzero 2-vectors."""
    return (a[0] * b[1] - a[1] * b[0]).is_zero()


class ChainReaction:
    """One CR: explicit-stack DFS with a private record of forced states."""

    __slots__ = ("state", "seed_qubit", "seed_vector", "visited", "stack", "status", "steps", "conflict")

    def __init__(self, state: SolveState, seed_qubit: int, seed_vector):
        self.state = state
        self.seed_qubit = seed_qubit
        self.seed_vector = seed_vector
        self.visited: dict[int, tuple] = {}
        self.stack: list[tuple[int, int]] = []
        self.status = RUNNING
        self.steps = 0
        self.conflict: dict | None = None
        self._seed()

    def _seed(self) -> None:
        q, vec = self.seed_qubit, self.seed_vector
        st = self.state
        if q in st.pair_member:
            self._conflict(q, None, vec)
            return
        rec = st.singles.get(q)
        if rec is not None:
            if not _proportional2(vec, rec):
                self._conflict(q, rec, vec)
                return
            if not st.graph.qubit_live[q]:
                self.status = COMPLETE
                return
        elif not st.graph.qubit_live[q]:
            raise ValueError("seed qubit is dead and unrecorded")
        self.visited[q] = vec
        self.stack.append((q, 0))

    def _conflict(self, qubit: int, old, new) -> None:
        self.status = CONFLICT
        self.conflict = {"qubit": qubit, "recorded": old, "proposed": new}

    def step(self) -> bool:
        """Perform one edge traversal; returns False once terminal."""
        if self.status != RUNNING:
            return False
        graph = self.state.graph
        alive = graph.constraint_live
        while self.stack:
            q, idx = self.stack[-1]
            entries = graph.adj[q]
            while idx < len(entries) and not alive[entries[idx][0]]:
                idx += 1
            if idx >= len(entries):
                self.stack.pop()
                continue
            self.stack[-1] = (q, idx + 1)
            cid, w, from_u = entries[idx]
            self._traverse(q, cid, w, from_u)
            return self.status == RUNNING
        self.status = COMPLETE
        return False

    def run(self) -> None:
        while self.step():
            pass

    def _traverse(self, q: int, cid: int, w: int, from_u: bool) -> None:
        st = self.state
        st.metrics.edge_traversals += 1
        self.steps += 1
        psi = self.visited[q]
        info = st.info(cid)
        if info.is_product:
            inrow = info.gu if from_u else info.gv
            s = inrow[0] * psi[0] + inrow[1] * psi[1]
            if s.is_zero():
                return
            out = info.perp_v if from_u else info.perp_u
            vec = out if st.fastpath else (out[0] * s, out[1] * s)
        else:
            vec = _apply_transfer(info.eta, from_u, psi)
            if vec[0].is_zero() and vec[1].is_zero():
                return
        seen = self.visited.get(w)
        if seen is not None:
            if not _proportional2(vec, seen):
                self._conflict(w, seen, vec)
            return
        if w in st.pair_member:
            self._conflict(w, st.pairs[st.pair_member[w]], vec)
            return
        rec = st.singles.get(w)
        if rec is not None:
            if not _proportional2(vec, rec):
                self._conflict(w, rec, vec)
            # consistent with an earlier record: that record's own CR covers
            # everything behind w, so do not expand it again
            return
        self.visited[w] = vec
        self.stack.append((w, 0))


def induce_cr(state: SolveState, seed_qubit: int, seed_vector) -> ChainReaction:
    """Run a single CR to completion (no commit)."""
    cr = ChainReaction(state, seed_qubit, seed_vector)
    cr.run()
    return cr


def commit_cr(state: SolveState, cr: ChainReaction) -> None:
    """Set-and-forget: record the CR's assignments and delete its qubits."""
    for q, vec in cr.visited.items():
        if q not in state.singles:
            state.singles[q] = vec
        state.sample_bits(vec)
    state.graph.remove_assigned(cr.visited.keys())


def run_parallel_crs(state: SolveState, seed_a, seed_b=None) -> ChainReaction | None:
    """Interleave two CRs one traversal at a time; commit and return the first
    conflict-free one to terminate, or None when every candidate conflicts."""
    crs = [ChainReaction(state, *seed_a)]
    if seed_b is not None:
        crs.append(ChainReaction(state, *seed_b))
    while True:
        advanced = False
        for cr in crs:
            if cr.status == RUNNING:
                cr.step()
                advanced = True
            if cr.status == COMPLETE:
                commit_cr(state, cr)
                return cr
        if not advanced:
            return None


def step1_product_discretize(state: SolveState) -> dict | None:
    """Repeatedly satisfy a live product constraint via its two perpendicular
    trial states; returns a witness dict when both trials conflict."""
    graph = state.graph
    queue = deque(
        cid for cid in range(len(state.instance.constraints))
        if graph.constraint_live[cid] and state.info(cid).is_product
    )
    while queue:
        cid = queue.popleft()
        if not graph.constraint_live[cid]:
            continue
        c = state.instance.constraints[cid]
        info = state.info(cid)
        winner = run_parallel_crs(state, (c.u, info.perp_u), (c.v, info.perp_v))
        if winner is None:
            return {"constraint": cid, "pair": (c.u, c.v)}
    return None


def find_discretizing_cycle(state: SolveState, start: int):
    """DFS from `start` over an irreducible component, testing each non-tree
    edge's walk operator against the tree path.  Returns (base_qubit,
    cycle_matrix) for the first cycle matrix not proportional to the
    identity, else None.  Each edge is examined O(1) times."""
    graph = state.graph
    alive = graph.constraint_live
    level = state.instance.level
    path_op = {start: transfer.identity(level)}
    parent_cid = {start: -1}
    stack = [(start, 0)]
    while stack:
        q, idx = stack[-1]
        entries = graph.adj[q]
        while idx < len(entries) and not alive[entries[idx][0]]:
            idx += 1
        if idx >= len(entries):
            stack.pop()
            continue
        stack[-1] = (q, idx + 1)
        cid, w, from_u = entries[idx]
        if cid == parent_cid[q]:
            continue
        state.metrics.edge_traversals += 1
        eta = state.info(cid).eta
        t_qw = transfer.TransferMatrix(_transfer_entries(eta, from_u))
        if w not in path_op:
            parent_cid[w] = cid
            path_op[w] = t_qw.matmul(path_op[q])
            stack.append((w, 0))
            continue
        t_wq = transfer.TransferMatrix(_transfer_entries(eta, not from_u))
        if not transfer.proportional(path_op[q], t_wq.matmul(path_op[w])):
            cycle = t_qw.matmul(path_op[q]).matmul(path_op[w].adjugate())
            return (w, cycle)
    return None


def _transfer_entries(eta, from_u: bool):
    e00, e01, e10, e11 = eta
    if from_u:
        return (-e01, -e11, e00, e10)
    return (-e10, -e11, e00, e01)


def step2_cycle_discretize(state: SolveState) -> dict | None:
    """Assign every remaining (irreducible) component: eigenvector trials at a
    discretizing cycle when one exists, the free-choice seed |0> otherwise."""
    graph = state.graph
    level = state.instance.level
    ket0 = (level.one(), level.zero())
    for v in range(graph.n):
        if not graph.qubit_live[v]:
            continue
        found = find_discretizing_cycle(state, v)
        if found is None:
            cr = induce_cr(state, v, ket0)
            if cr.status != COMPLETE:
                raise AssertionError("free-choice CR conflicted in a cycle-free component")
            commit_cr(state, cr)
            continue
        base, cycle = found
        eig = transfer.eigenvectors(cycle)
        if eig is transfer.DEGENERATE:
            raise AssertionError("discretizing cycle produced a degenerate matrix")
        seeds = [(base, vec) for vec, _lvl in eig]
        if len(seeds) == 2:
            winner = run_parallel_crs(state, seeds[0], seeds[1])
        else:
            winner = run_parallel_crs(state, seeds[0])
        if winner is None:
            return {"qubit": base, "cycle_entries": [repr(e) for e in cycle.entries]}
    return None


def solve(instance: Instance, fastpath: bool = True) -> SolveResult:
    """Decide the instance and produce a normalized satisfying assignment."""
    from .preprocess import apply_preprocessing

    instance.validate()
    ops_before = fieldarith.counter.count
    pre = apply_preprocessing(instance, fastpath=fastpath)
    state = pre.state
    metrics = state.metrics

    def finish_unsat(phase: str, witness) -> SolveResult:
        metrics.field_ops = fieldarith.counter.count - ops_before
        return SolveResult(False, None, metrics, unsat_phase=phase, witness=witness)

    if pre.unsat:
        return finish_unsat("preprocess", pre.witness)
    w = step1_product_discretize(state)
    if w is not None:
        return finish_unsat("product-discretize", w)
    w = step2_cycle_discretize(state)
    if w is not None:
        return finish_unsat("cycle-discretize", w)
    if state.graph.live_qubit_count != 0:
        raise AssertionError("live qubits left after discretization")

    assignment = Assignment()
    for q, vec in state.singles.items():
        nv, _lvl = normalize_vector(vec)
        assignment.singles[q] = nv
    for key, vec in state.pairs.items():
        nv, _lvl = normalize_vector(vec)
        assignment.pairs[key] = nv

    covered = assignment.covered_qubits()
    if covered != set(range(instance.n)) or len(assignment.singles) + 2 * len(assignment.pairs) != instance.n:
        raise AssertionError("assignment does not cover each qubit exactly once")
    metrics.field_ops = fieldarith.counter.count - ops_before
    return SolveResult(True, assignment, metrics)
