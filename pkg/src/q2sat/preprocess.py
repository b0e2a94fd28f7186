"""Per-pair constraint reduction ahead of the main solve loop.

Pairs carrying several constraints are summarized by the rank of their summed
projector, computed on the row vectors with exact Gaussian elimination while
dropping any row already implied by the kept ones.  Rank 4 is unsatisfiable
outright; rank 2 keeps two independent rank-1 rows; rank 3 forces the pair
into the unique joint state spanning the kernel, whose consequences are then
propagated by sequential chain reactions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .model import Constraint, Instance


@dataclass
class PairSummary:
    pair: tuple[int, int]
    rank: int
    kept: list[int]
    rows: list[tuple]
    kernel_state: tuple | None = None
    kernel_is_product: bool | None = None
    factor_u: tuple | None = None
    factor_v: tuple | None = None


@dataclass
class PreprocessResult:
    unsat: bool
    witness: dict | None
    state: object
    summaries: dict[tuple[int, int], PairSummary] = field(default_factory=dict)


def _reduce_against(basis, row):
    for pc, br in basis:
        x = row[pc]
        if not x.is_zero():
            f = br[pc]
            row = tuple(a * f - b * x for a, b in zip(row, br))
    return row


def _det3(rows, cols):
    (a, b, c), (d, e, f), (g, h, i) = (
        tuple(rows[k][j] for j in cols) for k in range(3)
    )
    return a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g)


def summarize_pair(pair: tuple[int, int], items) -> PairSummary:
    """Incremental rank summary of the constraints on one pair.

    `items` is a list of (cid, row) with rows oriented to the (min, max)
    qubit order; a constraint is kept only when it strictly increases the
    rank of the running sum.
    """
    basis: list[tuple[int, tuple]] = []
    kept: list[int] = []
    for cid, row in items:
        if len(basis) == 4:
            break
        r = _reduce_against(basis, row)
        pivot = next((i for i, x in enumerate(r) if not x.is_zero()), None)
        if pivot is None:
            continue
        kept.append(cid)
        basis.append((pivot, r))
        basis.sort(key=lambda t: t[0])
    rank = len(basis)
    summary = PairSummary(pair, rank, kept, [r for _, r in basis])
    if rank == 3:
        rows = summary.rows
        cols = [0, 1, 2, 3]
        kernel = []
        for i in range(4):
            sub = cols[:i] + cols[i + 1 :]
            d = _det3(rows, sub)
            kernel.append(d if i % 2 == 0 else -d)
        summary.kernel_state = tuple(kernel)
        k00, k01, k10, k11 = kernel
        summary.kernel_is_product = (k00 * k11 - k01 * k10).is_zero()
        if summary.kernel_is_product:
            col = (k00, k10)
            summary.factor_u = col if not (col[0].is_zero() and col[1].is_zero()) else (k01, k11)
            row0 = (k00, k01)
            summary.factor_v = row0 if not (row0[0].is_zero() and row0[1].is_zero()) else (k10, k11)
    return summary


def apply_preprocessing(instance: Instance, fastpath: bool = True) -> PreprocessResult:
    """Impose the solve loop's input conditions: no pair of rank 4, at most
    two independent rank-1 constraints per pair, rank-3 pairs converted to
    recorded joint states with their forced chain reactions run."""
    from .solver import CONFLICT, SolveState, _proportional2, commit_cr, induce_cr

    state = SolveState(instance, fastpath=fastpath)
    graph = state.graph
    groups: dict[tuple[int, int], list[Constraint]] = {}
    for c in instance.constraints:
        groups.setdefault(c.pair(), []).append(c)

    summaries: dict[tuple[int, int], PairSummary] = {}
    rank3: list[tuple[tuple[int, int], PairSummary]] = []

    def unsat(witness):
        return PreprocessResult(True, witness, state, summaries)

    def merge_single(q, vec) -> bool:
        if q in state.pair_member:
            return False
        rec = state.singles.get(q)
        if rec is not None:
            return _proportional2(vec, rec)
        state.singles[q] = vec
        return True

    def merge_pair(u, v, kernel) -> bool:
        if u in state.pair_member or v in state.pair_member:
            return False
        if u in state.singles or v in state.singles:
            return False
        state.pair_member[u] = state.pair_member[v] = (u, v)
        state.pairs[(u, v)] = kernel
        return True

    for pair in sorted(groups):
        cs = groups[pair]
        if len(cs) == 1:
            continue
        s = summarize_pair(pair, [(c.cid, c.eta_for(*pair)) for c in cs])
        summaries[pair] = s
        if s.rank == 4:
            return unsat({"reason": "rank-4 pair", "pair": pair})
        if s.rank <= 2:
            keep = set(s.kept)
            for c in cs:
                if c.cid not in keep:
                    graph.kill_constraint(c.cid)
        else:
            u, v = pair
            for c in cs:
                graph.kill_constraint(c.cid)
            if s.kernel_is_product:
                ok = merge_single(u, s.factor_u) and merge_single(v, s.factor_v)
            else:
                ok = merge_pair(u, v, s.kernel_state)
            if not ok:
                return unsat({"reason": "conflicting forced assignments", "pair": pair})
            rank3.append((pair, s))

    for pair, s in rank3:
        u, v = pair
        if s.kernel_is_product:
            for q in (u, v):
                if not graph.qubit_live[q]:
                    continue  # an earlier CR assigned it; consistency was checked then
                cr = induce_cr(state, q, state.singles[q])
                if cr.status == CONFLICT:
                    return unsat({"reason": "chain reaction conflict", "pair": pair, **cr.conflict})
                commit_cr(state, cr)
        else:
            incident = []
            for q in (u, v):
                for (cid, other, _from_u) in graph.live_entries(q):
                    if not state.info(cid).is_product:
                        return unsat({
                            "reason": "entangled constraint incident to an entangled pair",
                            "pair": pair,
                            "constraint": cid,
                        })
                    incident.append((cid, other))
            for cid, other in incident:
                if not graph.constraint_live[cid]:
                    continue
                info = state.info(cid)
                c = instance.constraints[cid]
                seed_vec = info.perp_u if other == c.u else info.perp_v
                cr = induce_cr(state, other, seed_vec)
                if cr.status == CONFLICT:
                    return unsat({"reason": "chain reaction conflict", "pair": pair, **cr.conflict})
                commit_cr(state, cr)
            state.sample_bits(s.kernel_state)
            graph.remove_assigned((u, v))

    return PreprocessResult(False, None, state, summaries)


def reduced_instance(state) -> Instance:
    """Materialize the live constraints as a standalone instance."""
    cs = []
    for c in state.instance.constraints:
        if state.graph.constraint_live[c.cid]:
            cs.append(Constraint(len(cs), c.u, c.v, c.eta))
    return Instance(state.instance.n, cs, state.instance.level)
