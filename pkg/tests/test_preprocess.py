import random

from q2sat import fieldarith as fa
from q2sat import model, oracle, preprocess, solver
from q2sat import transfer as tr

from conftest import make_instance, random_nonzero_eta


def _rows(Q, ints_list):
    return [(i, tuple(Q.from_int(x) for x in row)) for i, row in enumerate(ints_list)]


def test_summarize_basis_trio(Q):
    s = preprocess.summarize_pair((0, 1), _rows(Q, [(1, 0, 0, 0), (0, 0, 0, 1), (1, 1, 1, 1)]))
    assert s.rank == 3
    assert s.kernel_is_product is False
    k = s.kernel_state
    assert k[0].is_zero() and k[3].is_zero()
    assert (k[1] + k[2]).is_zero() and not k[1].is_zero()


def test_summarize_duplicates(Q):
    s = preprocess.summarize_pair((0, 1), _rows(Q, [(1, 2, 0, 1), (2, 4, 0, 2), (1, 2, 0, 1)]))
    assert s.rank == 1
    assert s.kept == [0]


def test_summarize_projector_complement_of_singlet(Q):
    # I4 - |singlet><singlet| split into rank-1 rows: |00>, |11>, |01>+|10>
    s = preprocess.summarize_pair((0, 1), _rows(Q, [(1, 0, 0, 0), (0, 0, 0, 1), (0, 1, 1, 0)]))
    assert s.rank == 3 and s.kernel_is_product is False
    assert (s.kernel_state[1] + s.kernel_state[2]).is_zero()


def test_summarize_product_kernel(Q):
    # rows spanning the complement of |01>: kernel = |0>|1>
    s = preprocess.summarize_pair((0, 1), _rows(Q, [(1, 0, 0, 0), (0, 0, 1, 0), (0, 0, 0, 1)]))
    assert s.rank == 3 and s.kernel_is_product is True
    assert tr.proportional(s.factor_u, (Q.one(), Q.zero()))
    assert tr.proportional(s.factor_v, (Q.zero(), Q.one()))


def test_summarize_rank_matches_oracle(Q):
    rng = random.Random(5)
    for _ in range(150):
        k = rng.randint(1, 5)
        rows = [random_nonzero_eta(rng, Q) for _ in range(k)]
        s = preprocess.summarize_pair((0, 1), list(enumerate(rows)))
        inst = make_instance(2, [(0, 1, tuple(x.num[0] for x in r)) for r in rows])
        assert s.rank == 4 - oracle.brute_kernel_dim(inst)


def test_skipped_rows_are_implied(Q):
    rng = random.Random(7)
    for _ in range(120):
        k = rng.randint(2, 6)
        rows = [random_nonzero_eta(rng, Q) for _ in range(k)]
        s = preprocess.summarize_pair((0, 1), list(enumerate(rows)))
        kept = set(s.kept)
        kept_ints = [tuple(x.num[0] for x in rows[i]) for i in kept]
        base_dim = oracle.brute_kernel_dim(make_instance(2, [(0, 1, r) for r in kept_ints]))
        for i, row in enumerate(rows):
            if i in kept:
                continue
            with_row = kept_ints + [tuple(x.num[0] for x in row)]
            assert oracle.brute_kernel_dim(make_instance(2, [(0, 1, r) for r in with_row])) == base_dim


def test_preprocess_rank4_unsat():
    basis = [(1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 1, 0), (0, 0, 0, 1)]
    inst = make_instance(2, [(0, 1, e) for e in basis])
    out = preprocess.apply_preprocessing(inst)
    assert out.unsat and out.witness["reason"] == "rank-4 pair"


def test_preprocess_isolated_entangled_pair():
    trio = [(1, 0, 0, 0), (0, 0, 0, 1), (1, 1, 1, 1)]
    inst = make_instance(2, [(0, 1, e) for e in trio])
    out = preprocess.apply_preprocessing(inst)
    assert not out.unsat
    assert (0, 1) in out.state.pairs
    assert out.state.graph.live_qubit_count == 0


def test_preprocess_product_kernel_assigns_singles(Q):
    rows = [(1, 0, 0, 0), (0, 0, 1, 0), (0, 0, 0, 1)]
    inst = make_instance(2, [(0, 1, e) for e in rows])
    out = preprocess.apply_preprocessing(inst)
    assert not out.unsat
    assert tr.proportional(out.state.singles[0], (Q.one(), Q.zero()))
    assert tr.proportional(out.state.singles[1], (Q.zero(), Q.one()))


def test_preprocess_entangled_pair_with_entangled_neighbor_unsat():
    trio = [(1, 0, 0, 0), (0, 0, 0, 1), (1, 1, 1, 1)]
    triples = [(0, 1, e) for e in trio]
    triples.append((1, 2, (0, 1, -1, 0)))  # entangled constraint touching the pair
    inst = make_instance(3, triples)
    out = preprocess.apply_preprocessing(inst)
    assert out.unsat
    assert "entangled" in out.witness["reason"]
    assert oracle.brute_kernel_dim(inst) == 0


def test_preprocess_entangled_pair_with_product_neighbor():
    trio = [(1, 0, 0, 0), (0, 0, 0, 1), (1, 1, 1, 1)]
    triples = [(0, 1, e) for e in trio]
    triples.append((1, 2, (0, 0, 1, 0)))  # |1><1| x |0><0|: product
    inst = make_instance(3, triples)
    out = preprocess.apply_preprocessing(inst)
    assert not out.unsat
    # neighbor 2 forced perpendicular to its factor |0>
    assert 2 in out.state.singles
    res = solver.solve(inst)
    assert res.sat and oracle.verify_assignment(inst, res.assignment)


def test_preprocess_two_rank3_pairs_sharing_a_qubit_unsat():
    trio = [(1, 0, 0, 0), (0, 0, 0, 1), (1, 1, 1, 1)]
    triples = [(0, 1, e) for e in trio] + [(1, 2, e) for e in trio]
    inst = make_instance(3, triples)
    out = preprocess.apply_preprocessing(inst)
    assert out.unsat
    assert oracle.brute_kernel_dim(inst) == 0


def test_preprocess_leaves_at_most_two_per_pair(Q):
    rng = random.Random(11)
    for _ in range(60):
        n = rng.randint(2, 5)
        m = rng.randint(2, 9)
        inst = model.gen_random(n, m, seed=rng.randint(0, 10**6), product_fraction=0.4)
        out = preprocess.apply_preprocessing(inst)
        if out.unsat:
            continue
        per_pair = {}
        for c in inst.constraints:
            if out.state.graph.constraint_live[c.cid]:
                per_pair[c.pair()] = per_pair.get(c.pair(), 0) + 1
        assert all(v <= 2 for v in per_pair.values())


def _pin_rows(level, vec):
    """Rows forcing a qubit to the ray of vec (for 2-local pinning)."""
    w = (vec[1], -vec[0])
    return [
        (w[0], level.zero(), w[1], level.zero()),
        (level.zero(), w[0], level.zero(), w[1]),
    ]


def _kernel_pin_rows(level, k):
    pivot = next(i for i in range(4) if not k[i].is_zero())
    rows = []
    for i in range(4):
        if i == pivot:
            continue
        row = [level.zero()] * 4
        row[i] = k[pivot]
        row[pivot] = -k[i]
        rows.append(tuple(row))
    return rows


def test_preprocess_preserves_satisfiability(Q):
    rng = random.Random(13)
    agree = 0
    for _ in range(250):
        n = rng.randint(2, 5)
        m = rng.randint(2, 8)
        inst = model.gen_random(n, m, seed=rng.randint(0, 10**6), product_fraction=0.5)
        orig_sat = oracle.brute_kernel_dim(inst) > 0
        out = preprocess.apply_preprocessing(inst)
        if out.unsat:
            assert not orig_sat
            agree += 1
            continue
        reduced = preprocess.reduced_instance(out.state)
        cs = list(reduced.constraints)
        for q, vec in out.state.singles.items():
            partner = (q + 1) % n
            for row in _pin_rows(Q, vec):
                cs.append(model.Constraint(len(cs), q, partner, row))
        for (u, v), k in out.state.pairs.items():
            for row in _kernel_pin_rows(Q, k):
                cs.append(model.Constraint(len(cs), u, v, row))
        pinned = model.Instance(n, cs, Q)
        assert (oracle.brute_kernel_dim(pinned) > 0) == orig_sat
        agree += 1
    assert agree == 250
