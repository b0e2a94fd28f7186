import itertools
import random

import pytest

from q2sat import model, oracle, solver

from conftest import make_instance


def test_brute_kernel_examples():
    inst = make_instance(2, [])
    assert oracle.brute_kernel_dim(inst) == 4
    basis = [(1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 1, 0), (0, 0, 0, 1)]
    inst = make_instance(2, [(0, 1, e) for e in basis])
    assert oracle.brute_kernel_dim(inst) == 0
    trio = [(1, 0, 0, 0), (0, 0, 0, 1), (1, 1, 1, 1)]
    inst = make_instance(2, [(0, 1, e) for e in trio])
    assert oracle.brute_kernel_dim(inst) == 1


def test_brute_kernel_monotone():
    rng = random.Random(3)
    from conftest import random_nonzero_eta
    import q2sat.fieldarith as fa
    Q = fa.rational_field()
    for _ in range(40):
        n = rng.randint(2, 4)
        triples = []
        prev = 1 << n
        for k in range(5):
            u = rng.randrange(n)
            v = (u + 1 + rng.randrange(n - 1)) % n
            if u == v:
                continue
            eta = random_nonzero_eta(rng, Q)
            triples.append((u, v, tuple(x.num[0] for x in eta)))
            dim = oracle.brute_kernel_dim(make_instance(n, triples))
            assert dim <= prev
            prev = dim


def test_brute_kernel_cap():
    with pytest.raises(ValueError):
        oracle.brute_kernel_dim(make_instance(13, []))


def test_verify_assignment_examples(Q):
    inst = make_instance(2, [(0, 1, (1, 0, 0, 0))])
    good = model.Assignment(singles={0: (Q.zero(), Q.one()), 1: (Q.one(), Q.zero())})
    assert oracle.verify_assignment(inst, good)
    bad = model.Assignment(singles={0: (Q.one(), Q.zero()), 1: (Q.one(), Q.zero())})
    v = oracle.find_violation(inst, bad)
    assert v is not None and v["kind"] == "constraint" and v["constraint"] == 0


def test_verify_checks_norms(Q):
    inst = make_instance(2, [])
    unnormalized = model.Assignment(singles={0: (Q.from_int(2), Q.zero()), 1: (Q.one(), Q.zero())})
    v = oracle.find_violation(inst, unnormalized)
    assert v is not None and v["kind"] == "norm" and v["qubit"] == 0


def test_verify_coverage_errors(Q):
    inst = make_instance(3, [])
    partial = model.Assignment(singles={0: (Q.one(), Q.zero())})
    with pytest.raises(oracle.CoverageError):
        oracle.verify_assignment(inst, partial)
    doubled = model.Assignment(
        singles={0: (Q.one(), Q.zero()), 1: (Q.one(), Q.zero()), 2: (Q.one(), Q.zero())},
        pairs={(1, 2): (Q.one(), Q.zero(), Q.zero(), Q.zero())},
    )
    with pytest.raises(oracle.CoverageError):
        oracle.verify_assignment(inst, doubled)


def test_verify_pair_against_trio(Q):
    trio = [(1, 0, 0, 0), (0, 0, 0, 1), (1, 1, 1, 1)]
    inst = make_instance(2, [(0, 1, e) for e in trio])
    res = solver.solve(inst)
    assert res.sat
    assert oracle.verify_assignment(inst, res.assignment)
    # ray check: the pair state is the singlet
    vec = res.assignment.pairs[(0, 1)]
    assert vec[0].is_zero() and vec[3].is_zero()
    assert (vec[1] + vec[2]).is_zero()


def _truth_table_sat(nvars, clauses):
    for bits in itertools.product((False, True), repeat=nvars):
        ok = True
        for a, b in clauses:
            va = bits[abs(a) - 1] ^ (a < 0)
            vb = bits[abs(b) - 1] ^ (b < 0)
            if not (va or vb):
                ok = False
                break
        if ok:
            return True
    return False


def test_classical_reference_examples():
    assert oracle.classical_2sat_reference([(1, 2)]) is True
    assert oracle.classical_2sat_reference([(1, 1), (-1, -1)]) is False


def test_classical_reference_vs_truth_tables():
    rng = random.Random(9)
    for _ in range(300):
        n = rng.randint(1, 8)
        m = rng.randint(1, 14)
        clauses = []
        for _ in range(m):
            a = rng.randint(1, n) * rng.choice((1, -1))
            b = rng.randint(1, n) * rng.choice((1, -1))
            clauses.append((a, b))
        assert oracle.classical_2sat_reference(clauses, n) == _truth_table_sat(n, clauses)


def test_classical_embedding_bijection(Q):
    rng = random.Random(13)
    for _ in range(120):
        n = rng.randint(2, 5)
        m = rng.randint(1, 9)
        clauses = []
        for _ in range(m):
            a, b = rng.sample(range(1, n + 1), 2)
            clauses.append((a * rng.choice((1, -1)), b * rng.choice((1, -1))))
        inst = model.embed_cnf(clauses, n)
        assert (oracle.brute_kernel_dim(inst) > 0) == oracle.classical_2sat_reference(clauses, n)
