import pytest

from q2sat import fieldarith as fa
from q2sat import model
from q2sat import transfer as tr

from conftest import make_instance


def test_round_trip_rational():
    inst = model.gen_random(6, 9, seed=1, field="q")
    text = model.serialize_instance(inst)
    back = model.parse_instance(text)
    assert back.n == inst.n
    assert len(back.constraints) == len(inst.constraints)
    for a, b in zip(inst.constraints, back.constraints):
        assert (a.u, a.v) == (b.u, b.v)
        assert all(x.equals(y) for x, y in zip(a.eta, b.eta))
    assert model.serialize_instance(back) == text


def test_round_trip_gaussian():
    inst = model.gen_random(4, 6, seed=2, field="qi")
    back = model.parse_instance(model.serialize_instance(inst))
    for a, b in zip(inst.constraints, back.constraints):
        assert all(x.equals(y) for x, y in zip(a.eta, b.eta))


def test_parse_accepts_bytes_and_empty_constraints():
    text = "q2sat 1\nfield poly 0 1\nqubits 3\n"
    inst = model.parse_instance(text.encode())
    assert inst.n == 3 and inst.constraints == []


def test_parse_errors_carry_location():
    with pytest.raises(model.ParseError) as e:
        model.parse_instance("q2sat 1\nfield poly 0 2\nqubits 2\n")
    assert e.value.line == 2
    with pytest.raises(model.ParseError):
        model.parse_instance("nope\n")
    with pytest.raises(model.ParseError) as e:
        model.parse_instance("q2sat 1\nfield poly 0 1\nqubits 2\nconstraint 0 2 1:1 1:0 1:0 1:0\n")
    assert e.value.line == 4
    with pytest.raises(model.ParseError):
        model.parse_instance("q2sat 1\nfield poly 0 1\nqubits 2\nconstraint 0 1 bogus 1:0 1:0 1:0\n")


def test_embed_cnf_rows(Q):
    for clause, expected in [((1, 2), (1, 0, 0, 0)), ((-1, -2), (0, 0, 0, 1)), ((1, -2), (0, 1, 0, 0))]:
        inst = model.embed_cnf([clause])
        got = [x.num[0] for x in inst.constraints[0].eta]
        assert got == list(expected)
    with pytest.raises(ValueError):
        model.embed_cnf([(1, 1)])
    with pytest.raises(ValueError):
        model.embed_cnf([(1, -1)])


def test_parse_dimacs():
    text = "c comment\np cnf 3 2\n1 -2 0\n2 3 0\n"
    nvars, clauses = model.parse_dimacs(text)
    assert nvars == 3 and clauses == [(1, -2), (2, 3)]
    with pytest.raises(model.ParseError):
        model.parse_dimacs("p cnf 3 1\n1 2 3 0\n")


def test_lowerbound_full_structure():
    inst = model.gen_lowerbound_full(1, 1)
    assert inst.n == 4
    # X_{0,1} = [[1,0],[1,2]] since the top bit of M=1 is 1
    t = tr.transfer_of(inst.constraints[0].eta)
    assert all(a.equals(inst.level.from_int(b)) for a, b in zip(t.entries, (1, 0, 1, 2)))
    with pytest.raises(ValueError):
        model.gen_lowerbound_full(4, 5)
    with pytest.raises(ValueError):
        model.gen_lowerbound_full(3, 9)


def test_lowerbound_bit_convention():
    # reproducing X_[0,n] = [[1,0],[M,2^n]] pins the M_{n-i} indexing
    for M in (3, 5, 7, 11, 21, 1023):
        inst = model.gen_lowerbound_chain(M)
        n = M.bit_length()
        assert inst.n == n + 1
        assert len(inst.constraints) == n + 1
        mats = [tr.transfer_of(c.eta) for c in inst.constraints[:n]]
        x = tr.compose(mats)
        assert all(a.equals(inst.level.from_int(b)) for a, b in zip(x.entries, (1, 0, M, 2**n)))


def test_lowerbound_chain_minimal():
    inst = model.gen_lowerbound_chain(1)
    assert inst.n == 2
    assert len(inst.constraints) == 2
    assert all(c.pair() == (0, 1) for c in inst.constraints)


def test_gen_random_deterministic():
    a = model.serialize_instance(model.gen_random(8, 12, seed=7))
    b = model.serialize_instance(model.gen_random(8, 12, seed=7))
    c = model.serialize_instance(model.gen_random(8, 12, seed=8))
    assert a == b
    assert a != c


def test_remove_assigned():
    inst = make_instance(4, [(0, 1, (1, 0, 0, 0)), (1, 2, (0, 1, -1, 0)), (2, 3, (1, 1, 1, 1))])
    g = model.InteractionGraph(inst)
    g.remove_assigned(range(4))
    assert g.live_qubit_count == 0
    assert not any(g.constraint_live)

    g = model.InteractionGraph(inst)
    g.remove_assigned([3])
    assert g.constraint_live[0] and g.constraint_live[1] and not g.constraint_live[2]
    # removing an isolated qubit leaves constraints alone
    inst2 = make_instance(3, [(0, 1, (1, 0, 0, 0))])
    g2 = model.InteractionGraph(inst2)
    g2.remove_assigned([2])
    assert g2.constraint_live == [True]
    # one endpoint of a 2-qubit instance kills everything
    g3 = model.InteractionGraph(inst2)
    g3.remove_assigned([0])
    assert not any(g3.constraint_live)
    # no live constraint may keep a dead endpoint
    for gg in (g, g2, g3):
        for c in gg.constraints:
            if gg.constraint_live[c.cid]:
                assert gg.qubit_live[c.u] and gg.qubit_live[c.v]


def test_assignment_round_trip(Q):
    l1, s2 = fa.adjoin_sqrt(Q, Q.from_int(2))
    assignment = model.Assignment(
        singles={0: (s2, l1.from_int(3))},
        pairs={(1, 2): (Q.one(), Q.zero(), Q.zero(), Q.from_int(-1))},
    )
    text = model.serialize_assignment(assignment)
    back = model.parse_assignment(text, Q)
    assert back.singles[0][0].equals(s2)
    assert back.singles[0][1].equals(l1.from_int(3))
    assert back.pairs[(1, 2)][3].equals(Q.from_int(-1))
    assert model.parse_assignment("UNSAT\n", Q) is None
    assert model.serialize_assignment(None) == "UNSAT\n"


def test_validate_rejects_bad_instances(Q):
    c = model.Constraint(0, 0, 0, tuple(Q.from_int(x) for x in (1, 0, 0, 0)))
    with pytest.raises(ValueError):
        model.Instance(2, [c], Q).validate()
    c2 = model.Constraint(0, 0, 5, tuple(Q.from_int(x) for x in (1, 0, 0, 0)))
    with pytest.raises(ValueError):
        model.Instance(2, [c2], Q).validate()
    c3 = model.Constraint(0, 0, 1, tuple(Q.zero() for _ in range(4)))
    with pytest.raises(ValueError):
        model.Instance(2, [c3], Q).validate()
