import json

import pytest

from q2sat import cli, model, solver


def run(args):
    return cli.main(args)


def test_solve_verify_round_trip(tmp_path, capsys):
    inst = tmp_path / "inst.q2"
    assert run(["gen", "lowerbound-full", "--m", "11", "--n", "13", "--out", str(inst)]) == 0
    out = tmp_path / "out.assign"
    assert run(["solve", str(inst), "--out", str(out), "--metrics", "json"]) == 0
    err = capsys.readouterr().err
    payload = json.loads(err.strip().splitlines()[-1])
    assert payload["decision"] == "sat"
    assert payload["edge_traversals"] > 0
    assert run(["verify", str(inst), str(out)]) == 0


def test_solve_unsat_exit_code(tmp_path):
    text = model.serialize_instance(model.embed_cnf([(1, 2), (1, -2), (-1, 2), (-1, -2)]))
    inst = tmp_path / "u.q2"
    inst.write_text(text)
    out = tmp_path / "u.assign"
    assert run(["solve", str(inst), "--out", str(out)]) == 1
    assert out.read_text().strip() == "UNSAT"


def test_solve_missing_file_exit_2(tmp_path):
    assert run(["solve", str(tmp_path / "missing.q2")]) == 2


def test_verify_tampered_assignment(tmp_path, capsys):
    inst_path = tmp_path / "i.q2"
    run(["gen", "lowerbound-chain", "--m", "11", "--out", str(inst_path)])
    out = tmp_path / "a.out"
    assert run(["solve", str(inst_path), "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    # tamper with qubit 0's vector: swap its two coefficients
    toks = lines[0].split()
    toks[3], toks[4] = toks[4], toks[3]
    lines[0] = " ".join(toks)
    tampered = tmp_path / "t.out"
    tampered.write_text("\n".join(lines) + "\n")
    assert run(["verify", str(inst_path), str(tampered)]) == 1
    assert "constraint" in capsys.readouterr().out


def test_verify_wrong_qubit_count(tmp_path):
    inst_path = tmp_path / "i.q2"
    run(["gen", "lowerbound-chain", "--m", "11", "--out", str(inst_path)])
    out = tmp_path / "a.out"
    run(["solve", str(inst_path), "--out", str(out)])
    truncated = tmp_path / "short.out"
    truncated.write_text("\n".join(out.read_text().splitlines()[:-1]) + "\n")
    assert run(["verify", str(inst_path), str(truncated)]) == 2


def test_gen_cnf_import(tmp_path):
    cnf = tmp_path / "f.cnf"
    cnf.write_text("p cnf 3 2\n1 -2 0\n2 3 0\n")
    out = tmp_path / "f.q2"
    assert run(["gen", "cnf-import", "--cnf", str(cnf), "--out", str(out)]) == 0
    inst = model.parse_instance(out.read_text())
    assert inst.n == 3 and len(inst.constraints) == 2


def test_gen_random_deterministic(tmp_path):
    a, b = tmp_path / "a.q2", tmp_path / "b.q2"
    args = ["gen", "random", "--qubits", "10", "--constraints", "15", "--seed", "5"]
    assert run(args + ["--out", str(a)]) == 0
    assert run(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_gen_bad_params(tmp_path):
    assert run(["gen", "lowerbound-full", "--m", "4", "--n", "5"]) == 2
    assert run(["gen", "lowerbound-full"]) == 2
    assert run(["gen", "cnf-import"]) == 2


def test_bench_csv(tmp_path):
    out = tmp_path / "bench.csv"
    assert run(["bench", "--family", "chain", "--sizes", "50,100", "--out", str(out)]) == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "n,m,edge_traversals,field_ops,max_coeff_bits,wall_time"
    assert len(lines) == 3
    n1 = int(lines[1].split(",")[0])
    n2 = int(lines[2].split(",")[0])
    assert (n1, n2) == (50, 100)
    # monotone edge counts across sizes
    assert int(lines[1].split(",")[2]) < int(lines[2].split(",")[2])


def test_bench_family_validation():
    with pytest.raises(SystemExit) as e:
        run(["bench", "--family", "nope", "--sizes", "10"])
    assert e.value.code == 2
    assert run(["bench", "--family", "chain", "--sizes", "x"]) == 2


def test_bench_families_solve_sat():
    for family in ("chain", "cycle", "random", "classical"):
        inst = cli.bench_instance(family, 64, seed=0)
        res = solver.solve(inst)
        assert res.sat, family
