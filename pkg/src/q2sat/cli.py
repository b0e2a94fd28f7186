"""Command-line front end: solve, verify, gen, and bench."""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from . import model, oracle, solver
from .fieldarith import rational_field
from .model import Instance, ParseError


def _read(path: str) -> str:
    return Path(path).read_text(encoding="utf-8")


def _write_out(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_solve(args) -> int:
    try:
        inst = model.parse_instance(_read(args.instance))
    except (OSError, ParseError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    t0 = time.perf_counter()
    result = solver.solve(inst, fastpath=not args.no_fastpath)
    wall = time.perf_counter() - t0
    if args.metrics == "json":
        payload = dict(result.metrics.as_dict(), wall_time=wall,
                       decision="sat" if result.sat else "unsat",
                       phase=result.unsat_phase)
        print(json.dumps(payload), file=sys.stderr)
    if result.sat:
        _write_out(model.serialize_assignment(result.assignment), args.out)
        return 0
    _write_out("UNSAT\n", args.out)
    return 1


def cmd_verify(args) -> int:
    try:
        inst = model.parse_instance(_read(args.instance))
        assignment = model.parse_assignment(_read(args.assignment), inst.level)
    except (OSError, ParseError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if assignment is None:
        print("error: assignment file is an UNSAT marker", file=sys.stderr)
        return 2
    try:
        violation = oracle.find_violation(inst, assignment)
    except oracle.CoverageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if violation is None:
        print("ok")
        return 0
    if violation["kind"] == "constraint":
        print(f"violated constraint {violation['constraint']} on pair {violation['pair']}")
    else:
        print(f"non-unit norm at {violation.get('qubit', violation.get('pair'))}")
    return 1


def cmd_gen(args) -> int:
    try:
        if args.kind == "cnf-import":
            if not args.cnf:
                raise ValueError("cnf-import needs --cnf")
            nvars, clauses = model.parse_dimacs(_read(args.cnf))
            inst = model.embed_cnf(clauses, nvars)
        elif args.kind == "lowerbound-full":
            if args.m is None or args.n is None:
                raise ValueError("lowerbound-full needs --m and --n (odd integers)")
            inst = model.gen_lowerbound_full(args.m, args.n)
        elif args.kind == "lowerbound-chain":
            if args.m is None:
                raise ValueError("lowerbound-chain needs --m (odd integer)")
            inst = model.gen_lowerbound_chain(args.m)
        elif args.kind == "random":
            inst = model.gen_random(
                args.qubits, args.constraints, seed=args.seed,
                product_fraction=args.product_fraction, field=args.field,
            )
        else:
            raise ValueError(f"unknown kind {args.kind!r}")
    except (OSError, ParseError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    _write_out(model.serialize_instance(inst), args.out)
    return 0


# --- bench instance families -------------------------------------------------


def _singlet_eta(level):
    return (level.zero(), level.one(), level.from_int(-1), level.zero())


def bench_instance(family: str, size: int, seed: int = 0) -> Instance:
    """Deterministic instance families with linear structure for benchmarks."""
    level = rational_field()
    fe = level.from_int
    cs: list[model.Constraint] = []

    def add(u, v, eta):
        cs.append(model.Constraint(len(cs), u, v, eta))

    if family == "chain":
        for i in range(size - 1):
            add(i, i + 1, _singlet_eta(level))
        return Instance(size, cs, level)

    if family == "cycle":
        for i in range(size - 1):
            add(i, i + 1, _singlet_eta(level))
        # one non-identity edge closes the ring into a discretizing cycle
        add(size - 1, 0, (fe(0), fe(-1), fe(2), fe(0)))
        return Instance(size, cs, level)

    if family == "classical":
        # product-only: a two-constraint conflict gadget on (0, 1) plus a
        # scaled product chain on 2..size-1 forcing one long chain reaction
        if size < 4:
            raise ValueError("classical family needs size >= 4")

        def prod(a, b):
            return (a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1])

        gu = (fe(1), fe(0))
        gv = (fe(2), fe(1))
        add(0, 2, prod(gu, gv))
        add(0, 1, prod((fe(1), fe(1)), (fe(1), fe(0))))
        add(0, 1, prod((fe(1), fe(-1)), (fe(0), fe(1))))
        alpha = (fe(1), fe(2))
        beta = (fe(2), fe(1))
        for i in range(2, size - 1):
            add(i, i + 1, prod(alpha, beta))
        return Instance(size, cs, level)

    if family == "random":
        pool = _random_block_pool(seed)
        block_n = pool[0][0]
        offset = 0
        idx = 0
        while offset + block_n <= size:
            bn, bcs = pool[idx % len(pool)]
            for (u, v, eta) in bcs:
                add(offset + u, offset + v, eta)
            offset += bn
            idx += 1
        return Instance(max(size, offset), cs, level)

    raise ValueError(f"unknown family {family!r}")


_BLOCK_POOL_CACHE: dict[int, list] = {}


def _random_block_pool(seed: int, pool_size: int = 16, block_n: int = 12, block_m: int = 14):
    """Satisfiable random blocks, reused cyclically to tile large instances."""
    got = _BLOCK_POOL_CACHE.get(seed)
    if got is not None:
        return got
    pool = []
    attempt = 0
    while len(pool) < pool_size:
        inst = model.gen_random(block_n, block_m, seed=seed * 10007 + attempt, product_fraction=0.5)
        attempt += 1
        if solver.solve(inst).sat:
            pool.append((block_n, [(c.u, c.v, c.eta) for c in inst.constraints]))
    _BLOCK_POOL_CACHE[seed] = pool
    return pool


def cmd_bench(args) -> int:
    try:
        sizes = [int(s) for s in args.sizes.split(",")]
    except ValueError:
        print("error: --sizes must be comma-separated integers", file=sys.stderr)
        return 2
    if args.family not in ("chain", "cycle", "random", "classical"):
        print(f"error: unknown family {args.family!r}", file=sys.stderr)
        return 2
    rows = ["n,m,edge_traversals,field_ops,max_coeff_bits,wall_time"]
    for size in sizes:
        inst = bench_instance(args.family, size, seed=args.seed)
        t0 = time.perf_counter()
        result = solver.solve(inst, fastpath=not args.no_fastpath)
        wall = time.perf_counter() - t0
        m = result.metrics
        rows.append(
            f"{inst.n},{len(inst.constraints)},{m.edge_traversals},{m.field_ops},{m.max_coeff_bits},{wall:.6f}"
        )
    _write_out("\n".join(rows) + "\n", args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="q2sat", description="Exact quantum 2-SAT solver")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="decide an instance and emit an assignment")
    p.add_argument("instance")
    p.add_argument("--out", help="assignment output path (default stdout)")
    p.add_argument("--metrics", choices=("json", "none"), default="none")
    p.add_argument("--no-fastpath", action="store_true",
                   help="disable O(1)-size representatives on product constraints")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", help="check an assignment file against an instance")
    p.add_argument("instance")
    p.add_argument("assignment")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("gen", help="generate instance files")
    p.add_argument("kind", choices=("cnf-import", "lowerbound-full", "lowerbound-chain", "random"))
    p.add_argument("--out", help="output path (default stdout)")
    p.add_argument("--cnf", help="DIMACS input for cnf-import")
    p.add_argument("--m", type=int, help="first odd integer for lowerbound kinds")
    p.add_argument("--n", type=int, help="second odd integer for lowerbound-full")
    p.add_argument("--qubits", type=int, default=16)
    p.add_argument("--constraints", type=int, default=24)
    p.add_argument("--product-fraction", type=float, default=0.5)
    p.add_argument("--field", choices=("q", "qi"), default="q")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("bench", help="run solve over instance families, emit CSV")
    p.add_argument("--family", required=True, choices=("chain", "cycle", "random", "classical"))
    p.add_argument("--sizes", required=True, help="comma-separated qubit counts")
    p.add_argument("--no-fastpath", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="CSV output path (default stdout)")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
