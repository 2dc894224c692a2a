#!/usr/bin/env python3
"""Run a PySAT solver on a DIMACS file and print competition-style output.

Usage: pysat_solve.py FILE [SOLVER]   (SOLVER defaults to cadical153)
"""
import sys

from pysat.formula import CNF
from pysat.solvers import Solver


def main():
    if len(sys.argv) < 2:
        print(__doc__.strip(), file=sys.stderr)
        return 1
    name = sys.argv[2] if len(sys.argv) > 2 else "cadical153"
    cnf = CNF(from_file=sys.argv[1])
    with Solver(name=name, bootstrap_with=cnf.clauses) as s:
        if not s.solve():
            print("s UNSATISFIABLE")
            return 20
        model = set(s.get_model() or [])
    print("s SATISFIABLE")
    lits = [v if v in model else -v for v in range(1, cnf.nv + 1)]
    for i in range(0, len(lits), 20):
        print("v " + " ".join(map(str, lits[i:i + 20])))
    print("v 0")
    return 10


if __name__ == "__main__":
    sys.exit(main())
