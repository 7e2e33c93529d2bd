#!/usr/bin/env python3
"""Cross-check an exported MPS program with scipy's LP solver.

Reads the free-format MPS subset written by `mrfs export-lp` (N/G/L rows,
COLUMNS, RHS, no BOUNDS — all variables non-negative), solves it with
scipy.optimize.linprog (HiGHS), and prints the optimum. With an expected
value as second argument, exits nonzero when the optima disagree beyond a
relative tolerance of 1e-6.

Usage:
    python3 tools/check_mps.py program.mps [expected_objective]
"""

import sys

import numpy as np
from scipy.optimize import linprog


def parse_mps(path):
    senses = {}  # row name -> 'N' | 'G' | 'L'
    entries = {}  # column name -> list[(row name, value)]
    col_order = []
    rhs = {}
    section = None
    with open(path) as f:
        for line in f:
            line = line.rstrip("\n")
            if not line.strip():
                continue
            head = line.split()
            # Section headers start in column 1; data lines are indented
            # (the RHS section's vector is itself named "RHS").
            if not line[0].isspace() and head[0] in (
                "NAME", "ROWS", "COLUMNS", "RHS", "BOUNDS", "ENDATA",
            ):
                section = head[0]
                continue
            if section == "ROWS":
                sense, name = head
                senses[name] = sense
            elif section == "COLUMNS":
                col, row, val = head
                if col not in entries:
                    entries[col] = []
                    col_order.append(col)
                entries[col].append((row, float(val)))
            elif section == "RHS":
                _, row, val = head
                rhs[row] = float(val)
            else:
                raise ValueError(f"unexpected line outside known sections: {line!r}")
    return senses, entries, col_order, rhs


def solve(path):
    senses, entries, col_order, rhs = parse_mps(path)
    (obj_row,) = [name for name, s in senses.items() if s == "N"]
    cons_rows = [name for name, s in senses.items() if s != "N"]
    row_pos = {name: i for i, name in enumerate(cons_rows)}
    n, m = len(col_order), len(cons_rows)

    c = np.zeros(n)
    a = np.zeros((m, n))
    for j, col in enumerate(col_order):
        for row, val in entries[col]:
            if row == obj_row:
                c[j] = val
            else:
                a[row_pos[row], j] = val
    b = np.array([rhs.get(name, 0.0) for name in cons_rows])

    # Normalize G rows (>=) to <= by negation; L rows pass through.
    for name in cons_rows:
        if senses[name] == "G":
            i = row_pos[name]
            a[i, :] *= -1.0
            b[i] *= -1.0

    res = linprog(c, A_ub=a, b_ub=b, bounds=(0, None), method="highs")
    if not res.success:
        raise RuntimeError(f"scipy failed on {path}: {res.message}")
    return res.fun


def main():
    if len(sys.argv) not in (2, 3):
        print(__doc__.strip(), file=sys.stderr)
        return 2
    opt = solve(sys.argv[1])
    print(f"{opt:.12f}")
    if len(sys.argv) == 3:
        expected = float(sys.argv[2])
        tol = 1e-6 * max(1.0, abs(expected))
        if abs(opt - expected) > tol:
            print(f"MISMATCH: scipy {opt} vs expected {expected}", file=sys.stderr)
            return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
