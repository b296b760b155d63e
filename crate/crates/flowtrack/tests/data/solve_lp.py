#!/usr/bin/env python3
"""Solve an exported LP file and print the optimal objective.

Reads the restricted CPLEX-LP dialect written by the exporter: a Minimize
section, Subject To rows with explicit coefficients, unit-box Bounds, an
optional Generals section (ignored; the LP relaxation is solved either
way), and End. Wrapped lines continue with two leading spaces.

Usage: solve_lp.py problem.lp  ->  prints the optimum as "%.12e".
"""

import re
import sys

from scipy.optimize import linprog


def logical_lines(path):
    """Strip comments and stitch wrapped lines back together."""
    out = []
    with open(path) as fh:
        for raw in fh:
            line = raw.rstrip("\n")
            if not line or line.lstrip().startswith("\\"):
                continue
            if line.startswith("  ") and out:
                out[-1] += " " + line.strip()
            else:
                out.append(line.strip())
    return out


TERM = re.compile(r"([+-])?\s*(\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)\s+([A-Za-z_][A-Za-z0-9_]*)")


def parse_expr(text):
    """-> list of (coefficient, variable) from e.g. '- 1 z0 + 0.25 u_0_1'."""
    terms = []
    pos = 0
    while pos < len(text):
        m = TERM.match(text, pos)
        if not m:
            raise ValueError(f"cannot parse expression at {text[pos:]!r}")
        sign = -1.0 if m.group(1) == "-" else 1.0
        terms.append((sign * float(m.group(2)), m.group(3)))
        pos = m.end()
        while pos < len(text) and text[pos] == " ":
            pos += 1
    return terms


def main(path):
    lines = logical_lines(path)
    section = None
    objective = []
    rows = []  # (terms, op, rhs)
    names = []
    seen = set()

    def note(var):
        if var not in seen:
            seen.add(var)
            names.append(var)

    for line in lines:
        if line in ("Minimize", "Subject To", "Bounds", "Generals", "End"):
            section = line
            continue
        if section == "Minimize":
            body = line.split(":", 1)[1].strip()
            objective = parse_expr(body)
            for _, var in objective:
                note(var)
        elif section == "Subject To":
            body = line.split(":", 1)[1].strip()
            m = re.search(r"(<=|>=|=)\s*([+-]?\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)\s*$", body)
            if not m:
                raise ValueError(f"row without comparison: {line!r}")
            terms = parse_expr(body[: m.start()].strip())
            rows.append((terms, m.group(1), float(m.group(2))))
            for _, var in terms:
                note(var)
        elif section == "Bounds":
            m = re.match(r"0 <= ([A-Za-z_][A-Za-z0-9_]*) <= 1$", line)
            if not m:
                raise ValueError(f"unexpected bounds row: {line!r}")
            note(m.group(1))
        # Generals names are ignored: we solve the relaxation.

    index = {var: i for i, var in enumerate(names)}
    c = [0.0] * len(names)
    for coef, var in objective:
        c[index[var]] += coef

    a_eq, b_eq, a_ub, b_ub = [], [], [], []
    for terms, op, rhs in rows:
        dense = [0.0] * len(names)
        for coef, var in terms:
            dense[index[var]] += coef
        if op == "=":
            a_eq.append(dense)
            b_eq.append(rhs)
        elif op == "<=":
            a_ub.append(dense)
            b_ub.append(rhs)
        else:  # >=
            a_ub.append([-v for v in dense])
            b_ub.append(-rhs)

    res = linprog(
        c,
        A_ub=a_ub or None,
        b_ub=b_ub or None,
        A_eq=a_eq or None,
        b_eq=b_eq or None,
        bounds=[(0.0, 1.0)] * len(names),
        method="highs",
    )
    if not res.success:
        print(f"solver failed: {res.message}", file=sys.stderr)
        return 1
    print(f"{res.fun:.12e}")
    return 0


if __name__ == "__main__":
    if len(sys.argv) != 2:
        print(__doc__, file=sys.stderr)
        sys.exit(2)
    sys.exit(main(sys.argv[1]))
