#!/usr/bin/env python3
"""Independent feasibility check of an SDPA sparse (.dat-s) file.

Reads the exported feasibility program, rebuilds it with cvxpy (one PSD
variable per block, trace equalities), and asks an external conic solver
whether the constraints admit a solution.  Prints a single verdict line:

    verdict: feasible | infeasible | unknown

Exit code 0 when a definite verdict was reached, 4 otherwise.
"""

import sys

import numpy as np


def parse_sdpa(path):
    """Returns (m, block_sizes, rhs, entries) with entries as a list of
    (con_index 0-based or -1 for objective, block 0-based, i, j, value)."""
    with open(path) as f:
        lines = [ln for ln in f.readlines() if ln.strip() and ln.lstrip()[0] not in "*\"#"]
    idx = 0
    m = int(lines[idx].split()[0]); idx += 1
    nblocks = int(lines[idx].split()[0]); idx += 1
    sizes = []
    while len(sizes) < nblocks:
        sizes.extend(int(tok) for tok in lines[idx].replace(",", " ").split())
        idx += 1
    rhs = []
    while len(rhs) < m:
        rhs.extend(float(tok) for tok in lines[idx].replace(",", " ").split())
        idx += 1
    entries = []
    for ln in lines[idx:]:
        parts = ln.replace(",", " ").split()
        if len(parts) != 5:
            raise ValueError(f"bad entry line: {ln!r}")
        k, blk, i, j, v = int(parts[0]), int(parts[1]), int(parts[2]), int(parts[3]), float(parts[4])
        entries.append((k - 1, blk - 1, i - 1, j - 1, v))
    return m, sizes, np.asarray(rhs), entries


def main():
    if len(sys.argv) != 2:
        print("usage: check_sdpa.py FILE.dat-s", file=sys.stderr)
        return 2
    import cvxpy as cp

    m, sizes, rhs, entries = parse_sdpa(sys.argv[1])

    blocks = []
    for s in sizes:
        if s > 0:
            blocks.append(cp.Variable((s, s), PSD=True))
        else:
            blocks.append(cp.Variable(-s, nonneg=True))

    # Accumulate <F_i, Y> with the SDPA convention: an off-diagonal entry
    # (i, j) of a constraint matrix stands for the symmetric pair.
    exprs = [0] * m
    for k, blk, i, j, v in entries:
        if k < 0:
            continue  # objective block: zero for a feasibility program
        Y = blocks[blk]
        if sizes[blk] > 0:
            term = v * Y[i, j] if i == j else 2 * v * Y[i, j]
        else:
            if i != j:
                raise ValueError("off-diagonal entry in a diagonal block")
            term = v * Y[i]
        exprs[k] = exprs[k] + term

    cons = [exprs[i] == rhs[i] for i in range(m)]
    prob = cp.Problem(cp.Minimize(0), cons)

    status = None
    for solver in ("CLARABEL", "SCS"):
        try:
            prob.solve(solver=solver, verbose=False)
        except Exception as exc:  # noqa: BLE001 - try the next solver
            print(f"note: {solver} failed: {exc}", file=sys.stderr)
            continue
        status = prob.status
        print(f"solver: {solver}, status: {status}")
        if status in ("optimal", "optimal_inaccurate", "infeasible", "infeasible_inaccurate"):
            break

    if status in ("optimal", "optimal_inaccurate"):
        print("verdict: feasible")
        return 0
    if status in ("infeasible", "infeasible_inaccurate"):
        print("verdict: infeasible")
        return 0
    print("verdict: unknown")
    return 4


if __name__ == "__main__":
    sys.exit(main())
