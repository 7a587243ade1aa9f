#!/usr/bin/env python3
"""Reference LP solver for cross-checking the embedded simplex.

Input JSON:  {"num_x": F, "rows": [{"a": [...], "gamma": g, "d": d}, ...]}
Each row encodes the constraint  a . x - gamma * beta + d >= 0  over the
variables z = (x, beta).  The problem is  max beta, solved here as
min -beta subject to  -a . x + gamma * beta <= d  via scipy's HiGHS wrapper.

Output JSON: {"status": "optimal"|"iteration_limit"|"error", "beta": float,
              "x": [...]}
"""

import json
import sys

import numpy as np
from scipy.optimize import linprog


def main() -> int:
    if len(sys.argv) != 3:
        print("usage: lp_solve.py IN.json OUT.json", file=sys.stderr)
        return 2
    with open(sys.argv[1]) as f:
        prob = json.load(f)

    num_x = int(prob["num_x"])
    rows = prob["rows"]
    m = len(rows)
    a_ub = np.zeros((m, num_x + 1))
    b_ub = np.zeros(m)
    for i, row in enumerate(rows):
        a = np.asarray(row["a"], dtype=float)
        if a.shape != (num_x,):
            raise ValueError(f"row {i}: coefficient length {a.shape} != {num_x}")
        a_ub[i, :num_x] = -a
        a_ub[i, num_x] = float(row["gamma"])
        b_ub[i] = float(row["d"])

    c = np.zeros(num_x + 1)
    c[num_x] = -1.0  # maximize beta

    res = linprog(
        c,
        A_ub=a_ub,
        b_ub=b_ub,
        bounds=[(None, None)] * (num_x + 1),
        method="highs",
    )

    if res.status == 0:
        status = "optimal"
    elif res.status == 1:
        status = "iteration_limit"
    else:
        status = "error"

    out = {
        "status": status,
        "beta": float(res.x[num_x]) if res.x is not None else 0.0,
        "x": [float(v) for v in res.x[:num_x]] if res.x is not None else [],
        "message": str(res.message),
    }
    with open(sys.argv[2], "w") as f:
        json.dump(out, f)
    return 0


if __name__ == "__main__":
    sys.exit(main())
