"""Compact dense tableau simplex for max c.x s.t. Ax <= b, x >= 0, b >= 0.

Every polytope in this toolkit contains the origin with non-negative
right-hand sides, so phase one is never needed.  Pivoting starts with
Dantzig's rule and falls back to Bland's rule if the pivot budget runs
out, which also breaks degenerate cycles.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidInputError, NumericalFailureError, UnboundedError

_TOL = 1e-9


def maximize(c, A, b):
    """Return (x, value) maximizing c.x over {x >= 0 : Ax <= b}."""
    c = np.asarray(c, dtype=float)
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    if A.ndim != 2 or A.shape != (len(b), len(c)):
        raise InvalidInputError("inconsistent LP dimensions")
    if np.any(b < -1e-9):
        raise InvalidInputError("right-hand sides must be non-negative")
    b = np.maximum(b, 0.0)

    m, nv = A.shape
    tab = np.zeros((m + 1, nv + m + 1))
    tab[:m, :nv] = A
    tab[:m, nv : nv + m] = np.eye(m)
    tab[:m, -1] = b
    tab[m, :nv] = c
    basis = list(range(nv, nv + m))

    dantzig_budget = 50 * (nv + m) + 200
    total_budget = dantzig_budget + 500 * (nv + m) + 1000
    pivots = 0
    bland = False

    while True:
        reduced = tab[m, :-1]
        if bland:
            positive = np.nonzero(reduced > _TOL)[0]
            if len(positive) == 0:
                break
            enter = int(positive[0])
        else:
            enter = int(np.argmax(reduced))
            if reduced[enter] <= _TOL:
                break

        col = tab[:m, enter]
        rows = np.nonzero(col > _TOL)[0]
        if len(rows) == 0:
            raise UnboundedError("LP is unbounded; missing box constraints")
        ratios = tab[rows, -1] / col[rows]
        best = float(np.min(ratios))
        ties = rows[ratios <= best + 1e-12]
        leave = int(min(ties, key=lambda r: basis[r]))

        piv = tab[leave, enter]
        tab[leave] /= piv
        for i in range(m + 1):
            if i != leave and abs(tab[i, enter]) > 0:
                tab[i] -= tab[i, enter] * tab[leave]
        basis[leave] = enter
        pivots += 1
        if not bland and pivots >= dantzig_budget:
            bland = True
        if pivots >= total_budget:
            raise NumericalFailureError("simplex exceeded its pivot budget")

    x = np.zeros(nv)
    for row, var in enumerate(basis):
        if var < nv:
            x[var] = tab[row, -1]
    return np.maximum(x, 0.0), float(-tab[m, -1])
