"""Dense two-phase tableau simplex with Bland's rule.

Solves ``min c.x  s.t.  A x = b, x >= 0`` with ``b >= 0``. Works on float64
arrays or, with ``exact=True``, on object arrays of ``Fraction``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import scipy.linalg

from .errors import InputError

FLOAT_EPS = 1e-9
PIVOT_REL_TOL = 1e-7
REFACTOR_EVERY = 64


@dataclass
class LPResult:
    status: str                   # "optimal" | "infeasible" | "unbounded"
    x: np.ndarray | None
    objective: float | Fraction | None
    duals: np.ndarray | None      # y with y.A <= c at optimality (min form)
    iterations: int


class _Tableau:
    def __init__(self, A, b, exact: bool):
        m, n = A.shape
        self.exact = exact
        self.eps = 0 if exact else FLOAT_EPS
        dtype = object if exact else np.float64
        T = np.zeros((m, n + m + 1), dtype=dtype)
        if exact:
            T[:] = Fraction(0)
            T[:, :n] = np.vectorize(Fraction, otypes=[object])(A)
            for i in range(m):
                T[i, n + i] = Fraction(1)
            T[:, -1] = np.vectorize(Fraction, otypes=[object])(b)
        else:
            T[:, :n] = A
            T[:, n:n + m] = np.eye(m)
            T[:, -1] = b
        self.T = T
        self.n = n
        self.m0 = m
        self.basis = list(range(n, n + m))
        self.dropped = False
        self.original = None if exact else T.copy()
        self.iterations = 0

    def drop_row(self, i: int) -> None:
        self.T = np.delete(self.T, i, axis=0)
        del self.basis[i]
        self.dropped = True

    def refactor(self) -> None:
        """Recompute B^-1 [A | I | b] from the untouched data to shed accumulated rounding.

        Once redundant rows are gone the basis is square on some subset of the
        original rows; pivoted QR picks one that keeps it nonsingular.
        """
        if self.original is None:
            return
        B_all = self.original[:, self.basis]
        if self.dropped:
            _, _, perm = scipy.linalg.qr(B_all.T, mode="economic", pivoting=True)
            rows = np.sort(perm[:len(self.basis)])
        else:
            rows = np.arange(self.m0)
        try:
            T = np.linalg.solve(B_all[rows], self.original[rows])
        except np.linalg.LinAlgError:
            return
        T[:, self.basis] = np.eye(len(self.basis))
        self.T = T

    def pivot(self, r: int, j: int) -> None:
        T = self.T
        T[r] = T[r] / T[r, j]
        col = T[:, j].copy()
        col[r] = 0
        T -= np.outer(col, T[r])
        self.basis[r] = j
        self.iterations += 1

    def reduced_costs(self, cost):
        cb = np.array([cost[j] for j in self.basis], dtype=self.T.dtype)
        return cost - cb @ self.T[:, :-1], cb

    def run(self, cost, allowed: int, max_iter: int) -> str:
        """Bland's rule: lowest-index improving column, lowest-index leaving basic variable."""
        while True:
            red, _ = self.reduced_costs(cost)
            improving = np.flatnonzero(red[:allowed] < -self.eps)
            if not len(improving):
                return "optimal"
            if self.iterations >= max_iter:
                raise RuntimeError(f"simplex exceeded {max_iter} pivots")
            entering = int(improving[0])
            col = self.T[:, entering]
            tol = self.eps if self.exact else max(self.eps, PIVOT_REL_TOL * float(np.max(np.abs(col))))
            rows = np.flatnonzero(col > tol)
            if not len(rows):
                return "unbounded"
            ratios = self.T[rows, -1] / col[rows]
            best = ratios.min()
            tied = rows[ratios == best]
            leave = int(min(tied, key=lambda i: self.basis[i]))
            self.pivot(leave, entering)
            if not self.exact and self.iterations % REFACTOR_EVERY == 0:
                self.refactor()


def simplex(A, b, c, exact: bool = False, max_iter: int = 200_000) -> LPResult:
    A = np.asarray(A, dtype=object if exact else np.float64)
    b = np.asarray(b, dtype=object if exact else np.float64)
    m, n = A.shape
    if b.shape != (m,) or len(c) != n:
        raise InputError("inconsistent LP shapes")
    if any(v < 0 for v in b):
        raise InputError("right-hand side must be non-negative")
    tab = _Tableau(A, b, exact)
    zero = Fraction(0) if exact else 0.0
    one = Fraction(1) if exact else 1.0

    # Phase 1: drive the artificial variables to zero.
    cost1 = np.array([zero] * n + [one] * m, dtype=tab.T.dtype)
    tab.run(cost1, n, max_iter)
    phase1 = sum(tab.T[i, -1] for i in range(len(tab.basis)) if tab.basis[i] >= n)
    scale = 1.0 if exact else max(1.0, float(np.max(np.abs(b))) if m else 1.0)
    if phase1 > tab.eps * scale:
        return LPResult("infeasible", None, None, None, tab.iterations)

    # Pivot remaining (zero-valued) artificials out of the basis; drop redundant rows.
    i = 0
    while i < len(tab.basis):
        if tab.basis[i] >= n:
            mags = np.abs(tab.T[i, :n])
            j = int(np.argmax(mags)) if n else None
            if j is None or not mags[j] > tab.eps * (1.0 if exact else max(1.0, float(np.max(np.abs(tab.T[:, :n]))))):
                tab.drop_row(i)
                continue
            tab.pivot(i, j)
        i += 1

    tab.refactor()

    # Phase 2 on the original objective; artificial columns stay as the B^-1 record.
    cost2 = np.array(list(c) + [zero] * m, dtype=tab.T.dtype)
    if exact:
        cost2 = np.array([Fraction(v) for v in cost2], dtype=object)
    status = tab.run(cost2, n, max_iter)
    if status == "unbounded":
        return LPResult("unbounded", None, None, None, tab.iterations)
    tab.refactor()
    x = np.array([zero] * n, dtype=tab.T.dtype)
    for r, j in enumerate(tab.basis):
        if j < n:
            x[j] = tab.T[r, -1]
    _, cb = tab.reduced_costs(cost2)
    duals = cb @ tab.T[:, n:n + m]
    objective = sum(cost2[j] * x[j] for j in range(n))
    return LPResult("optimal", x, objective, duals, tab.iterations)
