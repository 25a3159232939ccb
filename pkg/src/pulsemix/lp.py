"""Dense two-phase simplex for small linear programs.

Solves min c'x subject to A_ge x >= b_ge, A_le x <= b_le, x >= 0. The
problems arising here have few variables and at most a few hundred rows,
where a dense tableau is simple and fast. Bland's smallest-index rule is
used for both the entering and the leaving choice, which excludes cycling;
every tie is broken by index, so identical inputs take identical pivot
sequences and produce bit-for-bit identical results.

Constraint rows are normalized to unit maximum absolute coefficient before
solving, so the feasibility tolerance is interpreted on scaled rows.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["LinearProgram", "LpResult", "solve_lp"]

_PIVOT_TOL = 1e-10


@dataclass
class LinearProgram:
    """min c'x s.t. A_ge x >= b_ge, A_le x <= b_le, x >= 0."""

    c: np.ndarray
    A_ge: np.ndarray
    b_ge: np.ndarray
    A_le: np.ndarray
    b_le: np.ndarray

    def __post_init__(self) -> None:
        self.c = np.atleast_1d(np.asarray(self.c, dtype=float))
        n = self.c.shape[0]
        self.A_ge = np.asarray(self.A_ge, dtype=float).reshape(-1, n)
        self.A_le = np.asarray(self.A_le, dtype=float).reshape(-1, n)
        self.b_ge = np.atleast_1d(np.asarray(self.b_ge, dtype=float))
        self.b_le = np.atleast_1d(np.asarray(self.b_le, dtype=float))
        if self.b_ge.shape[0] != self.A_ge.shape[0]:
            raise ValueError("b_ge length does not match A_ge rows")
        if self.b_le.shape[0] != self.A_le.shape[0]:
            raise ValueError("b_le length does not match A_le rows")


@dataclass
class LpResult:
    """status is one of "optimal", "infeasible", "unbounded"."""

    status: str
    x: np.ndarray | None = None
    objective: float | None = None


def _bland_simplex(T: np.ndarray, rc: np.ndarray, basis: np.ndarray, eps: float) -> str:
    """Run simplex pivots in place until optimal or unbounded."""
    m, ncols = T.shape[0], T.shape[1] - 1
    max_iter = 2000 + 200 * (m + ncols)
    for _ in range(max_iter):
        entering = -1
        for j in range(ncols):
            if rc[j] < -eps:
                entering = j
                break
        if entering < 0:
            return "optimal"
        col = T[:, entering]
        rows = np.nonzero(col > _PIVOT_TOL)[0]
        if rows.size == 0:
            return "unbounded"
        ratios = T[rows, -1] / col[rows]
        best = ratios.min()
        # Bland: among the minimum-ratio rows, leave the smallest basis index
        tied = rows[ratios <= best + 1e-12 * (1.0 + abs(best))]
        leave = tied[np.argmin(basis[tied])]
        pivot = T[leave, entering]
        T[leave] /= pivot
        rc -= rc[entering] * T[leave, :-1]
        factors = T[:, entering].copy()
        factors[leave] = 0.0
        T -= np.outer(factors, T[leave])
        basis[leave] = entering
    raise RuntimeError("simplex failed to terminate within the pivot limit")


def solve_lp(prob: LinearProgram, eps_feas: float = 1e-9, eps_opt: float = 1e-9) -> LpResult:
    """Solve the linear program by the two-phase dense simplex method.

    Args:
        prob: problem data; NaN or infinite entries are rejected.
        eps_feas: feasibility tolerance on row-scaled constraints.
        eps_opt: reduced-cost tolerance for optimality.

    Returns:
        LpResult. For "optimal" the solution satisfies x >= 0 and all
        constraints within eps_feas on scaled rows.
    """
    for arr in (prob.c, prob.A_ge, prob.b_ge, prob.A_le, prob.b_le):
        if not np.all(np.isfinite(arr)):
            raise ValueError("linear program data must be finite")

    n = prob.c.shape[0]

    # normalize rows to unit max-abs coefficient; a zero row constrains
    # nothing and is resolved immediately (infeasible only if its
    # right-hand side cannot be met by the zero left-hand side)
    def norm_rows(A, b, sense_ge):
        out_a, out_b = [], []
        for i in range(A.shape[0]):
            s = np.max(np.abs(A[i]))
            if s == 0.0:
                if (sense_ge and b[i] > eps_feas) or (not sense_ge and b[i] < -eps_feas):
                    return None
                continue
            out_a.append(A[i] / s)
            out_b.append(b[i] / s)
        if out_a:
            return np.array(out_a), np.array(out_b)
        return np.zeros((0, n)), np.zeros(0)

    ge = norm_rows(prob.A_ge, prob.b_ge, True)
    le = norm_rows(prob.A_le, prob.b_le, False)
    if ge is None or le is None:
        return LpResult(status="infeasible")
    A1, b1 = ge
    A2, b2 = le
    m1, m2 = A1.shape[0], A2.shape[0]
    m = m1 + m2

    # equality form with surplus (-1) and slack (+1) columns
    ncols = n + m
    A = np.zeros((m, ncols))
    b = np.concatenate([b1, b2])
    A[:m1, :n] = A1
    A[m1:, :n] = A2
    for i in range(m1):
        A[i, n + i] = -1.0
    for i in range(m2):
        A[m1 + i, n + m1 + i] = 1.0

    neg = b < 0
    A[neg] *= -1.0
    b[neg] = -b[neg]

    # rows whose own slack/surplus column survived with +1 start basic;
    # the others receive artificial variables
    basis = np.empty(m, dtype=np.int64)
    art_rows = []
    for i in range(m):
        own = n + i
        if A[i, own] == 1.0:
            basis[i] = own
        else:
            art_rows.append(i)
    n_art = len(art_rows)
    T = np.zeros((m, ncols + n_art + 1))
    T[:, :ncols] = A
    T[:, -1] = b
    for j, i in enumerate(art_rows):
        T[i, ncols + j] = 1.0
        basis[i] = ncols + j

    if n_art:
        rc = np.zeros(ncols + n_art)
        rc[ncols:] = 1.0
        for i in art_rows:
            rc -= T[i, :-1]
        status = _bland_simplex(T, rc, basis, eps_opt)
        if status != "optimal":  # phase 1 is always bounded below by 0
            raise RuntimeError("phase 1 reported unbounded")
        residual = float(sum(T[i, -1] for i in range(m) if basis[i] >= ncols))
        if residual > eps_feas:
            return LpResult(status="infeasible")
        # drive remaining artificial variables out of the basis, dropping
        # rows that have become redundant
        keep = np.ones(m, dtype=bool)
        for i in range(m):
            if basis[i] < ncols:
                continue
            repl = -1
            for j in range(ncols):
                if abs(T[i, j]) > _PIVOT_TOL:
                    repl = j
                    break
            if repl < 0:
                keep[i] = False
                continue
            pivot = T[i, repl]
            T[i] /= pivot
            factors = T[:, repl].copy()
            factors[i] = 0.0
            T -= np.outer(factors, T[i])
            basis[i] = repl
        T = T[keep]
        basis = basis[keep]
        m = T.shape[0]

    # phase 2 on the original objective, artificial columns removed
    T = np.concatenate([T[:, :ncols], T[:, -1:]], axis=1)
    c_ext = np.zeros(ncols)
    c_ext[:n] = prob.c
    rc = c_ext.copy()
    for i in range(m):
        cb = c_ext[basis[i]]
        if cb != 0.0:
            rc -= cb * T[i, :-1]
    status = _bland_simplex(T, rc, basis, eps_opt)
    if status == "unbounded":
        return LpResult(status="unbounded")

    x_full = np.zeros(ncols)
    x_full[basis] = T[:, -1]
    x = x_full[:n]
    x[(x < 0) & (x > -eps_feas)] = 0.0
    return LpResult(status="optimal", x=x, objective=float(prob.c @ x))
