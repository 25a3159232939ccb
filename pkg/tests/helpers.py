"""Independent oracles used by the tests.

Everything here is deliberately written against the math, not against the
package internals: brute-force vertex enumeration for linear programs,
long partial sums for the interference series, and grid maximization for
the pulse peak.
"""

import math
from itertools import combinations

import numpy as np

from pulsemix import LinearProgram


def brute_force_lp(prob: LinearProgram, tol: float = 1e-7):
    """Solve a small LP by enumerating basic points of G x <= h, x >= 0.

    Assumes the feasible set is bounded (the random generator below always
    adds a bounding row), so the optimum sits at a vertex and infeasibility
    is equivalent to no vertex being feasible.

    Returns (status, objective) with status in {"optimal", "infeasible"}.
    """
    n = prob.c.size
    G = [-np.eye(n)]
    h = [np.zeros(n)]
    if prob.A_ge.size or prob.b_ge.size:
        G.append(-prob.A_ge)
        h.append(-prob.b_ge)
    if prob.A_le.size or prob.b_le.size:
        G.append(prob.A_le)
        h.append(prob.b_le)
    G = np.vstack(G)
    h = np.concatenate(h)

    best = None
    for rows in combinations(range(G.shape[0]), n):
        M = G[list(rows)]
        if abs(np.linalg.det(M)) < 0.5:  # integer data: singular means det 0
            continue
        x = np.linalg.solve(M, h[list(rows)])
        if np.max(G @ x - h) > tol:
            continue
        obj = float(prob.c @ x)
        if best is None or obj < best:
            best = obj
    if best is None:
        return "infeasible", None
    return "optimal", best


def random_bounded_lp(rng: np.random.Generator) -> LinearProgram:
    """Random integer-data LP whose feasible set, if any, is a polytope."""
    n = int(rng.integers(2, 5))
    n_ge = int(rng.integers(0, 4))
    n_le = int(rng.integers(0, 4))
    c = rng.integers(-3, 6, n).astype(float)
    A_ge = rng.integers(-4, 5, (n_ge, n)).astype(float)
    b_ge = rng.integers(-2, 9, n_ge).astype(float)
    A_le = rng.integers(-4, 5, (n_le, n)).astype(float)
    b_le = rng.integers(0, 13, n_le).astype(float)
    bound = float(rng.integers(4, 16))
    A_le = np.vstack([A_le, np.ones((1, n))]) if n_le else np.ones((1, n))
    b_le = np.append(b_le, bound)
    return LinearProgram(c=c, A_ge=A_ge, b_ge=b_ge, A_le=A_le, b_le=b_le)


def isi_brute_force(t: float, D: float, params, n_terms: int = 1_000_000) -> float:
    """Interference series by a long explicit partial sum.

    The remainder past n_terms is the midpoint continuation of the sum as
    an integral, whose own error is O(n_terms**-2.5) in absolute terms and
    entirely negligible against the 1e6-term sum.
    """
    k = np.arange(1, n_terms + 1, dtype=float)
    tt = t + k * params.T
    beta = params.d**2 / (4.0 * D)
    C = params.V / (4.0 * math.pi * D) ** 1.5
    s = math.fsum(C * np.exp(-beta / tt) * tt**-1.5)
    w0 = t + (n_terms + 0.5) * params.T
    tail = C * math.sqrt(math.pi) / (params.T * math.sqrt(beta)) * math.erf(math.sqrt(beta / w0))
    return s + tail


def numeric_cir_peak(D: float, params, cir) -> tuple:
    """Locate the pulse maximum by scanning, refined by golden section."""
    ts = np.logspace(-3, math.log10(params.T), 4001)
    vals = cir(ts, D, params)
    i = int(np.argmax(vals))
    lo, hi = ts[max(i - 1, 0)], ts[min(i + 1, ts.size - 1)]
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    for _ in range(200):
        x1 = b - invphi * (b - a)
        x2 = a + invphi * (b - a)
        if cir(x1, D, params) < cir(x2, D, params):
            a = x1
        else:
            b = x2
    t_star = 0.5 * (a + b)
    return t_star, float(cir(t_star, D, params))
