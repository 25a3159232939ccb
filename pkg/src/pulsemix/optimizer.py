"""Mixture design: detection windows, offset search, rounding, and sweeps.

The design problem: choose detection values m >= 0 so that the received
pulse P m meets the detection threshold on every sample of a window of L0
consecutive samples while the worst-case interference P_r m stays below the
interference threshold on the same window, minimizing the total detection
value 1'm. The window offset l0 is free; the optimizer scans all offsets
and keeps the best.

Each per-offset problem is a linear program with up to 2 L0 rows but only
M variables, of which at most a handful are active at the optimum. It is
solved exactly by row generation: solve on a working subset of rows, add
the most violated rows of the full window, repeat until no scaled violation
exceeds the feasibility tolerance. A relaxation bounds the optimum from
below, so termination with a feasible point proves optimality, and an
infeasible relaxation proves the window infeasible.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from .channel import ChannelParams, ParticleSet, cir_eval, cir_peak
from .lp import LinearProgram, solve_lp
from .signal import SampledChannel, restrict_channel, sample_matrices

__all__ = [
    "DetectionSpec",
    "MixtureResult",
    "SweepPoint",
    "build_windows",
    "optimize_mixture",
    "round_mixture",
    "single_size_duration",
    "single_size_benchmark",
    "sweep_tradeoff",
]

# LPs cannot express strict inequality; the interference rows are tightened
# to xi_isi * (1 - STRICT_MARGIN) instead.
STRICT_MARGIN = 1e-9

_MAX_NEW_ROWS = 4  # rows added per family and refinement round


@dataclass(frozen=True)
class DetectionSpec:
    """Thresholds and window geometry of one design problem.

    xi_det: detection threshold (xi_det = 0 turns detection off)
    xi_isi: interference threshold, > 0
    L0: window length in samples, >= 1
    l0: fixed window offset, or None to search all offsets
    """

    xi_det: float
    xi_isi: float
    L0: int
    l0: int | None = None

    def __post_init__(self) -> None:
        if not self.xi_det >= 0:
            raise ValueError("detection threshold must be nonnegative")
        if not self.xi_isi > 0:
            raise ValueError("interference threshold must be positive")
        if not (isinstance(self.L0, (int, np.integer)) and self.L0 >= 1):
            raise ValueError(f"window length must be a positive integer, got {self.L0!r}")
        if self.l0 is not None and not (
            isinstance(self.l0, (int, np.integer)) and self.l0 >= 0
        ):
            raise ValueError(f"window offset must be a nonnegative integer, got {self.l0!r}")


@dataclass
class MixtureResult:
    """Outcome of one mixture optimization.

    m / N are the continuous LP solution and its objective; m_rounded /
    counts / N_rounded the integer-count realization. per_l0 records
    (offset, status, objective) for every offset examined; infeasible
    offsets carry objective NaN.
    """

    m: np.ndarray | None
    m_rounded: np.ndarray | None
    counts: np.ndarray | None
    N: float
    N_rounded: float
    l0_star: int | None
    feasible: bool
    rounded_feasible: bool
    per_l0: list


@dataclass(frozen=True)
class SweepPoint:
    """One point of the duration/threshold tradeoff sweep.

    N values are NaN where the problem is infeasible; best_single_size is
    the relative radius of the best feasible single size (NaN if none).
    """

    T0_frac: float
    xi_isi: float
    N_all: float
    N_single: tuple
    best_single_size: float


def build_windows(spec: DetectionSpec, l0: int, L: int):
    """Per-sample threshold vectors for a window at offset l0.

    Returns (w_det, w_isi) of length L. w_det is xi_det on the window and 0
    elsewhere (a zero detection row constrains nothing since P m >= 0
    always holds). w_isi is xi_isi on the window and NaN elsewhere: outside
    the window the interference is unconstrained and contributes no row,
    rather than a row with an infinite bound.
    """
    if not (isinstance(l0, (int, np.integer)) and 0 <= l0 <= L - spec.L0):
        raise ValueError(f"window offset {l0!r} outside [0, {L - spec.L0}]")
    w_det = np.zeros(L)
    w_isi = np.full(L, np.nan)
    w_det[l0 : l0 + spec.L0] = spec.xi_det
    w_isi[l0 : l0 + spec.L0] = spec.xi_isi
    return w_det, w_isi


def _scaled_violation(A: np.ndarray, rhs: float, x: np.ndarray, sense: str) -> np.ndarray:
    """Constraint violations normalized by each row's max-abs coefficient."""
    lhs = A @ x
    scale = np.max(np.abs(A), axis=1)
    scale[scale == 0.0] = 1.0
    if sense == "ge":
        return (rhs - lhs) / scale
    return (lhs - rhs) / scale


def _worst_new(viol: np.ndarray, active: list, eps: float) -> list:
    order = np.argsort(-viol, kind="stable")
    picked = []
    for idx in order:
        if viol[idx] <= eps:
            break
        if int(idx) not in active:
            picked.append(int(idx))
            if len(picked) >= _MAX_NEW_ROWS:
                break
    return picked


def _solve_window(P_w, Pr_w, xi_det, isi_rhs, eps_feas, eps_opt, warm):
    """Exact LP solve on one window via row generation.

    Returns (x or None, (active_det, active_isi)); x is None when the
    window is infeasible.
    """
    L0, M = P_w.shape
    warm_d, warm_i = warm
    act_d: list = []
    if xi_det > 0:
        row_peak = P_w.max(axis=1)
        if np.any(row_peak == 0.0):
            # a zero-response sample can never reach a positive threshold
            return None, (warm_d, warm_i)
        act_d = sorted({int(np.argmin(row_peak)), *(r for r in warm_d if r < L0)})
    act_i = sorted({int(np.argmax(Pr_w.max(axis=1))), *(r for r in warm_i if r < L0)})

    for _ in range(2 * L0 + 4):
        prob = LinearProgram(
            c=np.ones(M),
            A_ge=P_w[act_d],
            b_ge=np.full(len(act_d), xi_det),
            A_le=Pr_w[act_i],
            b_le=np.full(len(act_i), isi_rhs),
        )
        res = solve_lp(prob, eps_feas, eps_opt)
        if res.status != "optimal":
            # the relaxation has fewer rows, so its infeasibility carries over
            return None, (act_d, act_i)
        x = res.x
        new_d = []
        if xi_det > 0:
            new_d = _worst_new(_scaled_violation(P_w, xi_det, x, "ge"), act_d, eps_feas)
        new_i = _worst_new(_scaled_violation(Pr_w, isi_rhs, x, "le"), act_i, eps_feas)
        if not new_d and not new_i:
            return x, (act_d, act_i)
        act_d = sorted(set(act_d) | set(new_d))
        act_i = sorted(set(act_i) | set(new_i))
    raise RuntimeError("row generation did not converge")  # bounded by 2 L0 rows


def _window_feasible(sc, spec, l0, m, isi_rhs, eps_feas) -> bool:
    P_w = sc.P[l0 : l0 + spec.L0]
    Pr_w = sc.P_r[l0 : l0 + spec.L0]
    if spec.xi_det > 0:
        if np.max(_scaled_violation(P_w, spec.xi_det, m, "ge")) > eps_feas:
            return False
    return bool(np.max(_scaled_violation(Pr_w, isi_rhs, m, "le")) <= eps_feas)


def round_mixture(m: np.ndarray, particles: ParticleSet):
    """Round detection values to whole particle counts.

    counts_i = round(m_i / rho_i**n_d) half away from zero; the rounded
    detection values rho_i**n_d * counts_i are returned together with the
    counts. No repair is attempted here.
    """
    m = np.asarray(m, dtype=float)
    if m.shape != (particles.M,):
        raise ValueError("mixture length does not match the particle set")
    if np.any(m < 0):
        raise ValueError("detection values must be nonnegative")
    w = particles.rho_pow
    counts = np.floor(m / w + 0.5).astype(np.int64)
    return counts * w, counts


def optimize_mixture(
    sc: SampledChannel,
    particles: ParticleSet,
    spec: DetectionSpec,
    *,
    eps_feas: float = 1e-9,
    eps_opt: float = 1e-9,
    repair: str = "none",
) -> MixtureResult:
    """Minimize the total detection value over a detection window.

    Scans all window offsets (or uses spec.l0 when fixed), solving one LP
    per offset; ties between offsets resolve to the smallest offset. The
    continuous optimum is rounded to whole particle counts and re-verified;
    violations are reported via rounded_feasible, not repaired, unless
    repair="up" is requested, which rounds every count upward (restoring
    detection feasibility, possibly at the cost of interference slack).

    Returns a MixtureResult; infeasibility of every offset yields
    feasible=False with diagnostics retained.
    """
    if particles.M != sc.particles.M:
        raise ValueError("particle set does not match the sampled channel")
    if repair not in ("none", "up"):
        raise ValueError(f"repair must be 'none' or 'up', got {repair!r}")
    L = sc.L
    if spec.L0 > L:
        raise ValueError(f"window length {spec.L0} exceeds {L} samples per symbol")
    if spec.l0 is not None and spec.l0 > L - spec.L0:
        raise ValueError(f"window offset {spec.l0} outside [0, {L - spec.L0}]")

    isi_rhs = spec.xi_isi * (1.0 - STRICT_MARGIN)
    offsets = [spec.l0] if spec.l0 is not None else range(L - spec.L0 + 1)

    per_l0 = []
    best_obj = math.inf
    best_x = None
    best_l0 = None
    warm: tuple = ([], [])
    for l0 in offsets:
        x, warm = _solve_window(
            sc.P[l0 : l0 + spec.L0],
            sc.P_r[l0 : l0 + spec.L0],
            spec.xi_det,
            isi_rhs,
            eps_feas,
            eps_opt,
            warm,
        )
        if x is None:
            per_l0.append((int(l0), "infeasible", math.nan))
            continue
        obj = float(x.sum())
        per_l0.append((int(l0), "optimal", obj))
        if obj < best_obj:
            best_obj, best_x, best_l0 = obj, x, int(l0)

    if best_x is None:
        return MixtureResult(
            m=None,
            m_rounded=None,
            counts=None,
            N=math.nan,
            N_rounded=math.nan,
            l0_star=None,
            feasible=False,
            rounded_feasible=False,
            per_l0=per_l0,
        )

    m_rounded, counts = round_mixture(best_x, particles)
    rounded_ok = _window_feasible(sc, spec, best_l0, m_rounded, isi_rhs, eps_feas)
    if repair == "up" and not rounded_ok:
        counts = np.ceil(best_x / particles.rho_pow - 1e-12).astype(np.int64)
        m_rounded = counts * particles.rho_pow
        rounded_ok = _window_feasible(sc, spec, best_l0, m_rounded, isi_rhs, eps_feas)

    return MixtureResult(
        m=best_x,
        m_rounded=m_rounded,
        counts=counts,
        N=best_obj,
        N_rounded=float(m_rounded.sum()),
        l0_star=best_l0,
        feasible=True,
        rounded_feasible=rounded_ok,
        per_l0=per_l0,
    )


def single_size_duration(m: float, D: float, params: ChannelParams, xi_det: float):
    """Time span where m particles of one size stay above the threshold.

    Solves m p(t; D) = xi_det around the unimodal peak by bracketed root
    finding to 1e-6 s absolute tolerance. Returns (t1, t2), the degenerate
    (t_max, t_max) when the scaled peak only touches the threshold, or None
    when it stays below.
    """
    if not m >= 0:
        raise ValueError("detection value must be nonnegative")
    if not xi_det > 0:
        raise ValueError("detection threshold must be positive")
    t_pk, p_pk = cir_peak(D, params)
    peak = m * p_pk
    if peak < xi_det * (1.0 - 1e-12):
        return None
    if peak <= xi_det * (1.0 + 1e-12):
        return (t_pk, t_pk)

    def excess(t: float) -> float:
        return m * cir_eval(t, D, params) - xi_det

    lo = t_pk / 2.0
    while excess(lo) > 0:
        lo /= 2.0
    hi = t_pk * 2.0
    while excess(hi) > 0:
        hi *= 2.0
    t1 = brentq(excess, lo, t_pk, xtol=1e-6)
    t2 = brentq(excess, t_pk, hi, xtol=1e-6)
    return (float(t1), float(t2))


def single_size_benchmark(
    sc: SampledChannel,
    particles: ParticleSet,
    spec: DetectionSpec,
    **kwargs,
):
    """Optimize each size alone and pick the best.

    Returns (results, best_index). The best size is the feasible one with
    minimal N; ties resolve to the larger size. best_index is None when no
    single size is feasible.
    """
    results = []
    best_idx = None
    best_n = math.inf
    for i in range(particles.M):
        res = optimize_mixture(restrict_channel(sc, [i]), particles.subset([i]), spec, **kwargs)
        results.append(res)
        # "<=" with a relative tie band hands ties to the larger size
        if res.feasible and res.N <= best_n * (1.0 + 1e-12):
            best_idx, best_n = i, res.N
    return results, best_idx


def _sweep_point(sc, particles, spec, frac, xi_isi, kwargs) -> SweepPoint:
    L0 = max(1, int(round(frac * sc.L)))
    point_spec = DetectionSpec(xi_det=spec.xi_det, xi_isi=xi_isi, L0=L0, l0=spec.l0)
    full = optimize_mixture(sc, particles, point_spec, **kwargs)
    singles, best_idx = single_size_benchmark(sc, particles, point_spec, **kwargs)
    return SweepPoint(
        T0_frac=float(frac),
        xi_isi=float(xi_isi),
        N_all=full.N,
        N_single=tuple(r.N for r in singles),
        best_single_size=particles.rho[best_idx] if best_idx is not None else math.nan,
    )


def sweep_tradeoff(
    params: ChannelParams,
    particles: ParticleSet,
    spec: DetectionSpec,
    T0_fracs: Sequence[float],
    xi_isi_values: Sequence[float],
    *,
    L: int,
    rel_tol: float = 1e-9,
    workers: int = 1,
    sc: SampledChannel | None = None,
    **kwargs,
) -> list:
    """Tradeoff sweep over window fractions and interference thresholds.

    spec provides the detection threshold and offset policy; its L0 and
    xi_isi are overridden per point (L0 = round(frac * L), at least one
    sample). Points are evaluated independently, in parallel when
    workers > 1, and returned in deterministic order: xi_isi values in the
    given order, T0 fractions in the given order within each.
    """
    if sc is None:
        sc = sample_matrices(params, particles, L, rel_tol)
    tasks = [(frac, xi) for xi in xi_isi_values for frac in T0_fracs]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(
                pool.map(lambda t: _sweep_point(sc, particles, spec, t[0], t[1], kwargs), tasks)
            )
    return [_sweep_point(sc, particles, spec, frac, xi, kwargs) for frac, xi in tasks]
