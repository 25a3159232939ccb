"""Sampled channel matrices, mixture pulse shapes, and OOK received signals.

One symbol interval is sampled at L uniform points l * dt, dt = T / L.
Column i of the pulse matrix P holds the impulse response of size i at the
sample times; the interference matrix P_r holds the worst-case folded
response. A transmit mixture weights the columns, so h = P m is the
received pulse and h_r = P_r m the worst-case interference signal.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .channel import ChannelParams, ParticleSet, cir_eval, isi_eval

__all__ = [
    "SampledChannel",
    "Mixture",
    "SignalVector",
    "sample_matrices",
    "pulse_shape",
    "isi_shape",
    "ook_signal",
    "peak_detection_value",
    "restrict_channel",
]

_KINDS = ("pulse", "isi", "ook")


@dataclass(frozen=True)
class SignalVector:
    """Per-sample signal values within one symbol interval."""

    values: np.ndarray
    kind: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        if self.kind not in _KINDS:
            raise ValueError(f"kind must be one of {_KINDS}, got {self.kind!r}")
        if np.any(self.values < 0):
            raise ValueError("signal values must be nonnegative")


@dataclass
class Mixture:
    """Transmit mixture: detection values m_i, optionally integer counts n_i.

    When counts are present they satisfy m_i = rho_i**n_d * n_i exactly by
    construction (see optimizer.round_mixture).
    """

    m: np.ndarray
    counts: np.ndarray | None = None

    def __post_init__(self) -> None:
        self.m = np.asarray(self.m, dtype=float)
        if self.m.ndim != 1:
            raise ValueError("mixture must be a 1-D vector")
        if np.any(self.m < 0):
            raise ValueError("detection values must be nonnegative")
        if self.counts is not None:
            self.counts = np.asarray(self.counts, dtype=np.int64)
            if self.counts.shape != self.m.shape:
                raise ValueError("counts must match the mixture length")
            if np.any(self.counts < 0):
                raise ValueError("particle counts must be nonnegative")


@dataclass(frozen=True)
class SampledChannel:
    """Channel matrices on the per-symbol sample grid.

    L: samples per symbol; dt = T / L
    P: (L, M) impulse-response samples, P[l, i] = p(l dt; D_i)
    P_r: (L, M) worst-case interference samples
    """

    L: int
    dt: float
    P: np.ndarray
    P_r: np.ndarray
    params: ChannelParams
    particles: ParticleSet

    def __post_init__(self) -> None:
        if self.P.shape != (self.L, self.particles.M) or self.P_r.shape != self.P.shape:
            raise ValueError("matrix shapes must be (L, M)")
        if abs(self.L * self.dt - self.params.T) > 1e-12 * self.params.T:
            raise ValueError("sample grid does not span the symbol duration")
        if np.any(self.P < 0) or np.any(self.P_r < 0):
            raise ValueError("channel matrices must be nonnegative")
        if np.any(self.P[0] != 0.0):
            raise ValueError("impulse response at t = 0 must be zero")


def sample_matrices(
    params: ChannelParams, particles: ParticleSet, L: int, rel_tol: float = 1e-9
) -> SampledChannel:
    """Sample the impulse response and interference series for every size.

    Args:
        params: channel geometry.
        particles: size family.
        L: samples per symbol, at least 2.
        rel_tol: truncation tolerance of the interference series.

    Returns:
        SampledChannel with dt = T / L and matrices of shape (L, M).
    """
    if not (isinstance(L, (int, np.integer)) and L >= 2):
        raise ValueError(f"samples per symbol must be an integer >= 2, got {L!r}")
    dt = params.T / L
    t = np.arange(L) * dt
    P = np.empty((L, particles.M))
    P_r = np.empty((L, particles.M))
    for i, Di in enumerate(particles.D):
        P[:, i] = cir_eval(t, Di, params)
        P_r[:, i] = isi_eval(t, Di, params, rel_tol)
    return SampledChannel(L=int(L), dt=dt, P=P, P_r=P_r, params=params, particles=particles)


def restrict_channel(sc: SampledChannel, indices: Sequence[int]) -> SampledChannel:
    """View of the sampled channel restricted to a subset of sizes."""
    idx = list(indices)
    return SampledChannel(
        L=sc.L,
        dt=sc.dt,
        P=sc.P[:, idx],
        P_r=sc.P_r[:, idx],
        params=sc.params,
        particles=sc.particles.subset(idx),
    )


def _check_mix(sc: SampledChannel, mix: Mixture) -> None:
    if mix.m.shape != (sc.particles.M,):
        raise ValueError(
            f"mixture length {mix.m.shape[0]} does not match {sc.particles.M} sizes"
        )


def pulse_shape(sc: SampledChannel, mix: Mixture) -> SignalVector:
    """Received pulse h = P m of one isolated release."""
    _check_mix(sc, mix)
    return SignalVector(values=sc.P @ mix.m, kind="pulse")


def isi_shape(sc: SampledChannel, mix: Mixture) -> SignalVector:
    """Worst-case interference signal h_r = P_r m (all past symbols on)."""
    _check_mix(sc, mix)
    return SignalVector(values=sc.P_r @ mix.m, kind="isi")


def ook_signal(
    symbols: Sequence[int],
    sc: SampledChannel,
    mix: Mixture,
    horizon: int,
    k_min: int = 0,
) -> list:
    """Received signal of an on-off keyed symbol sequence.

    symbols[j] is the symbol a_{k_min + j} in {0, 1}; each 1 releases the
    mixture at time (k_min + j) T. The signal is evaluated on the sample
    grid of intervals 0 .. horizon-1. Within the release interval the
    precomputed pulse matrix is used; contributions reaching later
    intervals are evaluated directly from the impulse response.

    Returns a list of `horizon` SignalVector objects of kind "ook".
    """
    _check_mix(sc, mix)
    if not (isinstance(horizon, (int, np.integer)) and horizon >= 1):
        raise ValueError(f"horizon must be a positive integer, got {horizon!r}")
    sym = [int(s) for s in symbols]
    if any(s not in (0, 1) for s in sym):
        raise ValueError("symbols must be 0 or 1")
    active = np.array([k_min + j for j, s in enumerate(sym) if s == 1], dtype=np.int64)

    T = sc.params.T
    grid = np.arange(sc.L) * sc.dt
    h_own = sc.P @ mix.m
    out = []
    for j in range(horizon):
        vals = np.zeros(sc.L)
        if active.size:
            if np.any(active == j):
                vals += h_own
            past = active[active < j]
            if past.size:
                # sample times relative to each earlier release
                offsets = (j - past)[:, None] * T + grid[None, :]
                for i, Di in enumerate(sc.particles.D):
                    if mix.m[i] != 0.0:
                        vals += mix.m[i] * cir_eval(offsets, Di, sc.params).sum(axis=0)
        out.append(SignalVector(values=vals, kind="ook"))
    return out


def peak_detection_value(mix: Mixture) -> float:
    """Total detection value N = sum_i m_i released per on-symbol."""
    return float(np.sum(mix.m))
