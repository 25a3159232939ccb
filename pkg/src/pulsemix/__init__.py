"""Design of transmit mixtures of differently sized diffusing particles.

Differently sized particles diffuse at different rates, so a mixture of
sizes can shape the average received pulse of a molecular communication
link: enough signal across a detection window, bounded interference into
later symbols, with the fewest detected particles. This package models the
diffusive channel, poses the mixture design as a linear program, solves it
exactly, and validates the channel model by Brownian motion simulation.
"""

__version__ = "0.1.0"

from .channel import (
    AnalyticBounds,
    ChannelParams,
    ParticleSet,
    analytic_bounds,
    cir_eval,
    cir_peak,
    isi_eval,
    relative_size_to_diffusion,
    small_particle_duration,
    zeta_three_halves,
)
from .lp import LinearProgram, LpResult, solve_lp
from .mcvalidate import (
    McConfig,
    McEstimate,
    McReport,
    exact_occupancy,
    point_sample_bias,
    simulate_cir,
    validate_cir,
)
from .optimizer import (
    DetectionSpec,
    MixtureResult,
    SweepPoint,
    build_windows,
    optimize_mixture,
    round_mixture,
    single_size_benchmark,
    single_size_duration,
    sweep_tradeoff,
)
from .signal import (
    Mixture,
    SampledChannel,
    SignalVector,
    isi_shape,
    ook_signal,
    peak_detection_value,
    pulse_shape,
    restrict_channel,
    sample_matrices,
)

__all__ = [
    "__version__",
    "AnalyticBounds",
    "ChannelParams",
    "ParticleSet",
    "analytic_bounds",
    "cir_eval",
    "cir_peak",
    "isi_eval",
    "relative_size_to_diffusion",
    "small_particle_duration",
    "zeta_three_halves",
    "LinearProgram",
    "LpResult",
    "solve_lp",
    "McConfig",
    "McEstimate",
    "McReport",
    "exact_occupancy",
    "point_sample_bias",
    "simulate_cir",
    "validate_cir",
    "DetectionSpec",
    "MixtureResult",
    "SweepPoint",
    "build_windows",
    "optimize_mixture",
    "round_mixture",
    "single_size_benchmark",
    "single_size_duration",
    "sweep_tradeoff",
    "Mixture",
    "SampledChannel",
    "SignalVector",
    "isi_shape",
    "ook_signal",
    "peak_detection_value",
    "pulse_shape",
    "restrict_channel",
    "sample_matrices",
]
