"""End-to-end protocols and their estimators."""
from ..results import EXACT, ExperimentResult, ShotPlan
from .estimation import (
    SinusoidFit,
    binomial_estimate,
    fit_poisson_mean,
    fit_sinusoid,
    fit_wigner_mixture,
    sample_counts,
    wigner_fock_analytic,
)
from .fredkin import fredkin_table
from .noon import (
    generate_noon,
    noon_diagonals,
    noon_experiment,
    noon_fidelity,
    noon_metrics,
    noon_offdiagonals,
)
from .swap import overlap_matrix, parity_gate, reconstruct_coherent, swap_test
from .wigner import wigner_scan

__all__ = [
    "EXACT",
    "ExperimentResult",
    "ShotPlan",
    "SinusoidFit",
    "binomial_estimate",
    "fit_poisson_mean",
    "fit_sinusoid",
    "fit_wigner_mixture",
    "fredkin_table",
    "generate_noon",
    "noon_diagonals",
    "noon_experiment",
    "noon_fidelity",
    "noon_metrics",
    "noon_offdiagonals",
    "overlap_matrix",
    "parity_gate",
    "reconstruct_coherent",
    "sample_counts",
    "swap_test",
    "wigner_fock_analytic",
    "wigner_scan",
]
