"""Swap test, overlap matrix, coherent-state reconstruction and parity gate.

The swap test puts the state under test in mode ``a`` and a Fock reference
``|m>`` in mode ``b``. Without echo the probability to find ``|e>`` is

    P(phi) = (1 - (-1)^(m+1) cos(phi) |<m|psi>|^2) / 2

With the spin echo the same information appears in ``|g>``, and the sign of
the final pulse phase is mirrored; the reported probability is ``P(g)`` so
the formula above holds for both variants.
"""
from __future__ import annotations

import warnings

import numpy as np

from .. import generators as gen
from ..noise import NOISELESS, NoiseParams
from ..results import ExperimentResult, ShotPlan
from .common import (
    DEFAULT_PHASES,
    initial_state,
    level_support,
    make_simulator,
    plan_or_exact,
    sample_binary,
)
from .estimation import fit_poisson_mean, fit_sinusoid
from .programs import HALF_PI, parity_ops, rot, swap_test_ops


def _recipe(psi):
    if isinstance(psi, np.ndarray):
        return psi
    kind, value = psi
    if kind not in ("fock", "coherent", "thermal"):
        raise ValueError(f"unknown preparation kind {kind!r}")
    return (kind, value)


def _recipe_label(psi) -> str:
    if isinstance(psi, np.ndarray):
        return "custom"
    return f"{psi[0]}:{psi[1]}"


def swap_cutoff(psi, m: int) -> int:
    """Shared cutoff holding every ``n + m`` sector the gate can reach.

    The echoed half-gates spread ``|n, m>`` over all ``|j, n + m - j>``, so the
    cutoff must exceed ``n + m``, plus the guard band.
    """
    return level_support(_recipe(psi)) + m + gen.GUARD_BAND


def swap_probabilities(sim, psi, m: int, phis, echo: bool) -> np.ndarray:
    """Reported swap-test probability at each phase (no sampling)."""
    state = initial_state(sim, {"a": _recipe(psi), "b": ("fock", m)})
    before, _ = sim.run(swap_test_ops(0.0, echo)[:-1], state)
    out = []
    for phi in phis:
        final = sim.step(before, rot(HALF_PI, phi))
        p_g, p_e = sim.measure(final, ("spin",))["spin"]
        out.append(p_g if echo else p_e)
    return np.array(out)


def swap_test(
    psi,
    m: int,
    phis=None,
    echo: bool = False,
    noise: NoiseParams = NOISELESS,
    shot_plan: ShotPlan | None = None,
    cutoff: int | None = None,
    rng: np.random.Generator | None = None,
) -> ExperimentResult:
    """Swap test of ``psi`` (mode ``a``) against Fock ``|m>`` (mode ``b``).

    Parameters
    ----------
    psi
        ``("fock", n)``, ``("coherent", alpha)``, ``("thermal", nbar)`` or a
        mode-``a`` ket / density matrix.
    phis
        Phases of the final analysis pulse; 24 evenly spaced by default.
    cutoff
        Shared cutoff of both modes; chosen from ``psi`` and ``m`` if omitted.

    The result holds one row per phase and the fitted contrast, plus the
    in-phase contrast ``2 (-1)^m B_cos`` which keeps the sign expected from
    the formula above (useful when the overlap is small).
    """
    plan = plan_or_exact(shot_plan)
    phis = DEFAULT_PHASES if phis is None else np.asarray(phis, dtype=float)
    cutoff = cutoff or swap_cutoff(psi, m)
    sim = make_simulator((cutoff, cutoff), noise, echo)
    p = swap_probabilities(sim, psi, m, phis, echo)
    rng = plan.rng() if rng is None else rng
    counts, est, err = sample_binary(p, plan, rng)
    fit = fit_sinusoid(phis, est, err if plan.sampled else None)
    sign = (-1) ** m
    rows = []
    for i, phi in enumerate(phis):
        row = {"phi": float(phi), "probability": float(p[i])}
        if counts is not None:
            row.update(counts=int(counts[i]), estimate=float(est[i]), stderr=float(err[i]))
        rows.append(row)
    return ExperimentResult(
        protocol="swaptest",
        settings={"psi": _recipe_label(psi), "m": m, "echo": echo, "cutoff": cutoff, "noise": noise.to_dict()},
        rows=rows,
        derived={
            "contrast": fit.contrast,
            "in_phase_contrast": 2 * sign * fit.cos_coef,
            "offset": fit.offset,
            "phase": fit.phase,
        },
        errors={
            "contrast": fit.contrast_err,
            "in_phase_contrast": 2 * fit.cos_err,
            "offset": fit.offset_err,
            "phase": fit.phase_err,
        },
        leakage=sim.max_leakage,
        seed=int(plan.seed),
        shot_plan=plan.to_dict(),
    )


def overlap_matrix(
    n_max: int = 5,
    echo: bool = False,
    noise: NoiseParams = NOISELESS,
    shot_plan: ShotPlan | None = None,
    phis=None,
) -> ExperimentResult:
    """Swap-test contrast for every pair of Fock states ``|n>`` (mode a), ``|m>`` (mode b)."""
    plan = plan_or_exact(shot_plan)
    cutoff = 2 * n_max + gen.GUARD_BAND
    rng = plan.rng()
    matrix = np.zeros((n_max + 1, n_max + 1))
    errors = np.zeros_like(matrix)
    rows = []
    leak = 0.0
    for n in range(n_max + 1):
        for m in range(n_max + 1):
            res = swap_test(("fock", n), m, phis, echo, noise, plan, cutoff, rng)
            matrix[n, m] = res.derived["contrast"]
            errors[n, m] = res.errors["contrast"]
            leak = max(leak, res.leakage)
            rows.append({"n": n, "m": m, "contrast": matrix[n, m], "stderr": errors[n, m]})
    return ExperimentResult(
        protocol="overlap",
        settings={"n_max": n_max, "echo": echo, "cutoff": cutoff, "noise": noise.to_dict()},
        rows=rows,
        derived={"contrast_matrix": matrix},
        errors={"contrast_matrix": errors},
        leakage=leak,
        seed=int(plan.seed),
        shot_plan=plan.to_dict(),
    )


def reconstruct_coherent(
    alpha: complex,
    n_max: int = 5,
    echo: bool = False,
    noise: NoiseParams = NOISELESS,
    shot_plan: ShotPlan | None = None,
    phis=None,
    cutoff: int = 20,
) -> ExperimentResult:
    """Fock populations of a coherent state from swap tests, then a Poisson fit.

    Each population is the in-phase swap-test contrast against ``|n>``; the
    fitted ``|alpha|^2`` is the truncated-Poisson maximum-likelihood value.
    """
    plan = plan_or_exact(shot_plan)
    phis = DEFAULT_PHASES if phis is None else np.asarray(phis, dtype=float)
    if cutoff < n_max + gen.GUARD_BAND + 1:
        raise ValueError(f"cutoff {cutoff} too small for n_max={n_max}")
    gen.mode_factor("coherent", alpha, cutoff)  # raises if alpha does not fit
    rng = plan.rng()
    pops = np.zeros(n_max + 1)
    errs = np.zeros(n_max + 1)
    rows = []
    leak = 0.0
    for n in range(n_max + 1):
        res = swap_test(("coherent", complex(alpha)), n, phis, echo, noise, plan, cutoff, rng)
        pops[n] = res.derived["in_phase_contrast"]
        errs[n] = res.errors["in_phase_contrast"]
        leak = max(leak, res.leakage)
        for row in res.rows:
            rows.append({"n": n, **row})
    if np.all(pops <= 0):
        raise ValueError("all measured populations vanish; Poisson fit is degenerate")
    lam, lam_err = fit_poisson_mean(pops, errs if plan.sampled else None)
    return ExperimentResult(
        protocol="coherent",
        settings={
            "alpha": complex(alpha),
            "n_max": n_max,
            "echo": echo,
            "cutoff": cutoff,
            "noise": noise.to_dict(),
        },
        rows=rows,
        derived={"populations": pops, "mean_photon_number": lam},
        errors={"populations": errs, "mean_photon_number": lam_err},
        leakage=leak,
        seed=int(plan.seed),
        shot_plan=plan.to_dict(),
    )


def parity_probabilities(sim, state, echo: bool) -> tuple[float, float, float]:
    """``(P(g), P(e), P(even))`` after the parity sequence on ``state``."""
    final, _ = sim.run(parity_ops(echo), state)
    p_g, p_e = sim.measure(final, ("spin",))["spin"]
    return float(p_g), float(p_e), float(p_g if echo else p_e)


def parity_gate(
    psi,
    echo: bool = False,
    noise: NoiseParams = NOISELESS,
    shot_plan: ShotPlan | None = None,
    mode_b=("fock", 0),
    cutoff: int | None = None,
) -> ExperimentResult:
    """Map the parity of mode ``a`` onto the spin.

    Without echo even parity ends in ``|e>``; with echo it ends in ``|g>``.
    Mode ``b`` is expected in vacuum; anything else triggers a warning
    because the mapping no longer holds.
    """
    plan = plan_or_exact(shot_plan)
    mode_b = _recipe(mode_b)
    if isinstance(mode_b, np.ndarray) or tuple(mode_b) != ("fock", 0):
        warnings.warn("mode b is not in vacuum; the parity mapping is not guaranteed", stacklevel=2)
    n = max(level_support(_recipe(psi)), level_support(mode_b))
    cutoff = cutoff or n + gen.GUARD_BAND + 1
    sim = make_simulator((cutoff, cutoff), noise, echo)
    state = initial_state(sim, {"a": _recipe(psi), "b": mode_b})
    p_g, p_e, p_even = parity_probabilities(sim, state, echo)
    counts, est, err = sample_binary(np.array([p_even]), plan, plan.rng())
    row = {"p_g": p_g, "p_e": p_e, "p_even": p_even}
    if counts is not None:
        row.update(counts_even=int(counts[0]), estimate=float(est[0]), stderr=float(err[0]))
    return ExperimentResult(
        protocol="parity",
        settings={"psi": _recipe_label(psi), "echo": echo, "cutoff": cutoff, "noise": noise.to_dict()},
        rows=[row],
        derived={"parity": 2 * float(est[0]) - 1, "p_even": float(est[0])},
        errors={"parity": 2 * float(err[0]), "p_even": float(err[0])},
        leakage=sim.max_leakage,
        seed=int(plan.seed),
        shot_plan=plan.to_dict(),
    )


def ideal_swap_probability(overlap_sq: float, m: int, phi) -> np.ndarray:
    """Ideal swap-test probability for squared overlap ``|<m|psi>|^2``."""
    return 0.5 * (1 - (-1) ** (m + 1) * np.cos(phi) * overlap_sq)


__all__ = [
    "swap_test",
    "swap_probabilities",
    "overlap_matrix",
    "reconstruct_coherent",
    "parity_gate",
    "parity_probabilities",
    "ideal_swap_probability",
    "swap_cutoff",
]
