"""Helpers shared by the protocol implementations."""
from __future__ import annotations

import math

import numpy as np

from .. import generators as gen
from ..engine import Simulator
from ..fockspace import SPIN_G, HybridState, ModeLayout
from ..noise import NOISELESS, NoiseParams
from ..results import EXACT, ShotPlan, sample_counts
from .estimation import binomial_estimate
from .programs import prep

DEFAULT_PHASES = np.linspace(0, 2 * np.pi, 24, endpoint=False)


def level_support(recipe, tol: float = 1e-10) -> int:
    """Highest Fock level a preparation recipe populates beyond ``tol``."""
    if isinstance(recipe, np.ndarray):
        weights = np.abs(recipe) ** 2 if recipe.ndim == 1 else np.real(np.diag(recipe))
        nz = np.flatnonzero(weights > tol)
        return int(nz[-1]) if nz.size else 0
    kind, value = recipe
    if kind == "fock":
        return int(value)
    mean = abs(complex(value)) ** 2 if kind == "coherent" else float(value)
    n = max(1, int(math.ceil(mean)))
    if kind == "coherent":
        while gen.coherent_tail(mean, n + 1) > tol:
            n += 1
        return n
    # thermal: geometric tail (nbar / (nbar + 1))^(n+1)
    if mean == 0:
        return 0
    ratio = mean / (mean + 1)
    return int(math.ceil(math.log(tol) / math.log(ratio)))


def initial_state(sim: Simulator, recipes: dict) -> HybridState:
    """Product state from ``{mode: recipe}``; a recipe is ``(kind, value)`` or an array.

    Array recipes (ket or density matrix of one mode) are used verbatim; tuple
    recipes go through ``PREP`` so that thermal occupations are applied.
    """
    if not any(isinstance(r, np.ndarray) for r in recipes.values()):
        return sim.initial_state([prep(kind, value, mode) for mode, (kind, value) in recipes.items()])
    factors = []
    for mode in sim.layout.modes:
        recipe = recipes.get(mode, ("fock", 0))
        cutoff = sim.layout.cutoff(mode)
        if isinstance(recipe, np.ndarray):
            arr = np.zeros((cutoff,) * recipe.ndim, dtype=complex)
            sl = tuple(slice(0, min(cutoff, s)) for s in recipe.shape)
            arr[sl] = recipe[sl]
            factors.append(arr)
        else:
            factors.append(sim.mode_factor(mode, *recipe))
    return HybridState.product(sim.layout, SPIN_G, factors)


def make_simulator(cutoffs, noise: NoiseParams | None, echo: bool, xi: float = gen.DEFAULT_XI) -> Simulator:
    return Simulator(ModeLayout(tuple(cutoffs)), xi, noise or NOISELESS, echo)


def sample_binary(p: np.ndarray, plan: ShotPlan, rng: np.random.Generator):
    """Counts, estimates and standard errors for a list of two-outcome settings.

    In exact mode the estimates are the probabilities themselves and the
    errors are zero; counts are ``None``.
    """
    p = np.clip(np.asarray(p, dtype=float), 0.0, 1.0)
    if not plan.sampled:
        return None, p, np.zeros_like(p)
    counts = np.array([sample_counts([1 - q, q], plan.shots, rng)[1] for q in p])
    est, err = binomial_estimate(counts, plan.shots)
    return counts, est, err


def plan_or_exact(plan: ShotPlan | None) -> ShotPlan:
    return EXACT if plan is None else plan
