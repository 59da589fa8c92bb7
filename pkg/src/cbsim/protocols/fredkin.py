"""Fredkin truth table of the CBS gate with three-step projective readout.

Inputs ``|s, n_a, n_b>`` with ``s`` in {g, e} and ``n`` in {0, 1} are made
with blue-sideband pi-pulses, the gate is one CBS at ``tau``, and each output
probability is measured by three consecutive spin detections with collapse in
between:

1. spin: a carrier pi-pulse first when the target is ``e``; detect dark (``g``)
2. mode a: red-sideband pi-pulse, plus a carrier pi-pulse when the target is
   ``n_a >= 1``; detect dark
3. mode b: as step 2

A red-sideband pi-pulse leaves ``|g,0>`` dark and moves ``|g,n>=1>`` to the
bright ``|e>``, so "dark" selects ``n = 0`` without the extra carrier pulse
and ``n >= 1`` with it. Detection flips the outcome with probability
``detect_err``.
"""
from __future__ import annotations

import itertools
import math

import numpy as np

from .. import generators as gen
from ..fockspace import HybridState, LinearOperator, apply, spin_projector
from ..noise import NOISELESS, NoiseParams
from ..results import ExperimentResult, ShotPlan, sample_counts
from .common import make_simulator, plan_or_exact
from .programs import fredkin_ops

INPUTS = list(itertools.product((0, 1), (0, 1), (0, 1)))
LABELS = [f"{'ge'[s]}{a}{b}" for s, a, b in INPUTS]


def ideal_output(spin: int, n_a: int, n_b: int) -> tuple[int, int, int]:
    return (spin, n_b, n_a) if spin else (spin, n_a, n_b)


def _detect_dark(rho: np.ndarray, proj_g: np.ndarray, proj_e: np.ndarray, eps: float):
    """Probability of a dark outcome and the normalized post-measurement state."""
    branch = (1 - eps) * (proj_g @ rho @ proj_g) + eps * (proj_e @ rho @ proj_e)
    p = float(np.trace(branch).real)
    return p, (branch / p if p > 0 else branch)


class Readout:
    """Sequential three-step readout on one layout."""

    def __init__(self, layout, detect_err: float = 0.0):
        self.layout = layout
        self.eps = detect_err
        self.proj_g = spin_projector(layout, "g").toarray()
        self.proj_e = spin_projector(layout, "e").toarray()
        self.carrier = gen.spin_rotation(gen.RotationParams(math.pi, 0.0), layout)
        self.rsb = {m: gen.sideband_pi("red", m, layout) for m in ("a", "b")}

    def _pulse(self, op: LinearOperator, rho: np.ndarray) -> np.ndarray:
        return apply(op, HybridState(self.layout, rho)).data

    def probability(self, rho: np.ndarray, target: tuple[int, int, int]) -> float:
        spin, n_a, n_b = target
        if spin:
            rho = self._pulse(self.carrier, rho)
        total, rho = _detect_dark(rho, self.proj_g, self.proj_e, self.eps)
        for mode, level in (("a", n_a), ("b", n_b)):
            if total == 0:
                return 0.0
            rho = self._pulse(self.rsb[mode], rho)
            if level:
                rho = self._pulse(self.carrier, rho)
            p, rho = _detect_dark(rho, self.proj_g, self.proj_e, self.eps)
            total *= p
        return total


def fredkin_table(
    noise: NoiseParams = NOISELESS,
    shot_plan: ShotPlan | None = None,
    cutoff: int = 2 + gen.GUARD_BAND,
) -> ExperimentResult:
    """8x8 output-probability table and the mean ideal-output probability.

    Row ``i`` is input ``INPUTS[i]`` (index ``4 s + 2 n_a + n_b``), column
    ``j`` the measured output in the same ordering. In sampled mode each row
    is a multinomial draw of ``shots`` and the table holds frequencies.
    """
    plan = plan_or_exact(shot_plan)
    sim = make_simulator((cutoff, cutoff), noise, echo=False)
    readout = Readout(sim.layout, noise.detect_err)
    table = np.zeros((8, 8))
    for i, inp in enumerate(INPUTS):
        state, _ = sim.run(fredkin_ops(*inp))
        rho = state.density_matrix()
        for j, out in enumerate(INPUTS):
            table[i, j] = readout.probability(rho, out)
    rng = plan.rng()
    counts = None
    measured = table
    if plan.sampled:
        counts = np.array([sample_counts(row / row.sum(), plan.shots, rng) for row in table])
        measured = counts / plan.shots
    ideal = [INPUTS.index(ideal_output(*inp)) for inp in INPUTS]
    success_each = np.array([measured[i, ideal[i]] for i in range(8)])
    success = float(success_each.mean())
    success_err = 0.0
    if plan.sampled:
        success_err = float(np.sqrt(np.sum(success_each * (1 - success_each) / plan.shots)) / 8)
    rows = []
    for i, inp in enumerate(LABELS):
        for j, out in enumerate(LABELS):
            row = {"input": inp, "output": out, "probability": float(table[i, j])}
            if counts is not None:
                row["counts"] = int(counts[i, j])
            rows.append(row)
    return ExperimentResult(
        protocol="fredkin",
        settings={"cutoff": cutoff, "noise": noise.to_dict()},
        rows=rows,
        derived={"table": measured, "success_probability": success, "labels": LABELS},
        errors={"success_probability": success_err},
        leakage=sim.max_leakage,
        seed=int(plan.seed),
        shot_plan=plan.to_dict(),
    )
