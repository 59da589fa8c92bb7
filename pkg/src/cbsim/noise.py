"""Markovian noise: heating, spin and motional dephasing, readout flips.

Rates are in s^-1. A "coherence time" is the 1/e decay time of the magnitude
of an off-diagonal density-matrix element. With the jump operators used here

* spin dephasing ``sqrt(rate / 2) sigma_z`` gives ``|rho_ge| ~ exp(-rate t)``,
  so ``rate = 1 / T2``;
* motional dephasing ``sqrt(gamma) n`` gives ``|rho_0n| ~ exp(-gamma n^2 t / 2)``,
  so a ``(|0> + |n>)`` superposition lives ``2 / (gamma n^2)``;
* heating ``sqrt(ndot) a^dag`` and ``sqrt(ndot) a`` gives ``d<n>/dt = ndot``.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields, replace
from typing import Mapping, NamedTuple, Sequence

import numpy as np
import scipy.sparse as sp

from .fockspace import (
    HAMILTONIAN,
    OPERATOR,
    SPIN,
    HybridState,
    LinearOperator,
    ModeLayout,
    embed,
    ladder_operators,
    number_operator,
)

MAX_STEP = 1e-6


@dataclass(frozen=True)
class NoiseParams:
    """Noise rates and initial occupations.

    heat_a, heat_b
        heating rates (quanta/s)
    deph_spin, deph_spin_echo
        spin dephasing rates (1/s) for plain and spin-echo sequences
    deph_mode_a, deph_mode_b
        motional dephasing rates gamma (1/s) of the number-operator jumps
    nbar_a, nbar_b
        initial thermal occupations
    detect_err
        probability that a spin detection reports the wrong state
    correlated_modes
        use a single ``sqrt(gamma) (n_a - n_b)`` jump (gamma from
        ``deph_mode_a``) instead of independent per-mode jumps
    """

    heat_a: float = 0.0
    heat_b: float = 0.0
    deph_spin: float = 0.0
    deph_spin_echo: float = 0.0
    deph_mode_a: float = 0.0
    deph_mode_b: float = 0.0
    nbar_a: float = 0.0
    nbar_b: float = 0.0
    detect_err: float = 0.0
    correlated_modes: bool = False

    def __post_init__(self):
        for f in fields(self):
            if f.name == "correlated_modes":
                continue
            value = getattr(self, f.name)
            if not (math.isfinite(value) and value >= 0):
                raise ValueError(f"{f.name} must be a finite non-negative number, got {value}")
        if self.detect_err > 0.5:
            raise ValueError(f"detect_err must be in [0, 0.5], got {self.detect_err}")

    def spin_rate(self, echoed: bool) -> float:
        return self.deph_spin_echo if echoed else self.deph_spin

    def nbar(self, mode: str) -> float:
        return {"a": self.nbar_a, "b": self.nbar_b}.get(mode, 0.0)

    @property
    def has_dynamics(self) -> bool:
        """True when any rate produces non-unitary evolution."""
        return any(
            (self.heat_a, self.heat_b, self.deph_spin, self.deph_spin_echo, self.deph_mode_a, self.deph_mode_b)
        )

    def scaled(self, **factors: float) -> "NoiseParams":
        """Copy with selected fields multiplied, e.g. ``scaled(heat_a=2)``."""
        return replace(self, **{k: getattr(self, k) * v for k, v in factors.items()})

    def to_dict(self) -> dict:
        return asdict(self)


NOISELESS = NoiseParams()


class Jump(NamedTuple):
    label: str
    operator: LinearOperator  # unscaled; the Lindblad operator is sqrt(rate) * operator
    rate: float


def collapse_operators(params: NoiseParams, layout: ModeLayout, echoed: bool = False) -> list[Jump]:
    """Jump operators for ``layout``; zero-rate channels are omitted.

    Mode ``c`` is treated as noiseless.
    """
    jumps = []
    for mode, heat in (("a", params.heat_a), ("b", params.heat_b)):
        if heat > 0 and mode in layout.modes:
            a, a_dag = ladder_operators(layout, mode)
            jumps.append(Jump(f"heat_up_{mode}", a_dag, heat))
            jumps.append(Jump(f"heat_down_{mode}", a, heat))
    spin_rate = params.spin_rate(echoed)
    if spin_rate > 0:
        sz = LinearOperator(layout, embed(layout, {SPIN: np.diag([1.0, -1.0])}), OPERATOR)
        jumps.append(Jump("spin_dephasing", sz, spin_rate / 2))
    if params.correlated_modes:
        if params.deph_mode_a > 0 and "b" in layout.modes:
            diff = number_operator(layout, "a").matrix - number_operator(layout, "b").matrix
            jumps.append(Jump("mode_dephasing_ab", LinearOperator(layout, diff), params.deph_mode_a))
    else:
        for mode, gamma in (("a", params.deph_mode_a), ("b", params.deph_mode_b)):
            if gamma > 0 and mode in layout.modes:
                jumps.append(Jump(f"mode_dephasing_{mode}", number_operator(layout, mode), gamma))
    return jumps


def _row_norm(m: sp.csr_array) -> float:
    if m.nnz == 0:
        return 0.0
    return float(abs(m).sum(axis=1).max())


def step_size(t: float, hamiltonian: LinearOperator | None, jumps: Sequence[Jump]) -> tuple[int, float]:
    """Number of RK4 steps and their length for an evolution of duration ``t``."""
    dt = MAX_STEP
    max_rate = max((j.rate * _row_norm(j.operator.matrix) ** 2 for j in jumps), default=0.0)
    if max_rate > 0:
        dt = min(dt, 1 / (50 * max_rate))
    if hamiltonian is not None:
        h_norm = _row_norm(hamiltonian.matrix)
        if h_norm > 0:
            dt = min(dt, 0.1 / h_norm)
    n = max(1, math.ceil(t / dt - 1e-9))
    return n, t / n


def evolve(
    state: HybridState,
    hamiltonian: LinearOperator | None,
    t: float,
    params: NoiseParams,
    echoed: bool = False,
) -> HybridState:
    """Integrate the Lindblad master equation for a time ``t`` (seconds).

    Fixed-step RK4. ``hamiltonian`` is in rad/s; ``None`` means free
    evolution. Returns a density operator.
    """
    if t < 0:
        raise ValueError(f"evolution time must be >= 0, got {t}")
    if hamiltonian is not None:
        if hamiltonian.kind != HAMILTONIAN:
            raise ValueError(f"expected a Hamiltonian, got kind {hamiltonian.kind!r}")
        if hamiltonian.layout != state.layout:
            raise ValueError("Hamiltonian and state live on different layouts")
    rho = state.density_matrix().copy()
    if t == 0:
        return HybridState(state.layout, rho)
    jumps = collapse_operators(params, state.layout, echoed)
    dim = state.layout.dim
    h_eff = sp.csr_array((dim, dim), dtype=complex) if hamiltonian is None else hamiltonian.matrix.copy()
    ops = []
    for j in jumps:
        op = math.sqrt(j.rate) * j.operator.matrix
        h_eff = h_eff - 0.5j * (op.conj().T @ op)
        ops.append(sp.csr_array(op))
    h_eff = sp.csr_array(h_eff)

    def rhs(r: np.ndarray) -> np.ndarray:
        x = h_eff @ r
        out = -1j * (x - x.conj().T)
        for op in ops:
            y = op @ r
            out += op @ y.conj().T
        return out

    n_steps, dt = step_size(t, hamiltonian, jumps)
    for _ in range(n_steps):
        k1 = rhs(rho)
        k2 = rhs(rho + 0.5 * dt * k1)
        k3 = rhs(rho + 0.5 * dt * k2)
        k4 = rhs(rho + dt * k3)
        rho = rho + (dt / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
    rho = 0.5 * (rho + rho.conj().T)
    return HybridState(state.layout, rho)


def predicted_coherence_time(gamma: float, n: int) -> float:
    """1/e lifetime of ``(|0> + |n>)`` under number-operator dephasing."""
    return 2 / (gamma * n**2)


def calibrate_motional_dephasing(
    coherence_times: Mapping[str, Sequence[tuple[int, float]]],
) -> dict[str, float]:
    """Fit ``gamma`` per mode from measured ``(n, coherence time)`` pairs.

    Least squares on the decay rates ``1 / tau_n = gamma n^2 / 2``.
    """
    if not coherence_times:
        raise ValueError("no coherence times given")
    rates = {}
    for mode, pairs in coherence_times.items():
        pairs = list(pairs)
        if not pairs:
            raise ValueError(f"no coherence times for mode {mode}")
        n = np.array([p[0] for p in pairs], dtype=float)
        tau = np.array([p[1] for p in pairs], dtype=float)
        if np.any(n <= 0):
            raise ValueError(f"mode {mode}: n = 0 superpositions do not constrain gamma")
        if np.any(tau <= 0):
            raise ValueError(f"mode {mode}: coherence times must be positive")
        x = n**2 / 2
        rates[mode] = float(np.dot(x, 1 / tau) / np.dot(x, x))
    return rates


def flip_readout(p_e: float, detect_err: float) -> float:
    """Probability of reporting ``|e>`` given symmetric detection error."""
    return p_e * (1 - detect_err) + (1 - p_e) * detect_err
