"""NOON-state generation, direct metrics and two-step tomography.

Generation: ``R(pi/2,0)``, CBS, ``R(pi/2,phi)``, CBS, ``R(pi/2,0)`` from
``|g, n, 0>`` with ``phi = 0`` for odd and ``pi/2`` for even ``n``.

Tomography works on the motional state (the spin is traced out and
re-initialized, and the analysis pulses are ideal):

* diagonals: joint blue sideband flopping, ``1 - 2 P_e(t)`` fitted to
  cosines at the known frequencies ``sqrt((n_a+1)(n_b+1)) omega0``. The
  component at ``sqrt(n+1) omega0`` is ``P_{n,0} + P_{0,n}``; for ``n = 3`` it
  also contains ``|1,1>``, bounded by the smaller single-mode ``|1>``
  population and subtracted.
* off-diagonals: a 50:50 beam splitter with phase ``upsilon`` followed by
  per-mode parity; the parity oscillates as ``cos(n upsilon)`` with
  amplitude ``2 |rho_{n0,0n}|``.
"""
from __future__ import annotations

import math
import warnings

import numpy as np

from .. import generators as gen
from ..fockspace import SPIN_G, HybridState, ModeLayout, apply, partial_trace
from ..noise import NOISELESS, NoiseParams
from ..results import ExperimentResult, ShotPlan
from .common import make_simulator, plan_or_exact, sample_binary
from .estimation import fit_sinusoid
from .programs import noon_ops, noon_phase, prep

DEFAULT_OMEGA0 = 2 * math.pi * 5e3


def generate_noon(
    n: int,
    echo: bool = False,
    noise: NoiseParams = NOISELESS,
    phi: float | None = None,
    cutoff: int | None = None,
) -> HybridState:
    """Run the NOON sequence from ``|g, n, 0>`` and return the final state.

    ``phi`` overrides the middle-pulse phase; a value that does not match the
    parity of ``n`` warns, since the output is then not a NOON state.
    """
    if not 1 <= n:
        raise ValueError(f"n must be >= 1, got {n}")
    if phi is not None and not math.isclose(math.remainder(phi - noon_phase(n), 2 * math.pi), 0.0, abs_tol=1e-12):
        warnings.warn(f"phi={phi:.4g} does not match the parity of n={n}; output is not a NOON state", stacklevel=2)
    cutoff = cutoff or n + gen.GUARD_BAND
    sim = make_simulator((cutoff, cutoff), noise, echo)
    state, _ = sim.run([prep("fock", n, "a"), *noon_ops(n, echo, phi)])
    return state


def motional_state(state) -> tuple[np.ndarray, tuple[int, int]]:
    """Two-mode density matrix and cutoffs from a state or a bare density matrix."""
    if isinstance(state, HybridState):
        rho = partial_trace(state, ["a", "b"])
        return rho, (state.layout.cutoff("a"), state.layout.cutoff("b"))
    rho = np.asarray(state, dtype=complex)
    if rho.ndim == 4:
        na, nb = rho.shape[:2]
        return rho.reshape(na * nb, na * nb), (na, nb)
    side = int(round(math.sqrt(rho.shape[0])))
    if rho.ndim != 2 or side * side != rho.shape[0]:
        raise ValueError("pass a HybridState or a square two-mode density matrix")
    return rho, (side, side)


def noon_elements(state, n: int) -> tuple[float, complex]:
    """``(P_{n,0} + P_{0,n}, rho_{n0,0n})`` of the motional state."""
    rho, (na, nb) = motional_state(state)
    i, j = n * nb, n
    return float((rho[i, i] + rho[j, j]).real), complex(rho[i, j])


def noon_fidelity(state, n: int) -> tuple[float, float]:
    """Direct ``(F, F_Q)`` with the NOON relative phase chosen optimally."""
    diag, off = noon_elements(state, n)
    metrics = noon_metrics(diag, abs(off), n)
    return metrics["fidelity"], metrics["fisher"]


def noon_metrics(diag: float, offdiag: float, n: int, diag_err: float = 0.0, offdiag_err: float = 0.0) -> dict:
    """Fidelity ``(diag + 2 off) / 2`` and Fisher information ``n^2 (2 off)^2 / diag``."""
    if not (0 <= diag <= 1 + 1e-9 and 0 <= offdiag <= 0.5 + 1e-9):
        raise ValueError(f"inputs out of range: diag={diag}, offdiag={offdiag}")
    if diag == 0:
        raise ValueError("P_{n,0} + P_{0,n} is zero; Fisher information undefined")
    f = (diag + 2 * offdiag) / 2
    fq = n**2 * (2 * offdiag) ** 2 / diag
    f_err = math.hypot(diag_err / 2, offdiag_err)
    fq_err = math.hypot(8 * n**2 * offdiag / diag * offdiag_err, fq / diag * diag_err)
    return {
        "fidelity": f,
        "fidelity_err": f_err,
        "fisher": fq,
        "fisher_err": fq_err,
        "entangled": f > 0.5,
        "beats_classical": fq > n,
    }


def _flopping(h: np.ndarray, rho0: np.ndarray, proj_e: np.ndarray, times: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(h)
    rho_eig = v.conj().T @ rho0 @ v
    pe_eig = v.conj().T @ proj_e @ v
    out = np.empty(times.size)
    for k, t in enumerate(times):
        ph = np.exp(-1j * w * t)
        out[k] = np.real(np.sum(pe_eig.T * (ph[:, None] * rho_eig * ph.conj()[None, :])))
    return out


def _fit_cosines(times, y, freqs, errors=None):
    """Least squares ``y = c + sum_k A_k cos(f_k t)``; returns (A, A_err)."""
    design = np.column_stack([np.ones_like(times), *(np.cos(f * times) for f in freqs)])
    w = np.ones_like(y) if errors is None else 1 / np.asarray(errors)
    a = design * w[:, None]
    if np.linalg.matrix_rank(a) < a.shape[1] or np.linalg.cond(a) > 1e8:
        raise ValueError("flopping frequencies are not resolved by this time grid")
    coef, *_ = np.linalg.lstsq(a, y * w, rcond=None)
    cov = np.linalg.inv(a.T @ a)
    if errors is None:
        dof = y.size - design.shape[1]
        resid = y - design @ coef
        cov *= float(resid @ resid) / dof if dof > 0 else 0.0
    return coef[1:], np.sqrt(np.clip(np.diag(cov)[1:], 0, None))


def _check_grid(times: np.ndarray, omega0: float) -> None:
    if times.size < 4 or omega0 * (times.max() - times.min()) < 6 * math.pi:
        raise ValueError("time grid must span at least three periods of the slowest flopping frequency")


def _full_state(rho: np.ndarray, cutoffs) -> tuple[ModeLayout, np.ndarray]:
    layout = ModeLayout(tuple(cutoffs))
    return layout, np.kron(np.outer(SPIN_G, SPIN_G.conj()), rho)


def default_time_grid(omega0: float = DEFAULT_OMEGA0, periods: int = 10, points: int = 401) -> np.ndarray:
    return np.linspace(0, periods * 2 * math.pi / omega0, points)


def single_mode_populations(
    state, mode: str, omega0: float = DEFAULT_OMEGA0, t_grid=None, shot_plan: ShotPlan | None = None, rng=None
):
    """Phonon populations of one mode from blue-sideband flopping.

    Returns ``(populations, errors)`` for levels ``0..N-2``.
    """
    plan = plan_or_exact(shot_plan)
    times = default_time_grid(omega0) if t_grid is None else np.asarray(t_grid, dtype=float)
    _check_grid(times, omega0)
    rho, cutoffs = motional_state(state)
    layout, full = _full_state(rho, cutoffs)
    h = gen.h_sideband("blue", mode, omega0, layout).toarray()
    proj_e = np.kron(np.diag([0.0, 1.0]), np.eye(layout.dim // 2))
    p_e = _flopping(h, full, proj_e, times)
    _, est, err = sample_binary(p_e, plan, plan.rng() if rng is None else rng)
    levels = np.arange(layout.cutoff(mode) - 1)
    freqs = np.sqrt(levels + 1) * omega0
    return _fit_cosines(times, 1 - 2 * est, freqs, 2 * err if plan.sampled else None)


def noon_diagonals(
    state,
    n: int,
    omega0: float = DEFAULT_OMEGA0,
    t_grid=None,
    shot_plan: ShotPlan | None = None,
    max_total: int | None = None,
) -> dict:
    """``P_{n,0} + P_{0,n}`` from joint blue sideband flopping.

    The flopping signal is fitted with one cosine per distinct frequency
    ``sqrt(p) omega0``, ``p = (n_a+1)(n_b+1)``, over all pairs with
    ``n_a + n_b <= max_total`` (default ``n + 2``), plus a constant for levels
    without a partner in the cutoff.

    Returns a dict with ``diag`` and ``diag_err``, the raw component at
    ``sqrt(n+1) omega0`` and, for ``n = 3``, the subtracted ``|1,1>`` bound.
    """
    plan = plan_or_exact(shot_plan)
    times = default_time_grid(omega0) if t_grid is None else np.asarray(t_grid, dtype=float)
    _check_grid(times, omega0)
    rho, cutoffs = motional_state(state)
    layout, full = _full_state(rho, cutoffs)
    max_total = n + 2 if max_total is None else max_total
    products = sorted(
        {
            (na + 1) * (nb + 1)
            for na in range(cutoffs[0] - 1)
            for nb in range(cutoffs[1] - 1)
            if na + nb <= max_total
        }
    )
    h = gen.h_joint_sideband(gen.JointSidebandParams(omega0, 0.0), layout).toarray()
    proj_e = np.kron(np.diag([0.0, 1.0]), np.eye(layout.dim // 2))
    p_e = _flopping(h, full, proj_e, times)
    rng = plan.rng()
    _, est, err = sample_binary(p_e, plan, rng)
    amps, amp_errs = _fit_cosines(times, 1 - 2 * est, np.sqrt(products) * omega0, 2 * err if plan.sampled else None)
    k = products.index(n + 1)
    out = {
        "components": dict(zip(products, amps)),
        "raw": float(amps[k]),
        "raw_err": float(amp_errs[k]),
        "times": times,
        "p_e": est,
    }
    diag, diag_err = out["raw"], out["raw_err"]
    if n == 3:
        pa, pa_err = single_mode_populations(state, "a", omega0, times, plan, rng)
        pb, pb_err = single_mode_populations(state, "b", omega0, times, plan, rng)
        bound, bound_err = (pa[1], pa_err[1]) if pa[1] <= pb[1] else (pb[1], pb_err[1])
        bound = max(float(bound), 0.0)
        out["p11_bound"] = bound
        diag -= bound
        diag_err = math.hypot(diag_err, float(bound_err))
    out["diag"] = float(np.clip(diag, 0.0, 1.0))
    out["diag_err"] = float(diag_err)
    return out


def noon_offdiagonals(
    state,
    n: int,
    upsilons=None,
    shot_plan: ShotPlan | None = None,
    xi: float = gen.DEFAULT_XI,
) -> dict:
    """``|rho_{n0,0n}|`` from phase-swept 50:50 beam splitter and mode parity.

    Both modes' parities are fitted at harmonic ``n``; the contrast is the
    mean of the two amplitudes and ``|rho_{n0,0n}| = contrast / 2``.
    """
    plan = plan_or_exact(shot_plan)
    ups = np.linspace(0, 2 * math.pi, 24, endpoint=False) if upsilons is None else np.asarray(upsilons, dtype=float)
    if ups.size < 5:
        raise ValueError("need at least 5 beam-splitter phases")
    rho, cutoffs = motional_state(state)
    layout, full = _full_state(rho, cutoffs)
    start = HybridState(layout, full)
    t = gen.gate_time(xi) / 2
    p_even = {"a": np.zeros(ups.size), "b": np.zeros(ups.size)}
    for i, u in enumerate(ups):
        out = apply(gen.u_bs(t, u, ("a", "b"), layout, xi), start)
        for mode in ("a", "b"):
            p_even[mode][i] = out.mode_distribution(mode)[::2].sum()
    rng = plan.rng()
    fits = {}
    for mode in ("a", "b"):
        _, est, err = sample_binary(p_even[mode], plan, rng)
        fits[mode] = fit_sinusoid(ups, 2 * est - 1, 2 * err if plan.sampled else None, harmonic=n)
    contrast = 0.5 * (fits["a"].amplitude + fits["b"].amplitude)
    contrast_err = 0.5 * math.hypot(fits["a"].amplitude_err, fits["b"].amplitude_err)
    return {
        "contrast": contrast,
        "contrast_err": contrast_err,
        "offdiag": min(contrast / 2, 0.5),
        "offdiag_err": contrast_err / 2,
        "upsilons": ups,
        "parity_a": 2 * p_even["a"] - 1,
        "parity_b": 2 * p_even["b"] - 1,
    }


def noon_experiment(
    n: int,
    echo: bool = False,
    noise: NoiseParams = NOISELESS,
    shot_plan: ShotPlan | None = None,
    omega0: float = DEFAULT_OMEGA0,
) -> ExperimentResult:
    """Generate a NOON state, compute its metrics directly and via tomography."""
    plan = plan_or_exact(shot_plan)
    state = generate_noon(n, echo, noise)
    diag, off = noon_elements(state, n)
    direct = noon_metrics(diag, abs(off), n)
    diags = noon_diagonals(state, n, omega0, shot_plan=plan)
    offs = noon_offdiagonals(state, n, shot_plan=plan)
    tomo = noon_metrics(diags["diag"], offs["offdiag"], n, diags["diag_err"], offs["offdiag_err"])
    rows = [
        {"upsilon": float(u), "parity_a": float(pa), "parity_b": float(pb)}
        for u, pa, pb in zip(offs["upsilons"], offs["parity_a"], offs["parity_b"])
    ]
    derived = {
        "F": direct["fidelity"],
        "F_Q": direct["fisher"],
        "diag": diag,
        "offdiag": abs(off),
        "F_tomography": tomo["fidelity"],
        "F_Q_tomography": tomo["fisher"],
        "diag_tomography": diags["diag"],
        "offdiag_tomography": offs["offdiag"],
        "entangled": tomo["entangled"],
        "beats_classical": tomo["beats_classical"],
    }
    if "p11_bound" in diags:
        derived["p11_bound"] = diags["p11_bound"]
    return ExperimentResult(
        protocol="noon",
        settings={"n": n, "echo": echo, "omega0": omega0, "cutoff": state.layout.cutoff("a"), "noise": noise.to_dict()},
        rows=rows,
        derived=derived,
        errors={
            "F_tomography": tomo["fidelity_err"],
            "F_Q_tomography": tomo["fisher_err"],
            "diag_tomography": diags["diag_err"],
            "offdiag_tomography": offs["offdiag_err"],
        },
        seed=int(plan.seed),
        shot_plan=plan.to_dict(),
    )
