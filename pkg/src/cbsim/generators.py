"""Hamiltonians, unitaries and state preparations for the CBS gate family.

Units: time in seconds, angular frequencies in rad/s. Hamiltonians are
returned divided by hbar.

The conditional beam splitter (CBS) couples modes ``a`` and ``b`` only when
the spin is in ``|e>``::

    H / hbar = xi |e><e| (a^dag b e^{i upsilon} + a b^dag e^{-i upsilon})

and the gate time is ``tau = pi / (2 xi)``. At ``t = tau`` the action on Fock
states is a phased swap, which is used as an exact fast path; every other
duration goes through :func:`expm_hermitian`.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components
from scipy.special import gammaln

from .fockspace import (
    HAMILTONIAN,
    SPIN,
    SPIN_E,
    SPIN_G,
    UNITARY,
    HybridState,
    LinearOperator,
    ModeLayout,
    TruncationWarning,
    embed,
    fock_vector,
    ladder_operators,
    single_mode_annihilation,
    spin_projector,
)

GATE_TIME = 400e-6
DEFAULT_XI = math.pi / (2 * GATE_TIME)
GUARD_BAND = 4
LEAKAGE_TOL = 1e-8
_FAST_PATH_RTOL = 1e-12


def gate_time(xi: float = DEFAULT_XI) -> float:
    """CBS gate time ``pi / (2 xi)``."""
    return math.pi / (2 * xi)


@dataclass(frozen=True)
class CbsParams:
    xi: float = DEFAULT_XI
    upsilon: float = 0.0
    modes: tuple[str, str] = ("a", "b")
    duration: float | None = None  # None means one gate time

    def __post_init__(self):
        if not self.xi > 0:
            raise ValueError(f"xi must be positive, got {self.xi}")
        if self.duration is not None and self.duration < 0:
            raise ValueError(f"duration must be >= 0, got {self.duration}")
        if len(self.modes) != 2 or self.modes[0] == self.modes[1]:
            raise ValueError(f"need two distinct modes, got {self.modes}")
        object.__setattr__(self, "modes", tuple(self.modes))

    @property
    def tau(self) -> float:
        return gate_time(self.xi)

    @property
    def t(self) -> float:
        return self.tau if self.duration is None else float(self.duration)


@dataclass(frozen=True)
class RotationParams:
    theta: float
    phi: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.theta) and math.isfinite(self.phi)):
            raise ValueError("rotation angles must be finite")


@dataclass(frozen=True)
class JointSidebandParams:
    omega0: float
    duration: float
    modes: tuple[str, str] = ("a", "b")

    def __post_init__(self):
        if not self.omega0 > 0:
            raise ValueError(f"omega0 must be positive, got {self.omega0}")
        if self.duration < 0:
            raise ValueError(f"duration must be >= 0, got {self.duration}")


# ---------------------------------------------------------------------------
# matrix exponential


def expm_hermitian(h: LinearOperator, t: float) -> LinearOperator:
    """``exp(-i H t)`` by Hermitian eigendecomposition.

    ``H`` is split into its connected blocks first (the beam splitter
    conserves ``n_a + n_b``, sidebands couple pairs of levels), and each block
    is diagonalized densely. This is exact, not an approximation of the full
    eigendecomposition.
    """
    if h.kind != HAMILTONIAN:
        raise ValueError(f"expected a Hamiltonian, got kind {h.kind!r}")
    m = h.matrix
    dim = m.shape[0]
    n_blocks, labels = connected_components(abs(m) + sp.identity(dim), directed=False)
    order = np.argsort(labels, kind="stable")
    bounds = np.searchsorted(labels[order], np.arange(n_blocks + 1))
    rows, cols, vals = [], [], []
    for k in range(n_blocks):
        idx = order[bounds[k] : bounds[k + 1]]
        block = m[idx][:, idx].toarray()
        if idx.size == 1:
            u = np.exp(-1j * block * t)
        else:
            w, v = np.linalg.eigh(block)
            u = (v * np.exp(-1j * w * t)) @ v.conj().T
        r, c = np.meshgrid(idx, idx, indexing="ij")
        rows.append(r.ravel())
        cols.append(c.ravel())
        vals.append(u.ravel())
    u = sp.coo_array(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(dim, dim),
    )
    return LinearOperator(h.layout, u.tocsr(), UNITARY)


def _is_gate_time(t: float, xi: float) -> bool:
    return abs(t - gate_time(xi)) <= _FAST_PATH_RTOL * gate_time(xi)


# ---------------------------------------------------------------------------
# beam splitters


def _bs_coupling(layout: ModeLayout, modes: tuple[str, str], upsilon: float) -> sp.csr_array:
    a, a_dag = ladder_operators(layout, modes[0])
    b, b_dag = ladder_operators(layout, modes[1])
    hop = np.exp(1j * upsilon) * (a_dag.matrix @ b.matrix)
    return hop + hop.conj().T


def _check_modes(layout: ModeLayout, modes: tuple[str, str]) -> None:
    if len(modes) != 2 or modes[0] == modes[1]:
        raise ValueError(f"need two distinct modes, got {modes}")
    for m in modes:
        if m == SPIN or m not in layout.modes:
            raise KeyError(f"unknown mode {m!r}; layout has {layout.modes}")


def h_bs(xi: float, upsilon: float, modes: tuple[str, str], layout: ModeLayout) -> LinearOperator:
    """Unconditional beam splitter ``xi (a^dag b e^{i u} + h.c.)``."""
    _check_modes(layout, modes)
    return LinearOperator(layout, xi * _bs_coupling(layout, modes, upsilon), HAMILTONIAN)


def h_cbs(params: CbsParams, layout: ModeLayout) -> LinearOperator:
    """Conditional beam splitter Hamiltonian (rad/s)."""
    _check_modes(layout, params.modes)
    proj_e = spin_projector(layout, "e").matrix
    coupling = params.xi * (proj_e @ _bs_coupling(layout, params.modes, params.upsilon))
    return LinearOperator(layout, coupling, HAMILTONIAN)


def _swap_map(layout: ModeLayout, modes: tuple[str, str], upsilon: float, conditioned: bool) -> LinearOperator:
    """Analytic beam splitter at ``t = pi / (2 xi)``.

    ``|n, m> -> (-i)^(n+m) e^{i (m-n) upsilon} |m, n>`` on the two modes,
    restricted to ``|e>`` when ``conditioned``.
    """
    ia, ib = layout.axis(modes[0]), layout.axis(modes[1])
    idx = np.indices(layout.shape).reshape(len(layout.shape), -1)
    n, m = idx[ia], idx[ib]
    active = np.ones(layout.dim, dtype=bool) if not conditioned else idx[0] == 1
    target = idx.copy()
    target[ia] = np.where(active, m, n)
    target[ib] = np.where(active, n, m)
    phase = np.where(
        active,
        (-1j) ** ((n + m) % 4) * np.exp(1j * (m - n) * upsilon),
        1.0,
    )
    rows = np.ravel_multi_index(tuple(target), layout.shape)
    cols = np.arange(layout.dim)
    u = sp.coo_array((phase, (rows, cols)), shape=(layout.dim, layout.dim))
    return LinearOperator(layout, u.tocsr(), UNITARY)


def u_cbs(params: CbsParams, layout: ModeLayout) -> LinearOperator:
    """CBS evolution for ``params.t``.

    Uses the analytic phased swap at one gate time when both modes share a
    cutoff; otherwise exponentiates :func:`h_cbs` on the truncated space.
    """
    _check_modes(layout, params.modes)
    if _is_gate_time(params.t, params.xi) and _same_cutoff(layout, params.modes):
        return _swap_map(layout, params.modes, params.upsilon, conditioned=True)
    return expm_hermitian(h_cbs(params, layout), params.t)


def u_bs(
    t: float,
    upsilon: float,
    modes: tuple[str, str],
    layout: ModeLayout,
    xi: float = DEFAULT_XI,
) -> LinearOperator:
    """Unconditional beam splitter evolution (identity on the spin)."""
    _check_modes(layout, modes)
    if t < 0:
        raise ValueError(f"duration must be >= 0, got {t}")
    if _is_gate_time(t, xi) and _same_cutoff(layout, modes):
        return _swap_map(layout, modes, upsilon, conditioned=False)
    return expm_hermitian(h_bs(xi, upsilon, modes, layout), t)


def _same_cutoff(layout: ModeLayout, modes: tuple[str, str]) -> bool:
    return layout.cutoff(modes[0]) == layout.cutoff(modes[1])


def echoed_cbs(params: CbsParams, layout: ModeLayout) -> list[LinearOperator]:
    """Spin-echo version of a CBS segment, in application order.

    ``[U(t/2, u), R(pi, 0), U(t/2, u + pi)]``.
    """
    half = params.t / 2
    first = CbsParams(params.xi, params.upsilon, params.modes, half)
    second = CbsParams(params.xi, params.upsilon + math.pi, params.modes, half)
    return [
        u_cbs(first, layout),
        spin_rotation(RotationParams(math.pi, 0.0), layout),
        u_cbs(second, layout),
    ]


def cswap_composed(layout: ModeLayout) -> LinearOperator:
    """Controlled swap of ``a`` and ``b`` built from CBS gates and ancilla ``c``.

    ``U_cbs^{ab, u=pi/2} (U_cbs^{ac, u=0})^2``; the squared ``ac`` gate is a
    parity kick that cancels the CBS phase when ``c`` starts in vacuum.
    """
    if "c" not in layout.modes:
        raise KeyError("cswap_composed needs ancilla mode 'c' in the layout")
    u_ac = u_cbs(CbsParams(upsilon=0.0, modes=("a", "c")), layout)
    u_ab = u_cbs(CbsParams(upsilon=math.pi / 2, modes=("a", "b")), layout)
    return u_ab @ u_ac @ u_ac


# ---------------------------------------------------------------------------
# spin and single-mode operations


def rotation_matrix(theta: float, phi: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array(
        [
            [c, -1j * s * np.exp(-1j * phi)],
            [-1j * s * np.exp(1j * phi), c],
        ]
    )


def spin_rotation(params: RotationParams, layout: ModeLayout) -> LinearOperator:
    """Resonant carrier pulse with area ``theta`` and phase ``phi``."""
    return LinearOperator(layout, embed(layout, {SPIN: rotation_matrix(params.theta, params.phi)}), UNITARY)


def displacement_matrix(alpha: complex, cutoff: int) -> np.ndarray:
    """Single-mode ``exp(alpha a^dag - alpha* a)`` on the truncated space."""
    a = single_mode_annihilation(cutoff).toarray()
    gen = 1j * (alpha * a.conj().T - np.conj(alpha) * a)
    w, v = np.linalg.eigh(gen)
    return (v * np.exp(-1j * w)) @ v.conj().T


def displacement(alpha: complex, mode: str, layout: ModeLayout) -> LinearOperator:
    """Displacement operator on one mode.

    Warns with :class:`TruncationWarning` when the displaced vacuum puts more
    than ``1e-8`` into the top two levels.
    """
    d = displacement_matrix(complex(alpha), layout.cutoff(mode))
    top = max(1, d.shape[0] - 2)
    if np.sum(np.abs(d[top:, 0]) ** 2) > LEAKAGE_TOL:
        warnings.warn(
            f"displacement |alpha|^2={abs(alpha) ** 2:.3g} leaks into the top levels "
            f"of mode {mode} (cutoff {d.shape[0]})",
            TruncationWarning,
            stacklevel=2,
        )
    return LinearOperator(layout, embed(layout, {mode: d}), UNITARY)


def sideband_pi(kind: str, mode: str, layout: ModeLayout) -> LinearOperator:
    """Ideal sideband pi-pulse on every coupled Fock pair of ``mode``.

    Blue couples ``|g,n> <-> |e,n+1>``, red couples ``|g,n+1> <-> |e,n>``;
    each pair picks up ``-i``. Levels without a partner inside the cutoff are
    left unchanged.
    """
    if kind not in ("blue", "red"):
        raise ValueError(f"sideband kind must be 'blue' or 'red', got {kind!r}")
    ax = layout.axis(mode)
    cutoff = layout.cutoff(mode)
    idx = np.indices(layout.shape).reshape(len(layout.shape), -1)
    s, n = idx[0], idx[ax]
    shift = np.where(s == 0, 1, -1)
    if kind == "red":
        shift = -shift
    partner = n + shift
    paired = (partner >= 0) & (partner < cutoff)
    target = idx.copy()
    target[0] = np.where(paired, 1 - s, s)
    target[ax] = np.where(paired, partner, n)
    rows = np.ravel_multi_index(tuple(target), layout.shape)
    vals = np.where(paired, -1j, 1.0)
    u = sp.coo_array((vals, (rows, np.arange(layout.dim))), shape=(layout.dim, layout.dim))
    return LinearOperator(layout, u.tocsr(), UNITARY)


def h_sideband(kind: str, mode: str, omega0: float, layout: ModeLayout) -> LinearOperator:
    """Resonant single-mode sideband drive.

    Normalized so the spin population of the pair with lower level ``n``
    oscillates as ``(1 - cos(sqrt(n+1) omega0 t)) / 2``.
    """
    if kind not in ("blue", "red"):
        raise ValueError(f"sideband kind must be 'blue' or 'red', got {kind!r}")
    a, a_dag = ladder_operators(layout, mode)
    sigma_plus = embed(layout, {SPIN: np.array([[0, 0], [1, 0]], dtype=complex)})
    mode_op = a_dag.matrix if kind == "blue" else a.matrix
    hop = sigma_plus @ mode_op
    return LinearOperator(layout, 0.5 * omega0 * (hop + hop.conj().T), HAMILTONIAN)


def h_joint_sideband(params: JointSidebandParams, layout: ModeLayout) -> LinearOperator:
    """Joint blue sideband adding one phonon to each mode.

    ``(omega0 / 2)(a^dag b^dag sigma_+ + a b sigma_-)``; the pair
    ``|g,n_a,n_b> <-> |e,n_a+1,n_b+1>`` flops at
    ``sqrt((n_a+1)(n_b+1)) omega0``.
    """
    _check_modes(layout, params.modes)
    _, a_dag = ladder_operators(layout, params.modes[0])
    _, b_dag = ladder_operators(layout, params.modes[1])
    sigma_plus = embed(layout, {SPIN: np.array([[0, 0], [1, 0]], dtype=complex)})
    hop = sigma_plus @ a_dag.matrix @ b_dag.matrix
    return LinearOperator(layout, 0.5 * params.omega0 * (hop + hop.conj().T), HAMILTONIAN)


def joint_sideband_u(params: JointSidebandParams, layout: ModeLayout) -> LinearOperator:
    return expm_hermitian(h_joint_sideband(params, layout), params.duration)


def joint_sideband_rabi(n_a: int, n_b: int, omega0: float) -> float:
    """Flopping frequency of the pair starting at ``|g, n_a, n_b>``."""
    return math.sqrt((n_a + 1) * (n_b + 1)) * omega0


# ---------------------------------------------------------------------------
# preparations


def coherent_ket(alpha: complex, cutoff: int) -> np.ndarray:
    """Coherent-state amplitudes, renormalized over the cutoff."""
    n = np.arange(cutoff)
    r = abs(alpha)
    if r == 0:
        return fock_vector(0, cutoff)
    log_mag = -(r**2) / 2 + n * math.log(r) - 0.5 * gammaln(n + 1)
    psi = np.exp(log_mag) * np.exp(1j * n * np.angle(alpha))
    return psi / np.linalg.norm(psi)


def coherent_tail(mean_n: float, cutoff: int) -> float:
    """Poisson mass at or above ``cutoff``."""
    from scipy.stats import poisson

    return float(poisson.sf(cutoff - 1, mean_n)) if mean_n > 0 else 0.0


def thermal_populations(nbar: float, cutoff: int) -> np.ndarray:
    """Bose-Einstein weights, renormalized over the cutoff."""
    if nbar < 0:
        raise ValueError(f"nbar must be >= 0, got {nbar}")
    if nbar == 0:
        p = np.zeros(cutoff)
        p[0] = 1.0
        return p
    k = np.arange(cutoff)
    p = (nbar / (nbar + 1)) ** k / (nbar + 1)
    return p / p.sum()


def mode_factor(kind: str, value, cutoff: int) -> np.ndarray:
    """Single-mode ket (fock, coherent) or density matrix (thermal)."""
    if kind == "fock":
        return fock_vector(int(value), cutoff)
    if kind == "coherent":
        alpha = complex(value)
        if coherent_tail(abs(alpha) ** 2, cutoff) > 1e-10:
            raise ValueError(
                f"coherent state |alpha|^2={abs(alpha) ** 2:.3g} does not fit cutoff {cutoff}"
            )
        return coherent_ket(alpha, cutoff)
    if kind == "thermal":
        return np.diag(thermal_populations(float(value), cutoff)).astype(complex)
    raise ValueError(f"unknown preparation kind {kind!r}")


def prepare(kind: str, value, mode: str, layout: ModeLayout, spin: str = "g") -> HybridState:
    """Product state with ``mode`` prepared as requested, other modes in vacuum.

    ``kind`` is ``"fock"`` (value ``n``), ``"coherent"`` (value ``alpha``) or
    ``"thermal"`` (value ``nbar``, gives a density operator).
    """
    factors = []
    for m in layout.modes:
        cutoff = layout.cutoff(m)
        factors.append(mode_factor(kind, value, cutoff) if m == mode else fock_vector(0, cutoff))
    if mode not in layout.modes:
        raise KeyError(f"unknown mode {mode!r}; layout has {layout.modes}")
    return HybridState.product(layout, SPIN_G if spin == "g" else SPIN_E, factors)
