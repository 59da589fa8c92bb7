"""Truncated Hilbert space of one spin qubit and up to three motional modes.

Basis kets are flattened with the spin slowest, then mode ``a``, ``b`` and
``c``::

    index(s, n_a, n_b, n_c) = ((s * N_a + n_a) * N_b + n_b) * N_c + n_c

with ``s = 0`` for ``g`` and ``s = 1`` for ``e``. Every module goes through
:func:`basis_index` / :class:`ModeLayout` instead of re-deriving the order.

Operators are stored as ``scipy.sparse`` CSR arrays. All generators used here
are either block diagonal in a small set of Fock levels or permutations, and
the Wigner scans need cutoffs of several tens of levels per mode, where a
dense ``2 N^2`` square matrix no longer fits in memory.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

SPIN = "spin"
MODE_NAMES = ("a", "b", "c")
SPIN_LABELS = {"g": 0, "e": 1, 0: 0, 1: 1}

UNITARY = "unitary"
HAMILTONIAN = "hamiltonian"  # angular frequency, H / hbar in rad/s
OPERATOR = "operator"
_KINDS = (UNITARY, HAMILTONIAN, OPERATOR)

HERMITIAN_TOL = 1e-12


class LayoutError(ValueError):
    """Raised when states and operators live on different layouts."""


class TruncationWarning(UserWarning):
    """Population reached the top Fock levels of a truncated mode."""


@dataclass(frozen=True)
class ModeLayout:
    """Spin qubit tensored with one to three truncated bosonic modes.

    ``cutoffs[i]`` is the exclusive upper bound on the occupation of mode
    ``MODE_NAMES[i]``.
    """

    cutoffs: tuple[int, ...]

    def __post_init__(self):
        cutoffs = tuple(int(c) for c in self.cutoffs)
        if not 1 <= len(cutoffs) <= 3:
            raise LayoutError(f"need 1 to 3 modes, got {len(cutoffs)}")
        if any(c < 1 for c in cutoffs):
            raise LayoutError(f"every cutoff must be >= 1, got {cutoffs}")
        object.__setattr__(self, "cutoffs", cutoffs)

    @property
    def spin_dim(self) -> int:
        return 2

    @property
    def modes(self) -> tuple[str, ...]:
        return MODE_NAMES[: len(self.cutoffs)]

    @property
    def shape(self) -> tuple[int, ...]:
        return (2, *self.cutoffs)

    @property
    def dim(self) -> int:
        return int(np.prod(self.shape))

    @property
    def subsystems(self) -> tuple[str, ...]:
        return (SPIN, *self.modes)

    def axis(self, subsystem: str) -> int:
        if subsystem == SPIN:
            return 0
        if subsystem not in self.modes:
            raise KeyError(f"unknown mode {subsystem!r}; layout has {self.modes}")
        return 1 + self.modes.index(subsystem)

    def cutoff(self, mode: str) -> int:
        return self.cutoffs[self.axis(mode) - 1]

    def index(self, spin, *occupations: int) -> int:
        return basis_index(spin, occupations, self)

    def decode(self, index: int) -> tuple[int, ...]:
        return basis_decode(index, self)


def basis_index(spin, occupations: Sequence[int], layout: ModeLayout) -> int:
    """Flat index of ``|spin, n_a, n_b, ...>``."""
    try:
        s = SPIN_LABELS[spin]
    except (KeyError, TypeError):
        raise ValueError(f"spin must be 'g' or 'e', got {spin!r}") from None
    occupations = tuple(int(n) for n in occupations)
    if len(occupations) != len(layout.cutoffs):
        raise ValueError(
            f"expected {len(layout.cutoffs)} occupations, got {len(occupations)}"
        )
    index = s
    for mode, n, cutoff in zip(layout.modes, occupations, layout.cutoffs):
        if not 0 <= n < cutoff:
            raise IndexError(f"occupation {n} of mode {mode} outside [0, {cutoff})")
        index = index * cutoff + n
    return index


def basis_decode(index: int, layout: ModeLayout) -> tuple[int, ...]:
    """Inverse of :func:`basis_index`: returns ``(s, n_a, n_b, ...)``."""
    if not 0 <= index < layout.dim:
        raise IndexError(f"index {index} outside [0, {layout.dim})")
    return tuple(int(i) for i in np.unravel_index(index, layout.shape))


# ---------------------------------------------------------------------------
# operators


@dataclass(frozen=True, eq=False)
class LinearOperator:
    """Square operator on a :class:`ModeLayout`.

    ``kind`` is one of ``"unitary"``, ``"hamiltonian"`` (angular frequency,
    rad/s) or ``"operator"`` (anything else, e.g. ladder operators).
    """

    layout: ModeLayout
    matrix: sp.csr_array
    kind: str = OPERATOR

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"kind must be one of {_KINDS}, got {self.kind!r}")
        matrix = sp.csr_array(self.matrix, dtype=complex)
        if matrix.shape != (self.layout.dim, self.layout.dim):
            raise LayoutError(
                f"matrix shape {matrix.shape} does not match layout dimension "
                f"{self.layout.dim}"
            )
        matrix.eliminate_zeros()
        object.__setattr__(self, "matrix", matrix)
        if self.kind == HAMILTONIAN:
            defect = _max_abs(matrix - matrix.conj().T)
            if defect > HERMITIAN_TOL * max(1.0, _max_abs(matrix)):
                raise ValueError(f"Hamiltonian is not Hermitian (defect {defect:.3g})")

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    def dagger(self) -> "LinearOperator":
        return LinearOperator(self.layout, self.matrix.conj().T.tocsr(), self.kind)

    def __matmul__(self, other: "LinearOperator") -> "LinearOperator":
        _check_layout(self.layout, other.layout)
        kind = UNITARY if self.kind == other.kind == UNITARY else OPERATOR
        return LinearOperator(self.layout, self.matrix @ other.matrix, kind)

    def __add__(self, other: "LinearOperator") -> "LinearOperator":
        _check_layout(self.layout, other.layout)
        kind = HAMILTONIAN if self.kind == other.kind == HAMILTONIAN else OPERATOR
        return LinearOperator(self.layout, self.matrix + other.matrix, kind)

    def scaled(self, factor: complex, kind: str = OPERATOR) -> "LinearOperator":
        return LinearOperator(self.layout, self.matrix * factor, kind)

    def unitarity_defect(self) -> float:
        """``max |U^dagger U - I|`` over all elements."""
        eye = sp.identity(self.layout.dim, dtype=complex, format="csr")
        return _max_abs(self.matrix.conj().T @ self.matrix - eye)


def _max_abs(m) -> float:
    if sp.issparse(m):
        m = sp.csr_array(m)
        return float(np.abs(m.data).max()) if m.nnz else 0.0
    return float(np.abs(m).max()) if m.size else 0.0


def _check_layout(a: ModeLayout, b: ModeLayout) -> None:
    if a != b:
        raise LayoutError(f"layout mismatch: {a.cutoffs} vs {b.cutoffs}")


def embed(layout: ModeLayout, factors: dict[str, np.ndarray | sp.sparray]) -> sp.csr_array:
    """Kronecker product of per-subsystem matrices, identity elsewhere."""
    for name in factors:
        layout.axis(name)
    mats = []
    for name, d in zip(layout.subsystems, layout.shape):
        m = factors.get(name)
        mats.append(sp.identity(d, format="csr") if m is None else sp.csr_array(m))
    return sp.csr_array(reduce(lambda x, y: sp.kron(x, y, format="csr"), mats))


def single_mode_annihilation(cutoff: int) -> sp.csr_array:
    return sp.csr_array(sp.diags(np.sqrt(np.arange(1, cutoff)), 1, dtype=complex))


def ladder_operators(layout: ModeLayout, mode: str) -> tuple[LinearOperator, LinearOperator]:
    """Annihilation and creation operators of ``mode``."""
    if mode == SPIN or mode not in layout.modes:
        raise KeyError(f"unknown mode {mode!r}; layout has {layout.modes}")
    a = LinearOperator(layout, embed(layout, {mode: single_mode_annihilation(layout.cutoff(mode))}))
    return a, a.dagger()


def number_operator(layout: ModeLayout, mode: str) -> LinearOperator:
    n = sp.diags(np.arange(layout.cutoff(mode), dtype=complex))
    return LinearOperator(layout, embed(layout, {mode: n}), HAMILTONIAN)


def parity_operator(layout: ModeLayout, mode: str) -> LinearOperator:
    p = sp.diags((-1.0) ** np.arange(layout.cutoff(mode)))
    return LinearOperator(layout, embed(layout, {mode: p}), UNITARY)


def spin_projector(layout: ModeLayout, spin: str) -> LinearOperator:
    proj = np.zeros((2, 2), dtype=complex)
    s = SPIN_LABELS[spin]
    proj[s, s] = 1.0
    return LinearOperator(layout, embed(layout, {SPIN: proj}))


def identity(layout: ModeLayout) -> LinearOperator:
    return LinearOperator(layout, sp.identity(layout.dim, dtype=complex, format="csr"), UNITARY)


# ---------------------------------------------------------------------------
# states


@dataclass(frozen=True, eq=False)
class HybridState:
    """Pure state (1-d amplitudes) or density operator (2-d) on a layout."""

    layout: ModeLayout
    data: np.ndarray

    def __post_init__(self):
        data = np.array(self.data, dtype=complex)
        d = self.layout.dim
        if data.shape not in ((d,), (d, d)):
            raise LayoutError(f"state shape {data.shape} does not match layout dimension {d}")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def is_pure(self) -> bool:
        return self.data.ndim == 1

    @classmethod
    def basis(cls, layout: ModeLayout, spin, *occupations: int) -> "HybridState":
        psi = np.zeros(layout.dim, dtype=complex)
        psi[basis_index(spin, occupations, layout)] = 1.0
        return cls(layout, psi)

    @classmethod
    def product(cls, layout: ModeLayout, spin: np.ndarray, modes: Sequence[np.ndarray]) -> "HybridState":
        """Tensor product of a spin factor and one factor per mode.

        Factors may be kets (1-d) or density matrices (2-d); if any factor
        is a density matrix the result is a density operator.
        """
        factors = [np.asarray(spin, dtype=complex), *(np.asarray(m, dtype=complex) for m in modes)]
        if len(factors) != len(layout.shape):
            raise LayoutError(f"expected {len(layout.shape)} factors, got {len(factors)}")
        for f, d in zip(factors, layout.shape):
            if f.shape[0] != d:
                raise LayoutError(f"factor of size {f.shape[0]} where {d} is required")
        if all(f.ndim == 1 for f in factors):
            return cls(layout, reduce(np.kron, factors))
        dms = [np.outer(f, f.conj()) if f.ndim == 1 else f for f in factors]
        return cls(layout, reduce(np.kron, dms))

    def to_density(self) -> "HybridState":
        if not self.is_pure:
            return self
        return HybridState(self.layout, np.outer(self.data, self.data.conj()))

    def density_matrix(self) -> np.ndarray:
        return self.to_density().data

    def norm(self) -> float:
        """Norm of a ket, trace of a density operator."""
        if self.is_pure:
            return float(np.linalg.norm(self.data))
        return float(np.trace(self.data).real)

    def normalized(self) -> "HybridState":
        n = self.norm()
        if n == 0:
            raise ValueError("cannot normalize a zero state")
        return HybridState(self.layout, self.data / n)

    def populations(self) -> np.ndarray:
        """Diagonal of the density operator, shaped like ``layout.shape``."""
        if self.is_pure:
            p = np.abs(self.data) ** 2
        else:
            p = np.real(np.diag(self.data))
        return p.reshape(self.layout.shape)

    def spin_probabilities(self) -> np.ndarray:
        """``[P(g), P(e)]``."""
        p = self.populations()
        return p.reshape(2, -1).sum(axis=1)

    def mode_distribution(self, mode: str) -> np.ndarray:
        """Phonon-number distribution of one mode."""
        p = self.populations()
        ax = self.layout.axis(mode)
        other = tuple(i for i in range(p.ndim) if i != ax)
        return p.sum(axis=other)

    def purity(self) -> float:
        if self.is_pure:
            return self.norm() ** 4
        return float(np.real(np.vdot(self.data, self.data)))


def apply(op: LinearOperator, state: HybridState) -> HybridState:
    """Apply ``op`` to ``state``.

    Kets become ``O psi`` and density operators ``O rho O^dagger`` for any
    operator kind. The result is not renormalized.
    """
    _check_layout(op.layout, state.layout)
    m = op.matrix
    if state.is_pure:
        return HybridState(state.layout, m @ state.data)
    left = m @ state.data
    return HybridState(state.layout, (m @ left.conj().T).conj().T)


def expectation(state: HybridState, op: LinearOperator) -> complex:
    """``<psi|O|psi>`` or ``Tr(rho O)``."""
    _check_layout(op.layout, state.layout)
    if state.is_pure:
        return complex(np.vdot(state.data, op.matrix @ state.data))
    return complex(np.trace(op.matrix @ state.data))


def partial_trace(state: HybridState, keep: Iterable[str]) -> np.ndarray:
    """Reduced density matrix on ``keep`` (ordered as in the layout)."""
    keep = set(keep)
    if not keep:
        raise ValueError("keep must name at least one subsystem")
    layout = state.layout
    for name in keep:
        layout.axis(name)
    axes = [i for i, name in enumerate(layout.subsystems) if name in keep]
    dims = [layout.shape[i] for i in axes]
    n = len(layout.shape)
    if state.is_pure:
        psi = state.data.reshape(layout.shape)
        mat = np.moveaxis(psi, axes, range(len(axes))).reshape(int(np.prod(dims)), -1)
        return mat @ mat.conj().T
    rho = state.data.reshape(layout.shape * 2)
    left = list(range(n))
    right = [i + n if i in axes else i for i in range(n)]
    out = axes + [i + n for i in axes]
    reduced = np.einsum(rho, left + right, out)
    d = int(np.prod(dims))
    return reduced.reshape(d, d)


def leakage(state: HybridState) -> float:
    """Largest population held in the top two Fock levels of any mode."""
    worst = 0.0
    for mode in state.layout.modes:
        dist = state.mode_distribution(mode)
        top = max(1, len(dist) - 2)
        worst = max(worst, float(dist[top:].sum()))
    return worst


def fidelity(state: HybridState, target: np.ndarray) -> float:
    """``<t|rho|t>`` against a ket; insensitive to the ket's global phase."""
    t = np.asarray(target, dtype=complex)
    if state.is_pure:
        return float(abs(np.vdot(t, state.data)) ** 2)
    return float(np.real(np.vdot(t, state.data @ t)))


def fock_vector(n: int, cutoff: int) -> np.ndarray:
    if not 0 <= n < cutoff:
        raise IndexError(f"Fock level {n} outside [0, {cutoff})")
    v = np.zeros(cutoff, dtype=complex)
    v[n] = 1.0
    return v


SPIN_G = np.array([1.0, 0.0], dtype=complex)
SPIN_E = np.array([0.0, 1.0], dtype=complex)
