"""Estimators shared by the protocols.

Sinusoid contrast fits, the Fock-state Wigner function and mixture fits,
a truncated-Poisson fit for coherent-state populations, and binomial
estimates for sampled spin readout.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, nnls
from scipy.special import eval_laguerre, gammaln

from ..results import sample_counts

__all__ = [
    "SinusoidFit",
    "fit_sinusoid",
    "wigner_fock_analytic",
    "fit_wigner_mixture",
    "truncated_poisson_mean",
    "fit_poisson_mean",
    "binomial_estimate",
    "sample_counts",
]


@dataclass(frozen=True)
class SinusoidFit:
    """``offset + amplitude cos(k phi - phase)``.

    ``cos_coef`` and ``sin_coef`` are the linear coefficients of
    ``cos(k phi)`` and ``sin(k phi)``; ``contrast`` is ``2 amplitude``, the
    full swing of a probability written as ``(1 + C cos phi) / 2``.
    """

    offset: float
    amplitude: float
    phase: float
    cos_coef: float
    sin_coef: float
    offset_err: float
    amplitude_err: float
    phase_err: float
    cos_err: float
    sin_err: float
    harmonic: int = 1

    @property
    def contrast(self) -> float:
        return 2 * self.amplitude

    @property
    def contrast_err(self) -> float:
        return 2 * self.amplitude_err


def fit_sinusoid(phases, values, errors=None, harmonic: int = 1) -> SinusoidFit:
    """Linear least squares on ``[1, cos(k phi), sin(k phi)]``.

    With ``errors`` the fit is weighted and the covariance is taken from the
    errors; without them it is scaled by the residual variance.
    """
    phases = np.asarray(phases, dtype=float)
    y = np.asarray(values, dtype=float)
    if phases.shape != y.shape or phases.ndim != 1:
        raise ValueError("phases and values must be 1-d arrays of equal length")
    if phases.size < 4:
        raise ValueError(f"need at least 4 points, got {phases.size}")
    k = harmonic
    design = np.column_stack([np.ones_like(phases), np.cos(k * phases), np.sin(k * phases)])
    if errors is not None:
        sigma = np.asarray(errors, dtype=float)
        if np.any(sigma <= 0):
            raise ValueError("errors must be positive")
        w = 1 / sigma
    else:
        w = np.ones_like(y)
    a = design * w[:, None]
    if np.linalg.matrix_rank(a) < 3:
        raise ValueError("rank-deficient design; phases do not resolve the sinusoid")
    coef, *_ = np.linalg.lstsq(a, y * w, rcond=None)
    cov = np.linalg.inv(a.T @ a)
    if errors is None:
        dof = y.size - 3
        resid = y - design @ coef
        cov = cov * (float(resid @ resid) / dof if dof > 0 else 0.0)
    c0, cc, cs = coef
    amp = math.hypot(cc, cs)
    phase = math.atan2(cs, cc)
    if amp > 0:
        grad_amp = np.array([cc, cs]) / amp
        grad_phase = np.array([-cs, cc]) / amp**2
        sub = cov[1:, 1:]
        amp_err = math.sqrt(max(grad_amp @ sub @ grad_amp, 0.0))
        phase_err = math.sqrt(max(grad_phase @ sub @ grad_phase, 0.0))
    else:
        amp_err = math.sqrt(max(0.5 * (cov[1, 1] + cov[2, 2]), 0.0))
        phase_err = math.inf
    err = np.sqrt(np.clip(np.diag(cov), 0, None))
    return SinusoidFit(
        float(c0), amp, phase, float(cc), float(cs),
        float(err[0]), amp_err, phase_err, float(err[1]), float(err[2]), k,
    )


def wigner_fock_analytic(n: int, alpha) -> np.ndarray | float:
    """Wigner function of Fock state ``n``: ``(2/pi)(-1)^n e^{-2|a|^2} L_n(4|a|^2)``."""
    if n < 0:
        raise ValueError(f"Fock level must be >= 0, got {n}")
    x = 4 * np.abs(np.asarray(alpha)) ** 2
    cur = eval_laguerre(n, x)
    w = (2 / np.pi) * (-1) ** n * np.exp(-x / 2) * cur
    return float(w) if np.ndim(w) == 0 else w


def fit_wigner_mixture(alphas, values, sigmas=None, n_max: int = 6):
    """Fit ``W(alpha) = sum_n d_n W_n(alpha)`` with ``d_n >= 0`` and ``sum d_n = 1``.

    Returns ``(weights, errors)`` for ``n = 0..n_max``. The sum constraint is
    enforced by a heavily weighted extra row in a non-negative least-squares
    problem; errors come from the weighted covariance projected onto the
    constraint surface of the active (non-zero) weights.
    """
    alphas = np.asarray(alphas, dtype=complex)
    y = np.asarray(values, dtype=float)
    if alphas.shape != y.shape:
        raise ValueError("alphas and values must have the same shape")
    if y.size < n_max + 1:
        raise ValueError(f"need at least {n_max + 1} samples, got {y.size}")
    if not np.any(y):
        raise ValueError("all-zero Wigner samples: no normalized mixture is consistent")
    sig = np.ones_like(y) if sigmas is None else np.asarray(sigmas, dtype=float)
    if np.any(sig <= 0):
        raise ValueError("sigmas must be positive")
    basis = np.column_stack([wigner_fock_analytic(n, alphas) for n in range(n_max + 1)])
    a = basis / sig[:, None]
    b = y / sig
    big = 1e4 * max(1.0, float(np.abs(a).max()))
    a_aug = np.vstack([a, big * np.ones(n_max + 1)])
    b_aug = np.append(b, big)
    d, _ = nnls(a_aug, b_aug, maxiter=50 * (n_max + 1))
    if abs(d.sum() - 1) > 1e-6:
        raise ValueError("constrained mixture fit did not converge to a normalized solution")
    errors = np.zeros_like(d)
    active = np.flatnonzero(d > 1e-12)
    if active.size > 1:
        sub = a[:, active]
        # basis of the subspace sum(delta) = 0 over the active weights
        z = np.linalg.svd(np.ones((1, active.size)))[2][1:].T
        fisher = z.T @ sub.T @ sub @ z
        cov = z @ np.linalg.pinv(fisher) @ z.T
        if sigmas is None:
            resid = b - a @ d
            dof = max(y.size - active.size + 1, 1)
            cov = cov * float(resid @ resid) / dof
        errors[active] = np.sqrt(np.clip(np.diag(cov), 0, None))
    return d, errors


def truncated_poisson_mean(lam: float, n_max: int) -> float:
    """Mean of a Poisson law restricted to ``0..n_max``."""
    n = np.arange(n_max + 1)
    if lam <= 0:
        return 0.0
    logp = n * math.log(lam) - gammaln(n + 1)
    p = np.exp(logp - logp.max())
    return float(n @ p / p.sum())


def fit_poisson_mean(populations, errors=None) -> tuple[float, float]:
    """Maximum-likelihood ``|alpha|^2`` from populations of levels ``0..n_max``.

    The populations are renormalized over the observed levels and matched to
    a Poisson law truncated to the same levels (for this exponential family
    the likelihood equation equates the two means). The standard error is
    propagated from ``errors`` by finite differences.
    """
    p = np.clip(np.asarray(populations, dtype=float), 0, None)
    n_max = p.size - 1
    if n_max < 1:
        raise ValueError("need populations of at least two levels")
    if p.sum() <= 0:
        raise ValueError("all populations are zero; Poisson fit is degenerate")

    def solve(q: np.ndarray) -> float:
        q = np.clip(q, 0, None)
        mean = float(np.arange(n_max + 1) @ q / q.sum())
        if mean <= 0:
            return 0.0
        if mean >= n_max:
            raise ValueError("populations pile up at the highest level; increase n_max")
        hi = 1.0
        while truncated_poisson_mean(hi, n_max) < mean:
            hi *= 2
        return brentq(lambda lam: truncated_poisson_mean(lam, n_max) - mean, 0.0, hi, xtol=1e-14, rtol=1e-14)

    lam = solve(p)
    if errors is None:
        return lam, 0.0
    errors = np.asarray(errors, dtype=float)
    var = 0.0
    h = 1e-6
    for i in range(p.size):
        if errors[i] == 0:
            continue
        q = p.copy()
        q[i] += h
        var += ((solve(q) - lam) / h * errors[i]) ** 2
    return lam, math.sqrt(var)


def binomial_estimate(k, shots: int) -> tuple[np.ndarray, np.ndarray]:
    """Frequency ``k / shots`` with an Agresti-style standard error.

    The error uses ``p~ = (k + 1) / (shots + 2)`` so that outcomes at 0 or 1
    still carry a finite uncertainty.
    """
    k = np.asarray(k, dtype=float)
    p_hat = k / shots
    p_tilde = (k + 1) / (shots + 2)
    return p_hat, np.sqrt(p_tilde * (1 - p_tilde) / shots)
