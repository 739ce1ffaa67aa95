"""Closed-form Hessian quadratic forms at the Gaussian stationary point,
the stability classifier, and the local-optimality certificate.

Perturbation directions are expanded in the Hermite system
D^alpha gamma_K / gamma_K; the Hessian of the constrained objective is
diagonal across alpha, so the quadratic form reduces to a per-order ledger
I_alpha.  The stationary point (K, L) satisfies K = (L+u)/(L-1) with
multiplier lambda = u/(K+u+L); negativity of the ledger flips exactly at
K = u/((1+u)^{1/3} - 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Union

import numpy as np
from scipy.linalg import eigh

STATIONARY_TOL = 1e-9
CRITICAL_TOL = 1e-9


class NotStationaryError(ValueError):
    """(K, L) pair is not a stationary point of the Gaussian objective."""


def stability_threshold(u: float) -> float:
    """Variance at which the Hessian at the stationary point changes sign."""
    if u <= 0:
        raise ValueError("u must be positive")
    return u / ((1.0 + u) ** (1.0 / 3.0) - 1.0)


def stability_classify(K: float, u: float) -> str:
    if K <= 0 or u <= 0:
        raise ValueError("K and u must be positive")
    thr = stability_threshold(u)
    if abs(K - thr) < CRITICAL_TOL:
        return "critical"
    return "stable" if K < thr else "unstable"


def stationary_source_variance(L: float, u: float) -> float:
    if L <= 1:
        raise ValueError("stationary variance (L+u)/(L-1) requires L > 1")
    return (L + u) / (L - 1.0)


@dataclass(frozen=True)
class HermiteCoeffVector:
    """Finitely supported coefficients over the orders of D^alpha gamma_v."""

    coeffs: dict[int, float]
    base_variance: float

    def __post_init__(self):
        if self.base_variance <= 0:
            raise ValueError("base_variance must be positive")
        clean = {int(a): float(c) for a, c in self.coeffs.items() if c != 0.0}
        if any(a < 0 for a in clean):
            raise ValueError("orders must be nonnegative")
        object.__setattr__(self, "coeffs", clean)

    def get(self, alpha: int) -> float:
        return self.coeffs.get(alpha, 0.0)

    def without_first_order(self) -> "HermiteCoeffVector":
        """Projection onto the variance-preserving subspace (alpha=1 zeroed)."""
        return HermiteCoeffVector(
            {a: c for a, c in self.coeffs.items() if a != 1}, self.base_variance
        )


@dataclass(frozen=True)
class HessianReport:
    per_alpha_terms: dict[int, float]
    total: float
    classification: str


def hessian_quadratic_form(
    K: float,
    L: float,
    u: float,
    A: HermiteCoeffVector,
    B: HermiteCoeffVector,
) -> HessianReport:
    """Per-order ledger I_alpha of the constrained Hessian at (gamma_K, gamma_L).

    Requires K = (L+u)/(L-1) within 1e-9 and B's alpha=1 coefficient zero
    (the variance-preserving subspace).  I_1 involves only A_1; for
    alpha >= 2 the source terms, the interferer term, and the cross term
    all carry the outer factor 1/(K+u+L)^{alpha+1} scaled by (alpha+1)!.
    """
    if L <= 1:
        raise NotStationaryError("no stationary point for L <= 1")
    k_star = stationary_source_variance(L, u)
    if abs(K - k_star) > STATIONARY_TOL:
        raise NotStationaryError(
            f"K={K} is not the stationary variance {k_star} for (L={L}, u={u})"
        )
    if B.get(1) != 0.0:
        raise ValueError("B's alpha=1 coefficient must be 0 on the constraint subspace")
    M = K + u + L
    terms: dict[int, float] = {}
    a1 = A.get(1)
    if a1 != 0.0:
        terms[1] = a1 * a1 * (
            -2.0 * u / M**2 - 2.0 / K**2 + 2.0 * (1.0 + u) / (K + u) ** 2
        )
    orders = sorted({a for a in (*A.coeffs, *B.coeffs) if a >= 2})
    for alpha in orders:
        aa = A.get(alpha)
        bb = B.get(alpha)
        core = (
            -u * aa * aa / M ** (alpha + 1)
            - aa * aa / K ** (alpha + 1)
            + (1.0 + u) * aa * aa / (K + u) ** (alpha + 1)
            - u * bb * bb / M ** (alpha + 1)
            - 2.0 * u * aa * bb / M ** (alpha + 1)
        )
        terms[alpha] = math.factorial(alpha + 1) * core
    total = float(sum(terms.values()))
    return HessianReport(
        per_alpha_terms=terms,
        total=total,
        classification=stability_classify(K, u),
    )


def worst_second_order_direction(K: float, L: float, u: float) -> float:
    """I_2 at the extremal pairing B_2 = -A_2 = -1 (cross terms cancel
    the outer-entropy term): 3! * (-1/K^3 + (1+u)/(K+u)^3)."""
    report = hessian_quadratic_form(
        K,
        L,
        u,
        HermiteCoeffVector({2: 1.0}, K),
        HermiteCoeffVector({2: -1.0}, L),
    )
    return report.per_alpha_terms[2]


# ----------------------------------------------------------------------
# Local-optimality certificate
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class LocalOptimalityCertificate:
    """Radius of the sup-norm neighborhood where the surrogate objective
    stays below the Gaussian maximum."""

    eps: float
    eps1: float
    eps2: float
    rayleigh_min: float
    cubic_ratio: float


def _as_diag(x: Union[float, Sequence[float], np.ndarray]) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    if arr.ndim == 2:
        if not np.allclose(arr, np.diag(np.diag(arr)), atol=1e-12):
            raise ValueError("matrix arguments must be diagonal")
        arr = np.diag(arr)
    return arr


def gaussian_maximizer(L: Union[float, Sequence[float]], u: float) -> np.ndarray:
    """Diagonal of K = (L - I)^{-1} (L + u I); needs min eigenvalue of L > 1."""
    l = _as_diag(L)
    if l.min() <= 1:
        raise NotStationaryError("the Gaussian maximizer exists only for L > I")
    return (l + u) / (l - 1.0)


def local_optimality_radius(
    K: Union[float, Sequence[float]],
    L: Union[float, Sequence[float]],
    u: float,
) -> Optional[LocalOptimalityCertificate]:
    """Certificate eps = min(eps1, eps2) for local optimality of gamma_K.

    eps2 solves (1-eps)/(1+eps) = (1+u) max_i (k_i/(k_i+u))^3, the worst
    order-3 multi-index (mass concentrated on the largest k_i, since
    k/(k+u) is increasing in k).  eps1 comes from the order-2 spectral
    problem: the minimum generalized Rayleigh quotient rho over the
    symmetric coefficient parameterization, with (1+eps)^2/(1-eps) = rho.
    Returns None when the eigenvalue hypothesis max k_i < threshold fails
    (at the threshold the certificate degenerates to eps2 = 0).
    """
    k = _as_diag(K)
    l = _as_diag(L)
    if k.shape != l.shape:
        raise ValueError("K and L must have the same dimension")
    expected = gaussian_maximizer(l, u)
    if np.max(np.abs(k - expected)) > STATIONARY_TOL:
        raise NotStationaryError(
            f"K is not the Gaussian maximizer for L: expected diag {expected}"
        )
    kmax = float(k.max())
    cubic_ratio = (1.0 + u) * (kmax / (kmax + u)) ** 3
    if cubic_ratio >= 1.0 - 1e-15:
        return None
    eps2 = (1.0 - cubic_ratio) / (1.0 + cubic_ratio)

    d = len(k)
    idx = [(i, i) for i in range(d)] + [
        (i, j) for i in range(d) for j in range(i + 1, d)
    ]
    m = 1.0 / (k + l)
    num = np.zeros(len(idx))
    den = np.zeros(len(idx))
    for r, (i, j) in enumerate(idx):
        if i == j:
            num[r] = 2.0 / k[i] ** 2 + 2.0 * m[i] ** 2
            den[r] = 2.0 * (1.0 + u) / (k[i] + u) ** 2
        else:
            num[r] = 1.0 / (k[i] * k[j]) + m[i] * m[j]
            den[r] = (1.0 + u) / ((k[i] + u) * (k[j] + u))
    # minimum generalized Rayleigh quotient of (num, den) over the
    # coefficient space; both forms are diagonal here but we solve the
    # eigenproblem to keep the d>1 contract explicit
    vals = eigh(np.diag(num), np.diag(den), eigvals_only=True)
    rho = float(vals.min())
    if rho <= 1.0 + 1e-10:
        return None
    disc = (2.0 + rho) ** 2 - 4.0 * (1.0 - rho)
    eps1 = 0.5 * (-(2.0 + rho) + math.sqrt(disc))
    return LocalOptimalityCertificate(
        eps=min(eps1, eps2),
        eps1=eps1,
        eps2=eps2,
        rayleigh_min=rho,
        cubic_ratio=cubic_ratio,
    )


# ----------------------------------------------------------------------
# Phase diagram
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class PhaseCell:
    u: float
    L: float
    K: float
    classification: str


def phase_diagram(
    u_grid: Iterable[float], L_grid: Iterable[float]
) -> list[PhaseCell]:
    """Stationary variance and classification per (u, L) cell; L > 1 required."""
    us = [float(x) for x in u_grid]
    ls = [float(x) for x in L_grid]
    if not us or not ls:
        raise ValueError("grids must be nonempty")
    if min(ls) <= 1:
        raise ValueError("phase diagram requires L > 1")
    cells = []
    for u in sorted(us):
        for L in sorted(ls):
            K = stationary_source_variance(L, u)
            cells.append(PhaseCell(u=u, L=L, K=K, classification=stability_classify(K, u)))
    return cells
