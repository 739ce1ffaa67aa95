"""Counterexample pipelines for the Gaussian-optimality question.

Three constructions are evaluated numerically:

* the skewed-interferer gap: a third-moment mismatch between the interferer
  and its Gaussian surrogate produces a strictly positive t^{3/2} gain in
  the three-entropy combination h(X1+Z2+X2) + h(X1) - 2 h(X1+Z2);
* the vertical (density) perturbation: gamma_K - eps D^3 gamma_{K-delta}
  paired with a telescoping partner series for the interferer, whose
  convolution stays Gaussian up to O(eps^{J+1});
* the Fisher-information limit functional h(X+Y) - h(X) - J(X)/2 with the
  same third-derivative direction and a budget-neutral partner.

All quadratic-in-eps coefficients are extracted by Richardson extrapolation
over {eps, eps/2, eps/4} (the perturbation series is even in eps because
every perturbing term is an odd function).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
from scipy.integrate import quad

from .gaussmix import (
    GaussDerivMixture,
    GaussMixture,
    DerivTerm,
    gauss_deriv_pdf,
    gaussian,
)
from .entropy import (
    GridDensity,
    NegativeDensityError,
    convolve_grids,
    differential_entropy,
    fisher_information,
    gaussian_entropy,
    grid_from_mixture,
    log_weighted_deriv_integral,
    mixture_entropy,
    mixture_to_grid,
)

Mixture = Union[GaussDerivMixture, GaussMixture]


class PowerViolationError(ValueError):
    """Second-moment constraint on the interferer violated."""


class NoGaussianMaxError(ValueError):
    """The Gaussian objective has no interior maximizer (L <= 1)."""


class RecipeRejectedError(ValueError):
    """Skew recipe fails its sign preconditions."""


@dataclass(frozen=True)
class ChannelParams:
    """Parameters of the scalar interference objective
    u h(X1+X2+Z1+Z2) + h(X1+Z1) - (1+u) h(X1+Z1+Z2) - Sigma1 E[X1^2]."""

    u: float
    N1: float = 0.0
    N2: float = 0.0
    Sigma1: float = 0.0
    A2: float = math.inf
    d: int = 1

    def __post_init__(self):
        if min(self.u, self.N1, self.N2, self.Sigma1) < 0:
            raise ValueError("u, N1, N2, Sigma1 must be nonnegative")
        if self.A2 < 0:
            raise ValueError("A2 must be nonnegative")
        if self.d != 1:
            raise ValueError("non-Gaussian evaluation is one-dimensional (d=1)")


def _second_moment(x: Union[GridDensity, Mixture]) -> float:
    if isinstance(x, GridDensity):
        return x.moment(2)
    return x.second_moment()


def _entropy_of(x: Union[GridDensity, Mixture], n: int, width: float) -> float:
    if isinstance(x, GridDensity):
        return differential_entropy(x)
    return mixture_entropy(x, n=n, width=width)


def _convolve_noise(x: Union[GridDensity, Mixture], variance: float):
    if variance == 0.0:
        return x
    if isinstance(x, GaussDerivMixture):
        return x.convolve(gaussian(variance))
    if isinstance(x, GaussMixture):
        return x.convolve_gaussian(variance)
    # grid route: tabulate the Gaussian kernel on the same step
    s = math.sqrt(variance)
    half = int(math.ceil(12.0 * s / x.step))
    lo = -half * x.step
    kn = 2 * half + 1
    kern = mixture_to_grid(gaussian(variance), lo, lo + (kn - 1) * x.step, kn)
    return convolve_grids(x, kern)


def _convolve_signals(a, b):
    if isinstance(a, GridDensity) or isinstance(b, GridDensity):
        if not isinstance(a, GridDensity):
            a = grid_from_mixture(a)
        if not isinstance(b, GridDensity):
            half = int(math.ceil((b.window()[1] - b.window()[0]) / (2 * a.step)))
            lo = b.window()[0]
            kn = 2 * half + 1
            b = mixture_to_grid(b, lo, lo + (kn - 1) * a.step, kn)
        return convolve_grids(a, b)
    return a.convolve(b)


def interference_objective(
    params: ChannelParams,
    x1: Union[GridDensity, Mixture],
    x2: Union[GridDensity, Mixture],
    n: int = 8192,
    width: float = 12.0,
) -> float:
    """u h(X1+X2+Z1+Z2) + h(X1+Z1) - (1+u) h(X1+Z1+Z2) - Sigma1 E[X1^2].

    Zero noise variances skip the corresponding convolution.  Raises
    PowerViolationError when E[X2^2] exceeds A2 beyond 1e-9.
    """
    p2 = _second_moment(x2)
    if p2 > params.A2 + 1e-9:
        raise PowerViolationError(f"E[X2^2] = {p2} exceeds A2 = {params.A2}")
    x1z1 = _convolve_noise(x1, params.N1)
    x1z1z2 = _convolve_noise(x1z1, params.N2)
    trip = _convolve_signals(x1z1z2, x2)
    ha = _entropy_of(trip, n, width)
    hb = _entropy_of(x1z1, n, width)
    hc = _entropy_of(x1z1z2, n, width)
    return (
        params.u * ha
        + hb
        - (1.0 + params.u) * hc
        - params.Sigma1 * _second_moment(x1)
    )


def gaussian_objective_value(params: ChannelParams, K: float, Lv: float) -> float:
    """Closed-form objective at x1 = gamma_K, x2 = gamma_Lv."""
    u, N1, N2 = params.u, params.N1, params.N2
    return (
        u * gaussian_entropy(K + N1 + N2 + Lv)
        + gaussian_entropy(K + N1)
        - (1.0 + u) * gaussian_entropy(K + N1 + N2)
        - params.Sigma1 * K
    )


# ----------------------------------------------------------------------
# Skewed-interferer construction
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class SkewRecipe:
    """Base density p and interferer law q for the skewed-interferer gap.

    Requirements (verified by quadrature in ``validate``): q centered with
    m2 > 0 and m3 < 0; the base density must have int p''' ln p > 0 so the
    t^{3/2} gain coefficient m3 * (-1/6 int p''' ln p) is positive.  The
    sign bookkeeping follows the reflected-kernel smoothing convention of
    entropy.smoothing_curve; the physical gap witness therefore uses the
    mirror image of q (see skewness_gap).
    """

    p: GaussMixture
    q: GaussMixture

    def validate(self) -> dict:
        m = self.q.moments(3)
        i3 = log_weighted_deriv_integral(self.p, 3)
        problems = []
        if abs(self.q.mass - 1.0) > 1e-9 or abs(self.p.mass - 1.0) > 1e-9:
            problems.append("p and q must have unit mass")
        if abs(m[0]) > 1e-9:
            problems.append(f"q must be centered, m1={m[0]:.3e}")
        if not m[1] > 0:
            problems.append("q needs m2 > 0")
        if not m[2] < 0:
            problems.append(f"q needs m3 < 0, got {m[2]:.6f}")
        if not i3 / 6.0 > 0:
            problems.append(f"need (1/6) int p''' ln p > 0, got {i3/6.0:.6f}")
        if problems:
            raise RecipeRejectedError("; ".join(problems))
        return {
            "m2": float(m[1]),
            "m3": float(m[2]),
            "log_deriv3_integral": float(i3),
            "gap_coefficient": float(m[2] * (-i3 / 6.0)),
        }


def default_recipe() -> SkewRecipe:
    """Two-component location mixtures with decoupled roles.

    The base p (weights 0.8/0.2 at +0.3/-1.2, component variance 0.25) has
    a large positive int p''' ln p ~ 1.41; the interferer q (weights
    0.95/0.05 at +0.15/-2.85, component variance 0.05) is strongly skewed
    (m2 = 0.4775, m3 = -1.1542) while keeping m2 small, which keeps the
    competing O(t^2) term of the gap weak.  Gain coefficient
    m3 (-1/6 int p''' ln p) ~ +0.27.
    """
    p = GaussMixture((0.8, 0.2), (0.3, -1.2), (0.25, 0.25))
    q = GaussMixture((0.95, 0.05), (0.15, -2.85), (0.05, 0.05))
    return SkewRecipe(p=p, q=q)


def skewness_gap(
    t_grid: Sequence[float],
    recipe: SkewRecipe,
    N1: float = 0.0,
    Sigma1: float = 0.0,
    gaussian_x2: bool = False,
    n: int = 8192,
) -> np.ndarray:
    """Gap of h(X1+Z2+X2) + h(X1) - 2 h(X1+Z2) - Sigma1 E[X1^2] per t.

    The base variable satisfies law(sqrt(t) X1) = p (optionally smoothed by
    an extra gamma_{t N1} when N1 > 0, which realizes the positive-noise
    variant by treating X1 + Z1 as the new X1), the interferer witness is
    the MIRROR IMAGE of the law of sqrt(t) q (or a Gaussian of matched
    variance when ``gaussian_x2``), and var(Z2) = m2(q).  Reflecting the
    interferer matches the smoothing convention under which the recipe's
    sign conditions (m3 < 0, int p''' ln p > 0) give a positive gain; the
    supremum over interferer laws makes the orientations equivalent.  All
    entropies are evaluated after the common sqrt(t) dilation, under which
    the combination is invariant.

    Returns an array of rows (t, gap).
    """
    info = recipe.validate()
    m2 = info["m2"]
    rows = []
    for t in sorted(float(t) for t in t_grid):
        if t <= 0:
            raise ValueError("t values must be positive")
        p_eff = recipe.p.convolve_gaussian(t * N1) if N1 > 0 else recipe.p
        if gaussian_x2:
            q_t = GaussMixture((1.0,), (0.0,), (t * m2,))
        else:
            q_t = recipe.q.scaled(math.sqrt(t)).reflected()
        b = p_eff
        c = p_eff.convolve_gaussian(t * m2)
        a = c.convolve(q_t)
        gap = (
            mixture_entropy(a, n=n)
            + mixture_entropy(b, n=n)
            - 2.0 * mixture_entropy(c, n=n)
        )
        if Sigma1 > 0:
            gap -= Sigma1 * p_eff.second_moment() / t
        rows.append((t, gap))
    return np.array(rows)


def gap_coefficient(rows: np.ndarray) -> float:
    """Fitted t^{3/2} coefficient of the gap (basis {t^{3/2}, t^2})."""
    t = rows[:, 0]
    g = rows[:, 1]
    basis = np.stack([t**1.5, t**2], axis=1)
    scale = np.linalg.norm(basis, axis=0)
    coef, *_ = np.linalg.lstsq(basis / scale, g, rcond=None)
    return float((coef / scale)[0])


# ----------------------------------------------------------------------
# Vertical perturbation
# ----------------------------------------------------------------------


def perturbed_source(K: float, delta: float, eps: float) -> GaussDerivMixture:
    """gamma_K - eps D^3 gamma_{K-delta}."""
    return GaussDerivMixture(
        (DerivTerm(1.0, 0, K), DerivTerm(-eps, 3, K - delta))
    )


def partner_series(
    L: float, delta: float, eps: float, J: int
) -> GaussDerivMixture:
    """sum_{j=0}^J eps^j D^{3j} gamma_{L - j delta}.

    Telescopes against the perturbed source so the convolution equals
    gamma_{K+L} - eps^{J+1} D^{3(J+1)} gamma_{K+L-(J+1) delta} exactly.
    Every j >= 1 term is of derivative order >= 3, so the second moment
    stays exactly L.
    """
    return GaussDerivMixture(
        tuple(DerivTerm(eps**j, 3 * j, L - j * delta) for j in range(J + 1))
    )


def _min_density(m: GaussDerivMixture, n: int = 4096, width: float = 12.0) -> float:
    lo, hi = m.window(width)
    return float(m.pdf(np.linspace(lo, hi, n)).min())


def select_epsilon(K: float, L: float, delta: float, J: int) -> float:
    """Largest eps in {2^-k} keeping both perturbed densities pointwise
    nonnegative on the check grid, then halved once for margin."""
    for k in range(1, 44):
        eps = 2.0**-k
        if (
            _min_density(perturbed_source(K, delta, eps)) >= 0.0
            and _min_density(partner_series(L, delta, eps, J)) >= 0.0
        ):
            return eps / 2.0
    raise NegativeDensityError("no positive eps admits nonnegative densities")


def default_delta(K: float, L: float, J: int) -> float:
    return min(K, L / J) / 10.0


@dataclass(frozen=True)
class VerticalPerturbation:
    """Validated parameter bundle for the density-perturbation pipeline."""

    K: float
    L: float
    u: float
    delta: float
    eps: float
    J: int = 2

    def __post_init__(self):
        if min(self.K, self.L, self.u) <= 0 or self.delta <= 0:
            raise ValueError("K, L, u, delta must be positive")
        if self.J < 1:
            raise ValueError("J must be >= 1")
        if not self.K - self.delta > 0:
            raise ValueError("need K - delta > 0")
        if not self.L - self.J * self.delta > 0:
            raise ValueError("need L - J*delta > 0")
        if _min_density(self.x1()) < -1e-12 or _min_density(self.x2()) < -1e-12:
            raise NegativeDensityError(
                "eps too large: perturbed density goes negative on the grid"
            )

    def x1(self, eps: Optional[float] = None) -> GaussDerivMixture:
        return perturbed_source(self.K, self.delta, self.eps if eps is None else eps)

    def x2(self, eps: Optional[float] = None) -> GaussDerivMixture:
        return partner_series(
            self.L, self.delta, self.eps if eps is None else eps, self.J
        )


def gauss_psi_value(K: float, L: float, u: float) -> float:
    """u h(gamma_{K+u+L}) + h(gamma_K) - (1+u) h(gamma_{K+u})."""
    return (
        u * gaussian_entropy(K + u + L)
        + gaussian_entropy(K)
        - (1.0 + u) * gaussian_entropy(K + u)
    )


def psi_of_mixtures(
    x1: GaussDerivMixture, x2: GaussDerivMixture, u: float, n: int = 8192
) -> float:
    """u h(X1+Z2+X2) + h(X1) - (1+u) h(X1+Z2) with Z2 ~ gamma_u, numerically."""
    x1z = x1.convolve(gaussian(u))
    trip = x1z.convolve(x2)
    return (
        u * mixture_entropy(trip, n=n)
        + mixture_entropy(x1, n=n)
        - (1.0 + u) * mixture_entropy(x1z, n=n)
    )


def richardson_even(a0: float, a1: float, a2: float) -> float:
    """Limit of an even series A(eps) = a + c eps^2 + ... from A at
    eps0, eps0/2, eps0/4."""
    r1 = (4.0 * a1 - a0) / 3.0
    r2 = (4.0 * a2 - a1) / 3.0
    return (16.0 * r2 - r1) / 15.0


@dataclass(frozen=True)
class VerticalGapResult:
    gaussian_value: float
    perturbed_value: float
    quadratic_coeff: float
    base_value: float
    stationary_K: float
    eps_used: tuple[float, float, float]


def vertical_gap(vp: VerticalPerturbation, n: int = 8192) -> VerticalGapResult:
    """Gaussian-stationary value vs perturbed objective and its eps^2 slope.

    quadratic_coeff is the Richardson-extrapolated eps^2 coefficient of
    psi(x1_eps, x2_eps) - psi(gamma_K, gamma_L); at a stationary K it is
    positive exactly when K exceeds the stability threshold.
    """
    if vp.L <= 1.0:
        raise NoGaussianMaxError("Gaussian objective unbounded-in-K only for L > 1")
    k_star = (vp.L + vp.u) / (vp.L - 1.0)
    gaussian_value = gauss_psi_value(k_star, vp.L, vp.u)
    base = gauss_psi_value(vp.K, vp.L, vp.u)
    eps_seq = (vp.eps, vp.eps / 2.0, vp.eps / 4.0)
    ratios = []
    perturbed_value = math.nan
    for i, e in enumerate(eps_seq):
        val = psi_of_mixtures(vp.x1(e), vp.x2(e), vp.u, n=n)
        if i == 0:
            perturbed_value = val
        ratios.append((val - base) / e**2)
    coeff = richardson_even(*ratios)
    return VerticalGapResult(
        gaussian_value=gaussian_value,
        perturbed_value=perturbed_value,
        quadratic_coeff=coeff,
        base_value=base,
        stationary_K=k_star,
        eps_used=eps_seq,
    )


def outer_entropy_defect(vp: VerticalPerturbation, eps: float, n: int = 8192) -> float:
    """|h(X1 * gamma_u * X2) - h(gamma_{K+u+L})| at the given eps."""
    trip = vp.x1(eps).convolve(gaussian(vp.u)).convolve(vp.x2(eps))
    return abs(mixture_entropy(trip, n=n) - gaussian_entropy(vp.K + vp.u + vp.L))


# ----------------------------------------------------------------------
# Weighted derivative-norm balance and the stability root
# ----------------------------------------------------------------------


def deriv_norm_balance(K: float, u: float, delta: float = 0.0) -> float:
    """-int (D^3 gamma_{K-delta})^2/gamma_K
    + (1+u) int (D^3 gamma_{K+u-delta})^2/gamma_{K+u}, by adaptive quadrature.

    At delta = 0 the exact value is -6/K^3 + 6(1+u)/(K+u)^3; positivity is
    the second-order gain condition of the vertical perturbation.
    """
    if K - delta <= 0:
        raise ValueError("need K - delta > 0")

    def sq_norm(base: float) -> float:
        v = base - delta

        def f(x):
            d3 = gauss_deriv_pdf(x, v, 3)
            return d3 * d3 / gauss_deriv_pdf(x, base)

        r = 14.0 * math.sqrt(base)
        val, _ = quad(f, -r, r, epsabs=1e-13, epsrel=1e-13, limit=300)
        return val

    return -sq_norm(K) + (1.0 + u) * sq_norm(K + u)


def stability_root(u: float, lo: float = 0.2, hi: float = 100.0, tol: float = 1e-8) -> float:
    """Bisection root of the derivative-norm balance at delta = 0."""
    f_lo = deriv_norm_balance(lo, u)
    f_hi = deriv_norm_balance(hi, u)
    if not (f_lo < 0 < f_hi):
        raise ValueError(f"no sign change on [{lo}, {hi}]")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if deriv_norm_balance(mid, u) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# ----------------------------------------------------------------------
# Fisher-information limit functional
# ----------------------------------------------------------------------


def entropy_fisher_functional(L: float, x: GridDensity, n: int = 16384) -> float:
    """h(X + Y) - h(X) - J(X)/2 with Y = gamma_L at full budget."""
    if L <= 0:
        raise ValueError("L must be positive")
    y = _convolve_noise(x, L)
    return differential_entropy(y) - differential_entropy(x) - 0.5 * fisher_information(x)


def fisher_limit_gaussian(K: float, L: float) -> float:
    """Closed form of the limit functional at X = gamma_K."""
    return 0.5 * math.log((K + L) / K) - 1.0 / (2.0 * K)


def fisher_stationary_variance(L: float) -> float:
    if L <= 1:
        raise NoGaussianMaxError("stationary variance L/(L-1) needs L > 1")
    return L / (L - 1.0)


@dataclass(frozen=True)
class FisherLimitGain:
    L: float
    K: float
    eps0: float
    gaussian_value: float
    gains: tuple[float, float, float]
    quadratic_coeff: float


def fisher_limit_gain(
    L: float,
    delta: Optional[float] = None,
    J: int = 2,
    eps0: Optional[float] = None,
    n: int = 16384,
) -> FisherLimitGain:
    """Gain of the third-derivative perturbation over the Gaussian
    stationary point of the limit functional.

    X is perturbed by -eps D^3 gamma_{K-delta}; Y is the partner series,
    which keeps E[Y^2] = L exactly and neutralizes h(X+Y) up to
    O(eps^{2(J+1)}).  The quadratic coefficient is positive exactly in the
    low-budget window where the stationary variance K = L/(L-1) exceeds 3.
    """
    K = fisher_stationary_variance(L)
    if delta is None:
        delta = min(K, L / J) / 20.0
    if eps0 is None:
        eps0 = select_epsilon(K, L, delta, J)
    gaussian_value = fisher_limit_gaussian(K, L)
    gains = []
    for e in (eps0, eps0 / 2.0, eps0 / 4.0):
        x = perturbed_source(K, delta, e)
        y = partner_series(L, delta, e, J)
        xy = x.convolve(y)
        xg = grid_from_mixture(x, n=n)
        val = (
            mixture_entropy(xy, n=n)
            - differential_entropy(xg)
            - 0.5 * fisher_information(xg)
        )
        gains.append(val - gaussian_value)
    coeff = richardson_even(*[g / e**2 for g, e in zip(gains, (eps0, eps0 / 2, eps0 / 4))])
    return FisherLimitGain(
        L=L,
        K=K,
        eps0=eps0,
        gaussian_value=gaussian_value,
        gains=tuple(gains),
        quadratic_coeff=coeff,
    )
