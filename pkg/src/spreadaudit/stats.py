"""Beta-binomial inference over a workbook's cell error rate.

The error rate theta carries a beta prior; pass/fail test results are
binomial; the posterior is the conjugate beta(alpha + x, beta + (n - x)).
On top of that sit the reliability curve (posterior CDF at an acceptable
error rate), posterior quantile bands, and the beta-binomial predictive
distribution of how many of the untested units are defective.

``BetaParams`` keeps its parameters as exact rationals internally, so
conjugate updating is pure pseudo-count bookkeeping: updating block by
block and updating once with the batch totals produce identical values
bit for bit. Floats are derived on read for the numeric routines.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.special import gammaln

from .special import betainc_inv, betainc_reg, log_beta, log_beta_pdf, log_choose

__all__ = [
    "BetaParams",
    "TestRecord",
    "PredictiveSpec",
    "InfeasiblePriorError",
    "beta_mean",
    "beta_variance",
    "beta_mode",
    "beta_pdf",
    "beta_log_pdf",
    "elicit_prior",
    "elicit_prior_from_sd",
    "elicit_prior_pseudocounts",
    "binomial_pmf",
    "binomial_log_pmf",
    "posterior_update",
    "reliability",
    "beta_quantile",
    "beta_binomial_pmf",
    "beta_binomial_log_pmf",
    "beta_binomial_pmf_all",
    "beta_binomial_argmax",
    "beta_binomial_interval",
]

Number = int | float | Fraction


class InfeasiblePriorError(ValueError):
    """No beta distribution has the requested moments."""


def _as_fraction(value: Number, name: str) -> Fraction:
    try:
        f = Fraction(value)
    except (ValueError, OverflowError, TypeError) as exc:
        raise ValueError(f"{name} must be a finite number, got {value!r}") from exc
    return f


class BetaParams:
    """Parameters of the beta distribution over the cell error rate.

    ``alpha`` is the pseudo-count of error cells, ``beta`` the pseudo-count
    of correct cells. Both must be positive. Values are stored exactly
    (as rationals) and rounded to float only when read, which is what
    makes sequential and batch updates agree exactly.
    """

    __slots__ = ("_alpha", "_beta")

    def __init__(self, alpha: Number, beta: Number) -> None:
        a = _as_fraction(alpha, "alpha")
        b = _as_fraction(beta, "beta")
        if a <= 0 or b <= 0:
            raise ValueError(f"alpha and beta must be positive, got ({alpha!r}, {beta!r})")
        self._alpha = a
        self._beta = b

    @property
    def alpha(self) -> float:
        return float(self._alpha)

    @property
    def beta(self) -> float:
        return float(self._beta)

    @property
    def alpha_exact(self) -> Fraction:
        return self._alpha

    @property
    def beta_exact(self) -> Fraction:
        return self._beta

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BetaParams):
            return NotImplemented
        return self._alpha == other._alpha and self._beta == other._beta

    def __hash__(self) -> int:
        return hash((self._alpha, self._beta))

    def __repr__(self) -> str:
        return f"BetaParams(alpha={self.alpha!r}, beta={self.beta!r})"


@dataclass(frozen=True)
class TestRecord:
    """Cumulative test evidence: x defective units out of n checked."""

    n: int
    x: int

    def __post_init__(self) -> None:
        if self.n < 0:
            raise ValueError(f"n must be non-negative, got {self.n}")
        if not 0 <= self.x <= self.n:
            raise ValueError(f"x must satisfy 0 <= x <= n, got x={self.x}, n={self.n}")

    def __add__(self, other: "TestRecord") -> "TestRecord":
        return TestRecord(self.n + other.n, self.x + other.x)


@dataclass(frozen=True)
class PredictiveSpec:
    """Predictive setting: N untested units under a beta posterior."""

    remaining: int
    posterior: BetaParams

    def __post_init__(self) -> None:
        if self.remaining < 0:
            raise ValueError(f"remaining must be non-negative, got {self.remaining}")


def beta_mean(p: BetaParams) -> float:
    """Mean alpha / (alpha + beta)."""
    return float(p.alpha_exact / (p.alpha_exact + p.beta_exact))


def beta_variance(p: BetaParams) -> float:
    """Variance alpha*beta / ((alpha+beta)^2 (alpha+beta+1))."""
    a, b = p.alpha_exact, p.beta_exact
    return float(a * b / ((a + b) ** 2 * (a + b + 1)))


def beta_mode(p: BetaParams) -> float:
    """Most likely error rate.

    Interior mode (alpha-1)/(alpha+beta-2) when alpha > 1 and beta > 1;
    otherwise the boundary maximizer. Conventions for the degenerate
    cases: the flat (1, 1) density returns 0.5, and a U-shaped density
    (both parameters below 1) returns the boundary holding more mass.
    """
    a, b = p.alpha_exact, p.beta_exact
    if a > 1 and b > 1:
        return float((a - 1) / (a + b - 2))
    if a == 1 and b == 1:
        return 0.5
    if a <= 1 and b <= 1:  # U-shaped: both endpoints are modes
        return 0.0 if a <= b else 1.0
    return 0.0 if a <= 1 else 1.0


def beta_log_pdf(p: BetaParams, theta: float) -> float:
    return log_beta_pdf(p.alpha, p.beta, theta)


def beta_pdf(p: BetaParams, theta: float) -> float:
    """Density of the distribution at theta."""
    return math.exp(beta_log_pdf(p, theta))


def elicit_prior(mean: Number, variance: Number) -> BetaParams:
    """Solve (mean, variance) for beta parameters.

    With nu = mean*(1-mean)/variance - 1, the parameters are
    alpha = mean*nu and beta = (1-mean)*nu. Computed in exact rational
    arithmetic so the textbook pairs come out exact: a mean of 0.2 with
    variance 16/1100 yields exactly (2, 8).

    Raises InfeasiblePriorError when variance >= mean*(1-mean), where no
    beta distribution exists.
    """
    m = _as_fraction(mean, "mean")
    v = _as_fraction(variance, "variance")
    if not 0 < m < 1:
        raise ValueError(f"mean must lie in (0, 1), got {mean!r}")
    if v <= 0:
        raise ValueError(f"variance must be positive, got {variance!r}")
    bound = m * (1 - m)
    if v >= bound:
        raise InfeasiblePriorError(
            f"variance {variance!r} is not below mean*(1-mean) = {float(bound)!r}; "
            f"no beta distribution has these moments"
        )
    nu = bound / v - 1
    return BetaParams(m * nu, (1 - m) * nu)


def elicit_prior_from_sd(mean: Number, sd: Number) -> BetaParams:
    """Convenience wrapper taking a standard deviation instead of a variance."""
    s = _as_fraction(sd, "sd")
    if s <= 0:
        raise ValueError(f"standard deviation must be positive, got {sd!r}")
    return elicit_prior(mean, s * s)


def elicit_prior_pseudocounts(errors_seen: Number, cells_seen: Number) -> BetaParams:
    """Prior from equivalent experience: errors seen among cells seen.

    Returns (errors_seen, cells_seen - errors_seen). Degenerate edges are
    floored Jeffreys-style at one half pseudo-count per side (zero errors
    among 10 cells becomes (0.5, 9.5)), keeping the total evidence weight
    equal to cells_seen.
    """
    e = _as_fraction(errors_seen, "errors_seen")
    c = _as_fraction(cells_seen, "cells_seen")
    if c <= 0:
        raise ValueError(f"cells_seen must be positive, got {cells_seen!r}")
    if e < 0:
        raise ValueError(f"errors_seen must be non-negative, got {errors_seen!r}")
    if e > c:
        raise ValueError(
            f"errors_seen ({errors_seen!r}) cannot exceed cells_seen ({cells_seen!r})"
        )
    half = min(Fraction(1, 2), c / 2)
    e = min(max(e, half), c - half)
    return BetaParams(e, c - e)


def binomial_log_pmf(n: int, x: int, theta: float) -> float:
    """Log of b(x; n, theta); -inf for x outside 0..n (pmf 0 by convention)."""
    if n < 0:
        raise ValueError(f"n must be non-negative, got {n}")
    if not 0.0 <= theta <= 1.0:
        raise ValueError(f"theta must lie in [0, 1], got {theta!r}")
    if x < 0 or x > n:
        return -math.inf
    if theta == 0.0:
        return 0.0 if x == 0 else -math.inf
    if theta == 1.0:
        return 0.0 if x == n else -math.inf
    return log_choose(n, x) + x * math.log(theta) + (n - x) * math.log1p(-theta)


def binomial_pmf(n: int, x: int, theta: float) -> float:
    """Probability of x defects in n independent checks at error rate theta."""
    return math.exp(binomial_log_pmf(n, x, theta))


def posterior_update(prior: BetaParams, data: TestRecord) -> BetaParams:
    """Conjugate update: beta(alpha + x, beta + (n - x)).

    Exact in the pseudo-counts, hence associative: updating with
    (n1, x1) then (n2, x2) equals one update with (n1+n2, x1+x2).
    """
    return BetaParams(prior.alpha_exact + data.x, prior.beta_exact + (data.n - data.x))


def reliability(p: BetaParams, acceptable_cer: float) -> float:
    """Probability that the error rate is at or below acceptable_cer.

    This is the posterior CDF at acceptable_cer, i.e. the regularized
    incomplete beta function I_acceptable(alpha, beta).
    """
    return betainc_reg(p.alpha, p.beta, acceptable_cer)


def beta_quantile(p: BetaParams, prob: float) -> float:
    """The error rate theta* with reliability(p, theta*) = prob."""
    return betainc_inv(p.alpha, p.beta, prob)


def beta_binomial_log_pmf(spec: PredictiveSpec, k: int) -> float:
    """Log P(k of the remaining N units are defective); -inf out of range."""
    n = spec.remaining
    if k < 0 or k > n:
        return -math.inf
    a, b = spec.posterior.alpha, spec.posterior.beta
    return log_choose(n, k) + log_beta(k + a, n - k + b) - log_beta(a, b)


def beta_binomial_pmf(spec: PredictiveSpec, k: int) -> float:
    return math.exp(beta_binomial_log_pmf(spec, k))


def beta_binomial_pmf_all(spec: PredictiveSpec) -> np.ndarray:
    """Full pmf over k = 0..N, vectorized. Sums to 1 within 1e-9 up to N=1e6."""
    n = spec.remaining
    a, b = spec.posterior.alpha, spec.posterior.beta
    k = np.arange(n + 1, dtype=np.float64)
    log_choose_all = gammaln(n + 1.0) - gammaln(k + 1.0) - gammaln(n - k + 1.0)
    log_beta_post = gammaln(k + a) + gammaln(n - k + b) - gammaln(n + a + b)
    log_beta_prior = log_beta(a, b)
    return np.exp(log_choose_all + log_beta_post - log_beta_prior)


def beta_binomial_argmax(spec: PredictiveSpec) -> int:
    """Most likely defect count among the remaining units (exhaustive scan)."""
    return int(np.argmax(beta_binomial_pmf_all(spec)))


def beta_binomial_interval(spec: PredictiveSpec, mass: float) -> tuple[int, int]:
    """Smallest central interval (k_lo, k_hi) holding at least ``mass``.

    Central means equal-tailed: each open tail is capped at (1 - mass)/2,
    with endpoints found by an exhaustive scan of the cumulative pmf.
    """
    if not 0.0 < mass <= 1.0:
        raise ValueError(f"mass must lie in (0, 1], got {mass!r}")
    cum = np.cumsum(beta_binomial_pmf_all(spec))
    tail = (1.0 - mass) / 2.0
    k_lo = int(np.searchsorted(cum, tail, side="left"))
    k_hi = int(np.searchsorted(cum, 1.0 - tail, side="left"))
    return min(k_lo, spec.remaining), min(k_hi, spec.remaining)
