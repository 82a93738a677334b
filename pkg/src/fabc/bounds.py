"""Closed-form tolerance bounds and matching-probability diagnostics.

Every tolerance bound decomposes as

    epsilon_B = model discrepancy + confidence term,

where the confidence term comes from inverting an exponential tail bound
on the Kolmogorov distance between an empirical CDF and its population
CDF at matching-support level alpha.  These bounds are diagnostics and
reporting aids; the inference path takes its tolerance from simulated
quantile tables, which are far tighter in practice.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .models import normal_cdf

__all__ = [
    "ToleranceBound",
    "PmatchBound",
    "dkw_tail",
    "epsilon_upper_unconditional",
    "epsilon_upper_conditional",
    "epsilon_upper_devroye",
    "pmatch_lower_bound",
    "g_function",
]

UNCONDITIONAL = "unconditional"
CONDITIONAL = "conditional-on-x"
DEVROYE = "devroye"


@dataclass(frozen=True)
class ToleranceBound:
    """Upper bound on the matching tolerance at confidence level alpha."""

    epsilon_b: float
    discrepancy: float
    confidence: float
    regime: str
    valid: bool = True  # Devroye's bound requires n * confidence^2 >= d^2

    @property
    def reported(self) -> float:
        """Distances between CDFs never exceed 1, so the bound is capped."""
        return min(self.epsilon_b, 1.0)


@dataclass(frozen=True)
class PmatchBound:
    value: float
    vacuous: bool = False


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not (0.0 <= alpha < 1.0):
        raise ValueError("alpha must lie in [0, 1)")
    return alpha


def _check_discrepancy(disc: float) -> float:
    disc = float(disc)
    if not (0.0 <= disc <= 1.0):
        raise ValueError("discrepancy must lie in [0, 1]")
    return disc


def dkw_tail(n: int, eps: float) -> float:
    """Tail bound P[ sup|F_hat - F| > eps ] <= 2 exp(-2 n eps^2), capped at 1."""
    n = int(n)
    eps = float(eps)
    if n < 1:
        raise ValueError("n must be >= 1")
    if eps <= 0:
        raise ValueError("eps must be > 0")
    return min(1.0, 2.0 * math.exp(-2.0 * n * eps * eps))


def epsilon_upper_unconditional(n: int, alpha: float, model_discrepancy: float) -> ToleranceBound:
    """Tolerance bound when both samples are random.

    The tail of |F_x_hat - F_x*_hat| is split through the two population
    CDFs, giving the confidence term sqrt((2/n) ln(4/(1-alpha))); the
    discrepancy stands for the CDF distance between the two models (or a
    uniform surrogate like C*/sqrt(n)).
    """
    n = int(n)
    if n < 1:
        raise ValueError("n must be >= 1")
    alpha = _check_alpha(alpha)
    disc = _check_discrepancy(model_discrepancy)
    conf = math.sqrt((2.0 / n) * math.log(4.0 / (1.0 - alpha)))
    return ToleranceBound(disc + conf, disc, conf, UNCONDITIONAL)


def epsilon_upper_conditional(n: int, alpha: float, ecdf_discrepancy: float) -> ToleranceBound:
    """Tolerance bound conditionally on the observed sample.

    Only the pseudo-sample is random, so a single tail split suffices:
    confidence term sqrt((1/2n) ln(2/(1-alpha))).
    """
    n = int(n)
    if n < 1:
        raise ValueError("n must be >= 1")
    alpha = _check_alpha(alpha)
    disc = _check_discrepancy(ecdf_discrepancy)
    conf = math.sqrt(math.log(2.0 / (1.0 - alpha)) / (2.0 * n))
    return ToleranceBound(disc + conf, disc, conf, CONDITIONAL)


def epsilon_upper_devroye(n: int, alpha: float, d: int, ecdf_discrepancy: float) -> ToleranceBound:
    """Multivariate tolerance bound with fully explicit constants.

    Confidence term sqrt((1/2n) [ln(2/(1-alpha)) + 2 + d ln(2n)]).  The
    underlying tail bound only holds when n * confidence^2 >= d^2, which is
    reported through `valid`.
    """
    n = int(n)
    d = int(d)
    if n < 1 or d < 1:
        raise ValueError("n and d must be >= 1")
    alpha = _check_alpha(alpha)
    disc = _check_discrepancy(ecdf_discrepancy)
    conf = math.sqrt((math.log(2.0 / (1.0 - alpha)) + 2.0 + d * math.log(2.0 * n)) / (2.0 * n))
    valid = n * conf * conf >= d * d
    return ToleranceBound(disc + conf, disc, conf, DEVROYE, valid=valid)


def pmatch_lower_bound(n: int, eps: float, discrepancy: float, c1: float, c2: float) -> PmatchBound:
    """Lower bound 1 - c1 exp(-n c2 (eps - discrepancy)^2) on the matching probability.

    The multiplicative constants are not universal and must be supplied by
    the caller.  The bound is vacuous (zero) unless eps > discrepancy.
    """
    n = int(n)
    eps = float(eps)
    disc = float(discrepancy)
    if n < 1:
        raise ValueError("n must be >= 1")
    if eps <= 0:
        raise ValueError("eps must be > 0")
    if not (c1 > 0 and c2 > 0):
        raise ValueError("c1 and c2 must be positive")
    if eps <= disc:
        return PmatchBound(0.0, vacuous=True)
    value = 1.0 - c1 * math.exp(-n * c2 * (eps - disc) ** 2)
    return PmatchBound(min(1.0, max(0.0, value)), vacuous=False)


def g_function(theta: float, theta_star: float, eps: float, n: int) -> float:
    """P[|mean of n N(theta*,1) draws - theta| <= eps], a matching diagnostic.

    Equals Phi(sqrt(n)(eps + theta - theta*)) - Phi(sqrt(n)(-eps + theta - theta*));
    strictly decreasing in theta* above theta and increasing below it, with
    maximum 2 Phi(sqrt(n) eps) - 1 at theta* = theta.
    """
    n = int(n)
    eps = float(eps)
    if n < 1:
        raise ValueError("n must be >= 1")
    if eps <= 0:
        raise ValueError("eps must be > 0")
    root_n = math.sqrt(n)
    # G depends on theta* only through |theta - theta*|; the negative-delta
    # form subtracts two lower-tail values, avoiding 1 - 1 cancellation.
    delta = -abs(float(theta) - float(theta_star))
    return normal_cdf(root_n * (eps + delta)) - normal_cdf(root_n * (-eps + delta))
