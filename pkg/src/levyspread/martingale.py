"""Equivalent martingale measure: drift adjustment and the Esscher parameter."""
from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import optimize

from levyspread.complexmath import ComplexArray
from levyspread.errors import DomainError, InfeasibleModelError, NoSolutionError
from levyspread.models import (
    BasketModel,
    LevyExponentSpec,
    characteristic_function,
    exponent,
    multivariate_exponent,
)

logger = logging.getLogger(__name__)

EMM_TOLERANCE = 1e-10
SCAN_STEPS = 64
BISECTION_XTOL = 1e-12


def _leg_rates(n: int, r: float, rates: Optional[Sequence[float]]) -> Tuple[float, ...]:
    if rates is None:
        return (float(r),) * n
    if len(rates) != n:
        raise DomainError(f"expected {n} leg rates, got {len(rates)}")
    return tuple(float(rate) for rate in rates)


def _unit_point(n: int, s: int) -> ComplexArray:
    """The argument -i e_s."""
    point = np.zeros(n, dtype=np.complex128)
    point[s] = -1j
    return point


def emm_drift_adjust(
    model: BasketModel, r: float, rates: Optional[Sequence[float]] = None
) -> BasketModel:
    """
    Re-set every diagonal drift so that psi(-i e_s) = -r_s.

    psi(-i e_s) depends on mu_s through the term -mu_s only, so
    mu_s = r_s + psi(-i e_s) evaluated with mu_s = 0.
    """
    n = model.dimension
    leg_rates = _leg_rates(n, r, rates)
    adjusted = []
    for s, spec in enumerate(model.diag):
        driftless = list(model.diag)
        driftless[s] = spec.with_mu(0.0)
        try:
            psi = multivariate_exponent(_unit_point(n, s), model.with_diag(driftless))
        except DomainError as exc:
            raise InfeasibleModelError(
                f"component {s}: -i e_{s} is outside the analyticity domain ({exc})",
                component=s,
            ) from exc
        mu = leg_rates[s] + float(psi.real)
        logger.debug("component %d: drift %r -> %r", s, spec.mu, mu)
        adjusted.append(spec.with_mu(mu))
    return dataclasses.replace(model, diag=tuple(adjusted), emm_rates=leg_rates)


def emm_deviation(
    model: BasketModel, r: float, maturity: float, rates: Optional[Sequence[float]] = None
) -> float:
    """max_s |Phi(-i e_s, T) - exp(r_s T)| / exp(r_s T)."""
    n = model.dimension
    leg_rates = _leg_rates(n, r, rates)
    worst = 0.0
    for s in range(n):
        try:
            phi = complex(characteristic_function(_unit_point(n, s), maturity, model))
        except DomainError as exc:
            raise InfeasibleModelError(
                f"component {s}: -i e_{s} is outside the analyticity domain ({exc})",
                component=s,
            ) from exc
        growth = math.exp(leg_rates[s] * maturity)
        worst = max(worst, abs(phi - growth) / growth)
    return worst


@dataclass(frozen=True)
class EsscherSolution:
    theta: float
    residual: float


def esscher_condition(theta: float, spec: LevyExponentSpec, r: float) -> float:
    """r + psi(-i(theta + 1)) - psi(-i theta)."""
    upper = complex(exponent(-1j * (theta + 1), spec))
    lower = complex(exponent(-1j * theta, spec))
    return r + (upper - lower).real


def esscher_theta(spec: LevyExponentSpec, r: float) -> EsscherSolution:
    """
    Solve the Esscher condition for theta by a geometric bracket scan around
    the feasible interval's centre followed by bisection.
    """
    strip_lower, strip_upper = spec.strip
    low, high = -strip_upper, -strip_lower - 1
    if not low < high:
        raise NoSolutionError(
            f"no theta keeps both -i theta and -i(theta + 1) inside [{strip_lower:g}, {strip_upper:g}]"
        )

    def condition(theta: float) -> float:
        return esscher_condition(theta, spec, r)

    centre = min(max(0.0, low), high)
    if math.isfinite(low) and math.isfinite(high):
        step = (high - low) * 2.0**-40
    else:
        step = 1e-6
    value = condition(centre)
    scanned: List[Tuple[float, float]] = [(centre, value)]
    if value == 0:
        return EsscherSolution(centre, 0.0)

    bracket: Optional[Tuple[float, ...]] = None
    previous = {+1: centre, -1: centre}
    for k in range(SCAN_STEPS):
        for direction in (+1, -1):
            theta = min(max(centre + direction * step * 2.0**k, low), high)
            if theta == previous[direction]:
                continue
            theta_value = condition(theta)
            scanned.append((theta, theta_value))
            if math.copysign(1.0, theta_value) != math.copysign(1.0, value):
                bracket = tuple(sorted((previous[direction], theta)))
                break
            previous[direction] = theta
        if bracket is not None:
            break
    if bracket is None:
        raise NoSolutionError(
            f"Esscher condition has no sign change on [{low:g}, {high:g}]", scanned
        )

    theta = float(optimize.bisect(condition, bracket[0], bracket[1], xtol=BISECTION_XTOL, maxiter=400))
    residual = condition(theta)
    logger.debug("Esscher theta %r, residual %r after %d scan points", theta, residual, len(scanned))
    return EsscherSolution(theta, residual)
