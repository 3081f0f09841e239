"""
Complex Fourier transform of the spread payoff

    H(x) = (exp(x_1) - sum_{j>=2} exp(x_j) - 1)_+

as a ratio of gamma functions on a shifted contour.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np
import numpy.typing as npt

from levyspread.complexmath import (
    LOG_FLOAT_MAX,
    ComplexArray,
    ComplexLike,
    as_complex,
    log_gamma,
    pole_distance,
)
from levyspread.errors import AdaptednessError, DomainError, GammaOverflowError, PoleError
from levyspread.models import BasketModel, FloatArray

POLE_TOLERANCE = 1e-12
DEFAULT_OTHER_DAMPING = 0.75
STRIP_FRACTION = 0.9
CONSTRAINT_MARGIN = 1.0


@dataclass(frozen=True)
class DampingVector:
    """eps_j > 0 for j >= 2 and eps_1 < -1 - sum_{j>=2} eps_j."""

    eps: Tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "eps", tuple(float(value) for value in self.eps))
        if not self.eps:
            raise DomainError("damping vector is empty")
        if not all(math.isfinite(value) for value in self.eps):
            raise DomainError(f"damping vector must be finite, got {self.eps}")
        first, rest = self.eps[0], self.eps[1:]
        if any(value <= 0 for value in rest):
            raise DomainError(f"damping eps_j must be positive for j >= 2, got {rest}")
        if not first < -1 - sum(rest):
            raise DomainError(
                f"damping eps_1 = {first} must be below -1 - sum eps_j = {-1 - sum(rest)}"
            )

    @property
    def array(self) -> FloatArray:
        return np.array(self.eps, dtype=np.float64)

    def check_strips(self, model: BasketModel) -> None:
        """Raise AdaptednessError unless every eps_s lies inside [b_-,s, b_+,s]."""
        if len(self.eps) != model.dimension:
            raise DomainError(
                f"damping has {len(self.eps)} entries, model has {model.dimension} components"
            )
        lower, upper = model.strips
        for s, value in enumerate(self.eps):
            if not lower[s] <= value <= upper[s]:
                raise AdaptednessError(
                    f"adaptedness: damping eps_{s + 1} = {value} is outside the strip"
                    f" [{lower[s]:g}, {upper[s]:g}] of component {s}"
                )


def default_damping(model: BasketModel) -> DampingVector:
    """
    eps_j = min(0.75, 0.9 b_+,j) for j >= 2 and
    eps_1 = max(0.9 b_-,1, -2 - sum eps_j).
    """
    lower, upper = model.strips
    rest = [min(DEFAULT_OTHER_DAMPING, STRIP_FRACTION * bound) for bound in upper[1:]]
    first = max(STRIP_FRACTION * lower[0], -1 - sum(rest) - CONSTRAINT_MARGIN)
    if not first < -1 - sum(rest):
        raise AdaptednessError(
            "adaptedness: the first leg's tail steepness must exceed 1 (lambda_+ > 1"
            " for the growing factor exp(x_1)); its strip lower bound"
            f" b_-,1 = {lower[0]:g} leaves no damping eps_1 < {-1 - sum(rest):g}"
        )
    return DampingVector((first, *rest))


def contract_shift(spot: Sequence[float], strike: float) -> FloatArray:
    """d_j = ln(S_0,j / K)."""
    if not strike > 0:
        raise DomainError(f"strike must be positive, got {strike}")
    spots = np.asarray(spot, dtype=np.float64)
    if (spots <= 0).any():
        raise DomainError(f"spot prices must be positive, got {spots}")
    return np.asarray(np.log(spots / strike), dtype=np.float64)


def hurd_zhou_g(u: ComplexLike) -> ComplexArray:
    """
    g(u) = G(i sum u - 1) prod_{m>=2} G(-i u_m) / G(i u_1 + 1), vectorised
    over the leading axes of `u`. With n = 1 the product is empty.
    """
    points = as_complex(u)
    if points.ndim == 0 or points.shape[-1] == 0:
        raise DomainError("hurd_zhou_g needs argument vectors of length >= 1")
    numerators = [1j * points.sum(axis=-1) - 1] + [
        -1j * points[..., m] for m in range(1, points.shape[-1])
    ]
    denominator = 1j * points[..., 0] + 1
    for argument in [*numerators, denominator]:
        if (pole_distance(argument) < POLE_TOLERANCE).any():
            raise PoleError("payoff transform evaluated at a pole of the gamma function")

    log_value = -log_gamma(denominator)
    for argument in numerators:
        log_value = log_value + log_gamma(argument)
    overflow = log_value.real > LOG_FLOAT_MAX
    if overflow.any():
        bad = complex(log_value[overflow].flat[0])
        raise GammaOverflowError(f"payoff transform overflows, log value {bad}", log_value=bad)
    return np.asarray(np.exp(log_value), dtype=np.complex128)


def payoff_coefficient(m: npt.ArrayLike, eps: DampingVector, period: float) -> ComplexArray:
    """g(-(2 pi / P) m + i eps) for one lattice point or rows of points."""
    lattice = np.asarray(m, dtype=np.float64)
    if lattice.shape[-1:] != (len(eps.eps),):
        raise DomainError(f"lattice points must have {len(eps.eps)} coordinates")
    return hurd_zhou_g(-(2 * np.pi / period) * lattice + 1j * eps.array)


def payoff_l1_constant(eps: DampingVector) -> float:
    """L_eps: the m = 0 coefficient, i.e. the L1 norm of the damped payoff."""
    value = complex(hurd_zhou_g(1j * eps.array))
    if not (math.isfinite(value.real) and value.real > 0):
        raise DomainError(f"damped payoff norm is not a positive number: {value}")
    return value.real
